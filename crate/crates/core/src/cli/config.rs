//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mdp::{Kappa, RviOptions};
use crate::model::{choose_cbs_base, choose_xstar, CostParams, GbsParams, SystemParams, TargetRounding};
use crate::rngdist::LeadTimeSpec;
use crate::sim::{SimConfig, DEFAULT_HORIZON, DEFAULT_REPLICATIONS, DEFAULT_WARMUP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSection,
    #[serde(default)]
    pub cost: CostSection,
    #[serde(default)]
    pub policy: PolicySection,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub mdp: MdpSection,
}

/// Exactly one of `r` and `mean_demand` (`r / beta`) must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub mean_demand: Option<f64>,
    pub leadtime: LeadTimeSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    pub h: f64,
    pub theta: f64,
}

impl Default for CostSection {
    fn default() -> Self {
        Self { h: 1.0, theta: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Cbs,
    #[default]
    Gbs,
    /// GBS parameters driving the artificial process.
    Artificial,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Cbs => "cbs",
            Self::Gbs => "gbs",
            Self::Artificial => "artificial",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoKeyword {
    Auto,
}

/// `x_star` as a number or the string `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum XStarSetting {
    Value(f64),
    Keyword(AutoKeyword),
}

impl Default for XStarSetting {
    fn default() -> Self {
        Self::Keyword(AutoKeyword::Auto)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    #[serde(default)]
    pub kind: PolicyKind,
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Upper truncation offset; absent means no truncation.
    #[serde(default)]
    pub f: Option<f64>,
    #[serde(default)]
    pub x_star: XStarSetting,
    /// CBS base-stock level; absent means the newsvendor choice.
    #[serde(default)]
    pub base: Option<i64>,
    #[serde(default)]
    pub rounding: TargetRounding,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub horizon: f64,
    pub warmup: f64,
    pub replications: usize,
    pub seed: u64,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            warmup: DEFAULT_WARMUP,
            replications: DEFAULT_REPLICATIONS,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpSection {
    /// Common truncation multiplier for `I_M`, `I_m` and the backlog floor.
    pub kappa: f64,
    /// Double kappa until the gain moves by at most `stable_tol`.
    pub refine: bool,
    pub stable_tol: f64,
    pub max_doublings: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MdpSection {
    fn default() -> Self {
        let rvi = RviOptions::default();
        Self {
            kappa: 5.0,
            refine: true,
            stable_tol: 0.005,
            max_doublings: 3,
            tol: rvi.tol,
            max_iter: rvi.max_iter,
        }
    }
}

impl MdpSection {
    pub fn kappa(&self) -> Kappa {
        Kappa::uniform(self.kappa)
    }

    pub fn rvi(&self) -> RviOptions {
        RviOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks every section by building the run parameters once.
    pub fn validate(&self) -> Result<()> {
        self.sim_config().map(|_| ())
    }

    pub fn system_params(&self) -> Result<SystemParams> {
        let lt = self.system.leadtime;
        match (self.system.r, self.system.mean_demand) {
            (Some(r), None) => SystemParams::new(r, lt),
            (None, Some(m)) => SystemParams::from_mean_demand(m, lt),
            _ => Err(invalid("system needs exactly one of `r` and `mean_demand`")),
        }
    }

    pub fn cost_params(&self) -> Result<CostParams> {
        CostParams::new(self.cost.h, self.cost.theta)
    }

    pub fn policy_params(&self) -> Result<GbsParams> {
        let sys = self.system_params()?;
        let cost = self.cost_params()?;
        resolve_policy(&self.policy, &sys, &cost)
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let sys = self.system_params()?;
        let cost = self.cost_params()?;
        let policy = resolve_policy(&self.policy, &sys, &cost)?;
        let p = &self.protocol;
        let cfg = SimConfig::new(sys, cost, policy)
            .with_protocol(p.horizon, p.warmup, p.replications)
            .with_seed(p.seed);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Turns a policy section into concrete parameters.
pub fn resolve_policy(p: &PolicySection, sys: &SystemParams, cost: &CostParams) -> Result<GbsParams> {
    let params = match p.kind {
        PolicyKind::Cbs => {
            if p.gamma.is_some_and(|g| g != 1.0) {
                return Err(invalid("cbs policy has gamma = 1; drop `gamma` or use gbs"));
            }
            GbsParams::cbs(p.base.unwrap_or_else(|| choose_cbs_base(cost, sys)), sys)
        }
        PolicyKind::Gbs | PolicyKind::Artificial => {
            if p.base.is_some() {
                return Err(invalid("`base` applies only to the cbs policy"));
            }
            let gamma = p
                .gamma
                .ok_or_else(|| invalid(format!("{} policy needs `gamma`", p.kind.name())))?;
            let x_star = match p.x_star {
                XStarSetting::Value(x) => x,
                XStarSetting::Keyword(AutoKeyword::Auto) => choose_xstar(cost, sys, gamma)?,
            };
            GbsParams::new(gamma, p.f, x_star, sys)?
        }
    };
    Ok(params.with_rounding(p.rounding))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "system": {"mean_demand": 20, "leadtime": {"kind": "exponential", "mean": 2}},
        "policy": {"kind": "gbs", "gamma": 2.4}
    }"#;

    #[test]
    fn minimal_config_defaults() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.protocol, ProtocolSection::default());
        let sim = cfg.sim_config().unwrap();
        assert_eq!(sim.sys.r(), 10.0);
        assert_eq!(sim.policy.x_star(), 0.0);
        assert_eq!(sim.policy.rounding(), TargetRounding::Ceil);
    }

    #[test]
    fn x_star_number_or_auto() {
        let text = MINIMAL.replace(r#""gamma": 2.4"#, r#""gamma": 2.0, "x_star": -1.5"#);
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(cfg.policy_params().unwrap().base(), 17.0);
        let text = MINIMAL.replace(r#""gamma": 2.4"#, r#""gamma": 2.0, "x_star": "auto""#);
        assert!(ExperimentConfig::from_json(&text).is_ok());
        let text = MINIMAL.replace(r#""gamma": 2.4"#, r#""gamma": 2.0, "x_star": "best""#);
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn cbs_base_from_newsvendor() {
        let text = r#"{
            "system": {"r": 10, "leadtime": {"kind": "exponential", "mean": 2}},
            "cost": {"h": 9, "theta": 1},
            "policy": {"kind": "cbs"}
        }"#;
        let p = ExperimentConfig::from_json(text).unwrap().policy_params().unwrap();
        assert_eq!((p.gamma(), p.base()), (1.0, 14.0));
    }

    #[test]
    fn schema_errors() {
        for bad in [
            r#"{"system": {"leadtime": {"kind": "exponential", "mean": 2}}}"#,
            r#"{"system": {"r": 1, "mean_demand": 2, "leadtime": {"kind": "exponential", "mean": 2}}}"#,
            r#"{"system": {"r": 1, "leadtime": {"kind": "weibull", "mean": 2}}, "policy": {"gamma": 2}}"#,
            r#"{"system": {"r": 1, "leadtime": {"kind": "exponential", "mean": 2}}, "policy": {"kind": "gbs"}}"#,
            r#"{"system": {"r": 1, "leadtime": {"kind": "exponential", "mean": 2}}, "policy": {"gamma": 2}, "extra": 1}"#,
            r#"{"system": {"r": 1, "leadtime": {"kind": "exponential", "mean": 2}}, "policy": {"gamma": 2},
                "protocol": {"horizon": 100, "warmup": 200, "replications": 3, "seed": 1}}"#,
        ] {
            assert!(ExperimentConfig::from_json(bad).is_err(), "{bad}");
        }
    }
}

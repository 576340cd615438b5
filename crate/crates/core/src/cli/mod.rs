//! Command-line front end.
//!
//! Every command takes either `--config FILE` (see [`ExperimentConfig`]) or
//! `--preset NAME [--row KEY]`, applies the flag overrides, and writes CSV
//! or JSON to `--out` (standard output by default). Exit codes: 0 on
//! success, 2 for configuration errors, 3 for runtime faults.

pub mod config;
pub mod presets;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{artificial_stationary, gamma_search, loglog_fit, GammaPoint, LogLogFit};
use crate::error::{invalid, Error, Result};
use crate::mdp::{export_lp, extract_target, solve_auto, solve_inventory, LpStats, MdpSpec};
use crate::model::{GbsParams, TargetRounding};
use crate::sim::{run_experiment, simulate_artificial, SimConfig, SimResult};

pub use config::{ExperimentConfig, Format, PolicyKind};
use config::{AutoKeyword, PolicySection, ProtocolSection, SystemSection, XStarSetting};
use presets::{Reference, PRESET_ROUNDING};

#[derive(Debug, Parser)]
#[command(name = "leadsim", version, about = "Base-stock inventory control under random lead times")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON experiment configuration.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Named parameter grid: table1 ... table6.
    #[arg(long)]
    pub preset: Option<String>,
    /// Row of the preset: mean lead-time demand, or `h:theta` for table3.
    #[arg(long, requires = "preset")]
    pub row: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of replications.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub warmup: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Rounding of the in-transit target.
    #[arg(long, value_enum)]
    pub rounding: Option<RoundingArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoundingArg {
    Ceil,
    Floor,
}

impl From<RoundingArg> for TargetRounding {
    fn from(r: RoundingArg) -> Self {
        match r {
            RoundingArg::Ceil => TargetRounding::Ceil,
            RoundingArg::Floor => TargetRounding::Floor,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a policy; presets run CBS and GBS side by side.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        policy: Option<PolicyKind>,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Cost curve over a gamma grid with common random numbers.
    SweepGamma {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        lo: f64,
        #[arg(long, default_value_t = 5.0)]
        hi: f64,
        #[arg(long, default_value_t = 0.2)]
        step: f64,
    },
    /// Solve the truncated MDP for the minimum average cost.
    Mdp {
        #[command(flatten)]
        common: Common,
        /// Write the average-cost LP to this file.
        #[arg(long)]
        export_lp: Option<PathBuf>,
        /// Truncation multiplier.
        #[arg(long)]
        kappa: Option<f64>,
        /// Solve once at the given kappa without refinement.
        #[arg(long)]
        no_refine: bool,
        /// Also simulate CBS and GBS and report optimality gaps.
        #[arg(long)]
        simulate: bool,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Cost against mean lead-time demand with log-log fits.
    Scaling {
        #[command(flatten)]
        common: Common,
        /// Mean lead-time demands `r / beta`, comma separated.
        #[arg(long, value_delimiter = ',')]
        points: Option<Vec<f64>>,
        /// GBS gamma for each point, comma separated.
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<f64>>,
        /// Pick gamma per point by a grid search from 1 in steps of 0.2.
        #[arg(long, conflicts_with = "gammas")]
        sweep: bool,
        /// Upper end of the per-point gamma search.
        #[arg(long, default_value_t = 10.0)]
        sweep_hi: f64,
    },
    /// Artificial process: simulated against exact stationary law.
    Artificial {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        gamma: Option<f64>,
    },
}

/// A failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) | Error::Domain(_) | Error::Unsupported(_) => 2,
            Error::Fault(_) | Error::NoConvergence { .. } | Error::Io(_) => 3,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self {
            code: 3,
            message: format!("writing csv: {e}"),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self {
            code: 3,
            message: format!("writing json: {e}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Error::Io(e).into()
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// One experiment setting with an optional reference from a preset.
#[derive(Debug, Clone)]
struct Scenario {
    label: String,
    cfg: ExperimentConfig,
    reference: Option<Reference>,
}

impl Scenario {
    fn sim(&self) -> Result<SimConfig> {
        self.cfg.sim_config()
    }

    fn with_policy(&self, kind: PolicyKind) -> Scenario {
        let mut s = self.clone();
        s.cfg.policy.kind = kind;
        if kind == PolicyKind::Cbs {
            s.cfg.policy.gamma = None;
            s.cfg.policy.x_star = XStarSetting::default();
        }
        s
    }
}

fn preset_config(case: &presets::PresetCase) -> ExperimentConfig {
    ExperimentConfig {
        system: SystemSection {
            r: None,
            mean_demand: Some(case.mean_demand),
            leadtime: case.leadtime,
        },
        cost: config::CostSection {
            h: case.cost.h,
            theta: case.cost.theta,
        },
        policy: PolicySection {
            kind: PolicyKind::Gbs,
            gamma: Some(case.gamma),
            f: None,
            x_star: XStarSetting::Keyword(AutoKeyword::Auto),
            base: None,
            rounding: PRESET_ROUNDING,
        },
        protocol: ProtocolSection::default(),
        output: Default::default(),
        mdp: Default::default(),
    }
}

/// Loads scenarios and applies the shared overrides.
fn scenarios(common: &Common) -> Result<Vec<Scenario>> {
    let mut out = match (&common.config, &common.preset) {
        (Some(path), None) => vec![Scenario {
            label: path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "config".into()),
            cfg: ExperimentConfig::load(path)?,
            reference: None,
        }],
        (None, Some(name)) => presets::select(name, common.row.as_deref())?
            .iter()
            .map(|c| Scenario {
                label: c.label.clone(),
                cfg: preset_config(c),
                reference: Some(c.reference),
            })
            .collect(),
        _ => return Err(invalid("give exactly one of --config and --preset")),
    };
    for s in &mut out {
        let p = &mut s.cfg.protocol;
        if let Some(seed) = common.seed {
            p.seed = seed;
        }
        if let Some(reps) = common.reps {
            p.replications = reps;
        }
        if let Some(h) = common.horizon {
            p.horizon = h;
        }
        if let Some(w) = common.warmup {
            p.warmup = w;
        }
        if let Some(r) = common.rounding {
            s.cfg.policy.rounding = r.into();
        }
    }
    Ok(out)
}

fn override_gamma(list: &mut [Scenario], gamma: Option<f64>) {
    if let Some(g) = gamma {
        for s in list {
            s.cfg.policy.gamma = Some(g);
        }
    }
}

fn output_target(common: &Common, list: &[Scenario], default: Format) -> (Option<PathBuf>, Format) {
    let from_cfg = list.first().map(|s| s.cfg.output.clone()).unwrap_or_default();
    (
        common.out.clone().or(from_cfg.path),
        common.format.or(from_cfg.format).unwrap_or(default),
    )
}

fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError {
            code: 3,
            message: format!("cannot create {}: {e}", p.display()),
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    let mut w = open_output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_csv<T: Serialize>(path: Option<&Path>, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(open_output(path)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate { common, policy, gamma } => cmd_simulate(&common, policy, gamma),
        Command::SweepGamma { common, lo, hi, step } => cmd_sweep_gamma(&common, lo, hi, step),
        Command::Mdp {
            common,
            export_lp,
            kappa,
            no_refine,
            simulate,
            gamma,
        } => cmd_mdp(&common, export_lp.as_deref(), kappa, no_refine, simulate, gamma),
        Command::Scaling {
            common,
            points,
            gammas,
            sweep,
            sweep_hi,
        } => cmd_scaling(&common, points, gammas, sweep, sweep_hi),
        Command::Artificial { common, gamma } => cmd_artificial(&common, gamma),
    }
}

// simulate

/// CSV row for `simulate`: one per replication, then one aggregate row
/// (`replication = all`) per run carrying standard errors.
#[derive(Debug, Serialize)]
pub struct RunRow {
    pub label: String,
    pub policy: &'static str,
    pub mean_demand: f64,
    pub gamma: f64,
    pub x_star: f64,
    pub base: f64,
    pub replication: String,
    pub replications: usize,
    pub avg_cost: f64,
    pub se_cost: Option<f64>,
    pub mean_pos: f64,
    pub mean_neg: f64,
    pub mean_y: f64,
    pub mean_z: f64,
    pub mean_gap: f64,
    pub max_gap: i64,
    pub events: u64,
    pub reference_cost: Option<f64>,
}

#[derive(Debug, Serialize)]
struct RunReport<'a> {
    label: &'a str,
    policy: &'static str,
    mean_demand: f64,
    leadtime: String,
    h: f64,
    theta: f64,
    params: GbsParams,
    reference_cost: Option<f64>,
    result: &'a SimResult,
}

fn reference_for(kind: PolicyKind, r: &Option<Reference>) -> Option<f64> {
    r.map(|r| match kind {
        PolicyKind::Cbs => r.cbs_cost,
        _ => r.gbs_cost,
    })
}

fn simulate_scenario(s: &Scenario) -> Result<SimResult> {
    let cfg = s.sim()?;
    match s.cfg.policy.kind {
        PolicyKind::Artificial => simulate_artificial(&cfg),
        _ => run_experiment(&cfg),
    }
}

fn run_rows(s: &Scenario, res: &SimResult) -> Result<Vec<RunRow>> {
    let cfg = s.sim()?;
    let kind = s.cfg.policy.kind;
    let reference_cost = reference_for(kind, &s.reference);
    let row = |replication: String, replications, avg_cost, se_cost, rec: [f64; 5], max_gap, events| RunRow {
        label: s.label.clone(),
        policy: kind.name(),
        mean_demand: cfg.sys.mean_leadtime_demand(),
        gamma: cfg.policy.gamma(),
        x_star: cfg.policy.x_star(),
        base: cfg.policy.base(),
        replication,
        replications,
        avg_cost,
        se_cost,
        mean_pos: rec[0],
        mean_neg: rec[1],
        mean_y: rec[2],
        mean_z: rec[3],
        mean_gap: rec[4],
        max_gap,
        events,
        reference_cost,
    };
    let mut rows: Vec<RunRow> = res
        .records
        .iter()
        .map(|r| {
            row(
                r.stream_id.to_string(),
                1,
                r.avg_cost,
                None,
                [r.mean_pos, r.mean_neg, r.mean_y, r.mean_z, r.mean_gap],
                r.max_gap,
                r.event_count,
            )
        })
        .collect();
    let m = &res.summary;
    rows.push(row(
        "all".into(),
        m.replications,
        m.avg_cost.mean,
        Some(m.avg_cost.se),
        [m.mean_pos.mean, m.mean_neg.mean, m.mean_y.mean, m.mean_z.mean, m.mean_gap.mean],
        m.max_gap,
        m.events,
    ));
    Ok(rows)
}

fn cmd_simulate(common: &Common, policy: Option<PolicyKind>, gamma: Option<f64>) -> CliResult<()> {
    let base = scenarios(common)?;
    let (path, format) = output_target(common, &base, Format::Csv);
    let mut runs = Vec::new();
    for s in &base {
        let kinds = match (policy, s.reference.is_some()) {
            (Some(k), _) => vec![k],
            (None, true) => vec![PolicyKind::Cbs, PolicyKind::Gbs],
            (None, false) => vec![s.cfg.policy.kind],
        };
        for k in kinds {
            let mut v = s.with_policy(k);
            if k != PolicyKind::Cbs {
                override_gamma(std::slice::from_mut(&mut v), gamma);
            }
            v.cfg.validate()?;
            runs.push(v);
        }
    }
    let results = runs
        .iter()
        .map(simulate_scenario)
        .collect::<Result<Vec<_>>>()?;
    match format {
        Format::Csv => {
            let mut rows = Vec::new();
            for (s, res) in runs.iter().zip(&results) {
                rows.extend(run_rows(s, res)?);
            }
            write_csv(path.as_deref(), &rows)
        }
        Format::Json => {
            let reports = runs
                .iter()
                .zip(&results)
                .map(|(s, res)| {
                    let cfg = s.sim()?;
                    Ok(RunReport {
                        label: &s.label,
                        policy: s.cfg.policy.kind.name(),
                        mean_demand: cfg.sys.mean_leadtime_demand(),
                        leadtime: cfg.sys.leadtime().label(),
                        h: cfg.cost.h,
                        theta: cfg.cost.theta,
                        params: cfg.policy,
                        reference_cost: reference_for(s.cfg.policy.kind, &s.reference),
                        result: res,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            write_json(path.as_deref(), &reports)
        }
    }
}

// sweep-gamma

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub label: String,
    pub gamma: f64,
    pub x_star: f64,
    pub avg_cost: f64,
    pub se_cost: f64,
    pub best: bool,
}

#[derive(Debug, Serialize)]
struct SweepReport {
    label: String,
    best_gamma: f64,
    reference_gamma: Option<f64>,
    curve: Vec<GammaPoint>,
}

fn cmd_sweep_gamma(common: &Common, lo: f64, hi: f64, step: f64) -> CliResult<()> {
    let list = scenarios(common)?;
    let (path, format) = output_target(common, &list, Format::Csv);
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for s in &list {
        if s.cfg.policy.kind == PolicyKind::Cbs {
            return Err(invalid("sweep-gamma needs a gbs policy").into());
        }
        let search = gamma_search(&s.sim()?, lo, hi, step)?;
        for (i, p) in search.curve.iter().enumerate() {
            rows.push(SweepRow {
                label: s.label.clone(),
                gamma: p.gamma,
                x_star: p.x_star,
                avg_cost: p.cost.mean,
                se_cost: p.cost.se,
                best: i == search.best,
            });
        }
        reports.push(SweepReport {
            label: s.label.clone(),
            best_gamma: search.best_point().gamma,
            reference_gamma: s.reference.and(s.cfg.policy.gamma),
            curve: search.curve,
        });
    }
    match format {
        Format::Csv => write_csv(path.as_deref(), &rows),
        Format::Json => write_json(path.as_deref(), &reports),
    }
}

// mdp

#[derive(Debug, Serialize)]
pub struct TargetRow {
    pub label: String,
    pub y: i64,
    /// Optimal in-transit target.
    pub level: i64,
    pub reachable: bool,
    /// GBS order-up-to level at the same `y`.
    pub gbs_level: i64,
    /// CBS order-up-to level at the same `y`.
    pub cbs_level: i64,
}

#[derive(Debug, Serialize)]
struct Comparison {
    policy: &'static str,
    source: &'static str,
    cost: f64,
    se: Option<f64>,
    /// `(cost - g) / g`.
    gap: f64,
}

#[derive(Debug, Serialize)]
struct MdpReport {
    label: String,
    mean_demand: f64,
    r: f64,
    beta: f64,
    h: f64,
    theta: f64,
    g: f64,
    kappa: f64,
    i_min: i64,
    i_max: i64,
    y_floor: i64,
    states: usize,
    state_actions: usize,
    iterations: usize,
    span: f64,
    /// `(kappa, g)` for each truncation solved.
    refinement: Vec<(f64, f64)>,
    order_up_to_violations: usize,
    reachable_y: Option<(i64, i64)>,
    reference_g: Option<f64>,
    comparisons: Vec<Comparison>,
    lp: Option<LpStats>,
    target: Vec<TargetRow>,
}

fn cmd_mdp(
    common: &Common,
    lp_path: Option<&Path>,
    kappa: Option<f64>,
    no_refine: bool,
    simulate: bool,
    gamma: Option<f64>,
) -> CliResult<()> {
    let mut list = scenarios(common)?;
    override_gamma(&mut list, gamma);
    if lp_path.is_some() && list.len() != 1 {
        return Err(invalid("--export-lp needs a single case; pick one with --row").into());
    }
    let (path, format) = output_target(common, &list, Format::Json);
    let mut reports = Vec::new();
    for s in &list {
        let sys = s.cfg.system_params()?;
        if !sys.leadtime().is_exponential() {
            return Err(Error::Unsupported(format!(
                "the MDP needs exponential lead times, got {}",
                sys.leadtime().label()
            ))
            .into());
        }
        let cost = s.cfg.cost_params()?;
        let mut section = s.cfg.mdp;
        if let Some(k) = kappa {
            section.kappa = k;
        }
        let (solved, used_kappa, refinement) = if section.refine && !no_refine {
            let auto = solve_auto(
                sys.r(),
                sys.beta(),
                cost,
                section.kappa(),
                section.stable_tol,
                section.max_doublings,
                &section.rvi(),
            )?;
            let hist = auto.history.iter().map(|&(f, g)| (f * section.kappa, g)).collect();
            (auto.solved, auto.kappa.k_max, hist)
        } else {
            let spec = MdpSpec::from_kappa(sys.r(), sys.beta(), cost, section.kappa())?;
            let solved = solve_inventory(spec, &section.rvi())?;
            let g = solved.g();
            (solved, section.kappa, vec![(section.kappa, g)])
        };
        let curve = extract_target(&solved);
        let g = solved.g();

        let gbs = match s.cfg.policy.kind {
            PolicyKind::Cbs => None,
            _ => Some(s.cfg.policy_params()?),
        };
        let cbs = s.with_policy(PolicyKind::Cbs).cfg.policy_params()?;
        let target = curve
            .points
            .iter()
            .map(|p| TargetRow {
                label: s.label.clone(),
                y: p.y,
                level: p.level,
                reachable: p.reachable,
                gbs_level: gbs.map_or(cbs.target_level(p.y), |g| g.target_level(p.y)),
                cbs_level: cbs.target_level(p.y),
            })
            .collect();

        let mut comparisons = Vec::new();
        let mut compare = |policy, source, cost: f64, se| {
            comparisons.push(Comparison {
                policy,
                source,
                cost,
                se,
                gap: (cost - g) / g,
            })
        };
        if let Some(r) = s.reference {
            compare("cbs", "reference", r.cbs_cost, None);
            compare("gbs", "reference", r.gbs_cost, None);
        }
        if simulate {
            let mut kinds = vec![PolicyKind::Cbs];
            if gbs.is_some() {
                kinds.push(PolicyKind::Gbs);
            }
            for k in kinds {
                let res = run_experiment(&s.with_policy(k).sim()?)?;
                compare(k.name(), "simulated", res.summary.avg_cost.mean, Some(res.summary.avg_cost.se));
            }
        }

        let lp = match lp_path {
            Some(p) => Some(export_lp(&solved.model, p)?),
            None => None,
        };
        let spec = *solved.model.spec();
        reports.push(MdpReport {
            label: s.label.clone(),
            mean_demand: sys.mean_leadtime_demand(),
            r: sys.r(),
            beta: sys.beta(),
            h: cost.h,
            theta: cost.theta,
            g,
            kappa: used_kappa,
            i_min: spec.i_min,
            i_max: spec.i_max,
            y_floor: spec.y_floor,
            states: solved.solution.bias.len(),
            state_actions: solved.model.action_count(),
            iterations: solved.solution.iterations,
            span: solved.solution.span,
            refinement,
            order_up_to_violations: curve.violations.len(),
            reachable_y: curve.reachable_range(),
            reference_g: s.reference.and_then(|r| r.mdp_cost),
            comparisons,
            lp,
            target,
        });
    }
    match format {
        Format::Json => write_json(path.as_deref(), &reports),
        Format::Csv => {
            let rows: Vec<&TargetRow> = reports.iter().flat_map(|r| r.target.iter()).collect();
            write_csv(path.as_deref(), &rows)
        }
    }
}

// scaling

/// CSV row for `scaling`: `kind = point` rows carry costs, `kind = fit`
/// rows carry the regression of `ln cost` on `ln (r / beta)`.
#[derive(Debug, Serialize)]
pub struct ScalingRow {
    pub kind: &'static str,
    pub policy: &'static str,
    pub mean_demand: Option<f64>,
    pub gamma: Option<f64>,
    pub avg_cost: Option<f64>,
    pub se_cost: Option<f64>,
    pub intercept: Option<f64>,
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Serialize)]
struct ScalingReport {
    rows: Vec<ScalingRow>,
    cbs_fit: LogLogFit,
    gbs_fit: LogLogFit,
}

fn cmd_scaling(
    common: &Common,
    points: Option<Vec<f64>>,
    gammas: Option<Vec<f64>>,
    sweep: bool,
    sweep_hi: f64,
) -> CliResult<()> {
    let base = scenarios(common)?;
    let (path, format) = output_target(common, &base, Format::Csv);
    let mut list: Vec<Scenario> = match (&common.preset, &points) {
        (Some(_), Some(pts)) => {
            let keep: Vec<Scenario> = base
                .into_iter()
                .filter(|s| pts.iter().any(|&p| s.cfg.system.mean_demand == Some(p)))
                .collect();
            if keep.len() != pts.len() {
                return Err(invalid("some --points are not rows of the preset").into());
            }
            keep
        }
        (Some(_), None) => base,
        (None, Some(pts)) => {
            let template = base.into_iter().next().expect("one config scenario");
            pts.iter()
                .map(|&m| {
                    let mut s = template.clone();
                    s.label = format!("{m}");
                    s.cfg.system.r = None;
                    s.cfg.system.mean_demand = Some(m);
                    s
                })
                .collect()
        }
        (None, None) => return Err(invalid("scaling from a config needs --points").into()),
    };
    if let Some(gs) = &gammas {
        if gs.len() != list.len() {
            return Err(invalid(format!("{} gammas for {} points", gs.len(), list.len())).into());
        }
        for (s, &g) in list.iter_mut().zip(gs) {
            s.cfg.policy.gamma = Some(g);
        }
    }

    let mut rows = Vec::new();
    let mut cbs_pts = Vec::new();
    let mut gbs_pts = Vec::new();
    for s in &list {
        let cbs = run_experiment(&s.with_policy(PolicyKind::Cbs).sim()?)?;
        let (gamma, gbs_cost) = if sweep {
            let search = gamma_search(&s.with_policy(PolicyKind::Gbs).sim_with_gamma(1.0)?, 1.0, sweep_hi, 0.2)?;
            let best = *search.best_point();
            (best.gamma, best.cost)
        } else {
            let g = s.with_policy(PolicyKind::Gbs);
            let cfg = g.sim()?;
            (cfg.policy.gamma(), run_experiment(&cfg)?.summary.avg_cost)
        };
        let mean_demand = s.cfg.system_params()?.mean_leadtime_demand();
        cbs_pts.push((mean_demand, cbs.summary.avg_cost.mean));
        gbs_pts.push((mean_demand, gbs_cost.mean));
        for (policy, g, est) in [("cbs", 1.0, cbs.summary.avg_cost), ("gbs", gamma, gbs_cost)] {
            rows.push(ScalingRow {
                kind: "point",
                policy,
                mean_demand: Some(mean_demand),
                gamma: Some(g),
                avg_cost: Some(est.mean),
                se_cost: Some(est.se),
                intercept: None,
                slope: None,
                r_squared: None,
                points: None,
            });
        }
    }
    let cbs_fit = loglog_fit(&cbs_pts)?;
    let gbs_fit = loglog_fit(&gbs_pts)?;
    for (policy, fit) in [("cbs", cbs_fit), ("gbs", gbs_fit)] {
        rows.push(ScalingRow {
            kind: "fit",
            policy,
            mean_demand: None,
            gamma: None,
            avg_cost: None,
            se_cost: None,
            intercept: Some(fit.intercept),
            slope: Some(fit.slope),
            r_squared: Some(fit.r_squared),
            points: Some(fit.points),
        });
    }
    match format {
        Format::Csv => write_csv(path.as_deref(), &rows),
        Format::Json => write_json(
            path.as_deref(),
            &ScalingReport {
                rows,
                cbs_fit,
                gbs_fit,
            },
        ),
    }
}

impl Scenario {
    /// Simulation config with gamma forced, for grid searches that
    /// replace it anyway.
    fn sim_with_gamma(&self, gamma: f64) -> Result<SimConfig> {
        let mut s = self.clone();
        s.cfg.policy.gamma = Some(gamma);
        s.sim()
    }
}

// artificial

#[derive(Debug, Serialize)]
pub struct DistRow {
    pub label: String,
    pub y: i64,
    pub exact: f64,
    pub simulated: f64,
}

#[derive(Debug, Serialize)]
struct ArtificialReport {
    label: String,
    params: GbsParams,
    total_variation: f64,
    exact_mean: f64,
    exact_std: f64,
    exact_cost: f64,
    simulated_mean: f64,
    simulated_std: f64,
    simulated_cost: f64,
    simulated_cost_se: f64,
    balance_residual: f64,
    distribution: Vec<DistRow>,
}

fn cmd_artificial(common: &Common, gamma: Option<f64>) -> CliResult<()> {
    let mut list = scenarios(common)?;
    override_gamma(&mut list, gamma);
    let (path, format) = output_target(common, &list, Format::Csv);
    let mut reports = Vec::new();
    for s in &list {
        let s = if s.cfg.policy.kind == PolicyKind::Gbs {
            s.with_policy(PolicyKind::Artificial)
        } else {
            s.clone()
        };
        let cfg = s.sim()?.with_histogram();
        let exact = artificial_stationary(&cfg.policy, &cfg.sys)?;
        let res = simulate_artificial(&cfg)?;
        let hist = res
            .histogram
            .as_ref()
            .ok_or_else(|| Error::Fault("histogram was not recorded".into()))?;
        let total = hist.total();
        let lo = exact.min_y.min(hist.iter().map(|(y, _)| y).min().unwrap_or(exact.min_y));
        let hi = exact.max_y().max(hist.iter().map(|(y, _)| y).max().unwrap_or(exact.max_y()));
        let distribution = (lo..=hi)
            .map(|y| DistRow {
                label: s.label.clone(),
                y,
                exact: exact.prob(y),
                simulated: hist.mass_at(y) / total,
            })
            .collect();
        reports.push(ArtificialReport {
            label: s.label.clone(),
            params: cfg.policy,
            total_variation: exact.total_variation(hist),
            exact_mean: exact.mean,
            exact_std: exact.std,
            exact_cost: exact.cost(&cfg.cost),
            simulated_mean: res.summary.mean_y.mean,
            simulated_std: res.summary.std_y,
            simulated_cost: res.summary.avg_cost.mean,
            simulated_cost_se: res.summary.avg_cost.se,
            balance_residual: exact.balance_residual,
            distribution,
        });
    }
    match format {
        Format::Json => write_json(path.as_deref(), &reports),
        Format::Csv => {
            let rows: Vec<&DistRow> = reports.iter().flat_map(|r| r.distribution.iter()).collect();
            write_csv(path.as_deref(), &rows)
        }
    }
}

/// Sizes the global worker pool from `LEADSIM_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("LEADSIM_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| invalid(format!("LEADSIM_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Fault(format!("thread pool: {e}")))
}

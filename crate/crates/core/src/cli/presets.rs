//! Named parameter grids for the reference experiments.
//!
//! Every grid uses a mean lead time of 2 (`beta = 1/2`). The reference GBS
//! costs were produced by rounding the target down, so presets use
//! [`TargetRounding::Floor`].

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::model::{CostParams, TargetRounding};
use crate::rngdist::LeadTimeSpec;

pub const PRESET_NAMES: [&str; 6] = ["table1", "table2", "table3", "table4", "table5", "table6"];

pub const PRESET_ROUNDING: TargetRounding = TargetRounding::Floor;

/// Reference values printed next to a case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reference {
    pub gbs_cost: f64,
    pub cbs_cost: f64,
    pub cbs_base: Option<i64>,
    pub mdp_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PresetCase {
    /// Row key accepted by `--row`: the mean lead-time demand, or
    /// `h:theta` for the cost grid.
    pub label: String,
    pub mean_demand: f64,
    pub leadtime: LeadTimeSpec,
    pub cost: CostParams,
    pub gamma: f64,
    pub reference: Reference,
}

/// `(mean demand, gamma, GBS cost, CBS cost)`.
type Row = (f64, f64, f64, f64);

const EXPONENTIAL: [Row; 14] = [
    (2.0, 1.6, 1.00, 1.08),
    (10.0, 2.2, 2.01, 2.50),
    (20.0, 2.4, 2.66, 3.55),
    (100.0, 3.4, 4.95, 7.97),
    (200.0, 4.8, 6.41, 11.3),
    (400.0, 5.6, 8.22, 16.0),
    (600.0, 5.8, 9.53, 19.5),
    (800.0, 6.8, 10.5, 22.6),
    (1000.0, 6.8, 11.4, 25.2),
    (1200.0, 7.8, 12.2, 27.6),
    (1400.0, 7.8, 12.9, 29.9),
    (1600.0, 8.6, 13.5, 31.9),
    (1800.0, 8.6, 14.1, 33.8),
    (2000.0, 8.6, 14.6, 35.7),
];

const SHIFTED: [Row; 14] = [
    (2.0, 1.4, 1.02, 1.08),
    (10.0, 1.8, 2.12, 2.51),
    (20.0, 2.2, 2.84, 3.56),
    (100.0, 2.8, 5.64, 7.93),
    (200.0, 3.2, 7.53, 11.3),
    (400.0, 3.8, 10.1, 15.9),
    (600.0, 4.4, 12.0, 19.5),
    (800.0, 4.4, 13.6, 22.6),
    (1000.0, 4.8, 15.0, 25.2),
    (1200.0, 5.2, 16.2, 27.6),
    (1400.0, 5.4, 17.4, 30.0),
    (1600.0, 5.0, 18.4, 31.9),
    (1800.0, 5.6, 19.3, 33.8),
    (2000.0, 5.2, 20.3, 35.8),
];

const UNIFORM: [Row; 14] = [
    (2.0, 1.4, 1.06, 1.09),
    (10.0, 1.6, 2.29, 2.52),
    (20.0, 1.8, 3.13, 3.54),
    (100.0, 2.6, 6.45, 7.96),
    (200.0, 3.2, 8.80, 11.3),
    (400.0, 3.8, 12.1, 16.0),
    (600.0, 4.0, 14.4, 19.5),
    (800.0, 4.2, 16.5, 22.6),
    (1000.0, 4.4, 18.2, 25.2),
    (1200.0, 5.0, 19.7, 27.7),
    (1400.0, 5.2, 21.2, 30.0),
    (1600.0, 5.4, 22.5, 31.9),
    (1800.0, 5.4, 23.8, 33.9),
    (2000.0, 5.4, 24.8, 35.9),
];

const PARETO: [Row; 14] = [
    (2.0, 1.6, 0.96, 1.08),
    (10.0, 1.8, 1.93, 2.51),
    (20.0, 2.4, 2.47, 3.57),
    (100.0, 3.8, 4.52, 8.00),
    (200.0, 4.6, 5.80, 11.2),
    (400.0, 5.6, 7.42, 15.9),
    (600.0, 5.8, 8.55, 19.6),
    (800.0, 6.4, 9.47, 22.6),
    (1000.0, 6.8, 10.2, 25.1),
    (1200.0, 7.6, 10.9, 27.5),
    (1400.0, 8.0, 11.5, 29.7),
    (1600.0, 8.0, 12.0, 31.6),
    (1800.0, 8.2, 12.5, 33.9),
    (2000.0, 8.4, 13.0, 35.5),
];

/// `(h, theta, gamma, CBS base, CBS cost, GBS cost)` at mean demand 20.
const COSTS: [(f64, f64, f64, i64, f64, f64); 7] = [
    (9.0, 1.0, 2.0, 14, 7.44, 5.62),
    (6.0, 1.0, 2.0, 15, 6.74, 5.22),
    (3.0, 1.0, 2.0, 17, 5.52, 4.17),
    (1.0, 1.0, 2.6, 20, 3.54, 2.66),
    (1.0, 3.0, 2.6, 23, 5.79, 4.18),
    (1.0, 6.0, 2.8, 25, 7.34, 5.14),
    (1.0, 9.0, 3.0, 26, 8.16, 5.58),
];

/// `(mean demand, gamma, minimum cost, CBS cost, GBS cost)`.
const OPTIMALITY: [(f64, f64, f64, f64, f64); 9] = [
    (2.0, 1.6, 0.95, 1.08, 1.00),
    (10.0, 2.2, 1.87, 2.50, 2.01),
    (20.0, 2.4, 2.45, 3.55, 2.66),
    (100.0, 3.4, 4.44, 7.97, 4.95),
    (200.0, 4.8, 5.70, 11.3, 6.41),
    (400.0, 5.6, 7.28, 16.0, 8.22),
    (600.0, 5.8, 8.40, 19.5, 9.53),
    (800.0, 6.8, 9.28, 22.6, 10.5),
    (1000.0, 6.8, 10.03, 25.2, 11.4),
];

fn unit_cost() -> CostParams {
    CostParams { h: 1.0, theta: 1.0 }
}

fn from_rows(rows: &[Row], leadtime: LeadTimeSpec) -> Vec<PresetCase> {
    rows.iter()
        .map(|&(m, gamma, gbs, cbs)| PresetCase {
            label: format!("{m}"),
            mean_demand: m,
            leadtime,
            cost: unit_cost(),
            gamma,
            reference: Reference {
                gbs_cost: gbs,
                cbs_cost: cbs,
                cbs_base: None,
                mdp_cost: None,
            },
        })
        .collect()
}

/// All cases of a named preset.
pub fn preset(name: &str) -> Result<Vec<PresetCase>> {
    let exp = LeadTimeSpec::Exponential { mean: 2.0 };
    Ok(match name {
        "table1" => from_rows(&EXPONENTIAL, exp),
        "table2" => from_rows(
            &SHIFTED,
            LeadTimeSpec::ShiftedExponential {
                shift: 0.2,
                mean: 1.8,
            },
        ),
        "table3" => COSTS
            .iter()
            .map(|&(h, theta, gamma, base, cbs, gbs)| PresetCase {
                label: format!("{h}:{theta}"),
                mean_demand: 20.0,
                leadtime: exp,
                cost: CostParams { h, theta },
                gamma,
                reference: Reference {
                    gbs_cost: gbs,
                    cbs_cost: cbs,
                    cbs_base: Some(base),
                    mdp_cost: None,
                },
            })
            .collect(),
        "table4" => from_rows(&UNIFORM, LeadTimeSpec::Uniform { lo: 0.0, hi: 4.0 }),
        "table5" => from_rows(
            &PARETO,
            LeadTimeSpec::Pareto {
                shape: 3.0,
                scale: 0.25,
            },
        ),
        "table6" => OPTIMALITY
            .iter()
            .map(|&(m, gamma, mdp, cbs, gbs)| PresetCase {
                label: format!("{m}"),
                mean_demand: m,
                leadtime: exp,
                cost: unit_cost(),
                gamma,
                reference: Reference {
                    gbs_cost: gbs,
                    cbs_cost: cbs,
                    cbs_base: None,
                    mdp_cost: Some(mdp),
                },
            })
            .collect(),
        other => {
            return Err(invalid(format!(
                "unknown preset `{other}`; expected one of {}",
                PRESET_NAMES.join(", ")
            )))
        }
    })
}

/// The cases of `name`, restricted to `row` when given.
pub fn select(name: &str, row: Option<&str>) -> Result<Vec<PresetCase>> {
    let cases = preset(name)?;
    let Some(row) = row else {
        return Ok(cases);
    };
    let wanted = normalize_row(row);
    let picked: Vec<_> = cases.into_iter().filter(|c| c.label == wanted).collect();
    if picked.is_empty() {
        let labels: Vec<String> = preset(name)?.into_iter().map(|c| c.label).collect();
        return Err(invalid(format!(
            "preset {name} has no row `{row}`; rows are {}",
            labels.join(", ")
        )));
    }
    Ok(picked)
}

/// Accepts `20`, `20.0` and `9:1`, `9.0:1`.
fn normalize_row(row: &str) -> String {
    let norm = |s: &str| s.trim().parse::<f64>().map(|v| format!("{v}")).unwrap_or_else(|_| s.trim().to_string());
    row.split(':').map(norm).collect::<Vec<_>>().join(":")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_valid() {
        for name in PRESET_NAMES {
            let cases = preset(name).unwrap();
            assert!(!cases.is_empty());
            for c in cases {
                c.leadtime.validate().unwrap();
                c.cost.validate().unwrap();
                assert!((c.leadtime.mean() - 2.0).abs() < 1e-12, "{name} {}", c.label);
                assert!(c.gamma >= 1.0);
            }
        }
    }

    #[test]
    fn row_selection() {
        assert_eq!(select("table1", Some("20")).unwrap()[0].gamma, 2.4);
        assert_eq!(select("table1", Some("20.0")).unwrap().len(), 1);
        assert_eq!(select("table3", Some("9:1")).unwrap()[0].reference.cbs_base, Some(14));
        assert_eq!(select("table3", None).unwrap().len(), 7);
        assert!(select("table1", Some("21")).is_err());
        assert!(select("table9", None).is_err());
    }
}

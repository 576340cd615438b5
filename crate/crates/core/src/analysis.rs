//! Exact oracles and post-processing of simulation output.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::{choose_xstar, CostParams, GbsParams, SystemParams};
use crate::rngdist::{norm_cdf, norm_pdf};
use crate::sim::{run_experiment, Estimate, NetInventoryHistogram, SimConfig, SimSummary};

/// Stationary law of the artificial birth-death process.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDist {
    /// Smallest `y` carried; `probs[i]` is the mass at `min_y + i`.
    pub min_y: i64,
    pub probs: Vec<f64>,
    pub mean: f64,
    pub mean_pos: f64,
    pub mean_neg: f64,
    pub std: f64,
    /// `max_y |pi(y) up(y) - pi(y+1) r| / max pi`.
    pub balance_residual: f64,
}

impl StationaryDist {
    pub fn max_y(&self) -> i64 {
        self.min_y + self.probs.len() as i64 - 1
    }

    pub fn prob(&self, y: i64) -> f64 {
        if y < self.min_y {
            return 0.0;
        }
        self.probs.get((y - self.min_y) as usize).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs.iter().enumerate().map(|(i, &p)| (self.min_y + i as i64, p))
    }

    /// Expected cost `h E[Y^+] + theta E[Y^-]`.
    pub fn cost(&self, cost: &CostParams) -> f64 {
        cost.h * self.mean_pos + cost.theta * self.mean_neg
    }

    /// Total variation distance to a time-weighted histogram.
    pub fn total_variation(&self, hist: &NetInventoryHistogram) -> f64 {
        let total = hist.total();
        let lo = self.min_y.min(hist.iter().map(|(y, _)| y).min().unwrap_or(self.min_y));
        let hi = self.max_y().max(hist.iter().map(|(y, _)| y).max().unwrap_or(self.max_y()));
        0.5 * (lo..=hi)
            .map(|y| (self.prob(y) - hist.mass_at(y) / total).abs())
            .sum::<f64>()
    }
}

/// Mass below `PI_FLOOR * max pi` is dropped.
const PI_FLOOR: f64 = 1e-16;
const MAX_SUPPORT: usize = 50_000_000;

/// Exact stationary distribution of the artificial process by detailed
/// balance, `pi(y + 1) / pi(y) = beta ceil(T(y)) / r`.
pub fn artificial_stationary(params: &GbsParams, sys: &SystemParams) -> Result<StationaryDist> {
    if !sys.leadtime().is_exponential() {
        return Err(Error::Unsupported(format!(
            "the artificial process needs exponential lead times, got {}",
            sys.leadtime().label()
        )));
    }
    let (r, beta) = (sys.r(), sys.beta());
    let up = |y: i64| beta * params.target_level(y) as f64;

    // The top of the support is the first y whose target level is zero.
    let mut top = (params.base() / params.gamma()).floor() as i64 - 1;
    while params.target_level(top) > 0 {
        top += 1;
    }
    while top > i64::MIN / 2 && params.target_level(top - 1) == 0 {
        top -= 1;
    }

    // Log-masses from the top down; pi(y) = pi(y + 1) r / up(y).
    let mut log_pi = vec![0.0f64];
    let mut max_log = 0.0f64;
    let mut y = top - 1;
    let saturated_level = if params.cap().is_finite() {
        Some(params.rounding().apply(params.cap()) as i64)
    } else {
        None
    };
    loop {
        let u = up(y);
        let next = log_pi.last().unwrap() + (r / u).ln();
        if u > r && next < max_log + PI_FLOOR.ln() {
            break;
        }
        if u <= r && saturated_level == Some(params.target_level(y)) {
            return Err(Error::Fault(format!(
                "stationary law is not summable: saturated up-rate {u} <= r = {r}"
            )));
        }
        if log_pi.len() >= MAX_SUPPORT {
            return Err(Error::Fault("stationary support exceeds the size limit".into()));
        }
        log_pi.push(next);
        max_log = max_log.max(next);
        y -= 1;
    }
    log_pi.reverse();
    let min_y = y + 1;

    let mut probs: Vec<f64> = log_pi.iter().map(|l| (l - max_log).exp()).collect();
    let mut keep_from = 0;
    while probs[keep_from] < PI_FLOOR {
        keep_from += 1;
    }
    probs.drain(..keep_from);
    let min_y = min_y + keep_from as i64;
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);

    let (mut mean, mut mean_pos, mut mean_neg, mut second) = (0.0, 0.0, 0.0, 0.0);
    for (i, &p) in probs.iter().enumerate() {
        let yv = (min_y + i as i64) as f64;
        mean += p * yv;
        second += p * yv * yv;
        if yv > 0.0 {
            mean_pos += p * yv;
        } else {
            mean_neg -= p * yv;
        }
    }
    let max_p = probs.iter().cloned().fold(0.0, f64::max);
    let balance_residual = probs
        .windows(2)
        .enumerate()
        .map(|(i, w)| (w[0] * up(min_y + i as i64) - w[1] * r).abs())
        .fold(0.0, f64::max)
        / max_p;
    Ok(StationaryDist {
        min_y,
        probs,
        mean,
        mean_pos,
        mean_neg,
        std: (second - mean * mean).max(0.0).sqrt(),
        balance_residual,
    })
}

/// Finite truncation offset `f = (r / beta)^0.75` for runs that need one:
/// it grows faster than `sqrt(r)` and slower than `r`.
pub fn growth_truncation(sys: &SystemParams) -> f64 {
    sys.mean_leadtime_demand().powf(0.75)
}

/// `h E[(N + x*)^+] + theta E[(N + x*)^-]` for `N ~ Normal(0, r / (gamma beta))`.
pub fn normal_limit_cost(cost: &CostParams, sys: &SystemParams, gamma: f64, x_star: f64) -> f64 {
    let sigma = (sys.mean_leadtime_demand() / gamma).sqrt();
    let k = x_star / sigma;
    let pos = x_star * norm_cdf(k) + sigma * norm_pdf(k);
    let neg = -x_star * norm_cdf(-k) + sigma * norm_pdf(k);
    cost.h * pos + cost.theta * neg
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaPoint {
    pub gamma: f64,
    pub x_star: f64,
    pub cost: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaSearch {
    pub curve: Vec<GammaPoint>,
    /// Index into `curve` of the lowest estimated cost.
    pub best: usize,
}

impl GammaSearch {
    pub fn best_point(&self) -> &GammaPoint {
        &self.curve[self.best]
    }
}

/// Grid `lo, lo + step, ..., <= hi`, snapped to 1e-9.
pub fn gamma_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && lo >= step && hi >= lo && hi.is_finite()) {
        return Err(invalid(format!(
            "need 0 < step <= lo <= hi, got lo={lo} hi={hi} step={step}"
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..n)
        .map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

/// Simulates every grid value of gamma with common random numbers (the
/// seed and stream ids of `cfg`), recomputing `x*` for each. The upper
/// truncation and rounding of `cfg.policy` are kept.
pub fn gamma_search(cfg: &SimConfig, lo: f64, hi: f64, step: f64) -> Result<GammaSearch> {
    let f = cfg.policy.f();
    let f = f.is_finite().then_some(f);
    let mut curve = Vec::new();
    for gamma in gamma_grid(lo, hi, step)? {
        let x_star = choose_xstar(&cfg.cost, &cfg.sys, gamma)?;
        let policy = GbsParams::new(gamma, f, x_star, &cfg.sys)?.with_rounding(cfg.policy.rounding());
        let res = run_experiment(&cfg.clone().with_policy(policy))?;
        curve.push(GammaPoint {
            gamma,
            x_star,
            cost: res.summary.avg_cost,
        });
    }
    let best = curve
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.cost.mean.total_cmp(&b.1.cost.mean))
        .map(|(i, _)| i)
        .expect("grid is nonempty");
    Ok(GammaSearch { curve, best })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least squares of `ln cost` on `ln x`.
pub fn loglog_fit(points: &[(f64, f64)]) -> Result<LogLogFit> {
    if points.len() < 2 {
        return Err(invalid("a log-log fit needs at least two points"));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::Domain(format!("log-log fit needs positive data, got ({x}, {y})")));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("log-log fit needs at least two distinct x".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LogLogFit {
        intercept,
        slope,
        r_squared,
        points: points.len(),
    })
}

/// Fluid-limit dynamics of the centered net inventory `Y` and pipeline `U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FluidPolicy {
    /// `U = -gamma Y`, so `Y' = -beta gamma Y`.
    Gbs { gamma: f64 },
    /// `U = -Y`, so `Y' = -beta Y`.
    Cbs,
    /// Proportional order-up-to with smoothing rate `delta`:
    /// `Y' = beta U`, `(Y + U)' = -delta (Y + U)`.
    Pout { delta: f64 },
}

/// Fluid state at time `t` from `(y0, u0)`. Under GBS and CBS the pipeline
/// is reset by the policy at time zero, so `u0` is ignored.
pub fn fluid_trajectory(kind: FluidPolicy, y0: f64, u0: f64, beta: f64, t: f64) -> Result<(f64, f64)> {
    if !(t >= 0.0) {
        return Err(invalid(format!("t must be nonnegative, got {t}")));
    }
    if !(beta > 0.0) {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    Ok(match kind {
        FluidPolicy::Gbs { gamma } => {
            let y = y0 * (-beta * gamma * t).exp();
            (y, -gamma * y)
        }
        FluidPolicy::Cbs => {
            let y = y0 * (-beta * t).exp();
            (y, -y)
        }
        FluidPolicy::Pout { delta } => {
            let w0 = y0 + u0;
            let eb = (-beta * t).exp();
            // (e^{-delta t} - e^{-beta t}) / (beta - delta), stable near beta = delta.
            let eps = beta - delta;
            let kernel = if eps == 0.0 {
                t * eb
            } else {
                eb * (eps * t).exp_m1() / eps
            };
            let y = y0 * eb + beta * w0 * kernel;
            (y, w0 * (-delta * t).exp() - y)
        }
    })
}

/// One row of the gap report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRow {
    pub mean_demand: f64,
    pub r: f64,
    pub mean_gap: Estimate,
    pub max_gap: i64,
    pub mean_y: Estimate,
    pub artificial_mean_y: f64,
    /// `(E Y - E Y_hat) / sqrt(r)`.
    pub scaled_diff: f64,
    pub scaled_diff_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub rows: Vec<GapRow>,
    /// Largest over smallest mean gap across rows.
    pub gap_ratio: f64,
    /// Whether the scaled difference decreases down the rows, allowing
    /// overlap within two combined standard errors.
    pub scaled_diff_decreasing: bool,
}

pub fn gap_row(sys: &SystemParams, actual: &SimSummary, artificial: &StationaryDist) -> GapRow {
    let sr = sys.r().sqrt();
    GapRow {
        mean_demand: sys.mean_leadtime_demand(),
        r: sys.r(),
        mean_gap: actual.mean_gap,
        max_gap: actual.max_gap,
        mean_y: actual.mean_y,
        artificial_mean_y: artificial.mean,
        scaled_diff: (actual.mean_y.mean - artificial.mean) / sr,
        scaled_diff_se: actual.mean_y.se / sr,
    }
}

/// Tabulates gap statistics over rows ordered by increasing `r`.
pub fn gap_summary(rows: Vec<GapRow>) -> GapReport {
    let gaps: Vec<f64> = rows.iter().map(|r| r.mean_gap.mean).collect();
    let hi = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let gap_ratio = if hi == 0.0 { 1.0 } else { hi / lo };
    let scaled_diff_decreasing = rows.windows(2).all(|w| {
        let slack = 2.0 * w[0].scaled_diff_se.hypot(w[1].scaled_diff_se);
        w[1].scaled_diff <= w[0].scaled_diff + slack
    });
    GapReport {
        rows,
        gap_ratio,
        scaled_diff_decreasing,
    }
}

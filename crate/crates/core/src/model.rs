//! System, cost and policy parameters, the event calendar, and the
//! closed-form parameter choices (normal and Poisson newsvendor fractiles).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rngdist::{inv_norm_cdf, LeadTimeSpec};

/// Values within this distance of an integer are treated as that integer
/// before taking a ceiling, so `20 + 2.4 * 5 = 32.000000000000004` orders
/// like 32 would.
const SNAP_EPS: f64 = 1e-9;

/// `ceil(x)`, robust to floating round-off just above an integer.
#[inline]
pub fn snapped_ceil(x: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() <= SNAP_EPS * nearest.abs().max(1.0) {
        nearest
    } else {
        x.ceil()
    }
}

/// Demand rate and lead-time law. `beta` is always `1 / mean(leadtime)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    r: f64,
    leadtime: LeadTimeSpec,
    beta: f64,
}

impl SystemParams {
    pub fn new(r: f64, leadtime: LeadTimeSpec) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(invalid(format!("demand rate must be positive, got {r}")));
        }
        leadtime.validate()?;
        Ok(Self {
            r,
            leadtime,
            beta: 1.0 / leadtime.mean(),
        })
    }

    /// Like [`SystemParams::new`] but also checks a caller-supplied `beta`
    /// against the lead-time mean.
    pub fn with_beta(r: f64, leadtime: LeadTimeSpec, beta: f64) -> Result<Self> {
        let sys = Self::new(r, leadtime)?;
        if !((beta - sys.beta).abs() <= 1e-12 * sys.beta) {
            return Err(invalid(format!(
                "beta {beta} is inconsistent with the lead-time mean {} (expected {})",
                leadtime.mean(),
                sys.beta
            )));
        }
        Ok(sys)
    }

    /// Builds the system whose mean lead-time demand `r / beta` equals
    /// `mean_demand`.
    pub fn from_mean_demand(mean_demand: f64, leadtime: LeadTimeSpec) -> Result<Self> {
        leadtime.validate()?;
        Self::new(mean_demand / leadtime.mean(), leadtime)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn leadtime(&self) -> &LeadTimeSpec {
        &self.leadtime
    }

    /// Mean lead-time demand `X* = r / beta`.
    pub fn mean_leadtime_demand(&self) -> f64 {
        self.r * self.leadtime.mean()
    }
}

/// Holding (`h`) and backlog (`theta`) cost per unit per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub h: f64,
    pub theta: f64,
}

impl CostParams {
    pub fn new(h: f64, theta: f64) -> Result<Self> {
        let c = Self { h, theta };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0 && self.theta.is_finite() && self.theta > 0.0) {
            return Err(invalid(format!(
                "costs must be positive, got h={} theta={}",
                self.h, self.theta
            )));
        }
        Ok(())
    }

    /// Newsvendor critical fractile `theta / (h + theta)`.
    pub fn fractile(&self) -> f64 {
        self.theta / (self.h + self.theta)
    }
}

/// How the fractional truncated target `T` is turned into an integer
/// order-up-to level for the in-transit count.
///
/// `Ceil` is the policy's defining rule, `A = max(ceil(T - Z), 0)`. `Floor`
/// orders up to `floor(T)` instead, which is the convention behind the
/// reference cost tables. The two coincide whenever `T` is an integer, in
/// particular for constant base stock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetRounding {
    #[default]
    Ceil,
    Floor,
}

impl TargetRounding {
    #[inline]
    pub fn apply(self, t: f64) -> f64 {
        match self {
            Self::Ceil => snapped_ceil(t),
            Self::Floor => snapped_floor(t),
        }
    }
}

/// `floor(x)`, robust to floating round-off just below an integer.
#[inline]
pub fn snapped_floor(x: f64) -> f64 {
    -snapped_ceil(-x)
}

/// Generalized base-stock parameters.
///
/// The in-transit target is `X = X** - gamma * y`, truncated to
/// `[0, X* + f]`, with `X* = r / beta` and `X** = X* + gamma * x_star`.
/// `f = +inf` disables the upper truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GbsParams {
    gamma: f64,
    f: f64,
    x_star: f64,
    x_star_base: f64,
    base: f64,
    rounding: TargetRounding,
}

impl GbsParams {
    pub fn new(gamma: f64, f: Option<f64>, x_star: f64, sys: &SystemParams) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(invalid(format!("gamma must be positive, got {gamma}")));
        }
        let f = f.unwrap_or(f64::INFINITY);
        if !(f > 0.0) {
            return Err(invalid(format!("f must be positive or infinite, got {f}")));
        }
        if !x_star.is_finite() {
            return Err(invalid(format!("x_star must be finite, got {x_star}")));
        }
        let x_star_base = sys.mean_leadtime_demand();
        Ok(Self {
            gamma,
            f,
            x_star,
            x_star_base,
            base: x_star_base + gamma * x_star,
            rounding: TargetRounding::Ceil,
        })
    }

    /// GBS with `x_star` chosen by [`choose_xstar`].
    pub fn with_auto_xstar(
        gamma: f64,
        f: Option<f64>,
        cost: &CostParams,
        sys: &SystemParams,
    ) -> Result<Self> {
        let x_star = choose_xstar(cost, sys, gamma)?;
        Self::new(gamma, f, x_star, sys)
    }

    /// Constant base stock with integer level `level`: `gamma = 1`, no
    /// upper truncation, and `X** = level` exactly.
    pub fn cbs(level: i64, sys: &SystemParams) -> Self {
        let x_star_base = sys.mean_leadtime_demand();
        Self {
            gamma: 1.0,
            f: f64::INFINITY,
            x_star: level as f64 - x_star_base,
            x_star_base,
            base: level as f64,
            rounding: TargetRounding::Ceil,
        }
    }

    pub fn with_rounding(mut self, rounding: TargetRounding) -> Self {
        self.rounding = rounding;
        self
    }

    pub fn rounding(&self) -> TargetRounding {
        self.rounding
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn f(&self) -> f64 {
        self.f
    }

    pub fn x_star(&self) -> f64 {
        self.x_star
    }

    /// `X* = r / beta`.
    pub fn x_star_base(&self) -> f64 {
        self.x_star_base
    }

    /// `X** = X* + gamma * x_star`.
    pub fn base(&self) -> f64 {
        self.base
    }

    /// The shift `gamma * x_star` of the base level away from `X*`.
    pub fn base_shift(&self) -> f64 {
        self.base - self.x_star_base
    }

    /// Upper truncation level `X* + f`.
    pub fn cap(&self) -> f64 {
        self.x_star_base + self.f
    }

    /// Untruncated and truncated targets `(X, T)` at net inventory `y`.
    #[inline]
    pub fn targets(&self, y: i64) -> (f64, f64) {
        let x = self.base - self.gamma * y as f64;
        (x, x.min(self.cap()).max(0.0))
    }

    /// Integer order-up-to level for `z` at net inventory `y`; `ceil(T(y))`
    /// under the default rounding.
    #[inline]
    pub fn target_level(&self, y: i64) -> i64 {
        self.rounding.apply(self.targets(y).1) as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    DemandArrival,
    ItemArrival,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed so the max-heap pops the earliest event; ties go to the
    // entry scheduled first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Min-ordered event calendar keyed by time, ties broken by insertion order.
///
/// Tracks how many item arrivals are pending, which is the in-transit
/// inventory `Z`.
#[derive(Debug, Clone, Default)]
pub struct Calendar {
    heap: BinaryHeap<Entry>,
    next_seq: u64,
    pending_items: u64,
}

impl Calendar {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn schedule(&mut self, event: Event) {
        if event.kind == EventKind::ItemArrival {
            self.pending_items += 1;
        }
        self.heap.push(Entry {
            time: event.time,
            seq: self.next_seq,
            kind: event.kind,
        });
        self.next_seq += 1;
    }

    pub fn peek(&self) -> Option<Event> {
        self.heap.peek().map(|e| Event {
            time: e.time,
            kind: e.kind,
        })
    }

    pub fn pop(&mut self) -> Option<Event> {
        let e = self.heap.pop()?;
        if e.kind == EventKind::ItemArrival {
            self.pending_items -= 1;
        }
        Some(Event {
            time: e.time,
            kind: e.kind,
        })
    }

    /// Number of scheduled item arrivals (in-transit units).
    pub fn pending_items(&self) -> u64 {
        self.pending_items
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

/// Centering `x* = Phi^{-1}(theta / (h + theta)) * sqrt(r / (gamma * beta))`,
/// the minimizer of `theta E[N - x]^+ + h E[x - N]^+` for
/// `N ~ Normal(0, r / (gamma beta))`.
pub fn choose_xstar(cost: &CostParams, sys: &SystemParams, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(invalid(format!("gamma must be positive, got {gamma}")));
    }
    let sigma = (sys.mean_leadtime_demand() / gamma).sqrt();
    Ok(inv_norm_cdf(cost.fractile())? * sigma)
}

/// `P(Poisson(mean) <= k)`, summing the pmf in log space.
pub fn poisson_cdf(mean: f64, k: i64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let ln_mean = mean.ln();
    let mut ln_fact = 0.0;
    let mut total = 0.0;
    for i in 0..=k {
        if i > 0 {
            ln_fact += (i as f64).ln();
        }
        total += (-mean + i as f64 * ln_mean - ln_fact).exp();
    }
    total.min(1.0)
}

/// Optimal constant base-stock level: the smallest integer `x` with
/// `P(Poisson(r / beta) <= x) >= theta / (h + theta)`.
pub fn choose_cbs_base(cost: &CostParams, sys: &SystemParams) -> i64 {
    let mean = sys.mean_leadtime_demand();
    let target = cost.fractile();
    let ln_mean = mean.ln();
    let mut ln_fact = 0.0;
    let mut total = 0.0;
    let mut k: i64 = 0;
    loop {
        if k > 0 {
            ln_fact += (k as f64).ln();
        }
        total += (-mean + k as f64 * ln_mean - ln_fact).exp();
        // The second guard stops accumulated round-off from running past
        // a fractile within 1e-15 of one.
        if total >= target || (k as f64) > mean + 50.0 * mean.sqrt() + 50.0 {
            return k;
        }
        k += 1;
    }
}

/// Instantaneous cost rate `h y^+ + theta y^-`.
#[inline]
pub fn instantaneous_cost(y: i64, cost: &CostParams) -> f64 {
    if y >= 0 {
        cost.h * y as f64
    } else {
        cost.theta * (-y) as f64
    }
}

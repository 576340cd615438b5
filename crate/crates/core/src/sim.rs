//! Continuous-time discrete-event simulation of the inventory system.
//!
//! Net inventory is piecewise constant between events, so every
//! time-average below is an exact integral over the measurement window
//! `[warmup, horizon]`; an interval straddling `warmup` contributes only its
//! later part.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::{instantaneous_cost, CostParams, Event, EventKind, GbsParams, SystemParams};
use crate::policy::{apply_event, SystemState};
use crate::rngdist::{exp_interarrival, RngStream};

pub const DEFAULT_HORIZON: f64 = 800.0;
pub const DEFAULT_WARMUP: f64 = 200.0;
pub const DEFAULT_REPLICATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub sys: SystemParams,
    pub cost: CostParams,
    pub policy: GbsParams,
    pub horizon: f64,
    pub warmup: f64,
    pub replications: usize,
    pub base_seed: u64,
    /// Record the time spent at each net inventory level.
    pub record_histogram: bool,
    /// Event budget per replication; `None` derives one from the demand rate.
    pub max_events: Option<u64>,
}

impl SimConfig {
    /// Default protocol: 800 time units, 200 of warm-up, 100 replications.
    pub fn new(sys: SystemParams, cost: CostParams, policy: GbsParams) -> Self {
        Self {
            sys,
            cost,
            policy,
            horizon: DEFAULT_HORIZON,
            warmup: DEFAULT_WARMUP,
            replications: DEFAULT_REPLICATIONS,
            base_seed: 1,
            record_histogram: false,
            max_events: None,
        }
    }

    pub fn with_protocol(mut self, horizon: f64, warmup: f64, replications: usize) -> Self {
        self.horizon = horizon;
        self.warmup = warmup;
        self.replications = replications;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.base_seed = seed;
        self
    }

    pub fn with_replications(mut self, replications: usize) -> Self {
        self.replications = replications;
        self
    }

    pub fn with_policy(mut self, policy: GbsParams) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_histogram(mut self) -> Self {
        self.record_histogram = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.warmup >= 0.0 && self.warmup < self.horizon && self.horizon.is_finite()) {
            return Err(invalid(format!(
                "need 0 <= warmup < horizon, got warmup={} horizon={}",
                self.warmup, self.horizon
            )));
        }
        if self.replications == 0 {
            return Err(invalid("at least one replication is required"));
        }
        self.cost.validate()
    }

    fn event_budget(&self) -> u64 {
        self.max_events
            .unwrap_or_else(|| (20.0 * self.sys.r() * self.horizon) as u64 + 1_000_000)
    }

    fn window(&self) -> f64 {
        self.horizon - self.warmup
    }
}

/// Time spent at each integer net inventory level.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NetInventoryHistogram {
    min_y: i64,
    mass: Vec<f64>,
}

impl NetInventoryHistogram {
    pub fn add(&mut self, y: i64, dt: f64) {
        if self.mass.is_empty() {
            self.min_y = y;
            self.mass.push(0.0);
        }
        if y < self.min_y {
            let grow = (self.min_y - y) as usize;
            self.mass.splice(0..0, std::iter::repeat_n(0.0, grow));
            self.min_y = y;
        }
        let idx = (y - self.min_y) as usize;
        if idx >= self.mass.len() {
            self.mass.resize(idx + 1, 0.0);
        }
        self.mass[idx] += dt;
    }

    pub fn merge(&mut self, other: &Self) {
        for (y, m) in other.iter() {
            self.add(y, m);
        }
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn mass_at(&self, y: i64) -> f64 {
        if y < self.min_y {
            return 0.0;
        }
        self.mass.get((y - self.min_y) as usize).copied().unwrap_or(0.0)
    }

    /// `(y, time)` pairs in increasing `y`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.mass
            .iter()
            .enumerate()
            .map(move |(i, &m)| (self.min_y + i as i64, m))
    }

    /// Normalized empirical distribution.
    pub fn probabilities(&self) -> Vec<(i64, f64)> {
        let total = self.total();
        self.iter().map(|(y, m)| (y, m / total)).collect()
    }
}

/// Time-averaged statistics of one replication over the measurement window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub stream_id: u64,
    /// Time-average of `h y^+ + theta y^-`.
    pub avg_cost: f64,
    pub mean_pos: f64,
    pub mean_neg: f64,
    pub mean_y: f64,
    pub mean_y_sq: f64,
    pub mean_z: f64,
    pub mean_z_sq: f64,
    pub mean_gap: f64,
    pub max_gap: i64,
    pub event_count: u64,
    #[serde(skip)]
    pub histogram: Option<NetInventoryHistogram>,
}

#[derive(Default)]
struct Integrals {
    cost: f64,
    pos: f64,
    neg: f64,
    y: f64,
    y_sq: f64,
    z: f64,
    z_sq: f64,
    gap: f64,
    max_gap: i64,
    histogram: Option<NetInventoryHistogram>,
}

impl Integrals {
    fn new(record_histogram: bool) -> Self {
        Self {
            histogram: record_histogram.then(NetInventoryHistogram::default),
            ..Default::default()
        }
    }

    /// Accumulates the constant state over `[from, to]` clipped to the window.
    #[inline]
    fn add(&mut self, cfg: &SimConfig, from: f64, to: f64, y: i64, z: u64, gap: i64) {
        let dt = to.min(cfg.horizon) - from.max(cfg.warmup);
        if dt <= 0.0 {
            return;
        }
        let yf = y as f64;
        let zf = z as f64;
        self.cost += instantaneous_cost(y, &cfg.cost) * dt;
        if y > 0 {
            self.pos += yf * dt;
        } else {
            self.neg -= yf * dt;
        }
        self.y += yf * dt;
        self.y_sq += yf * yf * dt;
        self.z += zf * dt;
        self.z_sq += zf * zf * dt;
        self.gap += gap as f64 * dt;
        self.max_gap = self.max_gap.max(gap);
        if let Some(h) = self.histogram.as_mut() {
            h.add(y, dt);
        }
    }

    fn finish(self, stream_id: u64, window: f64, event_count: u64) -> ReplicationRecord {
        ReplicationRecord {
            stream_id,
            avg_cost: self.cost / window,
            mean_pos: self.pos / window,
            mean_neg: self.neg / window,
            mean_y: self.y / window,
            mean_y_sq: self.y_sq / window,
            mean_z: self.z / window,
            mean_z_sq: self.z_sq / window,
            mean_gap: self.gap / window,
            max_gap: self.max_gap,
            event_count,
            histogram: self.histogram,
        }
    }
}

/// Demand and lead-time streams are kept apart so that runs differing only
/// in policy see identical demand paths.
fn replication_streams(seed: u64, stream_id: u64) -> (RngStream, RngStream) {
    (
        RngStream::new(seed, 2 * stream_id),
        RngStream::new(seed, 2 * stream_id + 1),
    )
}

/// Simulates one sample path of the actual system under the configured policy.
pub fn run_replication(cfg: &SimConfig, stream_id: u64) -> Result<ReplicationRecord> {
    cfg.validate()?;
    let params = &cfg.policy;
    let sys = &cfg.sys;
    let (mut demand_rng, mut lead_rng) = replication_streams(cfg.base_seed, stream_id);
    let budget = cfg.event_budget();

    let (mut state, _) = SystemState::initialize(params, sys, &mut lead_rng);
    state.calendar.schedule(Event {
        time: exp_interarrival(sys.r(), &mut demand_rng),
        kind: EventKind::DemandArrival,
    });

    let mut acc = Integrals::new(cfg.record_histogram);
    let mut gap = state.gap(params);
    let mut last = 0.0;
    let mut events = 0u64;
    loop {
        let next = state
            .calendar
            .peek()
            .ok_or_else(|| Error::Fault("event calendar ran empty".into()))?;
        if next.time >= cfg.horizon {
            acc.add(cfg, last, cfg.horizon, state.y, state.z, gap);
            break;
        }
        acc.add(cfg, last, next.time, state.y, state.z, gap);

        let event = state.pop_event().expect("peeked event");
        apply_event(&mut state, event, params, sys, &mut lead_rng)?;
        if event.kind == EventKind::DemandArrival {
            state.calendar.schedule(Event {
                time: event.time + exp_interarrival(sys.r(), &mut demand_rng),
                kind: EventKind::DemandArrival,
            });
        }
        gap = state.gap(params);
        if gap < 0 {
            return Err(Error::Fault(format!(
                "negative gap {gap} at t={} (y={}, z={})",
                event.time, state.y, state.z
            )));
        }
        last = event.time;
        events += 1;
        if events > budget {
            return Err(Error::Fault(format!(
                "event budget {budget} exhausted before the horizon"
            )));
        }
    }
    Ok(acc.finish(stream_id, cfg.window(), events))
}

/// Simulates the artificial process, a birth-death chain in net inventory
/// with birth rate `beta * ceil(T(y))` and death rate `r`. Only valid for
/// exponential lead times.
pub fn run_artificial_replication(cfg: &SimConfig, stream_id: u64) -> Result<ReplicationRecord> {
    cfg.validate()?;
    let params = &cfg.policy;
    let sys = &cfg.sys;
    if !sys.leadtime().is_exponential() {
        return Err(Error::Unsupported(format!(
            "the artificial process needs exponential lead times, got {}",
            sys.leadtime().label()
        )));
    }
    let (mut rng, _) = replication_streams(cfg.base_seed, stream_id);
    let budget = cfg.event_budget();
    let (beta, r) = (sys.beta(), sys.r());

    let mut acc = Integrals::new(cfg.record_histogram);
    let mut y: i64 = 0;
    let mut t = 0.0;
    let mut events = 0u64;
    loop {
        let level = params.target_level(y);
        let up = beta * level as f64;
        let total = up + r;
        let next = t + exp_interarrival(total, &mut rng);
        acc.add(cfg, t, next, y, level as u64, 0);
        if next >= cfg.horizon {
            break;
        }
        if rng.uniform() * total < up {
            y += 1;
        } else {
            y -= 1;
        }
        t = next;
        events += 1;
        if events > budget {
            return Err(Error::Fault(format!(
                "event budget {budget} exhausted before the horizon"
            )));
        }
    }
    Ok(acc.finish(stream_id, cfg.window(), events))
}

/// Sample mean and its standard error across replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_samples(xs: impl IntoIterator<Item = f64>) -> Self {
        let xs: Vec<f64> = xs.into_iter().collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let se = if xs.len() > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            f64::NAN
        };
        Self { mean, se }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub replications: usize,
    pub avg_cost: Estimate,
    pub mean_pos: Estimate,
    pub mean_neg: Estimate,
    pub mean_y: Estimate,
    pub mean_z: Estimate,
    pub mean_gap: Estimate,
    /// Largest gap seen in any replication's window.
    pub max_gap: i64,
    /// Standard deviation of `Y` under the pooled time-weighted distribution.
    pub std_y: f64,
    /// Variance of `Z` under the pooled time-weighted distribution.
    pub var_z: f64,
    pub events: u64,
}

impl SimSummary {
    pub fn from_records(records: &[ReplicationRecord]) -> Self {
        let est = |f: fn(&ReplicationRecord) -> f64| Estimate::from_samples(records.iter().map(f));
        let n = records.len() as f64;
        let pooled = |m1: fn(&ReplicationRecord) -> f64, m2: fn(&ReplicationRecord) -> f64| {
            let first = records.iter().map(m1).sum::<f64>() / n;
            let second = records.iter().map(m2).sum::<f64>() / n;
            (second - first * first).max(0.0)
        };
        Self {
            replications: records.len(),
            avg_cost: est(|r| r.avg_cost),
            mean_pos: est(|r| r.mean_pos),
            mean_neg: est(|r| r.mean_neg),
            mean_y: est(|r| r.mean_y),
            mean_z: est(|r| r.mean_z),
            mean_gap: est(|r| r.mean_gap),
            max_gap: records.iter().map(|r| r.max_gap).max().unwrap_or(0),
            std_y: pooled(|r| r.mean_y, |r| r.mean_y_sq).sqrt(),
            var_z: pooled(|r| r.mean_z, |r| r.mean_z_sq),
            events: records.iter().map(|r| r.event_count).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub records: Vec<ReplicationRecord>,
    pub summary: SimSummary,
    /// Pooled histogram over all replications, when recorded.
    #[serde(skip)]
    pub histogram: Option<NetInventoryHistogram>,
}

impl SimResult {
    fn from_records(records: Vec<ReplicationRecord>) -> Self {
        let summary = SimSummary::from_records(&records);
        let histogram = records.iter().try_fold(NetInventoryHistogram::default(), |mut acc, r| {
            acc.merge(r.histogram.as_ref()?);
            Some(acc)
        });
        Self {
            records,
            summary,
            histogram,
        }
    }
}

fn run_all(
    cfg: &SimConfig,
    one: fn(&SimConfig, u64) -> Result<ReplicationRecord>,
) -> Result<SimResult> {
    cfg.validate()?;
    let records = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|id| one(cfg, id))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimResult::from_records(records))
}

/// Runs replications `0..n` in parallel and aggregates them in stream order.
pub fn run_experiment(cfg: &SimConfig) -> Result<SimResult> {
    run_all(cfg, run_replication)
}

/// Like [`run_experiment`] for the artificial process.
pub fn simulate_artificial(cfg: &SimConfig) -> Result<SimResult> {
    run_all(cfg, run_artificial_replication)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rngdist::LeadTimeSpec;

    fn cfg(lt: LeadTimeSpec, mean_demand: f64, policy: impl Fn(&SystemParams) -> GbsParams) -> SimConfig {
        let sys = SystemParams::from_mean_demand(mean_demand, lt).unwrap();
        let p = policy(&sys);
        SimConfig::new(sys, CostParams::new(1.0, 1.0).unwrap(), p)
    }

    #[test]
    fn histogram_grows_both_ways() {
        let mut h = NetInventoryHistogram::default();
        h.add(0, 1.0);
        h.add(-3, 2.0);
        h.add(2, 0.5);
        h.add(0, 1.0);
        assert_eq!(h.mass_at(0), 2.0);
        assert_eq!(h.mass_at(-3), 2.0);
        assert_eq!(h.mass_at(2), 0.5);
        assert_eq!(h.mass_at(5), 0.0);
        assert_eq!(h.total(), 4.5);
    }

    #[test]
    fn window_clipping() {
        let c = cfg(LeadTimeSpec::exponential(2.0).unwrap(), 20.0, |s| GbsParams::cbs(20, s))
            .with_protocol(10.0, 4.0, 1);
        let mut acc = Integrals::new(true);
        acc.add(&c, 3.0, 5.0, 2, 0, 0);
        acc.add(&c, 5.0, 12.0, -1, 0, 0);
        assert!((acc.pos - 2.0).abs() < 1e-12);
        assert!((acc.neg - 5.0).abs() < 1e-12);
        assert!((acc.histogram.unwrap().total() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_leadtime_conserves_position() {
        let c = cfg(LeadTimeSpec::deterministic(2.0).unwrap(), 20.0, |s| GbsParams::cbs(20, s))
            .with_protocol(100.0, 0.0, 1)
            .with_histogram();
        let rec = run_replication(&c, 0).unwrap();
        assert_eq!(rec.max_gap, 0);
        assert_eq!(rec.mean_gap, 0.0);
        // y + z == 20 at all times, so E[y] + E[z] == 20 exactly.
        assert!((rec.mean_y + rec.mean_z - 20.0).abs() < 1e-9);
    }

    #[test]
    fn replication_is_reproducible() {
        let c = cfg(LeadTimeSpec::pareto(3.0, 0.25).unwrap(), 20.0, |s| {
            GbsParams::new(2.4, None, 0.0, s).unwrap()
        })
        .with_protocol(200.0, 50.0, 1);
        assert_eq!(run_replication(&c, 3).unwrap(), run_replication(&c, 3).unwrap());
        assert_ne!(run_replication(&c, 3).unwrap(), run_replication(&c, 4).unwrap());
    }

    #[test]
    fn invalid_protocol_rejected() {
        let c = cfg(LeadTimeSpec::exponential(2.0).unwrap(), 20.0, |s| GbsParams::cbs(20, s));
        assert!(c.with_protocol(100.0, 100.0, 1).validate().is_err());
        assert!(c.with_protocol(100.0, 10.0, 0).validate().is_err());
        assert!(c.with_protocol(100.0, -1.0, 3).validate().is_err());
    }

    #[test]
    fn artificial_rejects_non_exponential() {
        let c = cfg(LeadTimeSpec::uniform(0.0, 4.0).unwrap(), 20.0, |s| GbsParams::cbs(20, s));
        assert!(matches!(
            run_artificial_replication(&c, 0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn event_budget_is_enforced() {
        let mut c = cfg(LeadTimeSpec::exponential(2.0).unwrap(), 20.0, |s| GbsParams::cbs(20, s))
            .with_protocol(100.0, 0.0, 1);
        c.max_events = Some(10);
        assert!(matches!(run_replication(&c, 0), Err(Error::Fault(_))));
    }

    #[test]
    fn standard_error_formula() {
        let e = Estimate::from_samples([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((e.se - sd / 2.0).abs() < 1e-15);
    }
}

//! Generalized base-stock ordering logic.
//!
//! At every customer or item arrival the net inventory `y` and the
//! in-transit count `z` are updated, the truncated target `T(y)` is
//! recomputed, and `max(ceil(T - z), 0)` units are ordered. Orders can
//! never be cancelled, so after each decision `z >= ceil(T)`; the excess
//! `D = z - ceil(T)` is the gap. Under [`TargetRounding::Floor`] every
//! `ceil(T)` above reads `floor(T)`.

use crate::error::{Error, Result};
use crate::model::{Calendar, Event, EventKind, GbsParams, SystemParams};
#[cfg(doc)]
use crate::model::TargetRounding;
use crate::rngdist::{sample_leadtime, RngStream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyDecision {
    /// Untruncated target `X`.
    pub target_x: f64,
    /// Truncated target `T = min(max(X, 0), X* + f)`.
    pub target_t: f64,
    /// Units ordered.
    pub order_qty: u64,
}

/// The ordering decision at net inventory `y` with `z` units in transit.
#[inline]
pub fn gbs_decide(y: i64, z: u64, params: &GbsParams) -> PolicyDecision {
    let (target_x, target_t) = params.targets(y);
    let need = params.rounding().apply(target_t) as i64 - z as i64;
    PolicyDecision {
        target_x,
        target_t,
        order_qty: need.max(0) as u64,
    }
}

/// State of one replication: net inventory, in-transit count, clock and
/// the pending events.
#[derive(Debug, Clone)]
pub struct SystemState {
    pub y: i64,
    pub z: u64,
    pub clock: f64,
    pub calendar: Calendar,
}

impl SystemState {
    /// An empty system at time zero with nothing scheduled.
    pub fn empty() -> Self {
        Self {
            y: 0,
            z: 0,
            clock: 0.0,
            calendar: Calendar::new(),
        }
    }

    /// Starts from an empty system and immediately orders up to `ceil(T(0))`.
    pub fn initialize(
        params: &GbsParams,
        sys: &SystemParams,
        rng: &mut RngStream,
    ) -> (Self, PolicyDecision) {
        let mut state = Self::empty();
        let decision = gbs_decide(state.y, state.z, params);
        state.place_orders(decision.order_qty, sys, rng);
        (state, decision)
    }

    /// Gap `z - ceil(T(y))`, or `z - floor(T(y))` under floor rounding.
    #[inline]
    pub fn gap(&self, params: &GbsParams) -> i64 {
        self.z as i64 - params.target_level(self.y)
    }

    /// Removes and returns the earliest scheduled event.
    pub fn pop_event(&mut self) -> Option<Event> {
        self.calendar.pop()
    }

    fn place_orders(&mut self, qty: u64, sys: &SystemParams, rng: &mut RngStream) {
        for _ in 0..qty {
            let lead = sample_leadtime(sys.leadtime(), rng);
            self.calendar.schedule(Event {
                time: self.clock + lead,
                kind: EventKind::ItemArrival,
            });
        }
        self.z += qty;
    }
}

/// Applies one arrival, already removed from the calendar, then re-orders.
///
/// Demand arrivals are not rescheduled here; the caller owns the demand
/// process.
pub fn apply_event(
    state: &mut SystemState,
    event: Event,
    params: &GbsParams,
    sys: &SystemParams,
    rng: &mut RngStream,
) -> Result<PolicyDecision> {
    if event.time < state.clock {
        return Err(Error::Fault(format!(
            "event at {} precedes clock {}",
            event.time, state.clock
        )));
    }
    state.clock = event.time;
    match event.kind {
        EventKind::DemandArrival => state.y -= 1,
        EventKind::ItemArrival => {
            if state.z == 0 {
                return Err(Error::Fault("item arrival with an empty pipeline".into()));
            }
            state.y += 1;
            state.z -= 1;
        }
    }
    let decision = gbs_decide(state.y, state.z, params);
    state.place_orders(decision.order_qty, sys, rng);
    Ok(decision)
}

/// Birth and death rates `(up, down)` of the artificial process at `y`.
///
/// In the artificial process in-transit units can be discarded, so
/// `Z = ceil(T(y))` always; with exponential lead times items arrive at
/// rate `beta * ceil(T(y))` and customers at rate `r`.
pub fn artificial_rates(y: i64, params: &GbsParams, sys: &SystemParams) -> Result<(f64, f64)> {
    if !sys.leadtime().is_exponential() {
        return Err(Error::Unsupported(format!(
            "the artificial process needs exponential lead times, got {}",
            sys.leadtime().label()
        )));
    }
    Ok((sys.beta() * params.target_level(y) as f64, sys.r()))
}

//! Truncated continuous-time MDP for exponential lead times.
//!
//! State `(y, z)`: net inventory and units in transit. On entering a state
//! the controller orders `a >= 0` units, keeping the inventory position in
//! `[I_m, I_M]`. Customers then arrive at rate `r` (zero at the backlog floor
//! `y_floor`) and items at rate `beta (z + a)`. The minimum long-run average
//! cost is found by relative value iteration on the uniformized chain.

use std::collections::VecDeque;
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::{instantaneous_cost, CostParams};

/// A finite average-cost continuous-time MDP.
pub trait AverageCostModel: Sync {
    fn num_states(&self) -> usize;

    /// Action identifiers available in state `s`; never empty.
    fn actions(&self, s: usize) -> Range<u32>;

    /// Cost rate plus the generator applied to `v`:
    /// `c(s, a) + sum_j q(j | s, a) (v[j] - v[s])`.
    fn action_value(&self, s: usize, a: u32, v: &[f64]) -> f64;

    /// Largest total outgoing rate over all state-action pairs.
    fn max_rate(&self) -> f64;

    /// Minimizing action and its value; ties go to the smaller action.
    fn best_action(&self, s: usize, v: &[f64]) -> (u32, f64) {
        scan_actions(self, s, v)
    }

    /// Index of the state pinned to zero bias.
    fn reference_state(&self) -> usize {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RviOptions {
    /// Stop once the gain is bracketed to within this width (cost units).
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RviOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdpSolution {
    /// Minimum long-run average cost.
    pub g: f64,
    /// Bias values, zero at the reference state.
    pub bias: Vec<f64>,
    /// Greedy (optimal) action per state.
    pub action: Vec<u32>,
    pub iterations: usize,
    /// Final width of the gain bracket.
    pub span: f64,
    /// Uniformization rate.
    pub lambda: f64,
}

/// Ties within this relative margin go to the smaller action.
const TIE_EPS: f64 = 1e-12;

fn scan_actions<M: AverageCostModel + ?Sized>(model: &M, s: usize, v: &[f64]) -> (u32, f64) {
    let mut actions = model.actions(s);
    let first = actions.next().expect("nonempty action set");
    let mut best = (first, model.action_value(s, first, v));
    for a in actions {
        let q = model.action_value(s, a, v);
        if q < best.1 - TIE_EPS * best.1.abs().max(1.0) {
            best = (a, q);
        }
    }
    best
}

/// Relative value iteration on the uniformized chain.
pub fn solve_rvi<M: AverageCostModel + ?Sized>(model: &M, opts: &RviOptions) -> Result<MdpSolution> {
    solve_rvi_from(model, vec![0.0; model.num_states()], opts)
}

/// [`solve_rvi`] starting from the value vector `v0`.
pub fn solve_rvi_from<M: AverageCostModel + ?Sized>(
    model: &M,
    v0: Vec<f64>,
    opts: &RviOptions,
) -> Result<MdpSolution> {
    let n = model.num_states();
    if n == 0 {
        return Err(invalid("model has no states"));
    }
    if v0.len() != n {
        return Err(invalid("initial value vector has the wrong length"));
    }
    for s in 0..n {
        if model.actions(s).is_empty() {
            return Err(invalid(format!("state {s} has no feasible action")));
        }
    }
    let lambda = {
        let m = model.max_rate();
        if m > 0.0 {
            m
        } else {
            1.0
        }
    };
    let reference = model.reference_state();

    let mut v = v0;
    let mut next = vec![0.0; n];
    let mut span = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        next.par_iter_mut().enumerate().for_each(|(s, out)| {
            *out = v[s] + model.best_action(s, &v).1 / lambda;
        });
        let (lo, hi) = next
            .par_iter()
            .zip(v.par_iter())
            .map(|(a, b)| {
                let d = a - b;
                (d, d)
            })
            .reduce(
                || (f64::INFINITY, f64::NEG_INFINITY),
                |x, y| (x.0.min(y.0), x.1.max(y.1)),
            );
        span = lambda * (hi - lo);
        let shift = next[reference];
        next.par_iter_mut().for_each(|x| *x -= shift);
        std::mem::swap(&mut v, &mut next);
        if span <= opts.tol {
            let action = (0..n)
                .into_par_iter()
                .map(|s| model.best_action(s, &v).0)
                .collect();
            return Ok(MdpSolution {
                g: lambda * 0.5 * (lo + hi),
                bias: v,
                action,
                iterations: iter,
                span,
                lambda,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        span,
    })
}

/// Truncation of the inventory MDP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MdpSpec {
    pub r: f64,
    pub beta: f64,
    pub cost: CostParams,
    /// Lowest inventory position after ordering, `I_m`.
    pub i_min: i64,
    /// Highest inventory position after ordering, `I_M`.
    pub i_max: i64,
    /// Backlog floor where demand stops.
    pub y_floor: i64,
}

/// Truncation multipliers: `I_M = X* + k_max sqrt(X*)`,
/// `I_m = (X* - k_min sqrt(X*))^+`, `y_floor = -k_floor sqrt(X*)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kappa {
    pub k_max: f64,
    pub k_min: f64,
    pub k_floor: f64,
}

impl Kappa {
    pub fn uniform(k: f64) -> Self {
        Self {
            k_max: k,
            k_min: k,
            k_floor: k,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            k_max: self.k_max * factor,
            k_min: self.k_min * factor,
            k_floor: self.k_floor * factor,
        }
    }
}

impl Default for Kappa {
    fn default() -> Self {
        Self::uniform(5.0)
    }
}

impl MdpSpec {
    pub fn new(r: f64, beta: f64, cost: CostParams, i_min: i64, i_max: i64, y_floor: i64) -> Result<Self> {
        if !(r > 0.0 && beta > 0.0 && r.is_finite() && beta.is_finite()) {
            return Err(invalid(format!("need r > 0 and beta > 0, got r={r} beta={beta}")));
        }
        cost.validate()?;
        if !(0 <= i_min && i_min <= i_max) {
            return Err(invalid(format!("need 0 <= I_m <= I_M, got I_m={i_min} I_M={i_max}")));
        }
        if y_floor > i_max {
            return Err(invalid(format!("backlog floor {y_floor} exceeds I_M={i_max}")));
        }
        Ok(Self {
            r,
            beta,
            cost,
            i_min,
            i_max,
            y_floor,
        })
    }

    /// Truncation from multipliers of `sqrt(r / beta)`, rounded outward.
    pub fn from_kappa(r: f64, beta: f64, cost: CostParams, kappa: Kappa) -> Result<Self> {
        let m = r / beta;
        let s = m.sqrt();
        let i_max = (m + kappa.k_max * s).ceil() as i64;
        let i_min = (m - kappa.k_min * s).max(0.0).floor() as i64;
        let y_floor = -((kappa.k_floor * s).ceil() as i64).max(1);
        Self::new(r, beta, cost, i_min, i_max, y_floor)
    }
}

/// The enumerated inventory MDP.
///
/// States are `(y, z)` with `y_floor <= y <= I_M`, `z >= 0`, `y + z <= I_M`,
/// stored row by row in `y` with `z` contiguous.
#[derive(Debug, Clone)]
pub struct InventoryMdp {
    spec: MdpSpec,
    /// First state index of each `y` row, plus a final sentinel.
    row_start: Vec<usize>,
    states: Vec<(i64, i64)>,
    action_count: usize,
}

impl InventoryMdp {
    pub fn build(spec: MdpSpec) -> Result<Self> {
        let mut row_start = Vec::new();
        let mut states = Vec::new();
        let mut action_count = 0usize;
        for y in spec.y_floor..=spec.i_max {
            row_start.push(states.len());
            for z in 0..=(spec.i_max - y) {
                states.push((y, z));
                let (lo, hi) = Self::action_bounds(&spec, y, z);
                if lo > hi {
                    return Err(invalid(format!("state ({y}, {z}) has no feasible order")));
                }
                action_count += (hi - lo + 1) as usize;
            }
        }
        row_start.push(states.len());
        Ok(Self {
            spec,
            row_start,
            states,
            action_count,
        })
    }

    fn action_bounds(spec: &MdpSpec, y: i64, z: i64) -> (i64, i64) {
        ((spec.i_min - y - z).max(0), spec.i_max - y - z)
    }

    pub fn spec(&self) -> &MdpSpec {
        &self.spec
    }

    /// Index of `(y, z)`, if it is a state.
    pub fn index(&self, y: i64, z: i64) -> Option<usize> {
        if y < self.spec.y_floor || y > self.spec.i_max || z < 0 || y + z > self.spec.i_max {
            return None;
        }
        Some(self.row_start[(y - self.spec.y_floor) as usize] + z as usize)
    }

    #[inline]
    fn idx(&self, y: i64, z: i64) -> usize {
        self.row_start[(y - self.spec.y_floor) as usize] + z as usize
    }

    pub fn state(&self, s: usize) -> (i64, i64) {
        self.states[s]
    }

    /// Feasible order quantities at `(y, z)`.
    pub fn order_range(&self, y: i64, z: i64) -> (i64, i64) {
        Self::action_bounds(&self.spec, y, z)
    }

    /// Total number of (state, action) pairs.
    pub fn action_count(&self) -> usize {
        self.action_count
    }

    #[inline]
    fn demand_rate(&self, y: i64) -> f64 {
        if y == self.spec.y_floor {
            0.0
        } else {
            self.spec.r
        }
    }

    /// Outgoing transitions `[(demand target, rate), (item target, rate)]`
    /// when ordering `qty` units at state `s`. Zero-rate entries carry `None`.
    pub fn transitions(&self, s: usize, qty: i64) -> [(Option<usize>, f64); 2] {
        let (y, z) = self.states[s];
        let w = z + qty;
        let rd = self.demand_rate(y);
        let ri = self.spec.beta * w as f64;
        [
            ((rd > 0.0).then(|| self.idx(y - 1, w)), rd),
            ((w > 0).then(|| self.idx(y + 1, w - 1)), ri),
        ]
    }

    pub fn cost_rate(&self, s: usize) -> f64 {
        instantaneous_cost(self.states[s].0, &self.spec.cost)
    }

    /// Order quantity encoded by action id `a` at state `s`.
    pub fn order_qty(&self, s: usize, a: u32) -> i64 {
        let (y, z) = self.states[s];
        Self::action_bounds(&self.spec, y, z).0 + a as i64
    }
}

impl AverageCostModel for InventoryMdp {
    fn num_states(&self) -> usize {
        self.states.len()
    }

    fn actions(&self, s: usize) -> Range<u32> {
        let (y, z) = self.states[s];
        let (lo, hi) = Self::action_bounds(&self.spec, y, z);
        0..(hi - lo + 1) as u32
    }

    #[inline]
    fn action_value(&self, s: usize, a: u32, v: &[f64]) -> f64 {
        let (y, z) = self.states[s];
        let w = z + Self::action_bounds(&self.spec, y, z).0 + a as i64;
        let here = v[s];
        let mut val = instantaneous_cost(y, &self.spec.cost);
        if y != self.spec.y_floor {
            val += self.spec.r * (v[self.idx(y - 1, w)] - here);
        }
        if w > 0 {
            val += self.spec.beta * w as f64 * (v[self.idx(y + 1, w - 1)] - here);
        }
        val
    }

    fn best_action(&self, s: usize, v: &[f64]) -> (u32, f64) {
        let spec = &self.spec;
        let (y, z) = self.states[s];
        let (lo, hi) = Self::action_bounds(spec, y, z);
        let here = v[s];
        let c = instantaneous_cost(y, &spec.cost);
        let rd = self.demand_rate(y);
        let row = |yy: i64| {
            let k = (yy - spec.y_floor) as usize;
            &v[self.row_start[k]..self.row_start[k + 1]]
        };
        // Row y - 1 is only read when demand is possible.
        let down: &[f64] = if rd > 0.0 { row(y - 1) } else { &[] };
        let up: &[f64] = if y < spec.i_max { row(y + 1) } else { &[] };
        let value = |w: usize| {
            let mut val = c;
            if rd > 0.0 {
                val += rd * (down[w] - here);
            }
            if w > 0 {
                val += spec.beta * w as f64 * (up[w - 1] - here);
            }
            val
        };
        let w0 = (z + lo) as usize;
        let mut best = (0u32, value(w0));
        for (a, w) in (w0 + 1..=(z + hi) as usize).enumerate() {
            let q = value(w);
            if q < best.1 - TIE_EPS * best.1.abs().max(1.0) {
                best = (a as u32 + 1, q);
            }
        }
        best
    }

    fn max_rate(&self) -> f64 {
        // Position is at most I_M, so z + a <= I_M - y; the largest pipeline
        // sits at the backlog floor, where demand is switched off.
        let spec = &self.spec;
        let at_floor = spec.beta * (spec.i_max - spec.y_floor) as f64;
        let above = if spec.y_floor < spec.i_max {
            spec.r + spec.beta * (spec.i_max - spec.y_floor - 1) as f64
        } else {
            0.0
        };
        at_floor.max(above)
    }

    fn reference_state(&self) -> usize {
        self.idx(self.spec.i_min, 0)
    }
}

/// Solved inventory MDP with lookups by `(y, z)`.
#[derive(Debug, Clone)]
pub struct InventorySolution {
    pub model: InventoryMdp,
    pub solution: MdpSolution,
}

impl InventorySolution {
    pub fn g(&self) -> f64 {
        self.solution.g
    }

    pub fn bias_at(&self, y: i64, z: i64) -> Option<f64> {
        self.model.index(y, z).map(|s| self.solution.bias[s])
    }

    /// Optimal order quantity at `(y, z)`.
    pub fn order_at(&self, y: i64, z: i64) -> Option<i64> {
        self.model
            .index(y, z)
            .map(|s| self.model.order_qty(s, self.solution.action[s]))
    }
}

/// Builds and solves the inventory MDP.
pub fn solve_inventory(spec: MdpSpec, opts: &RviOptions) -> Result<InventorySolution> {
    let model = InventoryMdp::build(spec)?;
    let solution = solve_rvi(&model, opts)?;
    Ok(InventorySolution { model, solution })
}

/// Result of the truncation-refinement loop in [`solve_auto`].
#[derive(Debug, Clone)]
pub struct AutoSolution {
    pub kappa: Kappa,
    pub solved: InventorySolution,
    /// `(kappa multiplier, g)` for every truncation tried.
    pub history: Vec<(f64, f64)>,
}

/// Solves with `kappa`, then doubles all multipliers until the gain moves
/// by at most `stable_tol`. Each larger model starts from the previous bias.
pub fn solve_auto(
    r: f64,
    beta: f64,
    cost: CostParams,
    kappa: Kappa,
    stable_tol: f64,
    max_doublings: usize,
    opts: &RviOptions,
) -> Result<AutoSolution> {
    let mut factor = 1.0;
    let mut current = solve_inventory(MdpSpec::from_kappa(r, beta, cost, kappa)?, opts)?;
    let mut history = vec![(factor, current.g())];
    for _ in 0..max_doublings {
        factor *= 2.0;
        let spec = MdpSpec::from_kappa(r, beta, cost, kappa.scaled(factor))?;
        let model = InventoryMdp::build(spec)?;
        let v0 = (0..model.num_states())
            .map(|s| {
                let (y, z) = model.state(s);
                current.bias_at(y, z).unwrap_or(0.0)
            })
            .collect();
        let solution = solve_rvi_from(&model, v0, opts)?;
        let next = InventorySolution { model, solution };
        let moved = (next.g() - current.g()).abs();
        history.push((factor, next.g()));
        current = next;
        if moved <= stable_tol {
            return Ok(AutoSolution {
                kappa: kappa.scaled(factor),
                solved: current,
                history,
            });
        }
    }
    Ok(AutoSolution {
        kappa: kappa.scaled(factor),
        solved: current,
        history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TargetPoint {
    pub y: i64,
    /// Optimal post-order in-transit level `z + a*(y, z)` found at the
    /// smallest feasible `z`.
    pub level: i64,
    /// Whether `(y, z)` is visited under the optimal policy for some `z`.
    pub reachable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetCurve {
    pub points: Vec<TargetPoint>,
    /// States where the optimal action is not "order up to level(y)".
    pub violations: Vec<(i64, i64)>,
}

impl TargetCurve {
    pub fn level_at(&self, y: i64) -> Option<i64> {
        self.points.iter().find(|p| p.y == y).map(|p| p.level)
    }

    /// Range of `y` visited under the optimal policy.
    pub fn reachable_range(&self) -> Option<(i64, i64)> {
        let mut it = self.points.iter().filter(|p| p.reachable).map(|p| p.y);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), y| (lo.min(y), hi.max(y))))
    }
}

/// Reads the in-transit target `level(y)` off the optimal action table and
/// checks the order-up-to pattern `z + a*(y, z) = max(level(y), z)`.
pub fn extract_target(sol: &InventorySolution) -> TargetCurve {
    let model = &sol.model;
    let spec = model.spec();
    let reachable = reachable_states(sol);
    let mut points = Vec::new();
    let mut violations = Vec::new();
    for y in spec.y_floor..=spec.i_max {
        let level = sol.order_at(y, 0).expect("(y, 0) is a state");
        let mut row_reachable = false;
        for z in 0..=(spec.i_max - y) {
            let s = model.idx(y, z);
            row_reachable |= reachable[s];
            let post = z + model.order_qty(s, sol.solution.action[s]);
            if post != level.max(z) {
                violations.push((y, z));
            }
        }
        points.push(TargetPoint {
            y,
            level,
            reachable: row_reachable,
        });
    }
    TargetCurve { points, violations }
}

/// States reachable from the reference state under the optimal policy.
fn reachable_states(sol: &InventorySolution) -> Vec<bool> {
    let model = &sol.model;
    let mut seen = vec![false; model.num_states()];
    let start = model.reference_state();
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(s) = queue.pop_front() {
        let qty = model.order_qty(s, sol.solution.action[s]);
        for (next, rate) in model.transitions(s, qty) {
            if let Some(t) = next.filter(|_| rate > 0.0) {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
    }
    seen
}

/// Size of an exported LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LpStats {
    pub variables: usize,
    pub constraints: usize,
}

/// LP variable name for the bias of `(y, z)`; `y` is offset by `-y_floor`
/// so names stay nonnegative.
pub fn lp_var_name(spec: &MdpSpec, y: i64, z: i64) -> String {
    format!("v_{}_{}", y - spec.y_floor, z)
}

/// Writes the average-cost LP in CPLEX LP text format.
///
/// Variables are the gain `g` and one bias per state; constraints are one
/// per (state, action) pair, multiplied through by the total event rate
/// `q = r_y + beta (z + a)`:
/// `q v(y,z) - r_y v(y-1,z+a) - beta (z+a) v(y+1,z+a-1) + g <= c(y)`,
/// plus the normalization `v(I_m, 0) = 0`.
pub fn write_lp<W: Write>(model: &InventoryMdp, mut out: W) -> Result<LpStats> {
    let spec = model.spec();
    let name = |s: usize| {
        let (y, z) = model.state(s);
        lp_var_name(spec, y, z)
    };
    writeln!(out, "\\ Average-cost LP for the truncated inventory MDP")?;
    writeln!(
        out,
        "\\ r={} beta={} h={} theta={} I_m={} I_M={} y_floor={}",
        spec.r, spec.beta, spec.cost.h, spec.cost.theta, spec.i_min, spec.i_max, spec.y_floor
    )?;
    writeln!(out, "Maximize")?;
    writeln!(out, " obj: g")?;
    writeln!(out, "Subject To")?;
    let mut constraints = 0usize;
    for s in 0..model.num_states() {
        let (y, z) = model.state(s);
        let (lo, hi) = model.order_range(y, z);
        let c = model.cost_rate(s);
        for qty in lo..=hi {
            let [(dem, rd), (item, ri)] = model.transitions(s, qty);
            let mut line = format!(" c_{}_{}_{}:", y - spec.y_floor, z, qty);
            let q = rd + ri;
            if q != 0.0 {
                line.push_str(&format!(" {} {}", q, name(s)));
            }
            if let Some(t) = dem {
                line.push_str(&format!(" - {} {}", rd, name(t)));
            }
            if let Some(t) = item {
                line.push_str(&format!(" - {} {}", ri, name(t)));
            }
            line.push_str(&format!(" + g <= {c}"));
            writeln!(out, "{line}")?;
            constraints += 1;
        }
    }
    writeln!(out, " norm: {} = 0", name(model.reference_state()))?;
    constraints += 1;
    writeln!(out, "Bounds")?;
    writeln!(out, " g free")?;
    for s in 0..model.num_states() {
        writeln!(out, " {} free", name(s))?;
    }
    writeln!(out, "End")?;
    Ok(LpStats {
        variables: model.num_states() + 1,
        constraints,
    })
}

/// Writes the LP to `path`.
pub fn export_lp(model: &InventoryMdp, path: &Path) -> Result<LpStats> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    let stats = write_lp(model, &mut w)?;
    w.flush()?;
    Ok(stats)
}

//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::ops::Range;

use leadsim::mdp::AverageCostModel;

/// `erf` from its Maclaurin series; accurate to ~1e-13 for |x| <= 3.
pub fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    for n in 1..200 {
        term *= -x2 / n as f64;
        let add = term / (2 * n + 1) as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

pub fn phi_series(x: f64) -> f64 {
    0.5 * (1.0 + erf_series(x / std::f64::consts::SQRT_2))
}

/// Normal quantile by bisection on the series CDF.
pub fn quantile_bisect(p: f64) -> f64 {
    let (mut lo, mut hi) = (-4.0, 4.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi_series(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Classical RK4 on `Y' = beta U`, `U' = -delta (Y + U) - beta U`.
pub fn rk4_pout(y0: f64, u0: f64, beta: f64, delta: f64, t: f64, steps: usize) -> (f64, f64) {
    let f = |y: f64, u: f64| (beta * u, -delta * (y + u) - beta * u);
    let h = t / steps as f64;
    let (mut y, mut u) = (y0, u0);
    for _ in 0..steps {
        let k1 = f(y, u);
        let k2 = f(y + 0.5 * h * k1.0, u + 0.5 * h * k1.1);
        let k3 = f(y + 0.5 * h * k2.0, u + 0.5 * h * k2.1);
        let k4 = f(y + h * k3.0, u + h * k3.1);
        y += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        u += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (y, u)
}

/// Three states on a cycle `0 -> 1 -> 2 -> 0`. In state `i` action `a`
/// leaves at `rates[i][a]` and costs `costs[i][a]` per unit time.
pub struct Cycle3 {
    pub rates: [Vec<f64>; 3],
    pub costs: [Vec<f64>; 3],
}

impl Cycle3 {
    /// Average cost of a fixed action choice: the chain spends time
    /// proportional to `1 / rate` in each state.
    pub fn policy_gain(&self, choice: [usize; 3]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..3 {
            let rate = self.rates[i][choice[i]];
            num += self.costs[i][choice[i]] / rate;
            den += 1.0 / rate;
        }
        num / den
    }

    pub fn best_gain(&self) -> f64 {
        let mut best = f64::INFINITY;
        for a in 0..self.rates[0].len() {
            for b in 0..self.rates[1].len() {
                for c in 0..self.rates[2].len() {
                    best = best.min(self.policy_gain([a, b, c]));
                }
            }
        }
        best
    }
}

impl AverageCostModel for Cycle3 {
    fn num_states(&self) -> usize {
        3
    }

    fn actions(&self, s: usize) -> Range<u32> {
        0..self.rates[s].len() as u32
    }

    fn action_value(&self, s: usize, a: u32, v: &[f64]) -> f64 {
        let a = a as usize;
        self.costs[s][a] + self.rates[s][a] * (v[(s + 1) % 3] - v[s])
    }

    fn max_rate(&self) -> f64 {
        self.rates.iter().flatten().cloned().fold(0.0, f64::max)
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Stationary law of an irreducible generator given as `(from, to, rate)`.
pub fn ctmc_stationary(n: usize, edges: &[(usize, usize, f64)]) -> Option<Vec<f64>> {
    // pi Q = 0 with the last balance equation replaced by sum pi = 1.
    let mut a = vec![vec![0.0; n]; n];
    for &(i, j, q) in edges {
        if i != j {
            a[j][i] += q;
            a[i][i] -= q;
        }
    }
    for k in 0..n {
        a[n - 1][k] = 1.0;
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    solve_dense(a, b)
}

/// Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

mod common;

use leadsim::analysis::{
    artificial_stationary, fluid_trajectory, gamma_grid, gamma_search, gap_row, gap_summary, growth_truncation,
    loglog_fit, normal_limit_cost, FluidPolicy,
};
use leadsim::cli::presets;
use leadsim::model::{choose_xstar, CostParams, GbsParams, SystemParams, TargetRounding};
use leadsim::rngdist::LeadTimeSpec;
use leadsim::sim::{run_experiment, SimConfig};

fn exp_sys(mean_demand: f64) -> SystemParams {
    SystemParams::from_mean_demand(mean_demand, LeadTimeSpec::exponential(2.0).unwrap()).unwrap()
}

fn unit() -> CostParams {
    CostParams::new(1.0, 1.0).unwrap()
}

#[test]
fn stationary_law_matches_generator_solve() {
    for (m, gamma, x) in [(20.0, 2.4, 0.0), (10.0, 1.0, 1.5), (40.0, 3.7, -2.2)] {
        let sys = exp_sys(m);
        let p = GbsParams::new(gamma, None, x, &sys).unwrap();
        let dist = artificial_stationary(&p, &sys).unwrap();
        // Birth-death chain on a wide window, solved as a linear system.
        let lo = dist.min_y - 5;
        let hi = dist.max_y();
        let n = (hi - lo + 1) as usize;
        let mut edges = Vec::new();
        for i in 0..n {
            let y = lo + i as i64;
            if i + 1 < n {
                edges.push((i, i + 1, sys.beta() * p.target_level(y) as f64));
            }
            if i > 0 {
                edges.push((i, i - 1, sys.r()));
            }
        }
        let pi = common::ctmc_stationary(n, &edges).unwrap();
        for (i, want) in pi.iter().enumerate() {
            let got = dist.prob(lo + i as i64);
            assert!((got - want).abs() < 1e-10, "m={m} y={}: {got} vs {want}", lo + i as i64);
        }
        let mean: f64 = pi.iter().enumerate().map(|(i, q)| (lo + i as i64) as f64 * q).sum();
        assert!((dist.mean - mean).abs() < 1e-8);
    }
}

#[test]
fn stationary_needs_exponential_leadtimes() {
    let sys = SystemParams::from_mean_demand(20.0, LeadTimeSpec::uniform(0.0, 4.0).unwrap()).unwrap();
    let p = GbsParams::new(2.0, None, 0.0, &sys).unwrap();
    assert!(matches!(artificial_stationary(&p, &sys), Err(leadsim::Error::Unsupported(_))));
}

#[test]
fn mean_absolute_inventory_on_diffusion_scale() {
    let sys = exp_sys(1000.0);
    let gamma = 4.0;
    let p = GbsParams::new(gamma, None, 0.0, &sys).unwrap();
    let dist = artificial_stationary(&p, &sys).unwrap();
    let abs_mean: f64 = dist.iter().map(|(y, q)| y.unsigned_abs() as f64 * q).sum();
    let got = abs_mean / sys.r().sqrt();
    let want = 2.0 / (2.0 * std::f64::consts::PI * sys.beta() * gamma).sqrt();
    assert!((got / want - 1.0).abs() < 0.05, "{got} vs {want}");
}

#[test]
fn normal_limit_cost_matches_quadrature() {
    let sys = exp_sys(20.0);
    for (h, theta, gamma, x) in [(1.0, 1.0, 2.4, 0.0), (9.0, 1.0, 2.0, -1.3), (1.0, 9.0, 3.0, 2.0)] {
        let cost = CostParams::new(h, theta).unwrap();
        let sigma = (20.0 / gamma as f64).sqrt();
        let steps = 20_000;
        let w = 20.0 * sigma / steps as f64;
        let quad: f64 = (0..steps)
            .map(|i| {
                let n = -10.0 * sigma + (i as f64 + 0.5) * w;
                let dens = (-0.5 * (n / sigma).powi(2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
                let v = n + x;
                dens * w * if v >= 0.0 { h * v } else { -theta * v }
            })
            .sum();
        let got = normal_limit_cost(&cost, &sys, gamma, x);
        assert!((got - quad).abs() < 1e-6, "{got} vs {quad}");
    }
}

#[test]
fn normal_limit_cost_is_flat_at_xstar() {
    let sys = exp_sys(20.0);
    for (h, theta) in [(1.0, 1.0), (9.0, 1.0), (1.0, 6.0)] {
        let cost = CostParams::new(h, theta).unwrap();
        for gamma in [1.0, 2.4, 5.0] {
            let x = choose_xstar(&cost, &sys, gamma).unwrap();
            let e = 1e-4;
            let d = (normal_limit_cost(&cost, &sys, gamma, x + e) - normal_limit_cost(&cost, &sys, gamma, x - e)) / (2.0 * e);
            assert!(d.abs() < 1e-6, "slope {d}");
            let c0 = normal_limit_cost(&cost, &sys, gamma, x);
            assert!(normal_limit_cost(&cost, &sys, gamma, x + 0.3) > c0);
            assert!(normal_limit_cost(&cost, &sys, gamma, x - 0.3) > c0);
        }
    }
}

#[test]
fn fluid_closed_forms_match_rk4() {
    let beta = 0.5;
    for delta in [0.05, 0.5, 2.0] {
        for (y0, u0) in [(4.0, -1.5), (-3.0, 0.0), (1.0, 7.0)] {
            for i in 0..=40 {
                let t = i as f64 * 0.25;
                let (y, u) = fluid_trajectory(FluidPolicy::Pout { delta }, y0, u0, beta, t).unwrap();
                let (yr, ur) = common::rk4_pout(y0, u0, beta, delta, t, 4000);
                assert!((y - yr).abs() < 1e-8 && (u - ur).abs() < 1e-8, "delta={delta} t={t}");
            }
        }
    }
    for i in 0..=40 {
        let t = i as f64 * 0.25;
        let (y, u) = fluid_trajectory(FluidPolicy::Gbs { gamma: 2.5 }, 3.0, 0.0, beta, t).unwrap();
        // GBS is POUT with the pipeline pinned: Y' = beta U = -beta gamma Y.
        let steps = 4000;
        let hstep = t / steps as f64;
        let mut yr = 3.0f64;
        for _ in 0..steps {
            let f = |y: f64| -beta * 2.5 * y;
            let k1 = f(yr);
            let k2 = f(yr + 0.5 * hstep * k1);
            let k3 = f(yr + 0.5 * hstep * k2);
            let k4 = f(yr + hstep * k3);
            yr += hstep / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        assert!((y - yr).abs() < 1e-10 && (u + 2.5 * y).abs() < 1e-12);
        let (yc, uc) = fluid_trajectory(FluidPolicy::Cbs, 3.0, 0.0, beta, t).unwrap();
        assert!((yc - 3.0 * (-beta * t).exp()).abs() < 1e-12 && (uc + yc).abs() < 1e-12);
    }
    assert!(fluid_trajectory(FluidPolicy::Cbs, 1.0, 0.0, beta, -1.0).is_err());
}

#[test]
fn loglog_recovers_exact_power_laws() {
    for (a, b) in [(0.3, 0.5), (-1.2, 0.38), (2.0, -0.7)] {
        let pts: Vec<(f64, f64)> = [2.0, 10.0, 20.0, 100.0, 1000.0]
            .iter()
            .map(|&x: &f64| (x, (a + b * x.ln()).exp()))
            .collect();
        let fit = loglog_fit(&pts).unwrap();
        assert!((fit.slope - b).abs() < 1e-10 && (fit.intercept - a).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-10);
    }
    assert!(loglog_fit(&[(1.0, 1.0)]).is_err());
    assert!(loglog_fit(&[(1.0, 1.0), (0.0, 2.0)]).is_err());
}

#[test]
fn gamma_grid_endpoints() {
    assert_eq!(gamma_grid(1.0, 2.0, 0.2).unwrap(), vec![1.0, 1.2, 1.4, 1.6, 1.8, 2.0]);
    assert_eq!(gamma_grid(1.5, 1.5, 0.5).unwrap(), vec![1.5]);
    assert!(gamma_grid(1.0, 0.5, 0.1).is_err());
    assert!(gamma_grid(0.1, 1.0, 0.2).is_err());
}

#[test]
fn gamma_search_uses_common_random_numbers() {
    let sys = exp_sys(20.0);
    let p = GbsParams::new(2.0, None, 0.0, &sys).unwrap();
    let cfg = SimConfig::new(sys, unit(), p).with_protocol(300.0, 100.0, 8).with_seed(11);
    let a = gamma_search(&cfg, 1.0, 3.0, 0.5).unwrap();
    let b = gamma_search(&cfg, 2.0, 3.0, 0.5).unwrap();
    assert_eq!(a.curve.len(), 5);
    assert_eq!(a.curve[2], b.curve[0]);
    let best = a.best_point();
    assert!(a.curve.iter().all(|pt| pt.cost.mean >= best.cost.mean));
    for pt in &a.curve {
        assert_eq!(pt.x_star, choose_xstar(&unit(), &sys, pt.gamma).unwrap());
    }
}

#[test]
fn gap_rows_scale_difference_by_sqrt_r() {
    let mut rows = Vec::new();
    for m in [20.0, 200.0] {
        let sys = exp_sys(m);
        let p = GbsParams::new(4.0, None, 0.0, &sys).unwrap();
        let res = run_experiment(&SimConfig::new(sys, unit(), p).with_replications(30)).unwrap();
        let dist = artificial_stationary(&p, &sys).unwrap();
        let row = gap_row(&sys, &res.summary, &dist);
        let want = (res.summary.mean_y.mean - dist.mean) / sys.r().sqrt();
        assert!((row.scaled_diff - want).abs() < 1e-12);
        assert!(row.scaled_diff > 0.0);
        rows.push(row);
    }
    let report = gap_summary(rows);
    assert!(report.scaled_diff_decreasing);
    assert!(report.gap_ratio >= 1.0);
}

#[test]
fn normal_limit_cost_symmetric_closed_form() {
    let sys = exp_sys(1000.0);
    let got = normal_limit_cost(&unit(), &sys, 6.8, 0.0);
    assert!((got - 9.68).abs() < 0.005, "{got}");
    for (m, gamma, h) in [(20.0, 2.4, 1.0), (200.0, 4.8, 3.0)] {
        let sys = exp_sys(m);
        let cost = CostParams::new(h, h).unwrap();
        let want = h * (2.0 * sys.r() / (std::f64::consts::PI * gamma * sys.beta())).sqrt();
        assert!((normal_limit_cost(&cost, &sys, gamma, 0.0) - want).abs() < 1e-12);
    }
}

#[test]
fn growth_truncation_limits() {
    for m in [10.0, 1e3, 1e5, 1e7] {
        let sys = exp_sys(m);
        let f = growth_truncation(&sys);
        assert!((f - m.powf(0.75)).abs() < 1e-9 * f);
    }
    let ratio = |m: f64| {
        let sys = exp_sys(m);
        (growth_truncation(&sys) / sys.r(), growth_truncation(&sys) / sys.r().sqrt())
    };
    let (a, b) = (ratio(1e3), ratio(1e7));
    assert!(b.0 < a.0 && b.1 > a.1);
}

/// Reference costs fitted on `ln r`, the regressor under which the quoted
/// intercepts are reproduced.
#[test]
fn reference_costs_scale_as_quoted() {
    let cases = presets::preset("table1").unwrap();
    let cbs: Vec<(f64, f64)> = cases.iter().map(|c| (c.mean_demand, c.reference.cbs_cost)).collect();
    let gbs: Vec<(f64, f64)> = cases.iter().map(|c| (c.mean_demand, c.reference.gbs_cost)).collect();
    let fc = loglog_fit(&cbs).unwrap();
    let fg = loglog_fit(&gbs).unwrap();
    assert!((fc.slope - 0.50).abs() <= 0.02 && fc.r_squared > 0.999, "{fc:?}");
    assert!((fg.slope - 0.38).abs() <= 0.04, "{fg:?}");
    let on_r = |pts: &[(f64, f64)]| loglog_fit(&pts.iter().map(|&(m, c)| (m / 2.0, c)).collect::<Vec<_>>()).unwrap();
    let (cr, gr) = (on_r(&cbs), on_r(&gbs));
    assert!((cr.intercept - 0.1).abs() < 0.03, "{cr:?}");
    assert!((gr.intercept - 0.08).abs() < 0.05, "{gr:?}");
    assert!((cr.slope - fc.slope).abs() < 1e-12);
}

#[test]
fn gamma_search_lands_near_reference_gamma() {
    for (m, lt, want) in [
        (20.0, LeadTimeSpec::exponential(2.0).unwrap(), 2.4),
        (2.0, LeadTimeSpec::exponential(2.0).unwrap(), 1.6),
        (20.0, LeadTimeSpec::pareto(3.0, 0.25).unwrap(), 2.4),
    ] {
        let sys = SystemParams::from_mean_demand(m, lt).unwrap();
        let p = GbsParams::new(1.0, None, 0.0, &sys).unwrap().with_rounding(TargetRounding::Floor);
        let cfg = SimConfig::new(sys, unit(), p).with_seed(5);
        let search = gamma_search(&cfg, 1.0, 5.0, 0.2).unwrap();
        let best = search.best_point();
        assert!((best.gamma - want).abs() <= 0.4 + 1e-9, "m={m}: best {} vs {want}", best.gamma);
        let min = search.curve.iter().map(|p| p.cost.mean).fold(f64::INFINITY, f64::min);
        assert!(best.cost.mean <= min + 2.0 * best.cost.se);
    }
}

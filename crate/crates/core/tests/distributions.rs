mod common;

use leadsim::model::{
    choose_cbs_base, choose_xstar, poisson_cdf, CostParams, SystemParams,
};
use leadsim::rngdist::{
    exp_interarrival, inv_norm_cdf, norm_cdf, sample_leadtime, LeadTimeSpec, RngStream,
};

#[test]
fn normal_cdf_matches_series() {
    for i in -60..=60 {
        let x = i as f64 * 0.05;
        let err = (norm_cdf(x) - common::phi_series(x)).abs();
        assert!(err < 1e-13, "x={x} err={err:e}");
    }
}

#[test]
fn quantiles_match_bisection() {
    assert!((common::quantile_bisect(0.9) - 1.281_551_565_5).abs() < 1e-9);
    assert!((common::quantile_bisect(0.75) - 0.674_489_750_2).abs() < 1e-9);
    for p in [0.001, 0.01, 0.1, 0.25, 0.5, 0.6, 0.75, 0.9, 0.99, 0.999] {
        let q = inv_norm_cdf(p).unwrap();
        assert!((q - common::quantile_bisect(p)).abs() < 1e-9, "p={p}");
    }
}

#[test]
fn quantile_rejects_endpoints() {
    for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
        assert!(inv_norm_cdf(p).is_err(), "p={p}");
    }
}

#[test]
fn leadtime_samples_pass_ks() {
    let n = 1_000_000;
    // About the 0.1% critical value of the KS statistic.
    let crit = 1.95 / (n as f64).sqrt();
    let families = [
        LeadTimeSpec::exponential(2.0).unwrap(),
        LeadTimeSpec::shifted_exponential(0.2, 1.8).unwrap(),
        LeadTimeSpec::uniform(0.0, 4.0).unwrap(),
        LeadTimeSpec::pareto(3.0, 0.25).unwrap(),
    ];
    for (k, spec) in families.iter().enumerate() {
        let mut rng = RngStream::new(42, k as u64);
        let xs: Vec<f64> = (0..n).map(|_| sample_leadtime(spec, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 0.02, "{} mean {mean}", spec.label());
        let d = common::ks_statistic(xs, |x| spec.cdf(x));
        assert!(d < crit, "{} KS {d} >= {crit}", spec.label());
    }
}

#[test]
fn interarrivals_are_exponential() {
    let mut rng = RngStream::new(3, 0);
    let n = 200_000;
    let xs: Vec<f64> = (0..n).map(|_| exp_interarrival(4.0, &mut rng)).collect();
    let d = common::ks_statistic(xs, |x| -(-4.0 * x).exp_m1());
    assert!(d < 1.95 / (n as f64).sqrt());
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let draw = |seed, id| {
        let mut rng = RngStream::new(seed, id);
        (0..8).map(|_| rng.uniform()).collect::<Vec<_>>()
    };
    assert_eq!(draw(1, 5), draw(1, 5));
    assert_ne!(draw(1, 5), draw(1, 6));
    assert_ne!(draw(1, 5), draw(2, 5));
}

#[test]
fn invalid_leadtimes_rejected() {
    assert!(LeadTimeSpec::exponential(0.0).is_err());
    assert!(LeadTimeSpec::uniform(3.0, 1.0).is_err());
    assert!(LeadTimeSpec::pareto(1.0, 0.5).is_err());
    assert!(LeadTimeSpec::shifted_exponential(-0.1, 1.0).is_err());
}

fn exp_sys(mean_demand: f64) -> SystemParams {
    SystemParams::from_mean_demand(mean_demand, LeadTimeSpec::exponential(2.0).unwrap()).unwrap()
}

/// `h E[(x - N)^+] + theta E[(N - x)^+]` for `N ~ Poisson(mean)`, by direct summation.
fn poisson_newsvendor(mean: f64, x: i64, cost: &CostParams) -> f64 {
    let mut pmf = (-mean).exp();
    let mut total = 0.0;
    for n in 0..(mean * 10.0 + 200.0) as i64 {
        if n > 0 {
            pmf *= mean / n as f64;
        }
        let d = x - n;
        total += pmf * if d >= 0 { cost.h * d as f64 } else { -cost.theta * d as f64 };
    }
    total
}

#[test]
fn cbs_base_is_poisson_newsvendor_argmin() {
    for m in [2.0, 10.0, 20.0, 100.0] {
        for (h, theta) in [(1.0, 1.0), (9.0, 1.0), (6.0, 1.0), (3.0, 1.0), (1.0, 3.0), (1.0, 6.0), (1.0, 9.0)] {
            let cost = CostParams::new(h, theta).unwrap();
            let base = choose_cbs_base(&cost, &exp_sys(m));
            let lo = (m - 6.0 * m.sqrt() - 5.0).max(0.0) as i64;
            let hi = (m + 6.0 * m.sqrt() + 5.0) as i64;
            let best = (lo..=hi)
                .min_by(|&a, &b| {
                    poisson_newsvendor(m, a, &cost).total_cmp(&poisson_newsvendor(m, b, &cost))
                })
                .unwrap();
            assert_eq!(base, best, "m={m} h={h} theta={theta}");
        }
    }
}

#[test]
fn poisson_cdf_matches_recursion() {
    let mean: f64 = 20.0;
    let mut pmf = (-mean).exp();
    let mut cdf = pmf;
    for k in 0..60 {
        if k > 0 {
            pmf *= mean / k as f64;
            cdf += pmf;
        }
        assert!((poisson_cdf(mean, k) - cdf).abs() < 1e-12, "k={k}");
    }
    assert_eq!(poisson_cdf(mean, -1), 0.0);
}

#[test]
fn xstar_minimizes_normal_newsvendor() {
    let sys = exp_sys(20.0);
    for (h, theta, gamma) in [(1.0, 1.0, 2.4), (9.0, 1.0, 2.0), (1.0, 9.0, 3.0)] {
        let cost = CostParams::new(h, theta).unwrap();
        let x = choose_xstar(&cost, &sys, gamma).unwrap();
        let sigma = (20.0 / gamma as f64).sqrt();
        // Brute force on a fine grid, with the normal law integrated by midpoints.
        let loss = |x: f64| {
            let steps = 4000;
            let w = 16.0 * sigma / steps as f64;
            (0..steps)
                .map(|i| {
                    let n = -8.0 * sigma + (i as f64 + 0.5) * w;
                    let dens = (-0.5 * (n / sigma).powi(2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
                    let d = x - n;
                    dens * w * if d >= 0.0 { h * d } else { -theta * d }
                })
                .sum::<f64>()
        };
        let grid_best = (-400..=400)
            .map(|i| i as f64 * 0.02)
            .min_by(|a, b| loss(*a).total_cmp(&loss(*b)))
            .unwrap();
        assert!((x - grid_best).abs() <= 0.02, "h={h} theta={theta}: {x} vs {grid_best}");
    }
}

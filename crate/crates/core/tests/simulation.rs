use leadsim::analysis::{artificial_stationary, gap_row, gap_summary};
use leadsim::model::{CostParams, GbsParams, SystemParams};
use leadsim::rngdist::LeadTimeSpec;
use leadsim::sim::{run_experiment, run_replication, simulate_artificial, SimConfig};

fn exp_sys(mean_demand: f64) -> SystemParams {
    SystemParams::from_mean_demand(mean_demand, LeadTimeSpec::exponential(2.0).unwrap()).unwrap()
}

fn unit() -> CostParams {
    CostParams::new(1.0, 1.0).unwrap()
}

#[test]
fn gap_stays_bounded_as_demand_grows() {
    let mut rows = Vec::new();
    for (m, reps) in [(20.0, 60), (200.0, 30), (2000.0, 12)] {
        let sys = exp_sys(m);
        let p = GbsParams::new(3.0, None, 0.0, &sys).unwrap();
        let res = run_experiment(&SimConfig::new(sys, unit(), p).with_replications(reps)).unwrap();
        let dist = artificial_stationary(&p, &sys).unwrap();
        assert!(res.summary.mean_y.mean > dist.mean);
        rows.push(gap_row(&sys, &res.summary, &dist));
    }
    let report = gap_summary(rows);
    assert!(report.gap_ratio < 3.0, "{report:?}");
    assert!(report.scaled_diff_decreasing, "{report:?}");
}

#[test]
fn artificial_simulation_matches_exact_law() {
    for (m, gamma) in [(20.0, 2.4), (100.0, 1.0), (50.0, 5.0)] {
        let sys = exp_sys(m);
        let p = GbsParams::new(gamma, None, 0.0, &sys).unwrap();
        let res = simulate_artificial(&SimConfig::new(sys, unit(), p).with_histogram()).unwrap();
        let exact = artificial_stationary(&p, &sys).unwrap();
        let tv = exact.total_variation(res.histogram.as_ref().unwrap());
        assert!(tv <= 0.02, "m={m} gamma={gamma}: TV {tv}");
        let z = res.summary.avg_cost;
        assert!((z.mean - exact.cost(&unit())).abs() < 4.0 * z.se + 1e-3, "{z:?} vs {}", exact.cost(&unit()));
    }
}

#[test]
fn artificial_simulation_needs_exponential_leadtimes() {
    let sys = SystemParams::from_mean_demand(20.0, LeadTimeSpec::pareto(3.0, 0.25).unwrap()).unwrap();
    let p = GbsParams::new(2.0, None, 0.0, &sys).unwrap();
    assert!(simulate_artificial(&SimConfig::new(sys, unit(), p)).is_err());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let sys = SystemParams::from_mean_demand(20.0, LeadTimeSpec::uniform(0.0, 4.0).unwrap()).unwrap();
    let p = GbsParams::new(1.8, Some(6.0), 0.5, &sys).unwrap();
    let cfg = SimConfig::new(sys, unit(), p).with_replications(12).with_seed(77);
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let one = pool(1).install(|| run_experiment(&cfg).unwrap());
    let four = pool(4).install(|| run_experiment(&cfg).unwrap());
    assert_eq!(one, four);
    assert_eq!(one.records[5], run_replication(&cfg, 5).unwrap());
}

#[test]
fn protocol_validation() {
    let sys = exp_sys(20.0);
    let p = GbsParams::new(2.0, None, 0.0, &sys).unwrap();
    let base = SimConfig::new(sys, unit(), p);
    assert!(run_experiment(&base.clone().with_protocol(100.0, 100.0, 5)).is_err());
    assert!(run_experiment(&base.clone().with_protocol(100.0, 10.0, 0)).is_err());
    assert!(run_experiment(&base.with_protocol(50.0, 0.0, 2)).is_ok());
}

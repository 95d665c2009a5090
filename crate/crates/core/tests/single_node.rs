//! With one node the mean-field approximation is exact, so the analytic model
//! and the simulator must agree on every metric up to Monte Carlo error.

use sicaoi::analytic::AnalyticModel;
use sicaoi::profile::build_profile_with;
use sicaoi::sim::{simulate, Estimate, SimOptions};
use sicaoi::{AccessPolicy, GridSpec, SicProfile, SystemConfig};

fn setup() -> (SystemConfig, AccessPolicy, SicProfile) {
    let cfg = SystemConfig {
        n: 1,
        ..SystemConfig::default()
    };
    let grid = GridSpec::default().gamma_grid(cfg.gamma_max);
    let profile = build_profile_with(1, cfg.c(), &grid, 200_000, cfg.seed);
    let policy = AccessPolicy::constant(1.0, cfg.gamma_max, &cfg).unwrap();
    (cfg, policy, profile)
}

/// Inside twice the CI half-width, or within 1% when the CI is degenerate.
fn agrees(analytic: f64, sim: Estimate) -> bool {
    let gap = (analytic - sim.mean).abs();
    gap <= 2.0 * sim.half_width || gap <= 0.01 * sim.mean.abs()
}

#[test]
fn lone_node_succeeds_with_probability_one_minus_epsilon() {
    let (cfg, policy, profile) = setup();
    let model = AnalyticModel::new(&cfg, &policy, &profile).unwrap();
    let a = model.evaluate(0.05).unwrap();
    assert!(
        (a.p_s - 0.9).abs() < 3.0 * (0.09f64 / 200_000.0).sqrt(),
        "analytic P_s {}",
        a.p_s
    );
    let r = simulate(
        &cfg.with_generation_time(0.05),
        &policy,
        &SimOptions::with_horizon(50_000, 8),
    )
    .unwrap();
    assert!(
        r.pdr.contains(0.9) || (r.pdr.mean - 0.9).abs() < 0.005,
        "sim PDR {:?}",
        r.pdr
    );
}

#[test]
fn analytic_matches_simulation_for_one_node() {
    let (cfg, policy, profile) = setup();
    let model = AnalyticModel::new(&cfg, &policy, &profile).unwrap();
    let opts = SimOptions::with_horizon(100_000, 10);
    for s in [5e-3, 0.05, 0.5] {
        let a = model.evaluate(s).unwrap();
        let r = simulate(&cfg.with_generation_time(s), &policy, &opts).unwrap();
        let checks = [
            ("P_s", a.p_s, r.pdr),
            ("theta_norm", a.theta_norm, r.theta_norm),
            ("cbr", a.cbr, r.cbr),
            ("E[D]", a.mean_delay, r.mean_delay),
            ("E[H]", a.mean_aoi, r.mean_aoi),
            ("energy", a.energy, r.energy),
            ("E[Q]", a.mean_backlog, r.mean_backlog),
            ("E[Y]", a.moments.mean_y, r.mean_interdeparture),
            ("E[C]", a.moments.mean_c, r.mean_contention),
        ];
        for (name, x, e) in checks {
            assert!(
                agrees(x, e),
                "S = {s}: {name} analytic {x} vs sim {} ± {}",
                e.mean,
                e.half_width
            );
        }
    }
}

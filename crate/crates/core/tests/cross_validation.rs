use scm_core::analysis::{fundamental_diagram, parse_grid, platoon_equilibrium_gaps, refine_peak};
use scm_core::analytic::{evaluate, solve_blocking, solve_passing, ScanOptions};
use scm_core::numeric::{simulate, IntegratorConfig};
use scm_core::{velocities, ModelParams, Scenario, Topology};

fn open(kappa: f64, pairs: &[(f64, f64)]) -> Scenario {
    Scenario::from_pairs(
        Topology::OpenLink,
        ModelParams::new(kappa, 10.0).unwrap(),
        pairs,
    )
    .unwrap()
}

#[test]
fn blocking_solution_matches_rk4() {
    let s = open(0.8, &[(5.0, 60.0), (7.0, 40.0), (4.0, 25.0), (6.5, 0.0)]);
    let seg = solve_blocking(&s).unwrap();
    let trace = simulate(
        &s,
        &IntegratorConfig {
            horizon: 80.0,
            dt: 1e-3,
            sample_every: 1000,
            ..Default::default()
        },
    )
    .unwrap();
    for k in 0..trace.samples.len() {
        let exact = seg.positions(trace.samples.times[k]).unwrap();
        for (a, b) in exact.iter().zip(trace.samples.positions(k)) {
            assert!(
                (a - b).abs() < 1e-6,
                "t={} {a} vs {b}",
                trace.samples.times[k]
            );
        }
    }
}

#[test]
fn analytic_velocity_is_model_velocity() {
    let s = open(1.0, &[(5.0, 30.0), (5.0, 20.0), (5.0, 0.0)]);
    let seg = solve_blocking(&s).unwrap();
    for t in [0.0, 1.0, 7.5, 30.0] {
        let x = seg.positions(t).unwrap();
        let state = scm_core::LinkState::new(t, x, Topology::OpenLink);
        let direct = velocities(&state, &s.vehicles, &s.params).unwrap();
        let analytic = seg.velocities(t, &s.vehicles, &s.params).unwrap();
        for (a, b) in direct.iter().zip(&analytic) {
            assert!((a - b).abs() < 1e-10, "t={t}: {a} vs {b}");
        }
    }
}

#[test]
fn passing_times_agree_between_solvers() {
    let s = open(12.0, &[(3.0, 60.0), (5.0, 40.0), (7.0, 20.0), (4.0, 0.0)]);
    let traj = solve_passing(&s, 600.0, &ScanOptions::default()).unwrap();
    let trace = simulate(
        &s,
        &IntegratorConfig {
            horizon: 600.0,
            dt: 0.005,
            sample_every: 200,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(traj.events.len(), trace.events.len());
    for (a, b) in traj.events.iter().zip(&trace.events) {
        assert_eq!((a.passer, a.passed), (b.passer, b.passed));
        assert!((a.t - b.t).abs() < 1e-5, "{} vs {}", a.t, b.t);
    }
    assert_eq!(traj.final_order(), trace.final_order().as_slice());
    let (x, _) = evaluate(&traj, 600.0).unwrap();
    let last = trace.samples.positions(trace.samples.len() - 1);
    for (a, b) in x.iter().zip(last) {
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }
}

#[test]
fn platoon_at_equilibrium_stays_there() {
    let params = ModelParams::new(1.0, 10.0).unwrap();
    let speeds = [4.0, 6.0, 5.0, 7.0];
    let specs: Vec<scm_core::VehicleSpec> = speeds
        .iter()
        .enumerate()
        .map(|(id, &v_max)| scm_core::VehicleSpec { id, v_max, x0: 0.0 })
        .collect();
    let eq = platoon_equilibrium_gaps(&specs, &params).unwrap();
    let x = eq.positions(100.0);
    let pairs: Vec<(f64, f64)> = speeds.iter().copied().zip(x).collect();
    let s = Scenario::from_pairs(Topology::OpenLink, params, &pairs).unwrap();
    let trace = simulate(
        &s,
        &IntegratorConfig {
            horizon: 50.0,
            ..Default::default()
        },
    )
    .unwrap();
    for k in 0..trace.samples.len() {
        for v in trace.samples.velocities(k) {
            assert!((v - 4.0).abs() < 1e-9, "{v}");
        }
    }
}

/// Flow on a uniform ring by direct summation over the other vehicles.
fn ring_flow(rho: f64, kappa: f64, omega: f64, v_max: f64, length: f64) -> f64 {
    let n = (rho * length).round() as usize;
    let d = length / n as f64;
    let gamma: f64 = (1..n).map(|k| (-(k as f64) * d / omega).exp()).sum::<f64>() / kappa;
    rho * (v_max * (1.0 - gamma)).max(0.0)
}

#[test]
fn diagram_peak_matches_brute_force() {
    let params = ModelParams::new(10.0, 10.0).unwrap();
    let peak = refine_peak(&params, 6.0, 1000.0, 0.2, 1.0, 1e-9).unwrap();
    let (mut best_rho, mut best_q) = (0.0, 0.0);
    for k in 200..=1000 {
        let rho = k as f64 * 1e-3;
        let q = ring_flow(rho, 10.0, 10.0, 6.0, 1000.0);
        if q > best_q {
            (best_rho, best_q) = (rho, q);
        }
    }
    assert!(
        (peak.rho - best_rho).abs() <= 2e-3,
        "{} vs {best_rho}",
        peak.rho
    );
    assert!(
        peak.q >= best_q - 1e-9 && peak.q - best_q < 1e-4,
        "{} vs {best_q}",
        peak.q
    );

    let series =
        fundamental_diagram(&params, 6.0, 1000.0, &parse_grid("0.2:1.0:0.001").unwrap()).unwrap();
    assert!((series.peak().q - best_q).abs() < 1e-9);
}

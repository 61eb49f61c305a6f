use landauer_core::linalg::pauli_z;
use landauer_core::models::{
    build_erasure, build_rydberg, initial_state, ErasureParams, InitialState, RydbergParams,
};
use landauer_core::{
    propagate, Complex64, ComplexMatrix, DensityMatrix, JumpChannel, LindbladModel,
};

fn amplitude_damping(gamma: f64) -> LindbladModel {
    let mut l = ComplexMatrix::zeros(2);
    l[(1, 0)] = Complex64::new(1.0, 0.0);
    LindbladModel::undriven(
        pauli_z().scale_real(0.5),
        vec![JumpChannel::constant(gamma, l).unwrap()],
    )
    .unwrap()
}

fn excited() -> DensityMatrix {
    DensityMatrix::diagonal(&[1.0, 0.0]).unwrap()
}

/// Max deviation of the excited population from `e^{-gamma t}`.
fn decay_error(gamma: f64, t_end: f64, dt: f64) -> f64 {
    let model = amplitude_damping(gamma);
    let traj = propagate(&model, &excited(), t_end, dt, 51).unwrap();
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| (s.matrix()[(0, 0)].re - (-gamma * t).exp()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn amplitude_damping_matches_exponential() {
    assert!(decay_error(0.2, 25.0, 1e-3) < 1e-8);
}

#[test]
fn rk4_error_shrinks_sixteenfold() {
    // coarse steps so that truncation error dominates roundoff
    let gamma = 0.2;
    let model = amplitude_damping(gamma);
    let run = |dt: f64| propagate(&model, &excited(), 25.0, dt, 11).unwrap();
    let reference = run(0.5 / 8.0);
    let err = |dt: f64| {
        run(dt)
            .states
            .iter()
            .zip(&reference.states)
            .map(|(a, b)| (a.matrix() - b.matrix()).frobenius_norm())
            .fold(0.0, f64::max)
    };
    let ratio = err(0.5) / err(0.25);
    assert!(ratio > 15.0, "ratio {ratio}");
}

#[test]
fn bell_state_is_stationary() {
    let (model, bell) = build_rydberg(&RydbergParams::default()).unwrap();
    let rho = DensityMatrix::pure(&bell).unwrap();
    let traj = propagate(&model, &rho, 5000.0, 0.05, 11).unwrap();
    for s in &traj.states {
        assert!((s.matrix() - rho.matrix()).frobenius_norm() < 1e-8);
    }
}

#[test]
fn rydberg_run_conserves_trace_and_positivity() {
    let (model, _) = build_rydberg(&RydbergParams::default()).unwrap();
    let h = model.hamiltonian(0.0).unwrap().into_owned();
    let rho = initial_state(&InitialState::GibbsAt { beta: 30.0 }, &h).unwrap();
    let traj = propagate(&model, &rho, 500.0, 0.05, 51).unwrap();
    assert!(traj.diagnostics.max_trace_drift < 1e-9);
    assert!(traj.diagnostics.min_eigenvalue > -1e-9);
    let balance = traj.energy_balance_error(&model).unwrap();
    assert!(balance < 1e-8, "{balance}");
    assert!(traj.work.iter().all(|&w| w == 0.0));
}

#[test]
fn erasure_run_balances_energy() {
    let p = ErasureParams::default();
    let model = build_erasure(&p).unwrap();
    let h0 = model.hamiltonian(0.0).unwrap().into_owned();
    let rho = initial_state(&InitialState::GibbsAt { beta: p.bath_beta }, &h0).unwrap();
    let traj = propagate(&model, &rho, p.tau, p.tau / 20000.0, 101).unwrap();
    assert!(traj.energy_balance_error(&model).unwrap() < 1e-8);
    assert!(traj.diagnostics.max_trace_drift < 1e-9);
    assert!(traj.diagnostics.min_eigenvalue > -1e-9);
    assert_eq!(traj.heat[0], 0.0);
    assert_eq!(traj.work[0], 0.0);
    assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
}

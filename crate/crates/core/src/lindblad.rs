//! Lindblad master equation
//!
//! `d rho/dt = -i[H, rho] + sum_mu gamma_mu (L rho L^dagger - {L^dagger L, rho}/2)`
//!
//! integrated with fixed-step RK4. Heat `Q' = -Tr[H rho']` and work
//! `W' = Tr[H' rho]` ride along as extra components of the RK4 state, so
//! `Delta E = W - Q` holds to integrator accuracy.

use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{eigh, trace_product, ComplexMatrix, HERMITIAN_TOL};
use crate::qstate::DensityMatrix;
use num_complex::Complex64;

/// Per-step trace drift beyond which integration is abandoned.
pub const MAX_STEP_DRIFT: f64 = 1e-6;
/// Sampled eigenvalues below this abort the run.
pub const POSITIVITY_FLOOR: f64 = -1e-6;
/// `dt * generator scale` above this draws a warning.
pub const STABILITY_WARN: f64 = 0.1;
/// ... and above this is rejected outright (RK4's real-axis stability
/// interval ends at 2.785).
pub const STABILITY_LIMIT: f64 = 2.5;
const DOMAIN_SLACK: f64 = 1e-12;

pub type MatrixFn = Arc<dyn Fn(f64) -> ComplexMatrix + Send + Sync>;

/// A matrix-valued function of time.
#[derive(Clone)]
pub enum Protocol {
    Constant(ComplexMatrix),
    TimeDependent(MatrixFn),
}

impl Protocol {
    pub fn time_dependent(f: impl Fn(f64) -> ComplexMatrix + Send + Sync + 'static) -> Self {
        Protocol::TimeDependent(Arc::new(f))
    }

    pub fn at(&self, t: f64) -> Cow<'_, ComplexMatrix> {
        match self {
            Protocol::Constant(m) => Cow::Borrowed(m),
            Protocol::TimeDependent(f) => Cow::Owned(f(t)),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Protocol::Constant(_))
    }
}

impl fmt::Debug for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            Protocol::TimeDependent(_) => f.write_str("TimeDependent(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct JumpChannel {
    pub rate: f64,
    pub operator: Protocol,
}

impl JumpChannel {
    pub fn new(rate: f64, operator: Protocol) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("jump rate {rate}")));
        }
        Ok(Self { rate, operator })
    }

    pub fn constant(rate: f64, operator: ComplexMatrix) -> Result<Self> {
        Self::new(rate, Protocol::Constant(operator))
    }
}

#[derive(Clone, Debug)]
pub struct LindbladModel {
    dim: usize,
    hamiltonian: Protocol,
    hamiltonian_rate: Option<Protocol>,
    channels: Vec<JumpChannel>,
    driven: bool,
    domain_end: Option<f64>,
    timescale: f64,
}

impl LindbladModel {
    /// Time-independent Hamiltonian and channels.
    pub fn undriven(h: ComplexMatrix, channels: Vec<JumpChannel>) -> Result<Self> {
        check_hermitian(&h)?;
        let dim = h.dim();
        for ch in &channels {
            match &ch.operator {
                Protocol::Constant(l) => check_dim(dim, l)?,
                Protocol::TimeDependent(_) => {
                    return Err(Error::InvalidParameter(
                        "undriven model with a time-dependent jump operator".into(),
                    ))
                }
            }
        }
        Ok(Self {
            dim,
            hamiltonian: Protocol::Constant(h),
            hamiltonian_rate: None,
            channels,
            driven: false,
            domain_end: None,
            timescale: 1.0,
        })
    }

    /// `timescale` sets the finite-difference step for `dH/dt` when no
    /// analytic rate is supplied.
    pub fn driven(
        dim: usize,
        hamiltonian: Protocol,
        hamiltonian_rate: Option<Protocol>,
        channels: Vec<JumpChannel>,
        domain_end: Option<f64>,
        timescale: f64,
    ) -> Result<Self> {
        if !(timescale > 0.0 && timescale.is_finite()) {
            return Err(Error::InvalidParameter(format!("timescale {timescale}")));
        }
        if let Some(end) = domain_end {
            if !(end > 0.0 && end.is_finite()) {
                return Err(Error::InvalidParameter(format!("protocol end {end}")));
            }
        }
        let h0 = hamiltonian.at(0.0);
        check_dim(dim, &h0)?;
        check_hermitian(&h0)?;
        for ch in &channels {
            check_dim(dim, &ch.operator.at(0.0))?;
        }
        Ok(Self {
            dim,
            hamiltonian,
            hamiltonian_rate,
            channels,
            driven: true,
            domain_end,
            timescale,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_driven(&self) -> bool {
        self.driven
    }

    pub fn channels(&self) -> &[JumpChannel] {
        &self.channels
    }

    pub fn domain_end(&self) -> Option<f64> {
        self.domain_end
    }

    pub fn timescale(&self) -> f64 {
        self.timescale
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let end = self.domain_end.unwrap_or(f64::INFINITY);
        if !(t >= -DOMAIN_SLACK && t <= end * (1.0 + DOMAIN_SLACK) + DOMAIN_SLACK) {
            return Err(Error::ProtocolDomain { t, end });
        }
        Ok(())
    }

    pub fn hamiltonian(&self, t: f64) -> Result<Cow<'_, ComplexMatrix>> {
        self.check_time(t)?;
        Ok(self.hamiltonian.at(t))
    }

    fn stage(&self, t: f64) -> Result<Stage> {
        self.check_time(t)?;
        Ok(Stage::new(
            self.hamiltonian.at(t).into_owned(),
            self.channels
                .iter()
                .map(|ch| (ch.rate, ch.operator.at(t).into_owned())),
        ))
    }

    /// Crude norm bound on the generator: twice the largest `|E|` plus
    /// `sum gamma ||L||_F^2`, maximized over a few protocol times.
    fn generator_scale(&self, t_end: f64) -> Result<f64> {
        let times: Vec<f64> = if self.driven {
            (0..=8).map(|k| t_end * k as f64 / 8.0).collect()
        } else {
            vec![0.0]
        };
        let mut scale: f64 = 0.0;
        for t in times {
            let h = self.hamiltonian(t)?;
            let es = eigh(&h)?;
            let e_max = es.values.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let diss: f64 = self
                .channels
                .iter()
                .map(|ch| ch.rate * ch.operator.at(t).frobenius_norm().powi(2))
                .sum();
            scale = scale.max(2.0 * e_max + diss);
        }
        Ok(scale)
    }
}

fn check_hermitian(h: &ComplexMatrix) -> Result<()> {
    let deviation = h.hermitian_deviation();
    if !(deviation <= HERMITIAN_TOL) {
        return Err(Error::NonHermitianInput { deviation });
    }
    Ok(())
}

fn check_dim(dim: usize, m: &ComplexMatrix) -> Result<()> {
    if m.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: m.dim(),
        });
    }
    Ok(())
}

/// Generator data frozen at one instant: `H`, the non-Hermitian
/// `H_eff = H - (i/2) sum gamma L^dagger L`, and the scaled jumps `sqrt(gamma) L`.
struct Stage {
    h: ComplexMatrix,
    h_eff: ComplexMatrix,
    jumps: Vec<(ComplexMatrix, ComplexMatrix)>,
}

impl Stage {
    fn new(h: ComplexMatrix, channels: impl Iterator<Item = (f64, ComplexMatrix)>) -> Self {
        let mut h_eff = h.clone();
        let mut jumps = Vec::new();
        for (rate, l) in channels {
            if rate == 0.0 {
                continue;
            }
            let l = l.scale_real(rate.sqrt());
            let ld = l.dagger();
            let ldl = ld.matmul(&l);
            h_eff = &h_eff - &ldl.scale(Complex64::new(0.0, 0.5));
            jumps.push((l, ld));
        }
        Self { h, h_eff, jumps }
    }

    /// `-i (H_eff rho - rho H_eff^dagger) + sum L rho L^dagger`
    fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let x = self.h_eff.matmul(rho);
        let mut out = (&x - &x.dagger()).scale(Complex64::new(0.0, -1.0));
        for (l, ld) in &self.jumps {
            out += &l.matmul(rho).matmul(ld);
        }
        out
    }
}

/// Right-hand side of the master equation at time `t`.
pub fn generator(model: &LindbladModel, t: f64, rho: &DensityMatrix) -> Result<ComplexMatrix> {
    check_dim(model.dim, rho.matrix())?;
    let mut g = model.stage(t)?.apply(rho.matrix());
    g.hermitize();
    Ok(g)
}

/// `dH/dt`: the analytic protocol when installed, otherwise a central finite
/// difference with step `1e-6 * timescale`. Zero (with a warning) for
/// undriven models.
pub fn hamiltonian_rate(model: &LindbladModel, t: f64) -> Result<ComplexMatrix> {
    if !model.driven {
        log::warn!("hamiltonian_rate requested for an undriven model; returning zero");
        return Ok(ComplexMatrix::zeros(model.dim));
    }
    model.check_time(t)?;
    Ok(rate_unchecked(model, t))
}

fn rate_unchecked(model: &LindbladModel, t: f64) -> ComplexMatrix {
    match &model.hamiltonian_rate {
        Some(p) => p.at(t).into_owned(),
        None => {
            let h = 1e-6 * model.timescale;
            let fwd = model.hamiltonian.at(t + h);
            let bwd = model.hamiltonian.at(t - h);
            (&*fwd - &*bwd).scale_real(0.5 / h)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    /// Step actually used (`t_end` divided by the step count).
    pub dt: f64,
    pub steps: usize,
    /// Largest `|Tr rho - 1|` seen after a step, before renormalization.
    pub max_trace_drift: f64,
    pub cumulative_trace_drift: f64,
    /// Smallest eigenvalue over all retained samples.
    pub min_eigenvalue: f64,
    /// `dt` times the generator norm estimate.
    pub stability_product: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub heat: Vec<f64>,
    pub work: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn energies(&self, model: &LindbladModel) -> Result<Vec<f64>> {
        self.times
            .iter()
            .zip(&self.states)
            .map(|(&t, rho)| rho.expectation(&*model.hamiltonian(t)?))
            .collect()
    }

    /// `max_t |Delta E(t) - W(t) + Q(t)|`
    pub fn energy_balance_error(&self, model: &LindbladModel) -> Result<f64> {
        let e = self.energies(model)?;
        Ok((0..self.len())
            .map(|k| (e[k] - e[0] - self.work[k] + self.heat[k]).abs())
            .fold(0.0, f64::max))
    }
}

/// Integrates from `rho0` at `t = 0` to `t_end`, keeping `n_samples`
/// equally spaced states (both ends included).
///
/// The step count is rounded up so that it divides evenly into the sample
/// spacing; the step used is reported in the diagnostics. A requested `dt`
/// outside the RK4 stability region is rejected with [`Error::Stability`].
pub fn propagate(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_end: f64,
    dt: f64,
    n_samples: usize,
) -> Result<Trajectory> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end = {t_end}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt = {dt}")));
    }
    if n_samples < 2 {
        return Err(Error::InvalidParameter(format!("n_samples = {n_samples}")));
    }
    check_dim(model.dim, rho0.matrix())?;
    model.check_time(t_end)?;

    let intervals = n_samples - 1;
    let per_interval = ((t_end / dt) / intervals as f64).ceil().max(1.0) as usize;
    let steps = per_interval * intervals;
    let h = t_end / steps as f64;

    // The guard applies to the step that was asked for: a request far beyond
    // the stability region is a configuration mistake even when the sample
    // grid happens to force a smaller step.
    let scale = model.generator_scale(t_end)?;
    let requested = dt.min(t_end) * scale;
    if requested > STABILITY_LIMIT {
        return Err(Error::Stability(format!(
            "dt = {dt:.3e} times generator scale gives {requested:.3e}, beyond the RK4 stability limit {STABILITY_LIMIT}"
        )));
    }
    let stability_product = h * scale;
    if stability_product > STABILITY_WARN {
        log::warn!("dt * generator scale = {stability_product:.3e} exceeds {STABILITY_WARN}");
    }

    let constant = if model.driven {
        None
    } else {
        Some(model.stage(0.0)?)
    };
    let stage_at = |t: f64| -> Result<Cow<'_, Stage>> {
        match &constant {
            Some(s) => Ok(Cow::Borrowed(s)),
            None => Ok(Cow::Owned(model.stage(t)?)),
        }
    };
    let work_rate = |t: f64, rho: &ComplexMatrix| -> Result<f64> {
        if model.driven {
            Ok(trace_product(&rate_unchecked(model, t), rho)?.re)
        } else {
            Ok(0.0)
        }
    };

    let mut rho = rho0.matrix().clone();
    let (mut q, mut w) = (0.0, 0.0);
    let mut times = Vec::with_capacity(n_samples);
    let mut states = Vec::with_capacity(n_samples);
    let mut heat = Vec::with_capacity(n_samples);
    let mut work = Vec::with_capacity(n_samples);
    let mut max_drift: f64 = 0.0;
    let mut cumulative = 0.0;
    let mut min_eigenvalue = f64::INFINITY;

    let mut record = |k: usize, rho: &ComplexMatrix, q: f64, w: f64| -> Result<()> {
        let t = k as f64 * h;
        let state = DensityMatrix::from_raw(rho.clone());
        let min = state.min_eigenvalue()?;
        if min < POSITIVITY_FLOOR {
            return Err(Error::Positivity {
                t,
                min_eigenvalue: min,
            });
        }
        min_eigenvalue = min_eigenvalue.min(min);
        times.push(t);
        states.push(state);
        heat.push(q);
        work.push(w);
        Ok(())
    };
    record(0, &rho, 0.0, 0.0)?;

    for k in 0..steps {
        let t = k as f64 * h;
        let s1 = stage_at(t)?;
        let s2 = stage_at(t + 0.5 * h)?;
        let s3 = stage_at(t + h)?;

        let k1 = s1.apply(&rho);
        let q1 = -trace_product(&s1.h, &k1)?.re;
        let w1 = work_rate(t, &rho)?;

        let mut r = rho.clone();
        r.axpy(0.5 * h, &k1);
        let k2 = s2.apply(&r);
        let q2 = -trace_product(&s2.h, &k2)?.re;
        let w2 = work_rate(t + 0.5 * h, &r)?;

        let mut r = rho.clone();
        r.axpy(0.5 * h, &k2);
        let k3 = s2.apply(&r);
        let q3 = -trace_product(&s2.h, &k3)?.re;
        let w3 = work_rate(t + 0.5 * h, &r)?;

        let mut r = rho.clone();
        r.axpy(h, &k3);
        let k4 = s3.apply(&r);
        let q4 = -trace_product(&s3.h, &k4)?.re;
        let w4 = work_rate(t + h, &r)?;

        rho.axpy(h / 6.0, &k1);
        rho.axpy(h / 3.0, &k2);
        rho.axpy(h / 3.0, &k3);
        rho.axpy(h / 6.0, &k4);
        q += h / 6.0 * (q1 + 2.0 * q2 + 2.0 * q3 + q4);
        w += h / 6.0 * (w1 + 2.0 * w2 + 2.0 * w3 + w4);

        rho.hermitize();
        let tr = rho.trace().re;
        let drift = (tr - 1.0).abs();
        if !(drift <= MAX_STEP_DRIFT) || !rho.is_finite() || !q.is_finite() || !w.is_finite() {
            return Err(Error::Stability(format!(
                "trace drift {drift:.3e} at t = {:.6e}",
                t + h
            )));
        }
        max_drift = max_drift.max(drift);
        cumulative += drift;
        rho = rho.scale_real(1.0 / tr);

        if (k + 1) % per_interval == 0 {
            record(k + 1, &rho, q, w)?;
        }
    }

    Ok(Trajectory {
        times,
        states,
        heat,
        work,
        diagnostics: Diagnostics {
            dt: h,
            steps,
            max_trace_drift: max_drift,
            cumulative_trace_drift: cumulative,
            min_eigenvalue,
            stability_product,
        },
    })
}

impl Clone for Stage {
    fn clone(&self) -> Self {
        Self {
            h: self.h.clone(),
            h_eff: self.h_eff.clone(),
            jumps: self.jumps.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli_x, pauli_z};
    use approx::assert_abs_diff_eq;

    fn lowering() -> ComplexMatrix {
        // index 0 carries +eps/2 under sigma_z, so this is decay e -> g
        let mut l = ComplexMatrix::zeros(2);
        l[(1, 0)] = Complex64::new(1.0, 0.0);
        l
    }

    #[test]
    fn eigenprojector_is_stationary_without_channels() {
        let model = LindbladModel::undriven(pauli_z(), vec![]).unwrap();
        let rho = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let g = generator(&model, 0.0, &rho).unwrap();
        assert!(g.max_abs() < 1e-15);
    }

    #[test]
    fn pure_decay_generator() {
        let gamma = 0.3;
        let model = LindbladModel::undriven(
            ComplexMatrix::zeros(2),
            vec![JumpChannel::constant(gamma, lowering()).unwrap()],
        )
        .unwrap();
        let excited = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let g = generator(&model, 0.0, &excited).unwrap();
        let expected = ComplexMatrix::from_diagonal(&[-gamma, gamma]);
        assert!((&g - &expected).max_abs() < 1e-15);
        assert!(g.trace().norm() < 1e-15);
    }

    #[test]
    fn zero_generator_keeps_state() {
        let model = LindbladModel::undriven(ComplexMatrix::zeros(2), vec![]).unwrap();
        let mut m = ComplexMatrix::from_diagonal(&[0.6, 0.4]);
        m[(0, 1)] = Complex64::new(0.1, 0.1);
        m[(1, 0)] = Complex64::new(0.1, -0.1);
        let rho = DensityMatrix::new(m).unwrap();
        let traj = propagate(&model, &rho, 1.0, 0.1, 3).unwrap();
        assert_eq!(traj.times, vec![0.0, 0.5, 1.0]);
        for s in &traj.states {
            assert!((s.matrix() - rho.matrix()).max_abs() < 1e-15);
        }
        assert!(traj.heat.iter().chain(&traj.work).all(|&x| x == 0.0));
    }

    #[test]
    fn amplitude_damping_tracks_closed_form() {
        let gamma = 0.2;
        let model = LindbladModel::undriven(
            pauli_z().scale_real(0.5),
            vec![JumpChannel::constant(gamma, lowering()).unwrap()],
        )
        .unwrap();
        let rho0 = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let traj = propagate(&model, &rho0, 10.0, 1e-3 / gamma, 11).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert_abs_diff_eq!(s.matrix()[(0, 0)].re, (-gamma * t).exp(), epsilon = 1e-8);
            assert!(s.matrix()[(0, 1)].norm() < 1e-14);
        }
        assert!(traj.energy_balance_error(&model).unwrap() < 1e-12);
    }

    #[test]
    fn step_count_divides_sample_spacing() {
        let model = LindbladModel::undriven(pauli_z(), vec![]).unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        let traj = propagate(&model, &rho, 1.0, 0.3, 3).unwrap();
        assert_eq!(traj.diagnostics.steps, 4);
        assert_abs_diff_eq!(traj.diagnostics.dt, 0.25, epsilon = 1e-15);
        assert_eq!(traj.times.len(), 3);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let model = LindbladModel::undriven(pauli_z(), vec![]).unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            propagate(&model, &rho, 100.0, 100.0, 2),
            Err(Error::Stability(_))
        ));
    }

    #[test]
    fn protocol_domain_is_enforced() {
        let model = LindbladModel::driven(
            2,
            Protocol::time_dependent(|t| pauli_z().scale_real(t)),
            None,
            vec![],
            Some(1.0),
            1.0,
        )
        .unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            generator(&model, 1.5, &rho),
            Err(Error::ProtocolDomain { .. })
        ));
        assert!(matches!(
            propagate(&model, &rho, 2.0, 0.01, 2),
            Err(Error::ProtocolDomain { .. })
        ));
    }

    #[test]
    fn finite_difference_rate_matches_analytic() {
        let h =
            |t: f64| (&pauli_z().scale_real(t.sin()) + &pauli_x().scale_real(t * t)).hermitized();
        let dh =
            |t: f64| (&pauli_z().scale_real(t.cos()) + &pauli_x().scale_real(2.0 * t)).hermitized();
        let fd =
            LindbladModel::driven(2, Protocol::time_dependent(h), None, vec![], None, 1.0).unwrap();
        let an = LindbladModel::driven(
            2,
            Protocol::time_dependent(h),
            Some(Protocol::time_dependent(dh)),
            vec![],
            None,
            1.0,
        )
        .unwrap();
        let a = hamiltonian_rate(&an, 0.7).unwrap();
        let b = hamiltonian_rate(&fd, 0.7).unwrap();
        assert!((&a - &b).max_abs() < 1e-8);
        let undriven = LindbladModel::undriven(pauli_z(), vec![]).unwrap();
        assert_eq!(
            hamiltonian_rate(&undriven, 0.0).unwrap(),
            ComplexMatrix::zeros(2)
        );
    }

    #[test]
    fn driven_unitary_energy_balance() {
        let h = |t: f64| (&pauli_z().scale_real(0.5) + &pauli_x().scale_real(0.3 * t)).hermitized();
        let model =
            LindbladModel::driven(2, Protocol::time_dependent(h), None, vec![], Some(2.0), 1.0)
                .unwrap();
        let rho = DensityMatrix::diagonal(&[0.2, 0.8]).unwrap();
        let traj = propagate(&model, &rho, 2.0, 1e-3, 5).unwrap();
        assert!(traj.energy_balance_error(&model).unwrap() < 1e-9);
        // closed system: no heat
        assert!(traj.heat.iter().all(|q| q.abs() < 1e-12));
    }
}

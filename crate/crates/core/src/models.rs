//! The two benchmark systems: dissipative Bell-state preparation between two
//! Rydberg-dressed atoms, and erasure of a driven qubit coupled to a thermal
//! bath. Also the initial-state recipes used with them.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{eigh, pauli_x, pauli_z, ComplexMatrix};
use crate::lindblad::{JumpChannel, LindbladModel, Protocol};
use crate::qstate::{boltzmann, gibbs_state, DensityMatrix};
use num_complex::Complex64;

const DARK_TOL: f64 = 1e-12;

/// Two-atom basis, lexicographic in (atom 1, atom 2) with levels `0, 1, r`.
pub const RYDBERG_BASIS: [&str; 9] = ["00", "01", "0r", "10", "11", "1r", "r0", "r1", "rr"];

fn ket(label: &str) -> usize {
    RYDBERG_BASIS
        .iter()
        .position(|&l| l == label)
        .expect("label in basis")
}

fn dyad(dim: usize, row: usize, col: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim);
    m[(row, col)] = Complex64::new(1.0, 0.0);
    m
}

/// Energies in units of `Omega = 2 pi MHz`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RydbergParams {
    pub omega2: f64,
    pub omega: f64,
    pub gamma: f64,
}

impl Default for RydbergParams {
    fn default() -> Self {
        Self {
            omega2: 0.02,
            omega: 0.01,
            gamma: 0.03,
        }
    }
}

impl RydbergParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega2", self.omega2),
            ("omega", self.omega),
            ("gamma", self.gamma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v}")));
            }
        }
        Ok(())
    }
}

pub fn rydberg_hamiltonian(p: &RydbergParams) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(9);
    let mut add = |a: &str, b: &str, c: f64| {
        let (i, j) = (ket(a), ket(b));
        h[(i, j)] += Complex64::new(c, 0.0);
        h[(j, i)] += Complex64::new(c, 0.0);
    };
    add("10", "r0", p.omega2);
    add("01", "0r", p.omega2);
    for a in ["11", "00"] {
        for b in ["01", "10"] {
            add(a, b, p.omega);
        }
    }
    h
}

pub fn rydberg_jumps() -> [ComplexMatrix; 4] {
    [
        dyad(9, ket("01"), ket("0r")),
        dyad(9, ket("00"), ket("0r")),
        dyad(9, ket("10"), ket("r0")),
        dyad(9, ket("00"), ket("r0")),
    ]
}

/// `(|00> - |11>)/sqrt 2`
pub fn bell_state() -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); 9];
    let a = 0.5f64.sqrt();
    v[ket("00")] = Complex64::new(a, 0.0);
    v[ket("11")] = Complex64::new(-a, 0.0);
    v
}

/// Undriven nine-level model with four decay channels at `gamma/2`, and the
/// Bell state it pumps into. Fails if the Bell state is not dark.
pub fn build_rydberg(p: &RydbergParams) -> Result<(LindbladModel, Vec<Complex64>)> {
    p.validate()?;
    let h = rydberg_hamiltonian(p);
    let bell = bell_state();
    let norm = |v: Vec<Complex64>| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let hb = norm(h.apply(&bell)?);
    if hb > DARK_TOL {
        return Err(Error::DarkStateViolation(format!("|H phi| = {hb:.3e}")));
    }
    let mut channels = Vec::with_capacity(4);
    for (k, l) in rydberg_jumps().into_iter().enumerate() {
        let lb = norm(l.apply(&bell)?);
        if lb > DARK_TOL {
            return Err(Error::DarkStateViolation(format!(
                "|L{} phi| = {lb:.3e}",
                k + 1
            )));
        }
        channels.push(JumpChannel::constant(0.5 * p.gamma, l)?);
    }
    Ok((LindbladModel::undriven(h, channels)?, bell))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErasureParams {
    pub eps0: f64,
    pub eps_tau: f64,
    pub tau: f64,
    pub gamma: f64,
    pub bath_beta: f64,
}

impl Default for ErasureParams {
    fn default() -> Self {
        Self {
            eps0: 0.4,
            eps_tau: 10.0,
            tau: 10.0,
            gamma: 0.2,
            bath_beta: 1.0,
        }
    }
}

impl ErasureParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tau > 0.0
            && self.tau.is_finite()
            && self.gamma >= 0.0
            && self.gamma.is_finite()
            && self.bath_beta > 0.0
            && self.bath_beta.is_finite()
            && self.eps0 > 0.0
            && self.eps_tau > 0.0
            && self.eps0.is_finite()
            && self.eps_tau.is_finite();
        if !ok {
            return Err(Error::InvalidParameter(format!("{self:?}")));
        }
        Ok(())
    }

    /// `eps(t) = eps0 + (eps_tau - eps0) sin^2(pi t / 2 tau)`
    pub fn epsilon(&self, t: f64) -> f64 {
        let s = (PI * t / (2.0 * self.tau)).sin();
        self.eps0 + (self.eps_tau - self.eps0) * s * s
    }

    pub fn epsilon_rate(&self, t: f64) -> f64 {
        (self.eps_tau - self.eps0) * PI / (2.0 * self.tau) * (PI * t / self.tau).sin()
    }

    /// `theta(t) = pi (t/tau - 1)`
    pub fn theta(&self, t: f64) -> f64 {
        PI * (t / self.tau - 1.0)
    }

    pub fn theta_rate(&self) -> f64 {
        PI / self.tau
    }

    /// `(cos theta, sin theta)`, evaluated so both protocol endpoints are exact.
    fn theta_trig(&self, t: f64) -> (f64, f64) {
        if t <= 0.5 * self.tau {
            let x = PI * t / self.tau;
            (-x.cos(), -x.sin())
        } else {
            let th = self.theta(t);
            (th.cos(), th.sin())
        }
    }

    pub fn hamiltonian(&self, t: f64) -> ComplexMatrix {
        let (c, s) = self.theta_trig(t);
        let e = 0.5 * self.epsilon(t);
        (&pauli_z().scale_real(e * c) + &pauli_x().scale_real(e * s)).hermitized()
    }

    pub fn hamiltonian_rate(&self, t: f64) -> ComplexMatrix {
        let (c, s) = self.theta_trig(t);
        let a = 0.5 * self.epsilon_rate(t);
        let b = 0.5 * self.epsilon(t) * self.theta_rate();
        (&pauli_z().scale_real(a * c - b * s) + &pauli_x().scale_real(a * s + b * c)).hermitized()
    }

    /// Bose occupation `1/(e^{beta eps} - 1)` at the instantaneous gap.
    pub fn occupation(&self, t: f64) -> f64 {
        bose(self.bath_beta * self.epsilon(t))
    }

    /// `L1 = sqrt(eps (N+1)) |g><e|`, `L2 = sqrt(eps N) |e><g|` in the
    /// instantaneous eigenbasis.
    pub fn jumps(&self, t: f64) -> [ComplexMatrix; 2] {
        let es = eigh(&self.hamiltonian(t)).expect("protocol Hamiltonian is Hermitian");
        let (g, e) = (es.vector(0), es.vector(1));
        let eps = self.epsilon(t);
        let n = self.occupation(t);
        let down = ComplexMatrix::outer(&g, &e).expect("dims");
        let up = ComplexMatrix::outer(&e, &g).expect("dims");
        [
            down.scale_real((eps * (n + 1.0)).sqrt()),
            up.scale_real((eps * n).sqrt()),
        ]
    }
}

pub fn bose(x: f64) -> f64 {
    1.0 / x.exp_m1()
}

/// Driven qubit on `[0, tau]` with the analytic `dH/dt` installed.
pub fn build_erasure(p: &ErasureParams) -> Result<LindbladModel> {
    p.validate()?;
    let (a, b, c) = (*p, *p, *p);
    let channels = (0..2)
        .map(|k| {
            let q = *p;
            JumpChannel::new(
                p.gamma,
                Protocol::time_dependent(move |t| q.jumps(t)[k].clone()),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    LindbladModel::driven(
        2,
        Protocol::time_dependent(move |t| a.hamiltonian(t)),
        Some(Protocol::time_dependent(move |t| b.hamiltonian_rate(t))),
        channels,
        Some(c.tau),
        c.tau,
    )
}

/// The erasure model with Hamiltonian and jumps frozen at `t0`.
pub fn build_erasure_frozen(p: &ErasureParams, t0: f64) -> Result<LindbladModel> {
    p.validate()?;
    let channels = p
        .jumps(t0)
        .into_iter()
        .map(|l| JumpChannel::constant(p.gamma, l))
        .collect::<Result<Vec<_>>>()?;
    LindbladModel::undriven(p.hamiltonian(t0), channels)
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    GibbsAt {
        beta: f64,
    },
    /// Gibbs populations re-sorted ascending onto ascending energies.
    SortedAscendingDiagonal {
        beta: f64,
    },
    MaximallyMixed,
    Pure(Vec<Complex64>),
}

pub fn initial_state(kind: &InitialState, h0: &ComplexMatrix) -> Result<DensityMatrix> {
    match kind {
        InitialState::GibbsAt { beta } => Ok(gibbs_state(h0, *beta)?.gibbs),
        InitialState::SortedAscendingDiagonal { beta } => {
            if !beta.is_finite() {
                return Err(Error::InvalidParameter(format!("beta = {beta}")));
            }
            let es = eigh(h0)?;
            let (mut p, _) = boltzmann(&es.values, *beta);
            p.sort_by(|a, b| a.total_cmp(b));
            DensityMatrix::new(es.compose(&p))
        }
        InitialState::MaximallyMixed => Ok(DensityMatrix::maximally_mixed(h0.dim())),
        InitialState::Pure(psi) => {
            if psi.len() != h0.dim() {
                return Err(Error::DimensionMismatch {
                    expected: h0.dim(),
                    found: psi.len(),
                });
            }
            DensityMatrix::pure(psi)
        }
    }
}

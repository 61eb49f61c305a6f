//! Density matrices and the scalar functionals built on them: von Neumann
//! and diagonal entropies, relative entropy, Gibbs states, pure-state fidelity.

use crate::error::{Error, Result};
use crate::linalg::{eigh, trace_product, ComplexMatrix, EigenSystem, HERMITIAN_TOL};
use num_complex::Complex64;

pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-9;
/// Eigenvalue gap below which Hamiltonian levels are treated as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-9;
/// A Gibbs state whose smallest population falls below this is reported as
/// saturated; it is also the rank threshold used by [`relative_entropy`].
pub const SINGULAR_POPULATION: f64 = 1e-12;
const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (all to tolerance).
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let deviation = matrix.hermitian_deviation();
        if !(deviation <= HERMITIAN_TOL) {
            return Err(Error::NonHermitianInput { deviation });
        }
        let matrix = matrix.hermitized();
        let tr = matrix.trace().re;
        if !((tr - 1.0).abs() <= TRACE_TOL) {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let rho = Self { matrix };
        let min = rho.min_eigenvalue()?;
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(rho)
    }

    /// Wraps an integrator output: Hermitized but not re-validated, so that
    /// diagnostics can report how far positivity has drifted.
    pub(crate) fn from_raw(mut matrix: ComplexMatrix) -> Self {
        matrix.hermitize();
        Self { matrix }
    }

    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        check_normalized(psi)?;
        Ok(Self::from_raw(ComplexMatrix::outer(psi, psi)?))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_raw(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_diagonal(populations))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eigh(&self.matrix)?.values[0])
    }

    /// Eigenvalues with the small negative ones clamped to zero and the
    /// result renormalized. Errors if the state is outside tolerance.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let es = eigh(&self.matrix)?;
        clamp_probabilities(es.values)
    }

    /// `Tr[h rho]`
    pub fn expectation(&self, h: &ComplexMatrix) -> Result<f64> {
        Ok(trace_product(h, &self.matrix)?.re)
    }
}

fn check_normalized(psi: &[Complex64]) -> Result<()> {
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !((norm - 1.0).abs() <= NORM_TOL) {
        return Err(Error::UnnormalizedVector { norm });
    }
    Ok(())
}

fn clamp_probabilities(mut p: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(&min) = p.iter().min_by(|a, b| a.total_cmp(b)) {
        if !(min >= -POSITIVITY_TOL) {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
    }
    for x in p.iter_mut() {
        *x = x.clamp(0.0, 1.0);
    }
    let total: f64 = p.iter().sum();
    if !((total - 1.0).abs() <= TRACE_TOL) {
        return Err(Error::InvalidState(format!("trace {total} differs from 1")));
    }
    for x in p.iter_mut() {
        *x /= total;
    }
    Ok(p)
}

/// `-sum p ln p` with `0 ln 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    Ok(shannon_entropy(&rho.spectrum()?))
}

/// `D(rho || sigma) = Tr[rho ln rho] - Tr[rho ln sigma]`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let es = eigh(sigma.matrix())?;
    let min_eigenvalue = es.values[0];
    if min_eigenvalue <= SINGULAR_POPULATION {
        return Err(Error::SingularReference { min_eigenvalue });
    }
    let log_sigma = es.map(f64::ln)?;
    let neg_s = -von_neumann_entropy(rho)?;
    Ok(neg_s - trace_product(rho.matrix(), &log_sigma)?.re)
}

/// Populations `<E_n|rho|E_n>` in the given eigenbasis.
pub fn populations_in_basis(rho: &DensityMatrix, basis: &EigenSystem) -> Result<Vec<f64>> {
    (0..basis.dim())
        .map(|k| {
            let v = basis.vector(k);
            Ok(rho.matrix().sandwich(&v, &v)?.re)
        })
        .collect()
}

pub fn has_degeneracy(basis: &EigenSystem) -> bool {
    basis.clusters(DEGENERACY_GAP).iter().any(|r| r.len() > 1)
}

/// Diagonal entropy `S'` and coherence `S' - S` of `rho` relative to the
/// eigenbasis of a Hamiltonian.
///
/// Degenerate levels (gaps below [`DEGENERACY_GAP`]) are dephased as whole
/// blocks: `Pi[rho] = sum_k P_k rho P_k` over eigenprojectors, so the result
/// does not depend on how the solver picked vectors inside a degenerate
/// subspace. For non-degenerate spectra this is the usual population entropy.
pub fn dephase_and_coherence(rho: &DensityMatrix, basis: &EigenSystem) -> Result<(f64, f64)> {
    if rho.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: rho.dim(),
        });
    }
    let s = von_neumann_entropy(rho)?;
    let mut probs = Vec::with_capacity(rho.dim());
    for block in basis.clusters(DEGENERACY_GAP) {
        let vs: Vec<Vec<Complex64>> = block.clone().map(|k| basis.vector(k)).collect();
        if vs.len() == 1 {
            probs.push(rho.matrix().sandwich(&vs[0], &vs[0])?.re);
            continue;
        }
        let m = vs.len();
        let mut sub = ComplexMatrix::zeros(m);
        for a in 0..m {
            for b in 0..m {
                sub[(a, b)] = rho.matrix().sandwich(&vs[a], &vs[b])?;
            }
        }
        sub.hermitize();
        probs.extend(eigh(&sub)?.values);
    }
    let s_diag = shannon_entropy(&clamp_probabilities(probs)?);
    Ok((s_diag, s_diag - s))
}

/// `e^{-beta H} / Z` together with the data needed to evaluate bounds.
#[derive(Clone, Debug)]
pub struct ReferenceState {
    pub beta: f64,
    pub gibbs: DensityMatrix,
    pub log_z: f64,
    /// The smallest Gibbs population is below [`SINGULAR_POPULATION`]: the
    /// state is numerically a projector onto the dominant subspace.
    pub saturated: bool,
    /// Ascending eigenvalues of the Hamiltonian.
    pub energies: Vec<f64>,
    /// Gibbs populations matching `energies`.
    pub populations: Vec<f64>,
}

impl ReferenceState {
    pub fn temperature(&self) -> Option<f64> {
        (self.beta != 0.0).then(|| 1.0 / self.beta)
    }

    /// `F = -T ln Z`; undefined at `beta = 0`.
    pub fn free_energy(&self) -> Option<f64> {
        self.temperature().map(|t| -t * self.log_z)
    }

    pub fn energy(&self) -> f64 {
        self.energies
            .iter()
            .zip(&self.populations)
            .map(|(e, p)| e * p)
            .sum()
    }

    /// Entropy from `ln p_n = -beta E_n - ln Z`, accurate even when saturated.
    pub fn entropy(&self) -> f64 {
        -self
            .energies
            .iter()
            .zip(&self.populations)
            .filter(|(_, &p)| p > 0.0)
            .map(|(&e, &p)| p * (-self.beta * e - self.log_z))
            .sum::<f64>()
    }
}

/// Log-sum-exp weights of `e^{-beta E}`: returns (populations, ln Z).
pub(crate) fn boltzmann(energies: &[f64], beta: f64) -> (Vec<f64>, f64) {
    let exponents: Vec<f64> = energies.iter().map(|&e| -beta * e).collect();
    let top = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = exponents.iter().map(|&x| (x - top).exp()).collect();
    let z: f64 = w.iter().sum();
    (w.iter().map(|x| x / z).collect(), top + z.ln())
}

pub fn gibbs_state(h: &ComplexMatrix, beta: f64) -> Result<ReferenceState> {
    gibbs_from_basis(&eigh(h)?, beta)
}

pub fn gibbs_from_basis(basis: &EigenSystem, beta: f64) -> Result<ReferenceState> {
    if !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta = {beta}")));
    }
    let (populations, log_z) = boltzmann(&basis.values, beta);
    let saturated = populations.iter().cloned().fold(f64::INFINITY, f64::min) < SINGULAR_POPULATION;
    if saturated {
        log::debug!("Gibbs state at beta = {beta} is saturated");
    }
    Ok(ReferenceState {
        beta,
        gibbs: DensityMatrix::from_raw(basis.compose(&populations)),
        log_z,
        saturated,
        energies: basis.values.clone(),
        populations,
    })
}

/// `<psi| rho |psi>`
pub fn fidelity_pure(rho: &DensityMatrix, psi: &[Complex64]) -> Result<f64> {
    check_normalized(psi)?;
    Ok(rho.matrix().sandwich(psi, psi)?.re)
}

/// Per-sample thermodynamic state functionals.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermoSample {
    pub t: f64,
    pub energy: f64,
    pub entropy: f64,
    pub diagonal_entropy: f64,
    pub coherence: f64,
    /// `D(rho || rho_th)` when a reference is attached and full rank.
    pub relative_entropy: Option<f64>,
    /// `E - T_R S`, the nonequilibrium free energy, when `beta_R != 0`.
    pub free_energy_neq: Option<f64>,
}

pub fn thermo_sample(
    t: f64,
    rho: &DensityMatrix,
    h: &ComplexMatrix,
    basis: &EigenSystem,
    reference: Option<&ReferenceState>,
) -> Result<ThermoSample> {
    let energy = rho.expectation(h)?;
    let (diagonal_entropy, coherence) = dephase_and_coherence(rho, basis)?;
    let entropy = diagonal_entropy - coherence;
    let (relative_entropy, free_energy_neq) = match reference {
        Some(r) => {
            let d = if r.saturated {
                None
            } else {
                Some(self::relative_entropy(rho, &r.gibbs)?)
            };
            (d, r.temperature().map(|tr| energy - tr * entropy))
        }
        None => (None, None),
    };
    Ok(ThermoSample {
        t,
        energy,
        entropy,
        diagonal_entropy,
        coherence,
        relative_entropy,
        free_energy_neq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli_x, pauli_z};
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn entropy_examples() {
        let pure = DensityMatrix::pure(&[c(1.0), c(0.0)]).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&pure).unwrap(), 0.0, epsilon = 1e-14);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_abs_diff_eq!(
            von_neumann_entropy(&mixed).unwrap(),
            2f64.ln(),
            epsilon = 1e-14
        );
        let d = DensityMatrix::diagonal(&[0.9, 0.1]).unwrap();
        let expected = -0.9 * 0.9f64.ln() - 0.1 * 0.1f64.ln();
        assert_abs_diff_eq!(von_neumann_entropy(&d).unwrap(), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(expected, 0.3251, epsilon = 1e-4);
    }

    #[test]
    fn construction_rejects_bad_states() {
        assert!(matches!(
            DensityMatrix::diagonal(&[0.5, 0.6]),
            Err(Error::InvalidState(_))
        ));
        assert!(matches!(
            DensityMatrix::diagonal(&[1.1, -0.1]),
            Err(Error::InvalidState(_))
        ));
        let mut m = ComplexMatrix::from_diagonal(&[0.5, 0.5]);
        m[(0, 1)] = c(0.1);
        assert!(matches!(
            DensityMatrix::new(m),
            Err(Error::NonHermitianInput { .. })
        ));
        assert!(matches!(
            DensityMatrix::pure(&[c(1.0), c(1.0)]),
            Err(Error::UnnormalizedVector { .. })
        ));
    }

    #[test]
    fn tiny_negative_eigenvalues_are_clamped() {
        let rho = DensityMatrix::diagonal(&[1.0 + 5e-10, -5e-10]).unwrap();
        let p = rho.spectrum().unwrap();
        assert!(p.iter().all(|&x| x >= 0.0));
        assert_abs_diff_eq!(von_neumann_entropy(&rho).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn relative_entropy_examples() {
        let r = DensityMatrix::diagonal(&[0.7, 0.3]).unwrap();
        assert_abs_diff_eq!(relative_entropy(&r, &r).unwrap(), 0.0, epsilon = 1e-14);
        let pure = DensityMatrix::pure(&[c(1.0), c(0.0)]).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_abs_diff_eq!(
            relative_entropy(&pure, &mixed).unwrap(),
            2f64.ln(),
            epsilon = 1e-14
        );
        let expected = 0.7 * 1.4f64.ln() + 0.3 * 0.6f64.ln();
        assert_abs_diff_eq!(
            relative_entropy(&r, &mixed).unwrap(),
            expected,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(expected, 0.0823, epsilon = 1e-4);
        assert!(matches!(
            relative_entropy(&mixed, &pure),
            Err(Error::SingularReference { .. })
        ));
    }

    #[test]
    fn coherence_examples() {
        let basis = eigh(&pauli_z()).unwrap();
        let diag = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        let (_, coh) = dephase_and_coherence(&diag, &basis).unwrap();
        assert_abs_diff_eq!(coh, 0.0, epsilon = 1e-14);

        let h = 0.5f64.sqrt();
        let plus = DensityMatrix::pure(&[c(h), c(h)]).unwrap();
        let (sd, coh) = dephase_and_coherence(&plus, &basis).unwrap();
        assert_abs_diff_eq!(sd, 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(coh, 2f64.ln(), epsilon = 1e-12);

        let mut m = ComplexMatrix::from_diagonal(&[0.5, 0.5]);
        m[(0, 1)] = c(0.25);
        m[(1, 0)] = c(0.25);
        let rho = DensityMatrix::new(m).unwrap();
        let (sd, coh) = dephase_and_coherence(&rho, &basis).unwrap();
        let s = -0.75 * 0.75f64.ln() - 0.25 * 0.25f64.ln();
        assert_abs_diff_eq!(sd, 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(coh, 2f64.ln() - s, epsilon = 1e-12);
        assert_abs_diff_eq!(coh, 0.1308, epsilon = 1e-4);
    }

    #[test]
    fn degenerate_blocks_are_dephased_as_a_whole() {
        // H = 0 on a qubit: a single degenerate block, nothing is dephased.
        let basis = eigh(&ComplexMatrix::zeros(2)).unwrap();
        assert!(has_degeneracy(&basis));
        let h = 0.5f64.sqrt();
        let plus = DensityMatrix::pure(&[c(h), c(h)]).unwrap();
        let (sd, coh) = dephase_and_coherence(&plus, &basis).unwrap();
        assert_abs_diff_eq!(sd, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(coh, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gibbs_examples() {
        let h9 = ComplexMatrix::from_diagonal(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]);
        let r = gibbs_state(&h9, 0.0).unwrap();
        assert!(
            (r.gibbs.matrix() - &ComplexMatrix::identity(9).scale_real(1.0 / 9.0)).max_abs()
                < 1e-15
        );
        assert_abs_diff_eq!(r.log_z, 9f64.ln(), epsilon = 1e-14);
        assert!(r.free_energy().is_none());

        let hq = pauli_z().scale_real(0.5);
        let r = gibbs_state(&hq, 1.0).unwrap();
        let p_ground = 0.5f64.exp() / (2.0 * 0.5f64.cosh());
        assert_abs_diff_eq!(r.gibbs.matrix()[(1, 1)].re, p_ground, epsilon = 1e-14);
        assert_abs_diff_eq!(r.gibbs.matrix()[(0, 0)].re, 1.0 - p_ground, epsilon = 1e-14);
        assert_abs_diff_eq!(p_ground, 0.7311, epsilon = 1e-4);
        assert_abs_diff_eq!(r.log_z, (2.0 * 0.5f64.cosh()).ln(), epsilon = 1e-14);
        assert!(!r.saturated);

        let r = gibbs_state(&hq, 500.0).unwrap();
        assert!(r.saturated);
        assert_abs_diff_eq!(r.gibbs.matrix()[(1, 1)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.log_z, 250.0, epsilon = 1e-12);
    }

    #[test]
    fn negative_beta_inverts_populations() {
        let hq = pauli_z().scale_real(0.5);
        let r = gibbs_state(&hq, -1.0).unwrap();
        let p_ground = 0.5f64.exp() / (2.0 * 0.5f64.cosh());
        assert_abs_diff_eq!(r.gibbs.matrix()[(0, 0)].re, p_ground, epsilon = 1e-14);
        assert!(r.free_energy().unwrap().is_finite());
    }

    #[test]
    fn fidelity_examples() {
        let h = 0.5f64.sqrt();
        let psi = [c(h), c(h)];
        let rho = DensityMatrix::pure(&psi).unwrap();
        assert_abs_diff_eq!(fidelity_pure(&rho, &psi).unwrap(), 1.0, epsilon = 1e-14);
        let mixed = DensityMatrix::maximally_mixed(3);
        let e0 = [c(1.0), c(0.0), c(0.0)];
        assert_abs_diff_eq!(
            fidelity_pure(&mixed, &e0).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-14
        );
        let d = DensityMatrix::diagonal(&[0.7, 0.3]).unwrap();
        assert_abs_diff_eq!(fidelity_pure(&d, &psi).unwrap(), 0.5, epsilon = 1e-14);
        assert!(matches!(
            fidelity_pure(&d, &[c(1.0), c(0.1)]),
            Err(Error::UnnormalizedVector { .. })
        ));
    }

    #[test]
    fn thermo_sample_satisfies_first_law_decomposition() {
        let h = (&pauli_z().scale_real(0.7) + &pauli_x().scale_real(0.2)).hermitized();
        let basis = eigh(&h).unwrap();
        let reference = gibbs_from_basis(&basis, 1.3).unwrap();
        let mut m = ComplexMatrix::from_diagonal(&[0.6, 0.4]);
        m[(0, 1)] = Complex64::new(0.1, 0.2);
        m[(1, 0)] = Complex64::new(0.1, -0.2);
        let rho = DensityMatrix::new(m).unwrap();
        let s = thermo_sample(0.0, &rho, &h, &basis, Some(&reference)).unwrap();
        let tr = 1.0 / 1.3;
        let lhs = s.energy - tr * s.entropy;
        let rhs = reference.free_energy().unwrap() + tr * s.relative_entropy.unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        assert_abs_diff_eq!(s.free_energy_neq.unwrap(), lhs, epsilon = 1e-15);
        assert!(s.coherence >= -1e-10);
    }
}

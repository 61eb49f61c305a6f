//! Dense complex linear algebra for small Hermitian problems.
//!
//! Everything here is sized for d <= 9: matrices are stored densely in
//! row-major order and the eigensolver is a cyclic complex Jacobi iteration.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Entrywise Hermiticity tolerance accepted by [`eigh`] and [`spectral_map`].
pub const HERMITIAN_TOL: f64 = 1e-10;

const JACOBI_OFF_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 64;
// Relative width under which Jacobi eigenvalues are treated as one cluster
// for ordering purposes.
const ORDERING_CLUSTER_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "matrix dimension must be positive".into(),
            ));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Self { dim, entries }
    }

    pub fn from_real(dim: usize, rows: &[f64]) -> Result<Self> {
        Self::new(dim, rows.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(x, 0.0);
        }
        m
    }

    /// The dyad `|ket><bra|`.
    pub fn outer(ket: &[Complex64], bra: &[Complex64]) -> Result<Self> {
        if ket.len() != bra.len() {
            return Err(Error::DimensionMismatch {
                expected: ket.len(),
                found: bra.len(),
            });
        }
        Ok(Self::from_fn(ket.len(), |i, j| ket[i] * bra[j].conj()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn dagger(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| self.entries[j * n + i].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self[(i, i)].re).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max_ij |m_ij - conj(m_ji)|
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Replaces the matrix with `(m + m^dagger) / 2`.
    pub fn hermitize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            self.entries[i * n + i].im = 0.0;
            for j in (i + 1)..n {
                let avg = 0.5 * (self.entries[i * n + j] + self.entries[j * n + i].conj());
                self.entries[i * n + j] = avg;
                self.entries[j * n + i] = avg.conj();
            }
        }
    }

    pub fn hermitized(&self) -> Self {
        let mut m = self.clone();
        m.hermitize();
        m
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn scale_real(&self, x: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&z| z * x).collect(),
        }
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &ComplexMatrix) {
        assert_eq!(self.dim, other.dim, "axpy dimension mismatch");
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += b * c;
        }
    }

    /// Matrix product. Zero entries of the left factor are skipped, which
    /// makes products with dyads and sparse Hamiltonians cheap.
    pub fn matmul(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            let row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let b_row = &rhs.entries[k * n..(k + 1) * n];
                for (o, &b) in row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        ComplexMatrix {
            dim: n,
            entries: out,
        }
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        let n = self.dim;
        Ok((0..n)
            .map(|i| (0..n).map(|j| self.entries[i * n + j] * v[j]).sum())
            .collect())
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    /// `<u| self |v>`
    pub fn sandwich(&self, u: &[Complex64], v: &[Complex64]) -> Result<Complex64> {
        let mv = self.apply(v)?;
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: u.len(),
            });
        }
        Ok(u.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn is_finite(&self) -> bool {
        self.entries
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn check_same_dim(&self, other: &ComplexMatrix) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.4e}{:+.4e}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        for (a, b) in self.entries.iter_mut().zip(&rhs.entries) {
            *a += b;
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// Eigendecomposition `m = V diag(values) V^dagger` of a Hermitian matrix.
///
/// `values` are ascending; the columns of `vectors` are orthonormal.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.vectors.column(k)
    }

    pub fn spread(&self) -> f64 {
        match (self.values.first(), self.values.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }

    /// `V diag(f(values)) V^dagger`, Hermitized.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
        let fv = self
            .values
            .iter()
            .map(|&x| {
                let y = f(x);
                if y.is_finite() {
                    Ok(y)
                } else {
                    Err(Error::NonFiniteFunctionValue { eigenvalue: x })
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(self.compose(&fv))
    }

    /// `V diag(weights) V^dagger` for precomputed weights.
    pub fn compose(&self, weights: &[f64]) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.vectors;
        let mut out = ComplexMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * v[(j, k)].conj() * weights[k])
                .sum()
        });
        out.hermitize();
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.compose(&self.values)
    }

    /// Index ranges of eigenvalues whose consecutive gaps are at most `gap`.
    pub fn clusters(&self, gap: f64) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..=self.values.len() {
            if k == self.values.len() || self.values[k] - self.values[k - 1] > gap {
                out.push(start..k);
                start = k;
            }
        }
        out
    }
}

/// Hermitian eigendecomposition by cyclic Jacobi rotations.
///
/// Eigenvalues come back ascending. Vectors belonging to (numerically)
/// degenerate eigenvalues are ordered by the index of their largest-magnitude
/// component, and every vector is phased so that component is real-positive,
/// so identical input always yields identical output.
pub fn eigh(m: &ComplexMatrix) -> Result<EigenSystem> {
    let deviation = m.hermitian_deviation();
    if !(deviation <= HERMITIAN_TOL) {
        return Err(Error::NonHermitianInput { deviation });
    }
    let n = m.dim();
    let mut a = m.hermitized();
    let mut v = ComplexMatrix::identity(n);
    let tol = JACOBI_OFF_TOL * a.frobenius_norm().max(1.0);

    // Past the tolerance, keep sweeping while the off-diagonal norm still
    // shrinks; small eigenvalues of graded matrices gain relative accuracy.
    let mut previous = f64::INFINITY;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off <= tol * 1e-20 || (off <= tol && off > 0.5 * previous) {
            break;
        }
        previous = off;
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let raw_values: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let pivots: Vec<usize> = (0..n).map(|k| pivot_index(&v, k)).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw_values[i].total_cmp(&raw_values[j]));

    // Within clusters of equal eigenvalues, reorder vectors by pivot index
    // and hand out the cluster's values in ascending order.
    let scale = raw_values.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
    let mut sorted_order = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n
            && raw_values[order[end]] - raw_values[order[end - 1]] <= ORDERING_CLUSTER_TOL * scale
        {
            end += 1;
        }
        let mut block: Vec<usize> = order[start..end].to_vec();
        let block_values: Vec<f64> = block.iter().map(|&k| raw_values[k]).collect();
        block.sort_by_key(|&k| pivots[k]);
        sorted_order.extend(block);
        values.extend(block_values);
        start = end;
    }

    let mut vectors = ComplexMatrix::zeros(n);
    for (col, &k) in sorted_order.iter().enumerate() {
        let p = pivots[k];
        let c = v[(p, k)];
        let phase = if c.norm() > 0.0 {
            c.conj() / c.norm()
        } else {
            ONE
        };
        for i in 0..n {
            vectors[(i, col)] = v[(i, k)] * phase;
        }
        vectors[(p, col)] = Complex64::new(vectors[(p, col)].norm(), 0.0);
    }

    Ok(EigenSystem { values, vectors })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// First index whose magnitude is within relative 1e-10 of the largest.
fn pivot_index(v: &ComplexMatrix, col: usize) -> usize {
    let n = v.dim();
    let max = (0..n).map(|i| v[(i, col)].norm()).fold(0.0, f64::max);
    (0..n)
        .find(|&i| v[(i, col)].norm() >= max * (1.0 - 1e-10))
        .unwrap_or(0)
}

/// Zeroes `a[p][q]` with the unitary `U = diag(1, e^{-i phi}) R(theta)` acting
/// on rows/columns p and q, and accumulates `v <- v U`.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    // Renormalise: for subnormal entries the plain quotient drifts off the unit circle.
    let phase_conj = apq.conj() / mag;
    let phase_conj = phase_conj / phase_conj.norm();
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let u_pp = Complex64::new(c, 0.0);
    let u_pq = Complex64::new(s, 0.0);
    let u_qp = phase_conj * (-s);
    let u_qq = phase_conj * c;

    let n = a.dim();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * u_pp + akq * u_qp;
        a[(k, q)] = akp * u_pq + akq * u_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
        a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}

/// `V f(diag(lambda)) V^dagger` for Hermitian `m`.
///
/// The caller is responsible for conventions such as `0 ln 0 = 0`; a
/// non-finite `f(lambda)` is an error.
pub fn spectral_map(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    eigh(m)?.map(f)
}

/// `Tr[a b]` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Complex64> {
    a.check_same_dim(b)?;
    let n = a.dim();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a.entries[i * n + j] * b.entries[j * n + i];
        }
    }
    Ok(acc)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_fn(2, |i, j| if i != j { ONE } else { ZERO })
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&[1.0, -1.0])
}

pub fn pauli_y() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2);
    m[(0, 1)] = Complex64::new(0.0, -1.0);
    m[(1, 0)] = Complex64::new(0.0, 1.0);
    m
}

//! Dense complex and Hermitian linear algebra.
//!
//! Every matrix function here goes through one Hermitian eigendecomposition:
//! `f(A) = V diag(f(λ)) V†`. Dimensions in this crate stay in the tens, so a
//! single decomposition per iterate is cheaper than maintaining separate
//! exp/log kernels.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance on `|a_ij - conj(a_ji)|` (relative to the largest entry) accepted
/// when building a Hermitian matrix from raw entries.
pub const HERMITIAN_TOL: f64 = 1e-12;

const EIG_MAX_ITER: usize = 10_000;

#[inline]
pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn first_non_finite(m: &DMatrix<Complex64>) -> Option<(usize, usize)> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Some((i, j));
            }
        }
    }
    None
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Dense rectangular complex matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::Shape { rows, cols, got: entries.len() });
        }
        Self::from_matrix(DMatrix::from_row_iterator(rows, cols, entries))
    }

    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if let Some((i, j)) = first_non_finite(&m) {
            return Err(Error::NonFinite(i, j));
        }
        Ok(Self(m))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }
}

impl AsRef<DMatrix<Complex64>> for ComplexMatrix {
    fn as_ref(&self) -> &DMatrix<Complex64> {
        &self.0
    }
}

/// Square complex matrix equal to its conjugate transpose.
///
/// Construction symmetrizes exactly, so the diagonal is always real and
/// `a_ij == conj(a_ji)` holds bitwise.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(DMatrix<Complex64>);

impl HermitianMatrix {
    /// Validates `m` against [`HERMITIAN_TOL`] and symmetrizes it.
    pub fn try_from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare(m.nrows(), m.ncols()));
        }
        if m.nrows() == 0 {
            return Err(Error::Shape { rows: 0, cols: 0, got: 0 });
        }
        if let Some((i, j)) = first_non_finite(&m) {
            return Err(Error::NonFinite(i, j));
        }
        let scale = max_abs(&m).max(1.0);
        let mut worst = 0.0f64;
        for i in 0..m.nrows() {
            for j in i..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if worst > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(worst));
        }
        Ok(Self::symmetrized(m))
    }

    /// Builds from row-major entries.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::Shape { rows: dim, cols: dim, got: entries.len() });
        }
        Self::try_from_matrix(DMatrix::from_row_iterator(dim, dim, entries))
    }

    /// Takes the Hermitian part of a matrix that is Hermitian up to rounding.
    pub(crate) fn symmetrized(mut m: DMatrix<Complex64>) -> Self {
        let n = m.nrows();
        for i in 0..n {
            m[(i, i)].im = 0.0;
            for j in (i + 1)..n {
                let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                m[(i, j)] = avg;
                m[(j, i)] = avg.conj();
            }
        }
        Self(m)
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(DMatrix::from_fn(n, n, |i, j| if i == j { c(diag[i]) } else { c(0.0) }))
    }

    /// `weight · v v†`.
    pub fn outer(v: &DVector<Complex64>, weight: f64) -> Self {
        Self::symmetrized(v * v.adjoint() * c(weight))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    /// Real trace pairing `tr(A B)`; both arguments Hermitian so the result is real.
    pub fn inner(&self, other: &Self) -> f64 {
        // tr(AB) = Σ_ij A_ij B_ji = Σ_ij A_ij conj(B_ij)
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a * b.conj()).re).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * c(s))
    }

    /// Congruence `A M A†`, Hermitian for Hermitian `M`.
    pub fn congruence(&self, a: &ComplexMatrix) -> Self {
        Self::symmetrized(a.as_matrix() * &self.0 * a.as_matrix().adjoint())
    }

    pub fn is_finite(&self) -> bool {
        first_non_finite(&self.0).is_none()
    }

    pub fn eig(&self) -> Result<EigenDecomposition> {
        eig(self)
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix(self.0.clone())
    }

    pub fn to_row_major(&self) -> Vec<Complex64> {
        self.to_complex().to_row_major()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }
}

impl AsRef<DMatrix<Complex64>> for HermitianMatrix {
    fn as_ref(&self) -> &DMatrix<Complex64> {
        &self.0
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: Self) -> HermitianMatrix {
        HermitianMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: Self) -> HermitianMatrix {
        HermitianMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn neg(self) -> HermitianMatrix {
        HermitianMatrix(-&self.0)
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, rhs: f64) -> HermitianMatrix {
        self.scale(rhs)
    }
}

impl AddAssign<&HermitianMatrix> for HermitianMatrix {
    fn add_assign(&mut self, rhs: &HermitianMatrix) {
        self.0 += &rhs.0;
    }
}

/// Spectral decomposition `A = V diag(λ) V†` with eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Columns are orthonormal eigenvectors, aligned with `eigenvalues`.
    pub eigenvectors: DMatrix<Complex64>,
}

impl EigenDecomposition {
    pub fn max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvector for the `k`-th largest eigenvalue.
    pub fn vector(&self, k: usize) -> DVector<Complex64> {
        self.eigenvectors.column(k).into_owned()
    }

    /// `V diag(w) V†` for an explicit weight vector.
    pub fn assemble(&self, weights: &[f64]) -> HermitianMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (k, w) in weights.iter().enumerate() {
            scaled.column_mut(k).scale_mut(*w);
        }
        HermitianMatrix::symmetrized(scaled * self.eigenvectors.adjoint())
    }

    /// `V diag(f(λ)) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let w: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.assemble(&w)
    }
}

/// Hermitian eigendecomposition, eigenvalues sorted descending (ties keep the
/// solver's index order, so the output is a deterministic function of the input).
pub fn eig(a: &HermitianMatrix) -> Result<EigenDecomposition> {
    let m = a.as_matrix();
    let n = m.nrows();
    if let Some((i, j)) = first_non_finite(m) {
        return Err(Error::NonFinite(i, j));
    }
    let fail = || Error::NoConvergence { dim: n, frobenius: m.norm(), max_abs: max_abs(m) };
    let se = m.clone().try_symmetric_eigen(f64::EPSILON, EIG_MAX_ITER).ok_or_else(fail)?;
    if se.eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(fail());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[j].total_cmp(&se.eigenvalues[i]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, k| se.eigenvectors[(r, order[k])]);
    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

/// Largest argument accepted by `f64::exp` without overflow.
pub fn exp_limit() -> f64 {
    f64::MAX.ln()
}

/// `exp(A)`; fails rather than returning infinities.
pub fn matrix_exp(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let ed = eig(a)?;
    let limit = exp_limit();
    if ed.max() > limit {
        return Err(Error::ExpOverflow { max_eigenvalue: ed.max(), limit });
    }
    Ok(ed.map(f64::exp))
}

/// Default eigenvalue floor for [`matrix_log`].
pub const LOG_FLOOR: f64 = 1e-300;

/// Tolerance on negative eigenvalues treated as PSD rounding noise.
pub const PSD_TOL: f64 = 1e-10;

/// `log(A)` for PSD `A`, with eigenvalues clamped below at `floor`.
pub fn matrix_log(a: &HermitianMatrix, floor: f64) -> Result<HermitianMatrix> {
    let ed = eig(a)?;
    if ed.min() < -PSD_TOL {
        return Err(Error::NotPsd(ed.min()));
    }
    Ok(ed.map(|l| l.max(floor).ln()))
}

/// Sum of singular values.
pub fn trace_norm(a: &impl AsRef<DMatrix<Complex64>>) -> f64 {
    a.as_ref().singular_values().iter().sum()
}

/// Largest singular value.
pub fn spectral_norm(a: &impl AsRef<DMatrix<Complex64>>) -> f64 {
    a.as_ref().singular_values().iter().copied().fold(0.0, f64::max)
}

pub fn frobenius_norm(a: &impl AsRef<DMatrix<Complex64>>) -> f64 {
    a.as_ref().norm()
}

/// Hermitian part `(A + A†)/2` of a square matrix.
pub fn hermitianize(a: &ComplexMatrix) -> Result<HermitianMatrix> {
    if a.rows() != a.cols() {
        return Err(Error::NotSquare(a.rows(), a.cols()));
    }
    let m = a.as_matrix();
    Ok(HermitianMatrix::symmetrized((m + m.adjoint()) * c(0.5)))
}

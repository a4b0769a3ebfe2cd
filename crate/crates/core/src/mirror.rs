//! Quantum-entropy mirror map.
//!
//! `ω(X) = tr(X log X − X)` on unit-trace PSD matrices, its conjugate
//! `ω*(Y) = log tr exp(Y + I)`, and the Gibbs state `∇ω*(Y)`. All exp/log-sum
//! evaluations subtract the top eigenvalue first; dual iterates grow linearly
//! with the iteration count and would overflow a naive `exp` quickly.

use crate::error::{Error, Result};
use crate::linalg::{eig, EigenDecomposition, HermitianMatrix, PSD_TOL};

/// Eigenvalues below this contribute nothing to `tr(X log X)` (0·log 0 = 0).
pub const ENTROPY_CUTOFF: f64 = 1e-15;

/// Smallest eigenvalue accepted for the second argument of the divergence.
pub const DIVERGENCE_MIN_EIGENVALUE: f64 = 1e-12;

fn entropy_term(spectrum: &[f64]) -> f64 {
    spectrum.iter().filter(|&&l| l > ENTROPY_CUTOFF).map(|&l| l * l.ln()).sum()
}

fn psd_spectrum(x: &HermitianMatrix) -> Result<EigenDecomposition> {
    let ed = eig(x)?;
    if ed.min() < -PSD_TOL {
        return Err(Error::NotPsd(ed.min()));
    }
    Ok(ed)
}

/// Softmax weights `exp(λ_i − λ_max) / Σ_j exp(λ_j − λ_max)`, optionally with
/// an extra zero-valued slack coordinate in the normalizer.
fn shifted_weights(eigenvalues: &[f64], slack: bool) -> Vec<f64> {
    let top = if slack { eigenvalues[0].max(0.0) } else { eigenvalues[0] };
    let mut w: Vec<f64> = eigenvalues.iter().map(|&l| (l - top).exp()).collect();
    let mut total: f64 = w.iter().sum();
    if slack {
        total += (-top).exp();
    }
    for v in &mut w {
        *v /= total;
    }
    w
}

/// Quantum entropy `tr(X log X − X)`.
pub fn quantum_entropy(x: &HermitianMatrix) -> Result<f64> {
    let ed = psd_spectrum(x)?;
    Ok(entropy_term(&ed.eigenvalues) - x.trace())
}

/// `log tr exp(Y + I)`, evaluated as `λ_max + 1 + log Σ exp(λ_i − λ_max)`.
pub fn conjugate_entropy(y: &HermitianMatrix) -> Result<f64> {
    let ed = eig(y)?;
    Ok(log_sum_exp_plus_one(&ed.eigenvalues))
}

fn log_sum_exp_plus_one(eigenvalues: &[f64]) -> f64 {
    let top = eigenvalues[0];
    let s: f64 = eigenvalues.iter().map(|&l| (l - top).exp()).sum();
    top + 1.0 + s.ln()
}

/// Gibbs state `exp(Y + I) / tr exp(Y + I)`; unit trace and PSD for any finite `Y`.
pub fn gibbs_map(y: &HermitianMatrix) -> Result<HermitianMatrix> {
    let ed = eig(y)?;
    Ok(gibbs_from_eig(&ed))
}

pub(crate) fn gibbs_from_eig(ed: &EigenDecomposition) -> HermitianMatrix {
    ed.assemble(&shifted_weights(&ed.eigenvalues, false))
}

/// Mirror map onto `{X ⪰ 0, tr X ≤ p}`.
///
/// Equivalent to the Gibbs state of `diag(Y, 0)` with the slack coordinate
/// dropped and the result scaled by `p`. The slack block decouples, so the
/// `(n+1)`-dimensional decomposition is the `n`-dimensional one plus the
/// eigenvalue 0; only the normalizer sees it.
pub fn gibbs_map_bounded(y: &HermitianMatrix, p: f64) -> Result<HermitianMatrix> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Domain(format!("trace bound must be positive, got {p}")));
    }
    let ed = eig(y)?;
    Ok(gibbs_bounded_from_eig(&ed, p))
}

pub(crate) fn gibbs_bounded_from_eig(ed: &EigenDecomposition, p: f64) -> HermitianMatrix {
    let w: Vec<f64> = shifted_weights(&ed.eigenvalues, true).into_iter().map(|v| v * p).collect();
    ed.assemble(&w)
}

/// Bregman divergence of the quantum entropy,
/// `tr(X log X − X log Y) − tr X + tr Y`.
///
/// The trailing `tr Y − tr X` vanishes when both arguments have equal trace;
/// it keeps the value nonnegative for sub-unit traces.
pub fn von_neumann_divergence(x: &HermitianMatrix, y: &HermitianMatrix) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: y.dim() });
    }
    let ex = psd_spectrum(x)?;
    let ey = eig(y)?;
    if ey.min() < DIVERGENCE_MIN_EIGENVALUE {
        return Err(Error::Domain(format!(
            "divergence second argument must be positive definite (min eigenvalue {:e})",
            ey.min()
        )));
    }
    // tr(X log Y) = Σ_k log μ_k · v_k† X v_k
    let xm = x.as_matrix();
    let cross: f64 = (0..ey.dim())
        .map(|k| {
            let v = ey.eigenvectors.column(k);
            let q = (v.adjoint() * xm * v)[(0, 0)].re;
            q * ey.eigenvalues[k].ln()
        })
        .sum();
    Ok(entropy_term(&ex.eigenvalues) - cross - x.trace() + y.trace())
}

/// Fenchel coupling `ω(Q) + ω*(Y) − tr(QY)`.
pub fn fenchel_coupling(q: &HermitianMatrix, y: &HermitianMatrix) -> Result<f64> {
    if q.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: q.dim(), got: y.dim() });
    }
    Ok(quantum_entropy(q)? + conjugate_entropy(y)? - q.inner(y))
}

/// Dual/primal pair of a single block: `primal` caches the mirror image of `dual`.
#[derive(Clone, Debug)]
pub struct MirrorPoint {
    pub dual: HermitianMatrix,
    pub primal: HermitianMatrix,
}

impl MirrorPoint {
    /// Unit-trace point: `primal = gibbs_map(dual)`.
    pub fn from_dual(dual: HermitianMatrix) -> Result<Self> {
        let primal = gibbs_map(&dual)?;
        Ok(Self { dual, primal })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius_norm, hermitianize, ComplexMatrix};
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> HermitianMatrix {
        let a = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
        });
        hermitianize(&ComplexMatrix::from_matrix(a).unwrap()).unwrap()
    }

    #[test]
    fn entropy_examples() {
        for n in [1usize, 2, 5] {
            let x = HermitianMatrix::identity(n).scale(1.0 / n as f64);
            assert_abs_diff_eq!(quantum_entropy(&x).unwrap(), -(n as f64).ln() - 1.0, epsilon = 1e-13);
        }
        let v = DVector::from_vec(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]);
        assert_abs_diff_eq!(quantum_entropy(&HermitianMatrix::outer(&v, 1.0)).unwrap(), -1.0, epsilon = 1e-13);

        let expected = 0.5 * 0.5f64.ln() + 0.25 * 0.25f64.ln() - 0.75;
        let got = quantum_entropy(&HermitianMatrix::from_real_diagonal(&[0.5, 0.25])).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-14);
        assert_abs_diff_eq!(got, -1.44315, epsilon = 1e-5);

        assert!(matches!(
            quantum_entropy(&HermitianMatrix::from_real_diagonal(&[1.0, -0.1])),
            Err(Error::NotPsd(_))
        ));
    }

    #[test]
    fn conjugate_examples() {
        assert_abs_diff_eq!(conjugate_entropy(&HermitianMatrix::zeros(2)).unwrap(), 1.0 + 2f64.ln(), epsilon = 1e-14);
        for a in [-3.0, 0.5, 700.0, 1e6] {
            let y = HermitianMatrix::from_real_diagonal(&[a, a]);
            let got = conjugate_entropy(&y).unwrap();
            assert!((got - (a + 1.0 + 2f64.ln())).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn conjugate_matches_naive_on_safe_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let y = random_hermitian(&mut rng, 3, 2.0);
            let ed = eig(&y).unwrap();
            let naive = ed.eigenvalues.iter().map(|l| (l + 1.0).exp()).sum::<f64>().ln();
            assert_abs_diff_eq!(conjugate_entropy(&y).unwrap(), naive, epsilon = 1e-10);
        }
    }

    #[test]
    fn gibbs_examples() {
        let g = gibbs_map(&HermitianMatrix::zeros(4)).unwrap();
        assert_abs_diff_eq!(frobenius_norm(&(&g - &HermitianMatrix::identity(4).scale(0.25))), 0.0, epsilon = 1e-15);

        let g = gibbs_map(&HermitianMatrix::from_real_diagonal(&[3f64.ln(), 0.0])).unwrap();
        assert_abs_diff_eq!(g.get(0, 0).re, 0.75, epsilon = 1e-14);
        assert_abs_diff_eq!(g.get(1, 1).re, 0.25, epsilon = 1e-14);

        let g = gibbs_map(&HermitianMatrix::from_real_diagonal(&[1000.0, 0.0])).unwrap();
        assert!(g.is_finite());
        assert_abs_diff_eq!(g.get(0, 0).re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.get(1, 1).re, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn gibbs_is_shift_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let y = random_hermitian(&mut rng, 3, 1.0);
        let shifted = &y + &HermitianMatrix::identity(3).scale(17.0);
        let d = &gibbs_map(&y).unwrap() - &gibbs_map(&shifted).unwrap();
        assert!(frobenius_norm(&d) < 1e-12);
    }

    #[test]
    fn bounded_gibbs_examples() {
        for n in [1usize, 3] {
            let g = gibbs_map_bounded(&HermitianMatrix::zeros(n), 1.0).unwrap();
            let expect = HermitianMatrix::identity(n).scale(1.0 / (n + 1) as f64);
            assert_abs_diff_eq!(frobenius_norm(&(&g - &expect)), 0.0, epsilon = 1e-15);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let y = random_hermitian(&mut rng, 3, 1.0);
        let one = gibbs_map_bounded(&y, 1.0).unwrap();
        let three = gibbs_map_bounded(&y, 3.0).unwrap();
        assert!(frobenius_norm(&(&three - &one.scale(3.0))) < 1e-14);

        let mut last = 0.0;
        for cval in [1.0, 10.0, 100.0] {
            let tr = gibbs_map_bounded(&HermitianMatrix::identity(2).scale(cval), 2.0).unwrap().trace();
            assert!(tr >= last && tr <= 2.0);
            assert!(cval == 100.0 || tr > last);
            last = tr;
        }
        assert!((2.0 - last) < 1e-12);

        assert!(gibbs_map_bounded(&y, 0.0).is_err());
    }

    #[test]
    fn bounded_gibbs_matches_explicit_slack_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..20 {
            let y = random_hermitian(&mut rng, 3, 3.0);
            let mut big = DMatrix::<Complex64>::zeros(4, 4);
            big.view_mut((0, 0), (3, 3)).copy_from(y.as_matrix());
            let full = gibbs_map(&HermitianMatrix::try_from_matrix(big).unwrap()).unwrap();
            let cropped = full.as_matrix().view((0, 0), (3, 3)).into_owned() * Complex64::new(0.7, 0.0);
            let got = gibbs_map_bounded(&y, 0.7).unwrap();
            assert!((got.as_matrix() - cropped).norm() < 1e-13);
        }
    }

    #[test]
    fn divergence_examples() {
        let x = HermitianMatrix::from_real_diagonal(&[0.9, 0.1]);
        let y = HermitianMatrix::from_real_diagonal(&[0.5, 0.5]);
        let kl = 0.9 * (0.9f64 / 0.5).ln() + 0.1 * (0.1f64 / 0.5).ln();
        assert_abs_diff_eq!(von_neumann_divergence(&x, &y).unwrap(), kl, epsilon = 1e-14);
        assert_abs_diff_eq!(kl, 0.3681, epsilon = 1e-4);

        let u = HermitianMatrix::identity(3).scale(1.0 / 3.0);
        assert_abs_diff_eq!(von_neumann_divergence(&u, &u).unwrap(), 0.0, epsilon = 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let p = gibbs_map(&random_hermitian(&mut rng, 4, 1.0)).unwrap();
        assert_abs_diff_eq!(von_neumann_divergence(&p, &p).unwrap(), 0.0, epsilon = 1e-13);

        let singular = HermitianMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert!(matches!(von_neumann_divergence(&x, &singular), Err(Error::Domain(_))));
    }

    #[test]
    fn fenchel_examples() {
        let u = HermitianMatrix::identity(3).scale(1.0 / 3.0);
        assert_abs_diff_eq!(fenchel_coupling(&u, &HermitianMatrix::zeros(3)).unwrap(), 0.0, epsilon = 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..20 {
            let y = random_hermitian(&mut rng, 3, 2.0);
            let g = gibbs_map(&y).unwrap();
            assert_abs_diff_eq!(fenchel_coupling(&g, &y).unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mirror_point_caches_gibbs() {
        let p = MirrorPoint::from_dual(HermitianMatrix::from_real_diagonal(&[3f64.ln(), 0.0])).unwrap();
        assert_abs_diff_eq!(p.primal.get(0, 0).re, 0.75, epsilon = 1e-14);
    }
}

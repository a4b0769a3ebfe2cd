//! Brute-force oracles for tests and acceptance runs.
//!
//! None of these reuse the code paths they check: the projection oracle uses
//! the sorted-threshold simplex projection rather than the Gibbs map, the
//! exponential oracle a truncated power series rather than the spectral
//! route, and the gap oracle random sampling rather than an eigenvalue.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::Result;
use crate::linalg::{c, eig, HermitianMatrix};
use crate::problem::{gaussian_hermitian, BlockProfile, SpectraSet, TraceMode};

/// Euclidean projection of a vector onto `{w ≥ 0, Σw = p}` (or `Σw ≤ p`).
pub fn project_simplex(v: &[f64], p: f64, mode: TraceMode) -> Vec<f64> {
    if mode == TraceMode::AtMost {
        let clipped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
        if clipped.iter().sum::<f64>() <= p {
            return clipped;
        }
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - p) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Frobenius projection onto `{Z ⪰ 0, tr Z (= or ≤) p}`: project the spectrum, keep the eigenvectors.
pub fn project_spectrahedron(b: &HermitianMatrix, p: f64, mode: TraceMode) -> Result<HermitianMatrix> {
    let ed = eig(b)?;
    let w = project_simplex(&ed.eigenvalues, p, mode);
    Ok(ed.assemble(&w))
}

/// Central-difference gradient `G` with `df = tr(G dX)` over the Hermitian
/// coordinate basis: `e_ii`, `e_ij + e_ji` and `i(e_ij − e_ji)`.
pub fn finite_diff_gradient(f: impl Fn(&HermitianMatrix) -> f64, x: &HermitianMatrix, h: f64) -> HermitianMatrix {
    let n = x.dim();
    let diff = |dir: &DMatrix<Complex64>| {
        let plus = HermitianMatrix::try_from_matrix(x.as_matrix() + dir * c(h)).expect("hermitian direction");
        let minus = HermitianMatrix::try_from_matrix(x.as_matrix() - dir * c(h)).expect("hermitian direction");
        (f(&plus) - f(&minus)) / (2.0 * h)
    };
    let mut g = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        let mut e = DMatrix::zeros(n, n);
        e[(i, i)] = c(1.0);
        g[(i, i)] = c(diff(&e));
        for j in (i + 1)..n {
            let mut re = DMatrix::zeros(n, n);
            re[(i, j)] = c(1.0);
            re[(j, i)] = c(1.0);
            let mut im = DMatrix::zeros(n, n);
            im[(i, j)] = Complex64::new(0.0, 1.0);
            im[(j, i)] = Complex64::new(0.0, -1.0);
            let z = Complex64::new(diff(&re), diff(&im)) * 0.5;
            g[(i, j)] = z;
            g[(j, i)] = z.conj();
        }
    }
    HermitianMatrix::try_from_matrix(g).expect("assembled hermitian")
}

/// `Σ_{k<terms} A^k / k!`; accurate for `‖A‖₂ ≲ 1`.
pub fn taylor_exp(a: &HermitianMatrix, terms: usize) -> HermitianMatrix {
    let n = a.dim();
    let mut sum = DMatrix::<Complex64>::zeros(n, n);
    let mut term = DMatrix::<Complex64>::identity(n, n);
    for k in 0..terms {
        if k > 0 {
            term = term * a.as_matrix() * c(1.0 / k as f64);
        }
        sum += &term;
    }
    HermitianMatrix::try_from_matrix(sum).expect("series of a hermitian matrix")
}

/// Sampled `sup_{Z∈𝒳} −tr(F Z)` over `probes` random feasible points plus any
/// caller-supplied candidates. Always a lower bound on the exact supremum.
pub fn sampled_sup_linear<R: Rng + ?Sized>(
    f: &BlockProfile,
    set: &SpectraSet,
    probes: usize,
    candidates: &[BlockProfile],
    rng: &mut R,
) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for z in candidates {
        best = best.max(-f.inner(z));
    }
    for _ in 0..probes {
        best = best.max(-f.inner(&sample_extreme_point(set, rng)));
    }
    best
}

/// Feasible point biased toward the boundary: a random rank-one projector,
/// its trace set per the block mode. The supremum of a linear functional is
/// attained at such points, so sampling them converges much faster than
/// sampling the interior.
fn sample_extreme_point<R: Rng + ?Sized>(set: &SpectraSet, rng: &mut R) -> BlockProfile {
    let blocks = set
        .blocks()
        .iter()
        .map(|b| {
            let v = nalgebra::DVector::from_fn(b.dim, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let v = &v / c(v.norm());
            let scale = match b.mode {
                TraceMode::Equals => b.bound,
                TraceMode::AtMost => b.bound * rng.random::<f64>(),
            };
            HermitianMatrix::outer(&v, scale)
        })
        .collect();
    BlockProfile::new(blocks)
}

/// Random Hermitian matrix with i.i.d. eigenvalues uniform on `[lo, hi]` and Haar-like eigenvectors.
pub fn random_hermitian_with_spectrum<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> HermitianMatrix {
    let basis = eig(&gaussian_hermitian(rng, n, 1.0)).expect("finite draw");
    let spectrum: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    basis.assemble(&spectrum)
}

/// Random unit-trace density matrix with `λ_min ≥ min_eig`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, n: usize, min_eig: f64) -> HermitianMatrix {
    let spread = rng.random_range(0.0..6.0);
    let g = crate::mirror::gibbs_map(&gaussian_hermitian(rng, n, spread)).expect("finite draw");
    let eps = min_eig * n as f64;
    &g.scale(1.0 - eps) + &HermitianMatrix::identity(n).scale(eps / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius_norm, matrix_exp};
    use crate::problem::{linear_minimizer, strong_gap_of_value, BlockSpec, RngStream};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    #[test]
    fn projection_examples() {
        let b = HermitianMatrix::from_real_diagonal(&[0.6, 0.2]);
        let p = project_spectrahedron(&b, 1.0, TraceMode::Equals).unwrap();
        assert_abs_diff_eq!(p.get(0, 0).re, 0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(p.get(1, 1).re, 0.3, epsilon = 1e-14);

        let p = project_spectrahedron(&b, 1.0, TraceMode::AtMost).unwrap();
        assert!(frobenius_norm(&(&p - &b)) < 1e-14);

        let mut rng = RngStream::seed_from_u64(1);
        let set = SpectraSet::new(vec![BlockSpec { dim: 3, bound: 1.0, mode: TraceMode::Equals }]).unwrap();
        let feasible = set.sample_point(&mut rng);
        let p = project_spectrahedron(feasible.block(0), 1.0, TraceMode::Equals).unwrap();
        assert!(frobenius_norm(&(&p - feasible.block(0))) < 1e-12);
    }

    #[test]
    fn projection_is_nearest_among_samples() {
        let mut rng = RngStream::seed_from_u64(2);
        for mode in [TraceMode::Equals, TraceMode::AtMost] {
            let set = SpectraSet::new(vec![BlockSpec { dim: 3, bound: 1.0, mode }]).unwrap();
            let b = gaussian_hermitian(&mut rng, 3, 1.0);
            let p = project_spectrahedron(&b, 1.0, mode).unwrap();
            BlockProfile::new(vec![p.clone()]).check_feasible(&set).unwrap();
            let d = frobenius_norm(&(&p - &b));
            for _ in 0..1000 {
                let z = set.sample_point(&mut rng);
                assert!(frobenius_norm(&(z.block(0) - &b)) >= d - 1e-12);
            }
        }
    }

    #[test]
    fn finite_difference_examples() {
        let mut rng = RngStream::seed_from_u64(3);
        let a = gaussian_hermitian(&mut rng, 3, 1.0);
        let x = gaussian_hermitian(&mut rng, 3, 1.0);
        let g = finite_diff_gradient(|z| a.inner(z), &x, 1e-5);
        assert!(frobenius_norm(&(&g - &a)) < 1e-9);

        let b = gaussian_hermitian(&mut rng, 3, 1.0);
        let g = finite_diff_gradient(|z| 0.5 * frobenius_norm(&(z - &b)).powi(2), &x, 1e-5);
        assert!(frobenius_norm(&(&g - &(&x - &b))) < 1e-8);
    }

    #[test]
    fn taylor_examples() {
        let z = taylor_exp(&HermitianMatrix::zeros(3), 20);
        assert_eq!(z, HermitianMatrix::identity(3));
        let mut rng = RngStream::seed_from_u64(4);
        let a = random_hermitian_with_spectrum(&mut rng, 3, -1.0, 1.0);
        let two = taylor_exp(&a, 2);
        assert!(frobenius_norm(&(&two - &(&HermitianMatrix::identity(3) + &a))) < 1e-15);
        for _ in 0..20 {
            let a = random_hermitian_with_spectrum(&mut rng, 3, -1.0, 1.0);
            let d = &taylor_exp(&a, 20) - &matrix_exp(&a).unwrap();
            assert!(frobenius_norm(&d) < 1e-10);
        }
    }

    #[test]
    fn sampled_sup_examples() {
        let mut rng = RngStream::seed_from_u64(5);
        let set = SpectraSet::new(vec![BlockSpec { dim: 3, bound: 1.0, mode: TraceMode::AtMost }]).unwrap();
        let psd = BlockProfile::new(vec![HermitianMatrix::from_real_diagonal(&[2.0, 1.0, 0.5])]);
        let v = sampled_sup_linear(&psd, &set, 1000, &[], &mut rng);
        assert!(v <= 0.0 && v > -0.05);

        let eq = SpectraSet::new(vec![BlockSpec { dim: 3, bound: 2.0, mode: TraceMode::Equals }]).unwrap();
        for _ in 0..10 {
            let f = BlockProfile::new(vec![gaussian_hermitian(&mut rng, 3, 1.0)]);
            let x = eq.sample_point(&mut rng);
            let closed = strong_gap_of_value(&eq, &f, &x).unwrap() - f.inner(&x);
            let zstar = linear_minimizer(&eq, &f).unwrap();
            assert_abs_diff_eq!(sampled_sup_linear(&f, &eq, 0, std::slice::from_ref(&zstar), &mut rng), closed, epsilon = 1e-12);
            let sampled = sampled_sup_linear(&f, &eq, 10_000, &[], &mut rng);
            assert!(sampled <= closed + 1e-12);
            assert!((closed - sampled).abs() <= 0.05 * closed.abs().max(1e-3), "{sampled} vs {closed}");
        }
    }

    #[test]
    fn random_density_floor() {
        let mut rng = RngStream::seed_from_u64(6);
        for _ in 0..100 {
            let x = random_density(&mut rng, 4, 1e-6);
            assert!(eig(&x).unwrap().min() >= 1e-6 - 1e-15);
            assert_abs_diff_eq!(x.trace(), 1.0, epsilon = 1e-12);
        }
    }
}

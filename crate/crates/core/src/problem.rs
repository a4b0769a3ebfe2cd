//! Stochastic variational inequalities over products of spectrahedra.
//!
//! A problem is a block constraint set, a deterministic block mapping `F`, and
//! an additive noise model; the stochastic oracle returns `Φ(X) = F(X) + Z`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{eig, hermitianize, spectral_norm, ComplexMatrix, HermitianMatrix};
use crate::mirror::gibbs_map;
use crate::textio;

/// Seeded random stream used throughout the crate.
pub type RngStream = ChaCha8Rng;

/// Tolerance on negative eigenvalues when checking feasibility.
pub const FEASIBILITY_PSD_TOL: f64 = 1e-9;
/// Tolerance on the trace law when checking feasibility.
pub const FEASIBILITY_TRACE_TOL: f64 = 1e-8;

/// Probes and safety factor for the empirical oracle bound.
pub const ORACLE_BOUND_PROBES: usize = 100;
pub const ORACLE_BOUND_SAFETY: f64 = 1.5;
const ORACLE_BOUND_SEED: u64 = 0x5eed_0b0d;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TraceMode {
    /// `tr X = p`
    Equals,
    /// `tr X ≤ p`
    AtMost,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockSpec {
    pub dim: usize,
    pub bound: f64,
    pub mode: TraceMode,
}

/// Product of per-block spectrahedra `{X_i ⪰ 0, tr X_i (= or ≤) p_i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectraSet {
    blocks: Vec<BlockSpec>,
}

impl SpectraSet {
    pub fn new(blocks: Vec<BlockSpec>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Domain("constraint set needs at least one block".into()));
        }
        for (i, b) in blocks.iter().enumerate() {
            if b.dim == 0 {
                return Err(Error::Domain(format!("block {i} has dimension 0")));
            }
            if !(b.bound > 0.0 && b.bound.is_finite()) {
                return Err(Error::Domain(format!("block {i} has non-positive trace bound {}", b.bound)));
            }
        }
        Ok(Self { blocks })
    }

    /// `count` identical blocks.
    pub fn uniform(count: usize, dim: usize, bound: f64, mode: TraceMode) -> Result<Self> {
        Self::new(vec![BlockSpec { dim, bound, mode }; count])
    }

    pub fn blocks(&self) -> &[BlockSpec] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dim).collect()
    }

    /// `Σ n_i`.
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    /// Random feasible point with full support: a Gibbs state of a random
    /// Hermitian matrix, scaled to `p` (or `u·p`, `u ~ U[0,1]`, for `tr ≤ p`).
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> BlockProfile {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let spread: f64 = rng.random_range(0.0..4.0);
                let g = gaussian_hermitian(rng, b.dim, spread);
                let x = gibbs_map(&g).expect("finite Gaussian draw");
                let scale = match b.mode {
                    TraceMode::Equals => b.bound,
                    TraceMode::AtMost => b.bound * rng.random::<f64>(),
                };
                x.scale(scale)
            })
            .collect();
        BlockProfile { blocks }
    }
}

/// Hermitian part of a matrix with i.i.d. circular complex Gaussian entries, `E|z|² = std_dev²`.
pub fn gaussian_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize, std_dev: f64) -> HermitianMatrix {
    hermitianize(&complex_gaussian(rng, n, n, std_dev * std_dev)).expect("square")
}

/// `rows × cols` matrix of circularly symmetric complex Gaussians with `E|z|² = variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, variance: f64) -> ComplexMatrix {
    try_complex_gaussian(rng, rows, cols, variance).expect("finite Gaussian draw")
}

/// As [`complex_gaussian`], but an overflowing draw is an error instead of a panic.
pub fn try_complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, variance: f64) -> Result<ComplexMatrix> {
    let s = (variance / 2.0).sqrt();
    let m = DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(s * re, s * im)
    });
    ComplexMatrix::from_matrix(m)
}

/// Ordered list of Hermitian blocks, `X = diag(X_1, …, X_N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockProfile {
    blocks: Vec<HermitianMatrix>,
}

impl BlockProfile {
    pub fn new(blocks: Vec<HermitianMatrix>) -> Self {
        Self { blocks }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Self { blocks: dims.iter().map(|&n| HermitianMatrix::zeros(n)).collect() }
    }

    pub fn blocks(&self) -> &[HermitianMatrix] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &HermitianMatrix {
        &self.blocks[i]
    }

    pub fn into_blocks(self) -> Vec<HermitianMatrix> {
        self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(HermitianMatrix::dim).collect()
    }

    /// `Σ_i tr(A_i B_i)`.
    pub fn inner(&self, other: &Self) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.inner(b)).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { blocks: self.blocks.iter().map(|a| a.scale(s)).collect() }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        Self { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + &b.scale(s)).collect() }
    }

    /// Frobenius norm of the block-diagonal matrix.
    pub fn frobenius_norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    /// Spectral norm of the block-diagonal matrix (max over blocks).
    pub fn spectral_norm(&self) -> f64 {
        self.blocks.iter().map(spectral_norm).fold(0.0, f64::max)
    }

    /// Trace norm of the block-diagonal matrix (sum over blocks).
    pub fn trace_norm(&self) -> f64 {
        self.blocks.iter().map(crate::linalg::trace_norm).sum()
    }

    pub fn check_dims(&self, set: &SpectraSet) -> Result<()> {
        if self.len() != set.len() {
            return Err(Error::DimensionMismatch { expected: set.len(), got: self.len() });
        }
        for (b, spec) in self.blocks.iter().zip(set.blocks()) {
            if b.dim() != spec.dim {
                return Err(Error::DimensionMismatch { expected: spec.dim, got: b.dim() });
            }
        }
        Ok(())
    }

    /// PSD to −1e-9 and trace law to 1e-8 in every block.
    pub fn check_feasible(&self, set: &SpectraSet) -> Result<()> {
        self.check_dims(set)?;
        for (i, (b, spec)) in self.blocks.iter().zip(set.blocks()).enumerate() {
            let lmin = eig(b)?.min();
            if lmin < -FEASIBILITY_PSD_TOL {
                return Err(Error::Infeasible(format!("block {i} has eigenvalue {lmin:e}")));
            }
            let tr = b.trace();
            let ok = match spec.mode {
                TraceMode::Equals => (tr - spec.bound).abs() <= FEASIBILITY_TRACE_TOL,
                TraceMode::AtMost => tr <= spec.bound + FEASIBILITY_TRACE_TOL,
            };
            if !ok {
                return Err(Error::Infeasible(format!("block {i} has trace {tr} against bound {}", spec.bound)));
            }
        }
        Ok(())
    }

    pub fn is_feasible(&self, set: &SpectraSet) -> bool {
        self.check_feasible(set).is_ok()
    }

    pub fn to_text(&self) -> String {
        let mats: Vec<ComplexMatrix> = self.blocks.iter().map(HermitianMatrix::to_complex).collect();
        let labels: Vec<String> = (0..mats.len()).map(|i| format!("block{i}")).collect();
        textio::write_matrices(labels.iter().map(String::as_str).zip(&mats))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let blocks = textio::read_matrices(text)?
            .into_iter()
            .map(|(_, m)| HermitianMatrix::try_from_matrix(m.into_matrix()))
            .collect::<Result<_>>()?;
        Ok(Self { blocks })
    }
}

/// Additive oracle noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseModel {
    None,
    /// Hermitian part of a matrix with i.i.d. complex Gaussian entries of variance `sigma²`.
    HermitianGaussian { sigma: f64 },
}

impl NoiseModel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Domain(format!("noise level must be nonnegative, got {sigma}")));
        }
        Ok(Self::HermitianGaussian { sigma })
    }

    pub fn sigma(&self) -> f64 {
        match self {
            NoiseModel::None => 0.0,
            NoiseModel::HermitianGaussian { sigma } => *sigma,
        }
    }

    /// Zero-mean noise profile; draws nothing from `rng` for [`NoiseModel::None`].
    /// Fails with [`Error::NonFinite`] when σ is so large the draw overflows.
    pub fn sample<R: Rng + ?Sized>(&self, dims: &[usize], rng: &mut R) -> Result<BlockProfile> {
        match self {
            NoiseModel::None => Ok(BlockProfile::zeros(dims)),
            NoiseModel::HermitianGaussian { sigma } => Ok(BlockProfile::new(
                dims.iter()
                    .map(|&n| hermitianize(&try_complex_gaussian(rng, n, n, sigma * sigma)?))
                    .collect::<Result<_>>()?,
            )),
        }
    }
}

/// Deterministic part `F` of the oracle.
pub type Mapping = Arc<dyn Fn(&BlockProfile) -> Result<BlockProfile> + Send + Sync>;

/// How the oracle bound `C` was obtained; echoed into run configs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundSource {
    Configured,
    Analytic,
    Empirical { probes: usize, safety: f64 },
}

#[derive(Clone)]
pub struct SviProblem {
    set: SpectraSet,
    mapping: Mapping,
    noise: NoiseModel,
    oracle_bound: f64,
    bound_source: BoundSource,
}

impl fmt::Debug for SviProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SviProblem")
            .field("set", &self.set)
            .field("noise", &self.noise)
            .field("oracle_bound", &self.oracle_bound)
            .field("bound_source", &self.bound_source)
            .finish_non_exhaustive()
    }
}

impl SviProblem {
    /// Builds a problem whose oracle bound is estimated empirically: the largest
    /// `‖Φ‖₂` over [`ORACLE_BOUND_PROBES`] random feasible probes, times
    /// [`ORACLE_BOUND_SAFETY`].
    pub fn new(set: SpectraSet, mapping: Mapping, noise: NoiseModel) -> Result<Self> {
        let mut p = Self { set, mapping, noise, oracle_bound: 1.0, bound_source: BoundSource::Configured };
        p.oracle_bound = p.estimate_oracle_bound(ORACLE_BOUND_PROBES, ORACLE_BOUND_SAFETY)?;
        p.bound_source = BoundSource::Empirical { probes: ORACLE_BOUND_PROBES, safety: ORACLE_BOUND_SAFETY };
        Ok(p)
    }

    pub fn with_oracle_bound(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!("oracle bound must be positive, got {c}")));
        }
        self.oracle_bound = c;
        self.bound_source = BoundSource::Configured;
        Ok(self)
    }

    /// Replaces the noise model and re-estimates the oracle bound.
    pub fn with_noise(self, noise: NoiseModel) -> Result<Self> {
        Self::new(self.set, self.mapping, noise)
    }

    pub fn set(&self) -> &SpectraSet {
        &self.set
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn mapping(&self) -> &Mapping {
        &self.mapping
    }

    /// `C` with `E‖Φ‖₂² ≤ C²`.
    pub fn oracle_bound(&self) -> f64 {
        self.oracle_bound
    }

    pub fn bound_source(&self) -> BoundSource {
        self.bound_source
    }

    /// Deterministic mapping `F(X)`.
    pub fn evaluate(&self, x: &BlockProfile) -> Result<BlockProfile> {
        x.check_dims(&self.set)?;
        let v = (self.mapping)(x)?;
        v.check_dims(&self.set)?;
        Ok(v)
    }

    /// One oracle call: `(Φ, Z)` with `Φ = F(X) + Z`.
    pub fn oracle_sample<R: Rng + ?Sized>(&self, x: &BlockProfile, rng: &mut R) -> Result<(BlockProfile, BlockProfile)> {
        let f = self.evaluate(x)?;
        let z = self.noise.sample(&self.set.dims(), rng)?;
        let phi = match self.noise {
            NoiseModel::None => f,
            _ => f.add(&z),
        };
        Ok((phi, z))
    }

    fn estimate_oracle_bound(&self, probes: usize, safety: f64) -> Result<f64> {
        let mut rng = RngStream::seed_from_u64(ORACLE_BOUND_SEED);
        let mut worst = 0.0f64;
        for _ in 0..probes {
            let x = self.set.sample_point(&mut rng);
            let (phi, _) = self.oracle_sample(&x, &mut rng)?;
            worst = worst.max(phi.spectral_norm());
        }
        Ok(if worst > 0.0 { worst * safety } else { 1.0 })
    }

    /// Strong gap `sup_{Z∈𝒳} tr(F(X)(X − Z))`, closed form via `λ_min(F_i(X))`.
    pub fn strong_gap(&self, x: &BlockProfile) -> Result<f64> {
        let f = self.evaluate(x)?;
        strong_gap_of_value(&self.set, &f, x)
    }

    /// Sampled lower bound on the weak gap `G(X) = sup_Z tr(F(Z)(X − Z))`.
    ///
    /// Candidates are `Z = X`, the strong-gap maximizer for `F(X)`, then
    /// `probes` random feasible points; the result is their running maximum.
    pub fn weak_gap_estimate<R: Rng + ?Sized>(&self, x: &BlockProfile, probes: usize, rng: &mut R) -> Result<f64> {
        let pairing = |z: &BlockProfile| -> Result<f64> { Ok(self.evaluate(z)?.inner(&x.sub(z))) };
        let mut best = pairing(x)?;
        let fx = self.evaluate(x)?;
        best = best.max(pairing(&linear_minimizer(&self.set, &fx)?)?);
        for _ in 0..probes {
            best = best.max(pairing(&self.set.sample_point(rng))?);
        }
        Ok(best)
    }

    /// `tr((X − Y)(F(X) − F(Y)))`; nonnegative everywhere iff `F` is monotone.
    pub fn monotonicity_witness(&self, x: &BlockProfile, y: &BlockProfile) -> Result<f64> {
        Ok(x.sub(y).inner(&self.evaluate(x)?.sub(&self.evaluate(y)?)))
    }
}

/// `inf_{Z_i} tr(F_i Z_i)` for one block, with its minimizer.
fn block_linear_min(spec: &BlockSpec, f: &HermitianMatrix) -> Result<(f64, HermitianMatrix)> {
    let ed = eig(f)?;
    let lmin = ed.min();
    let v = ed.vector(ed.dim() - 1);
    Ok(match spec.mode {
        TraceMode::Equals => (spec.bound * lmin, HermitianMatrix::outer(&v, spec.bound)),
        TraceMode::AtMost if lmin < 0.0 => (spec.bound * lmin, HermitianMatrix::outer(&v, spec.bound)),
        TraceMode::AtMost => (0.0, HermitianMatrix::zeros(spec.dim)),
    })
}

/// `argmin_{Z∈𝒳} tr(F Z)`: a scaled projector onto the bottom eigenvector per block.
pub fn linear_minimizer(set: &SpectraSet, f: &BlockProfile) -> Result<BlockProfile> {
    f.check_dims(set)?;
    let blocks = set
        .blocks()
        .iter()
        .zip(f.blocks())
        .map(|(spec, fi)| block_linear_min(spec, fi).map(|(_, z)| z))
        .collect::<Result<_>>()?;
    Ok(BlockProfile::new(blocks))
}

/// `Σ_i [tr(F_i X_i) − inf_{Z_i} tr(F_i Z_i)]` for a precomputed mapping value.
pub fn strong_gap_of_value(set: &SpectraSet, f: &BlockProfile, x: &BlockProfile) -> Result<f64> {
    f.check_dims(set)?;
    x.check_dims(set)?;
    let mut gap = 0.0;
    for ((spec, fi), xi) in set.blocks().iter().zip(f.blocks()).zip(x.blocks()) {
        let (inf, _) = block_linear_min(spec, fi)?;
        gap += fi.inner(xi) - inf;
    }
    Ok(gap)
}

/// `F(X) = X − B`, the gradient of `½‖X − B‖_F²`; its VI solution is the
/// Euclidean projection of `B` onto the set. Noiseless, with
/// `C = max_i (p_i + ‖B_i‖₂)`.
pub fn quadratic_test_problem(b: BlockProfile, set: SpectraSet) -> Result<SviProblem> {
    b.check_dims(&set)?;
    let c = set
        .blocks()
        .iter()
        .zip(b.blocks())
        .map(|(spec, bi)| spec.bound + spectral_norm(bi))
        .fold(0.0, f64::max);
    let target = Arc::new(b);
    let mapping: Mapping = Arc::new(move |x: &BlockProfile| Ok(x.sub(&target)));
    Ok(SviProblem { set, mapping, noise: NoiseModel::None, oracle_bound: c, bound_source: BoundSource::Analytic })
}

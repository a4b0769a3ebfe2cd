//! Randomized invariant suites. Trial counts and tolerances are arguments so
//! the quick `check` command and the full acceptance runs share one body.

use rand::Rng;

use crate::linalg::{eig, frobenius_norm, trace_norm, HermitianMatrix};
use crate::mimo::{canonical_topology, game_to_svi, sample_channels, throughput, throughput_gradient};
use crate::mirror::{fenchel_coupling, gibbs_map, von_neumann_divergence};
use crate::problem::{gaussian_hermitian, BlockProfile, NoiseModel, RngStream, SpectraSet, SviProblem, TraceMode};
use crate::verification::{finite_diff_gradient, random_density, random_hermitian_with_spectrum, sampled_sup_linear};
use rand::SeedableRng;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub trials: usize,
    pub failures: usize,
    /// Worst observed value of the checked quantity (meaning depends on the check).
    pub worst: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn tally(name: &'static str, trials: usize, failures: usize, worst: f64) -> Self {
        Self { name, trials, failures, worst, passed: failures == 0 }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {} trials, {} failures, worst {:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.trials,
            self.failures,
            self.worst
        )
    }
}

const DIMS: [usize; 3] = [2, 4, 8];

/// Gibbs states of duals with spectra in `[−spread, spread]` are PSD with unit trace.
pub fn gibbs_validity(rng: &mut RngStream, trials: usize, spread: f64, tol: f64) -> CheckOutcome {
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for k in 0..trials {
        let y = random_hermitian_with_spectrum(rng, DIMS[k % 3], -spread, spread);
        let err = match gibbs_map(&y).and_then(|x| Ok((eig(&x)?.min(), x.trace()))) {
            Ok((lmin, tr)) => (-lmin).max((tr - 1.0).abs()),
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(err);
        failures += usize::from(err > tol);
    }
    CheckOutcome::tally("gibbs map is a density matrix", trials, failures, worst)
}

/// Strong convexity of the entropy: `D(X, Y) ≥ ½‖X − Y‖_tr² − tol` for densities.
pub fn strong_convexity(rng: &mut RngStream, trials: usize, tol: f64) -> CheckOutcome {
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    for k in 0..trials {
        let n = DIMS[k % 3];
        let x = random_density(rng, n, 1e-9);
        let y = random_density(rng, n, 1e-6);
        let slack = match von_neumann_divergence(&x, &y) {
            Ok(d) => d - 0.5 * trace_norm(&(&x - &y)).powi(2),
            Err(_) => f64::NEG_INFINITY,
        };
        worst = worst.min(slack);
        failures += usize::from(slack < -tol);
    }
    CheckOutcome::tally("divergence dominates half squared trace norm", trials, failures, worst)
}

/// `H(X, Y+Z) ≤ H(X, Y) + tr(Z(gibbs(Y) − X)) + ‖Z‖₂²` for `‖Z‖₂ ≤ 1`.
pub fn coupling_smoothness(rng: &mut RngStream, trials: usize, tol: f64) -> CheckOutcome {
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    for k in 0..trials {
        let n = DIMS[k % 3];
        let x = random_density(rng, n, 0.0);
        let spread = rng.random_range(0.0..5.0);
        let y = gaussian_hermitian(rng, n, spread);
        let z = random_hermitian_with_spectrum(rng, n, -1.0, 1.0);
        let slack = (|| -> crate::Result<f64> {
            let lhs = fenchel_coupling(&x, &(&y + &z))?;
            let g = gibbs_map(&y)?;
            let zn = eig(&z)?;
            let spectral = zn.max().abs().max(zn.min().abs());
            Ok(fenchel_coupling(&x, &y)? + z.inner(&(&g - &x)) + spectral * spectral - lhs)
        })()
        .unwrap_or(f64::NEG_INFINITY);
        worst = worst.min(slack);
        failures += usize::from(slack < -tol);
    }
    CheckOutcome::tally("coupling smoothness bound", trials, failures, worst)
}

/// `H(Q, Y) = D(Q, gibbs(Y))` for duals with spectrum in `[−5, 5]`.
///
/// The divergence takes `log` of the Gibbs state through its eigenvalues, whose
/// relative accuracy degrades below about `1e-8`; a wider dual spectrum turns
/// that rounding, not the identity, into the measured error.
pub fn coupling_divergence_identity(rng: &mut RngStream, trials: usize, tol: f64) -> CheckOutcome {
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for k in 0..trials {
        let n = DIMS[k % 3];
        let q = random_density(rng, n, 0.0);
        let y = random_hermitian_with_spectrum(rng, n, -5.0, 5.0);
        let err = (|| -> crate::Result<f64> {
            Ok((fenchel_coupling(&q, &y)? - von_neumann_divergence(&q, &gibbs_map(&y)?)?).abs())
        })()
        .unwrap_or(f64::INFINITY);
        worst = worst.max(err);
        failures += usize::from(err > tol);
    }
    CheckOutcome::tally("coupling equals divergence to gibbs state", trials, failures, worst)
}

/// Analytic throughput gradient against central differences, every player,
/// canonical network with two antennas per side. `worst` is the largest relative error.
pub fn throughput_gradient_fd(rng: &mut RngStream, trials: usize, rel_tol: f64) -> CheckOutcome {
    let topology = canonical_topology();
    let set = topology.strategy_set();
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let channels = sample_channels(&topology, rng);
        let x = set.sample_point(rng);
        let mut state_ok = true;
        for i in 0..topology.users() {
            let rate = |z: &HermitianMatrix| {
                let mut blocks = x.blocks().to_vec();
                blocks[i] = z.clone();
                throughput(&channels, &BlockProfile::new(blocks), i).unwrap_or(f64::NAN)
            };
            let fd = finite_diff_gradient(rate, x.block(i), 1e-5);
            let err = match throughput_gradient(&channels, &x, i) {
                Ok(g) => frobenius_norm(&(&g - &fd)) / frobenius_norm(&g).max(f64::MIN_POSITIVE),
                Err(_) => f64::INFINITY,
            };
            let err = if err.is_nan() { f64::INFINITY } else { err };
            worst = worst.max(err);
            state_ok &= err <= rel_tol;
        }
        failures += usize::from(!state_ok);
    }
    CheckOutcome::tally("throughput gradient matches finite differences", trials, failures, worst)
}

fn monotone_failures(problem: &SviProblem, rng: &mut RngStream, trials: usize, tol: f64) -> (usize, f64) {
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let x = problem.set().sample_point(rng);
        let y = problem.set().sample_point(rng);
        let w = problem.monotonicity_witness(&x, &y).unwrap_or(f64::NEG_INFINITY);
        worst = worst.min(w);
        failures += usize::from(w < -tol);
    }
    (failures, worst)
}

/// Monotonicity witness of the game mapping on random pairs (fresh channels
/// every 50 pairs).
pub fn game_monotonicity(rng: &mut RngStream, trials: usize, tol: f64) -> CheckOutcome {
    let topology = canonical_topology();
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    let mut done = 0;
    while done < trials {
        let batch = (trials - done).min(50);
        let problem = match game_to_svi(&topology, sample_channels(&topology, rng), 0.0) {
            Ok(p) => p,
            Err(_) => return CheckOutcome::tally("game mapping is monotone", trials, trials, f64::NEG_INFINITY),
        };
        let (f, w) = monotone_failures(&problem, rng, batch, tol);
        failures += f;
        worst = worst.min(w);
        done += batch;
    }
    CheckOutcome::tally("game mapping is monotone", trials, failures, worst)
}

/// The same witness must reject `F(X) = −X`. Passes when at least one pair fails.
pub fn anti_monotone_detected(rng: &mut RngStream, trials: usize, tol: f64) -> CheckOutcome {
    let set = SpectraSet::uniform(2, 3, 1.0, TraceMode::AtMost).expect("valid set");
    let problem = SviProblem::new(set, Arc::new(|x: &BlockProfile| Ok(x.scale(-1.0))), NoiseModel::None).expect("valid problem");
    let (failures, worst) = monotone_failures(&problem, rng, trials, tol);
    CheckOutcome { name: "witness rejects F(X) = -X", trials, failures, worst, passed: failures > 0 }
}

/// Empirical mean of `draws` noise samples has Frobenius norm ≤ 5σn/√draws.
pub fn noise_zero_mean(rng: &mut RngStream, draws: usize, sigma: f64, n: usize) -> CheckOutcome {
    let noise = NoiseModel::gaussian(sigma).expect("valid level");
    let mut sum = BlockProfile::zeros(&[n]);
    for _ in 0..draws {
        sum = sum.add(&noise.sample(&[n], rng).expect("finite draw"));
    }
    let norm = sum.scale(1.0 / draws as f64).frobenius_norm();
    let bound = 5.0 * sigma * n as f64 / (draws as f64).sqrt();
    CheckOutcome::tally("oracle noise has zero mean", draws, usize::from(norm > bound), norm)
}

/// Closed-form strong gap is never below a sampled lower bound.
pub fn strong_gap_dominates_samples(rng: &mut RngStream, trials: usize, probes: usize, tol: f64) -> CheckOutcome {
    let topology = canonical_topology();
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let Ok(problem) = game_to_svi(&topology, sample_channels(&topology, rng), 0.0) else {
            failures += 1;
            continue;
        };
        let x = problem.set().sample_point(rng);
        let slack = (|| -> crate::Result<f64> {
            let f = problem.evaluate(&x)?;
            let sampled = f.inner(&x) + sampled_sup_linear(&f, problem.set(), probes, &[], rng);
            Ok(problem.strong_gap(&x)? - sampled)
        })()
        .unwrap_or(f64::NEG_INFINITY);
        worst = worst.min(slack);
        failures += usize::from(slack < -tol);
    }
    CheckOutcome::tally("strong gap bounds sampled gap", trials, failures, worst)
}

/// Quick suite run by the `check` command.
pub fn quick_suite(seed: u64) -> Vec<CheckOutcome> {
    let mut rng = RngStream::seed_from_u64(seed);
    vec![
        gibbs_validity(&mut rng, 1000, 1e6, 1e-10),
        strong_convexity(&mut rng, 200, 1e-8),
        coupling_smoothness(&mut rng, 200, 1e-8),
        coupling_divergence_identity(&mut rng, 100, 1e-8),
        throughput_gradient_fd(&mut rng, 5, 1e-4),
        game_monotonicity(&mut rng, 200, 1e-8),
        anti_monotone_detected(&mut rng, 100, 1e-8),
        noise_zero_mean(&mut rng, 10_000, 1.0, 3),
        strong_gap_dominates_samples(&mut rng, 20, 200, 1e-10),
    ]
}

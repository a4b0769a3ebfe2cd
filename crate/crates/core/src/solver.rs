//! Matrix stochastic mirror descent with and without iterate averaging, and
//! matrix exponential learning on a Tikhonov-regularized mapping.
//!
//! All three methods share one recurrence:
//!
//! ```text
//! Y_{t+1} = Y_t − η_t Φ(X_t, ξ_t)
//! X_{t+1} = mirror(Y_{t+1})
//! Γ_{t+1} = Γ_t + η_{t+1},   X̄_{t+1} = (Γ_t X̄_t + η_{t+1} X_{t+1}) / Γ_{t+1}
//! ```
//!
//! AM-SMD reports `X̄_t`; M-SMD reports `X_t`; MEL is M-SMD with
//! `Φ + λX` in place of `Φ`. Gaps are always measured against the
//! problem's original mapping.

use std::fmt;
use std::time::{Duration, Instant};

use rand_chacha::rand_core::SeedableRng;

use crate::error::{Error, Result};
use crate::linalg::{eig, HermitianMatrix};
use crate::mirror::{gibbs_bounded_from_eig, gibbs_from_eig};
use crate::problem::{BlockProfile, RngStream, SpectraSet, SviProblem, TraceMode};

/// Gap values below this indicate a broken invariant, not rounding.
pub const GAP_FLOOR: f64 = -1e-8;

/// `(1/C)·√(log n / T)`, the constant stepsize minimizing the averaged-iterate bound.
pub fn tuned_constant_stepsize(c: f64, n: usize, horizon: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("stepsize needs total dimension n ≥ 2 (log n > 0), got {n}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("oracle bound must be positive, got {c}")));
    }
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    Ok(((n as f64).ln() / horizon as f64).sqrt() / c)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSchedule {
    /// Constant `(1/C)√(log n / T)` with `n` the total dimension and `C` the problem's oracle bound.
    TunedConstant { horizon: usize },
    Constant { eta: f64 },
    /// `1/√(t+1)`, `t` zero-based.
    HarmonicSqrt,
    /// `1/(t+1)`, `t` zero-based.
    Harmonic,
}

impl StepSchedule {
    fn resolve(&self, problem: &SviProblem) -> Result<ResolvedSchedule> {
        Ok(match *self {
            StepSchedule::TunedConstant { horizon } => ResolvedSchedule::Constant(tuned_constant_stepsize(
                problem.oracle_bound(),
                problem.set().total_dim(),
                horizon,
            )?),
            StepSchedule::Constant { eta } => {
                if !(eta > 0.0 && eta.is_finite()) {
                    return Err(Error::Domain(format!("constant stepsize must be positive, got {eta}")));
                }
                ResolvedSchedule::Constant(eta)
            }
            StepSchedule::HarmonicSqrt => ResolvedSchedule::HarmonicSqrt,
            StepSchedule::Harmonic => ResolvedSchedule::Harmonic,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            StepSchedule::TunedConstant { .. } => "tuned-constant",
            StepSchedule::Constant { .. } => "constant",
            StepSchedule::HarmonicSqrt => "harmonic-sqrt",
            StepSchedule::Harmonic => "harmonic",
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum ResolvedSchedule {
    Constant(f64),
    HarmonicSqrt,
    Harmonic,
}

impl ResolvedSchedule {
    fn eta(&self, t: usize) -> f64 {
        match *self {
            ResolvedSchedule::Constant(eta) => eta,
            ResolvedSchedule::HarmonicSqrt => 1.0 / ((t + 1) as f64).sqrt(),
            ResolvedSchedule::Harmonic => 1.0 / (t + 1) as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    /// Averaging matrix stochastic mirror descent.
    AmSmd,
    /// Mirror descent reporting the last iterate.
    MSmd,
    /// Matrix exponential learning on `F + λX`.
    Mel { lambda: f64 },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::AmSmd => "am-smd",
            Method::MSmd => "m-smd",
            Method::Mel { .. } => "mel",
        }
    }

    pub fn lambda(&self) -> f64 {
        match self {
            Method::Mel { lambda } => *lambda,
            _ => 0.0,
        }
    }

    /// Stepsizes used in the reference experiments.
    pub fn default_schedule(&self) -> StepSchedule {
        match self {
            Method::Mel { .. } => StepSchedule::Harmonic,
            _ => StepSchedule::HarmonicSqrt,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Mel { lambda } => write!(f, "mel(lambda={lambda})"),
            m => f.write_str(m.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub iterations: usize,
    pub schedule: StepSchedule,
    pub gap_every: usize,
    pub seed: u64,
    pub record_iterates: bool,
}

impl SolverConfig {
    pub fn new(method: Method, iterations: usize) -> Self {
        Self {
            method,
            iterations,
            schedule: method.default_schedule(),
            gap_every: 10,
            seed: 0,
            record_iterates: false,
        }
    }

    pub fn schedule(mut self, schedule: StepSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn gap_every(mut self, every: usize) -> Self {
        self.gap_every = every;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn record_iterates(mut self, on: bool) -> Self {
        self.record_iterates = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Domain("iterations must be at least 1".into()));
        }
        if self.gap_every == 0 {
            return Err(Error::Domain("gap_every must be at least 1".into()));
        }
        if let Method::Mel { lambda } = self.method {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(Error::Domain(format!("regularization must be nonnegative, got {lambda}")));
            }
        }
        Ok(())
    }
}

/// Mirror image of a dual block profile: Gibbs state scaled to `p` for
/// `tr = p` blocks, slack-augmented Gibbs state for `tr ≤ p` blocks.
pub fn mirror_image(y: &BlockProfile, set: &SpectraSet) -> Result<BlockProfile> {
    y.check_dims(set)?;
    let blocks = set
        .blocks()
        .iter()
        .zip(y.blocks())
        .map(|(spec, yi)| {
            let ed = eig(yi)?;
            Ok(match spec.mode {
                TraceMode::Equals => gibbs_from_eig(&ed).scale(spec.bound),
                TraceMode::AtMost => gibbs_bounded_from_eig(&ed, spec.bound),
            })
        })
        .collect::<Result<Vec<HermitianMatrix>>>()?;
    Ok(BlockProfile::new(blocks))
}

/// One dual step and its primal image: `(Y − η·Φ, mirror(Y − η·Φ))`.
pub fn mirror_step(y: &BlockProfile, phi: &BlockProfile, eta: f64, set: &SpectraSet) -> Result<(BlockProfile, BlockProfile)> {
    phi.check_dims(set)?;
    let y_next = y.axpy(-eta, phi);
    let x_next = mirror_image(&y_next, set)?;
    Ok((y_next, x_next))
}

/// Stepsize-weighted running average `X̄_t = Σ η_k X_k / Σ η_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct AveragingState {
    pub gamma: f64,
    pub xbar: BlockProfile,
}

impl AveragingState {
    pub fn new(eta0: f64, x0: BlockProfile) -> Self {
        Self { gamma: eta0, xbar: x0 }
    }

    /// `Γ' = Γ + η`, `X̄' = (Γ X̄ + η X) / Γ'`.
    pub fn update(&mut self, x_next: &BlockProfile, eta_next: f64) {
        let gamma_next = self.gamma + eta_next;
        self.xbar = self.xbar.scale(self.gamma / gamma_next).axpy(eta_next / gamma_next, x_next);
        self.gamma = gamma_next;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseTimings {
    pub setup: Duration,
    pub iterate: Duration,
    pub gap: Duration,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    /// `X̄_T` for AM-SMD, `X_T` otherwise (last good point if the run aborted).
    pub final_point: BlockProfile,
    /// `(iteration, strong gap)` at the reported point.
    pub gap_trace: Vec<(usize, f64)>,
    pub timings: PhaseTimings,
    pub config: SolverConfig,
    pub seed: u64,
    pub oracle_bound: f64,
    /// Reported point at every iteration, when `record_iterates` is set.
    pub iterates: Option<Vec<BlockProfile>>,
    /// Set when a numerical failure cut the run short.
    pub failure: Option<Error>,
}

impl RunResult {
    pub fn final_gap(&self) -> Option<f64> {
        self.gap_trace.last().map(|&(_, g)| g)
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    /// Resolved settings and the conventions in effect, one `key = value` per line.
    pub fn echo(&self) -> Vec<(String, String)> {
        let c = &self.config;
        vec![
            ("method".into(), c.method.name().into()),
            ("lambda".into(), c.method.lambda().to_string()),
            ("iterations".into(), c.iterations.to_string()),
            ("schedule".into(), c.schedule.name().into()),
            ("gap_every".into(), c.gap_every.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("oracle_bound".into(), self.oracle_bound.to_string()),
            ("init".into(), "Y0 = 0, X0 = mirror(0)".into()),
            ("stepsize_dimension".into(), "total".into()),
            ("gap_mapping".into(), "original".into()),
        ]
    }
}

/// Runs one solver trajectory.
pub fn run(problem: &SviProblem, config: &SolverConfig) -> Result<RunResult> {
    run_with_observer(problem, config, |_, _| {})
}

/// Like [`run`], calling `observer(t, reported_point)` for every `t = 0..=T`.
///
/// Configuration errors are returned as `Err`; numerical failures during the
/// iteration end the run early and are reported in [`RunResult::failure`].
pub fn run_with_observer(
    problem: &SviProblem,
    config: &SolverConfig,
    mut observer: impl FnMut(usize, &BlockProfile),
) -> Result<RunResult> {
    config.validate()?;
    let start = Instant::now();
    let schedule = config.schedule.resolve(problem)?;
    let set = problem.set();
    let averaging = matches!(config.method, Method::AmSmd);
    let lambda = config.method.lambda();
    let mut rng = RngStream::seed_from_u64(config.seed);

    let mut y = BlockProfile::zeros(&set.dims());
    let mut x = mirror_image(&y, set)?;
    let mut avg = AveragingState::new(schedule.eta(0), x.clone());

    let mut timings = PhaseTimings { setup: start.elapsed(), ..Default::default() };
    let mut gap_trace = Vec::with_capacity(config.iterations / config.gap_every + 2);
    let mut iterates = config.record_iterates.then(|| Vec::with_capacity(config.iterations + 1));
    let mut failure = None;

    let mut checkpoint = |t: usize, point: &BlockProfile, x: &BlockProfile, timings: &mut PhaseTimings| -> Result<()> {
        let t0 = Instant::now();
        x.check_feasible(set)?;
        point.check_feasible(set)?;
        let gap = problem.strong_gap(point)?;
        timings.gap += t0.elapsed();
        if gap < GAP_FLOOR || !gap.is_finite() {
            return Err(Error::Infeasible(format!("strong gap {gap:e} at iteration {t}")));
        }
        gap_trace.push((t, gap));
        Ok(())
    };

    if let Some(it) = iterates.as_mut() {
        it.push(x.clone());
    }
    observer(0, &x);
    if let Err(e) = checkpoint(0, &x, &x, &mut timings) {
        failure = Some(e);
    }

    let mut last_good = x.clone();
    let mut t = 0;
    while failure.is_none() && t < config.iterations {
        let t0 = Instant::now();
        let eta = schedule.eta(t);
        let step = problem.oracle_sample(&x, &mut rng).and_then(|(phi, _)| {
            let phi = if lambda != 0.0 { phi.axpy(lambda, &x) } else { phi };
            mirror_step(&y, &phi, eta, set)
        });
        match step {
            Ok((y_next, x_next)) => {
                y = y_next;
                x = x_next;
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
        t += 1;
        if averaging {
            avg.update(&x, schedule.eta(t));
        }
        timings.iterate += t0.elapsed();

        let point = if averaging { &avg.xbar } else { &x };
        if let Some(it) = iterates.as_mut() {
            it.push(point.clone());
        }
        observer(t, point);
        if t % config.gap_every == 0 || t == config.iterations {
            if let Err(e) = checkpoint(t, point, &x, &mut timings) {
                failure = Some(e);
                break;
            }
        }
        last_good = point.clone();
    }
    if failure.is_none() {
        last_good = if averaging { avg.xbar } else { x };
    }

    Ok(RunResult {
        final_point: last_good,
        gap_trace,
        timings,
        config: config.clone(),
        seed: config.seed,
        oracle_bound: problem.oracle_bound(),
        iterates,
        failure,
    })
}

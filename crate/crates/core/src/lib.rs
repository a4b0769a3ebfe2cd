//! Stochastic variational inequalities over products of trace-constrained
//! positive-semidefinite blocks, solved by matrix stochastic mirror descent
//! with the quantum-entropy mirror map.

pub mod error;
pub mod linalg;
pub mod mirror;
pub mod problem;
pub mod solver;
pub mod textio;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, EigenDecomposition, HermitianMatrix};
pub use problem::{BlockProfile, BlockSpec, NoiseModel, RngStream, SpectraSet, SviProblem, TraceMode};
pub use solver::{run, Method, RunResult, SolverConfig, StepSchedule};
pub mod harness;
pub mod mimo;

#[cfg(feature = "verification")]
pub mod verification;

//! Bayesian optimization for rank-ordered sets of diverse solutions.
//!
//! The optimizer in [`robot`] keeps one trust region per sought solution and
//! a single Gaussian-process surrogate over all evaluations. It returns `M`
//! high-scoring points in which every point of rank `i` is at least `τ` away,
//! under a user-supplied diversity measure, from every point of rank `j < i`.
//!
//! [`baselines`] holds the reference optimizers it is compared against and
//! [`problems`] the benchmark objectives and diversity measures.

pub mod baselines;
pub mod diversity;
pub mod error;
pub mod history;
pub mod problems;
pub mod robot;
pub mod sobol;
pub mod solution;
pub mod space;
pub mod surrogate;
pub mod trace;
pub mod trust_region;

pub use diversity::{pair_feasible, Diversity, DiversitySpec, Euclidean};
pub use error::{Error, Result};
pub use history::{Evaluation, History, Source};
pub use robot::{run, Robot, RobotConfig, RunOutcome, SurrogateSchedule};
pub use solution::{reconstruct_feasible_set, FeasibleSetTracker, RankedSolution, SolutionSet};
pub use space::{Point, SearchSpace};
pub use trace::{RunTrace, SetSnapshot, TraceRecord};
pub use trust_region::{TrParams, TrustRegion};

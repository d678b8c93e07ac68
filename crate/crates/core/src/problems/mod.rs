//! Benchmark objectives (maximization) and their diversity measures.

mod bumps;
mod portfolio;
mod rover;

pub use bumps::{Quadratic, SyntheticBumps};
pub use portfolio::{
    generate_gbm_prices, load_prices, sharpe_objective, topk_disjoint_diversity, write_prices_csv,
    PortfolioProblem, TopKDisjoint,
};
pub use rover::{owd_diversity, rover_objective, RoverOwd, RoverProblem, Square, Trajectory};

use crate::error::Result;
use crate::space::SearchSpace;

/// A black-box objective to maximize over a box-bounded space.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;

    fn space(&self) -> &SearchSpace;

    fn evaluate(&self, x: &[f64]) -> Result<f64>;
}

/// Wraps a closure as a [`Problem`].
pub struct FnProblem<F> {
    name: String,
    space: SearchSpace,
    f: F,
}

impl<F> FnProblem<F>
where
    F: Fn(&[f64]) -> Result<f64> + Send + Sync,
{
    pub fn new(name: impl Into<String>, space: SearchSpace, f: F) -> Self {
        Self {
            name: name.into(),
            space,
            f,
        }
    }
}

impl<F> Problem for FnProblem<F>
where
    F: Fn(&[f64]) -> Result<f64> + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn space(&self) -> &SearchSpace {
        &self.space
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        (self.f)(x)
    }
}

//! Per-evaluation run logs and the budgeted evaluator shared by every
//! optimizer.

use crate::diversity::DiversitySpec;
use crate::error::Result;
use crate::history::{History, Source};
use crate::problems::Problem;
use crate::solution::{FeasibleSetTracker, SolutionSet};
use crate::space::Point;

/// One objective evaluation together with the state of the reconstructed
/// solution set right after it.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub evals_used: usize,
    pub source: Source,
    pub x: Point,
    pub y: f64,
    /// Mean value over the filled ranks of the current set.
    pub set_mean: f64,
    pub set_fill: usize,
    pub best_y: f64,
}

/// The solution set at the end of an iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SetSnapshot {
    pub iteration: usize,
    pub evals_used: usize,
    pub set: SolutionSet,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub snapshots: Vec<SetSnapshot>,
}

impl RunTrace {
    pub fn evaluations(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.records.iter().map(|r| (r.x.as_slice(), r.y))
    }
}

/// Evaluates points against a fixed budget, appending to the history and
/// trace and keeping the reconstructed solution set current.
pub(crate) struct Evaluator<'p> {
    problem: &'p dyn Problem,
    budget: usize,
    pub history: History,
    pub tracker: FeasibleSetTracker,
    pub trace: RunTrace,
    pub iteration: usize,
}

impl<'p> Evaluator<'p> {
    pub fn new(problem: &'p dyn Problem, budget: usize, spec: DiversitySpec, m: usize) -> Self {
        Self {
            problem,
            budget,
            history: History::new(),
            tracker: FeasibleSetTracker::new(spec, m),
            trace: RunTrace::default(),
            iteration: 0,
        }
    }

    pub fn problem(&self) -> &'p dyn Problem {
        self.problem
    }

    pub fn remaining(&self) -> usize {
        self.budget.saturating_sub(self.history.len())
    }

    pub fn exhausted(&self) -> bool {
        self.remaining() == 0
    }

    pub fn evals_used(&self) -> usize {
        self.history.len()
    }

    /// Evaluates a unit-cube point. Returns `None` once the budget is spent.
    pub fn evaluate_unit(&mut self, u: &[f64], source: Source) -> Result<Option<f64>> {
        if self.exhausted() {
            return Ok(None);
        }
        let x = self.problem.space().from_unit(u);
        let y = self.problem.evaluate(&x)?;
        if !y.is_finite() {
            return Err(crate::error::Error::Evaluation(format!(
                "objective returned non-finite value {y}"
            )));
        }
        self.history.push(x.clone(), y, source);
        self.tracker.sync(&self.history);
        let set = self.tracker.indices();
        let fill = set.len();
        let mean = set.iter().map(|&i| self.history.get(i).y).sum::<f64>() / fill as f64;
        self.trace.records.push(TraceRecord {
            iteration: self.iteration,
            evals_used: self.history.len(),
            source,
            x,
            y,
            set_mean: mean,
            set_fill: fill,
            best_y: self.history.get(set[0]).y,
        });
        Ok(Some(y))
    }

    pub fn current_set(&self) -> SolutionSet {
        self.tracker.current(&self.history)
    }

    pub fn snapshot(&mut self) {
        let set = self.current_set();
        self.trace.snapshots.push(SetSnapshot {
            iteration: self.iteration,
            evals_used: self.history.len(),
            set,
        });
    }

    /// Unit-cube coordinates of the `i`-th evaluation.
    pub fn unit_point(&self, i: usize) -> Vec<f64> {
        self.problem.space().to_unit(&self.history.get(i).x)
    }
}

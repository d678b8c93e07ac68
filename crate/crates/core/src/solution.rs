//! Rank-ordered diverse solution sets and their greedy reconstruction from an
//! evaluation history.
//!
//! Rank 1 is the best point in the history. Rank `i` is the best point that is
//! feasible against every rank `j < i`. Visiting the history once in
//! descending value order and accepting each point that is feasible against
//! everything accepted so far yields exactly that hierarchy, which is what
//! both [`reconstruct_feasible_set`] and [`FeasibleSetTracker`] do.

use std::cmp::Ordering;

use crate::diversity::DiversitySpec;
use crate::error::{Error, Result};
use crate::history::History;
use crate::space::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct RankedSolution {
    pub x: Point,
    pub y: f64,
    /// Position of the solution in the history it was reconstructed from.
    pub index: usize,
}

/// Rank-ordered solutions, rank 1 first. May hold fewer than `M` entries
/// when the history has no feasible point for the remaining ranks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolutionSet {
    pub ranked: Vec<RankedSolution>,
}

impl SolutionSet {
    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }

    pub fn get(&self, rank_index: usize) -> Option<&RankedSolution> {
        self.ranked.get(rank_index)
    }

    pub fn best_value(&self) -> Option<f64> {
        self.ranked.first().map(|s| s.y)
    }

    /// Mean value over the filled ranks.
    pub fn mean_value(&self) -> Option<f64> {
        if self.ranked.is_empty() {
            None
        } else {
            Some(self.ranked.iter().map(|s| s.y).sum::<f64>() / self.ranked.len() as f64)
        }
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.ranked.iter().map(|s| s.x.as_slice())
    }

    /// Checks every hierarchical constraint `δ(x_i, x_j) >= τ`, `j < i`.
    pub fn is_feasible(&self, spec: &DiversitySpec) -> bool {
        self.violations(spec).is_empty()
    }

    /// Pairs `(i, j)` with `j < i` that violate the diversity threshold.
    pub fn violations(&self, spec: &DiversitySpec) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.ranked.len() {
            for j in 0..i {
                if !spec.pair_feasible(&self.ranked[i].x, &self.ranked[j].x) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Descending by value, ties broken by earlier evaluation.
fn rank_order(history: &History, a: usize, b: usize) -> Ordering {
    history
        .get(b)
        .y
        .partial_cmp(&history.get(a).y)
        .unwrap_or(Ordering::Equal)
        .then(a.cmp(&b))
}

fn sorted_indices(history: &History) -> Vec<usize> {
    let mut order: Vec<usize> = (0..history.len()).collect();
    order.sort_by(|&a, &b| rank_order(history, a, b));
    order
}

fn greedy_scan(
    history: &History,
    spec: &DiversitySpec,
    m: usize,
    order: impl Iterator<Item = usize>,
    chosen: &mut Vec<usize>,
) {
    for idx in order {
        if chosen.len() >= m {
            break;
        }
        let x = &history.get(idx).x;
        if chosen
            .iter()
            .all(|&c| spec.pair_feasible(x, &history.get(c).x))
        {
            chosen.push(idx);
        }
    }
}

fn to_set(history: &History, chosen: &[usize]) -> SolutionSet {
    SolutionSet {
        ranked: chosen
            .iter()
            .map(|&i| {
                let e = history.get(i);
                RankedSolution {
                    x: e.x.clone(),
                    y: e.y,
                    index: i,
                }
            })
            .collect(),
    }
}

/// Greedily rebuilds the rank-ordered feasible set from the whole history.
pub fn reconstruct_feasible_set(
    history: &History,
    spec: &DiversitySpec,
    m: usize,
) -> Result<SolutionSet> {
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    if m == 0 {
        return Err(Error::InvalidConfig("M must be at least 1".into()));
    }
    let mut chosen = Vec::with_capacity(m);
    greedy_scan(history, spec, m, sorted_indices(history).into_iter(), &mut chosen);
    Ok(to_set(history, &chosen))
}

/// Maintains the reconstructed feasible set of a growing history.
///
/// A new evaluation only changes the set when it is accepted by the greedy
/// scan, i.e. when fewer than `M` solutions outrank it and it is feasible
/// against all of them. Otherwise the update costs at most `M` diversity
/// evaluations.
#[derive(Debug, Clone)]
pub struct FeasibleSetTracker {
    spec: DiversitySpec,
    m: usize,
    order: Vec<usize>,
    chosen: Vec<usize>,
    seen: usize,
}

impl FeasibleSetTracker {
    pub fn new(spec: DiversitySpec, m: usize) -> Self {
        assert!(m >= 1, "M must be at least 1");
        Self {
            spec,
            m,
            order: Vec::new(),
            chosen: Vec::new(),
            seen: 0,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn spec(&self) -> &DiversitySpec {
        &self.spec
    }

    /// Incorporates every evaluation appended to `history` since the last call.
    pub fn sync(&mut self, history: &History) {
        while self.seen < history.len() {
            self.insert(history, self.seen);
            self.seen += 1;
        }
    }

    fn insert(&mut self, history: &History, idx: usize) {
        let pos = self
            .order
            .partition_point(|&o| rank_order(history, o, idx) == Ordering::Less);
        self.order.insert(pos, idx);

        let y = history.get(idx).y;
        // Solutions that outrank the new point keep their ranks.
        let ahead = self
            .chosen
            .iter()
            .take_while(|&&c| rank_order(history, c, idx) == Ordering::Less)
            .count();
        if ahead >= self.m {
            return;
        }
        let x = &history.get(idx).x;
        let feasible = self.chosen[..ahead]
            .iter()
            .all(|&c| self.spec.pair_feasible(x, &history.get(c).x));
        if !feasible {
            return;
        }
        debug_assert!(self.chosen[..ahead].iter().all(|&c| history.get(c).y >= y));
        self.chosen.truncate(ahead);
        self.chosen.push(idx);
        let rest = self.order[pos + 1..].to_vec();
        greedy_scan(history, &self.spec, self.m, rest.into_iter(), &mut self.chosen);
    }

    pub fn indices(&self) -> &[usize] {
        &self.chosen
    }

    pub fn current(&self, history: &History) -> SolutionSet {
        to_set(history, &self.chosen)
    }
}

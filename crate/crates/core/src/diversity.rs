use std::fmt;
use std::sync::Arc;

/// A symmetric, total pairwise dissimilarity between points in search-space
/// coordinates.
pub trait Diversity: Send + Sync {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64;

    fn name(&self) -> &str;
}

/// Plain Euclidean distance.
#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean;

impl Diversity for Euclidean {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        euclidean(a, b)
    }

    fn name(&self) -> &str {
        "euclidean"
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Diversity measure paired with the threshold every pair of solutions must
/// reach.
#[derive(Clone)]
pub struct DiversitySpec {
    pub measure: Arc<dyn Diversity>,
    pub tau: f64,
}

impl DiversitySpec {
    pub fn new(measure: Arc<dyn Diversity>, tau: f64) -> Self {
        Self { measure, tau }
    }

    pub fn euclidean(tau: f64) -> Self {
        Self::new(Arc::new(Euclidean), tau)
    }

    /// A setting every pair of points satisfies.
    pub fn vacuous() -> Self {
        Self::euclidean(f64::NEG_INFINITY)
    }

    pub fn is_vacuous(&self) -> bool {
        self.tau == f64::NEG_INFINITY
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.measure.distance(a, b)
    }

    pub fn pair_feasible(&self, a: &[f64], b: &[f64]) -> bool {
        self.is_vacuous() || self.distance(a, b) >= self.tau
    }

    /// True when `x` is feasible against every point in `others`.
    pub fn feasible_against<'a, I>(&self, x: &[f64], others: I) -> bool
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        others.into_iter().all(|p| self.pair_feasible(x, p))
    }
}

impl fmt::Debug for DiversitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiversitySpec")
            .field("measure", &self.measure.name())
            .field("tau", &self.tau)
            .finish()
    }
}

pub fn pair_feasible(spec: &DiversitySpec, a: &[f64], b: &[f64]) -> bool {
    spec.pair_feasible(a, b)
}

//! Box-bounded search spaces and the mapping to the unit hypercube that all
//! optimizers work in internally.

use crate::error::{Error, Result};

/// A point in search-space coordinates.
pub type Point = Vec<f64>;

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidConfig("search space must have dim >= 1".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidConfig(format!(
                    "bounds of dimension {j} must satisfy lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The unit hypercube `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Self {
        assert!(dim > 0, "dim must be positive");
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn clamp(&self, x: &[f64]) -> Point {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// Maps a unit-cube point into this space, clamping the result.
    pub fn from_unit(&self, u: &[f64]) -> Point {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| (lo + v * (hi - lo)).clamp(*lo, *hi))
            .collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Point {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
            .collect()
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("point has non-finite coordinates".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_bounds() {
        assert!(SearchSpace::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(SearchSpace::new(vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(SearchSpace::new(vec![], vec![]).is_err());
    }

    #[test]
    fn unit_mapping_round_trips() {
        let space = SearchSpace::new(vec![-2.0, 10.0], vec![2.0, 20.0]).unwrap();
        let x = vec![1.0, 12.5];
        let u = space.to_unit(&x);
        assert_eq!(u, vec![0.75, 0.25]);
        assert_eq!(space.from_unit(&u), x);
        assert_eq!(space.clamp(&[5.0, 0.0]), vec![2.0, 10.0]);
    }
}

use crate::diversity::euclidean;
use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::space::{Point, SearchSpace};

/// Maximum of isotropic Gaussian bumps with known, well separated peaks.
///
/// With the peaks farther apart than `tau + 2 * width`, the optimal diverse
/// set under Euclidean distance and threshold `tau` is the list of centers
/// in height order.
#[derive(Debug, Clone)]
pub struct SyntheticBumps {
    pub centers: Vec<Point>,
    pub heights: Vec<f64>,
    pub widths: Vec<f64>,
    space: SearchSpace,
}

impl SyntheticBumps {
    pub fn new(centers: Vec<Point>, heights: Vec<f64>, widths: Vec<f64>) -> Result<Self> {
        let k = centers.len();
        if k == 0 || heights.len() != k || widths.len() != k {
            return Err(Error::InvalidConfig(
                "bumps need matching non-empty centers, heights and widths".into(),
            ));
        }
        let dim = centers[0].len();
        if dim == 0 || centers.iter().any(|c| c.len() != dim) {
            return Err(Error::InvalidConfig("bump centers must share a dimension".into()));
        }
        if heights.iter().any(|&h| h <= 0.0) || heights.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidConfig(
                "bump heights must be positive and strictly decreasing".into(),
            ));
        }
        if widths.iter().any(|&w| w <= 0.0) {
            return Err(Error::InvalidConfig("bump widths must be positive".into()));
        }
        Ok(Self {
            centers,
            heights,
            widths,
            space: SearchSpace::unit(dim),
        })
    }

    /// Two-dimensional instance with four bumps of width 0.05, heights
    /// 1.0 / 0.9 / 0.8 / 0.7 and pairwise center distances of at least 0.45.
    pub fn four_bumps() -> Self {
        Self::new(
            vec![
                vec![0.25, 0.2],
                vec![0.8, 0.3],
                vec![0.3, 0.75],
                vec![0.75, 0.8],
            ],
            vec![1.0, 0.9, 0.8, 0.7],
            vec![0.05; 4],
        )
        .expect("valid bump layout")
    }

    pub fn min_center_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.centers.len() {
            for j in 0..i {
                best = best.min(euclidean(&self.centers[i], &self.centers[j]));
            }
        }
        best
    }

    /// Whether the centers are separated enough for `tau` to leave the
    /// optimal diverse set equal to the center list.
    pub fn separated_for(&self, tau: f64) -> bool {
        let w = self.widths.iter().cloned().fold(0.0, f64::max);
        self.min_center_distance() > tau + 2.0 * w
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.centers
            .iter()
            .zip(self.heights.iter().zip(&self.widths))
            .map(|(c, (h, w))| {
                let d2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                h * (-d2 / (2.0 * w * w)).exp()
            })
            .fold(0.0, f64::max)
    }
}

impl Problem for SyntheticBumps {
    fn name(&self) -> &str {
        "bumps"
    }

    fn space(&self) -> &SearchSpace {
        &self.space
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.space.check_point(x)?;
        Ok(self.value(x))
    }
}

/// Negated squared distance to a fixed optimum.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub optimum: Point,
    space: SearchSpace,
}

impl Quadratic {
    pub fn new(optimum: Point) -> Self {
        let space = SearchSpace::unit(optimum.len());
        Self { optimum, space }
    }
}

impl Problem for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn space(&self) -> &SearchSpace {
        &self.space
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.space.check_point(x)?;
        Ok(-x
            .iter()
            .zip(&self.optimum)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diversity::DiversitySpec;
    use crate::history::{History, Source};
    use crate::solution::reconstruct_feasible_set;

    #[test]
    fn peak_value_at_center() {
        let b = SyntheticBumps::four_bumps();
        assert_eq!(b.value(&b.centers[0]), 1.0);
        assert_eq!(b.value(&b.centers[3]), 0.7);
    }

    #[test]
    fn decays_far_from_centers() {
        let b = SyntheticBumps::new(vec![vec![0.5, 0.5]], vec![1.0], vec![0.01]).unwrap();
        assert!(b.value(&[0.5, 0.61]) < 1e-10);
    }

    #[test]
    fn rejects_non_decreasing_heights() {
        assert!(SyntheticBumps::new(vec![vec![0.1], vec![0.9]], vec![1.0, 1.0], vec![0.1, 0.1]).is_err());
    }

    #[test]
    fn layout_is_separated() {
        let b = SyntheticBumps::four_bumps();
        assert!(b.min_center_distance() >= 0.45);
        assert!(b.separated_for(0.3));
    }

    #[test]
    fn grid_search_recovers_centers_as_diverse_optimum() {
        let b = SyntheticBumps::four_bumps();
        let mut h = History::new();
        for i in 0..=100 {
            for j in 0..=100 {
                let x = vec![i as f64 / 100.0, j as f64 / 100.0];
                let y = b.value(&x);
                h.push(x, y, Source::Init);
            }
        }
        let set = reconstruct_feasible_set(&h, &DiversitySpec::euclidean(0.3), 4).unwrap();
        assert_eq!(set.len(), 4);
        for (s, c) in set.ranked.iter().zip(&b.centers) {
            assert!(euclidean(&s.x, c) < 1e-9, "{:?} vs {:?}", s.x, c);
        }
    }
}

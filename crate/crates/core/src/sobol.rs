//! Owen-scrambled Sobol points backed by `sobol_burley`.
//!
//! The underlying tables cover 256 dimensions. Higher dimensions are padded
//! with further independently scrambled 256-dimensional blocks.

use rand::Rng;

const BLOCK: usize = sobol_burley::NUM_DIMENSIONS as usize;
const MAX_POINTS: usize = 1 << 16;

#[derive(Debug, Clone, Copy)]
pub struct ScrambledSobol {
    dim: usize,
    seed: u32,
}

impl ScrambledSobol {
    pub fn new(dim: usize, seed: u32) -> Self {
        Self { dim, seed }
    }

    /// Draws the scramble seed from `rng`.
    pub fn from_rng<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self::new(dim, rng.gen())
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        assert!(index < MAX_POINTS, "at most 2^16 Sobol points per sequence");
        (0..self.dim)
            .map(|d| {
                let block = (d / BLOCK) as u32;
                let seed = self.seed ^ block.wrapping_mul(0x9e37_79b9);
                sobol_burley::sample(index as u32, (d % BLOCK) as u32, seed) as f64
            })
            .collect()
    }

    /// The first `n` points of the sequence, in `[0, 1)^dim`.
    pub fn points(&self, n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| self.point(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_are_stratified_in_each_dimension() {
        let sobol = ScrambledSobol::new(3, 7);
        let pts = sobol.points(64);
        for d in 0..3 {
            let mut bins = [0usize; 8];
            for p in &pts {
                assert!((0.0..1.0).contains(&p[d]));
                bins[(p[d] * 8.0) as usize] += 1;
            }
            assert!(bins.iter().all(|&c| c == 8), "dimension {d}: {bins:?}");
        }
    }

    #[test]
    fn padding_covers_high_dimensions() {
        let sobol = ScrambledSobol::new(300, 1);
        let p = sobol.point(5);
        assert_eq!(p.len(), 300);
        assert_ne!(p[10], p[10 + BLOCK]);
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(ScrambledSobol::new(4, 3).points(5), ScrambledSobol::new(4, 3).points(5));
        assert_ne!(ScrambledSobol::new(4, 3).points(5), ScrambledSobol::new(4, 4).points(5));
    }
}

//! Hyper-rectangular trust regions with success/failure length dynamics.
//!
//! All lengths are in unit-hypercube coordinates.

use rand::Rng;

use crate::error::{Error, Result};
use crate::sobol::ScrambledSobol;

#[derive(Debug, Clone, PartialEq)]
pub struct TrParams {
    pub length_init: f64,
    pub length_min: f64,
    pub length_max: f64,
    pub success_tolerance: u32,
    pub failure_tolerance: u32,
    /// Relative improvement over the incumbent needed to count as a success.
    pub gamma_rel: f64,
}

impl TrParams {
    /// Standard constants for a search of dimension `dim` acquiring
    /// `batch_per_tr` points per region and step.
    pub fn defaults(dim: usize, batch_per_tr: usize) -> Self {
        let fail = (dim as f64 / batch_per_tr.max(1) as f64).ceil() as u32;
        Self {
            length_init: 0.8,
            length_min: 0.5f64.powi(7),
            length_max: 1.6,
            success_tolerance: 3,
            failure_tolerance: fail.max(5),
            gamma_rel: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 < self.length_min
            && self.length_min < self.length_init
            && self.length_init <= self.length_max
            && self.success_tolerance >= 1
            && self.failure_tolerance >= 1
            && self.gamma_rel >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid trust-region parameters: {self:?}")))
        }
    }

    /// Whether `y` improves on `incumbent` by the required margin.
    pub fn is_improvement(&self, y: f64, incumbent: f64) -> bool {
        if incumbent == f64::NEG_INFINITY {
            return y > incumbent;
        }
        y > incumbent + self.gamma_rel * incumbent.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegion {
    /// 1 is the highest rank.
    pub rank: usize,
    /// Incumbent in unit-cube coordinates.
    pub center: Vec<f64>,
    pub incumbent_value: f64,
    pub length: f64,
    pub success_count: u32,
    pub failure_count: u32,
    /// Set when no feasible evaluated point was available to center on and
    /// the center was drawn at random instead.
    pub random_center: bool,
}

impl TrustRegion {
    pub fn new(rank: usize, center: Vec<f64>, incumbent_value: f64, params: &TrParams) -> Self {
        Self {
            rank,
            center,
            incumbent_value,
            length: params.length_init,
            success_count: 0,
            failure_count: 0,
            random_center: false,
        }
    }

    pub fn recenter(&mut self, center: Vec<f64>, value: f64) {
        self.center = center;
        self.incumbent_value = value;
        self.random_center = false;
    }

    /// Updates the streak counters with the best value this region acquired
    /// in the last batch, doubling or halving the length at the tolerances.
    pub fn record_result(&mut self, params: &TrParams, batch_best_y: f64) {
        if params.is_improvement(batch_best_y, self.incumbent_value) {
            self.success_count += 1;
            self.failure_count = 0;
        } else {
            self.success_count = 0;
            self.failure_count += 1;
        }
        if self.success_count >= params.success_tolerance {
            self.length = (2.0 * self.length).min(params.length_max);
            self.success_count = 0;
        } else if self.failure_count >= params.failure_tolerance {
            self.length /= 2.0;
            self.failure_count = 0;
        }
    }

    pub fn needs_restart(&self, params: &TrParams) -> bool {
        self.length < params.length_min
    }

    pub fn reset(&mut self, params: &TrParams) {
        self.length = params.length_init;
        self.success_count = 0;
        self.failure_count = 0;
    }

    /// Lower and upper corners of the region: half-width `length / 2`
    /// scaled by the normalized lengthscale weights, clipped to the unit cube.
    pub fn bounds(&self, lengthscales: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let weights = ard_weights(lengthscales);
        let lo = self
            .center
            .iter()
            .zip(&weights)
            .map(|(c, w)| (c - w * self.length / 2.0).clamp(0.0, 1.0))
            .collect();
        let hi = self
            .center
            .iter()
            .zip(&weights)
            .map(|(c, w)| (c + w * self.length / 2.0).clamp(0.0, 1.0))
            .collect();
        (lo, hi)
    }

    /// Samples `r` candidates around the center: a scrambled Sobol design
    /// over the region, where each coordinate replaces the center's with
    /// probability `min(20 / dim, 1)` (at least one coordinate per candidate).
    pub fn generate_candidates<R: Rng + ?Sized>(
        &self,
        lengthscales: &[f64],
        r: usize,
        rng: &mut R,
    ) -> Vec<Vec<f64>> {
        let dim = self.center.len();
        let (lo, hi) = self.bounds(lengthscales);
        let sobol = ScrambledSobol::from_rng(dim, rng);
        let prob = (20.0 / dim as f64).min(1.0);
        (0..r)
            .map(|i| {
                let design = sobol.point(i);
                let mut mask: Vec<bool> = (0..dim).map(|_| rng.gen::<f64>() <= prob).collect();
                if !mask.iter().any(|&m| m) {
                    mask[rng.gen_range(0..dim)] = true;
                }
                (0..dim)
                    .map(|j| {
                        if mask[j] {
                            lo[j] + (hi[j] - lo[j]) * design[j]
                        } else {
                            self.center[j]
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Lengthscales normalized to unit geometric mean.
pub fn ard_weights(lengthscales: &[f64]) -> Vec<f64> {
    let log_mean = lengthscales.iter().map(|l| l.ln()).sum::<f64>() / lengthscales.len() as f64;
    let g = log_mean.exp();
    lengthscales.iter().map(|l| l / g).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> TrParams {
        TrParams {
            length_init: 0.8,
            length_min: 0.5f64.powi(7),
            length_max: 1.6,
            success_tolerance: 3,
            failure_tolerance: 10,
            gamma_rel: 1e-3,
        }
    }

    fn region() -> TrustRegion {
        TrustRegion::new(1, vec![0.5, 0.5], 1.0, &params())
    }

    #[test]
    fn doubles_after_success_streak_and_caps() {
        let p = params();
        let mut tr = region();
        for _ in 0..2 {
            tr.record_result(&p, 2.0);
        }
        assert_eq!(tr.length, 0.8);
        tr.record_result(&p, 2.0);
        assert_eq!(tr.length, 1.6);
        assert_eq!((tr.success_count, tr.failure_count), (0, 0));
        for _ in 0..3 {
            tr.record_result(&p, 2.0);
        }
        assert_eq!(tr.length, 1.6);
    }

    #[test]
    fn halves_after_failure_streak() {
        let p = params();
        let mut tr = region();
        for _ in 0..9 {
            tr.record_result(&p, 0.5);
        }
        assert_eq!(tr.length, 0.8);
        tr.record_result(&p, 0.5);
        assert_eq!(tr.length, 0.4);
    }

    #[test]
    fn gamma_rule_treats_small_gains_as_failure() {
        let p = params();
        let mut tr = region();
        tr.record_result(&p, 1.0 + 1e-3);
        assert_eq!((tr.success_count, tr.failure_count), (0, 1));
        tr.record_result(&p, 1.0 + 1.1e-3);
        assert_eq!((tr.success_count, tr.failure_count), (1, 0));

        let vanilla = TrParams { gamma_rel: 0.0, ..p };
        let mut tr = region();
        tr.record_result(&vanilla, 1.0 + 1e-12);
        assert_eq!(tr.success_count, 1);
    }

    #[test]
    fn restart_threshold_is_strict() {
        let p = params();
        let mut tr = region();
        assert!(!tr.needs_restart(&p));
        tr.length = p.length_min;
        assert!(!tr.needs_restart(&p));
        tr.length = p.length_min / 2.0;
        assert!(tr.needs_restart(&p));
    }

    #[test]
    fn default_failure_tolerance() {
        assert_eq!(TrParams::defaults(2, 1).failure_tolerance, 5);
        assert_eq!(TrParams::defaults(60, 1).failure_tolerance, 60);
        assert_eq!(TrParams::defaults(60, 7).failure_tolerance, 9);
    }

    #[test]
    fn one_dimensional_candidates_always_move() {
        let tr = TrustRegion::new(1, vec![0.5], 0.0, &params());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = tr.generate_candidates(&[1.0], 50, &mut rng);
        assert!(c.iter().all(|p| p[0] != 0.5));
    }

    #[test]
    fn candidates_are_deterministic() {
        let tr = region();
        let a = tr.generate_candidates(&[0.3, 0.9], 20, &mut ChaCha8Rng::seed_from_u64(3));
        let b = tr.generate_candidates(&[0.3, 0.9], 20, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn candidates_stay_in_box(seed in any::<u64>(),
                                  center in prop::collection::vec(0.0f64..1.0, 1..30),
                                  length in 0.001f64..1.6) {
            let dim = center.len();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ls: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.01..2.0)).collect();
            let mut tr = TrustRegion::new(1, center, 0.0, &params());
            tr.length = length;
            let (lo, hi) = tr.bounds(&ls);
            for c in tr.generate_candidates(&ls, 40, &mut rng) {
                for j in 0..dim {
                    prop_assert!(lo[j] <= c[j] && c[j] <= hi[j]);
                    prop_assert!((0.0..=1.0).contains(&c[j]));
                }
            }
        }

        #[test]
        fn unclipped_widths_have_geometric_mean_length(ls in prop::collection::vec(0.01f64..3.0, 1..20),
                                                       length in 0.001f64..0.1) {
            let dim = ls.len();
            let mut tr = TrustRegion::new(1, vec![0.5; dim], 0.0, &params());
            tr.length = length;
            // small lengths keep the box inside the cube
            let w = ard_weights(&ls);
            prop_assume!(w.iter().all(|wi| wi * length / 2.0 < 0.5));
            let (lo, hi) = tr.bounds(&ls);
            let log_gm = lo.iter().zip(&hi).map(|(l, h)| (h - l).ln()).sum::<f64>() / dim as f64;
            prop_assert!((log_gm.exp() - length).abs() < 1e-9 * length.max(1.0));
        }

        #[test]
        fn length_stays_in_range(outcomes in prop::collection::vec(any::<bool>(), 0..200)) {
            let p = params();
            let mut tr = region();
            for success in outcomes {
                let before = tr.length;
                tr.record_result(&p, if success { tr.incumbent_value + 1.0 } else { tr.incumbent_value });
                if success {
                    tr.incumbent_value += 1.0;
                }
                prop_assert!(tr.length > 0.0 && tr.length <= p.length_max);
                prop_assert!(tr.length == before || tr.length == before / 2.0 || tr.length == (2.0 * before).min(p.length_max));
                prop_assert!(tr.success_count == 0 || tr.failure_count == 0);
            }
        }
    }
}

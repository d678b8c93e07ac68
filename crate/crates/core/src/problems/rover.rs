//! Rover trajectory planning: 30 waypoints in the unit square (60 inputs),
//! rewarded for reaching the goal from the start while avoiding square
//! obstacles.

use crate::diversity::Diversity;
use crate::error::Result;
use crate::problems::Problem;
use crate::space::SearchSpace;

/// Axis-aligned square obstacle given by its lower-left corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Square {
    pub min: [f64; 2],
    pub side: f64,
}

impl Square {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        (self.min[0]..=self.min[0] + self.side).contains(&p[0])
            && (self.min[1]..=self.min[1] + self.side).contains(&p[1])
    }
}

/// Densified polyline through the waypoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<[f64; 2]>,
}

impl Trajectory {
    /// Linear interpolation with `per_segment` samples per segment, each
    /// segment sampled from its start (inclusive) and the last waypoint
    /// appended.
    pub fn densify(waypoints: &[[f64; 2]], per_segment: usize) -> Self {
        let per_segment = per_segment.max(1);
        let mut points = Vec::with_capacity(waypoints.len().saturating_sub(1) * per_segment + 1);
        for seg in waypoints.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            for k in 0..per_segment {
                let t = k as f64 / per_segment as f64;
                points.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        if let Some(last) = waypoints.last() {
            points.push(*last);
        }
        Self { points }
    }

    /// Waypoints from a flat `[x0, y0, x1, y1, ...]` vector, clamped to the
    /// unit square.
    pub fn waypoints(x: &[f64]) -> Vec<[f64; 2]> {
        x.chunks_exact(2)
            .map(|c| [c[0].clamp(0.0, 1.0), c[1].clamp(0.0, 1.0)])
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct RoverProblem {
    pub n_waypoints: usize,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub obstacles: Vec<Square>,
    pub collision_penalty_weight: f64,
    pub endpoint_penalty_weight: f64,
    /// Charged per unit of path length beyond the straight start-goal line.
    pub length_penalty_weight: f64,
    pub n_samples_per_segment: usize,
    space: SearchSpace,
}

impl Default for RoverProblem {
    fn default() -> Self {
        Self::with_obstacles(Self::grid_obstacles())
    }
}

impl RoverProblem {
    pub fn with_obstacles(obstacles: Vec<Square>) -> Self {
        let n_waypoints = 30;
        Self {
            n_waypoints,
            start: [0.05, 0.05],
            goal: [0.95, 0.95],
            obstacles,
            collision_penalty_weight: 10.0,
            endpoint_penalty_weight: 10.0,
            length_penalty_weight: 3.0,
            n_samples_per_segment: 250,
            space: SearchSpace::unit(2 * n_waypoints),
        }
    }

    /// 5×5 grid of squares of side 0.05, neighbouring sides 0.1 apart,
    /// centered in the unit square.
    pub fn grid_obstacles() -> Vec<Square> {
        let side = 0.05;
        let pitch = side + 0.1;
        let extent = 5.0 * side + 4.0 * 0.1;
        let offset = (1.0 - extent) / 2.0;
        let mut out = Vec::with_capacity(25);
        for i in 0..5 {
            for j in 0..5 {
                out.push(Square {
                    min: [offset + i as f64 * pitch, offset + j as f64 * pitch],
                    side,
                });
            }
        }
        out
    }

    pub fn trajectory(&self, x: &[f64]) -> Trajectory {
        Trajectory::densify(&Trajectory::waypoints(x), self.n_samples_per_segment)
    }

    pub fn collision_fraction(&self, traj: &Trajectory) -> f64 {
        let hits = traj
            .points
            .iter()
            .filter(|&&p| self.obstacles.iter().any(|o| o.contains(p)))
            .count();
        hits as f64 / traj.points.len() as f64
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// `5 − w_c · collision fraction − w_e · (‖first − start‖ + ‖last − goal‖)
/// − w_l · max(0, path length − ‖goal − start‖)`.
pub fn rover_objective(x: &[f64], prob: &RoverProblem) -> f64 {
    let waypoints = Trajectory::waypoints(x);
    let traj = Trajectory::densify(&waypoints, prob.n_samples_per_segment);
    let first = traj.points[0];
    let last = *traj.points.last().expect("non-empty trajectory");
    let length: f64 = waypoints.windows(2).map(|w| dist(w[0], w[1])).sum();
    let excess = (length - dist(prob.start, prob.goal)).max(0.0);
    5.0 - prob.collision_penalty_weight * prob.collision_fraction(&traj)
        - prob.endpoint_penalty_weight * (dist(first, prob.start) + dist(last, prob.goal))
        - prob.length_penalty_weight * excess
}

fn mean_nearest(from: &[[f64; 2]], to: &[[f64; 2]]) -> f64 {
    let total: f64 = from
        .iter()
        .map(|&p| {
            to.iter()
                .map(|&q| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .sum();
    total / from.len() as f64
}

/// Symmetrized one-way distance: the average of the mean nearest-point
/// distance from `a` to `b` and from `b` to `a`.
pub fn owd_diversity(a: &Trajectory, b: &Trajectory) -> f64 {
    0.5 * (mean_nearest(&a.points, &b.points) + mean_nearest(&b.points, &a.points))
}

/// One-way distance between the trajectories encoded by two rover inputs.
///
/// Uses its own, coarser densification than the objective so that the many
/// pairwise comparisons made during a run stay cheap.
#[derive(Debug, Clone, Copy)]
pub struct RoverOwd {
    pub per_segment: usize,
}

impl Default for RoverOwd {
    fn default() -> Self {
        Self { per_segment: 2 }
    }
}

impl Diversity for RoverOwd {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        owd_diversity(
            &Trajectory::densify(&Trajectory::waypoints(a), self.per_segment),
            &Trajectory::densify(&Trajectory::waypoints(b), self.per_segment),
        )
    }

    fn name(&self) -> &str {
        "owd"
    }
}

impl Problem for RoverProblem {
    fn name(&self) -> &str {
        "rover"
    }

    fn space(&self) -> &SearchSpace {
        &self.space
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.space.check_point(x)?;
        Ok(rover_objective(x, self))
    }
}

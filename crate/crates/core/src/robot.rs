//! Rank-ordered diverse optimization with one trust region per sought
//! solution and a single global surrogate.
//!
//! Each step refits the surrogate, recenters every trust region on the
//! greedily reconstructed feasible set, acquires candidates rank by rank with
//! hierarchically constrained Thompson sampling, evaluates them, updates the
//! trust-region lengths and restarts collapsed regions.

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diversity::DiversitySpec;
use crate::error::{Error, Result};
use crate::history::{History, Source};
use crate::problems::Problem;
use crate::sobol::ScrambledSobol;
use crate::solution::SolutionSet;
use crate::surrogate::{local_training_subset, training_subset, GpHyperparams, GpModel, Standardizer};
use crate::trace::{Evaluator, RunTrace};
use crate::trust_region::{TrParams, TrustRegion};

/// Surrogate training schedule: full-batch gradient steps on the initial
/// data and after every optimization step.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateSchedule {
    pub init_epochs: usize,
    pub step_epochs: usize,
    pub learning_rate: f64,
    /// Training-set cap; beyond it the surrogate sees the current solutions
    /// plus the evaluations nearest the trust-region centers.
    pub max_train_points: usize,
}

impl Default for SurrogateSchedule {
    fn default() -> Self {
        Self {
            init_epochs: 20,
            step_epochs: 2,
            learning_rate: 0.001,
            max_train_points: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RobotConfig {
    /// Number of diverse solutions sought.
    pub m: usize,
    pub diversity: DiversitySpec,
    pub n_init: usize,
    /// Maximum number of objective evaluations, initialization included.
    pub budget: usize,
    /// Candidates sampled per trust region and step.
    pub candidates: usize,
    pub batch_per_tr: usize,
    pub tr_params: TrParams,
    pub seed: u64,
    pub surrogate: SurrogateSchedule,
    /// Fresh points drawn when a trust region restarts.
    pub restart_points: usize,
}

impl RobotConfig {
    /// Defaults for a `dim`-dimensional problem.
    pub fn new(dim: usize, m: usize, diversity: DiversitySpec, n_init: usize, budget: usize, seed: u64) -> Self {
        let batch_per_tr = 1;
        Self {
            m,
            diversity,
            n_init,
            budget,
            candidates: (100 * dim).min(5000),
            batch_per_tr,
            tr_params: TrParams::defaults(dim, batch_per_tr),
            seed,
            surrogate: SurrogateSchedule::default(),
            restart_points: (2 * dim).max(20),
        }
    }

    /// Sets the batch size and the failure tolerance that depends on it.
    pub fn with_batch_per_tr(mut self, dim: usize, batch_per_tr: usize) -> Self {
        self.batch_per_tr = batch_per_tr;
        self.tr_params.failure_tolerance = TrParams::defaults(dim, batch_per_tr).failure_tolerance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.m == 0 {
            return fail("M must be at least 1");
        }
        if self.n_init == 0 {
            return fail("n_init must be at least 1");
        }
        if self.budget < self.n_init {
            return fail("budget must be at least n_init");
        }
        if self.candidates == 0 || self.batch_per_tr == 0 {
            return fail("candidates and batch_per_tr must be positive");
        }
        if self.batch_per_tr > self.candidates {
            return fail("batch_per_tr must not exceed candidates");
        }
        if self.surrogate.max_train_points == 0 {
            return fail("max_train_points must be positive");
        }
        if self.diversity.tau.is_nan() {
            return fail("tau must not be NaN");
        }
        self.tr_params.validate()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RobotStats {
    /// Candidates removed by the diversity filter, per rank.
    pub filtered_by_rank: Vec<usize>,
    /// Steps in which a rank had no feasible candidate, per rank.
    pub empty_selections: Vec<usize>,
    pub restarts: Vec<usize>,
    /// Trust regions that had to be centered on a random point.
    pub random_centers: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub solutions: SolutionSet,
    pub trace: RunTrace,
    pub history: History,
}

/// Fits the surrogate on a capped subset of the history: everything in
/// `must_include`, then the points nearest to `centers` (unit cube).
pub(crate) fn fit_surrogate(
    eval: &Evaluator<'_>,
    centers: &[Vec<f64>],
    must_include: &[usize],
    init: GpHyperparams,
    epochs: usize,
    schedule: &SurrogateSchedule,
) -> Result<(GpModel, Standardizer)> {
    let idx = if eval.evals_used() > schedule.max_train_points && !centers.is_empty() {
        let points: Vec<Vec<f64>> = (0..eval.evals_used()).map(|i| eval.unit_point(i)).collect();
        local_training_subset(&points, centers, schedule.max_train_points, must_include)
    } else {
        training_subset(eval.evals_used(), schedule.max_train_points, must_include)
    };
    fit_on(eval, &idx, init, epochs, schedule.learning_rate)
}

pub(crate) fn fit_on(
    eval: &Evaluator<'_>,
    idx: &[usize],
    init: GpHyperparams,
    epochs: usize,
    learning_rate: f64,
) -> Result<(GpModel, Standardizer)> {
    let x: Vec<Vec<f64>> = idx.iter().map(|&i| eval.unit_point(i)).collect();
    let raw: Vec<f64> = idx.iter().map(|&i| eval.history.get(i).y).collect();
    let standardizer = Standardizer::fit(&raw);
    let model = GpModel::fit(x, standardizer.apply(&raw), init, epochs, learning_rate)?;
    Ok((model, standardizer))
}

/// Indices of the `k` highest sampled values among candidates feasible
/// against every point in `selected` (ties go to the lower index). Also
/// returns how many candidates the filter removed.
pub fn constrained_top_k(
    candidates: &[Vec<f64>],
    sampled: &[f64],
    selected: &[Vec<f64>],
    spec: &DiversitySpec,
    k: usize,
) -> (Vec<usize>, usize) {
    let feasible: Vec<usize> = (0..candidates.len())
        .filter(|&c| {
            selected.is_empty()
                || spec.feasible_against(&candidates[c], selected.iter().map(Vec::as_slice))
        })
        .collect();
    let filtered = candidates.len() - feasible.len();
    (top_k_by_value(feasible, sampled, k), filtered)
}

pub(crate) fn top_k_by_value(mut idx: Vec<usize>, values: &[f64], k: usize) -> Vec<usize> {
    idx.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx
}

/// Candidate whose smallest distance to `selected` is largest (ties go to
/// the lower index).
fn least_infeasible(candidates: &[Vec<f64>], selected: &[Vec<f64>], spec: &DiversitySpec) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (c, x) in candidates.iter().enumerate() {
        let d = selected
            .iter()
            .map(|p| spec.distance(x, p))
            .fold(f64::INFINITY, f64::min);
        if best.map_or(true, |(_, b)| d > b) {
            best = Some((c, d));
        }
    }
    best.map(|(c, _)| c)
}

/// Uniform random point of the unit cube.
pub(crate) fn random_unit_point<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.gen::<f64>()).collect()
}

/// Evaluates up to `n` scrambled Sobol points; returns their history indices.
pub(crate) fn evaluate_design(
    eval: &mut Evaluator<'_>,
    n: usize,
    source: Source,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    let dim = eval.problem().space().dim();
    let sobol = ScrambledSobol::from_rng(dim, rng);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if eval.evaluate_unit(&sobol.point(i), source)?.is_none() {
            break;
        }
        out.push(eval.evals_used() - 1);
    }
    Ok(out)
}

/// The optimizer state between steps.
pub struct Robot<'p> {
    config: RobotConfig,
    eval: Evaluator<'p>,
    trs: Vec<TrustRegion>,
    model: GpModel,
    rng: ChaCha8Rng,
    stats: RobotStats,
    /// Per rank, the least infeasible candidate of a blocked, randomly
    /// centered region in the last selection.
    drift: Vec<Option<Vec<f64>>>,
    finished: bool,
}

impl<'p> Robot<'p> {
    /// Evaluates the quasi-random initial design, fits the surrogate and
    /// centers the trust regions in rank order on the best mutually feasible
    /// initial points.
    pub fn initialize(problem: &'p dyn Problem, config: RobotConfig) -> Result<Self> {
        config.validate()?;
        let dim = problem.space().dim();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut eval = Evaluator::new(problem, config.budget, config.diversity.clone(), config.m);
        evaluate_design(&mut eval, config.n_init, Source::Init, &mut rng)?;
        let (model, _) = fit_surrogate(
            &eval,
            &[],
            eval.tracker.indices(),
            GpHyperparams::default_for(dim),
            config.surrogate.init_epochs,
            &config.surrogate,
        )?;

        let set = eval.current_set();
        let mut stats = RobotStats {
            filtered_by_rank: vec![0; config.m],
            empty_selections: vec![0; config.m],
            restarts: vec![0; config.m],
            random_centers: 0,
        };
        let mut trs = Vec::with_capacity(config.m);
        for rank in 1..=config.m {
            let tr = match set.get(rank - 1) {
                Some(sol) => TrustRegion::new(
                    rank,
                    problem.space().to_unit(&sol.x),
                    sol.y,
                    &config.tr_params,
                ),
                None => {
                    warn!("no feasible initial point for trust region {rank}; using a random center");
                    stats.random_centers += 1;
                    let mut tr = TrustRegion::new(
                        rank,
                        random_unit_point(dim, &mut rng),
                        f64::NEG_INFINITY,
                        &config.tr_params,
                    );
                    tr.random_center = true;
                    tr
                }
            };
            trs.push(tr);
        }
        eval.snapshot();
        let finished = eval.exhausted();
        Ok(Self {
            config,
            eval,
            trs,
            model,
            rng,
            stats,
            drift: Vec::new(),
            finished,
        })
    }

    pub fn config(&self) -> &RobotConfig {
        &self.config
    }

    pub fn trust_regions(&self) -> &[TrustRegion] {
        &self.trs
    }

    pub fn model(&self) -> &GpModel {
        &self.model
    }

    pub fn history(&self) -> &History {
        &self.eval.history
    }

    pub fn current_set(&self) -> SolutionSet {
        self.eval.current_set()
    }

    pub fn evals_used(&self) -> usize {
        self.eval.evals_used()
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn stats(&self) -> &RobotStats {
        &self.stats
    }

    pub fn trace(&self) -> &RunTrace {
        &self.eval.trace
    }

    /// Moves every trust region whose rank is filled onto its solution.
    fn recenter(&mut self) {
        let set = self.eval.current_set();
        let space = self.eval.problem().space();
        for (tr, sol) in self.trs.iter_mut().zip(&set.ranked) {
            tr.recenter(space.to_unit(&sol.x), sol.y);
        }
    }

    fn refit(&mut self) -> Result<()> {
        let centers: Vec<Vec<f64>> = self.trs.iter().map(|t| t.center.clone()).collect();
        let (model, _) = fit_surrogate(
            &self.eval,
            &centers,
            self.eval.tracker.indices(),
            self.model.hyper().clone(),
            self.config.surrogate.step_epochs,
            &self.config.surrogate,
        )?;
        self.model = model;
        Ok(())
    }

    /// Hierarchically constrained Thompson sampling. Returns, per rank, the
    /// selected unit-cube points; a rank whose candidates are all infeasible
    /// against higher ranks' picks selects nothing.
    pub fn select_candidates(&mut self) -> Result<Vec<Vec<Vec<f64>>>> {
        let space = self.eval.problem().space();
        let lengthscales = self.model.hyper().lengthscales.clone();
        let spec = &self.config.diversity;
        let mut picked_x: Vec<Vec<f64>> = Vec::new();
        let mut out = Vec::with_capacity(self.trs.len());
        self.drift = vec![None; self.trs.len()];
        for (i, tr) in self.trs.iter().enumerate() {
            let cands = tr.generate_candidates(&lengthscales, self.config.candidates, &mut self.rng);
            let sampled = self.model.thompson_sample(&cands, &mut self.rng)?;
            let cands_x: Vec<Vec<f64>> = cands.iter().map(|c| space.from_unit(c)).collect();
            let (chosen, filtered) =
                constrained_top_k(&cands_x, &sampled, &picked_x, spec, self.config.batch_per_tr);
            self.stats.filtered_by_rank[i] += filtered;
            if chosen.is_empty() {
                debug!("rank {} had no feasible candidate", tr.rank);
                self.stats.empty_selections[i] += 1;
                if tr.random_center {
                    self.drift[i] = least_infeasible(&cands_x, &picked_x, spec).map(|c| cands[c].clone());
                }
            }
            picked_x.extend(chosen.iter().map(|&c| cands_x[c].clone()));
            out.push(chosen.into_iter().map(|c| cands[c].clone()).collect());
        }
        Ok(out)
    }

    /// One optimization step. A no-op once the budget is spent.
    pub fn step(&mut self) -> Result<()> {
        if self.finished || self.eval.exhausted() {
            self.finished = true;
            return Ok(());
        }
        self.eval.iteration += 1;
        self.refit()?;
        self.recenter();
        let selections = self.select_candidates()?;

        let mut batch_best: Vec<Option<f64>> = vec![None; self.trs.len()];
        let mut evaluated: Vec<Vec<f64>> = Vec::new();
        'ranks: for (i, picks) in selections.iter().enumerate() {
            for u in picks {
                if evaluated.iter().any(|e| e == u) {
                    continue;
                }
                match self.eval.evaluate_unit(u, Source::Rank(i + 1))? {
                    Some(y) => {
                        batch_best[i] = Some(batch_best[i].map_or(y, |b: f64| b.max(y)));
                        evaluated.push(u.clone());
                    }
                    None => break 'ranks,
                }
            }
        }
        for (tr, best) in self.trs.iter_mut().zip(&batch_best) {
            if let Some(y) = best {
                tr.record_result(&self.config.tr_params, *y);
            }
        }
        // A randomly centered region that was blocked outright moves to its
        // least infeasible candidate.
        for i in 0..self.trs.len() {
            if let Some(u) = self.drift.get_mut(i).and_then(Option::take) {
                self.trs[i].recenter(u, f64::NEG_INFINITY);
                self.trs[i].random_center = true;
            }
        }
        self.restart_collapsed()?;
        self.recenter();
        self.eval.snapshot();
        if self.eval.exhausted() {
            self.finished = true;
        }
        Ok(())
    }

    fn restart_collapsed(&mut self) -> Result<()> {
        for i in 0..self.trs.len() {
            if !self.trs[i].needs_restart(&self.config.tr_params) {
                continue;
            }
            debug!("restarting trust region {}", i + 1);
            self.stats.restarts[i] += 1;
            self.trs[i].reset(&self.config.tr_params);
            let fresh = evaluate_design(
                &mut self.eval,
                self.config.restart_points,
                Source::Restart(i + 1),
                &mut self.rng,
            )?;
            // Higher ranks that are currently filled constrain the new center.
            let set = self.eval.current_set();
            let higher: Vec<&[f64]> = set.ranked.iter().take(i).map(|s| s.x.as_slice()).collect();
            let best = fresh
                .iter()
                .copied()
                .filter(|&k| {
                    self.config
                        .diversity
                        .feasible_against(&self.eval.history.get(k).x, higher.iter().copied())
                })
                .fold(None, |acc: Option<usize>, k| match acc {
                    Some(a) if self.eval.history.get(a).y >= self.eval.history.get(k).y => Some(a),
                    _ => Some(k),
                });
            match best {
                Some(k) => {
                    let (u, y) = (self.eval.unit_point(k), self.eval.history.get(k).y);
                    self.trs[i].recenter(u, y);
                }
                None => self.redraw_center(i),
            }
        }
        Ok(())
    }

    /// Centers region `i` on a uniform random point, preferring one feasible
    /// against the filled higher ranks (at most `restart_points` draws).
    fn redraw_center(&mut self, i: usize) {
        let space = self.eval.problem().space();
        let set = self.eval.current_set();
        let higher: Vec<&[f64]> = set.ranked.iter().take(i).map(|s| s.x.as_slice()).collect();
        let mut u = random_unit_point(space.dim(), &mut self.rng);
        for _ in 1..self.config.restart_points {
            if self.config.diversity.feasible_against(&space.from_unit(&u), higher.iter().copied()) {
                break;
            }
            u = random_unit_point(space.dim(), &mut self.rng);
        }
        self.trs[i].recenter(u, f64::NEG_INFINITY);
        self.trs[i].random_center = true;
        self.stats.random_centers += 1;
    }

    pub fn finish(self) -> RunOutcome {
        RunOutcome {
            solutions: self.eval.current_set(),
            trace: self.eval.trace,
            history: self.eval.history,
        }
    }
}

/// Runs initialization and steps until the budget is spent.
pub fn run(problem: &dyn Problem, config: RobotConfig) -> Result<RunOutcome> {
    let mut robot = Robot::initialize(problem, config)?;
    while !robot.is_finished() {
        robot.step()?;
    }
    Ok(robot.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diversity::Diversity;
    use std::sync::Arc;

    /// δ given by an explicit table over 1-D points labelled 0, 1, 2, ...
    struct Table(Vec<Vec<f64>>);

    impl Diversity for Table {
        fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
            self.0[a[0] as usize][b[0] as usize]
        }
        fn name(&self) -> &str {
            "table"
        }
    }

    #[test]
    fn second_rank_falls_back_to_feasible_candidate() {
        // rank 1 candidates: points 0,1,2; rank 2 candidates: points 3,4,5
        let mut t = vec![vec![1.0; 6]; 6];
        for (a, b) in [(0, 3), (1, 3), (0, 0), (3, 3)] {
            t[a][b] = 0.0;
            t[b][a] = 0.0;
        }
        let spec = DiversitySpec::new(Arc::new(Table(t)), 0.5);
        let c1: Vec<Vec<f64>> = vec![vec![0.0], vec![1.0], vec![2.0]];
        let c2: Vec<Vec<f64>> = vec![vec![3.0], vec![4.0], vec![5.0]];

        let (r1, f1) = constrained_top_k(&c1, &[0.9, 0.1, 0.5], &[], &spec, 1);
        assert_eq!((r1.clone(), f1), (vec![0], 0));
        let selected: Vec<Vec<f64>> = r1.iter().map(|&i| c1[i].clone()).collect();
        // point 3 has the highest sample but is too close to point 0
        let (r2, f2) = constrained_top_k(&c2, &[2.0, 0.3, 1.0], &selected, &spec, 1);
        assert_eq!((r2, f2), (vec![2], 1));
    }

    #[test]
    fn empty_feasible_set_selects_nothing() {
        let spec = DiversitySpec::euclidean(10.0);
        let c = vec![vec![0.1], vec![0.2]];
        let (r, f) = constrained_top_k(&c, &[1.0, 2.0], &[vec![0.0]], &spec, 1);
        assert!(r.is_empty());
        assert_eq!(f, 2);
    }

    #[test]
    fn top_k_ties_prefer_lower_index() {
        assert_eq!(top_k_by_value(vec![0, 1, 2, 3], &[1.0, 3.0, 3.0, 2.0], 3), vec![1, 2, 3]);
    }

    #[test]
    fn config_validation() {
        let mut c = RobotConfig::new(2, 2, DiversitySpec::vacuous(), 10, 5, 0);
        assert!(c.validate().is_err());
        c.budget = 10;
        assert!(c.validate().is_ok());
        c.batch_per_tr = c.candidates + 1;
        assert!(c.validate().is_err());
    }
}

//! Reference optimizers sharing the surrogate and trust-region machinery:
//! TuRBO-1, TuRBO-M, a sequential diversity-constrained trust-region search,
//! global Thompson-sampling BO and uniform random search.
//!
//! All of them log the same trace as [`crate::robot`], where the solution-set
//! columns are the best `M` diverse solutions of the history prefix.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diversity::DiversitySpec;
use crate::error::{Error, Result};
use crate::history::{History, Source};
use crate::problems::Problem;
use crate::robot::{
    evaluate_design, fit_on, fit_surrogate, random_unit_point, top_k_by_value, RobotConfig,
    RunOutcome,
};
use crate::sobol::ScrambledSobol;
use crate::solution::{reconstruct_feasible_set, RankedSolution, SolutionSet};
use crate::surrogate::{training_subset, GpHyperparams, GpModel};
use crate::trace::Evaluator;
use crate::trust_region::TrustRegion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    Turbo1,
    TurboM,
    SequentialConstrained,
    StandardBo,
    Random,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 5] = [
        BaselineKind::Turbo1,
        BaselineKind::TurboM,
        BaselineKind::SequentialConstrained,
        BaselineKind::StandardBo,
        BaselineKind::Random,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BaselineKind::Turbo1 => "turbo1",
            BaselineKind::TurboM => "turbo_m",
            BaselineKind::SequentialConstrained => "sequential_constrained",
            BaselineKind::StandardBo => "standard_bo",
            BaselineKind::Random => "random",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown baseline `{s}`")))
    }
}

/// Best `M` mutually diverse solutions in a history; the metric used to
/// score single-solution optimizers on the `M`-solution task.
pub fn best_m_diverse(history: &History, spec: &DiversitySpec, m: usize) -> Result<SolutionSet> {
    reconstruct_feasible_set(history, spec, m)
}

/// Runs a baseline under the budget, seed and batch settings of `config`.
///
/// `solutions` is [`best_m_diverse`] of the final history, except for the
/// sequential baseline, which reports the solution of each phase.
pub fn run_baseline(kind: BaselineKind, problem: &dyn Problem, config: &RobotConfig) -> Result<RunOutcome> {
    config.validate()?;
    match kind {
        BaselineKind::Turbo1 => turbo1(problem, config),
        BaselineKind::TurboM => turbo_m(problem, config),
        BaselineKind::SequentialConstrained => sequential_constrained(problem, config).map(|s| s.outcome),
        BaselineKind::StandardBo => standard_bo(problem, config),
        BaselineKind::Random => random_search(problem, config),
    }
}

fn finish(eval: Evaluator<'_>) -> RunOutcome {
    RunOutcome {
        solutions: eval.current_set(),
        trace: eval.trace,
        history: eval.history,
    }
}

fn new_evaluator<'p>(problem: &'p dyn Problem, config: &RobotConfig) -> Evaluator<'p> {
    Evaluator::new(problem, config.budget, config.diversity.clone(), config.m)
}

/// A single trust region centered on the best point of the whole history.
pub fn turbo1(problem: &dyn Problem, config: &RobotConfig) -> Result<RunOutcome> {
    let dim = problem.space().dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut eval = new_evaluator(problem, config);
    evaluate_design(&mut eval, config.n_init, Source::Init, &mut rng)?;
    let best = eval.history.argmax().ok_or(Error::EmptyHistory)?;
    let (mut model, _) = fit_surrogate(
        &eval,
        &[],
        &[best],
        GpHyperparams::default_for(dim),
        config.surrogate.init_epochs,
        &config.surrogate,
    )?;
    let mut tr = TrustRegion::new(1, eval.unit_point(best), eval.history.get(best).y, &config.tr_params);
    eval.snapshot();

    while !eval.exhausted() {
        eval.iteration += 1;
        let best = eval.history.argmax().ok_or(Error::EmptyHistory)?;
        model = fit_surrogate(
            &eval,
            &[tr.center.clone()],
            &[best],
            model.hyper().clone(),
            config.surrogate.step_epochs,
            &config.surrogate,
        )?
        .0;
        tr.recenter(eval.unit_point(best), eval.history.get(best).y);

        let cands = tr.generate_candidates(&model.hyper().lengthscales, config.candidates, &mut rng);
        let sampled = model.thompson_sample(&cands, &mut rng)?;
        let picks = top_k_by_value((0..cands.len()).collect(), &sampled, config.batch_per_tr);
        let mut batch_best: Option<f64> = None;
        for &c in &picks {
            match eval.evaluate_unit(&cands[c], Source::Rank(1))? {
                Some(y) => batch_best = Some(batch_best.map_or(y, |b| b.max(y))),
                None => break,
            }
        }
        if let Some(y) = batch_best {
            tr.record_result(&config.tr_params, y);
        }
        if tr.needs_restart(&config.tr_params) {
            tr.reset(&config.tr_params);
            evaluate_design(&mut eval, config.restart_points, Source::Restart(1), &mut rng)?;
        }
        let best = eval.history.argmax().ok_or(Error::EmptyHistory)?;
        tr.recenter(eval.unit_point(best), eval.history.get(best).y);
        eval.snapshot();
    }
    Ok(finish(eval))
}

/// Index of the best evaluation among `idx`, earliest first on ties.
fn best_of(history: &History, idx: &[usize]) -> Option<usize> {
    idx.iter().copied().fold(None, |acc, i| match acc {
        Some(a) if outranks(history, a, i) => Some(a),
        _ => Some(i),
    })
}

fn outranks(history: &History, a: usize, b: usize) -> bool {
    let (ya, yb) = (history.get(a).y, history.get(b).y);
    ya > yb || (ya == yb && a < b)
}

/// `M` independent trust regions, each with its own data and surrogate;
/// each step's batch goes to the globally best Thompson samples across all
/// regions.
pub fn turbo_m(problem: &dyn Problem, config: &RobotConfig) -> Result<RunOutcome> {
    let dim = problem.space().dim();
    let m = config.m;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut eval = new_evaluator(problem, config);

    let mut own: Vec<Vec<usize>> = Vec::with_capacity(m);
    for i in 0..m {
        let n = config.n_init / m + usize::from(i < config.n_init % m);
        own.push(evaluate_design(&mut eval, n, Source::Init, &mut rng)?);
    }
    let fit_local = |eval: &Evaluator<'_>, idx: &[usize], init: GpHyperparams, epochs: usize| {
        let best = best_of(&eval.history, idx).map_or(vec![], |b| vec![idx.iter().position(|&i| i == b).unwrap()]);
        let local: Vec<usize> = training_subset(idx.len(), config.surrogate.max_train_points, &best)
            .into_iter()
            .map(|k| idx[k])
            .collect();
        fit_on(eval, &local, init, epochs, config.surrogate.learning_rate)
    };

    let mut models: Vec<Option<GpModel>> = Vec::with_capacity(m);
    let mut trs: Vec<TrustRegion> = Vec::with_capacity(m);
    for (i, idx) in own.iter().enumerate() {
        match best_of(&eval.history, idx) {
            Some(b) => {
                let (model, _) = fit_local(&eval, idx, GpHyperparams::default_for(dim), config.surrogate.init_epochs)?;
                models.push(Some(model));
                trs.push(TrustRegion::new(i + 1, eval.unit_point(b), eval.history.get(b).y, &config.tr_params));
            }
            None => {
                models.push(None);
                let mut tr = TrustRegion::new(i + 1, random_unit_point(dim, &mut rng), f64::NEG_INFINITY, &config.tr_params);
                tr.random_center = true;
                trs.push(tr);
            }
        }
    }
    eval.snapshot();

    let batch = config.batch_per_tr * m;
    while !eval.exhausted() {
        eval.iteration += 1;
        // (value, standardized sample, region, candidate)
        let mut pool: Vec<(f64, f64, usize, Vec<f64>)> = Vec::new();
        for i in 0..m {
            if own[i].is_empty() {
                continue;
            }
            let init = models[i].as_ref().map_or_else(|| GpHyperparams::default_for(dim), |g| g.hyper().clone());
            let epochs = if models[i].is_some() {
                config.surrogate.step_epochs
            } else {
                config.surrogate.init_epochs
            };
            let (model, scaler) = fit_local(&eval, &own[i], init, epochs)?;
            let b = best_of(&eval.history, &own[i]).expect("non-empty region data");
            trs[i].recenter(eval.unit_point(b), eval.history.get(b).y);
            let cands = trs[i].generate_candidates(&model.hyper().lengthscales, config.candidates, &mut rng);
            let sampled = model.thompson_sample(&cands, &mut rng)?;
            for (c, z) in cands.into_iter().zip(sampled) {
                pool.push((scaler.inverse(z), z, i, c));
            }
            models[i] = Some(model);
        }
        if pool.is_empty() {
            // No region has data yet: seed them from their random centers.
            for i in 0..m {
                if eval.evaluate_unit(&trs[i].center.clone(), Source::Rank(i + 1))?.is_some() {
                    own[i].push(eval.evals_used() - 1);
                }
            }
            eval.snapshot();
            continue;
        }
        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.sort_by(|&a, &b| {
            pool[b]
                .0
                .partial_cmp(&pool[a].0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(pool[b].1.partial_cmp(&pool[a].1).unwrap_or(std::cmp::Ordering::Equal))
                .then(a.cmp(&b))
        });
        let mut batch_best: Vec<Option<f64>> = vec![None; m];
        for &p in order.iter().take(batch) {
            let (_, _, i, ref u) = pool[p];
            match eval.evaluate_unit(u, Source::Rank(i + 1))? {
                Some(y) => {
                    own[i].push(eval.evals_used() - 1);
                    batch_best[i] = Some(batch_best[i].map_or(y, |b: f64| b.max(y)));
                }
                None => break,
            }
        }
        for i in 0..m {
            if let Some(y) = batch_best[i] {
                trs[i].record_result(&config.tr_params, y);
            }
            if trs[i].needs_restart(&config.tr_params) {
                trs[i].reset(&config.tr_params);
                let fresh = evaluate_design(&mut eval, config.restart_points, Source::Restart(i + 1), &mut rng)?;
                own[i].extend(fresh);
            }
            if let Some(b) = best_of(&eval.history, &own[i]) {
                trs[i].recenter(eval.unit_point(b), eval.history.get(b).y);
            }
        }
        eval.snapshot();
    }
    Ok(finish(eval))
}

/// Outcome of the sequential baseline with per-phase details.
#[derive(Debug, Clone)]
pub struct SequentialOutcome {
    pub outcome: RunOutcome,
    /// History index each phase started from, if a feasible point existed.
    pub phase_starts: Vec<Option<usize>>,
    /// History index of each phase's solution.
    pub phase_solutions: Vec<usize>,
}

/// `M` single-trust-region runs in a row. Phase `i` only accepts candidates
/// feasible against the solutions of phases `< i`, starts from the best such
/// point seen so far and shares the surrogate with the earlier phases. The
/// budget left after initialization is split evenly across phases.
pub fn sequential_constrained(problem: &dyn Problem, config: &RobotConfig) -> Result<SequentialOutcome> {
    config.validate()?;
    let dim = problem.space().dim();
    let spec = &config.diversity;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut eval = new_evaluator(problem, config);
    evaluate_design(&mut eval, config.n_init, Source::Init, &mut rng)?;
    let first = eval.history.argmax().ok_or(Error::EmptyHistory)?;
    let (mut model, _) = fit_surrogate(
        &eval,
        &[],
        &[first],
        GpHyperparams::default_for(dim),
        config.surrogate.init_epochs,
        &config.surrogate,
    )?;
    eval.snapshot();

    let mut fixed: Vec<usize> = Vec::new();
    let mut phase_starts = Vec::with_capacity(config.m);
    let per_phase = eval.remaining() / config.m;

    for phase in 1..=config.m {
        let phase_end = if phase == config.m {
            config.budget
        } else {
            eval.evals_used() + per_phase
        };
        let best_feasible = |eval: &Evaluator<'_>, fixed: &[usize]| -> Option<usize> {
            let ok: Vec<usize> = (0..eval.evals_used())
                .filter(|&k| {
                    let x = &eval.history.get(k).x;
                    fixed.iter().all(|&f| spec.pair_feasible(x, &eval.history.get(f).x))
                })
                .collect();
            best_of(&eval.history, &ok)
        };
        let start = best_feasible(&eval, &fixed);
        phase_starts.push(start);
        let mut tr = match start {
            Some(s) => TrustRegion::new(phase, eval.unit_point(s), eval.history.get(s).y, &config.tr_params),
            None => {
                let mut tr = TrustRegion::new(phase, random_unit_point(dim, &mut rng), f64::NEG_INFINITY, &config.tr_params);
                tr.random_center = true;
                tr
            }
        };
        let fixed_x: Vec<Vec<f64>> = fixed.iter().map(|&f| eval.history.get(f).x.clone()).collect();

        while eval.evals_used() < phase_end {
            eval.iteration += 1;
            let mut must: Vec<usize> = fixed.clone();
            let incumbent = best_feasible(&eval, &fixed);
            must.extend(incumbent);
            let centers = [tr.center.clone()];
            model = fit_surrogate(&eval, &centers, &must, model.hyper().clone(), config.surrogate.step_epochs, &config.surrogate)?.0;
            if let Some(b) = incumbent {
                tr.recenter(eval.unit_point(b), eval.history.get(b).y);
            }
            let cands = tr.generate_candidates(&model.hyper().lengthscales, config.candidates, &mut rng);
            let sampled = model.thompson_sample(&cands, &mut rng)?;
            let cands_x: Vec<Vec<f64>> = cands.iter().map(|c| problem.space().from_unit(c)).collect();
            let (picks, _) = crate::robot::constrained_top_k(&cands_x, &sampled, &fixed_x, spec, config.batch_per_tr);
            let mut batch_best: Option<f64> = None;
            for &c in &picks {
                if eval.evals_used() >= phase_end {
                    break;
                }
                match eval.evaluate_unit(&cands[c], Source::Phase(phase))? {
                    Some(y) => batch_best = Some(batch_best.map_or(y, |b| b.max(y))),
                    None => break,
                }
            }
            // An empty feasible set counts as a failure so that a region stuck
            // in infeasible territory shrinks and restarts.
            tr.record_result(&config.tr_params, batch_best.unwrap_or(f64::NEG_INFINITY));
            if tr.needs_restart(&config.tr_params) {
                tr.reset(&config.tr_params);
                let n = config.restart_points.min(phase_end.saturating_sub(eval.evals_used()));
                evaluate_design(&mut eval, n, Source::Phase(phase), &mut rng)?;
                if best_feasible(&eval, &fixed).is_none() {
                    tr.recenter(random_unit_point(dim, &mut rng), f64::NEG_INFINITY);
                    tr.random_center = true;
                }
            }
            eval.snapshot();
        }
        if let Some(sol) = best_feasible(&eval, &fixed) {
            fixed.push(sol);
        }
    }

    let solutions = SolutionSet {
        ranked: fixed
            .iter()
            .map(|&i| RankedSolution {
                x: eval.history.get(i).x.clone(),
                y: eval.history.get(i).y,
                index: i,
            })
            .collect(),
    };
    debug_assert!(solutions.is_feasible(spec));
    Ok(SequentialOutcome {
        outcome: RunOutcome {
            solutions,
            trace: eval.trace,
            history: eval.history,
        },
        phase_starts,
        phase_solutions: fixed,
    })
}

/// Global Thompson sampling over a fresh Sobol discretization of the whole
/// space each step; acquires `M * batch_per_tr` points per step.
pub fn standard_bo(problem: &dyn Problem, config: &RobotConfig) -> Result<RunOutcome> {
    let dim = problem.space().dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut eval = new_evaluator(problem, config);
    evaluate_design(&mut eval, config.n_init, Source::Init, &mut rng)?;
    let best = eval.history.argmax().ok_or(Error::EmptyHistory)?;
    let (mut model, _) = fit_surrogate(
        &eval,
        &[],
        &[best],
        GpHyperparams::default_for(dim),
        config.surrogate.init_epochs,
        &config.surrogate,
    )?;
    eval.snapshot();
    let batch = config.batch_per_tr * config.m;
    while !eval.exhausted() {
        eval.iteration += 1;
        let best = eval.history.argmax().ok_or(Error::EmptyHistory)?;
        model = fit_surrogate(&eval, &[], &[best], model.hyper().clone(), config.surrogate.step_epochs, &config.surrogate)?.0;
        let cands = ScrambledSobol::from_rng(dim, &mut rng).points(config.candidates);
        let sampled = model.thompson_sample(&cands, &mut rng)?;
        for c in top_k_by_value((0..cands.len()).collect(), &sampled, batch) {
            if eval.evaluate_unit(&cands[c], Source::Global)?.is_none() {
                break;
            }
        }
        eval.snapshot();
    }
    Ok(finish(eval))
}

/// Uniform random points, never repeating one. The first `n_init` are
/// tagged as initialization.
pub fn random_search(problem: &dyn Problem, config: &RobotConfig) -> Result<RunOutcome> {
    let dim = problem.space().dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut eval = new_evaluator(problem, config);
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let batch = (config.batch_per_tr * config.m).max(1);
    while !eval.exhausted() {
        let u = random_unit_point(dim, &mut rng);
        let key: Vec<u64> = problem.space().from_unit(&u).iter().map(|v| v.to_bits()).collect();
        if !seen.insert(key) {
            continue;
        }
        let source = if eval.evals_used() < config.n_init {
            Source::Init
        } else {
            Source::Random
        };
        eval.evaluate_unit(&u, source)?;
        let used = eval.evals_used();
        if used == config.n_init || (used > config.n_init && (used - config.n_init) % batch == 0) || eval.exhausted() {
            eval.snapshot();
            eval.iteration += 1;
        }
    }
    Ok(finish(eval))
}

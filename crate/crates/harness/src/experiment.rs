//! Multi-repetition experiment runs.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use robot_core::baselines::run_baseline;
use robot_core::{RunOutcome, SolutionSet};

use crate::config::{ExperimentConfig, Method};
use crate::error::{io_err, Result};
use crate::summary::{aggregate, recorded_curve, write_summary};
use crate::tracefile::{read_trace, trace_path, write_solutions, write_trace};

/// Files produced by [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub traces: Vec<PathBuf>,
    pub solutions: PathBuf,
    pub summary: PathBuf,
}

/// Runs one repetition of the configured method with the given seed.
pub fn run_once(config: &ExperimentConfig, seed: u64) -> Result<RunOutcome> {
    let problem = config.build_problem()?;
    let rc = config.robot_config(problem.space().dim(), seed)?;
    let outcome = match config.method()? {
        Method::Robot => robot_core::run(problem.as_ref(), rc)?,
        Method::Baseline(kind) => run_baseline(kind, problem.as_ref(), &rc)?,
    };
    Ok(outcome)
}

/// Runs every repetition (seeds `seed_base + rep`) and writes per-repetition
/// traces, the final solution sets and the summary curve into `out_dir`.
/// On failure, files written by this call are removed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let dir = config.out_dir.as_path();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written: Vec<PathBuf> = Vec::new();
    let result = run_into(config, dir, &mut written);
    if result.is_err() {
        for path in &written {
            let _ = fs::remove_file(path);
        }
    }
    result
}

fn run_into(config: &ExperimentConfig, dir: &Path, written: &mut Vec<PathBuf>) -> Result<ExperimentOutput> {
    let problem_name = config.build_problem()?.name().to_string();
    let spec = config.diversity_spec()?;
    let mut sets: Vec<(usize, SolutionSet)> = Vec::with_capacity(config.repetitions);
    let mut traces = Vec::with_capacity(config.repetitions);
    for rep in 0..config.repetitions {
        let seed = config.seed_base + rep as u64;
        info!("{} on {}: repetition {rep} (seed {seed})", config.method, problem_name);
        let outcome = run_once(config, seed)?;
        let path = trace_path(dir, rep);
        write_trace(&path, &problem_name, rep, &outcome.trace)?;
        written.push(path.clone());
        traces.push(path);
        sets.push((rep, outcome.solutions));
    }

    let solutions = dir.join("solutions.csv");
    write_solutions(&solutions, config.m, &sets, &spec)?;
    written.push(solutions.clone());

    let curves = traces
        .iter()
        .map(|p| read_trace(p).map(|t| recorded_curve(&t)))
        .collect::<Result<Vec<_>>>()?;
    let summary = dir.join("summary.csv");
    write_summary(&summary, &aggregate(&curves))?;
    written.push(summary.clone());

    Ok(ExperimentOutput {
        traces,
        solutions,
        summary,
    })
}

/// Loads a config file, applies CLI overrides and runs it.
pub fn run_config_file(path: &Path, seed: Option<u64>, out_dir: Option<PathBuf>) -> Result<ExperimentOutput> {
    let mut config = ExperimentConfig::from_path(path)?;
    if let Some(s) = seed {
        config.seed_base = s;
    }
    if let Some(d) = out_dir {
        config.out_dir = d;
    }
    run_experiment(&config)
}

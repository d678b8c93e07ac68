//! Aggregation of solution-set curves across repetitions.

use std::path::Path;

use robot_core::{DiversitySpec, FeasibleSetTracker};

use crate::error::{HarnessError, Result};
use crate::tracefile::{fmt_f64, read_trace, write_atomic, TraceFile};

pub const CHECKPOINT_STEP: usize = 100;

/// Every multiple of 100 up to `final_evals`, plus `final_evals` itself.
pub fn checkpoints(final_evals: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (1..=final_evals / CHECKPOINT_STEP).map(|k| k * CHECKPOINT_STEP).collect();
    if out.last() != Some(&final_evals) && final_evals > 0 {
        out.push(final_evals);
    }
    out
}

/// Set value and fill count of one run at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub evals: usize,
    pub mean: f64,
    pub fill: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub evals: usize,
    pub runs: usize,
    pub mean: f64,
    /// Sample standard deviation over √runs; zero for a single run.
    pub stderr: f64,
    pub fill_min: usize,
    pub fill_mean: f64,
}

/// Mean and standard error of `values` (sample standard deviation).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Aggregates per-run curves sampled on the same checkpoint grid. A run
/// shorter than a checkpoint contributes its last value.
pub fn aggregate(curves: &[Vec<CurvePoint>]) -> Vec<SummaryRow> {
    let final_evals = curves
        .iter()
        .filter_map(|c| c.last().map(|p| p.evals))
        .max()
        .unwrap_or(0);
    checkpoints(final_evals)
        .into_iter()
        .map(|cp| {
            let at: Vec<CurvePoint> = curves
                .iter()
                .filter_map(|c| c.iter().take_while(|p| p.evals <= cp).last().copied())
                .collect();
            let values: Vec<f64> = at.iter().map(|p| p.mean).collect();
            let (mean, stderr) = mean_stderr(&values);
            SummaryRow {
                evals: cp,
                runs: at.len(),
                mean,
                stderr,
                fill_min: at.iter().map(|p| p.fill).min().unwrap_or(0),
                fill_mean: at.iter().map(|p| p.fill as f64).sum::<f64>() / at.len().max(1) as f64,
            }
        })
        .collect()
}

/// Curve of a trace as recorded during the run (the set-mean column).
pub fn recorded_curve(trace: &TraceFile) -> Vec<CurvePoint> {
    let final_evals = trace.rows.last().map_or(0, |r| r.evals_used);
    checkpoints(final_evals)
        .into_iter()
        .filter_map(|cp| {
            trace.rows.iter().take_while(|r| r.evals_used <= cp).last().map(|r| CurvePoint {
                evals: cp,
                mean: r.set_mean,
                fill: r.set_fill,
            })
        })
        .collect()
}

/// Curve of the best `m` mutually diverse points of each history prefix.
pub fn reconstructed_curve(trace: &TraceFile, m: usize, spec: &DiversitySpec) -> Vec<CurvePoint> {
    let history = trace.history();
    let mut tracker = FeasibleSetTracker::new(spec.clone(), m);
    let mut out = Vec::new();
    for cp in checkpoints(history.len()) {
        let prefix = history.prefix(cp);
        tracker.sync(&prefix);
        let set = tracker.current(&prefix);
        out.push(CurvePoint {
            evals: cp,
            mean: set.mean_value().unwrap_or(f64::NAN),
            fill: set.len(),
        });
    }
    out
}

/// Reads traces of one problem and summarizes their best-`m`-diverse curves.
pub fn summarize(trace_paths: &[&Path], m: usize, spec: &DiversitySpec) -> Result<Vec<SummaryRow>> {
    if trace_paths.is_empty() {
        return Err(HarnessError::NoTraces);
    }
    let mut problem: Option<String> = None;
    let mut curves = Vec::with_capacity(trace_paths.len());
    for path in trace_paths {
        let trace = read_trace(path)?;
        match &problem {
            Some(p) if *p != trace.problem => {
                return Err(HarnessError::MixedProblems {
                    first: p.clone(),
                    other: trace.problem,
                })
            }
            None => problem = Some(trace.problem.clone()),
            _ => {}
        }
        curves.push(reconstructed_curve(&trace, m, spec));
    }
    Ok(aggregate(&curves))
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_atomic(path, |w| {
        write_summary_rows(w, rows)?;
        Ok(())
    })
}

pub fn write_summary_rows<W: std::io::Write>(w: &mut csv::Writer<W>, rows: &[SummaryRow]) -> Result<()> {
    w.write_record(["evals", "runs", "mean", "stderr", "fill_min", "fill_mean"])?;
    for r in rows {
        w.write_record([
            r.evals.to_string(),
            r.runs.to_string(),
            fmt_f64(r.mean),
            fmt_f64(r.stderr),
            r.fill_min.to_string(),
            fmt_f64(r.fill_mean),
        ])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_grid() {
        assert_eq!(checkpoints(10), vec![10]);
        assert_eq!(checkpoints(250), vec![100, 200, 250]);
        assert_eq!(checkpoints(300), vec![100, 200, 300]);
        assert!(checkpoints(0).is_empty());
    }

    #[test]
    fn stderr_of_three_values() {
        let (mean, se) = mean_stderr(&[1.0, 2.0, 6.0]);
        assert_eq!(mean, 3.0);
        // sample variance 7, stderr sqrt(7/3)
        assert!((se - (7.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_stderr(&[4.0]), (4.0, 0.0));
    }

    #[test]
    fn short_runs_carry_their_last_value() {
        let a = vec![
            CurvePoint { evals: 100, mean: 1.0, fill: 1 },
            CurvePoint { evals: 150, mean: 2.0, fill: 2 },
        ];
        let b = vec![
            CurvePoint { evals: 100, mean: 3.0, fill: 2 },
            CurvePoint { evals: 200, mean: 5.0, fill: 3 },
        ];
        let rows = aggregate(&[a, b]);
        assert_eq!(rows.iter().map(|r| r.evals).collect::<Vec<_>>(), vec![100, 200]);
        assert_eq!(rows[1].mean, 3.5);
        assert_eq!(rows[1].fill_min, 2);
        assert_eq!(rows[1].fill_mean, 2.5);
    }
}

//! CSV files written by experiments: per-repetition traces, final solution
//! sets and summaries.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use robot_core::{DiversitySpec, History, RunTrace, Source, SolutionSet};

use crate::error::{io_err, HarnessError, Result};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes through a temporary sibling file that is renamed into place.
pub fn write_atomic<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut csv::Writer<File>) -> Result<()>,
{
    let tmp = path.with_extension("csv.tmp");
    let result = (|| {
        let file = File::create(&tmp).map_err(io_err(&tmp))?;
        let mut w = csv::Writer::from_writer(file);
        write(&mut w)?;
        w.flush().map_err(io_err(&tmp))?;
        Ok(())
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(e);
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(path)(e)
    })
}

/// One row of a trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub repetition: usize,
    pub iteration: usize,
    pub evals_used: usize,
    pub source: Source,
    pub x: Vec<f64>,
    pub y: f64,
    pub set_mean: f64,
    pub set_fill: usize,
    pub best_y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub problem: String,
    pub rows: Vec<TraceRow>,
}

impl TraceFile {
    pub fn history(&self) -> History {
        self.rows
            .iter()
            .map(|r| robot_core::Evaluation {
                x: r.x.clone(),
                y: r.y,
                source: r.source,
            })
            .collect()
    }
}

pub fn write_trace(path: &Path, problem: &str, repetition: usize, trace: &RunTrace) -> Result<()> {
    let dim = trace.records.first().map_or(0, |r| r.x.len());
    write_atomic(path, |w| {
        let mut header: Vec<String> = ["problem", "repetition", "iteration", "evals_used", "source"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((0..dim).map(|j| format!("x{j}")));
        header.extend(["y", "set_mean", "set_fill", "best_y"].iter().map(|s| s.to_string()));
        w.write_record(&header)?;
        for r in &trace.records {
            let mut row = vec![
                problem.to_string(),
                repetition.to_string(),
                r.iteration.to_string(),
                r.evals_used.to_string(),
                r.source.to_string(),
            ];
            row.extend(r.x.iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(r.y));
            row.push(fmt_f64(r.set_mean));
            row.push(r.set_fill.to_string());
            row.push(fmt_f64(r.best_y));
            w.write_record(&row)?;
        }
        Ok(())
    })
}

pub fn read_trace(path: &Path) -> Result<TraceFile> {
    let bad = |line: usize, message: String| HarnessError::Trace {
        path: path.to_path_buf(),
        message: format!("line {line}: {message}"),
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => HarnessError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => bad(1, format!("{other:?}")),
    })?;
    let header = reader.headers()?.clone();
    let dim = header.iter().filter(|h| h.starts_with('x')).count();
    if header.len() != dim + 9 || header.get(0) != Some("problem") {
        return Err(bad(1, "not a trace file header".into()));
    }
    let mut problem: Option<String> = None;
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let line = k + 2;
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|_| bad(line, format!("column {} is not a number: '{}'", i + 1, field(i))))
        };
        let int = |i: usize| -> Result<usize> {
            field(i)
                .parse::<usize>()
                .map_err(|_| bad(line, format!("column {} is not an integer: '{}'", i + 1, field(i))))
        };
        match &problem {
            None => problem = Some(field(0).to_string()),
            Some(p) if p != field(0) => {
                return Err(HarnessError::MixedProblems {
                    first: p.clone(),
                    other: field(0).to_string(),
                })
            }
            Some(_) => {}
        }
        let source = field(4)
            .parse::<Source>()
            .map_err(|_| bad(line, format!("unknown source '{}'", field(4))))?;
        let x = (0..dim).map(|j| num(5 + j)).collect::<Result<Vec<f64>>>()?;
        rows.push(TraceRow {
            repetition: int(1)?,
            iteration: int(2)?,
            evals_used: int(3)?,
            source,
            x,
            y: num(5 + dim)?,
            set_mean: num(6 + dim)?,
            set_fill: int(7 + dim)?,
            best_y: num(8 + dim)?,
        });
    }
    let problem = problem.ok_or_else(|| bad(2, "trace has no rows".into()))?;
    Ok(TraceFile { problem, rows })
}

/// Final solution sets, one row per (repetition, rank), with the diversity
/// to every rank of the same repetition.
pub fn write_solutions(path: &Path, m: usize, sets: &[(usize, SolutionSet)], spec: &DiversitySpec) -> Result<()> {
    let dim = sets
        .iter()
        .find_map(|(_, s)| s.ranked.first().map(|r| r.x.len()))
        .unwrap_or(0);
    write_atomic(path, |w| {
        let mut header: Vec<String> = vec!["repetition".into(), "rank".into(), "history_index".into()];
        header.extend((0..dim).map(|j| format!("x{j}")));
        header.push("y".into());
        header.extend((1..=m).map(|k| format!("delta_rank{k}")));
        w.write_record(&header)?;
        for (rep, set) in sets {
            for (i, sol) in set.ranked.iter().enumerate() {
                let mut row = vec![rep.to_string(), (i + 1).to_string(), sol.index.to_string()];
                row.extend(sol.x.iter().map(|&v| fmt_f64(v)));
                row.push(fmt_f64(sol.y));
                for k in 0..m {
                    row.push(match set.ranked.get(k) {
                        Some(other) => fmt_f64(spec.distance(&sol.x, &other.x)),
                        None => String::new(),
                    });
                }
                w.write_record(&row)?;
            }
        }
        Ok(())
    })
}

/// Reads back a solutions file as `(repetition, rank, x, y, deltas)`, where a
/// missing delta is `None`.
pub type SolutionRow = (usize, usize, Vec<f64>, f64, Vec<Option<f64>>);

pub fn read_solutions(path: &Path) -> Result<Vec<SolutionRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    let dim = header.iter().filter(|h| h.starts_with('x')).count();
    let m = header.iter().filter(|h| h.starts_with("delta_rank")).count();
    let bad = |message: String| HarnessError::Trace {
        path: path.to_path_buf(),
        message,
    };
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let num = |i: usize| record[i].parse::<f64>().map_err(|_| bad(format!("bad number '{}'", &record[i])));
        let rep = record[0].parse().map_err(|_| bad("bad repetition".into()))?;
        let rank = record[1].parse().map_err(|_| bad("bad rank".into()))?;
        let x = (0..dim).map(|j| num(3 + j)).collect::<Result<Vec<_>>>()?;
        let y = num(3 + dim)?;
        let deltas = (0..m)
            .map(|k| {
                let i = 4 + dim + k;
                if record[i].is_empty() {
                    Ok(None)
                } else {
                    num(i).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        out.push((rep, rank, x, y, deltas));
    }
    Ok(out)
}

pub fn trace_path(dir: &Path, repetition: usize) -> PathBuf {
    dir.join(format!("trace_rep{repetition}.csv"))
}

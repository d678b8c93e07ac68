use std::fmt;

use crate::space::Point;

/// Which part of an optimizer requested an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    /// Shared quasi-random initialization.
    Init,
    /// Candidate acquired by the trust region of the given rank (1-based).
    Rank(usize),
    /// Fresh point drawn when the trust region of the given rank restarted.
    Restart(usize),
    /// Phase of the sequential constrained baseline (1-based).
    Phase(usize),
    /// Global acquisition (standard BO).
    Global,
    /// Uniform random sampling.
    Random,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Init => write!(f, "init"),
            Source::Rank(i) => write!(f, "tr{i}"),
            Source::Restart(i) => write!(f, "restart{i}"),
            Source::Phase(i) => write!(f, "phase{i}"),
            Source::Global => write!(f, "global"),
            Source::Random => write!(f, "random"),
        }
    }
}

impl std::str::FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let indexed = |prefix: &str| -> Option<usize> { s.strip_prefix(prefix)?.parse().ok() };
        match s {
            "init" => Ok(Source::Init),
            "global" => Ok(Source::Global),
            "random" => Ok(Source::Random),
            _ => indexed("restart")
                .map(Source::Restart)
                .or_else(|| indexed("tr").map(Source::Rank))
                .or_else(|| indexed("phase").map(Source::Phase))
                .ok_or_else(|| format!("unknown evaluation source `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub x: Point,
    pub y: f64,
    pub source: Source,
}

/// Append-only log of evaluations in evaluation order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    evals: Vec<Evaluation>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: Point, y: f64, source: Source) {
        debug_assert!(y.is_finite(), "objective values must be finite");
        self.evals.push(Evaluation { x, y, source });
    }

    pub fn len(&self) -> usize {
        self.evals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.evals.is_empty()
    }

    pub fn get(&self, i: usize) -> &Evaluation {
        &self.evals[i]
    }

    pub fn evals(&self) -> &[Evaluation] {
        &self.evals
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Evaluation> {
        self.evals.iter()
    }

    /// History restricted to the first `n` evaluations.
    pub fn prefix(&self, n: usize) -> History {
        History {
            evals: self.evals[..n.min(self.evals.len())].to_vec(),
        }
    }

    /// Index of the best evaluation; earliest wins ties.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, e) in self.evals.iter().enumerate() {
            if best.map_or(true, |b| e.y > self.evals[b].y) {
                best = Some(i);
            }
        }
        best
    }
}

impl FromIterator<Evaluation> for History {
    fn from_iter<T: IntoIterator<Item = Evaluation>>(iter: T) -> Self {
        History {
            evals: iter.into_iter().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_tags_round_trip() {
        for s in [
            Source::Init,
            Source::Rank(3),
            Source::Restart(12),
            Source::Phase(2),
            Source::Global,
            Source::Random,
        ] {
            assert_eq!(s.to_string().parse::<Source>().unwrap(), s);
        }
        assert!("tr".parse::<Source>().is_err());
    }

    #[test]
    fn argmax_prefers_earliest() {
        let mut h = History::new();
        h.push(vec![0.0], 1.0, Source::Init);
        h.push(vec![1.0], 2.0, Source::Init);
        h.push(vec![2.0], 2.0, Source::Init);
        assert_eq!(h.argmax(), Some(1));
    }
}

//! Experiment configuration files.
//!
//! A config is a flat TOML table. Unknown keys are rejected. Optional keys
//! fall back to the optimizer defaults for the problem's dimension.
//!
//! ```toml
//! problem = "bumps"          # bumps | quadratic | rover | portfolio
//! method = "robot"           # robot | turbo1 | turbo_m | sequential_constrained | standard_bo | random
//! m = 4
//! tau = 0.3
//! diversity = "euclidean"    # euclidean | owd | topk
//! n_init = 10
//! budget = 2000
//! repetitions = 3
//! seed_base = 0
//! out_dir = "results/bumps"
//! batch_per_tr = 10          # optional tuning keys below
//! learning_rate = 0.01
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use robot_core::baselines::BaselineKind;
use robot_core::problems::{
    generate_gbm_prices, load_prices, PortfolioProblem, Problem, Quadratic, RoverOwd, RoverProblem,
    SyntheticBumps, TopKDisjoint,
};
use robot_core::{DiversitySpec, Euclidean, RobotConfig};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: String,
    pub method: String,
    pub m: usize,
    pub tau: f64,
    pub diversity: String,
    pub n_init: usize,
    pub budget: usize,
    #[serde(default = "one")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_per_tr: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart_points: Option<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_train_points: Option<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_init: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success_tolerance: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_tolerance: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_rel: Option<f64>,

    /// Quadratic: input dimension (optimum at 0.7 in every coordinate).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Portfolio: price CSV. Without it a synthetic price set is generated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assets: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub days: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_seed: Option<u64>,
}

fn one() -> usize {
    1
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Robot,
    Baseline(BaselineKind),
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "robot" {
            return Ok(Method::Robot);
        }
        s.parse::<BaselineKind>()
            .map(Method::Baseline)
            .map_err(|_| HarnessError::UnknownName {
                kind: "method",
                name: s.to_string(),
            })
    }
}

/// Diversity measure by its CLI/config name.
pub fn diversity_by_name(name: &str, tau: f64) -> Result<DiversitySpec> {
    let spec = match name {
        "euclidean" => DiversitySpec::new(Arc::new(Euclidean), tau),
        "owd" => DiversitySpec::new(Arc::new(RoverOwd::default()), tau),
        "topk" => DiversitySpec::new(Arc::new(TopKDisjoint), tau),
        _ => {
            return Err(HarnessError::UnknownName {
                kind: "diversity",
                name: name.to_string(),
            })
        }
    };
    Ok(spec)
}

impl ExperimentConfig {
    /// Minimal config; every optional key unset.
    pub fn new(problem: &str, method: &str, m: usize, tau: f64, diversity: &str, n_init: usize, budget: usize) -> Self {
        Self {
            problem: problem.into(),
            method: method.into(),
            m,
            tau,
            diversity: diversity.into(),
            n_init,
            budget,
            repetitions: 1,
            seed_base: 0,
            out_dir: default_out_dir(),
            candidates: None,
            batch_per_tr: None,
            restart_points: None,
            init_epochs: None,
            step_epochs: None,
            learning_rate: None,
            max_train_points: None,
            length_init: None,
            length_min: None,
            length_max: None,
            success_tolerance: None,
            failure_tolerance: None,
            gamma_rel: None,
            dim: None,
            prices_path: None,
            assets: None,
            days: None,
            price_seed: None,
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses and validates; `origin` names the source in error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config {
            path: origin.to_string(),
            message: e.to_string().trim_end().to_string(),
        })?;
        cfg.validate().map_err(|e| HarnessError::Config {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config fields are all TOML-representable")
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(HarnessError::Config {
                path: "repetitions".into(),
                message: "must be at least 1".into(),
            });
        }
        self.method()?;
        diversity_by_name(&self.diversity, self.tau)?;
        if !matches!(self.problem.as_str(), "bumps" | "quadratic" | "rover" | "portfolio") {
            return Err(HarnessError::UnknownName {
                kind: "problem",
                name: self.problem.clone(),
            });
        }
        let dim = self.problem_dim()?;
        self.robot_config(dim, self.seed_base)?.validate()?;
        Ok(())
    }

    pub fn method(&self) -> Result<Method> {
        self.method.parse()
    }

    pub fn diversity_spec(&self) -> Result<DiversitySpec> {
        diversity_by_name(&self.diversity, self.tau)
    }

    fn problem_dim(&self) -> Result<usize> {
        Ok(match self.problem.as_str() {
            "bumps" => 2,
            "quadratic" => self.dim.unwrap_or(2),
            "rover" => 60,
            "portfolio" => match &self.prices_path {
                Some(_) => self.build_problem()?.space().dim(),
                None => self.assets.unwrap_or(20),
            },
            other => {
                return Err(HarnessError::UnknownName {
                    kind: "problem",
                    name: other.to_string(),
                })
            }
        })
    }

    pub fn build_problem(&self) -> Result<Box<dyn Problem>> {
        let problem: Box<dyn Problem> = match self.problem.as_str() {
            "bumps" => Box::new(SyntheticBumps::four_bumps()),
            "quadratic" => Box::new(Quadratic::new(vec![0.7; self.dim.unwrap_or(2)])),
            "rover" => Box::new(RoverProblem::default()),
            "portfolio" => Box::new(self.portfolio()?),
            other => {
                return Err(HarnessError::UnknownName {
                    kind: "problem",
                    name: other.to_string(),
                })
            }
        };
        Ok(problem)
    }

    fn portfolio(&self) -> Result<PortfolioProblem> {
        match &self.prices_path {
            Some(path) => Ok(load_prices(path)?),
            None => {
                let (names, prices) = generate_gbm_prices(
                    self.days.unwrap_or(252),
                    self.assets.unwrap_or(20),
                    self.price_seed.unwrap_or(0),
                );
                Ok(PortfolioProblem::new(names, prices)?)
            }
        }
    }

    /// Optimizer settings for a problem of dimension `dim` and one seed.
    pub fn robot_config(&self, dim: usize, seed: u64) -> Result<RobotConfig> {
        let mut c = RobotConfig::new(dim, self.m, self.diversity_spec()?, self.n_init, self.budget, seed);
        if let Some(b) = self.batch_per_tr {
            c = c.with_batch_per_tr(dim, b);
        }
        if let Some(v) = self.candidates {
            c.candidates = v;
        }
        if let Some(v) = self.restart_points {
            c.restart_points = v;
        }
        let s = &mut c.surrogate;
        s.init_epochs = self.init_epochs.unwrap_or(s.init_epochs);
        s.step_epochs = self.step_epochs.unwrap_or(s.step_epochs);
        s.learning_rate = self.learning_rate.unwrap_or(s.learning_rate);
        s.max_train_points = self.max_train_points.unwrap_or(s.max_train_points);
        let t = &mut c.tr_params;
        t.length_init = self.length_init.unwrap_or(t.length_init);
        t.length_min = self.length_min.unwrap_or(t.length_min);
        t.length_max = self.length_max.unwrap_or(t.length_max);
        t.success_tolerance = self.success_tolerance.unwrap_or(t.success_tolerance);
        t.failure_tolerance = self.failure_tolerance.unwrap_or(t.failure_tolerance);
        t.gamma_rel = self.gamma_rel.unwrap_or(t.gamma_rel);
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
problem = "bumps"
method = "robot"
m = 4
tau = 0.3
diversity = "euclidean"
n_init = 10
budget = 40
"#;

    #[test]
    fn defaults_fill_optional_keys() {
        let cfg = ExperimentConfig::parse(MINIMAL, "inline").unwrap();
        assert_eq!(cfg.repetitions, 1);
        assert_eq!(cfg.seed_base, 0);
        assert_eq!(cfg.out_dir, PathBuf::from("results"));
        let rc = cfg.robot_config(2, 7).unwrap();
        assert_eq!(rc.seed, 7);
        assert_eq!(rc.candidates, 200);
    }

    #[test]
    fn unknown_key_is_rejected_with_its_name_and_line() {
        let text = format!("{MINIMAL}bogus_key = 3\n");
        let err = ExperimentConfig::parse(&text, "cfg.toml").unwrap_err().to_string();
        assert!(err.contains("cfg.toml"), "{err}");
        assert!(err.contains("bogus_key"), "{err}");
        assert!(err.contains("line 9"), "{err}");
    }

    #[test]
    fn wrong_type_names_the_field() {
        let text = MINIMAL.replace("m = 4", "m = \"four\"");
        let err = ExperimentConfig::parse(&text, "cfg.toml").unwrap_err().to_string();
        assert!(err.contains("line 4"), "{err}");
    }

    #[test]
    fn unresolvable_names_fail_validation() {
        for (from, to) in [
            ("method = \"robot\"", "method = \"simplex\""),
            ("problem = \"bumps\"", "problem = \"branin\""),
            ("diversity = \"euclidean\"", "diversity = \"cosine\""),
        ] {
            let err = ExperimentConfig::parse(&MINIMAL.replace(from, to), "cfg").unwrap_err();
            assert!(err.to_string().contains("unknown"), "{err}");
        }
        let err = ExperimentConfig::parse(&format!("{MINIMAL}repetitions = 0\n"), "cfg").unwrap_err();
        assert!(err.to_string().contains("repetitions"), "{err}");
    }

    #[test]
    fn round_trip_is_lossless() {
        let mut cfg = ExperimentConfig::new("rover", "turbo_m", 3, 0.15, "owd", 200, 10_000);
        cfg.repetitions = 5;
        cfg.seed_base = 123;
        cfg.learning_rate = Some(0.1 + 0.2);
        cfg.gamma_rel = Some(1e-3);
        cfg.batch_per_tr = Some(10);
        cfg.out_dir = PathBuf::from("out/rover run");
        let back = ExperimentConfig::parse(&cfg.to_toml_string(), "roundtrip").unwrap();
        assert_eq!(back, cfg);

        let mut vacuous = ExperimentConfig::new("quadratic", "robot", 1, f64::NEG_INFINITY, "euclidean", 5, 20);
        vacuous.dim = Some(3);
        assert_eq!(ExperimentConfig::parse(&vacuous.to_toml_string(), "v").unwrap(), vacuous);
    }

    #[test]
    fn overrides_reach_the_optimizer() {
        let text = format!(
            "{MINIMAL}batch_per_tr = 4\ncandidates = 50\nlearning_rate = 0.05\nmax_train_points = 99\nfailure_tolerance = 2\nrestart_points = 7\n"
        );
        let rc = ExperimentConfig::parse(&text, "cfg").unwrap().robot_config(2, 0).unwrap();
        assert_eq!(rc.batch_per_tr, 4);
        assert_eq!(rc.candidates, 50);
        assert_eq!(rc.surrogate.learning_rate, 0.05);
        assert_eq!(rc.surrogate.max_train_points, 99);
        assert_eq!(rc.tr_params.failure_tolerance, 2);
        assert_eq!(rc.restart_points, 7);
    }
}

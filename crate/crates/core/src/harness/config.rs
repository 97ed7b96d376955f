use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::problems::{
    generate_logistic, generate_polytope, parse_libsvm, LogisticProblem, PolytopeProblem,
    QuadraticProblem, RosenbrockProblem, TestProblem,
};
use crate::schedules::Schedule;
use crate::solvers::{GradientStep, LineSearchConfig, Method, StopCriteria, UnConfig};

fn default_mu() -> f64 {
    1e-3
}

fn default_power() -> f64 {
    2.0
}

fn default_true() -> bool {
    true
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Which objective to minimize. Logistic regression reads a LIBSVM file when
/// `data` is set and otherwise draws a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    Logistic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        data: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        synthetic: Option<SyntheticSpec>,
        #[serde(default = "default_mu")]
        mu: f64,
    },
    Polytope {
        n: usize,
        d: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_power")]
        power: f64,
    },
    Rosenbrock {
        dim: usize,
        #[serde(default)]
        init_seed: u64,
    },
    Quadratic {
        dim: usize,
        condition: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl ProblemSpec {
    /// Identifies the problem instance; runs with equal keys share `f*`.
    pub fn key(&self) -> String {
        serde_json::to_string(self).expect("problem specs serialize")
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ProblemSpec::Logistic { .. } => "logistic",
            ProblemSpec::Polytope { .. } => "polytope",
            ProblemSpec::Rosenbrock { .. } => "rosenbrock",
            ProblemSpec::Quadratic { .. } => "quadratic",
        }
    }

    /// Constructs the problem, reading data files as needed.
    pub fn build(&self) -> Result<Arc<dyn TestProblem>, HarnessError> {
        Ok(match self {
            ProblemSpec::Logistic {
                data,
                synthetic,
                mu,
            } => {
                let dataset = match (data, synthetic) {
                    (Some(path), None) => load_libsvm(path)?,
                    (None, Some(s)) => {
                        check_sizes(s.n, s.d)?;
                        generate_logistic(s.n, s.d, s.seed)
                    }
                    (None, None) => generate_logistic(200, 20, 0),
                    (Some(_), Some(_)) => {
                        return Err(HarnessError::InvalidConfig(
                            "logistic problem takes either a data file or a synthetic spec".into(),
                        ))
                    }
                };
                Arc::new(LogisticProblem::new(dataset, *mu)?)
            }
            ProblemSpec::Polytope { n, d, seed, power } => {
                check_sizes(*n, *d)?;
                let (dataset, _) = generate_polytope(*n, *d, *seed);
                Arc::new(PolytopeProblem::new(dataset, *power)?)
            }
            ProblemSpec::Rosenbrock { dim, init_seed } => {
                Arc::new(RosenbrockProblem::new(*dim, *init_seed)?)
            }
            ProblemSpec::Quadratic {
                dim,
                condition,
                seed,
            } => Arc::new(QuadraticProblem::random(*dim, *condition, *seed)?),
        })
    }
}

fn check_sizes(n: usize, d: usize) -> Result<(), HarnessError> {
    if n == 0 || d == 0 {
        return Err(HarnessError::InvalidConfig(format!(
            "dataset sizes must be positive, got n = {n}, d = {d}"
        )));
    }
    Ok(())
}

fn load_libsvm(path: &Path) -> Result<crate::problems::Dataset, HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::MissingData {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(parse_libsvm(BufReader::new(file))?)
}

/// Solver and constants, flattened for configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "snake_case")]
pub enum SolverSpec {
    Rn { q: f64, m_q: f64 },
    Aicn { sigma: f64 },
    DampedNewtonB { l_sc: f64 },
    FixedNewton { alpha: f64 },
    UnboundedNewton { sigma: f64, beta: f64 },
    Un(UnConfig),
    Grls(LineSearchConfig),
    Gn(LineSearchConfig),
    ArmijoNewton { c1: f64, shrink: f64 },
    Grn { sigma: f64, beta: f64 },
    Gradient(GradientStep),
}

impl From<SolverSpec> for Method {
    fn from(s: SolverSpec) -> Method {
        let scheduled = |schedule| Method::Scheduled { schedule };
        match s {
            SolverSpec::Rn { q, m_q } => scheduled(Schedule::RootNewton { q, m_q }),
            SolverSpec::Aicn { sigma } => scheduled(Schedule::Aicn { sigma }),
            SolverSpec::DampedNewtonB { l_sc } => scheduled(Schedule::DampedNewtonB { l_sc }),
            SolverSpec::FixedNewton { alpha } => scheduled(Schedule::Fixed { alpha }),
            SolverSpec::UnboundedNewton { sigma, beta } => {
                scheduled(Schedule::Unbounded { sigma, beta })
            }
            SolverSpec::Un(cfg) => Method::Universal(cfg),
            SolverSpec::Grls(cfg) => Method::Grls(cfg),
            SolverSpec::Gn(cfg) => Method::GreedyNewton(cfg),
            SolverSpec::ArmijoNewton { c1, shrink } => Method::ArmijoNewton { c1, shrink },
            SolverSpec::Grn { sigma, beta } => Method::Grn { sigma, beta },
            SolverSpec::Gradient(rule) => Method::Gradient { rule },
        }
    }
}

/// One run: a problem, a solver, when to stop and where to write.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub label: String,
    pub problem: ProblemSpec,
    pub solver: SolverSpec,
    #[serde(default)]
    pub stop: StopCriteria,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Write measured times to the trace; when false they are written as 0
    /// so repeated runs produce identical files.
    #[serde(default = "default_true")]
    pub record_timing: bool,
    /// Iterations `[first, last]` used for the rate fit; the whole run when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_window: Option<(usize, usize)>,
}

/// Contents of a configuration file: a batch of runs, or a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub runs: Vec<ExperimentConfig>,
    /// Add one high-accuracy Greedy Newton run per distinct problem to
    /// sharpen the `f*` estimate.
    #[serde(default = "default_true")]
    pub reference_runs: bool,
}

impl BatchConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum File {
            Batch(BatchConfig),
            Single(Box<ExperimentConfig>),
        }
        Ok(match serde_json::from_str::<File>(text)? {
            File::Batch(b) => b,
            File::Single(run) => BatchConfig {
                runs: vec![*run],
                reference_runs: true,
            },
        })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_run() {
        let text = r#"{
            "label": "rn",
            "problem": {"kind": "logistic", "synthetic": {"n": 50, "d": 5}},
            "solver": {"solver": "rn", "q": 3, "m_q": 1.0},
            "stop": {"local_grad_tol": 1e-9}
        }"#;
        let b = BatchConfig::from_json(text).unwrap();
        assert_eq!(b.runs.len(), 1);
        assert!(b.reference_runs);
        let run = &b.runs[0];
        assert_eq!(run.stop.local_grad_tol, 1e-9);
        assert_eq!(run.stop.max_iters, 500);
        assert_eq!(run.output_dir, PathBuf::from("results"));
        assert!(matches!(
            Method::from(run.solver),
            Method::Scheduled { schedule: Schedule::RootNewton { q, m_q } } if q == 3.0 && m_q == 1.0
        ));
        let p = run.problem.build().unwrap();
        assert_eq!(p.dim(), 5);
    }

    #[test]
    fn parses_batch_with_defaults() {
        let text = r#"{"runs": [
            {"label": "a", "problem": {"kind": "rosenbrock", "dim": 4}, "solver": {"solver": "un"}},
            {"label": "b", "problem": {"kind": "polytope", "n": 8, "d": 3, "power": 3},
             "solver": {"solver": "grls", "alpha_max": 1.0}}
        ], "reference_runs": false}"#;
        let b = BatchConfig::from_json(text).unwrap();
        assert!(!b.reference_runs);
        assert_eq!(b.runs[0].solver, SolverSpec::Un(UnConfig::default()));
        assert_eq!(
            b.runs[1].solver,
            SolverSpec::Grls(LineSearchConfig { alpha_max: 1.0, evals: 64 })
        );
    }

    #[test]
    fn missing_data_file() {
        let spec = ProblemSpec::Logistic {
            data: Some("/nonexistent/a1a.libsvm".into()),
            synthetic: None,
            mu: 1e-3,
        };
        assert!(matches!(spec.build(), Err(HarnessError::MissingData { .. })));
    }

    #[test]
    fn equal_specs_share_keys() {
        let a = ProblemSpec::Quadratic { dim: 3, condition: 10.0, seed: 1 };
        let b = ProblemSpec::Quadratic { dim: 3, condition: 10.0, seed: 2 };
        assert_eq!(a.key(), a.clone().key());
        assert_ne!(a.key(), b.key());
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use damped_newton::harness::{
    run_batch, worker_threads, BatchConfig, ExperimentConfig, ProblemSpec, SolverSpec,
    SyntheticSpec,
};
use damped_newton::solvers::{GradientStep, LineSearchConfig, Method, StopCriteria, UnConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProblemKind {
    Logistic,
    Polytope,
    Rosenbrock,
    Quadratic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverKind {
    Rn,
    Aicn,
    DampedNewtonB,
    Fixed,
    Unbounded,
    Un,
    Grls,
    Gn,
    Armijo,
    Grn,
    Gd,
}

/// Runs Newton-type solvers on benchmark problems and writes per-iteration
/// traces. Exits with 0 only if every run reached a tolerance.
#[derive(Debug, Parser)]
#[command(name = "bench", version)]
struct Cli {
    /// JSON file with one run or {"runs": [...]}; the flags below override
    /// stopping rules and output directory of every run in it.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long, value_enum, required_unless_present = "config")]
    problem: Option<ProblemKind>,
    /// LIBSVM file for logistic regression; synthetic data when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-3)]
    mu: f64,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hinge power of the polytope problem.
    #[arg(long, default_value_t = 2.0)]
    power: f64,
    /// Condition number of the random quadratic.
    #[arg(long, default_value_t = 10.0)]
    condition: f64,

    #[arg(long, value_enum, required_unless_present = "config")]
    solver: Option<SolverKind>,
    #[arg(long, default_value_t = 3.0)]
    q: f64,
    #[arg(long = "M", default_value_t = 1.0)]
    m_q: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 2.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    l_sc: f64,
    /// Fixed stepsize, or 1/L for the gradient method's fixed rule.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 8.0)]
    alpha_max: f64,
    #[arg(long, default_value_t = 1e-4)]
    c1: f64,
    #[arg(long, default_value_t = 0.5)]
    shrink: f64,

    /// Local gradient norm tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    max_seconds: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    label: Option<String>,
    /// Skip the reference runs used to estimate f*.
    #[arg(long)]
    no_reference: bool,
    /// Write zero elapsed times so repeated runs give identical traces.
    #[arg(long)]
    no_timing: bool,
}

impl Cli {
    fn problem_spec(&self, kind: ProblemKind) -> ProblemSpec {
        match kind {
            ProblemKind::Logistic => ProblemSpec::Logistic {
                data: self.data.clone(),
                synthetic: self.data.is_none().then_some(SyntheticSpec {
                    n: self.n,
                    d: self.d,
                    seed: self.seed,
                }),
                mu: self.mu,
            },
            ProblemKind::Polytope => ProblemSpec::Polytope {
                n: self.n,
                d: self.d,
                seed: self.seed,
                power: self.power,
            },
            ProblemKind::Rosenbrock => ProblemSpec::Rosenbrock {
                dim: self.d,
                init_seed: self.seed,
            },
            ProblemKind::Quadratic => ProblemSpec::Quadratic {
                dim: self.d,
                condition: self.condition,
                seed: self.seed,
            },
        }
    }

    fn solver_spec(&self, kind: SolverKind) -> SolverSpec {
        let ls = LineSearchConfig {
            alpha_max: self.alpha_max,
            ..LineSearchConfig::default()
        };
        match kind {
            SolverKind::Rn => SolverSpec::Rn {
                q: self.q,
                m_q: self.m_q,
            },
            SolverKind::Aicn => SolverSpec::Aicn { sigma: self.sigma },
            SolverKind::DampedNewtonB => SolverSpec::DampedNewtonB { l_sc: self.l_sc },
            SolverKind::Fixed => SolverSpec::FixedNewton {
                alpha: self.alpha.unwrap_or(1.0),
            },
            SolverKind::Unbounded => SolverSpec::UnboundedNewton {
                sigma: self.sigma,
                beta: self.beta,
            },
            SolverKind::Un => SolverSpec::Un(UnConfig {
                sigma0: self.sigma,
                beta: self.beta,
                gamma: self.gamma,
                ..UnConfig::default()
            }),
            SolverKind::Grls => SolverSpec::Grls(ls),
            SolverKind::Gn => SolverSpec::Gn(ls),
            SolverKind::Armijo => SolverSpec::ArmijoNewton {
                c1: self.c1,
                shrink: self.shrink,
            },
            SolverKind::Grn => SolverSpec::Grn {
                sigma: self.sigma,
                beta: self.beta,
            },
            SolverKind::Gd => SolverSpec::Gradient(match self.alpha {
                Some(a) => GradientStep::Fixed { lipschitz: 1.0 / a },
                None => GradientStep::Armijo {
                    initial: 1.0,
                    c1: self.c1,
                    shrink: self.shrink,
                },
            }),
        }
    }

    fn apply_overrides(&self, run: &mut ExperimentConfig) {
        if let Some(t) = self.tol {
            run.stop.local_grad_tol = t;
        }
        if let Some(t) = self.grad_tol {
            run.stop.grad_tol = t;
        }
        if let Some(n) = self.max_iters {
            run.stop.max_iters = n;
        }
        if self.max_seconds.is_some() {
            run.stop.max_seconds = self.max_seconds;
        }
        if let Some(out) = &self.out {
            run.output_dir = out.clone();
        }
        if self.no_timing {
            run.record_timing = false;
        }
    }

    fn batch(&self) -> Result<BatchConfig, String> {
        let mut batch = match &self.config {
            Some(path) => BatchConfig::load(path).map_err(|e| e.to_string())?,
            None => {
                let problem = self.problem_spec(self.problem.expect("required by clap"));
                let solver = self.solver_spec(self.solver.expect("required by clap"));
                let label = self.label.clone().unwrap_or_else(|| {
                    format!("{}-{}", problem.kind(), Method::from(solver).name())
                });
                BatchConfig {
                    runs: vec![ExperimentConfig {
                        label,
                        problem,
                        solver,
                        stop: StopCriteria::default(),
                        output_dir: PathBuf::from("results"),
                        record_timing: true,
                        rate_window: None,
                    }],
                    reference_runs: true,
                }
            }
        };
        for run in &mut batch.runs {
            self.apply_overrides(run);
        }
        if self.no_reference {
            batch.reference_runs = false;
        }
        Ok(batch)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let batch = match cli.batch() {
        Ok(b) => b,
        Err(e) => {
            log::error!("{e}");
            return ExitCode::from(2);
        }
    };
    let outcomes = match run_batch(&batch, worker_threads()) {
        Ok(o) => o,
        Err(e) => {
            log::error!("{e}");
            return ExitCode::from(2);
        }
    };
    let mut all_converged = true;
    for o in outcomes.iter().filter(|o| !o.summary.reference) {
        let s = &o.summary;
        println!(
            "{:<28} {:<16} steps {:>5}  f {:>24}  f-f* {:>12}  {}",
            s.label,
            format!("{:?}", s.status),
            s.iterations,
            s.final_f.map_or("-".into(), |f| format!("{f:.16e}")),
            s.suboptimality.map_or("-".into(), |g| format!("{g:.3e}")),
            s.error.as_deref().unwrap_or("")
        );
        all_converged &= s.status.converged();
    }
    if all_converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

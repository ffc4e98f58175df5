mod document;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use leximin::apps::{build_blackbox, load_instance, AppError, Instance, SolverChoice};
use leximin::blackbox::{SimulatedRandomized, UtilitarianSolver};
use leximin::lp::EllipsoidParams;
use leximin::oracle::{brute_force_leximin, enumerate_states, verify_against, OracleError};
use leximin::reduction::{leximin_main_loop, ReductionError, ReductionParams};
use serde_json::Value;

use document::{lottery_from_json, oracle_document, solve_document, verdict_document};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Run the pipeline and print the lottery.
    Solve,
    /// Check a candidate result document against the brute-force optimum.
    Verify,
    /// Print the brute-force leximin optimum.
    Oracle,
    /// Run the pipeline and the oracle and print both with a verdict.
    Compare,
}

/// Leximin-optimal lotteries from a utilitarian welfare solver.
#[derive(Debug, Parser)]
#[command(name = "leximin", version)]
struct Args {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "solve")]
    mode: Mode,
    #[arg(long, default_value = "exhaustive")]
    solver: SolverChoice,
    /// Accuracy of the knapsack FPTAS (its approximation factor is 1 - eps).
    #[arg(long, default_value_t = 0.1)]
    fptas_eps: f64,
    /// Wrap the solver in a simulated randomized solver with this factor.
    #[arg(long)]
    alpha_sim: Option<f64>,
    /// Success probability of the simulated randomized wrapper.
    #[arg(long)]
    success_prob: Option<f64>,
    /// Binary-search accuracy of each iteration.
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    /// Required with a randomized solver.
    #[arg(long)]
    seed: Option<u64>,
    /// Result document to check in verify mode.
    #[arg(long)]
    candidate: Option<PathBuf>,
    /// Approximation factor to verify against; defaults to the solver's.
    #[arg(long)]
    alpha: Option<f64>,
    /// Additive slack when verifying; defaults to agents * eps.
    #[arg(long)]
    verify_eps: Option<f64>,
    /// Write the document here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scale of the initial ellipsoid around the dual bounding box.
    #[arg(long)]
    radius_scale: Option<f64>,
    /// Factor c in the iteration cap c * d^2 * ln(R / tol).
    #[arg(long)]
    iteration_factor: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    value_tol: Option<f64>,
    /// Violation a separation oracle tolerates.
    #[arg(long)]
    tau_lp: Option<f64>,
}

enum Failure {
    Parse(String),
    Invariant(String),
    Solver(String),
    /// The document is still written; only the exit status differs.
    Verification(Value),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Parse(_) => 2,
            Self::Invariant(_) => 3,
            Self::Solver(_) => 4,
            Self::Verification(_) => 5,
        }
    }
}

impl From<AppError> for Failure {
    fn from(e: AppError) -> Self {
        match e {
            AppError::Json(_) | AppError::Schema { .. } => Self::Parse(e.to_string()),
            AppError::BlackBox(_) => Self::Solver(e.to_string()),
            _ => Self::Invariant(e.to_string()),
        }
    }
}

impl From<ReductionError> for Failure {
    fn from(e: ReductionError) -> Self {
        match e {
            ReductionError::Invariant(_) | ReductionError::Model(_) => Self::Invariant(e.to_string()),
            _ => Self::Solver(e.to_string()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::App(e) => e.into(),
            OracleError::Reduction(e) => e.into(),
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(doc) => match emit(&args, &doc) {
            Ok(()) => ExitCode::SUCCESS,
            Err(f) => report(f),
        },
        Err(Failure::Verification(doc)) => {
            if let Err(f) = emit(&args, &doc) {
                return report(f);
            }
            eprintln!("leximin: verification failed");
            ExitCode::from(5)
        }
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> ExitCode {
    let message = match &f {
        Failure::Parse(m) => format!("parse error: {m}"),
        Failure::Invariant(m) => format!("invariant violated: {m}"),
        Failure::Solver(m) => format!("solver failure: {m}"),
        Failure::Verification(_) => "verification failed".to_string(),
    };
    eprintln!("leximin: {message}");
    ExitCode::from(f.code())
}

fn emit(args: &Args, doc: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(doc).expect("documents are plain JSON");
    text.push('\n');
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Solver(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn run(args: &Args) -> Result<Value, Failure> {
    if args.eps.is_nan() || args.eps <= 0.0 {
        return Err(Failure::Parse(format!("--eps must be positive, got {}", args.eps)));
    }
    let instance = load_instance(&read(&args.instance)?)?;
    match args.mode {
        Mode::Solve => {
            let (solver, params) = configure(args, &instance)?;
            let report = leximin_main_loop(solver.as_ref(), solver.spec().alpha, args.eps, &params)?;
            log_iterations(&report);
            Ok(solve_document(&instance, &solver.spec().kind, &report)?)
        }
        Mode::Oracle => {
            let universe = enumerate_states(&instance)?;
            let (lottery, _) = brute_force_leximin(&universe)?;
            Ok(oracle_document(&instance, &lottery)?)
        }
        Mode::Verify => {
            let path = args
                .candidate
                .as_ref()
                .ok_or_else(|| Failure::Parse("verify mode needs --candidate".to_string()))?;
            let doc: Value = serde_json::from_str(&read(path)?).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
            let candidate = lottery_from_json(&instance, &doc)?;
            let solver = build_blackbox(&instance, solver_choice(args))?;
            let alpha = args.alpha.unwrap_or(solver.spec().alpha);
            let eps = args.verify_eps.unwrap_or(instance.agents() as f64 * args.eps);
            let universe = enumerate_states(&instance)?;
            let (_, optimum) = brute_force_leximin(&universe)?;
            let verdict = verify_against(&universe, &optimum, &candidate, alpha, eps);
            let doc = verdict_document("verify", &verdict, None);
            if verdict.pass {
                Ok(doc)
            } else {
                Err(Failure::Verification(doc))
            }
        }
        Mode::Compare => {
            let (solver, params) = configure(args, &instance)?;
            let alpha = args.alpha.unwrap_or(solver.spec().alpha);
            let report = leximin_main_loop(solver.as_ref(), solver.spec().alpha, args.eps, &params)?;
            log_iterations(&report);
            let universe = enumerate_states(&instance)?;
            let (_, optimum) = brute_force_leximin(&universe)?;
            let eps = args.verify_eps.unwrap_or(instance.agents() as f64 * args.eps);
            let verdict = verify_against(&universe, &optimum, &report.distribution, alpha, eps);
            let solved = solve_document(&instance, &solver.spec().kind, &report)?;
            let doc = verdict_document("compare", &verdict, Some(solved));
            if verdict.pass {
                Ok(doc)
            } else {
                Err(Failure::Verification(doc))
            }
        }
    }
}

fn solver_choice(args: &Args) -> SolverChoice {
    match args.solver {
        SolverChoice::KnapsackFptas { .. } => SolverChoice::KnapsackFptas { eps: args.fptas_eps },
        other => other,
    }
}

fn configure(args: &Args, instance: &Instance) -> Result<(Box<dyn UtilitarianSolver>, ReductionParams), Failure> {
    let base = build_blackbox(instance, solver_choice(args))?;
    let randomized = args.alpha_sim.is_some() || args.success_prob.is_some();
    let solver: Box<dyn UtilitarianSolver> = if randomized {
        let p = args.success_prob.unwrap_or(1.0);
        Box::new(SimulatedRandomized::new(base, args.alpha_sim, p).map_err(|e| Failure::Parse(e.to_string()))?)
    } else {
        base
    };
    if solver.spec().is_randomized() && args.seed.is_none() {
        return Err(Failure::Parse("a randomized solver needs --seed".to_string()));
    }
    let defaults = EllipsoidParams::default();
    let ellipsoid = EllipsoidParams {
        radius_scale: args.radius_scale.unwrap_or(defaults.radius_scale),
        iteration_factor: args.iteration_factor.unwrap_or(defaults.iteration_factor),
        max_iterations: args.max_iterations.or(defaults.max_iterations),
        value_tol: args.value_tol.unwrap_or(defaults.value_tol),
        tau_lp: args.tau_lp.unwrap_or(defaults.tau_lp),
        ..defaults
    };
    let params = ReductionParams {
        ellipsoid,
        seed: args.seed.unwrap_or(0),
        ..Default::default()
    };
    Ok((solver, params))
}

/// With `LEXIMIN_LOG` set, prints one line per iteration to stderr.
fn log_iterations(report: &leximin::reduction::RunReport) {
    if std::env::var_os("LEXIMIN_LOG").is_none() {
        return;
    }
    for it in &report.iterations {
        eprintln!(
            "t={} z={} probes={} feasible={} cuts={} ellipsoid_iterations={} calls={} clamped={} support={}",
            it.t,
            it.z,
            it.probe_count,
            it.feasible_probes,
            it.cut_count,
            it.ellipsoid_iterations,
            it.blackbox_calls,
            it.upper_clamped,
            it.support
        );
    }
}

//! Command-line front end: argument parsing, command dispatch, exit codes.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use admm_spectra::contraction::{bound_spectrum, build_spectral_model, mu_joint, mu_separable, mu_single, rho_joint};
use admm_spectra::lasso::{run_experiment, ExperimentConfig, LassoConfig, LassoInstance};
use admm_spectra::linalg::{eigenvalues, random_orthogonal};
use admm_spectra::locus::map_to_iteration;
use admm_spectra::{
    AdmmConfig, AdmmSolver, AlphaBox, BoundSpectrum, Direction, Error, JointSearch, LocusParams, SplitOperators,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::format::{BoxDoc, ProblemDoc};
use crate::output::{
    AnalyzeReport, DirectionDoc, IterationLocusDoc, JointDoc, LassoReport, LassoSetupDoc, LocusDoc, LocusReport,
    RunDoc, StaircaseDoc, Table,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("iteration diverged: {0}")]
    Divergence(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Divergence(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFinite { .. } => CliError::Divergence(e.to_string()),
            Error::InvalidProblem(_)
            | Error::DimensionMismatch(_)
            | Error::InvalidPiecewise(_)
            | Error::InvalidConfig(_)
            | Error::InvalidInput(_) => CliError::Validation(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "admm-spectra", version, about = "Relaxed ADMM solver and convergence-rate analysis")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the solver on a problem file and report the iteration history.
    Solve(SolveArgs),
    /// Slope bounds, contraction factors and the optimal relaxation of a problem.
    Analyze(AnalyzeArgs),
    /// Eigenvalue locus of a slope box, with sampled spectra.
    Locus(LocusArgs),
    /// Generate weighted Lasso instances, solve them and compare rates.
    LassoDemo(LassoArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Problem JSON file, `-` for stdin.
    pub problem: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol_primal: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_state: f64,
    /// Start from a standard normal state drawn from this seed instead of zero.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Leave the per-iteration history out of the report.
    #[arg(long)]
    pub no_history: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Problem JSON file, `-` for stdin.
    pub problem: PathBuf,
    /// Relaxation to evaluate; defaults to the locus-optimal value.
    #[arg(long)]
    pub q: Option<f64>,
    /// Include staircase segment lists for separable directions.
    #[arg(long)]
    pub staircases: bool,
    /// Seed of the heuristic contraction search.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct LocusArgs {
    /// Slope box JSON file, `-` for stdin.
    pub alpha_box: PathBuf,
    /// Number of random slope products whose eigenvalues are reported.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    /// Dimension of the sampled products.
    #[arg(long, default_value_t = 6)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also map the locus and the samples through `λ ↦ (1 − q) + qλ`.
    #[arg(long)]
    pub q: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LassoArgs {
    /// Use the 300×200 size instead of the 90×60 default.
    #[arg(long)]
    pub paper_scale: bool,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long)]
    pub nnz: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    /// Relaxation; defaults to the locus-optimal value.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5000)]
    pub max_iters: usize,
    /// Number of consecutive seeds to run (in parallel).
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
}

fn read_input(path: &Path) -> Result<String, CliError> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| CliError::Failure(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))
    }
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_input(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// A rendered report: JSON document or CSV table.
pub fn render<T: Serialize + Table>(report: &T, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report).map_err(|e| CliError::Failure(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let failed = |e: csv::Error| CliError::Failure(e.to_string());
            w.write_record(report.header()).map_err(failed)?;
            for r in report.records() {
                w.write_record(&r).map_err(failed)?;
            }
            w.into_inner().map_err(|e| CliError::Failure(e.to_string()))
        }
    }
}

pub fn solve(args: &SolveArgs) -> Result<RunDoc, CliError> {
    let problem = parse::<ProblemDoc>(&args.problem)?.to_problem()?;
    let cfg = AdmmConfig {
        q: args.q,
        max_iters: args.max_iters,
        tol_primal: args.tol_primal,
        tol_state: args.tol_state,
        record_history: !args.no_history,
        record_iterates: false,
        seed: args.seed.unwrap_or(0),
    };
    let solver = AdmmSolver::new(&problem, cfg)?;
    let m = problem.rows();
    let z0 = if args.seed.is_some() { cfg.random_start(m) } else { DVector::zeros(m) };
    let run = solver.run(&z0)?;
    Ok(RunDoc::new(&run, problem.objective(&run.x1, &run.x2)))
}

fn direction_doc(bs: &BoundSpectrum, ops: Option<&SplitOperators>, d: Direction) -> DirectionDoc {
    let s = bs.direction(d);
    DirectionDoc {
        lower: s.lower.iter().copied().collect(),
        upper: s.upper.iter().copied().collect(),
        kernel_count: s.kernel_count,
        mu: mu_single(bs, d),
        staircases: ops
            .and_then(|o| o.context(d).staircases().ok())
            .map(|ops| ops.iter().map(StaircaseDoc::from).collect()),
    }
}

pub fn analyze(args: &AnalyzeArgs) -> Result<AnalyzeReport, CliError> {
    let problem = parse::<ProblemDoc>(&args.problem)?.to_problem()?;
    let bs = bound_spectrum(&build_spectral_model(&problem)?)?;
    let alpha_box = AlphaBox::from_spectrum(&bs);
    let params = LocusParams::from_box(&alpha_box);
    let optimal = params.optimal_q();
    let q = match args.q {
        Some(q) if !(q > 0.0 && q.is_finite()) => {
            return Err(CliError::Validation(format!("q must be positive, got {q}")))
        }
        Some(q) => q,
        None if optimal.convergent => optimal.q,
        None => 1.0,
    };
    let search = JointSearch { seed: args.seed, ..JointSearch::default() };
    let joint = mu_joint(&bs, q, &search);
    let rho = rho_joint(&bs, q, &search);
    let ops = if args.staircases { Some(SplitOperators::new(&problem)?) } else { None };
    Ok(AnalyzeReport {
        rows: problem.rows(),
        first: direction_doc(&bs, ops.as_ref(), Direction::First),
        second: direction_doc(&bs, ops.as_ref(), Direction::Second),
        alpha_box: (&alpha_box).into(),
        params: (&params).into(),
        optimal: (&optimal).into(),
        q,
        rho_max: params.rho_max(q),
        mu_separable: mu_separable(&bs, q),
        mu_joint: JointDoc { value: joint.mu, exact: joint.exact },
        rho_joint: JointDoc { value: rho.mu, exact: rho.exact },
    })
}

pub fn locus(args: &LocusArgs) -> Result<LocusReport, CliError> {
    let doc: BoxDoc = parse(&args.alpha_box)?;
    let alpha_box = doc.to_box()?;
    if args.samples > 0 && args.dim == 0 {
        return Err(CliError::Validation("dim must be at least 1".into()));
    }
    let params = LocusParams::from_box(&alpha_box);
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let m = args.dim;
    let mut eigs = Vec::with_capacity(args.samples * m);
    for _ in 0..args.samples {
        let v1 = random_orthogonal(m, &mut rng);
        let v2 = random_orthogonal(m, &mut rng);
        let a1 = DVector::from_fn(m, |_, _| alpha_box.first.sample(&mut rng));
        let a2 = DVector::from_fn(m, |_, _| alpha_box.second.sample(&mut rng));
        let product: DMatrix<f64> =
            v1.transpose() * DMatrix::from_diagonal(&a1) * &v1 * v2.transpose() * DMatrix::from_diagonal(&a2) * &v2;
        eigs.extend(eigenvalues(&product));
    }
    let locus = params.locus();
    let iteration = match args.q {
        Some(q) if !(q > 0.0 && q.is_finite()) => {
            return Err(CliError::Validation(format!("q must be positive, got {q}")))
        }
        Some(q) => Some(IterationLocusDoc {
            q,
            rho_max: params.rho_max(q),
            locus: LocusDoc::new(&locus.map_to_iteration(q), &map_to_iteration(&eigs, q)),
        }),
        None => None,
    };
    Ok(LocusReport {
        alpha_box: doc,
        params: (&params).into(),
        optimal: (&params.optimal_q()).into(),
        locus: LocusDoc::new(&locus, &eigs),
        iteration,
    })
}

fn lasso_config(args: &LassoArgs, seed: u64) -> LassoConfig {
    let base = if args.paper_scale { LassoConfig::paper_scale(seed) } else { LassoConfig::desk_scale(seed) };
    LassoConfig {
        rows: args.rows.unwrap_or(base.rows),
        cols: args.cols.unwrap_or(base.cols),
        nnz: args.nnz.unwrap_or(base.nnz),
        eps: args.eps,
        seed,
    }
}

fn lasso_run(args: &LassoArgs, seed: u64) -> Result<LassoReport, CliError> {
    let cfg = lasso_config(args, seed);
    let inst = LassoInstance::generate(cfg)?;
    let exp = ExperimentConfig { q: args.q, max_iters: args.max_iters, ..ExperimentConfig::default() };
    let report = run_experiment(&inst, &exp)?;
    let setup =
        LassoSetupDoc { rows: cfg.rows, cols: cfg.cols, nnz: cfg.nnz, eps: cfg.eps, seed, max_iters: args.max_iters };
    Ok(LassoReport::new(setup, &report))
}

/// Runs seeds `seed .. seed + runs` on scoped threads; results keep seed order.
pub fn lasso_demo(args: &LassoArgs) -> Result<Vec<LassoReport>, CliError> {
    if args.runs == 0 {
        return Err(CliError::Validation("runs must be at least 1".into()));
    }
    if let Some(q) = args.q {
        if !(q > 0.0 && q.is_finite()) {
            return Err(CliError::Validation(format!("q must be positive, got {q}")));
        }
    }
    lasso_config(args, args.seed).validate()?;
    let seeds: Vec<u64> = (0..args.runs).map(|k| args.seed.wrapping_add(k)).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = seeds.iter().map(|&s| scope.spawn(move || lasso_run(args, s))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::Failure("worker panicked".into()))))
            .collect()
    })
}

fn execute(cli: &Cli) -> Result<Vec<u8>, CliError> {
    match &cli.command {
        Command::Solve(a) => render(&solve(a)?, cli.format),
        Command::Analyze(a) => render(&analyze(a)?, cli.format),
        Command::Locus(a) => render(&locus(a)?, cli.format),
        Command::LassoDemo(a) => {
            let reports = lasso_demo(a)?;
            match <[LassoReport; 1]>::try_from(reports) {
                Ok([single]) => render(&single, cli.format),
                Err(many) => render(&many, cli.format),
            }
        }
    }
}

/// Parses the process arguments, runs the command and maps errors to exit codes
/// (2 for invalid input, 3 for a diverging iteration, 1 otherwise).
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let result = execute(&cli).and_then(|bytes| match &cli.out {
        Some(path) => fs::write(path, bytes).map_err(|e| CliError::Failure(format!("{}: {e}", path.display()))),
        None => io::stdout().write_all(&bytes).map_err(|e| CliError::Failure(format!("stdout: {e}"))),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

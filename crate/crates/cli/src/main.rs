//! `imro`: generate BPDN instances, run the solvers on them, compare solvers
//! by operator calls, and check the runtime invariants.

mod trace_csv;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use imro::invariants::verify_problem;
use imro::linops::{DEFAULT_NORM_MAX_ITER, DEFAULT_NORM_TOL};
use imro::problems::{generate, read_problem, write_problem, Family, GenSpec, Noise, SignalKind};
use imro::{bench, operator_norm, reference_solution, run_method, BenchConfig, Method, ProxMethod, StopRule};

#[derive(Parser, Debug)]
#[command(name = "imro", version, about = "Proximal quasi-Newton solvers for l1-regularized least squares")]
struct Cli {
    /// More log output (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an instance and write its manifest.
    Gen(GenArgs),
    /// Run one solver on an instance and write its trace.
    Solve(SolveArgs),
    /// Compare solvers by operator calls at matched objective.
    Bench(BenchArgs),
    /// Run the solvers under the invariant checks.
    Verify(VerifyArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FamilyArg {
    Gaussian,
    Orthonormal,
    Conditioned,
    Heaviside,
    Convolution,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SignalArg {
    Gaussian,
    Dynamic,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum NoiseKind {
    Relative,
    Absolute,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ProxArg {
    Sorted,
    Median,
}

impl From<ProxArg> for ProxMethod {
    fn from(p: ProxArg) -> Self {
        match p {
            ProxArg::Sorted => ProxMethod::Sorted,
            ProxArg::Median => ProxMethod::Median,
        }
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Rows; defaults to `n` for the square families.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: usize,
    /// Nonzeros in the planted signal.
    #[arg(long)]
    k: usize,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Condition number for `conditioned`.
    #[arg(long, default_value_t = 1e3)]
    cond: f64,
    /// Blur width in samples for `convolution`.
    #[arg(long, default_value_t = 2.0)]
    width: f64,
    /// Scale `gaussian` columns to unit norm.
    #[arg(long)]
    normalize: bool,
    #[arg(long, value_enum, default_value_t = SignalArg::Gaussian)]
    signal: SignalArg,
    /// Decades of magnitude for the `dynamic` signal.
    #[arg(long, default_value_t = 3.0)]
    decades: f64,
    #[arg(long, default_value_t = 1e-3)]
    noise: f64,
    #[arg(long, value_enum, default_value_t = NoiseKind::Relative)]
    noise_kind: NoiseKind,
    /// Also store a reference minimizer from a long FISTA run.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 100_000)]
    oracle_iters: usize,
    #[arg(long, default_value_t = 1e-11)]
    oracle_tol: f64,
    /// Manifest path; payload files are written next to it.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone, Copy)]
struct StopArgs {
    /// Stop once the subgradient norm is at most this.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Budget on applications of A and A^T.
    #[arg(long)]
    max_ops: Option<u64>,
    #[arg(long, value_enum, default_value_t = ProxArg::Sorted)]
    prox: ProxArg,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// imro1d, imro2d, fimro, ista or fista.
    #[arg(long, default_value = "imro2d")]
    solver: Method,
    #[command(flatten)]
    stop: StopArgs,
    /// Trace file; defaults to `<manifest stem>.<solver>.csv` next to the manifest.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write 0 in the seconds column so traces are reproducible byte for byte.
    #[arg(long)]
    no_timing: bool,
    /// Write the final iterate as raw little-endian f64.
    #[arg(long)]
    x_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Instance manifests (repeatable).
    #[arg(long = "manifest", required = true)]
    manifests: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "imro2d,imro1d,fimro,ista,fista")]
    solvers: Vec<Method>,
    #[command(flatten)]
    stop: StopArgs,
    /// Run the (instance, solver) pairs on worker threads.
    #[arg(long)]
    parallel: bool,
    /// Also write the table as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Iterations per solver.
    #[arg(long, default_value_t = 200)]
    iters: usize,
    #[arg(long, value_enum, default_value_t = ProxArg::Sorted)]
    prox: ProxArg,
}

/// Failure after argument parsing.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<imro::Error> for Failure {
    fn from(e: imro::Error) -> Self {
        match e {
            imro::Error::InvalidParameter(msg) => Failure::Usage(msg),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            let mut cmd = Cli::command();
            cmd.error(clap::error::ErrorKind::ValueValidation, msg).print().ok();
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn cmd_gen(a: GenArgs) -> CmdResult {
    let family = match a.family {
        FamilyArg::Gaussian => Family::Gaussian {
            normalize_columns: a.normalize,
        },
        FamilyArg::Orthonormal => Family::Orthonormal,
        FamilyArg::Conditioned => Family::Conditioned { cond: a.cond },
        FamilyArg::Heaviside => Family::Heaviside,
        FamilyArg::Convolution => Family::Convolution { width: a.width },
    };
    let square = matches!(family, Family::Heaviside | Family::Convolution { .. });
    let m = match (a.m, square) {
        (Some(m), _) => m,
        (None, true) => a.n,
        (None, false) => return Err(Failure::Usage(format!("--m is required for the {} family", family.name()))),
    };
    let mut spec = GenSpec::new(m, a.n, a.k, a.lambda, a.seed);
    spec.signal = match a.signal {
        SignalArg::Gaussian => SignalKind::Gaussian,
        SignalArg::Dynamic => SignalKind::Dynamic { decades: a.decades },
    };
    spec.noise = match a.noise_kind {
        NoiseKind::Relative => Noise::Relative(a.noise),
        NoiseKind::Absolute => Noise::Absolute(a.noise),
    };
    let mut problem = generate(family, &spec)?;
    if a.oracle {
        let x = reference_solution(&problem, a.oracle_iters, a.oracle_tol)?;
        problem = problem.with_x_star(x)?;
    }
    write_problem(&problem, &a.out)?;
    println!("{}", a.out.display());
    Ok(())
}

fn load(path: &Path) -> std::result::Result<imro::Problem, Failure> {
    read_problem(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn stop_rule(s: &StopArgs) -> StopRule<f64> {
    StopRule {
        tol: s.tol,
        objective_target: None,
        max_iters: s.max_iters,
        max_ops: s.max_ops.unwrap_or(u64::MAX),
    }
}

fn default_trace_path(manifest: &Path, solver: Method) -> PathBuf {
    let stem = manifest.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    manifest.with_file_name(format!("{stem}.{solver}.csv"))
}

fn fmt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |v| format!("{v:.6e}"))
}

fn cmd_solve(a: SolveArgs) -> CmdResult {
    let problem = load(&a.manifest)?;
    // the norm estimate is shared set-up, not charged to the solver
    let bound = operator_norm(&problem.op.clone(), DEFAULT_NORM_TOL, DEFAULT_NORM_MAX_ITER)?.bound;
    let x0 = vec![0.0; problem.n()];
    let out = run_method(a.solver, &problem, stop_rule(&a.stop), a.stop.prox.into(), Some(bound), &x0)?;

    let path = a.trace.unwrap_or_else(|| default_trace_path(&a.manifest, a.solver));
    let text = trace_csv::render(&out.trace, &a.manifest, !a.no_timing);
    fs::write(&path, text)?;
    if let Some(p) = &a.x_out {
        imro::problems::write_vector(p, &out.x)?;
    }

    let last = out.trace.last();
    println!(
        "{}, {}, {}, {}, {}, {}",
        a.solver,
        out.trace.status,
        out.trace.iterations(),
        out.trace.a_calls(),
        fmt_num(last.map(|r| r.objective)),
        fmt_num(last.map(|r| r.subgrad_norm)),
    );
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    let mut instances = Vec::new();
    for path in &a.manifests {
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        instances.push((name, load(path)?));
    }
    let cfg = BenchConfig {
        tol: a.stop.tol,
        max_iters: a.stop.max_iters,
        max_ops: a.stop.max_ops.unwrap_or(u64::MAX),
        prox: a.stop.prox.into(),
        parallel: a.parallel,
    };
    let rows = bench(&instances, &a.solvers, &cfg)?;

    let width = instances.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(8);
    let mut table = format!(
        "{:<width$}  {:<7}  {:<13}  {:>7}  {:>9}  {:>13}  {:>10}\n",
        "instance", "solver", "status", "iters", "a_calls", "objective", "|x - x*|"
    );
    let mut csv = String::from("instance,solver,status,iters,a_calls,objective,oracle_error\n");
    for r in &rows {
        let status = match (&r.status, r.dnc()) {
            (Some(s), false) => s.to_string(),
            (Some(s), true) => format!("DNC ({s})"),
            (None, _) => "DNC (failed)".to_string(),
        };
        let calls = if r.dnc() { "DNC".to_string() } else { r.a_calls.to_string() };
        let err = r.oracle_error.map_or_else(|| "-".to_string(), |e| format!("{e:.2e}"));
        writeln!(
            table,
            "{:<width$}  {:<7}  {:<13}  {:>7}  {:>9}  {:>13.6e}  {:>10}",
            r.instance, r.method.name(), status, r.iterations, calls, r.objective, err
        )
        .expect("writing to a String");
        let st = r.status.map_or("Failed", |s| s.as_str());
        let oe = r.oracle_error.map_or(String::new(), |e| format!("{e:.16e}"));
        writeln!(
            csv,
            "{},{},{},{},{},{:.16e},{}",
            r.instance, r.method, st, r.iterations, r.a_calls, r.objective, oe
        )
        .expect("writing to a String");
        if let Some(e) = &r.error {
            log::warn!("{} on {}: {e}", r.method, r.instance);
        }
    }
    print!("{table}");
    if let Some(p) = &a.out {
        fs::write(p, csv)?;
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let problem = load(&a.manifest)?;
    let checks = verify_problem(&problem, a.iters, a.prox.into())?;
    let mut failed = 0;
    for c in &checks {
        let verdict = if c.passed() { "ok" } else { "FAIL" };
        println!(
            "{verdict:<4}  {:<30}  {:>6} checked  {:>4} violations  worst {:.3e}",
            c.name, c.checked, c.violations, c.worst
        );
        if !c.passed() {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pfkit::analyze::{analyze, Input};
use pfkit::parse::parse_matrix;
use pfkit::sweep::{self, Axis, BranchChoice, OutputFormat, SweepConfig};
use pfkit::verify::{self, VerifyOptions};
use pfkit_core::catalog::ModelSpec;
use pfkit_core::decomposition::Branch;
use pfkit_core::symmetry::DEFAULT_PHASE_TOL;

#[derive(Parser)]
#[command(
    name = "pfkit",
    version,
    about = "Pseudo-fermionic analysis of 2x2 non-Hermitian Hamiltonians"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze one matrix or catalog model and print a JSON report.
    Analyze(AnalyzeArgs),
    /// Run the randomized invariant suite.
    Verify(VerifyArgs),
    /// Evaluate a model over a one- or two-dimensional parameter grid.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Plus,
    Minus,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Matrix literal "a,b;c,d" with entries like 0.5+0.866i.
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    matrix: Option<String>,
    /// Model JSON file: {"model": "DG", "params": {...}}.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "minus")]
    branch: BranchArg,
    #[arg(long, default_value_t = DEFAULT_PHASE_TOL)]
    tol: f64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_PHASE_TOL)]
    tol: f64,
    #[arg(long, hide = true)]
    fault_flip_phi_sign: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep configuration file.
    #[arg(
        long,
        conflicts_with = "config_json",
        required_unless_present = "config_json"
    )]
    config: Option<PathBuf>,
    /// Sweep configuration given inline.
    #[arg(long)]
    config_json: Option<String>,
    /// Replaces the configured axes: name[.re|.im]=from:to:steps (at most two).
    #[arg(long = "axis")]
    axes: Vec<String>,
    #[arg(long)]
    tol: Option<f64>,
    /// plus, minus or both.
    #[arg(long)]
    branch: Option<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) {
    let mut out = io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("pfkit: {message}");
    ExitCode::from(code)
}

fn run_analyze(args: AnalyzeArgs) -> ExitCode {
    let input = if let Some(text) = &args.matrix {
        match parse_matrix(text) {
            Ok(m) => Input::Matrix(m),
            Err(e) => return fail(1, format!("matrix: {e}")),
        }
    } else {
        let path = args.model.as_ref().expect("clap requires one input");
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return fail(1, format!("{}: {e}", path.display())),
        };
        match serde_json::from_str::<ModelSpec>(&text) {
            Ok(spec) => match spec.validate() {
                Ok(()) => Input::Model(spec),
                Err(e) => return fail(1, format!("{}: {e}", path.display())),
            },
            Err(e) => {
                return fail(
                    1,
                    format!(
                        "{}: line {}, column {}: {e}",
                        path.display(),
                        e.line(),
                        e.column()
                    ),
                )
            }
        }
    };
    let branch = match args.branch {
        BranchArg::Plus => Branch::Plus,
        BranchArg::Minus => Branch::Minus,
    };
    let analysis = analyze(&input, branch, args.tol);
    let text = serde_json::to_string_pretty(&analysis.report).expect("report serializes");
    emit(&format!("{text}\n"));
    ExitCode::from(analysis.exit_code() as u8)
}

fn run_verify(args: VerifyArgs) -> ExitCode {
    let opts = VerifyOptions {
        count: args.count as usize,
        seed: args.seed,
        tol: args.tol,
        fault_flip_phi_sign: args.fault_flip_phi_sign,
    };
    let report = verify::run(&opts);
    emit(&report.render());
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn sweep_config(args: &SweepArgs) -> Result<SweepConfig, sweep::SweepError> {
    let text = match (&args.config, &args.config_json) {
        (Some(path), _) => fs::read_to_string(path)?,
        (None, Some(inline)) => inline.clone(),
        (None, None) => unreachable!("clap requires a config"),
    };
    let mut cfg = SweepConfig::parse_unchecked(&text)?;
    if !args.axes.is_empty() {
        cfg.axes = args
            .axes
            .iter()
            .map(|a| Axis::parse(a))
            .collect::<Result<_, _>>()?;
        for axis in &cfg.axes {
            // Unknown names are reported by `validate` below.
            let _ = cfg
                .template
                .set_param(&axis.name, axis.component, axis.grid.from);
        }
    }
    if let Some(tol) = args.tol {
        cfg.tol = tol;
    }
    if let Some(b) = &args.branch {
        cfg.branch = BranchChoice::parse(b)?;
    }
    if let Some(f) = &args.format {
        cfg.output = OutputFormat::parse(f)?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_sweep(args: SweepArgs) -> ExitCode {
    let cfg = match sweep_config(&args) {
        Ok(c) => c,
        Err(e) => return fail(1, e),
    };
    let rows = match sweep::run(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(1, e),
    };
    let result = match &args.out {
        Some(path) => fs::File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            sweep::write(&cfg, &rows, &mut w)?;
            w.flush()
        }),
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            sweep::write(&cfg, &rows, &mut w).and_then(|_| w.flush())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(1, e),
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Analyze(args) => run_analyze(args),
        Command::Verify(args) => run_verify(args),
        Command::Sweep(args) => run_sweep(args),
    }
}

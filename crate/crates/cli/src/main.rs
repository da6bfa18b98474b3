use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sgmc_core::benchlab::{self, CsvRowWriter, PlotFormat};
use sgmc_core::synthgen::generate;
use sgmc_core::{
    AlmConfig, CurveTable, DenseMatrix, Error, ErrorModel, GreedyConfig, Instance, InstanceSpec, Solver, SweepSpec,
};

/// Robust low-rank matrix completion: instances, solves and phase-transition sweeps.
#[derive(Debug, Parser)]
#[command(name = "sgmc", version)]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded synthetic instance file.
    Generate(GenerateArgs),
    /// Solve one instance file and score the estimate against its truth.
    Solve(SolveArgs),
    /// Run a phase-transition sweep described by a TOML file.
    Sweep(SweepArgs),
    /// Run a sweep config with both solvers and print the curves side by side.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Model {
    Gauss,
    Uniform,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverArg {
    Alm,
    Sgmca,
}

impl From<SolverArg> for Solver {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Alm => Solver::AlmOnly,
            SolverArg::Sgmca => Solver::Sgmca,
        }
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    rank: usize,
    #[arg(long)]
    density: f64,
    #[arg(long, default_value_t = 0.0)]
    error_rate: f64,
    #[arg(long, value_enum, default_value_t = Model::Gauss)]
    model: Model,
    /// Gaussian corruptions replace the entry instead of being added to it.
    #[arg(long)]
    replace: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = SolverArg::Sgmca)]
    solver: SolverArg,
    /// Sparsity weight; defaults to 1/sqrt(n).
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    rank_cap: Option<usize>,
    #[arg(long)]
    max_outer: Option<usize>,
    /// Inner convergence tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = benchlab::DEFAULT_SUCCESS_TOL)]
    success_tol: f64,
    /// Write a JSON report of the solve.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the estimate as CSV, one matrix row per line.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_csv: PathBuf,
    #[arg(long)]
    out_plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_plot: Option<PathBuf>,
}

/// The file written by `solve --report`. Wall time is left out so reports
/// are reproducible byte for byte.
#[derive(Debug, Serialize)]
struct SolveReport {
    solver: Solver,
    n: usize,
    rank: usize,
    density: f64,
    error_rate: f64,
    seed: u64,
    lambda: f64,
    success_tol: f64,
    success: bool,
    rel_error: Option<f64>,
    outer_iters: usize,
    total_svds: usize,
    final_density: f64,
    pruned_clean: usize,
    pruned_corrupt: usize,
    failure: Option<String>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 1,
        e if e.is_numeric() => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

type CmdResult = sgmc_core::Result<u8>;

fn write_file(path: &Path, bytes: &[u8]) -> sgmc_core::Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn cmd_generate(a: GenerateArgs) -> CmdResult {
    let spec = InstanceSpec {
        n: a.n,
        rank: a.rank,
        density: a.density,
        error_rate: a.error_rate,
        error_model: match a.model {
            Model::Gauss => ErrorModel::AdditiveGaussian,
            Model::Uniform => ErrorModel::UniformRange,
        },
        additive: !a.replace,
        seed: a.seed,
    };
    let inst = generate(&spec)?;
    inst.write(&a.out)?;
    println!(
        "wrote {}: n={} rank={} |Ω|={} corrupted={}",
        a.out.display(),
        spec.n,
        spec.rank,
        inst.observed.mask().len(),
        inst.corruption_support.len()
    );
    Ok(0)
}

fn matrix_csv(a: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..a.rows() {
        for (j, v) in a.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v:?}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

fn cmd_solve(a: SolveArgs) -> CmdResult {
    let inst = Instance::read(&a.input)?;
    let n = inst.spec.n;
    let lambda = a.lambda.unwrap_or(1.0 / (n as f64).sqrt());
    let mut inner = AlmConfig {
        rank_cap: a.rank_cap,
        ..AlmConfig::with_lambda(lambda)
    };
    if let Some(tol) = a.tol {
        inner.tol = tol;
    }
    let mut greedy = GreedyConfig::with_inner(inner);
    if let Some(k) = a.max_outer {
        greedy.max_outer = k;
    }
    let solver = Solver::from(a.solver);
    let (result, estimate) = benchlab::evaluate(&inst, solver, &greedy, a.success_tol)?;

    match &result.failure {
        None => println!("rel_error {:.6e}", result.rel_error),
        Some(reason) => println!("solver failed: {reason}"),
    }
    println!("success {}", result.success);
    println!("outer_iters {}", result.outer_iters);
    println!("total_svds {}", result.total_svds);
    println!("final_density {:.6}", result.final_density);
    println!("pruned clean/corrupt {}/{}", result.pruned_clean, result.pruned_corrupt);
    println!("wall_time {:.3}s", result.wall_time);

    if let Some(path) = &a.report {
        let report = SolveReport {
            solver,
            n,
            rank: inst.spec.rank,
            density: inst.spec.density,
            error_rate: inst.spec.error_rate,
            seed: inst.spec.seed,
            lambda,
            success_tol: a.success_tol,
            success: result.success,
            rel_error: result.rel_error.is_finite().then_some(result.rel_error),
            outer_iters: result.outer_iters,
            total_svds: result.total_svds,
            final_density: result.final_density,
            pruned_clean: result.pruned_clean,
            pruned_corrupt: result.pruned_corrupt,
            failure: result.failure.clone(),
        };
        let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
        json.push('\n');
        write_file(path, json.as_bytes())?;
    }
    if let (Some(path), Some(est)) = (&a.dump, &estimate) {
        write_file(path, matrix_csv(est).as_bytes())?;
    }
    Ok(if result.failure.is_some() { 2 } else { 0 })
}

fn load_sweep(path: &Path) -> sgmc_core::Result<SweepSpec> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    SweepSpec::from_toml(&text)
}

/// Runs the sweep, streaming rows to `csv` when given.
fn run_sweep(spec: &SweepSpec, csv: Option<&Path>) -> sgmc_core::Result<CurveTable> {
    let mut writer = csv.map(CsvRowWriter::create).transpose()?;
    let mut table = CurveTable::default();
    benchlab::sweep_with(spec, |row| {
        log::info!("{} {}={}: {}={} ({} failed)", row.solver, row.x_axis, row.x, row.y_axis, row.y, row.failures);
        if let Some(w) = writer.as_mut() {
            w.write(row)?;
        }
        table.rows.push(row.clone());
        Ok(())
    })?;
    Ok(table)
}

fn cmd_sweep(a: SweepArgs) -> CmdResult {
    let spec = load_sweep(&a.config)?;
    let table = run_sweep(&spec, Some(&a.out_csv))?;
    if let Some(plot) = &a.out_plot {
        table.emit(PlotFormat::Svg, plot)?;
    }
    println!("{} rows written to {}", table.rows.len(), a.out_csv.display());
    Ok(0)
}

fn cmd_compare(a: CompareArgs) -> CmdResult {
    let mut spec = load_sweep(&a.config)?;
    spec.solvers = vec![Solver::AlmOnly, Solver::Sgmca];
    let table = run_sweep(&spec, a.out_csv.as_deref())?;
    if let Some(plot) = &a.out_plot {
        table.emit(PlotFormat::Svg, plot)?;
    }

    let (alm, greedy) = (table.curve(Solver::AlmOnly), table.curve(Solver::Sgmca));
    let y_axis = table.rows[0].y_axis;
    println!("{:>10} {:>12} {:>12}   (max admissible {y_axis})", spec.x_axis.to_string(), "alm", "sgmca");
    let mut dominates = true;
    for ((x, ya), (_, yg)) in alm.iter().zip(&greedy) {
        let (va, vg) = (ya.value().unwrap_or(f64::NEG_INFINITY), yg.value().unwrap_or(f64::NEG_INFINITY));
        dominates &= vg >= va;
        println!("{x:>10} {:>12} {:>12}", ya.to_string(), yg.to_string());
    }
    println!("sgmca {} alm at every point", if dominates { ">=" } else { "does not dominate" });
    Ok(0)
}

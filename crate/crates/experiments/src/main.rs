use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use robust_sparse_experiments::{run_counterexample, run_suite, write_outputs, EstimatorKind, ExperimentSpec, SpecOverrides, Suite};

#[derive(Parser)]
#[command(name = "rsr", version, about = "Robust sparse regression simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Command {
    /// Sparse mean estimation against the orthogonal-mean attack.
    Mean,
    /// Robust IHT with identity covariates.
    Regress,
    /// Robust IHT with Toeplitz covariates.
    UnknownCov,
    /// Instance where λ* is below the sparse operator norm.
    Counterexample,
}

#[derive(Args)]
struct Opts {
    /// JSON or TOML file overriding the suite defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Shrinks d, n and the number of seeds.
    #[arg(long, global = true)]
    scale: Option<f64>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    estimator: Option<EstimatorKind>,
    /// Record per-trial wall time.
    #[arg(long, global = true)]
    timing: bool,
    #[arg(long, global = true)]
    no_plots: bool,
}

fn resolve(suite: Suite, opts: &Opts) -> anyhow::Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::for_suite(suite);
    if let Some(path) = &opts.config {
        spec.apply(SpecOverrides::load(path)?);
    }
    if let Some(out) = &opts.out {
        spec.outputs = out.clone();
    }
    if let Some(seed) = opts.seed {
        spec.master_seed = seed;
    }
    if let Some(e) = opts.estimator {
        spec.estimator = e;
    }
    spec.timing |= opts.timing;
    spec.plots &= !opts.no_plots;
    if let Some(s) = opts.scale {
        spec = spec.scaled(s)?;
    }
    spec.validate()?;
    Ok(spec)
}

fn counterexample(opts: &Opts) -> anyhow::Result<bool> {
    let report = run_counterexample()?;
    let json = serde_json::to_string_pretty(&report)?;
    println!("{json}");
    if let Some(out) = &opts.out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("counterexample.json"), json + "\n")?;
    }
    for f in &report.failures {
        eprintln!("assertion failed: {f}");
    }
    Ok(report.passed())
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let suite = match cli.command {
        Command::Mean => Suite::Mean,
        Command::Regress => Suite::Regress,
        Command::UnknownCov => Suite::UnknownCov,
        Command::Counterexample => return counterexample(&cli.opts),
    };
    let spec = resolve(suite, &cli.opts)?;
    let rows = run_suite(&spec)?;
    let path = write_outputs(&spec, &rows)?;
    eprintln!("wrote {} rows to {}", rows.len(), path.display());
    Ok(true)
}

fn main() -> ExitCode {
    // Usage errors exit with 1; 2 is reserved for a failed counterexample.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

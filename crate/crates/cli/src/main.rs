use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pureid::report::{is_usage_error, run, Command, ExperimentConfig, Report};

/// Identify an unknown pure state as one of two unknown reference states.
#[derive(Parser, Debug)]
#[command(name = "pureid", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    output: Output,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Symmetric, antisymmetric and mixed subspace dimensions.
    Dims(Dims),
    /// Minimum-error identification, global and LOCC.
    Minerr(Experiment),
    /// Unambiguous identification at equal priors, global and LOCC.
    Unamb(Experiment),
    /// Run the whole invariant suite over the standard grid.
    VerifyAll(Verify),
}

#[derive(Args, Debug)]
struct Dimensions {
    /// Local dimension of each system.
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
    d: Option<u32>,
    /// Alice's share of each system.
    #[arg(long, requires = "db", value_parser = clap::value_parser!(u32).range(1..))]
    da: Option<u32>,
    /// Bob's share of each system.
    #[arg(long, requires = "da", value_parser = clap::value_parser!(u32).range(1..))]
    db: Option<u32>,
}

#[derive(Args, Debug)]
struct Dims {
    #[command(flatten)]
    dims: Dimensions,
}

#[derive(Args, Debug)]
struct Experiment {
    #[command(flatten)]
    dims: Dimensions,
    /// Prior of the first reference state.
    #[arg(long, default_value_t = 0.5)]
    eta1: f64,
    /// Also build and check the separable (LOCC) scheme; needs --da/--db.
    #[arg(long)]
    locc: bool,
    /// Run a Monte Carlo batch.
    #[arg(long)]
    simulate: bool,
    /// Number of Monte Carlo trials.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Worker threads for the batch (results do not depend on it).
    #[arg(long)]
    workers: Option<usize>,
    /// Also report the no-copy baseline.
    #[arg(long)]
    baseline: bool,
    /// Let Bob lead when both parties find mixed symmetry.
    #[arg(long)]
    bob_first: bool,
    /// Replace the first separable coefficient (fault injection).
    #[arg(long)]
    inject_alpha: Option<f64>,
}

#[derive(Args, Debug)]
struct Verify {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Replace the first separable coefficient (fault injection).
    #[arg(long)]
    inject_alpha: Option<f64>,
}

#[derive(Args, Debug)]
struct Output {
    /// Print the full JSON report.
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    /// Print one CSV row per check.
    #[arg(long, global = true)]
    csv: bool,
    /// Write the output to a file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn apply_dims(cfg: &mut ExperimentConfig, dims: &Dimensions) {
    cfg.d = dims.d.map(|v| v as usize);
    cfg.d_a = dims.da.map(|v| v as usize);
    cfg.d_b = dims.db.map(|v| v as usize);
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn config(cmd: &Cmd) -> ExperimentConfig {
    match cmd {
        Cmd::Dims(a) => {
            let mut cfg = ExperimentConfig::new(Command::Dims);
            apply_dims(&mut cfg, &a.dims);
            cfg
        }
        Cmd::Minerr(a) | Cmd::Unamb(a) => {
            let command = if matches!(cmd, Cmd::Minerr(_)) {
                Command::Minerr
            } else {
                Command::Unamb
            };
            let mut cfg = ExperimentConfig::new(command);
            apply_dims(&mut cfg, &a.dims);
            cfg.eta1 = a.eta1;
            cfg.locc = a.locc;
            cfg.simulate = a.simulate;
            cfg.n_trials = a.n;
            cfg.seed = a.seed;
            cfg.workers = a.workers.unwrap_or_else(default_workers);
            cfg.baseline = a.baseline;
            cfg.bob_first = a.bob_first;
            cfg.inject_alpha = a.inject_alpha;
            cfg
        }
        Cmd::VerifyAll(a) => {
            let mut cfg = ExperimentConfig::new(Command::VerifyAll);
            cfg.seed = a.seed;
            cfg.inject_alpha = a.inject_alpha;
            cfg
        }
    }
}

fn render(report: &Report, out: &Output) -> Result<String, String> {
    if out.json {
        Ok(report.to_json())
    } else if out.csv {
        report.to_csv().map_err(|e| e.to_string())
    } else {
        Ok(report.to_text())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = config(&cli.command);
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) if is_usage_error(&e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let text = match render(&report, &cli.output) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match &cli.output.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    for c in report.failed_checks() {
        eprintln!("failed: {}", c.name);
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use shearlab::ShearletError;
use shearlab3d::commands;
use shearlab3d::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "shearlab3d", version, about = "3D shearlet frame experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Results directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Frame-bound certificate, feasibility fit and Φ profile.
    Certify(Common),
    /// Greedy N-term error curves with wavelet and Fourier baselines.
    Approximate(Common),
    /// Renders or validates a phantom.
    Phantom {
        #[command(flatten)]
        common: Common,
        /// Only check the budgets; no volume is written.
        #[arg(long)]
        validate: bool,
    },
    /// Hypercube atom fixtures and the side-length fit.
    Hypercube(Common),
    /// Hyperplane coefficient decay over shears and scales.
    Decay(Common),
    /// Significant-coefficient counts.
    Count(Common),
}

fn run(cli: Cli) -> Result<(), ShearletError> {
    let (common, name) = match &cli.command {
        Command::Certify(c) => (c, "certify"),
        Command::Approximate(c) => (c, "approximate"),
        Command::Phantom { common, .. } => (common, "phantom"),
        Command::Hypercube(c) => (c, "hypercube"),
        Command::Decay(c) => (c, "decay"),
        Command::Count(c) => (c, "count"),
    };
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(name));
    if let Some(t) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| ShearletError::Constraint(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Certify(_) => {
            let doc = commands::certify(&cfg, &out)?;
            println!("{}: [{:e}, {:e}]", doc.status, doc.certificate.lower, doc.certificate.upper);
        }
        Command::Approximate(_) => {
            commands::approximate(&cfg, &out)?;
        }
        Command::Phantom { validate, .. } => {
            commands::phantom(&cfg, &out, *validate)?;
            if *validate {
                println!("valid");
            }
        }
        Command::Hypercube(_) => {
            commands::hypercube(&cfg, &out)?;
        }
        Command::Decay(_) => {
            commands::decay(&cfg, &out)?;
        }
        Command::Count(_) => {
            commands::count(&cfg, &out)?;
        }
    }
    println!("results in {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

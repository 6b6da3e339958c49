use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vqse_cli::commands;
use vqse_cli::{ConfigError, Experiment, Overrides};

/// Variational quantum state eigensolver experiments.
#[derive(Parser, Debug)]
#[command(name = "vqse", version)]
struct Cli {
    /// Worker threads for run-level parallelism (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment from a config file, or replay a manifest.
    Run {
        /// Experiment section to run; omitted when replaying.
        #[arg(value_enum, required_unless_present = "manifest")]
        experiment: Option<Experiment>,
        #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
        config: Option<PathBuf>,
        /// Replay a previous run and check its artifact hashes.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, conflicts_with = "manifest")]
        seed: Option<u64>,
        #[arg(long, conflicts_with = "manifest")]
        shots: Option<usize>,
    },
    /// Recompute the verification bounds stored in a summary file.
    Verify {
        summary: PathBuf,
        /// Tolerance added to each bound.
        #[arg(long, default_value_t = 1e-9)]
        slack: f64,
    },
    /// Exact field scan of the XY chain and its factorizing field.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    match cli.command {
        Command::Run {
            experiment,
            config,
            manifest,
            out,
            seed,
            shots,
        } => {
            let written = match (manifest, experiment, config) {
                (Some(path), _, _) => commands::replay(&path, &out)?,
                (None, Some(experiment), Some(config)) => {
                    commands::run(experiment, &config, &out, Overrides { seed, shots })?
                }
                _ => unreachable!("clap enforces experiment and config without a manifest"),
            };
            for (name, hash) in &written.artifacts {
                println!("{} {hash}", out.join(name).display());
            }
            println!("{}", out.join("manifest.txt").display());
            Ok(true)
        }
        Command::Verify { summary, slack } => {
            let checks = commands::verify(&summary, slack)?;
            for c in &checks {
                println!("{}", c.render());
            }
            let ok = checks.iter().all(|c| c.passed());
            println!("{}", if ok { "PASS" } else { "FAIL" });
            Ok(ok)
        }
        Command::Sweep { config, out } => {
            let written = commands::sweep(&config, &out)?;
            for (name, hash) in &written.artifacts {
                println!("{} {hash}", out.join(name).display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use adarem_cli::{load_config, runner, CliError};

/// Config-driven optimizer experiment runner.
#[derive(Parser, Debug)]
#[command(name = "adarem", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment from a JSON config.
    Run {
        /// Path to the config file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's `out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run several configs on the same problem and tabulate them.
    Compare {
        /// Config files; all must share the problem spec and seed.
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        /// Output directory for the comparison table and per-run outputs.
        #[arg(long, default_value = "compare_out")]
        out: PathBuf,
        /// Loss threshold for the steps-to-threshold column.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Check the regret bound on the config's run regime.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out, seed } => {
            let mut cfg = load_config(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let out_dir = out
                .or_else(|| cfg.out_dir.clone())
                .ok_or_else(|| CliError::Config("no output directory: pass --out or set out_dir".into()))?;
            // the summary echoes the effective config, overrides included
            cfg.out_dir = Some(out_dir.clone());
            let summary = runner::run(&cfg, &out_dir)?;
            println!(
                "run complete: final_loss={} steps={} out={}",
                summary.final_loss,
                cfg.schedule.total_steps,
                out_dir.display()
            );
            Ok(())
        }
        Command::Compare {
            configs,
            out,
            threshold,
        } => {
            let parsed: Vec<_> = configs
                .iter()
                .map(|p| load_config(p))
                .collect::<Result<_, _>>()?;
            let rows = runner::compare(&parsed, &out, threshold)?;
            println!("optimizer,final_loss,q,steps_to_threshold");
            for row in rows {
                println!(
                    "{},{},{},{}",
                    row.optimizer,
                    row.final_loss,
                    row.q.map(|q| q.to_string()).unwrap_or_default(),
                    row.steps_to_threshold
                        .map(|s| s.to_string())
                        .unwrap_or_default()
                );
            }
            Ok(())
        }
        Command::Verify { config, out } => {
            let cfg = load_config(&config)?;
            let out_dir = out
                .or_else(|| cfg.out_dir.clone())
                .ok_or_else(|| CliError::Config("no output directory: pass --out or set out_dir".into()))?;
            let report = runner::verify(&cfg, &out_dir)?;
            println!(
                "verify: regret={} bound={} margin={}",
                report.regret, report.bound, report.margin
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

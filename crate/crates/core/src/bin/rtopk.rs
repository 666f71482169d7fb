use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rtopk::harness::{run_config, Command, ExperimentConfig, HarnessError, Overrides};

const AFTER_HELP: &str = "\
Commands:
  estimate_risk        Monte Carlo risk of the k-bit estimator at each grid point
  sweep_risk           risk over an (n, k, d, s) grid with bound-curve columns
  codec_roundtrip      encode/serialize/decode every support (d <= 16) or random ones
  train                distributed SGD with sparsified, error-compensated updates
  compare_sparsifiers  final loss of rTop-k, top-k and random-k at equal budget
  bounds               risk or convergence bound curves over a grid

The config schema is documented in the harness module docs and configs/*.toml.";

/// Run one experiment described by a TOML config and write its CSV.
#[derive(Debug, Parser)]
#[command(name = "rtopk", version, after_help = AFTER_HELP)]
struct Cli {
    /// Command to run; must match `command` in the config.
    command: String,
    /// Path to the experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(cli: &Cli) -> Result<Vec<String>, HarnessError> {
    let Some(requested) = Command::parse(&cli.command) else {
        return Err(HarnessError::Config { key: Some("command".into()), line: None, message: format!("unknown command `{}`", cli.command) });
    };
    let overrides = Overrides { seed: cli.seed, out: cli.out.clone() };
    let cfg = ExperimentConfig::load(&cli.config)?;
    if cfg.command != requested {
        return Err(HarnessError::Config {
            key: Some("command".into()),
            line: None,
            message: format!("config is for `{}` but `{}` was requested", cfg.command.name(), requested.name()),
        });
    }
    let outcome = run_config(cfg, &overrides)?;
    let mut lines = outcome.summary;
    lines.push(format!("wrote {} rows to {}", outcome.table.rows.len(), outcome.out.display()));
    Ok(lines)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.machine_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

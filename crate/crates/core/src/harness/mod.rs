//! Config-driven experiment runner.
//!
//! [`run`] loads an [`ExperimentConfig`], executes its command, writes one
//! CSV table atomically and returns one summary line per grid point. Grid
//! point `i` is seeded with `derive_seed(seed, i)`, points run in parallel,
//! and rows are emitted in grid order, so the same config and seed always
//! produce byte-identical output.
//!
//! CSV schemas (column order is frozen):
//!
//! | command | columns |
//! |---|---|
//! | `sweep_risk` | `n,k,d,s,trials,risk,std_err,upper_bound,lower_bound,centralized,upper_in_regime,lower_in_regime` |
//! | `estimate_risk` | `n,k,d,s,kprime,variant,perturb,trials,risk,std_err,exact_risk,upper_bound,lower_bound,centralized,upper_in_regime,lower_in_regime` |
//! | `codec_roundtrip` | `d,k,header_bits,payload_bits,sign_bits,kprime,cases,ok` |
//! | `train` | `sparsifier,r,k,seed,round,lr,loss,grad_norm_sq,memory_norm_sq,comm_entries` |
//! | `compare_sparsifiers` | `sparsifier,r,k,seeds,comm_entries,mean_final_loss,std_final_loss,mean_final_grad_norm_sq,std_final_grad_norm_sq` |
//! | `bounds` (risk) | `n,k,d,s,upper_bound,lower_bound,centralized,upper_in_regime,lower_in_regime` |
//! | `bounds` (convergence) | `n,k,d,batch,steps,theorem3,theorem3_holds,corollary_term1,corollary_term2` |
//!
//! A bound evaluated outside its hypotheses leaves its cell empty and sets
//! the matching flag column to `0`.

mod config;
mod output;
mod risk;
mod roundtrip;
mod training;

use std::path::{Path, PathBuf};

pub use config::{BoundFamily, Command, ExperimentConfig, ModeName, ObjectiveConfig, SparsifierName, VariantName};
pub use output::{fit_slope, fit_slope_reader, real, Table};

use crate::error::Error;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("config error{}{}: {message}", key.as_ref().map(|k| format!(" at key `{k}`")).unwrap_or_default(), line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config { key: Option<String>, line: Option<usize>, message: String },
    #[error("precondition failed at {point}: {source}")]
    Precondition { point: String, source: Error },
    #[error("io error: {0}")]
    Io(String),
    #[error("runtime error: {0}")]
    Runtime(Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => 2,
            HarnessError::Precondition { .. } => 3,
            HarnessError::Io(_) | HarnessError::Runtime(_) => 4,
        }
    }

    /// Single-line `key=value` rendering for scripts.
    pub fn machine_line(&self) -> String {
        let clean = |s: &str| s.replace(['\n', '"'], " ");
        match self {
            HarnessError::Config { key, line, message } => format!(
                "error kind=config key={} line={} message=\"{}\"",
                key.as_deref().unwrap_or("-"),
                line.map_or("-".to_string(), |l| l.to_string()),
                clean(message)
            ),
            HarnessError::Precondition { point, source } => {
                format!("error kind=precondition point=\"{}\" message=\"{}\"", clean(point), clean(&source.to_string()))
            }
            HarnessError::Io(m) => format!("error kind=io message=\"{}\"", clean(m)),
            HarnessError::Runtime(e) => format!("error kind=runtime message=\"{}\"", clean(&e.to_string())),
        }
    }

    pub(crate) fn missing(key: &str) -> Self {
        HarnessError::Config { key: Some(key.to_string()), line: None, message: format!("missing or empty required key `{key}`") }
    }

    pub(crate) fn invalid(key: &str, message: impl Into<String>) -> Self {
        HarnessError::Config { key: Some(key.to_string()), line: None, message: message.into() }
    }
}

/// Command-line overrides of config values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Result of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub command: Command,
    pub table: Table,
    pub summary: Vec<String>,
    pub out: PathBuf,
}

/// Loads the config at `path`, applies overrides, runs and writes the CSV.
pub fn run(path: &Path, overrides: &Overrides) -> Result<Outcome, HarnessError> {
    let cfg = ExperimentConfig::load(path)?;
    run_config(cfg, overrides)
}

/// As [`run`] for an already parsed config.
pub fn run_config(mut cfg: ExperimentConfig, overrides: &Overrides) -> Result<Outcome, HarnessError> {
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &overrides.out {
        cfg.out = Some(out.clone());
    }
    let out = cfg.out.clone().ok_or_else(|| HarnessError::missing("out"))?;
    let (table, summary) = execute(&cfg)?;
    table.write_atomic(&out)?;
    Ok(Outcome { command: cfg.command, table, summary, out })
}

/// Runs the command without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig) -> Result<(Table, Vec<String>), HarnessError> {
    let work = || match cfg.command {
        Command::SweepRisk => risk::sweep_risk(cfg),
        Command::EstimateRisk => risk::estimate_risk(cfg),
        Command::Bounds => risk::bounds(cfg),
        Command::CodecRoundtrip => roundtrip::codec_roundtrip(cfg),
        Command::Train => training::train(cfg),
        Command::CompareSparsifiers => training::compare(cfg),
    };
    match cfg.threads {
        Some(0) => Err(HarnessError::invalid("threads", "threads must be at least 1")),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| HarnessError::Io(format!("cannot start thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

/// Label for a grid point in summaries and error messages.
pub(crate) fn point_label(fields: &[(&str, String)]) -> String {
    fields.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(HarnessError::missing("k").exit_code(), 2);
        let p = HarnessError::Precondition { point: "d=32 k=10".into(), source: Error::DegenerateCodec };
        assert_eq!(p.exit_code(), 3);
        assert!(p.machine_line().starts_with("error kind=precondition point=\"d=32 k=10\""));
        assert_eq!(HarnessError::Io("x".into()).exit_code(), 4);
        assert_eq!(HarnessError::Runtime(Error::EmptyInput).exit_code(), 4);
    }

    #[test]
    fn missing_out_is_a_config_error() {
        let cfg = ExperimentConfig::from_toml("command = \"bounds\"\nn=[1]\nk=[10]\nd=[32]\ns=[4.0]\n").unwrap();
        let err = run_config(cfg, &Overrides::default()).unwrap_err();
        assert_eq!(err, HarnessError::missing("out"));
    }
}

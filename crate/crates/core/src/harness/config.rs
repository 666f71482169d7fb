//! Experiment configuration files.
//!
//! Configs are TOML documents with one flat set of keys; every list-valued
//! key is a grid axis. Unknown keys are rejected so that typos never fall
//! back to defaults silently. `configs/` in the repository root holds an
//! annotated example per command.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    EstimateRisk,
    SweepRisk,
    CodecRoundtrip,
    Train,
    CompareSparsifiers,
    Bounds,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::EstimateRisk,
        Command::SweepRisk,
        Command::CodecRoundtrip,
        Command::Train,
        Command::CompareSparsifiers,
        Command::Bounds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::EstimateRisk => "estimate_risk",
            Command::SweepRisk => "sweep_risk",
            Command::CodecRoundtrip => "codec_roundtrip",
            Command::Train => "train",
            Command::CompareSparsifiers => "compare_sparsifiers",
            Command::Bounds => "bounds",
        }
    }

    pub fn parse(name: &str) -> Option<Command> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    #[default]
    Plain,
    Signed,
    Scaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    #[default]
    ErrorFeedback,
    UnbiasedRescale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparsifierName {
    RtopK,
    TopR,
    RandomK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundFamily {
    #[default]
    Risk,
    Convergence,
}

/// Synthetic training objective, chosen by `kind`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    Quadratic {
        d: usize,
        #[serde(default)]
        samples: usize,
        #[serde(default)]
        noise: f64,
        #[serde(default = "one")]
        curvature_min: f64,
        #[serde(default = "one")]
        curvature_max: f64,
        #[serde(default)]
        seed: u64,
    },
    SparseBernoulli {
        d: usize,
        s: usize,
        samples: usize,
        p_head: f64,
        p_tail: f64,
        #[serde(default)]
        seed: u64,
    },
    Logistic {
        d: usize,
        samples: usize,
        #[serde(default)]
        lambda: f64,
        #[serde(default)]
        seed: u64,
    },
    Mlp {
        layers: Vec<usize>,
        samples: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Worker threads; all available processors when absent.
    pub threads: Option<usize>,

    // Estimation grid.
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub k: Vec<usize>,
    #[serde(default)]
    pub d: Vec<usize>,
    #[serde(default)]
    pub s: Vec<f64>,
    pub trials: Option<usize>,
    /// Explicit parameter vector for `estimate_risk` (defaults to the flat
    /// hardest parameter).
    pub theta: Option<Vec<f64>>,
    #[serde(default)]
    pub variant: VariantName,
    pub scale: Option<f64>,
    /// Half-width of the uniform perturbation; no perturbation when absent.
    pub perturb: Option<f64>,
    #[serde(default = "one")]
    pub upper_constant: f64,
    #[serde(default = "one")]
    pub lower_constant: f64,

    // Training.
    pub objective: Option<ObjectiveConfig>,
    pub nodes: Option<usize>,
    #[serde(default = "one_usize")]
    pub batch: usize,
    pub r: Option<usize>,
    pub steps: Option<usize>,
    pub lr: Option<f64>,
    /// `[[round, rate], …]` steps applied on top of `lr`.
    #[serde(default)]
    pub lr_breakpoints: Vec<(usize, f64)>,
    /// Use `lr_chat/√steps` instead of `lr`.
    pub lr_chat: Option<f64>,
    #[serde(default)]
    pub mode: ModeName,
    pub sparsifier: Option<SparsifierName>,
    #[serde(default)]
    pub sparsifiers: Vec<SparsifierName>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    pub init_scale: Option<f64>,

    // Convergence bounds.
    #[serde(default)]
    pub bound_family: BoundFamily,
    pub smoothness: Option<f64>,
    pub grad_bound: Option<f64>,
    pub f0_gap: Option<f64>,
    pub chat: Option<f64>,
    #[serde(default)]
    pub horizons: Vec<usize>,
}

fn one_usize() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|span| text[..span.start].matches('\n').count() + 1);
            let message = e.message().to_string();
            HarnessError::Config { key: offending_key(&message, text, e.span()), line, message }
        })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub(crate) fn require<T: Copy>(value: Option<T>, key: &str) -> Result<T, HarnessError> {
        value.ok_or_else(|| HarnessError::missing(key))
    }

    pub(crate) fn nonempty<'a, T>(values: &'a [T], key: &str) -> Result<&'a [T], HarnessError> {
        if values.is_empty() {
            Err(HarnessError::missing(key))
        } else {
            Ok(values)
        }
    }
}

/// Best guess at which key a parse error is about: the backquoted name in
/// serde's message, else the key at the start of the offending line.
fn offending_key(message: &str, text: &str, span: Option<std::ops::Range<usize>>) -> Option<String> {
    if let Some(start) = message.find('`') {
        if let Some(len) = message[start + 1..].find('`') {
            return Some(message[start + 1..start + 1 + len].to_string());
        }
    }
    let span = span?;
    let line_start = text[..span.start].rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next()?;
    let key = line.split('=').next()?.trim();
    (!key.is_empty() && !key.starts_with('[')).then(|| key.to_string())
}

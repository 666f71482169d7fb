use super::objective::Objective;
use super::train::{train, TrainConfig};
use crate::error::{Error, Result};
use crate::sparsify::SparsifierSpec;
use crate::stats::RunningStats;

/// Summary of one sparsifier across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub spec: SparsifierSpec,
    pub comm_entries_per_round: usize,
    pub seeds: usize,
    pub mean_final_loss: f64,
    pub std_final_loss: f64,
    pub mean_final_grad_norm_sq: f64,
    pub std_final_grad_norm_sq: f64,
    /// Final loss per seed, in the order the seeds were given.
    pub final_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn row(&self, name: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.spec.name() == name)
    }
}

/// Trains once per `(spec, seed)` with everything else taken from `base`.
/// All specs must transmit the same number of entries per node.
pub fn compare_sparsifiers(obj: &dyn Objective, base: &TrainConfig, specs: &[SparsifierSpec], seeds: &[u64]) -> Result<ComparisonTable> {
    if specs.is_empty() || seeds.is_empty() {
        return Err(Error::EmptyInput);
    }
    let budget = specs[0].budget();
    if let Some(bad) = specs.iter().find(|s| s.budget() != budget) {
        return Err(Error::InvalidArgument(format!(
            "{} sends {} entries but {} sends {budget}",
            bad.name(),
            bad.budget(),
            specs[0].name()
        )));
    }
    let rows = specs
        .iter()
        .map(|spec| {
            let mut loss = RunningStats::new();
            let mut grad = RunningStats::new();
            let mut final_losses = Vec::with_capacity(seeds.len());
            let mut comm = 0;
            for &seed in seeds {
                let cfg = TrainConfig { sparsifier: Some(*spec), seed, ..base.clone() };
                let out = train(obj, &cfg)?;
                let last = out.final_metrics().ok_or(Error::EmptyInput)?;
                loss.push(last.loss);
                grad.push(last.grad_norm_sq);
                final_losses.push(last.loss);
                comm = last.comm_entries;
            }
            Ok(ComparisonRow {
                spec: *spec,
                comm_entries_per_round: comm,
                seeds: seeds.len(),
                mean_final_loss: loss.mean(),
                std_final_loss: loss.std_dev(),
                mean_final_grad_norm_sq: grad.mean(),
                std_final_grad_norm_sq: grad.std_dev(),
                final_losses,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonTable { rows })
}

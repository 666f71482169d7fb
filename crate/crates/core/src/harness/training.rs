use rayon::prelude::*;

use super::config::{ExperimentConfig, ModeName, ObjectiveConfig, SparsifierName};
use super::output::{real, Table};
use super::{point_label, HarnessError};
use crate::rng::stream;
use crate::sgdsim::{
    compare_sparsifiers, train as run_training, AggregationMode, Logistic, LrSchedule, Objective, Quadratic, TinyMlp,
    TrainConfig, WeightInit,
};
use crate::sparsify::SparsifierSpec;

pub(crate) fn build_objective(oc: &ObjectiveConfig) -> Box<dyn Objective> {
    match *oc {
        ObjectiveConfig::Quadratic { d, samples, noise, curvature_min, curvature_max, seed } => {
            Box::new(Quadratic::spread(d, samples, noise, curvature_min, curvature_max, &mut stream(seed, 0)))
        }
        ObjectiveConfig::SparseBernoulli { d, s, samples, p_head, p_tail, seed } => {
            Box::new(Quadratic::sparse_bernoulli(d, s, samples, p_head, p_tail, &mut stream(seed, 0)))
        }
        ObjectiveConfig::Logistic { d, samples, lambda, seed } => Box::new(Logistic::synthetic(samples, d, lambda, &mut stream(seed, 0))),
        ObjectiveConfig::Mlp { ref layers, samples, seed } => {
            Box::new(TinyMlp::synthetic(layers.clone(), samples, &mut stream(seed, 0)))
        }
    }
}

fn objective(cfg: &ExperimentConfig) -> Result<Box<dyn Objective>, HarnessError> {
    let oc = cfg.objective.as_ref().ok_or_else(|| HarnessError::missing("objective"))?;
    let bad = |m: &str| Err(HarnessError::invalid("objective", m.to_string()));
    match oc {
        ObjectiveConfig::Quadratic { d, curvature_min, curvature_max, .. } => {
            if *d == 0 || !(*curvature_min > 0.0) || curvature_max < curvature_min {
                return bad("quadratic needs d >= 1 and 0 < curvature_min <= curvature_max");
            }
        }
        ObjectiveConfig::SparseBernoulli { d, s, samples, p_head, p_tail, .. } => {
            if *d == 0 || s > d || *samples == 0 || !(0.0..=1.0).contains(p_head) || !(0.0..=1.0).contains(p_tail) {
                return bad("sparse_bernoulli needs s <= d, samples >= 1 and probabilities in [0, 1]");
            }
        }
        ObjectiveConfig::Logistic { d, samples, lambda, .. } => {
            if *d == 0 || *samples == 0 || *lambda < 0.0 {
                return bad("logistic needs d, samples >= 1 and lambda >= 0");
            }
        }
        ObjectiveConfig::Mlp { layers, samples, .. } => {
            if layers.len() < 2 || layers.contains(&0) || *samples == 0 {
                return bad("mlp needs at least two nonzero layer sizes and samples >= 1");
            }
        }
    }
    Ok(build_objective(oc))
}

fn schedule(cfg: &ExperimentConfig) -> Result<LrSchedule, HarnessError> {
    match (cfg.lr, cfg.lr_chat) {
        (Some(_), Some(_)) => Err(HarnessError::invalid("lr_chat", "set either `lr` or `lr_chat`, not both")),
        (None, Some(chat)) => Ok(LrSchedule::SqrtHorizon { chat }),
        (Some(lr), None) if cfg.lr_breakpoints.is_empty() => Ok(LrSchedule::Constant(lr)),
        (Some(lr), None) => Ok(LrSchedule::Piecewise { initial: lr, breakpoints: cfg.lr_breakpoints.clone() }),
        (None, None) => Err(HarnessError::missing("lr")),
    }
}

fn spec_for(name: SparsifierName, k: usize, r: usize) -> SparsifierSpec {
    match name {
        SparsifierName::RtopK => SparsifierSpec::RTopK { r, k },
        SparsifierName::TopR => SparsifierSpec::TopR { r: k },
        SparsifierName::RandomK => SparsifierSpec::RandomK { k },
    }
}

/// Training config shared by every run, with the sparsifier left to the
/// caller.
fn base_config(cfg: &ExperimentConfig, k: usize) -> Result<TrainConfig, HarnessError> {
    let nodes = ExperimentConfig::require(cfg.nodes, "nodes")?;
    let steps = ExperimentConfig::require(cfg.steps, "steps")?;
    let mut tc = TrainConfig::new(nodes, k, steps, schedule(cfg)?);
    tc.batch = cfg.batch;
    tc.r = cfg.r;
    tc.mode = match cfg.mode {
        ModeName::ErrorFeedback => AggregationMode::ErrorFeedbackMean,
        ModeName::UnbiasedRescale => AggregationMode::UnbiasedRescale,
    };
    if let Some(scale) = cfg.init_scale {
        tc.init = WeightInit::Uniform { scale };
    }
    Ok(tc)
}

fn window(cfg: &ExperimentConfig, nodes: usize, k: usize, d: usize) -> usize {
    cfg.r.unwrap_or((nodes * k).min(d))
}

fn seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    if cfg.seeds.is_empty() {
        vec![cfg.seed]
    } else {
        cfg.seeds.clone()
    }
}

pub(super) fn train(cfg: &ExperimentConfig) -> Result<(Table, Vec<String>), HarnessError> {
    let obj = objective(cfg)?;
    let d = obj.dim();
    let ks = ExperimentConfig::nonempty(&cfg.k, "k")?;
    let name = cfg.sparsifier.unwrap_or(SparsifierName::RtopK);
    let mut runs = Vec::new();
    for &k in ks {
        for seed in seeds(cfg) {
            let mut tc = base_config(cfg, k)?;
            let r = window(cfg, tc.nodes, k, d);
            tc.sparsifier = Some(spec_for(name, k, r));
            tc.seed = seed;
            let label = point_label(&[("sparsifier", tc.sparsifier.unwrap().name().into()), ("k", k.to_string()), ("seed", seed.to_string())]);
            tc.validate(d).map_err(|e| HarnessError::Precondition { point: label.clone(), source: e })?;
            runs.push((label, tc));
        }
    }
    let outputs = runs
        .par_iter()
        .map(|(_, tc)| run_training(obj.as_ref(), tc).map_err(HarnessError::Runtime))
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(&[
        "sparsifier", "r", "k", "seed", "round", "lr", "loss", "grad_norm_sq", "memory_norm_sq", "comm_entries",
    ]);
    let mut lines = Vec::new();
    for ((label, tc), out) in runs.iter().zip(&outputs) {
        let spec = tc.sparsifier_for(d);
        let r = match spec {
            SparsifierSpec::RTopK { r, .. } | SparsifierSpec::TopR { r } => r,
            SparsifierSpec::RandomK { .. } => d,
        };
        for m in &out.metrics {
            table.push(vec![
                spec.name().to_string(),
                r.to_string(),
                tc.k.to_string(),
                tc.seed.to_string(),
                m.round.to_string(),
                real(m.lr),
                real(m.loss),
                real(m.grad_norm_sq),
                real(m.memory_norm_sq),
                m.comm_entries.to_string(),
            ]);
        }
        if let Some(last) = out.final_metrics() {
            lines.push(format!("{label} final_loss={:.6e} final_grad_norm_sq={:.3e}", last.loss, last.grad_norm_sq));
        }
    }
    Ok((table, lines))
}

pub(super) fn compare(cfg: &ExperimentConfig) -> Result<(Table, Vec<String>), HarnessError> {
    let obj = objective(cfg)?;
    let d = obj.dim();
    let ks = ExperimentConfig::nonempty(&cfg.k, "k")?;
    let names = ExperimentConfig::nonempty(&cfg.sparsifiers, "sparsifiers")?;
    let seeds = seeds(cfg);
    let mut table = Table::new(&[
        "sparsifier", "r", "k", "seeds", "comm_entries", "mean_final_loss", "std_final_loss", "mean_final_grad_norm_sq",
        "std_final_grad_norm_sq",
    ]);
    let mut lines = Vec::new();
    for &k in ks {
        let base = base_config(cfg, k)?;
        let r = window(cfg, base.nodes, k, d);
        let specs: Vec<SparsifierSpec> = names.iter().map(|&n| spec_for(n, k, r)).collect();
        for spec in &specs {
            let probe = TrainConfig { sparsifier: Some(*spec), ..base.clone() };
            probe.validate(d).map_err(|e| HarnessError::Precondition {
                point: point_label(&[("sparsifier", spec.name().into()), ("k", k.to_string())]),
                source: e,
            })?;
        }
        let result = compare_sparsifiers(obj.as_ref(), &base, &specs, &seeds).map_err(HarnessError::Runtime)?;
        for row in &result.rows {
            let r = match row.spec {
                SparsifierSpec::RTopK { r, .. } | SparsifierSpec::TopR { r } => r,
                SparsifierSpec::RandomK { .. } => d,
            };
            table.push(vec![
                row.spec.name().to_string(),
                r.to_string(),
                k.to_string(),
                row.seeds.to_string(),
                row.comm_entries_per_round.to_string(),
                real(row.mean_final_loss),
                real(row.std_final_loss),
                real(row.mean_final_grad_norm_sq),
                real(row.std_final_grad_norm_sq),
            ]);
            lines.push(format!(
                "{} final_loss={:.6e}±{:.2e}",
                point_label(&[("sparsifier", row.spec.name().into()), ("k", k.to_string())]),
                row.mean_final_loss,
                row.std_final_loss
            ));
        }
    }
    Ok((table, lines))
}

use std::ops::Range;

use rand::Rng;
use rayon::prelude::*;

use super::objective::Objective;
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};
use crate::sparsify::{SparseUpdate, SparsifierSpec};

/// How node updates are combined at the aggregator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AggregationMode {
    /// Plain mean of the sparsified corrected gradients; each node keeps the
    /// unsent residual in memory.
    #[default]
    ErrorFeedbackMean,
    /// Mean of the sparsified raw gradients scaled by the operator's inverse
    /// inclusion probability. Memory stays at zero.
    UnbiasedRescale,
}

/// Step size as a function of the round index.
#[derive(Debug, Clone, PartialEq)]
pub enum LrSchedule {
    Constant(f64),
    /// `initial` until the first breakpoint; from round `t_i` on, the rate is
    /// the value paired with the latest breakpoint `t_i ≤ t`.
    Piecewise { initial: f64, breakpoints: Vec<(usize, f64)> },
    /// `Ĉ/√T` for a run of `T` rounds.
    SqrtHorizon { chat: f64 },
}

impl LrSchedule {
    pub fn at(&self, t: usize, horizon: usize) -> f64 {
        match self {
            LrSchedule::Constant(eta) => *eta,
            LrSchedule::Piecewise { initial, breakpoints } => breakpoints
                .iter()
                .filter(|(start, _)| *start <= t)
                .max_by_key(|(start, _)| *start)
                .map_or(*initial, |(_, eta)| *eta),
            LrSchedule::SqrtHorizon { chat } => chat / (horizon as f64).sqrt(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            LrSchedule::Constant(eta) => *eta > 0.0 && eta.is_finite(),
            LrSchedule::Piecewise { initial, breakpoints } => {
                *initial > 0.0 && initial.is_finite() && breakpoints.iter().all(|(_, e)| *e > 0.0 && e.is_finite())
            }
            LrSchedule::SqrtHorizon { chat } => *chat > 0.0 && chat.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("learning rates must be positive and finite: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum WeightInit {
    #[default]
    Zeros,
    /// Each coordinate uniform in `[-scale, scale]`, drawn from the run seed.
    Uniform { scale: f64 },
    Given(Vec<f64>),
}

/// How the shared dataset is split across nodes.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Partition {
    /// Equal contiguous shards; every node sees the whole dataset when there
    /// are fewer samples than nodes.
    #[default]
    Contiguous,
    Explicit(Vec<Range<usize>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub nodes: usize,
    pub batch: usize,
    pub k: usize,
    /// Defaults to `min(nodes·k, d)`.
    pub r: Option<usize>,
    /// Replaces rTop-k(r, k) when set.
    pub sparsifier: Option<SparsifierSpec>,
    pub lr: LrSchedule,
    pub steps: usize,
    pub mode: AggregationMode,
    pub init: WeightInit,
    pub partition: Partition,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(nodes: usize, k: usize, steps: usize, lr: LrSchedule) -> Self {
        Self {
            nodes,
            batch: 1,
            k,
            r: None,
            sparsifier: None,
            lr,
            steps,
            mode: AggregationMode::default(),
            init: WeightInit::default(),
            partition: Partition::default(),
            seed: 0,
        }
    }

    /// The operator each node applies.
    pub fn sparsifier_for(&self, d: usize) -> SparsifierSpec {
        self.sparsifier.unwrap_or(SparsifierSpec::RTopK {
            r: self.r.unwrap_or((self.nodes * self.k).min(d)),
            k: self.k,
        })
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.nodes == 0 || self.batch == 0 {
            return Err(Error::InvalidArgument("need at least one node and a batch of at least one".into()));
        }
        self.sparsifier_for(d).validate(d)?;
        self.lr.validate()?;
        match &self.init {
            WeightInit::Given(w) if w.len() != d => return Err(Error::DimensionMismatch { expected: d, got: w.len() }),
            WeightInit::Uniform { scale } if !(scale.is_finite() && *scale > 0.0) => {
                return Err(Error::InvalidArgument(format!("init scale must be positive, got {scale}")))
            }
            _ => {}
        }
        if let Partition::Explicit(ranges) = &self.partition {
            if ranges.len() != self.nodes {
                return Err(Error::LengthMismatch { expected: self.nodes, got: ranges.len() });
            }
        }
        Ok(())
    }

    fn initial_weights(&self, d: usize) -> Vec<f64> {
        match &self.init {
            WeightInit::Zeros => vec![0.0; d],
            WeightInit::Uniform { scale } => {
                let mut rng = stream(self.seed, u64::MAX);
                (0..d).map(|_| rng.gen_range(-scale..=*scale)).collect()
            }
            WeightInit::Given(w) => w.clone(),
        }
    }
}

/// One simulated worker.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub id: usize,
    pub shard: Range<usize>,
    pub memory: Vec<f64>,
    pub rng: Stream,
}

impl NodeState {
    pub fn new(id: usize, shard: Range<usize>, d: usize, seed: u64) -> Self {
        Self { id, shard, memory: vec![0.0; d], rng: stream(seed, id as u64) }
    }
}

/// Nodes with zero memory and their shards of `num_samples` samples.
pub fn make_nodes(cfg: &TrainConfig, d: usize, num_samples: usize) -> Result<Vec<NodeState>> {
    let shards: Vec<Range<usize>> = match &cfg.partition {
        Partition::Contiguous if num_samples < cfg.nodes => vec![0..num_samples; cfg.nodes],
        Partition::Contiguous => (0..cfg.nodes)
            .map(|i| (i * num_samples / cfg.nodes)..((i + 1) * num_samples / cfg.nodes))
            .collect(),
        Partition::Explicit(ranges) => ranges.clone(),
    };
    for s in &shards {
        if s.is_empty() || s.end > num_samples {
            return Err(Error::InvalidArgument(format!("shard {s:?} is empty or exceeds {num_samples} samples")));
        }
    }
    Ok(shards.into_iter().enumerate().map(|(i, s)| NodeState::new(i, s, d, cfg.seed)).collect())
}

/// Mean gradient over `batch` samples drawn uniformly with replacement from
/// the node's shard.
pub fn local_gradient(obj: &dyn Objective, node: &mut NodeState, w: &[f64], batch: usize) -> Vec<f64> {
    let mut g = vec![0.0; obj.dim()];
    for _ in 0..batch {
        let i = node.rng.gen_range(node.shard.clone());
        obj.add_sample_gradient(w, i, &mut g);
    }
    if batch > 1 {
        g.iter_mut().for_each(|v| *v /= batch as f64);
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundMetrics {
    pub round: usize,
    pub lr: f64,
    /// `f` at the weights after the update.
    pub loss: f64,
    pub grad_norm_sq: f64,
    pub memory_norm_sq: f64,
    pub comm_entries: usize,
}

/// What a node computed in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRound {
    /// Minibatch gradient before error correction.
    pub gradient: Vec<f64>,
    /// Gradient plus the memory carried into the round.
    pub corrected: Vec<f64>,
    pub sent: SparseUpdate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub metrics: RoundMetrics,
    pub nodes: Vec<NodeRound>,
}

fn squared_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// One synchronous round: every node sparsifies its corrected gradient, the
/// aggregator averages in node order, and `w` takes one step.
pub fn sgd_round(nodes: &mut [NodeState], obj: &dyn Objective, w: &mut [f64], cfg: &TrainConfig, t: usize) -> Result<RoundReport> {
    let d = obj.dim();
    if w.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: w.len() });
    }
    if let Some(j) = w.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState { round: t, what: format!("weight {j} is {} before the step", w[j]) });
    }
    let spec = cfg.sparsifier_for(d);
    let mode = cfg.mode;
    let weights: &[f64] = w;
    let per_node: Vec<NodeRound> = nodes
        .par_iter_mut()
        .map(|node| -> Result<NodeRound> {
            let gradient = local_gradient(obj, node, weights, cfg.batch);
            let corrected = match mode {
                AggregationMode::ErrorFeedbackMean => gradient.iter().zip(&node.memory).map(|(g, m)| g + m).collect(),
                AggregationMode::UnbiasedRescale => gradient.clone(),
            };
            let sent = spec.apply(&corrected, &mut node.rng)?;
            if mode == AggregationMode::ErrorFeedbackMean {
                node.memory.copy_from_slice(&corrected);
                for &(i, _) in sent.entries() {
                    node.memory[i] = 0.0;
                }
            }
            Ok(NodeRound { gradient, corrected, sent })
        })
        .collect::<Result<_>>()?;

    let scale = match mode {
        AggregationMode::ErrorFeedbackMean => 1.0,
        AggregationMode::UnbiasedRescale => spec.rescale(d),
    } / nodes.len() as f64;
    let mut aggregate = vec![0.0; d];
    for nr in &per_node {
        nr.sent.add_scaled_to(&mut aggregate, scale);
    }
    let lr = cfg.lr.at(t, cfg.steps);
    for (wj, a) in w.iter_mut().zip(&aggregate) {
        *wj -= lr * a;
    }

    if let Some(j) = w.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState {
            round: t,
            what: format!("weight {j} became {} (lr {lr}, aggregate {})", w[j], aggregate[j]),
        });
    }
    let memory_norm_sq: f64 = nodes.iter().map(|n| squared_norm(&n.memory)).sum();
    if !memory_norm_sq.is_finite() {
        return Err(Error::NonFiniteState { round: t, what: "node memory overflowed".into() });
    }
    let metrics = RoundMetrics {
        round: t,
        lr,
        loss: obj.loss(w),
        grad_norm_sq: squared_norm(&obj.gradient(w)),
        memory_norm_sq,
        comm_entries: nodes.len() * spec.budget(),
    };
    Ok(RoundReport { metrics, nodes: per_node })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub metrics: Vec<RoundMetrics>,
    pub weights: Vec<f64>,
}

impl TrainOutput {
    pub fn final_metrics(&self) -> Option<&RoundMetrics> {
        self.metrics.last()
    }
}

/// Runs `cfg.steps` rounds from the seeded initial weights.
pub fn train(obj: &dyn Objective, cfg: &TrainConfig) -> Result<TrainOutput> {
    let d = obj.dim();
    cfg.validate(d)?;
    let mut nodes = make_nodes(cfg, d, obj.num_samples())?;
    let mut w = cfg.initial_weights(d);
    let mut metrics = Vec::with_capacity(cfg.steps);
    for t in 0..cfg.steps {
        metrics.push(sgd_round(&mut nodes, obj, &mut w, cfg, t)?.metrics);
    }
    Ok(TrainOutput { metrics, weights: w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sgdsim::objective::Quadratic;

    fn noisy_quadratic(d: usize, samples: usize, seed: u64) -> Quadratic {
        let mut rng = stream(seed, 0);
        let diag: Vec<f64> = (0..d).map(|j| 0.5 + j as f64 / d as f64).collect();
        let b: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Quadratic::diagonal(diag, b).with_uniform_noise(samples, 0.3, None, &mut rng)
    }

    #[test]
    fn schedules() {
        let p = LrSchedule::Piecewise { initial: 0.1, breakpoints: vec![(10, 0.05), (20, 0.01)] };
        assert_eq!(p.at(0, 100), 0.1);
        assert_eq!(p.at(9, 100), 0.1);
        assert_eq!(p.at(10, 100), 0.05);
        assert_eq!(p.at(99, 100), 0.01);
        assert_eq!(LrSchedule::SqrtHorizon { chat: 2.0 }.at(3, 100), 0.2);
    }

    #[test]
    fn default_window_is_nodes_times_k() {
        let cfg = TrainConfig::new(5, 5, 1, LrSchedule::Constant(0.1));
        assert_eq!(cfg.sparsifier_for(100), SparsifierSpec::RTopK { r: 25, k: 5 });
        assert_eq!(cfg.sparsifier_for(12), SparsifierSpec::RTopK { r: 12, k: 5 });
    }

    #[test]
    fn contiguous_shards() {
        let cfg = TrainConfig::new(3, 1, 1, LrSchedule::Constant(0.1));
        let nodes = make_nodes(&cfg, 2, 10).unwrap();
        let shards: Vec<_> = nodes.iter().map(|n| n.shard.clone()).collect();
        assert_eq!(shards, vec![0..3, 3..6, 6..10]);
        assert!(make_nodes(&cfg, 2, 1).unwrap().iter().all(|n| n.shard == (0..1)));
    }

    #[test]
    fn deterministic_gradient_ignores_batch() {
        let q = Quadratic::diagonal(vec![1.0; 3], vec![0.0; 3]);
        let cfg = TrainConfig::new(1, 1, 1, LrSchedule::Constant(0.1));
        let mut node = make_nodes(&cfg, 3, 1).unwrap().remove(0);
        let w = [1.5, -2.0, 0.25];
        for b in [1, 4, 7] {
            assert_eq!(local_gradient(&q, &mut node, &w, b), w.to_vec());
        }
    }

    #[test]
    fn minibatch_gradient_is_unbiased() {
        let q = noisy_quadratic(4, 8, 3);
        let cfg = TrainConfig::new(1, 1, 1, LrSchedule::Constant(0.1));
        let mut node = make_nodes(&cfg, 4, 8).unwrap().remove(0);
        let w = [0.3, -0.1, 0.8, 0.0];
        let full = q.gradient(&w);
        let mut stats = crate::stats::VectorStats::new(4);
        for _ in 0..10_000 {
            stats.push(&local_gradient(&q, &mut node, &w, 2));
        }
        for j in 0..4 {
            let c = stats.component(j);
            assert!((c.mean() - full[j]).abs() <= 4.0 * c.std_error(), "coordinate {j}");
        }
    }

    #[test]
    fn two_coordinate_branches() {
        // n=1, d=2, k=1, r=2, g=(3,1): one coordinate is sent, the other
        // stays in memory.
        let q = Quadratic::diagonal(vec![1.0, 1.0], vec![-3.0, -1.0]);
        let mut cfg = TrainConfig::new(1, 1, 1, LrSchedule::Constant(0.5));
        cfg.r = Some(2);
        let mut seen = [0usize; 2];
        for seed in 0..400 {
            cfg.seed = seed;
            let mut nodes = make_nodes(&cfg, 2, 1).unwrap();
            let mut w = vec![0.0, 0.0];
            let rep = sgd_round(&mut nodes, &q, &mut w, &cfg, 0).unwrap();
            let sent = rep.nodes[0].sent.entries().to_vec();
            match sent.as_slice() {
                [(0, v)] => {
                    assert_eq!(*v, 3.0);
                    assert_eq!(nodes[0].memory, vec![0.0, 1.0]);
                    seen[0] += 1;
                }
                [(1, v)] => {
                    assert_eq!(*v, 1.0);
                    assert_eq!(nodes[0].memory, vec![3.0, 0.0]);
                    seen[1] += 1;
                }
                other => panic!("unexpected selection {other:?}"),
            }
        }
        assert!(seen[0] > 150 && seen[1] > 150, "{seen:?}");
    }

    #[test]
    fn error_feedback_conserves_mass() {
        let q = noisy_quadratic(20, 40, 9);
        let mut cfg = TrainConfig::new(4, 2, 200, LrSchedule::Constant(0.05));
        cfg.batch = 3;
        let mut nodes = make_nodes(&cfg, 20, 40).unwrap();
        let mut w = vec![1.0; 20];
        for t in 0..cfg.steps {
            let before: Vec<Vec<f64>> = nodes.iter().map(|n| n.memory.clone()).collect();
            let rep = sgd_round(&mut nodes, &q, &mut w, &cfg, t).unwrap();
            for (i, nr) in rep.nodes.iter().enumerate() {
                let sent = nr.sent.to_dense();
                for j in 0..20 {
                    let lhs = nodes[i].memory[j] + sent[j];
                    let rhs = nr.gradient[j] + before[i][j];
                    assert!((lhs - rhs).abs() <= 1e-12, "round {t} node {i} coord {j}");
                }
            }
        }
    }

    #[test]
    fn no_compression_keeps_memory_zero() {
        let q = noisy_quadratic(6, 12, 4);
        let mut cfg = TrainConfig::new(3, 6, 50, LrSchedule::Constant(0.1));
        cfg.r = Some(6);
        let mut nodes = make_nodes(&cfg, 6, 12).unwrap();
        let mut w = vec![0.5; 6];
        for t in 0..cfg.steps {
            sgd_round(&mut nodes, &q, &mut w, &cfg, t).unwrap();
            assert!(nodes.iter().all(|n| n.memory.iter().all(|&m| m == 0.0)));
        }
    }

    #[test]
    fn unbiased_rescale_leaves_memory_untouched() {
        let q = noisy_quadratic(10, 10, 5);
        let mut cfg = TrainConfig::new(2, 2, 20, LrSchedule::Constant(0.05));
        cfg.mode = AggregationMode::UnbiasedRescale;
        let out = train(&q, &cfg).unwrap();
        assert!(out.metrics.iter().all(|m| m.memory_norm_sq == 0.0));
    }

    #[test]
    fn full_communication_contracts_geometrically() {
        let diag = vec![0.5, 1.0, 2.0];
        let b = vec![1.0, -2.0, 0.5];
        let q = Quadratic::diagonal(diag.clone(), b);
        let wstar = q.minimizer().unwrap();
        let eta = 0.4;
        let mut cfg = TrainConfig::new(5, 3, 30, LrSchedule::Constant(eta));
        cfg.init = WeightInit::Uniform { scale: 1.0 };
        let w0 = cfg.initial_weights(3);
        let out = train(&q, &cfg).unwrap();
        for j in 0..3 {
            let factor = 1.0 - eta * diag[j];
            let predicted = wstar[j] + factor.powi(30) * (w0[j] - wstar[j]);
            assert!((out.weights[j] - predicted).abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let q = Quadratic::diagonal(vec![1.0; 2], vec![1.0; 2]);
        let mut cfg = TrainConfig::new(1, 2, 5000, LrSchedule::Constant(5.0));
        cfg.init = WeightInit::Given(vec![2.0, -1.0]);
        match train(&q, &cfg) {
            Err(Error::NonFiniteState { round, .. }) => assert!(round > 10),
            other => panic!("expected NonFiniteState, got {other:?}"),
        }
    }

    #[test]
    fn identical_seeds_identical_series() {
        let q = noisy_quadratic(30, 60, 1);
        let mut cfg = TrainConfig::new(3, 3, 100, LrSchedule::Constant(0.05));
        cfg.seed = 77;
        cfg.batch = 2;
        cfg.init = WeightInit::Uniform { scale: 1.0 };
        let a = train(&q, &cfg).unwrap();
        let b = train(&q, &cfg).unwrap();
        let bits = |o: &TrainOutput| o.metrics.iter().map(|m| (m.loss.to_bits(), m.grad_norm_sq.to_bits())).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.weights, b.weights);
    }

    #[test]
    fn rejects_bad_configs() {
        let q = Quadratic::diagonal(vec![1.0; 4], vec![0.0; 4]);
        let mut cfg = TrainConfig::new(2, 5, 1, LrSchedule::Constant(0.1));
        assert!(train(&q, &cfg).is_err());
        cfg.k = 2;
        cfg.lr = LrSchedule::Constant(-1.0);
        assert!(train(&q, &cfg).is_err());
        cfg.lr = LrSchedule::Constant(0.1);
        cfg.init = WeightInit::Given(vec![0.0; 3]);
        assert!(matches!(train(&q, &cfg), Err(Error::DimensionMismatch { .. })));
    }
}

//! Synchronous distributed SGD with sparsified, error-compensated updates.
//!
//! `n` simulated nodes share the weights. Each round every node draws a
//! minibatch gradient, adds its memory, sparsifies, and keeps the residual;
//! the aggregator averages the sparse updates in node order. Nodes run in
//! parallel but the result does not depend on scheduling.

mod bounds;
mod compare;
mod objective;
mod train;

pub use bounds::{corollary_bound, theorem3_bound, ConvergenceBoundInputs};
pub use compare::{compare_sparsifiers, ComparisonRow, ComparisonTable};
pub use objective::{Curvature, Logistic, Objective, Quadratic, TinyMlp};
pub use train::{
    local_gradient, make_nodes, sgd_round, train, AggregationMode, LrSchedule, NodeRound, NodeState, Partition,
    RoundMetrics, RoundReport, TrainConfig, TrainOutput, WeightInit,
};

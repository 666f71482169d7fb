//! rTop-k, top-k and random-k at the same per-node budget on an objective
//! whose per-sample gradients are sparse and concentrated on 10 of 500
//! coordinates.
//!
//! cargo run --release --example compare_sparsifiers

use rtopk::rng::stream;
use rtopk::sgdsim::{compare_sparsifiers, LrSchedule, Objective, Quadratic, TrainConfig};
use rtopk::sparsify::SparsifierSpec;

fn main() -> rtopk::Result<()> {
    let obj = Quadratic::sparse_bernoulli(500, 10, 1000, 0.5, 0.002, &mut stream(3, 0));
    let f_star = obj.loss(&obj.minimizer().expect("diagonal curvature"));
    let k = 2;
    let base = TrainConfig::new(5, k, 2000, LrSchedule::Constant(0.05));
    let specs = [SparsifierSpec::RTopK { r: 5 * k, k }, SparsifierSpec::TopR { r: k }, SparsifierSpec::RandomK { k }];
    let table = compare_sparsifiers(&obj, &base, &specs, &[1, 2, 3, 4, 5])?;
    println!("{:<10} {:>8} {:>14} {:>10}", "operator", "entries", "excess loss", "std");
    for row in &table.rows {
        println!(
            "{:<10} {:>8} {:>14.4e} {:>10.2e}",
            row.spec.name(),
            row.comm_entries_per_round,
            row.mean_final_loss - f_star,
            row.std_final_loss
        );
    }
    Ok(())
}

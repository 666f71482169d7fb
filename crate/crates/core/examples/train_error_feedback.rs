//! Five simulated nodes train a 100-dimensional noisy quadratic, each sending
//! 5 of its top-25 error-corrected gradient entries per round.
//!
//! cargo run --release --example train_error_feedback

use rtopk::rng::stream;
use rtopk::sgdsim::{train, LrSchedule, Quadratic, TrainConfig};

fn main() -> rtopk::Result<()> {
    let obj = Quadratic::spread(100, 500, 0.5, 0.1, 1.0, &mut stream(7, 0));
    let schedule = LrSchedule::Piecewise { initial: 0.2, breakpoints: vec![(2000, 0.05), (3500, 0.005)] };
    let mut cfg = TrainConfig::new(5, 5, 5000, schedule);
    cfg.batch = 4;
    println!("sparsifier: {:?}", cfg.sparsifier_for(100));

    let out = train(&obj, &cfg)?;
    for m in out.metrics.iter().filter(|m| m.round % 500 == 0 || m.round + 1 == cfg.steps) {
        println!(
            "round {:>4}  lr {:.3}  loss {:>10.5}  ‖∇f‖² {:.3e}  Σ‖mᵢ‖² {:.3e}",
            m.round, m.lr, m.loss, m.grad_norm_sq, m.memory_norm_sq
        );
    }
    Ok(())
}

//! Evaluate the error-feedback convergence bound and its two order terms as
//! the kept fraction k/d shrinks.
//!
//! cargo run --example convergence_bounds

use rtopk::sgdsim::{corollary_bound, theorem3_bound, ConvergenceBoundInputs};

fn main() -> rtopk::Result<()> {
    let d = 1000.0;
    println!("{:>6} {:>14} {:>12} {:>12}", "k", "bound", "term1", "term2");
    for k in [1000.0, 500.0, 100.0, 10.0] {
        let inp = ConvergenceBoundInputs { l: 1.0, g: 1.0, batch: 32.0, nodes: 8.0, steps: 1e6, k, d, f0_gap: 1.0, chat: 1.0 };
        let (t1, t2) = corollary_bound(1.0, 1.0, 32.0, 8.0, d, k, 1e6);
        println!("{k:>6} {:>14.6e} {t1:>12.4e} {t2:>12.4e}", theorem3_bound(&inp)?);
    }

    let too_fast = ConvergenceBoundInputs { l: 10.0, g: 1.0, batch: 1.0, nodes: 1.0, steps: 100.0, k: 1.0, d: 1.0, f0_gap: 1.0, chat: 1.0 };
    println!("step above 1/(2L): {}", theorem3_bound(&too_fast).unwrap_err());
    Ok(())
}

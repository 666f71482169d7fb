//! top-r, random-k and rTop-k on one vector, with the exact expected
//! compression error of rTop-k against Monte Carlo.
//!
//! cargo run --example sparsifiers

use rtopk::rng::stream;
use rtopk::sparsify::{check_compression, expected_sq_error, random_k, rtop_k, top_r};

fn main() -> rtopk::Result<()> {
    let w = [0.1, -4.0, 0.3, 2.5, -0.2, 3.0, 0.05, -1.0];
    let mut rng = stream(1, 0);
    println!("top-3      {:?}", top_r(&w, 3)?.entries());
    println!("random-2   {:?}", random_k(&w, 2, &mut rng)?.entries());
    println!("rTop-2 of 4 {:?}", rtop_k(&w, 4, 2, &mut rng)?.entries());

    let norm: f64 = w.iter().map(|x| x * x).sum();
    for (r, k) in [(8, 2), (4, 2), (2, 2)] {
        let rep = check_compression(&w, r, k, 20_000, &mut rng)?;
        println!(
            "r={r} k={k}: E error {:.4} (mc {:.4} ± {:.4}), (1 - k/d)·‖w‖² = {:.4}",
            expected_sq_error(&w, r, k)?,
            rep.mc_mean,
            rep.mc_std_error,
            (1.0 - k as f64 / w.len() as f64) * norm
        );
    }
    Ok(())
}

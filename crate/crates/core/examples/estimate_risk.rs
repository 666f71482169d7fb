//! Monte Carlo risk of the distributed estimator next to its closed form and
//! the reference bound curves.
//!
//! cargo run --release --example estimate_risk

use rtopk::codec::make_config;
use rtopk::estimator::{bound_value, centralized_risk, exact_risk, hardest_param, monte_carlo_risk, BoundCurve};
use rtopk::model::Perturbation;

fn main() -> rtopk::Result<()> {
    let (d, s, n) = (64, 8.0, 128);
    let theta = hardest_param(d, s)?;
    println!("{:>4} {:>3} {:>12} {:>12} {:>12} {:>12}", "k", "k'", "monte carlo", "exact", "upper", "centralized");
    for k in [14, 20, 28, 40, 48, 96] {
        let cfg = make_config(d, k)?;
        let mc = monte_carlo_risk(&theta, n, &cfg, 4000, Perturbation::None, 1)?;
        let exact = exact_risk(&theta, n, cfg.kprime())?;
        let upper = bound_value(&BoundCurve::upper(1.0), n, k, d, s, None)
            .map(|v| format!("{v:.4e}"))
            .unwrap_or_else(|_| "-".into());
        println!(
            "{k:>4} {:>3} {:>12.4e} {:>12.4e} {upper:>12} {:>12.4e}",
            cfg.kprime(),
            mc.mean_sq_error,
            exact,
            centralized_risk(&theta, n)
        );
    }
    Ok(())
}

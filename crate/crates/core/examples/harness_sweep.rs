//! Drive the experiment harness from code: run a risk sweep over n, write the
//! CSV, and fit the log-log slope of risk against n.
//!
//! cargo run --release --example harness_sweep

use rtopk::harness::{fit_slope, run_config, ExperimentConfig, Overrides};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::from_toml(
        r#"
        command = "sweep_risk"
        seed = 2024
        n = [16, 32, 64, 128]
        k = [20]
        d = [32]
        s = [4.0]
        trials = 4000
        "#,
    )?;
    let out = std::env::temp_dir().join("rtopk_harness_sweep.csv");
    let outcome = run_config(cfg, &Overrides { seed: None, out: Some(out.clone()) })?;
    for line in &outcome.summary {
        println!("{line}");
    }
    let fit = fit_slope(&out, "n", "risk")?;
    println!("slope of log risk vs log n: {:.3} ± {:.3}", fit.slope, fit.slope_std_error);
    Ok(())
}

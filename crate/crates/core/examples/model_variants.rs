//! Signed and noisy observations: signs travel in extra bits, and uniform
//! noise of half-width below 1/2 is removed exactly by thresholding at 1/2.
//!
//! cargo run --release --example model_variants

use rtopk::codec::{make_config, make_signed_config};
use rtopk::estimator::{exact_risk, monte_carlo_bias};
use rtopk::model::{quantize_perturbed, sample_observation, ParamVector, Perturbation};
use rtopk::rng::stream;

fn main() -> rtopk::Result<()> {
    let mut rng = stream(3, 0);
    let theta = ParamVector::signed(vec![0.5, -0.25, 0.0, 0.125, -0.125, 0.0, 0.0, 0.0], 1.0);
    let noisy = sample_observation(&theta, Perturbation::default_uniform(), &mut rng);
    let clean = quantize_perturbed(&noisy)?;
    println!("noisy values {:.2?}", noisy.perturbed_values().unwrap());
    println!("quantized support {:?} signs {:?}", clean.support(), clean.signs().unwrap());

    let plain = make_config(32, 20)?;
    let signed = make_signed_config(32, 20)?;
    println!("k=20, d=32: k'={} unsigned, k'={} with {} sign bits", plain.kprime(), signed.kprime(), signed.sign_bits());

    let values: Vec<f64> = (0..32).map(|j| if j % 2 == 0 { 0.125 } else { -0.125 }).collect();
    let theta = ParamVector::signed(values, 4.0);
    let bias = monte_carlo_bias(&theta, 64, &signed, 20_000, Perturbation::default_uniform(), 9)?;
    println!(
        "signed + noise: risk {:.4e} (exact {:.4e}), worst component z-score {:.2}",
        bias.risk.mean_sq_error,
        exact_risk(&theta, 64, signed.kprime())?,
        bias.max_z_score()
    );

    let scaled = ParamVector::scaled(vec![0.125; 32], 4.0, 3.0);
    let bias = monte_carlo_bias(&scaled, 64, &plain, 20_000, Perturbation::None, 9)?;
    println!("scaled by 3: mean estimate of coordinate 0 = {:.4} (target 0.375)", bias.means[0]);
    Ok(())
}

use crate::error::{Error, Result};

/// Constants entering the error-feedback convergence bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceBoundInputs {
    /// Smoothness constant.
    pub l: f64,
    /// Bound on the stochastic gradient second moment.
    pub g: f64,
    pub batch: f64,
    pub nodes: f64,
    pub steps: f64,
    pub k: f64,
    pub d: f64,
    /// `E[f(w₀)] − f*`.
    pub f0_gap: f64,
    /// Step constant; the learning rate is `chat/√steps`.
    pub chat: f64,
}

/// Non-convex bound on `E‖∇f(z_T)‖²` for error-feedback SGD with rTop-k:
///
/// `(gap/Ĉ + Ĉ·L·G²/(B·n))·4/√T + 8·(4(1 − γ²)/γ² + 1)·Ĉ²L²G²/T`, `γ = k/d`.
pub fn theorem3_bound(inp: &ConvergenceBoundInputs) -> Result<f64> {
    let ConvergenceBoundInputs { l, g, batch, nodes, steps, k, d, f0_gap, chat } = *inp;
    let fields = [("L", l), ("G", g), ("B", batch), ("n", nodes), ("T", steps), ("k", k), ("d", d), ("f0_gap", f0_gap), ("Chat", chat)];
    if let Some((name, v)) = fields.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")));
    }
    if k > d {
        return Err(Error::InvalidArgument(format!("k={k} exceeds d={d}")));
    }
    let eta = chat / steps.sqrt();
    if eta > 1.0 / (2.0 * l) {
        return Err(Error::HypothesisViolated(format!("step Ĉ/√T = {eta} exceeds 1/(2L) = {}", 1.0 / (2.0 * l))));
    }
    let gamma_sq = (k / d) * (k / d);
    let first = (f0_gap / chat + chat * l * g * g / (batch * nodes)) * 4.0 / steps.sqrt();
    let bracket = 4.0 * (1.0 - gamma_sq) / gamma_sq + 1.0;
    let second = 8.0 * bracket * chat * chat * l * l * g * g / steps;
    Ok(first + second)
}

/// Order terms `(J·G/√(B·n·T), J²·B·n·d²/(k²·T))` with unit constants.
pub fn corollary_bound(j: f64, g: f64, batch: f64, nodes: f64, d: f64, k: f64, steps: f64) -> (f64, f64) {
    let term1 = j * g / (batch * nodes * steps).sqrt();
    let term2 = j * j * batch * nodes * d * d / (k * k * steps);
    (term1, term2)
}

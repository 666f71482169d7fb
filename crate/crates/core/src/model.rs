//! Sparse Bernoulli parameter space, observation sampling and exact count
//! moments.
//!
//! A parameter vector θ lives in `[0,1]^d` with `Σ θⱼ ≤ s`; each node observes
//! `X ~ ∏ Bern(θⱼ)`. Three refinements are supported: signed means in
//! `[-1,1]` with `Σ |θⱼ| ≤ s`, a positive scale `M` on the estimand, and
//! additive bounded zero-mean noise that a quantizer strips back off.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Relative slack allowed on `Σ θⱼ ≤ s`, so that vectors such as `θ = s/d · 1`
/// are not rejected for a last-ulp rounding error.
const SUM_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    Plain,
    Signed,
    /// Observations are unscaled Bernoulli draws; the estimand is `M·θ`.
    Scaled(f64),
}

impl Variant {
    /// Multiplier applied to decoded indicators by the estimator.
    pub fn scale(&self) -> f64 {
        match *self {
            Variant::Scaled(m) => m,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    variant: Variant,
    s: f64,
}

impl ParamVector {
    pub fn new(values: Vec<f64>, variant: Variant, s: f64) -> Self {
        Self { values, variant, s }
    }

    pub fn plain(values: Vec<f64>, s: f64) -> Self {
        Self::new(values, Variant::Plain, s)
    }

    pub fn signed(values: Vec<f64>, s: f64) -> Self {
        Self::new(values, Variant::Signed, s)
    }

    pub fn scaled(values: Vec<f64>, s: f64, m: f64) -> Self {
        Self::new(values, Variant::Scaled(m), s)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn d(&self) -> usize {
        self.values.len()
    }

    /// Inclusion probabilities `|θⱼ|`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.abs()).collect()
    }

    /// The quantity the estimator targets: `θ`, or `M·θ` for the scaled
    /// variant.
    pub fn estimand(&self) -> Vec<f64> {
        let m = self.variant.scale();
        self.values.iter().map(|v| m * v).collect()
    }

    pub fn validate(&self) -> ValidityReport {
        validate_param(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyDimension,
    NonFinite { index: usize },
    OutOfRange { index: usize, value: f64, lo: f64, hi: f64 },
    SumExceeded { sum: f64, s: f64 },
    BudgetBelowOne { s: f64 },
    NonPositiveScale { m: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyDimension => write!(f, "d=0"),
            Violation::NonFinite { index } => write!(f, "θ[{index}] is not finite"),
            Violation::OutOfRange { index, value, lo, hi } => {
                write!(f, "θ[{index}]={value} outside [{lo},{hi}]")
            }
            Violation::SumExceeded { sum, s } => write!(f, "Σθ={sum} > s={s}"),
            Violation::BudgetBelowOne { s } => write!(f, "s={s} < 1"),
            Violation::NonPositiveScale { m } => write!(f, "scale M={m} is not positive"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "OK");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks every constraint of the parameter set and reports each violation.
pub fn validate_param(theta: &ParamVector) -> ValidityReport {
    let mut violations = Vec::new();
    if theta.values.is_empty() {
        violations.push(Violation::EmptyDimension);
    }
    if !(theta.s >= 1.0) {
        violations.push(Violation::BudgetBelowOne { s: theta.s });
    }
    let (lo, hi) = match theta.variant {
        Variant::Signed => (-1.0, 1.0),
        Variant::Plain => (0.0, 1.0),
        Variant::Scaled(m) => {
            if !(m > 0.0 && m.is_finite()) {
                violations.push(Violation::NonPositiveScale { m });
            }
            (0.0, 1.0)
        }
    };
    let mut sum = 0.0;
    for (index, &value) in theta.values.iter().enumerate() {
        if !value.is_finite() {
            violations.push(Violation::NonFinite { index });
            continue;
        }
        if value < lo || value > hi {
            violations.push(Violation::OutOfRange { index, value, lo, hi });
        }
        sum += value.abs();
    }
    if sum > theta.s * (1.0 + SUM_SLACK) {
        violations.push(Violation::SumExceeded { sum, s: theta.s });
    }
    ValidityReport { violations }
}

/// Additive noise model for the continuous-perturbation refinement.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Perturbation {
    #[default]
    None,
    /// Independent `Uniform(-h, h)` per component, `0 < h ≤ ½`.
    Uniform { halfwidth: f64 },
}

impl Perturbation {
    pub const DEFAULT_HALFWIDTH: f64 = 0.49;

    pub fn uniform(halfwidth: f64) -> Result<Self> {
        if !(halfwidth > 0.0 && halfwidth <= 0.5) {
            return Err(Error::InvalidArgument(format!(
                "perturbation halfwidth {halfwidth} outside (0, 1/2]"
            )));
        }
        Ok(Perturbation::Uniform { halfwidth })
    }

    pub fn default_uniform() -> Self {
        Perturbation::Uniform { halfwidth: Self::DEFAULT_HALFWIDTH }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Perturbation::None)
    }
}

/// One node's sample: a sparse binary (optionally signed) vector, plus the
/// dense perturbed values when noise was added.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    d: usize,
    support: Vec<usize>,
    signs: Option<Vec<i8>>,
    perturbed: Option<Vec<f64>>,
}

impl Observation {
    /// Binary observation from a strictly increasing support.
    pub fn binary(d: usize, support: Vec<usize>) -> Result<Self> {
        check_support(d, &support)?;
        Ok(Self { d, support, signs: None, perturbed: None })
    }

    /// Signed observation; `signs[i]` belongs to `support[i]` and must be ±1.
    pub fn signed(d: usize, support: Vec<usize>, signs: Vec<i8>) -> Result<Self> {
        check_support(d, &support)?;
        if signs.len() != support.len() {
            return Err(Error::DimensionMismatch { expected: support.len(), got: signs.len() });
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidArgument("signs must be ±1".into()));
        }
        Ok(Self { d, support, signs: Some(signs), perturbed: None })
    }

    /// Observation that only carries perturbed values `Y = X + Z`.
    /// `signed` records whether the generating model was the signed variant.
    pub fn perturbed(values: Vec<f64>, signed: bool) -> Self {
        let d = values.len();
        Self {
            d,
            support: Vec::new(),
            signs: signed.then(Vec::new),
            perturbed: Some(values),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn signs(&self) -> Option<&[i8]> {
        self.signs.as_deref()
    }

    pub fn perturbed_values(&self) -> Option<&[f64]> {
        self.perturbed.as_deref()
    }

    pub fn is_signed(&self) -> bool {
        self.signs.is_some()
    }

    /// `‖X‖₁` of the binary part.
    pub fn count(&self) -> usize {
        self.support.len()
    }

    /// Dense `{0, ±1}` form of the binary part.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        for (i, &j) in self.support.iter().enumerate() {
            out[j] = match &self.signs {
                Some(s) => s[i] as f64,
                None => 1.0,
            };
        }
        out
    }
}

fn check_support(d: usize, support: &[usize]) -> Result<()> {
    if support.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("support must be strictly increasing".into()));
    }
    if let Some(&last) = support.last() {
        if last >= d {
            return Err(Error::InvalidArgument(format!("support index {last} >= d={d}")));
        }
    }
    Ok(())
}

/// Draws one observation. Component `j` is present with probability `|θⱼ|`
/// and carries `sign(θⱼ)` in the signed variant. With uniform noise, the
/// perturbation is added to the signed binary value of every component.
pub fn sample_observation(theta: &ParamVector, perturb: Perturbation, rng: &mut Stream) -> Observation {
    let signed = theta.variant == Variant::Signed;
    let d = theta.d();
    let mut support = Vec::new();
    let mut signs = signed.then(Vec::new);
    for (j, &v) in theta.values.iter().enumerate() {
        // gen::<f64>() is in [0, 1): p = 0 never fires and p = 1 always does.
        if rng.gen::<f64>() < v.abs() {
            support.push(j);
            if let Some(s) = signs.as_mut() {
                s.push(if v < 0.0 { -1 } else { 1 });
            }
        }
    }
    let perturbed = match perturb {
        Perturbation::None => None,
        Perturbation::Uniform { halfwidth } => {
            let mut y = vec![0.0; d];
            let mut next = 0;
            for (j, yj) in y.iter_mut().enumerate() {
                let mut x = 0.0;
                if support.get(next) == Some(&j) {
                    x = signs.as_ref().map_or(1.0, |s| s[next] as f64);
                    next += 1;
                }
                *yj = x + rng.gen_range(-halfwidth..halfwidth);
            }
            Some(y)
        }
    };
    Observation { d, support, signs, perturbed }
}

/// Maps perturbed values back to a binary observation: component `j` is one
/// iff `|Yⱼ| > ½`, so a value of exactly ½ quantizes to zero. Signed
/// observations keep the sign of `Yⱼ`.
pub fn quantize_perturbed(obs: &Observation) -> Result<Observation> {
    let values = obs.perturbed.as_ref().ok_or(Error::MissingPerturbation)?;
    let mut support = Vec::new();
    let mut signs = obs.signs.as_ref().map(|_| Vec::new());
    for (j, &y) in values.iter().enumerate() {
        if y.abs() > 0.5 {
            support.push(j);
            if let Some(s) = signs.as_mut() {
                s.push(if y < 0.0 { -1 } else { 1 });
            }
        }
    }
    Ok(Observation { d: obs.d, support, signs, perturbed: None })
}

/// Mean and second moment of `‖X‖₁`, a Poisson-binomial count with success
/// probabilities `|θⱼ|`: `E[S] = Σp`, `E[S²] = (Σp)² + Σ p(1-p)`.
pub fn poisson_binomial_moments(theta: &ParamVector) -> (f64, f64) {
    let (mean, var) = theta
        .values
        .iter()
        .map(|v| v.abs())
        .fold((0.0, 0.0), |(m, v), p| (m + p, v + p * (1.0 - p)));
    (mean, mean * mean + var)
}

/// Probability mass function of the Poisson-binomial count, `pmf[c] = P(S = c)`
/// for `c = 0..=d`.
pub fn poisson_binomial_pmf(probs: &[f64]) -> Vec<f64> {
    let mut pmf = vec![0.0; probs.len() + 1];
    pmf[0] = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        for c in (1..=i + 1).rev() {
            pmf[c] = pmf[c] * (1.0 - p) + pmf[c - 1] * p;
        }
        pmf[0] *= 1.0 - p;
    }
    pmf
}

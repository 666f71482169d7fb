//! Unbiased estimator for the subsampling codec, Monte Carlo risk, and
//! reference bound curves.
//!
//! Each decoded message contributes `X̃ᵢ / Sᵢ`, where `Sᵢ = k'/‖Xᵢ‖₁` if the
//! node had to thin its support and 1 otherwise. Conditioned on `‖Xᵢ‖₁` every
//! one survives with probability `Sᵢ`, so the average over nodes is unbiased
//! for θ. The estimate is not clipped by default: clipping lowers the error
//! but breaks unbiasedness.

use rayon::prelude::*;

use crate::codec::{self, CodecConfig, SubsampledObservation};
use crate::error::{Error, Result};
use crate::model::{self, ParamVector, Perturbation, Variant};
use crate::rng::{stream, Stream};
use crate::stats::{RunningStats, VectorStats};

/// Trials per parallel work unit. Units are merged in index order, which
/// keeps results independent of thread scheduling.
const TRIALS_PER_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SubsampleFraction(f64);

impl SubsampleFraction {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `k'/count` when `count > k'`, else 1 (including `count = 0`).
pub fn subsample_fraction(original_count: usize, kprime: usize) -> SubsampleFraction {
    if original_count > kprime {
        SubsampleFraction(kprime as f64 / original_count as f64)
    } else {
        SubsampleFraction(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EstimateOptions {
    /// Clamp each component into the parameter box after averaging.
    pub clip: bool,
}

/// `θ̂ = (1/n) Σᵢ X̃ᵢ / Sᵢ`, with signs for the signed variant and the factor
/// `M` for the scaled one.
pub fn estimate(decoded: &[SubsampledObservation], cfg: &CodecConfig, variant: Variant) -> Result<Vec<f64>> {
    estimate_with(decoded, cfg, variant, EstimateOptions::default())
}

pub fn estimate_with(
    decoded: &[SubsampledObservation],
    cfg: &CodecConfig,
    variant: Variant,
    opts: EstimateOptions,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; cfg.d()];
    accumulate(decoded, cfg, variant, &mut out)?;
    if opts.clip {
        let m = variant.scale();
        let lo = if variant == Variant::Signed { -m } else { 0.0 };
        out.iter_mut().for_each(|v| *v = v.clamp(lo, m));
    }
    Ok(out)
}

fn accumulate(decoded: &[SubsampledObservation], cfg: &CodecConfig, variant: Variant, out: &mut [f64]) -> Result<()> {
    if cfg.is_degenerate() {
        return Err(Error::DegenerateCodec);
    }
    if decoded.is_empty() {
        return Err(Error::EmptyInput);
    }
    out.iter_mut().for_each(|v| *v = 0.0);
    let n = decoded.len() as f64;
    let scale = variant.scale();
    for obs in decoded {
        if obs.d != cfg.d() {
            return Err(Error::DimensionMismatch { expected: cfg.d(), got: obs.d });
        }
        let weight = scale / subsample_fraction(obs.original_count, cfg.kprime()).value() / n;
        match (&obs.signs, variant) {
            (Some(signs), Variant::Signed) => {
                for (&j, &s) in obs.support.iter().zip(signs) {
                    out[j] += s as f64 * weight;
                }
            }
            (None, Variant::Signed) => {
                return Err(Error::InvalidArgument("signed variant needs signed messages".into()))
            }
            _ => obs.support.iter().for_each(|&j| out[j] += weight),
        }
    }
    Ok(())
}

/// Mean squared error of the estimator together with the run's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskEstimate {
    pub mean_sq_error: f64,
    /// Sample standard deviation of the per-trial squared error over `√trials`.
    pub std_error: f64,
    pub trials: usize,
    pub n: usize,
    pub d: usize,
    pub s: f64,
    pub k: usize,
    pub kprime: usize,
}

/// Per-component Monte Carlo mean of θ̂, for bias checks.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasEstimate {
    pub estimand: Vec<f64>,
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub risk: RiskEstimate,
}

impl BiasEstimate {
    /// Largest `|mean − θⱼ| / std_error` over components with nonzero spread.
    /// Components with zero spread must match exactly, otherwise the score is
    /// infinite.
    pub fn max_z_score(&self) -> f64 {
        self.means
            .iter()
            .zip(&self.estimand)
            .zip(&self.std_errors)
            .map(|((m, t), se)| {
                let gap = (m - t).abs();
                if *se > 0.0 {
                    gap / se
                } else if gap <= 1e-12 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

struct TrialAccumulator {
    risk: RunningStats,
    components: VectorStats,
}

/// One round: sample `n` observations, encode, decode and estimate.
/// Returns the estimate in `theta_hat`.
fn run_trial(
    theta: &ParamVector,
    n: usize,
    cfg: &CodecConfig,
    perturb: Perturbation,
    rng: &mut Stream,
    decoded: &mut Vec<SubsampledObservation>,
    theta_hat: &mut [f64],
) -> Result<()> {
    decoded.clear();
    for _ in 0..n {
        let mut obs = model::sample_observation(theta, perturb, rng);
        if !perturb.is_none() {
            obs = model::quantize_perturbed(&obs)?;
        }
        let msg = codec::encode(&obs, cfg, rng)?;
        decoded.push(codec::decode(&msg, cfg)?);
    }
    accumulate(decoded, cfg, theta.variant(), theta_hat)
}

fn run_trials(
    theta: &ParamVector,
    n: usize,
    cfg: &CodecConfig,
    trials: usize,
    perturb: Perturbation,
    seed: u64,
    track_components: bool,
) -> Result<TrialAccumulator> {
    if trials < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 trials, got {trials}")));
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if cfg.is_degenerate() {
        return Err(Error::DegenerateCodec);
    }
    if theta.d() != cfg.d() {
        return Err(Error::DimensionMismatch { expected: cfg.d(), got: theta.d() });
    }
    let report = theta.validate();
    if !report.is_ok() {
        return Err(Error::InvalidArgument(format!("invalid parameter: {report}")));
    }
    let target = theta.estimand();
    let d = cfg.d();
    let chunks = trials.div_ceil(TRIALS_PER_CHUNK);
    let partials: Vec<Result<TrialAccumulator>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = TrialAccumulator {
                risk: RunningStats::new(),
                components: VectorStats::new(if track_components { d } else { 0 }),
            };
            let mut decoded = Vec::with_capacity(n);
            let mut theta_hat = vec![0.0; d];
            let lo = c * TRIALS_PER_CHUNK;
            for t in lo..(lo + TRIALS_PER_CHUNK).min(trials) {
                let mut rng = stream(seed, t as u64);
                run_trial(theta, n, cfg, perturb, &mut rng, &mut decoded, &mut theta_hat)?;
                let err: f64 = theta_hat.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum();
                acc.risk.push(err);
                if track_components {
                    acc.components.push(&theta_hat);
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = TrialAccumulator {
        risk: RunningStats::new(),
        components: VectorStats::new(if track_components { d } else { 0 }),
    };
    for part in partials {
        let part = part?;
        total.risk.merge(&part.risk);
        total.components.merge(&part.components);
    }
    Ok(total)
}

fn risk_from(acc: &RunningStats, theta: &ParamVector, n: usize, cfg: &CodecConfig, trials: usize) -> RiskEstimate {
    RiskEstimate {
        mean_sq_error: acc.mean(),
        std_error: acc.std_error(),
        trials,
        n,
        d: cfg.d(),
        s: theta.s(),
        k: cfg.k(),
        kprime: cfg.kprime(),
    }
}

/// Monte Carlo estimate of `E‖θ̂ − θ‖²` over `trials` independent rounds.
/// Trial `t` draws from stream `(seed, t)`, so results depend only on the
/// seed. Perturbed observations are quantized before encoding.
pub fn monte_carlo_risk(
    theta: &ParamVector,
    n: usize,
    cfg: &CodecConfig,
    trials: usize,
    perturb: Perturbation,
    seed: u64,
) -> Result<RiskEstimate> {
    let acc = run_trials(theta, n, cfg, trials, perturb, seed, false)?;
    Ok(risk_from(&acc.risk, theta, n, cfg, trials))
}

/// Like [`monte_carlo_risk`] but also tracks the per-component mean of θ̂.
pub fn monte_carlo_bias(
    theta: &ParamVector,
    n: usize,
    cfg: &CodecConfig,
    trials: usize,
    perturb: Perturbation,
    seed: u64,
) -> Result<BiasEstimate> {
    let acc = run_trials(theta, n, cfg, trials, perturb, seed, true)?;
    Ok(BiasEstimate {
        estimand: theta.estimand(),
        means: acc.components.means(),
        std_errors: acc.components.std_errors(),
        risk: risk_from(&acc.risk, theta, n, cfg, trials),
    })
}

/// Closed-form risk of the scheme:
/// `E‖θ̂ − θ‖² = (M²/n) (E[max(C, C²/k')] − Σ θⱼ²)` with `C = ‖X‖₁`
/// Poisson-binomial. Exact for every variant; ignores perturbation, which
/// the quantizer removes.
pub fn exact_risk(theta: &ParamVector, n: usize, kprime: usize) -> Result<f64> {
    if kprime == 0 {
        return Err(Error::DegenerateCodec);
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let pmf = model::poisson_binomial_pmf(&theta.probabilities());
    let kp = kprime as f64;
    let e_ratio: f64 = pmf
        .iter()
        .enumerate()
        .map(|(c, p)| {
            let c = c as f64;
            p * c.max(c * c / kp)
        })
        .sum();
    let norm_sq: f64 = theta.values().iter().map(|v| v * v).sum();
    let m = theta.variant().scale();
    Ok(m * m * (e_ratio - norm_sq) / n as f64)
}

/// The flat vector `θⱼ = s/d`, the centre of the hard subfamily
/// `[s/2d, s/d]^d`, used as the default worst-case probe.
pub fn hardest_param(d: usize, s: f64) -> Result<ParamVector> {
    if d < 2 || !(s >= 1.0) || s > d as f64 / 2.0 {
        return Err(Error::InvalidArgument(format!("hardest_param needs d >= 2 and 1 <= s <= d/2, got d={d}, s={s}")));
    }
    Ok(ParamVector::plain(vec![s / d as f64; d], s))
}

/// Risk of the uncompressed sample mean, `Σ θⱼ(1 − θⱼ) / n` (times `M²` for
/// the scaled variant, with `|θⱼ|` for the signed one).
pub fn centralized_risk(theta: &ParamVector, n: usize) -> f64 {
    let m = theta.variant().scale();
    let var: f64 = theta.probabilities().iter().map(|p| p * (1.0 - p)).sum();
    m * m * var / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    UpperThm1,
    LowerThm2,
    Centralized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCurve {
    pub kind: BoundKind,
    /// Unknown universal constant, defaults to 1.
    pub constant: f64,
}

/// A bound evaluated outside the hypotheses under which it is proved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutOfRegime {
    pub reason: String,
}

impl std::fmt::Display for OutOfRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "out of regime: {}", self.reason)
    }
}

impl BoundCurve {
    pub fn new(kind: BoundKind, constant: f64) -> Self {
        Self { kind, constant }
    }

    pub fn upper(constant: f64) -> Self {
        Self::new(BoundKind::UpperThm1, constant)
    }

    pub fn lower(constant: f64) -> Self {
        Self::new(BoundKind::LowerThm2, constant)
    }

    pub fn centralized() -> Self {
        Self::new(BoundKind::Centralized, 1.0)
    }

    /// The bound's formula without its hypotheses. `theta` is only read by
    /// the centralized curve.
    pub fn formula(&self, n: usize, k: usize, d: usize, s: f64, theta: Option<&ParamVector>) -> Option<f64> {
        let (n, k, d) = (n as f64, k as f64, d as f64);
        match self.kind {
            BoundKind::UpperThm1 => Some(self.constant * s * s * d.log2() / (n * k)),
            BoundKind::LowerThm2 => {
                Some(self.constant * (s * s * (d / s).log2() / (n * k)).max(s / n))
            }
            BoundKind::Centralized => theta.map(|t| self.constant * centralized_risk(t, n as usize)),
        }
    }
}

/// Evaluates a bound curve, or reports which hypothesis fails.
pub fn bound_value(
    curve: &BoundCurve,
    n: usize,
    k: usize,
    d: usize,
    s: f64,
    theta: Option<&ParamVector>,
) -> std::result::Result<f64, OutOfRegime> {
    let fail = |reason: String| Err(OutOfRegime { reason });
    if n == 0 || k == 0 || d < 2 || !(s > 0.0) {
        return fail(format!("needs n, k >= 1, d >= 2 and s > 0 (n={n}, k={k}, d={d}, s={s})"));
    }
    let log_d = (d as f64).log2();
    match curve.kind {
        BoundKind::UpperThm1 => {
            if (k as f64) < 2.0 * log_d {
                return fail(format!("k={k} < 2 log2 d = {}", 2.0 * log_d));
            }
            if k as f64 > s * log_d {
                return fail(format!("k={k} > s log2 d = {}", s * log_d));
            }
        }
        BoundKind::LowerThm2 => {
            if s > d as f64 / 2.0 {
                return fail(format!("s={s} > d/2 = {}", d as f64 / 2.0));
            }
            let need = d as f64 * (d as f64 / s).log2();
            if ((n * k) as f64) < need {
                return fail(format!("nk={} < d log2(d/s) = {need}", n * k));
            }
        }
        BoundKind::Centralized => {
            if theta.is_none() {
                return fail("centralized curve needs a parameter vector".into());
            }
        }
    }
    Ok(curve.formula(n, k, d, s, theta).expect("hypotheses checked above"))
}

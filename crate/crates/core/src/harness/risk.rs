use rayon::prelude::*;

use super::config::{BoundFamily, ExperimentConfig, VariantName};
use super::output::{flag, opt_real, real, Table};
use super::{point_label, HarnessError};
use crate::codec::{make_config, make_signed_config, CodecConfig};
use crate::error::Error;
use crate::estimator::{bound_value, exact_risk, hardest_param, monte_carlo_risk, BoundCurve, RiskEstimate};
use crate::model::{ParamVector, Perturbation};
use crate::rng::derive_seed;
use crate::sgdsim::{corollary_bound, theorem3_bound, ConvergenceBoundInputs};

#[derive(Debug, Clone, Copy)]
struct Point {
    n: usize,
    k: usize,
    d: usize,
    s: f64,
}

impl Point {
    fn label(&self) -> String {
        point_label(&[("n", self.n.to_string()), ("k", self.k.to_string()), ("d", self.d.to_string()), ("s", self.s.to_string())])
    }

    fn fail(&self, source: Error) -> HarnessError {
        HarnessError::Precondition { point: self.label(), source }
    }
}

fn grid(cfg: &ExperimentConfig) -> Result<Vec<Point>, HarnessError> {
    let ns = ExperimentConfig::nonempty(&cfg.n, "n")?;
    let ks = ExperimentConfig::nonempty(&cfg.k, "k")?;
    let ds = ExperimentConfig::nonempty(&cfg.d, "d")?;
    let ss = ExperimentConfig::nonempty(&cfg.s, "s")?;
    let mut points = Vec::with_capacity(ns.len() * ks.len() * ds.len() * ss.len());
    for &n in ns {
        for &k in ks {
            for &d in ds {
                for &s in ss {
                    points.push(Point { n, k, d, s });
                }
            }
        }
    }
    Ok(points)
}

/// Bound cells and regime flags for one point.
struct Bounds {
    upper: Option<f64>,
    lower: Option<f64>,
    centralized: f64,
}

impl Bounds {
    fn at(cfg: &ExperimentConfig, p: &Point, theta: &ParamVector) -> Self {
        Bounds {
            upper: bound_value(&BoundCurve::upper(cfg.upper_constant), p.n, p.k, p.d, p.s, None).ok(),
            lower: bound_value(&BoundCurve::lower(cfg.lower_constant), p.n, p.k, p.d, p.s, None).ok(),
            centralized: crate::estimator::centralized_risk(theta, p.n),
        }
    }

    fn cells(&self) -> [String; 3] {
        [opt_real(self.upper), opt_real(self.lower), real(self.centralized)]
    }

    fn flags(&self) -> [String; 2] {
        [flag(self.upper.is_some()), flag(self.lower.is_some())]
    }
}

fn codec_for(p: &Point, signed: bool) -> Result<CodecConfig, HarnessError> {
    let codec = if signed { make_signed_config(p.d, p.k) } else { make_config(p.d, p.k) }.map_err(|e| p.fail(e))?;
    if codec.is_degenerate() {
        return Err(p.fail(Error::DegenerateCodec));
    }
    Ok(codec)
}

fn trials(cfg: &ExperimentConfig) -> Result<usize, HarnessError> {
    let t = ExperimentConfig::require(cfg.trials, "trials")?;
    if t < 100 {
        return Err(HarnessError::invalid("trials", format!("need at least 100 trials, got {t}")));
    }
    Ok(t)
}

fn summary(p: &Point, est: &RiskEstimate) -> String {
    format!("{} kprime={} risk={:.6e} std_err={:.2e}", p.label(), est.kprime, est.mean_sq_error, est.std_error)
}

pub(super) fn sweep_risk(cfg: &ExperimentConfig) -> Result<(Table, Vec<String>), HarnessError> {
    let points = grid(cfg)?;
    let trials = trials(cfg)?;
    let prepared = points
        .iter()
        .map(|p| Ok((codec_for(p, false)?, hardest_param(p.d, p.s).map_err(|e| p.fail(e))?)))
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let results = prepared
        .par_iter()
        .enumerate()
        .map(|(i, (codec, theta))| {
            monte_carlo_risk(theta, points[i].n, codec, trials, Perturbation::None, derive_seed(cfg.seed, i as u64))
                .map_err(HarnessError::Runtime)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(&[
        "n", "k", "d", "s", "trials", "risk", "std_err", "upper_bound", "lower_bound", "centralized", "upper_in_regime",
        "lower_in_regime",
    ]);
    let mut lines = Vec::with_capacity(points.len());
    for ((p, (_, theta)), est) in points.iter().zip(&prepared).zip(&results) {
        let b = Bounds::at(cfg, p, theta);
        let mut row = vec![p.n.to_string(), p.k.to_string(), p.d.to_string(), real(p.s), trials.to_string()];
        row.extend([real(est.mean_sq_error), real(est.std_error)]);
        row.extend(b.cells());
        row.extend(b.flags());
        table.push(row);
        lines.push(summary(p, est));
    }
    Ok((table, lines))
}

pub(super) fn estimate_risk(cfg: &ExperimentConfig) -> Result<(Table, Vec<String>), HarnessError> {
    let points = grid(cfg)?;
    let trials = trials(cfg)?;
    let perturb = match cfg.perturb {
        None => Perturbation::None,
        Some(h) => Perturbation::uniform(h).map_err(|e| HarnessError::invalid("perturb", e.to_string()))?,
    };
    let variant_name = match cfg.variant {
        VariantName::Plain => "plain",
        VariantName::Signed => "signed",
        VariantName::Scaled => "scaled",
    };
    let signed = cfg.variant == VariantName::Signed;
    let prepared = points
        .iter()
        .map(|p| {
            let codec = codec_for(p, signed)?;
            let values = match &cfg.theta {
                Some(v) if v.len() != p.d => {
                    return Err(p.fail(Error::DimensionMismatch { expected: p.d, got: v.len() }));
                }
                Some(v) => v.clone(),
                None => hardest_param(p.d, p.s).map_err(|e| p.fail(e))?.values().to_vec(),
            };
            let theta = match cfg.variant {
                VariantName::Plain => ParamVector::plain(values, p.s),
                VariantName::Signed => ParamVector::signed(values, p.s),
                VariantName::Scaled => ParamVector::scaled(values, p.s, ExperimentConfig::require(cfg.scale, "scale")?),
            };
            let report = theta.validate();
            if !report.is_ok() {
                return Err(p.fail(Error::InvalidArgument(format!("theta is outside the parameter set: {report}"))));
            }
            Ok((codec, theta))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let results = prepared
        .par_iter()
        .enumerate()
        .map(|(i, (codec, theta))| {
            monte_carlo_risk(theta, points[i].n, codec, trials, perturb, derive_seed(cfg.seed, i as u64)).map_err(HarnessError::Runtime)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(&[
        "n", "k", "d", "s", "kprime", "variant", "perturb", "trials", "risk", "std_err", "exact_risk", "upper_bound",
        "lower_bound", "centralized", "upper_in_regime", "lower_in_regime",
    ]);
    let mut lines = Vec::new();
    for ((p, (codec, theta)), est) in points.iter().zip(&prepared).zip(&results) {
        let exact = exact_risk(theta, p.n, codec.kprime()).map_err(HarnessError::Runtime)?;
        let b = Bounds::at(cfg, p, theta);
        let mut row = vec![
            p.n.to_string(),
            p.k.to_string(),
            p.d.to_string(),
            real(p.s),
            codec.kprime().to_string(),
            variant_name.to_string(),
            opt_real(cfg.perturb),
            trials.to_string(),
            real(est.mean_sq_error),
            real(est.std_error),
            real(exact),
        ];
        row.extend(b.cells());
        row.extend(b.flags());
        table.push(row);
        lines.push(format!("{} exact={exact:.6e}", summary(p, est)));
    }
    Ok((table, lines))
}

pub(super) fn bounds(cfg: &ExperimentConfig) -> Result<(Table, Vec<String>), HarnessError> {
    match cfg.bound_family {
        BoundFamily::Risk => risk_bounds(cfg),
        BoundFamily::Convergence => convergence_bounds(cfg),
    }
}

fn risk_bounds(cfg: &ExperimentConfig) -> Result<(Table, Vec<String>), HarnessError> {
    let mut table = Table::new(&[
        "n", "k", "d", "s", "upper_bound", "lower_bound", "centralized", "upper_in_regime", "lower_in_regime",
    ]);
    let mut lines = Vec::new();
    for p in grid(cfg)? {
        if p.d == 0 || !(p.s > 0.0) || p.s > p.d as f64 {
            return Err(p.fail(Error::InvalidArgument("need d >= 1 and 0 < s <= d".into())));
        }
        let theta = ParamVector::plain(vec![p.s / p.d as f64; p.d], p.s);
        let b = Bounds::at(cfg, &p, &theta);
        let mut row = vec![p.n.to_string(), p.k.to_string(), p.d.to_string(), real(p.s)];
        row.extend(b.cells());
        row.extend(b.flags());
        table.push(row);
        lines.push(format!(
            "{} upper={} lower={} centralized={:.6e}",
            p.label(),
            b.upper.map_or("out-of-regime".into(), |v| format!("{v:.6e}")),
            b.lower.map_or("out-of-regime".into(), |v| format!("{v:.6e}")),
            b.centralized
        ));
    }
    Ok((table, lines))
}

fn convergence_bounds(cfg: &ExperimentConfig) -> Result<(Table, Vec<String>), HarnessError> {
    let l = ExperimentConfig::require(cfg.smoothness, "smoothness")?;
    let g = ExperimentConfig::require(cfg.grad_bound, "grad_bound")?;
    let gap = ExperimentConfig::require(cfg.f0_gap, "f0_gap")?;
    let chat = ExperimentConfig::require(cfg.chat, "chat")?;
    let ns = ExperimentConfig::nonempty(&cfg.n, "n")?;
    let ks = ExperimentConfig::nonempty(&cfg.k, "k")?;
    let ds = ExperimentConfig::nonempty(&cfg.d, "d")?;
    let horizons = ExperimentConfig::nonempty(&cfg.horizons, "horizons")?;
    let mut table = Table::new(&[
        "n", "k", "d", "batch", "steps", "theorem3", "theorem3_holds", "corollary_term1", "corollary_term2",
    ]);
    let mut lines = Vec::new();
    for &n in ns {
        for &k in ks {
            for &d in ds {
                for &t in horizons {
                    let inp = ConvergenceBoundInputs {
                        l,
                        g,
                        batch: cfg.batch as f64,
                        nodes: n as f64,
                        steps: t as f64,
                        k: k as f64,
                        d: d as f64,
                        f0_gap: gap,
                        chat,
                    };
                    let label = point_label(&[("n", n.to_string()), ("k", k.to_string()), ("d", d.to_string()), ("steps", t.to_string())]);
                    let value = match theorem3_bound(&inp) {
                        Ok(v) => Some(v),
                        Err(Error::HypothesisViolated(_)) => None,
                        Err(e) => return Err(HarnessError::Precondition { point: label, source: e }),
                    };
                    let (c1, c2) = corollary_bound(1.0, g, cfg.batch as f64, n as f64, d as f64, k as f64, t as f64);
                    table.push(vec![
                        n.to_string(),
                        k.to_string(),
                        d.to_string(),
                        cfg.batch.to_string(),
                        t.to_string(),
                        opt_real(value),
                        flag(value.is_some()),
                        real(c1),
                        real(c2),
                    ]);
                    lines.push(format!("{label} theorem3={}", value.map_or("hypothesis-violated".into(), |v| format!("{v:.6e}"))));
                }
            }
        }
    }
    Ok((table, lines))
}

//! top-r, random-k and rTop-k sparsification.
//!
//! Magnitude ties are broken toward the lower index, so `top_r` is a
//! deterministic function of its input. Values that are exactly zero may be
//! selected but are never stored in a [`SparseUpdate`].

use std::cmp::Ordering;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Sparse vector in `ℝ^d`: sorted `(index, value)` pairs with no stored zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseUpdate {
    d: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseUpdate {
    pub fn empty(d: usize) -> Self {
        Self { d, entries: Vec::new() }
    }

    /// Keeps `w[i]` for every selected `i`; zero values are dropped.
    pub fn from_indices(w: &[f64], mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        let entries = indices.into_iter().filter(|&i| w[i] != 0.0).map(|i| (i, w[i])).collect();
        Self { d: w.len(), entries }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }

    pub fn get(&self, i: usize) -> f64 {
        self.entries
            .binary_search_by_key(&i, |&(j, _)| j)
            .map_or(0.0, |pos| self.entries[pos].1)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    /// `out += scale · self`.
    pub fn add_scaled_to(&self, out: &mut [f64], scale: f64) {
        for &(i, v) in &self.entries {
            out[i] += scale * v;
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum()
    }
}

/// Descending magnitude, then ascending index.
fn by_magnitude(w: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| w[b].abs().total_cmp(&w[a].abs()).then(a.cmp(&b))
}

/// Indices of the `r` largest-magnitude components, in descending magnitude
/// order. Average time is linear in `d` plus `r log r` for the final sort.
pub fn top_r_indices(w: &[f64], r: usize) -> Result<Vec<usize>> {
    let d = w.len();
    if r == 0 || r > d {
        return Err(Error::BadRank(format!("r={r} outside [1, {d}]")));
    }
    let mut idx: Vec<usize> = (0..d).collect();
    let cmp = by_magnitude(w);
    if r < d {
        idx.select_nth_unstable_by(r - 1, &cmp);
        idx.truncate(r);
    }
    idx.sort_unstable_by(&cmp);
    Ok(idx)
}

pub fn top_r(w: &[f64], r: usize) -> Result<SparseUpdate> {
    Ok(SparseUpdate::from_indices(w, top_r_indices(w, r)?))
}

pub fn random_k(w: &[f64], k: usize, rng: &mut Stream) -> Result<SparseUpdate> {
    let d = w.len();
    if k == 0 || k > d {
        return Err(Error::BadRank(format!("k={k} outside [1, {d}]")));
    }
    if k == d {
        return Ok(SparseUpdate::from_indices(w, (0..d).collect()));
    }
    Ok(SparseUpdate::from_indices(w, index::sample(rng, d, k).into_vec()))
}

/// Uniform `k`-subset of the top-`r` support. With `k = r` this is `top_r`
/// and consumes no randomness.
pub fn rtop_k(w: &[f64], r: usize, k: usize, rng: &mut Stream) -> Result<SparseUpdate> {
    check_rk(w.len(), r, k)?;
    let mut top = top_r_indices(w, r)?;
    if k == r {
        return Ok(SparseUpdate::from_indices(w, top));
    }
    partial_shuffle(&mut top, k, rng);
    top.truncate(k);
    Ok(SparseUpdate::from_indices(w, top))
}

/// Partial Fisher–Yates: after the call `buf[..k]` is a uniform `k`-subset.
fn partial_shuffle(buf: &mut [usize], k: usize, rng: &mut Stream) {
    use rand::Rng;
    let n = buf.len();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        buf.swap(i, j);
    }
}

fn check_rk(d: usize, r: usize, k: usize) -> Result<()> {
    if !(1 <= k && k <= r && r <= d) {
        return Err(Error::BadRank(format!("need 1 <= k <= r <= d, got k={k}, r={r}, d={d}")));
    }
    Ok(())
}

/// `E‖w − rTop_k(w)‖² = (1 − k/r) Σ_{top r} wⱼ² + Σ_{rest} wⱼ²`.
pub fn expected_sq_error(w: &[f64], r: usize, k: usize) -> Result<f64> {
    check_rk(w.len(), r, k)?;
    let top = top_r_indices(w, r)?;
    let mut in_top = vec![false; w.len()];
    let head: f64 = top
        .iter()
        .map(|&i| {
            in_top[i] = true;
            w[i] * w[i]
        })
        .sum();
    let tail: f64 = w.iter().zip(&in_top).filter(|(_, &t)| !t).map(|(v, _)| v * v).sum();
    Ok((1.0 - k as f64 / r as f64) * head + tail)
}

/// Which operator to apply, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparsifierSpec {
    TopR { r: usize },
    RandomK { k: usize },
    RTopK { r: usize, k: usize },
}

impl SparsifierSpec {
    pub fn apply(&self, w: &[f64], rng: &mut Stream) -> Result<SparseUpdate> {
        match *self {
            SparsifierSpec::TopR { r } => top_r(w, r),
            SparsifierSpec::RandomK { k } => random_k(w, k, rng),
            SparsifierSpec::RTopK { r, k } => rtop_k(w, r, k, rng),
        }
    }

    /// Number of entries each node transmits.
    pub fn budget(&self) -> usize {
        match *self {
            SparsifierSpec::TopR { r } => r,
            SparsifierSpec::RandomK { k } | SparsifierSpec::RTopK { k, .. } => k,
        }
    }

    /// Inverse inclusion probability of a coordinate inside the operator's
    /// candidate window: 1 for top-r, `d/k` for random-k, `r/k` for rTop-k.
    pub fn rescale(&self, d: usize) -> f64 {
        match *self {
            SparsifierSpec::TopR { .. } => 1.0,
            SparsifierSpec::RandomK { k } => d as f64 / k as f64,
            SparsifierSpec::RTopK { r, k } => r as f64 / k as f64,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match *self {
            SparsifierSpec::TopR { r } => check_rk(d, r, r),
            SparsifierSpec::RandomK { k } => check_rk(d, d, k),
            SparsifierSpec::RTopK { r, k } => check_rk(d, r, k),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SparsifierSpec::TopR { .. } => "top_r",
            SparsifierSpec::RandomK { .. } => "random_k",
            SparsifierSpec::RTopK { .. } => "rtop_k",
        }
    }
}

/// Outcome of [`check_compression`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionReport {
    pub expected: f64,
    pub mc_mean: f64,
    pub mc_std_error: f64,
    /// `(1 − k/d)‖w‖²`.
    pub bound: f64,
    pub mc_agrees: bool,
    pub bound_holds: bool,
}

impl CompressionReport {
    pub fn passed(&self) -> bool {
        self.mc_agrees && self.bound_holds
    }
}

/// Checks the rTop-k contraction property on one vector: the Monte Carlo
/// error matches the closed form within 4 standard errors, and the closed
/// form is at most `(1 − k/d)‖w‖²`.
pub fn check_compression(w: &[f64], r: usize, k: usize, mc_trials: usize, rng: &mut Stream) -> Result<CompressionReport> {
    let expected = expected_sq_error(w, r, k)?;
    let norm_sq: f64 = w.iter().map(|v| v * v).sum();
    let mut stats = crate::stats::RunningStats::new();
    for _ in 0..mc_trials {
        let kept = rtop_k(w, r, k, rng)?;
        stats.push(norm_sq - kept.norm_sq());
    }
    let bound = (1.0 - k as f64 / w.len() as f64) * norm_sq;
    let mc_std_error = stats.std_error();
    // Absolute slack of a few ulps covers the case of zero sampling variance.
    let slack = 1e-12 * norm_sq.max(1e-300);
    Ok(CompressionReport {
        expected,
        mc_mean: stats.mean(),
        mc_std_error,
        bound,
        mc_agrees: (stats.mean() - expected).abs() <= 4.0 * mc_std_error + slack,
        bound_holds: expected <= bound + slack,
    })
}

//! Toy empirical-risk objectives with per-sample gradients.

use rand::Rng;

use crate::rng::Stream;

/// `f(w) = (1/N) Σᵢ ℓ(w; i)` over a finite dataset.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn num_samples(&self) -> usize;

    /// `ℓ(w; i)`.
    fn sample_loss(&self, w: &[f64], i: usize) -> f64;

    /// `out += ∇ℓ(w; i)`.
    fn add_sample_gradient(&self, w: &[f64], i: usize, out: &mut [f64]);

    fn loss(&self, w: &[f64]) -> f64 {
        let n = self.num_samples();
        (0..n).map(|i| self.sample_loss(w, i)).sum::<f64>() / n as f64
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let n = self.num_samples();
        let mut g = vec![0.0; self.dim()];
        for i in 0..n {
            self.add_sample_gradient(w, i, &mut g);
        }
        g.iter_mut().for_each(|v| *v /= n as f64);
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Curvature {
    Diagonal(Vec<f64>),
    /// Symmetric positive definite, row-major `d × d`.
    Dense(Vec<f64>),
}

/// `ℓ(w; i) = ½ wᵀAw − (b + ξᵢ)ᵀw`. Without noise rows the objective is
/// deterministic and behaves as a single-sample dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    d: usize,
    curvature: Curvature,
    b: Vec<f64>,
    noise: Vec<Vec<f64>>,
    /// `b + mean(ξ)`, the linear term of the full objective.
    b_mean: Vec<f64>,
}

impl Quadratic {
    pub fn diagonal(diag: Vec<f64>, b: Vec<f64>) -> Self {
        assert_eq!(diag.len(), b.len(), "curvature and linear term must agree in dimension");
        Self { d: b.len(), curvature: Curvature::Diagonal(diag), b_mean: b.clone(), b, noise: Vec::new() }
    }

    pub fn dense(a: Vec<f64>, b: Vec<f64>) -> Self {
        let d = b.len();
        assert_eq!(a.len(), d * d, "dense curvature must be d × d");
        Self { d, curvature: Curvature::Dense(a), b_mean: b.clone(), b, noise: Vec::new() }
    }

    /// Attaches per-sample perturbations `ξᵢ` of the linear term.
    pub fn with_noise(mut self, noise: Vec<Vec<f64>>) -> Self {
        assert!(noise.iter().all(|r| r.len() == self.d), "noise rows must have length d");
        self.noise = noise;
        let xi = self.mean_noise();
        self.b_mean = self.b.iter().zip(&xi).map(|(b, x)| b + x).collect();
        self
    }

    /// Adds `samples` rows of i.i.d. `Uniform(-scale, scale)` noise on the
    /// coordinates listed in `coords` (all coordinates when `None`).
    pub fn with_uniform_noise(self, samples: usize, scale: f64, coords: Option<&[usize]>, rng: &mut Stream) -> Self {
        let d = self.d;
        let noise = (0..samples)
            .map(|_| {
                let mut row = vec![0.0; d];
                match coords {
                    Some(cs) => cs.iter().for_each(|&j| row[j] = rng.gen_range(-scale..scale)),
                    None => row.iter_mut().for_each(|v| *v = rng.gen_range(-scale..scale)),
                }
                row
            })
            .collect();
        self.with_noise(noise)
    }

    /// Diagonal curvature evenly spaced over `[curvature_min, curvature_max]`,
    /// linear term uniform in `[-1, 1]`, and `samples` rows of uniform noise
    /// of half-width `noise` (deterministic when `samples` is zero).
    pub fn spread(d: usize, samples: usize, noise: f64, curvature_min: f64, curvature_max: f64, rng: &mut Stream) -> Self {
        let step = if d > 1 { (curvature_max - curvature_min) / (d - 1) as f64 } else { 0.0 };
        let diag = (0..d).map(|j| curvature_min + step * j as f64).collect();
        let b = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q = Self::diagonal(diag, b);
        if samples == 0 {
            q
        } else {
            q.with_uniform_noise(samples, noise, None, rng)
        }
    }

    /// `½‖w‖² − xᵢᵀw` with binary `xᵢ` whose coordinates are independent
    /// Bernoulli draws: probability `p_head` on the first `s` coordinates and
    /// `p_tail` elsewhere. Per-sample gradients are then sparse and carry most
    /// of their mass on the head.
    pub fn sparse_bernoulli(d: usize, s: usize, samples: usize, p_head: f64, p_tail: f64, rng: &mut Stream) -> Self {
        let noise = (0..samples)
            .map(|_| {
                (0..d)
                    .map(|j| {
                        let p = if j < s { p_head } else { p_tail };
                        if rng.gen::<f64>() < p { 1.0 } else { 0.0 }
                    })
                    .collect()
            })
            .collect();
        Self::diagonal(vec![1.0; d], vec![0.0; d]).with_noise(noise)
    }

    pub fn curvature(&self) -> &Curvature {
        &self.curvature
    }

    fn mul_a(&self, w: &[f64], out: &mut [f64]) {
        match &self.curvature {
            Curvature::Diagonal(a) => out.iter_mut().zip(a.iter().zip(w)).for_each(|(o, (a, w))| *o += a * w),
            Curvature::Dense(a) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o += a[i * self.d..(i + 1) * self.d].iter().zip(w).map(|(a, w)| a * w).sum::<f64>();
                }
            }
        }
    }

    fn mean_noise(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for row in &self.noise {
            m.iter_mut().zip(row).for_each(|(m, x)| *m += x);
        }
        if !self.noise.is_empty() {
            m.iter_mut().for_each(|v| *v /= self.noise.len() as f64);
        }
        m
    }

    /// Minimizer of the full objective when the curvature is diagonal.
    pub fn minimizer(&self) -> Option<Vec<f64>> {
        match &self.curvature {
            Curvature::Diagonal(a) => Some(a.iter().zip(&self.b_mean).map(|(a, b)| b / a).collect()),
            Curvature::Dense(_) => None,
        }
    }

    /// Largest curvature (diagonal case) — the smoothness constant `L`.
    pub fn smoothness(&self) -> Option<f64> {
        match &self.curvature {
            Curvature::Diagonal(a) => a.iter().copied().reduce(f64::max),
            Curvature::Dense(_) => None,
        }
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.d
    }

    fn num_samples(&self) -> usize {
        self.noise.len().max(1)
    }

    fn sample_loss(&self, w: &[f64], i: usize) -> f64 {
        let mut aw = vec![0.0; self.d];
        self.mul_a(w, &mut aw);
        let quad: f64 = 0.5 * aw.iter().zip(w).map(|(a, w)| a * w).sum::<f64>();
        let lin: f64 = match self.noise.get(i) {
            Some(xi) => self.b.iter().zip(xi).zip(w).map(|((b, x), w)| (b + x) * w).sum(),
            None => self.b.iter().zip(w).map(|(b, w)| b * w).sum(),
        };
        quad - lin
    }

    fn add_sample_gradient(&self, w: &[f64], i: usize, out: &mut [f64]) {
        self.mul_a(w, out);
        out.iter_mut().zip(&self.b).for_each(|(o, b)| *o -= b);
        if let Some(xi) = self.noise.get(i) {
            out.iter_mut().zip(xi).for_each(|(o, x)| *o -= x);
        }
    }

    fn loss(&self, w: &[f64]) -> f64 {
        let mut aw = vec![0.0; self.d];
        self.mul_a(w, &mut aw);
        aw.iter().zip(w).zip(&self.b_mean).map(|((a, w), b)| (0.5 * a - b) * w).sum()
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.d];
        self.mul_a(w, &mut g);
        g.iter_mut().zip(&self.b_mean).for_each(|(g, b)| *g -= b);
        g
    }
}

/// ℓ2-regularized logistic regression with labels in `{0, 1}`:
/// `ℓ(w; i) = softplus(xᵢᵀw) − yᵢ xᵢᵀw + (λ/2)‖w‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Logistic {
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    lambda: f64,
}

impl Logistic {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<f64>, lambda: f64) -> Self {
        assert_eq!(features.len(), labels.len(), "one label per feature row");
        assert!(!features.is_empty(), "dataset must be nonempty");
        let d = features[0].len();
        assert!(features.iter().all(|x| x.len() == d), "ragged feature rows");
        assert!(lambda >= 0.0, "regularization must be non-negative");
        Self { features, labels, lambda }
    }

    /// Features uniform in `[-1, 1]`, labels drawn from a random planted
    /// logistic model.
    pub fn synthetic(samples: usize, d: usize, lambda: f64, rng: &mut Stream) -> Self {
        let planted: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut features = Vec::with_capacity(samples);
        let mut labels = Vec::with_capacity(samples);
        for _ in 0..samples {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let z: f64 = x.iter().zip(&planted).map(|(a, b)| a * b).sum();
            labels.push(if rng.gen::<f64>() < sigmoid(z) { 1.0 } else { 0.0 });
            features.push(x);
        }
        Self::new(features, labels, lambda)
    }

    fn margin(&self, w: &[f64], i: usize) -> f64 {
        self.features[i].iter().zip(w).map(|(x, w)| x * w).sum()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl Objective for Logistic {
    fn dim(&self) -> usize {
        self.features[0].len()
    }

    fn num_samples(&self) -> usize {
        self.features.len()
    }

    fn sample_loss(&self, w: &[f64], i: usize) -> f64 {
        let z = self.margin(w, i);
        let reg = 0.5 * self.lambda * w.iter().map(|v| v * v).sum::<f64>();
        softplus(z) - self.labels[i] * z + reg
    }

    fn add_sample_gradient(&self, w: &[f64], i: usize, out: &mut [f64]) {
        let coef = sigmoid(self.margin(w, i)) - self.labels[i];
        for ((o, x), wj) in out.iter_mut().zip(&self.features[i]).zip(w) {
            *o += coef * x + self.lambda * wj;
        }
    }
}

/// Fully connected network with tanh hidden layers, a linear output and
/// squared loss `½‖f(x) − y‖²`. Parameters are packed layer by layer as the
/// row-major weight matrix followed by the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyMlp {
    sizes: Vec<usize>,
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
}

impl TinyMlp {
    pub fn new(sizes: Vec<usize>, inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output layers");
        assert!(!inputs.is_empty() && inputs.len() == targets.len(), "one target per input");
        assert!(inputs.iter().all(|x| x.len() == sizes[0]));
        assert!(targets.iter().all(|y| y.len() == *sizes.last().unwrap()));
        Self { sizes, inputs, targets }
    }

    /// Regression targets produced by a random teacher network of the same
    /// shape.
    pub fn synthetic(sizes: Vec<usize>, samples: usize, rng: &mut Stream) -> Self {
        let d = param_count(&sizes);
        let teacher: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let inputs: Vec<Vec<f64>> = (0..samples).map(|_| (0..sizes[0]).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let shell = Self { sizes: sizes.clone(), inputs: inputs.clone(), targets: Vec::new() };
        let targets = inputs.iter().map(|x| shell.forward(&teacher, x).pop().unwrap()).collect();
        Self::new(sizes, inputs, targets)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Activations of every layer, input first.
    fn forward(&self, w: &[f64], x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let mut offset = 0;
        let layers = self.sizes.len() - 1;
        for l in 0..layers {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let weights = &w[offset..offset + fan_in * fan_out];
            let bias = &w[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            offset += fan_in * fan_out + fan_out;
            let prev = acts.last().unwrap();
            let z: Vec<f64> = (0..fan_out)
                .map(|o| bias[o] + weights[o * fan_in..(o + 1) * fan_in].iter().zip(prev).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            acts.push(if l + 1 < layers { z.into_iter().map(f64::tanh).collect() } else { z });
        }
        acts
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|p| p[0] * p[1] + p[1]).sum()
}

impl Objective for TinyMlp {
    fn dim(&self) -> usize {
        param_count(&self.sizes)
    }

    fn num_samples(&self) -> usize {
        self.inputs.len()
    }

    fn sample_loss(&self, w: &[f64], i: usize) -> f64 {
        let out = self.forward(w, &self.inputs[i]).pop().unwrap();
        0.5 * out.iter().zip(&self.targets[i]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }

    fn add_sample_gradient(&self, w: &[f64], i: usize, out: &mut [f64]) {
        let acts = self.forward(w, &self.inputs[i]);
        let layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for l in 0..layers {
            offsets.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        // delta = ∂ℓ/∂z for the current layer.
        let mut delta: Vec<f64> = acts[layers].iter().zip(&self.targets[i]).map(|(a, y)| a - y).collect();
        for l in (0..layers).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let base = offsets[l];
            let prev = &acts[l];
            for o in 0..fan_out {
                for j in 0..fan_in {
                    out[base + o * fan_in + j] += delta[o] * prev[j];
                }
                out[base + fan_in * fan_out + o] += delta[o];
            }
            if l > 0 {
                let weights = &w[base..base + fan_in * fan_out];
                delta = (0..fan_in)
                    .map(|j| {
                        let back: f64 = (0..fan_out).map(|o| weights[o * fan_in + j] * delta[o]).sum();
                        back * (1.0 - prev[j] * prev[j])
                    })
                    .collect();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn finite_difference(obj: &dyn Objective, w: &[f64], i: usize) -> Vec<f64> {
        let h = 1e-6;
        (0..w.len())
            .map(|j| {
                let mut plus = w.to_vec();
                let mut minus = w.to_vec();
                plus[j] += h;
                minus[j] -= h;
                (obj.sample_loss(&plus, i) - obj.sample_loss(&minus, i)) / (2.0 * h)
            })
            .collect()
    }

    fn sample_gradient(obj: &dyn Objective, w: &[f64], i: usize) -> Vec<f64> {
        let mut g = vec![0.0; obj.dim()];
        obj.add_sample_gradient(w, i, &mut g);
        g
    }

    #[test]
    fn quadratic_closed_forms_match_sample_averages() {
        let mut rng = stream(4, 0);
        let q = Quadratic::diagonal(vec![0.5, 1.0, 2.0], vec![1.0, 0.0, -1.0]).with_uniform_noise(7, 1.0, None, &mut rng);
        let w = [0.2, -0.4, 0.9];
        let avg_loss = (0..7).map(|i| q.sample_loss(&w, i)).sum::<f64>() / 7.0;
        assert!((q.loss(&w) - avg_loss).abs() < 1e-12);
        let mut avg = vec![0.0; 3];
        (0..7).for_each(|i| q.add_sample_gradient(&w, i, &mut avg));
        for (a, g) in avg.iter().zip(q.gradient(&w)) {
            assert!((a / 7.0 - g).abs() < 1e-12);
        }
        let grad_at_min = q.gradient(&q.minimizer().unwrap());
        assert!(grad_at_min.iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn identity_quadratic_gradient_is_w() {
        let q = Quadratic::diagonal(vec![1.0; 4], vec![0.0; 4]);
        let w = [0.5, -1.0, 2.0, 3.0];
        assert_eq!(q.gradient(&w), w.to_vec());
        assert_eq!(q.num_samples(), 1);
        assert_eq!(q.minimizer().unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn dense_quadratic_matches_finite_difference() {
        let a = vec![2.0, 0.5, 0.0, 0.5, 1.0, 0.2, 0.0, 0.2, 3.0];
        let mut rng = stream(1, 0);
        let q = Quadratic::dense(a, vec![1.0, -1.0, 0.5]).with_uniform_noise(3, 0.5, None, &mut rng);
        let w = [0.3, -0.7, 1.1];
        for i in 0..3 {
            let g = sample_gradient(&q, &w, i);
            let fd = finite_difference(&q, &w, i);
            assert!(g.iter().zip(&fd).all(|(a, b)| (a - b).abs() < 1e-6));
        }
    }

    #[test]
    fn logistic_single_sample_gradient() {
        let obj = Logistic::new(vec![vec![0.5, -1.5, 2.0]], vec![1.0], 0.1);
        let w = [0.2, 0.4, -0.3];
        let g = sample_gradient(&obj, &w, 0);
        // Analytic: (σ(z) − y)x + λw with z = xᵀw.
        let z: f64 = 0.5 * 0.2 - 1.5 * 0.4 + 2.0 * -0.3;
        let s = 1.0 / (1.0 + (-z).exp());
        let analytic: Vec<f64> = [0.5, -1.5, 2.0].iter().zip(&w).map(|(x, w)| (s - 1.0) * x + 0.1 * w).collect();
        assert!(g.iter().zip(&analytic).all(|(a, b)| (a - b).abs() < 1e-10));
        let fd = finite_difference(&obj, &w, 0);
        assert!(g.iter().zip(&fd).all(|(a, b)| (a - b).abs() < 1e-6));
    }

    #[test]
    fn mlp_backprop_matches_finite_difference() {
        let mut rng = stream(2, 0);
        let obj = TinyMlp::synthetic(vec![3, 4, 2], 5, &mut rng);
        assert_eq!(obj.dim(), 3 * 4 + 4 + 4 * 2 + 2);
        let w: Vec<f64> = (0..obj.dim()).map(|_| rng.gen_range(-0.8..0.8)).collect();
        for i in 0..5 {
            let g = sample_gradient(&obj, &w, i);
            let fd = finite_difference(&obj, &w, i);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn stable_logistic_helpers() {
        assert!((softplus(800.0) - 800.0).abs() < 1e-9);
        assert!(softplus(-800.0) >= 0.0);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }
}

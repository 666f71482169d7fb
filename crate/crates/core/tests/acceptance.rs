//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance`. Failing criteria are reported,
//! not hidden; the process exits successfully once every criterion has been
//! evaluated so that the report always completes.

mod common;

use std::time::{Duration, Instant};

use rand::Rng;
use rtopk::codec::{ceil_log2, decode, deserialize, encode, make_config, serialize};
use rtopk::estimator::{centralized_risk, hardest_param, monte_carlo_bias, monte_carlo_risk};
use rtopk::model::{Observation, Perturbation};
use rtopk::rng::stream;
use rtopk::sgdsim::{
    compare_sparsifiers, make_nodes, sgd_round, theorem3_bound, train, ConvergenceBoundInputs, LrSchedule, Objective,
    Quadratic, TrainConfig, WeightInit,
};
use rtopk::sparsify::{check_compression, expected_sq_error, top_r_indices, SparsifierSpec};
use rtopk::stats::log_log_fit;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict { passed, detail: detail.into() }
}

fn report(id: &str, title: &str, budget: Option<Duration>, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let mut v = f();
    let elapsed = start.elapsed();
    if let Some(limit) = budget {
        if elapsed > limit {
            v.passed = false;
            v.detail = format!("{}; exceeded the {:?} runtime budget", v.detail, limit);
        }
    }
    println!(
        "{} [{id}] {title}: {} ({:.1}s)",
        if v.passed { "PASS" } else { "FAIL" },
        v.detail,
        elapsed.as_secs_f64()
    );
    v.passed
}

fn codec_exactness() -> Verdict {
    let mut cases = 0u64;
    let mut bad = 0u64;
    let mut configs = 0;
    for d in [4usize, 8, 12] {
        let header = ceil_log2(d + 1);
        // From the smallest admissible budget to two bits past saturation.
        for k in header + 1..=header + d + 2 {
            let cfg = make_config(d, k).unwrap();
            configs += 1;
            for mask in 0u64..1 << d {
                let support: Vec<usize> = (0..d).filter(|&j| mask >> j & 1 == 1).collect();
                let obs = Observation::binary(d, support.clone()).unwrap();
                let mut rng = stream(k as u64, mask);
                let msg = encode(&obs, &cfg, &mut rng).unwrap();
                let bits = serialize(&msg, &cfg).unwrap();
                let back = decode(&deserialize(&bits, &cfg).unwrap(), &cfg).unwrap();
                let ok = bits.len() == k
                    && back.original_count == support.len()
                    && back.support.iter().all(|j| support.binary_search(j).is_ok());
                cases += 1;
                bad += u64::from(!ok);
            }
        }
    }
    verdict(bad == 0, format!("{} of {cases} roundtrips exact over {configs} (d, k) configs", cases - bad))
}

fn unbiasedness(k: usize) -> Verdict {
    let (d, s, n) = (32, 4.0, 64);
    let cfg = match make_config(d, k) {
        Ok(c) => c,
        Err(e) => return verdict(false, format!("k={k}: {e}")),
    };
    let theta = hardest_param(d, s).unwrap();
    match monte_carlo_bias(&theta, n, &cfg, 100_000, Perturbation::None, 2) {
        Ok(b) => {
            let z = b.max_z_score();
            verdict(z <= 5.0, format!("k={k}, k'={}: max |mean − θ|/se = {z:.2} over 32 components", cfg.kprime()))
        }
        Err(e) => verdict(
            false,
            format!(
                "k={k} gives header {} bits, payload {} bits, k'={}: {e}; no unbiased estimate exists at this budget",
                cfg.header_bits(),
                cfg.payload_bits(),
                cfg.kprime()
            ),
        ),
    }
}

fn slope_over(xs: &[usize], risks: &[f64]) -> f64 {
    let xs: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
    log_log_fit(&xs, risks).unwrap().slope
}

fn scaling() -> Verdict {
    let (d, s) = (64, 8.0);
    let theta = hardest_param(d, s).unwrap();
    let trials = 10_000;
    let ks = [14usize, 20, 28, 40, 48];
    let k_risks: Vec<f64> = ks
        .iter()
        .map(|&k| monte_carlo_risk(&theta, 128, &make_config(d, k).unwrap(), trials, Perturbation::None, k as u64).unwrap().mean_sq_error)
        .collect();
    let ns = [32usize, 64, 128, 256];
    let n_risks: Vec<f64> = ns
        .iter()
        .map(|&n| monte_carlo_risk(&theta, n, &make_config(d, 24).unwrap(), trials, Perturbation::None, n as u64).unwrap().mean_sq_error)
        .collect();
    let (k_slope, n_slope) = (slope_over(&ks, &k_risks), slope_over(&ns, &n_risks));
    let in_band = |x: f64| (-1.25..=-0.75).contains(&x);
    verdict(
        in_band(k_slope) && in_band(n_slope),
        format!("slope vs k over {ks:?} = {k_slope:.3}, slope vs n over {ns:?} = {n_slope:.3} (band [-1.25, -0.75])"),
    )
}

fn saturation() -> Verdict {
    let mut notes = Vec::new();
    let mut ok = true;
    // No subsampling: the full codebook fits in the payload.
    let (d, s, n) = (64, 8.0, 128);
    let theta = hardest_param(d, s).unwrap();
    let full = make_config(d, ceil_log2(d + 1) + d).unwrap();
    let est = monte_carlo_risk(&theta, n, &full, 20_000, Perturbation::None, 4).unwrap();
    let central = centralized_risk(&theta, n);
    let z = (est.mean_sq_error - central).abs() / est.std_error;
    ok &= full.kprime() >= d && z <= 4.0;
    notes.push(format!("k'={} risk within {z:.2} se of centralized", full.kprime()));
    for (d, s) in [(64usize, 8.0f64), (256, 4.0)] {
        let theta = hardest_param(d, s).unwrap();
        let k = 4 * s as usize * ceil_log2(d);
        let cfg = make_config(d, k).unwrap();
        let risk = monte_carlo_risk(&theta, n, &cfg, 20_000, Perturbation::None, 5).unwrap().mean_sq_error;
        let ratio = risk / centralized_risk(&theta, n);
        ok &= ratio <= 2.0;
        notes.push(format!("d={d} s={s} k={k} (k'={}): risk/centralized = {ratio:.3}", cfg.kprime()));
    }
    verdict(ok, notes.join("; "))
}

fn compression() -> Verdict {
    let mut rng = stream(5, 0);
    let (mut checks, mut mc_fail, mut bound_fail) = (0, 0, 0);
    for v in 0..1000u64 {
        let d = rng.gen_range(2..=64usize);
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0) * rng.gen_range(0.0..3.0f64).exp()).collect();
        let r_mid = rng.gen_range(1..=d);
        let mut grid = vec![(d, 1), (r_mid, rng.gen_range(1..=r_mid)), (d, rng.gen_range(1..=d))];
        grid.sort_unstable();
        grid.dedup();
        for (r, k) in grid {
            let rep = check_compression(&w, r, k, 2000, &mut stream(6, v)).unwrap();
            checks += 1;
            mc_fail += usize::from(!rep.mc_agrees);
            bound_fail += usize::from(!rep.bound_holds);
        }
    }
    // Brute force against the closed form for small d.
    let mut worst = 0.0f64;
    for d in 1..=10usize {
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let norm: f64 = w.iter().map(|x| x * x).sum();
        for r in 1..=d {
            let window = top_r_indices(&w, r).unwrap();
            for k in 1..=r {
                let subs = common::subsets(&window, k);
                let mean = subs.iter().map(|s| norm - s.iter().map(|&j| w[j] * w[j]).sum::<f64>()).sum::<f64>() / subs.len() as f64;
                worst = worst.max((mean - expected_sq_error(&w, r, k).unwrap()).abs());
            }
        }
    }
    verdict(
        mc_fail == 0 && bound_fail == 0 && worst <= 1e-10,
        format!(
            "{checks} checks: {mc_fail} Monte Carlo disagreements, {bound_fail} bound violations; brute force max gap {worst:.1e}"
        ),
    )
}

fn conservation() -> Verdict {
    let d = 50;
    let obj = Quadratic::spread(d, 200, 0.5, 0.2, 1.0, &mut stream(61, 0));
    let mut cfg = TrainConfig::new(4, 3, 1000, LrSchedule::Constant(0.05));
    cfg.batch = 2;
    cfg.init = WeightInit::Uniform { scale: 1.0 };
    cfg.seed = 6;
    let mut nodes = make_nodes(&cfg, d, obj.num_samples()).unwrap();
    let mut w: Vec<f64> = (0..d).map(|j| (j as f64).sin()).collect();
    let mut worst = 0.0f64;
    for t in 0..cfg.steps {
        let before: Vec<Vec<f64>> = nodes.iter().map(|n| n.memory.clone()).collect();
        let rep = sgd_round(&mut nodes, &obj, &mut w, &cfg, t).unwrap();
        for (i, nr) in rep.nodes.iter().enumerate() {
            let sent = nr.sent.to_dense();
            for j in 0..d {
                worst = worst.max((nodes[i].memory[j] + sent[j] - nr.gradient[j] - before[i][j]).abs());
            }
        }
    }

    let mut full = TrainConfig::new(4, d, 1000, LrSchedule::Constant(0.05));
    full.batch = 2;
    full.r = Some(d);
    full.seed = 6;
    let w0: Vec<f64> = (0..d).map(|j| (j as f64).cos()).collect();
    full.init = WeightInit::Given(w0.clone());
    let reference = common::reference_sgd(&obj, &full, w0.clone());
    let mut nodes = make_nodes(&full, d, obj.num_samples()).unwrap();
    let mut w = w0;
    let mut mismatches = 0;
    for (t, expected) in reference.iter().enumerate() {
        sgd_round(&mut nodes, &obj, &mut w, &full, t).unwrap();
        mismatches += usize::from(w.iter().zip(expected).any(|(a, b)| a.to_bits() != b.to_bits()));
    }
    verdict(
        worst <= 1e-12 && mismatches == 0,
        format!("max conservation residual {worst:.1e} over 1000 rounds; {mismatches} of 1000 rounds differ from reference SGD"),
    )
}

fn convergence() -> Verdict {
    let obj = Quadratic::spread(100, 500, 0.5, 0.1, 1.0, &mut stream(7, 0));
    let schedule = LrSchedule::Piecewise { initial: 0.2, breakpoints: vec![(2000, 0.05), (3500, 0.005)] };
    let mut cfg = TrainConfig::new(5, 5, 5000, schedule);
    cfg.r = Some(25);
    cfg.batch = 4;
    let out = train(&obj, &cfg).unwrap();
    let g = out.final_metrics().unwrap().grad_norm_sq;
    let inp = ConvergenceBoundInputs { l: 1.0, g: 1.0, batch: 1.0, nodes: 1.0, steps: 1e4, k: 1.0, d: 1.0, f0_gap: 1.0, chat: 1.0 };
    let bound = theorem3_bound(&inp).unwrap();
    verdict(
        g <= 1e-3 && (bound - 0.0808).abs() <= 1e-12,
        format!("final ‖∇f‖² = {g:.3e} after 5000 rounds; bound plug-in = {bound:.16}"),
    )
}

fn directional() -> Verdict {
    let obj = Quadratic::sparse_bernoulli(500, 10, 1000, 0.5, 0.002, &mut stream(3, 0));
    let k = 2;
    let base = TrainConfig::new(5, k, 2000, LrSchedule::Constant(0.05));
    let specs = [SparsifierSpec::RTopK { r: 5 * k, k }, SparsifierSpec::TopR { r: k }, SparsifierSpec::RandomK { k }];
    let table = compare_sparsifiers(&obj, &base, &specs, &[1, 2, 3, 4, 5]).unwrap();
    let f_star = obj.loss(&obj.minimizer().unwrap());
    let gap = |name: &str| table.row(name).unwrap().mean_final_loss - f_star;
    let (rtop, top, random) = (gap("rtop_k"), gap("top_r"), gap("random_k"));
    verdict(
        rtop <= top && rtop <= random,
        format!("mean excess loss over 5 seeds: rtop_k {rtop:.4e}, top_k {top:.4e}, random_k {random:.4e} (soft criterion)"),
    )
}

fn main() {
    // Accept and ignore libtest-style arguments passed by `cargo test`.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if filter.iter().any(|f| f != "acceptance") && !filter.is_empty() {
        return;
    }
    let minute = Duration::from_secs(60);
    let results = [
        report("1", "codec exactness", Some(Duration::from_secs(30)), codec_exactness),
        report("2", "estimator unbiasedness at k = 2⌈log₂ d⌉ = 10", Some(2 * minute), || unbiasedness(10)),
        report("2b", "estimator unbiasedness at the smallest non-degenerate k = 12", Some(2 * minute), || unbiasedness(12)),
        report("3", "risk scaling in k and n", Some(10 * minute), scaling),
        report("4", "centralized saturation", None, saturation),
        report("5", "rTop-k compression property", None, compression),
        report("6", "error-feedback conservation and no-compression equivalence", None, conservation),
        report("7", "desk-scale convergence", Some(minute), convergence),
        report("8", "rTop-k versus top-k and random-k at equal budget", None, directional),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
}

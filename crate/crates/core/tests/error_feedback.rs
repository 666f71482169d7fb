mod common;

use common::{reference_sgd, subsets};
use rand::Rng;
use rtopk::rng::stream;
use rtopk::sgdsim::{
    make_nodes, sgd_round, train, AggregationMode, LrSchedule, Objective, Quadratic, TrainConfig, WeightInit,
};
use rtopk::sparsify::{top_r_indices, SparsifierSpec};

fn noisy_quadratic(d: usize, samples: usize) -> Quadratic {
    Quadratic::spread(d, samples, 0.5, 0.2, 1.0, &mut stream(99, 0))
}

#[test]
fn full_budget_matches_reference_sgd_bitwise() {
    let d = 12;
    let obj = noisy_quadratic(d, 36);
    let mut cfg = TrainConfig::new(3, d, 300, LrSchedule::Piecewise { initial: 0.3, breakpoints: vec![(150, 0.1)] });
    cfg.batch = 2;
    cfg.r = Some(d);
    cfg.seed = 5;
    let w0: Vec<f64> = (0..d).map(|j| j as f64 / 4.0 - 1.0).collect();
    cfg.init = WeightInit::Given(w0.clone());
    let reference = reference_sgd(&obj, &cfg, w0.clone());

    let mut nodes = make_nodes(&cfg, d, obj.num_samples()).unwrap();
    let mut w = w0;
    for (t, expected) in reference.iter().enumerate() {
        sgd_round(&mut nodes, &obj, &mut w, &cfg, t).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&w), bits(expected), "round {t}");
        assert!(nodes.iter().all(|n| n.memory.iter().all(|&m| m == 0.0)));
    }
}

#[test]
fn unbiased_rescale_is_exact_in_expectation_over_selections() {
    // Conditioned on the node gradients, averaging the aggregate over every
    // combination of selections gives the mean of the top-r-truncated
    // gradients.
    let d = 7;
    let mut rng = stream(3, 3);
    for (r, k) in [(6, 1), (6, 2), (5, 3), (4, 4), (3, 1)] {
        let grads: Vec<Vec<f64>> = (0..2).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let scale = SparsifierSpec::RTopK { r, k }.rescale(d) / grads.len() as f64;
        let per_node: Vec<Vec<Vec<usize>>> = grads.iter().map(|g| subsets(&top_r_indices(g, r).unwrap(), k)).collect();
        let mut expectation = vec![0.0; d];
        let combos = (per_node[0].len() * per_node[1].len()) as f64;
        for s0 in &per_node[0] {
            for s1 in &per_node[1] {
                for (g, s) in grads.iter().zip([s0, s1]) {
                    for &j in s {
                        expectation[j] += scale * g[j] / combos;
                    }
                }
            }
        }
        let mut truncated_mean = vec![0.0; d];
        for g in &grads {
            for j in top_r_indices(g, r).unwrap() {
                truncated_mean[j] += g[j] / grads.len() as f64;
            }
        }
        for j in 0..d {
            assert!((expectation[j] - truncated_mean[j]).abs() < 1e-12, "r={r} k={k} coord {j}");
        }
    }
}

#[test]
fn unbiased_rescale_round_matches_in_monte_carlo() {
    let d = 6;
    let obj = Quadratic::diagonal(vec![1.0; d], vec![-3.0, 2.0, -1.0, 0.5, 4.0, -2.5]);
    let mut cfg = TrainConfig::new(2, 2, 1, LrSchedule::Constant(1.0));
    cfg.r = Some(d);
    cfg.mode = AggregationMode::UnbiasedRescale;
    let w0 = vec![0.0; d];
    let full = obj.gradient(&w0);
    let mut stats = rtopk::stats::VectorStats::new(d);
    for seed in 0..20_000 {
        cfg.seed = seed;
        let mut nodes = make_nodes(&cfg, d, 1).unwrap();
        let mut w = w0.clone();
        sgd_round(&mut nodes, &obj, &mut w, &cfg, 0).unwrap();
        // w = −ĝ with unit step from zero.
        stats.push(&w.iter().map(|v| -v).collect::<Vec<_>>());
    }
    for j in 0..d {
        let c = stats.component(j);
        assert!((c.mean() - full[j]).abs() <= 4.0 * c.std_error(), "coord {j}: {} vs {}", c.mean(), full[j]);
    }
}

#[test]
fn memory_stays_bounded_on_a_tuned_quadratic() {
    let obj = noisy_quadratic(60, 120);
    let mut cfg = TrainConfig::new(4, 3, 3000, LrSchedule::Constant(0.05));
    cfg.init = WeightInit::Uniform { scale: 1.0 };
    let out = train(&obj, &cfg).unwrap();
    let peak = out.metrics.iter().map(|m| m.memory_norm_sq).fold(0.0, f64::max);
    let late_peak = out.metrics[1500..].iter().map(|m| m.memory_norm_sq).fold(0.0, f64::max);
    assert!(peak < 1e4, "peak memory {peak}");
    assert!(late_peak <= peak);
    assert!(out.final_metrics().unwrap().grad_norm_sq < out.metrics[0].grad_norm_sq);
}

#[test]
fn logistic_and_mlp_make_progress() {
    let mut rng = stream(8, 0);
    let logistic = rtopk::sgdsim::Logistic::synthetic(200, 20, 0.01, &mut rng);
    let mut cfg = TrainConfig::new(4, 4, 800, LrSchedule::Constant(0.5));
    cfg.batch = 4;
    let out = train(&logistic, &cfg).unwrap();
    assert!(out.final_metrics().unwrap().loss < logistic.loss(&vec![0.0; 20]));

    let mlp = rtopk::sgdsim::TinyMlp::synthetic(vec![4, 8, 1], 64, &mut rng);
    let mut cfg = TrainConfig::new(4, 10, 1500, LrSchedule::Constant(0.1));
    cfg.init = WeightInit::Uniform { scale: 0.5 };
    cfg.batch = 4;
    let start = {
        let probe = TrainConfig { steps: 1, lr: LrSchedule::Constant(1e-12), ..cfg.clone() };
        train(&mlp, &probe).unwrap().metrics[0].loss
    };
    let out = train(&mlp, &cfg).unwrap();
    assert!(out.final_metrics().unwrap().loss < 0.5 * start, "{} vs {start}", out.final_metrics().unwrap().loss);
}

//! Reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rtopk::rng::stream;
use rtopk::sgdsim::{make_nodes, Objective, TrainConfig};

/// Plain synchronous minibatch SGD drawing the same samples as the
/// simulator: node `i` uses stream `(seed, i)` and `batch` uniform draws
/// from its shard.
pub fn reference_sgd(obj: &dyn Objective, cfg: &TrainConfig, w0: Vec<f64>) -> Vec<Vec<f64>> {
    let d = obj.dim();
    let nodes = make_nodes(cfg, d, obj.num_samples()).unwrap();
    let mut rngs: Vec<_> = nodes.iter().map(|n| stream(cfg.seed, n.id as u64)).collect();
    let mut w = w0;
    let mut trajectory = Vec::new();
    for t in 0..cfg.steps {
        let mut agg = vec![0.0; d];
        for (node, rng) in nodes.iter().zip(rngs.iter_mut()) {
            let mut g = vec![0.0; d];
            for _ in 0..cfg.batch {
                let i = rng.gen_range(node.shard.clone());
                obj.add_sample_gradient(&w, i, &mut g);
            }
            if cfg.batch > 1 {
                g.iter_mut().for_each(|v| *v /= cfg.batch as f64);
            }
            let scale = 1.0 / cfg.nodes as f64;
            for (a, v) in agg.iter_mut().zip(&g) {
                if *v != 0.0 {
                    *a += v * scale;
                }
            }
        }
        let lr = cfg.lr.at(t, cfg.steps);
        for (wj, a) in w.iter_mut().zip(&agg) {
            *wj -= lr * a;
        }
        trajectory.push(w.clone());
    }
    trajectory
}

/// Every k-subset of the top-r window, as index lists.
pub fn subsets(window: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if window.len() < k {
        return vec![];
    }
    let (first, rest) = window.split_first().unwrap();
    let mut with: Vec<Vec<usize>> = subsets(rest, k - 1)
        .into_iter()
        .map(|mut s| {
            s.insert(0, *first);
            s
        })
        .collect();
    with.extend(subsets(rest, k));
    with
}

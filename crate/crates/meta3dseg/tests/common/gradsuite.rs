//! Randomized finite-difference gradient checks, shared by the gradcheck
//! suite and the acceptance harness. Everything runs in 64-bit mode.

use meta3dseg::geometry::cell_occupancy_samples;
use meta3dseg::learner::{
    dense_forward, encode, grid_tensor, points_tensor, EncoderNodes, PredictorLayout,
};
use meta3dseg::metalearner::{
    estimate_on_graph, f1_layout, f2_layout, predict_weights_on_graph, reparam_on_graph,
};
use meta3dseg::numerics::{Graph, NodeId, Tensor};
use meta3dseg::rng::{normal, stream, uniform};
use meta3dseg::training::loss_on_graph;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::common::{fd_gradient, max_relative_error, tiny_arch, tiny_entries};

pub const OPS: &[&str] = &[
    "add",
    "sub",
    "mul",
    "scale",
    "add_scalar",
    "relu",
    "sigmoid",
    "exp",
    "sum",
    "mean_rows",
    "row_max",
    "stack_rows",
    "linear",
    "conv3d",
    "reshape",
    "slice",
    "point_features",
];

const FD_EPS: f64 = 1e-5;

/// Worst relative error between the tape gradient and central finite
/// differences for one scalar-valued builder.
fn gradcheck_case<B>(x0: &[f64], build: B) -> f64
where
    B: Fn(&mut Graph<f64>, NodeId) -> NodeId,
{
    let analytic = {
        let mut g: Graph<f64> = Graph::new();
        let leaf = g.leaf(Tensor::from_vec(&[x0.len()], x0.to_vec()).unwrap(), true);
        let loss = build(&mut g, leaf);
        assert_eq!(g.value(loss).numel(), 1, "builder must yield a scalar");
        let grads = g.backward(loss).unwrap();
        grads.get(leaf).unwrap().data().to_vec()
    };
    let numeric = fd_gradient(
        |x| {
            let mut g: Graph<f64> = Graph::new();
            let leaf = g.leaf(Tensor::from_vec(&[x.len()], x.to_vec()).unwrap(), true);
            let loss = build(&mut g, leaf);
            g.value(loss).data()[0]
        },
        x0,
        FD_EPS,
    );
    max_relative_error(&analytic, &numeric)
}

fn weighted_sum(g: &mut Graph<f64>, node: NodeId, weights: &[f64]) -> NodeId {
    let shape = g.value(node).shape().to_vec();
    assert_eq!(weights.len(), g.value(node).numel());
    let w = g.constant(Tensor::from_vec(&shape, weights.to_vec()).unwrap());
    let prod = g.mul(node, w).unwrap();
    g.sum(prod).unwrap()
}

fn uniforms(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| uniform(rng, lo, hi)).collect()
}

/// Uniform values kept away from zero, for kinked ops.
fn off_kink(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let sign = if uniform(rng, -1.0, 1.0) < 0.0 { -1.0 } else { 1.0 };
            sign * uniform(rng, 0.3, 2.0)
        })
        .collect()
}

/// Run `checks` randomized cases of one op; returns the worst error seen.
pub fn check_op(name: &str, checks: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for case in 0..checks {
        let rng = &mut stream(3000 + case as u64, &format!("gradcheck/{name}"));
        let err = match name {
            "add" | "sub" | "mul" => {
                let n = 2 + case % 5;
                let x0 = uniforms(rng, 2 * n, -2.0, 2.0);
                let ws = uniforms(rng, n, -1.0, 1.0);
                let op = name.to_string();
                gradcheck_case(&x0, move |g, leaf| {
                    let a = g.slice(leaf, 0, n).unwrap();
                    let b = g.slice(leaf, n, n).unwrap();
                    let out = match op.as_str() {
                        "add" => g.add(a, b).unwrap(),
                        "sub" => g.sub(a, b).unwrap(),
                        _ => g.mul(a, b).unwrap(),
                    };
                    weighted_sum(g, out, &ws)
                })
            }
            "scale" | "add_scalar" => {
                let n = 2 + case % 5;
                let c = uniform(rng, -3.0, 3.0);
                let x0 = uniforms(rng, n, -2.0, 2.0);
                let ws = uniforms(rng, n, -1.0, 1.0);
                let op = name.to_string();
                gradcheck_case(&x0, move |g, leaf| {
                    let out = match op.as_str() {
                        "scale" => g.scale(leaf, c).unwrap(),
                        _ => g.add_scalar(leaf, c).unwrap(),
                    };
                    weighted_sum(g, out, &ws)
                })
            }
            "relu" => {
                let n = 3 + case % 5;
                let x0 = off_kink(rng, n);
                let ws = uniforms(rng, n, -1.0, 1.0);
                gradcheck_case(&x0, move |g, leaf| {
                    let out = g.relu(leaf).unwrap();
                    weighted_sum(g, out, &ws)
                })
            }
            "sigmoid" | "exp" => {
                let n = 3 + case % 5;
                let x0 = uniforms(rng, n, -2.0, 2.0);
                let ws = uniforms(rng, n, -1.0, 1.0);
                let op = name.to_string();
                gradcheck_case(&x0, move |g, leaf| {
                    let out = match op.as_str() {
                        "sigmoid" => g.sigmoid(leaf).unwrap(),
                        _ => g.exp(leaf).unwrap(),
                    };
                    weighted_sum(g, out, &ws)
                })
            }
            "sum" => {
                let n = 3 + case % 6;
                let c = uniform(rng, -3.0, 3.0);
                let x0 = uniforms(rng, n, -2.0, 2.0);
                gradcheck_case(&x0, move |g, leaf| {
                    let s = g.sum(leaf).unwrap();
                    g.scale(s, c).unwrap()
                })
            }
            "mean_rows" => {
                let (r, c) = (2 + case % 4, 2 + case % 3);
                let x0 = uniforms(rng, r * c, -2.0, 2.0);
                let ws = uniforms(rng, c, -1.0, 1.0);
                gradcheck_case(&x0, move |g, leaf| {
                    let m = g.reshape(leaf, &[r, c]).unwrap();
                    let out = g.mean_rows(m).unwrap();
                    weighted_sum(g, out, &ws)
                })
            }
            "row_max" => {
                let (r, c) = (2 + case % 4, 2 + case % 3);
                let mut x0 = Vec::with_capacity(r * c);
                for _ in 0..r {
                    let mut bands: Vec<f64> =
                        (0..c).map(|b| b as f64 + uniform(rng, 0.0, 0.4)).collect();
                    bands.shuffle(rng);
                    x0.extend(bands);
                }
                let ws = uniforms(rng, r, -1.0, 1.0);
                gradcheck_case(&x0, move |g, leaf| {
                    let m = g.reshape(leaf, &[r, c]).unwrap();
                    let out = g.row_max(m).unwrap();
                    weighted_sum(g, out, &ws)
                })
            }
            "stack_rows" => {
                let (k, c) = (2 + case % 3, 2 + case % 4);
                let x0 = uniforms(rng, k * c, -2.0, 2.0);
                let ws = uniforms(rng, k * c, -1.0, 1.0);
                gradcheck_case(&x0, move |g, leaf| {
                    let rows: Vec<NodeId> =
                        (0..k).map(|i| g.slice(leaf, i * c, c).unwrap()).collect();
                    let out = g.stack_rows(&rows).unwrap();
                    weighted_sum(g, out, &ws)
                })
            }
            "linear" => {
                let (n, m) = (2 + case % 3, 2 + case % 3);
                let batch = if case % 2 == 0 { 0 } else { 2 + case % 2 };
                let rows = batch.max(1);
                let x0 = uniforms(rng, rows * n + m * n + m, -1.5, 1.5);
                let ws = uniforms(rng, rows * m, -1.0, 1.0);
                gradcheck_case(&x0, move |g, leaf| {
                    let x = g.slice(leaf, 0, rows * n).unwrap();
                    let x = if batch == 0 {
                        x
                    } else {
                        g.reshape(x, &[rows, n]).unwrap()
                    };
                    let w = g.slice(leaf, rows * n, m * n).unwrap();
                    let w = g.reshape(w, &[m, n]).unwrap();
                    let b = g.slice(leaf, rows * n + m * n, m).unwrap();
                    let out = g.linear(x, w, b).unwrap();
                    weighted_sum(g, out, &ws)
                })
            }
            "conv3d" => {
                let (ci, co) = (1 + case % 2, 1 + (case / 2) % 2);
                let d = 3 + case % 2;
                let k = 2 + case % 2;
                let stride = 1 + case % 2;
                let padding = case % 2;
                let od = (d + 2 * padding - k) / stride + 1;
                let (xn, wn) = (ci * d * d * d, co * ci * k * k * k);
                let x0 = uniforms(rng, xn + wn + co, -1.0, 1.0);
                let ws = uniforms(rng, co * od * od * od, -1.0, 1.0);
                gradcheck_case(&x0, move |g, leaf| {
                    let x = g.slice(leaf, 0, xn).unwrap();
                    let x = g.reshape(x, &[ci, d, d, d]).unwrap();
                    let w = g.slice(leaf, xn, wn).unwrap();
                    let w = g.reshape(w, &[co, ci, k, k, k]).unwrap();
                    let b = g.slice(leaf, xn + wn, co).unwrap();
                    let out = g.conv3d(x, w, b, stride, padding).unwrap();
                    weighted_sum(g, out, &ws)
                })
            }
            "reshape" => {
                let (r, c) = (2 + case % 4, 2 + case % 3);
                let x0 = uniforms(rng, r * c, -2.0, 2.0);
                let ws = uniforms(rng, r * c, -1.0, 1.0);
                gradcheck_case(&x0, move |g, leaf| {
                    let out = g.reshape(leaf, &[r, c]).unwrap();
                    weighted_sum(g, out, &ws)
                })
            }
            "slice" => {
                let n = 5 + case % 5;
                let start = case % 3;
                let len = 2 + case % (n - start - 1);
                let x0 = uniforms(rng, n, -2.0, 2.0);
                let ws = uniforms(rng, len, -1.0, 1.0);
                gradcheck_case(&x0, move |g, leaf| {
                    let out = g.slice(leaf, start, len).unwrap();
                    weighted_sum(g, out, &ws)
                })
            }
            "point_features" => {
                let (m, rows) = (2 + case % 3, 2 + case % 2);
                let x0 = uniforms(rng, m + rows * 3, -1.0, 1.0);
                let ws = uniforms(rng, rows * (m + 3), -1.0, 1.0);
                gradcheck_case(&x0, move |g, leaf| {
                    let f = g.slice(leaf, 0, m).unwrap();
                    let p = g.slice(leaf, m, rows * 3).unwrap();
                    let p = g.reshape(p, &[rows, 3]).unwrap();
                    let out = g.point_features(f, p).unwrap();
                    weighted_sum(g, out, &ws)
                })
            }
            other => panic!("no gradcheck case for op {other:?}"),
        };
        worst = worst.max(err);
    }
    worst
}

/// Worst error over `checks` runs of the whole meta path: all meta
/// parameters enter one leaf, flow through encoder, task-distribution
/// estimation, the reparameterized draw and the hypernetwork into the
/// occupancy reconstruction loss.
pub fn check_full_meta_path(checks: usize) -> f64 {
    let arch = tiny_arch();
    let entries = tiny_entries(3, arch.resolution);
    let f1t = f1_layout(&arch).total;
    let f2t = f2_layout(&arch).total;
    let layout = PredictorLayout::from_config(&arch);

    let mut conv_shapes = Vec::new();
    let mut ci = 1;
    for &co in &arch.conv_channels {
        conv_shapes.push((co, ci));
        ci = co;
    }
    let sigma_len: usize = conv_shapes
        .iter()
        .map(|&(co, ci)| co * ci * 64 + co)
        .sum::<usize>()
        + 2 * f1t
        + f2t;

    let mut worst: f64 = 0.0;
    for case in 0..checks {
        let entry = &entries[case % entries.len()];
        let rng = &mut stream(7000 + case as u64, "gradcheck/meta-path");
        let x0 = uniforms(rng, sigma_len, -0.3, 0.3);
        let eps: Vec<f64> = (0..arch.latent_dim).map(|_| normal(rng)).collect();

        let cloud: Vec<[f64; 3]> = entry
            .cloud
            .points
            .iter()
            .take(12)
            .map(|p| [p[0] as f64, p[1] as f64, p[2] as f64])
            .collect();
        let cells = cell_occupancy_samples(&entry.grid);
        let step = (cells.len() / 8).max(1);
        let occ: Vec<_> = cells.iter().step_by(step).take(8).cloned().collect();
        let occ_points: Vec<[f64; 3]> = occ.iter().map(|s| s.point).collect();
        let occ_labels: Vec<u8> = occ.iter().map(|s| s.label).collect();

        let arch = arch.clone();
        let conv_shapes = conv_shapes.clone();
        let layout = layout.clone();
        let err = gradcheck_case(&x0, move |g, leaf| {
            let mut off = 0;
            let mut layers = Vec::new();
            for &(co, ci) in &conv_shapes {
                let wlen = co * ci * 64;
                let w = g.slice(leaf, off, wlen).unwrap();
                let w = g.reshape(w, &[co, ci, 4, 4, 4]).unwrap();
                off += wlen;
                let b = g.slice(leaf, off, co).unwrap();
                off += co;
                layers.push((w, b));
            }
            let f1_mean = g.slice(leaf, off, f1t).unwrap();
            off += f1t;
            let f1_logvar = g.slice(leaf, off, f1t).unwrap();
            off += f1t;
            let f2 = g.slice(leaf, off, f2t).unwrap();

            let grid = g.constant(grid_tensor(&entry.grid));
            let emb = encode(g, grid, &EncoderNodes { layers }, &arch).unwrap();
            let pts = g.constant(points_tensor(&cloud).unwrap());
            let feats = g.point_features(emb, pts).unwrap();
            let (mu, logvar) = estimate_on_graph(g, feats, f1_mean, f1_logvar, &arch).unwrap();
            let latent = reparam_on_graph(g, mu, logvar, Some(&eps)).unwrap();
            let theta_m = predict_weights_on_graph(g, latent, f2, &arch).unwrap();

            let occ_pts = g.constant(points_tensor(&occ_points).unwrap());
            let occ_feats = g.point_features(emb, occ_pts).unwrap();
            let logits = dense_forward(g, occ_feats, theta_m, &layout).unwrap();
            let probs = g.sigmoid(logits).unwrap();
            let occ_hat = g.row_max(probs).unwrap();
            loss_on_graph(g, occ_hat, &occ_labels).unwrap()
        });
        worst = worst.max(err);
    }
    worst
}

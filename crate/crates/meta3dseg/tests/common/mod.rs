//! Independent oracles shared by the integration suites: central finite
//! differences, a from-scratch convolution, set-based IoU counting and an
//! exhaustive assignment search. None of them call into the code they
//! check.

#![allow(dead_code)]

pub mod gradsuite;

use std::collections::HashSet;

use meta3dseg::geometry::{
    sample_surface_points, voxelize, Category, DatasetEntry, Split,
};
use meta3dseg::learner::ArchitectureConfig;

/// Central finite-difference gradient of `f` at `x`.
pub fn fd_gradient<F>(mut f: F, x: &[f64], eps: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + eps;
        let hi = f(&probe);
        probe[i] = x[i] - eps;
        let lo = f(&probe);
        probe[i] = x[i];
        grad.push((hi - lo) / (2.0 * eps));
    }
    grad
}

/// Worst relative error between two gradients, with a unit floor on the
/// denominator so near-zero components compare absolutely.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// Textbook strided cross-correlation with zero padding. Input is
/// `[ci, d, h, w]`, weights `[co, ci, k, k, k]`, output `[co, od, oh, ow]`.
#[allow(clippy::too_many_arguments)]
pub fn naive_conv3d(
    x: &[f32],
    xs: [usize; 4],
    w: &[f32],
    ws: [usize; 5],
    b: &[f32],
    stride: usize,
    padding: usize,
) -> (Vec<f32>, [usize; 4]) {
    let [ci, d, h, wd] = xs;
    let [co, wci, k, _, _] = ws;
    assert_eq!(ci, wci);
    let out_dim = |n: usize| (n + 2 * padding - k) / stride + 1;
    let (od, oh, ow) = (out_dim(d), out_dim(h), out_dim(wd));
    let mut out = vec![0.0f32; co * od * oh * ow];
    for c_out in 0..co {
        for zo in 0..od {
            for yo in 0..oh {
                for xo in 0..ow {
                    let mut acc = b[c_out];
                    for c_in in 0..ci {
                        for kz in 0..k {
                            for ky in 0..k {
                                for kx in 0..k {
                                    let zi = (zo * stride + kz) as isize - padding as isize;
                                    let yi = (yo * stride + ky) as isize - padding as isize;
                                    let xi = (xo * stride + kx) as isize - padding as isize;
                                    if zi < 0
                                        || yi < 0
                                        || xi < 0
                                        || zi as usize >= d
                                        || yi as usize >= h
                                        || xi as usize >= wd
                                    {
                                        continue;
                                    }
                                    let xv = x[((c_in * d + zi as usize) * h + yi as usize) * wd
                                        + xi as usize];
                                    let wv = w[(((c_out * ci + c_in) * k + kz) * k + ky) * k + kx];
                                    acc += xv * wv;
                                }
                            }
                        }
                    }
                    out[((c_out * od + zo) * oh + yo) * ow + xo] = acc;
                }
            }
        }
    }
    (out, [co, od, oh, ow])
}

/// Per-part IoU computed with literal index sets.
pub fn iou_by_sets(pred: &[usize], gt: &[usize], n_parts: usize) -> Vec<f64> {
    (0..n_parts)
        .map(|part| {
            let p: HashSet<usize> = pred
                .iter()
                .enumerate()
                .filter(|&(_, &l)| l == part)
                .map(|(i, _)| i)
                .collect();
            let g: HashSet<usize> = gt
                .iter()
                .enumerate()
                .filter(|&(_, &l)| l == part)
                .map(|(i, _)| i)
                .collect();
            let union = p.union(&g).count();
            if union == 0 {
                1.0
            } else {
                p.intersection(&g).count() as f64 / union as f64
            }
        })
        .collect()
}

/// Highest pointwise match count any branch-to-part mapping can reach,
/// found by trying every one of the n_parts^c mappings.
pub fn best_mapping_matches(branches: &[usize], gt: &[usize], c: usize, n_parts: usize) -> usize {
    let mut best = 0;
    let total = n_parts.pow(c as u32);
    for code in 0..total {
        let mut mapping = Vec::with_capacity(c);
        let mut rest = code;
        for _ in 0..c {
            mapping.push(rest % n_parts);
            rest /= n_parts;
        }
        let matches = branches
            .iter()
            .zip(gt)
            .filter(|&(&b, &g)| mapping[b] == g)
            .count();
        best = best.max(matches);
    }
    best
}

/// A few-hundred-parameter architecture for fast gradient checks.
pub fn tiny_arch() -> ArchitectureConfig {
    ArchitectureConfig {
        resolution: 4,
        conv_channels: vec![2, 4],
        decoder_dims: vec![6],
        predictor_dims: vec![4],
        latent_dim: 3,
        f1_hidden_dims: vec![],
        f2_hidden_dims: vec![],
    }
}

/// Small procedurally generated shapes voxelized at the tiny resolution.
pub fn tiny_entries(n: usize, resolution: usize) -> Vec<DatasetEntry> {
    let categories = [Category::Table, Category::Mug, Category::Chair];
    (0..n)
        .map(|i| {
            let category = categories[i % categories.len()];
            let seed = 40 + i as u64;
            let shape =
                meta3dseg::geometry::generate_shape_sampled(category, seed).expect("generates");
            DatasetEntry {
                id: format!("{category}-{i}"),
                category,
                seed,
                split: Split::Train,
                grid: voxelize(&shape, resolution).expect("voxelizes"),
                cloud: sample_surface_points(&shape, 32, 900 + i as u64).expect("samples"),
            }
        })
        .collect()
}

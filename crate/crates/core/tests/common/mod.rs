//! Oracles and fixtures shared by the integration tests.

#![allow(dead_code)]

use nalgebra::DMatrix;
use pamlab_core::grid::{GridFunction, GridSpec};
use pamlab_core::lattice::LatticeRegion;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `Δᵈ + V` with zero boundary, assembled independently as a dense matrix.
pub fn dense_matrix(region: &LatticeRegion, v: &[f64]) -> DMatrix<f64> {
    let n = region.len();
    let d = region.dim();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (i, z) in region.sites().enumerate() {
        m[(i, i)] = v[i] - 2.0 * d as f64;
        for a in 0..d {
            for step in [-1i64, 1] {
                let mut y = z.clone();
                y[a] += step;
                if let Some(j) = region.index_of(&y) {
                    m[(i, j)] = 1.0;
                }
            }
        }
    }
    m
}

/// Largest eigenvalue of [`dense_matrix`] from nalgebra.
pub fn dense_top_eigenvalue(region: &LatticeRegion, v: &[f64]) -> f64 {
    dense_matrix(region, v).symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn uniform_values(n: usize, rng: &mut ChaCha8Rng, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
}

pub fn normalized(mut g: GridFunction<f64>) -> GridFunction<f64> {
    let s = g.norm_sq().sqrt();
    g.values.iter_mut().for_each(|v| *v /= s);
    g
}

/// Unit-norm sum of two or three Gaussian bumps of random centre, width and
/// weight, vanishing on the boundary of the grid cube.
pub fn random_profile(gr: GridSpec<f64>, rng: &mut ChaCha8Rng) -> GridFunction<f64> {
    let d = gr.d;
    let l = gr.half_width;
    let bumps: Vec<(Vec<f64>, f64, f64)> = (0..rng.gen_range(2..4))
        .map(|_| {
            let c: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect();
            (c, rng.gen_range(0.4..2.5), rng.gen_range(0.1..1.0))
        })
        .collect();
    normalized(GridFunction::from_fn(gr, |x| {
        let edge: f64 = x.iter().map(|v| (1.0 - (v / l).powi(2)).max(0.0)).product();
        let s: f64 = bumps
            .iter()
            .map(|(c, w, a)| {
                let r2: f64 = x.iter().zip(c).map(|(xi, ci)| (xi - ci).powi(2)).sum();
                a * (-r2 / (w * w)).exp()
            })
            .sum();
        edge * s
    }))
}

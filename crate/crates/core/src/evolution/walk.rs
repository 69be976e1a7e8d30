use std::collections::BTreeMap;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::LatticeRegion;
use crate::potential::{PotentialField, ScaleTable};
use crate::rng::{open01, stream_rng, Rng};
use crate::stats::mean_stderr;

/// Occupation times of one path on `[0, t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimes {
    pub times: BTreeMap<Vec<i64>, f64>,
    pub endpoint: Vec<i64>,
    /// Whether the path left the killing region (it stops there).
    pub escaped: bool,
}

/// Continuous-time simple random walk from the origin with total jump rate
/// `2d`, run until time `t` or until it leaves `kill`.
pub fn simulate_walk(rng: &mut Rng, d: usize, t: f64, kill: Option<&LatticeRegion>) -> LocalTimes {
    let mut z = vec![0i64; d];
    let mut s = 0.0;
    let mut times = BTreeMap::new();
    let rate = 2.0 * d as f64;
    loop {
        let hold = -open01(rng).ln() / rate;
        if s + hold >= t {
            *times.entry(z.clone()).or_insert(0.0) += t - s;
            return LocalTimes { times, endpoint: z, escaped: false };
        }
        *times.entry(z.clone()).or_insert(0.0) += hold;
        s += hold;
        step(rng, &mut z);
        if kill.is_some_and(|k| !k.contains(&z)) {
            return LocalTimes { times, endpoint: z, escaped: true };
        }
    }
}

fn step(rng: &mut Rng, z: &mut [i64]) {
    let k = rng.gen_range(0..2 * z.len());
    z[k / 2] += if k % 2 == 0 { 1 } else { -1 };
}

/// `⟨ℓ_t, ξ⟩` along one path, or `None` if it leaves `kill`. Consumes the
/// same draws as [`simulate_walk`].
fn path_exponent(rng: &mut Rng, field: &PotentialField, region: &LatticeRegion, kill: &LatticeRegion, t: f64) -> Option<f64> {
    let d = region.dim();
    let mut z = vec![0i64; d];
    let mut s = 0.0;
    let mut acc = 0.0;
    let rate = 2.0 * d as f64;
    loop {
        let xi = field.values[region.index_of(&z)?];
        let hold = -open01(rng).ln() / rate;
        if s + hold >= t {
            return Some(acc + (t - s) * xi);
        }
        acc += hold * xi;
        s += hold;
        step(rng, &mut z);
        if !kill.contains(&z) {
            return None;
        }
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FkEstimate {
    pub t: f64,
    pub mean: f64,
    pub stderr: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Fraction of paths that left the killing region.
    pub escaped: f64,
}

fn fk_in(field: &PotentialField, kill: &LatticeRegion, t: f64, n: usize, seed: u64) -> FkEstimate {
    let region = field.region();
    let samples: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            path_exponent(&mut rng, field, &region, kill, t)
        })
        .collect();
    let escaped = samples.iter().filter(|s| s.is_none()).count() as f64 / n.max(1) as f64;
    let weights: Vec<f64> = samples.iter().map(|s| s.map_or(0.0, f64::exp)).collect();
    let (mean, stderr) = mean_stderr(&weights);
    FkEstimate { t, mean, stderr, replicas: n, seed, escaped }
}

/// Estimates `U(t) = E₀[exp ∫₀ᵗ ξ(X_s) ds]` with `n` walks; walk `i` uses
/// stream `i` of `seed`. Paths leaving the field's box are killed, so the
/// estimator targets the zero-boundary solution on that box.
pub fn fk_estimate(field: &PotentialField, t: f64, n: usize, seed: u64) -> FkEstimate {
    fk_in(field, &field.region(), t, n, seed)
}

/// As [`fk_estimate`], with paths leaving `B_{⌊3Rα(t)⌋}` contributing 0.
pub fn fk_restricted(field: &PotentialField, t: f64, r: f64, table: &ScaleTable, n: usize, seed: u64) -> Result<FkEstimate> {
    let alpha = table.alpha(t, field.d())?;
    let radius = (3.0 * r * alpha).floor() as i64;
    let kill = LatticeRegion::centered(field.d(), radius).intersect(&field.region());
    Ok(fk_in(field, &kill, t, n, seed))
}

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metric::{aligned_shifts, best_shift_distance, ShapeWindow};
use crate::error::{domain, Error, Result};
use crate::evolution::{evolve_with, total_mass, EvolveMethod};
use crate::lattice::{BoxSpec, LatticeRegion};
use crate::potential::{sample_field, sample_field_tilted, shift_rescale, PotentialDistribution, PotentialField, ScaleTable};
use crate::rng::{derive_seed, stream_rng};
use crate::spectral::principal_eigen_discrete;
use crate::stats::{log_sum_exp, pairwise_sum, summarize_log_weights, LogWeightSummary};
use crate::variational::psi_hat_at;

/// Eigenvalue tolerance of the weights.
const EIGEN_TOL: f64 = 1e-10;

/// `{ψ̂(0) + 1, 2(ψ̂(0) + 1)}`.
pub fn default_m_levels(rho: f64, d: usize) -> Vec<f64> {
    let top = psi_hat_at(rho, &vec![0.0; d]) + 1.0;
    vec![top, 2.0 * top]
}

/// Per-site exponential tilt: site `z` is drawn from the law with density
/// `e^{θ_z ξ - H(θ_z)}` relative to the original one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltSpec {
    pub description: String,
    pub theta: Vec<f64>,
    /// `H(θ_z)`.
    pub log_normalizer: Vec<f64>,
}

impl TiltSpec {
    pub fn new(dist: &PotentialDistribution, theta: Vec<f64>, description: impl Into<String>) -> Result<Self> {
        let log_normalizer = theta.par_iter().map(|&th| dist.cgf(th)).collect::<Result<_>>()?;
        Ok(Self { description: description.into(), theta, log_normalizer })
    }

    /// `θ_z = (t/α^d)·e^{-1}·e^{ψ̂(z/α)/ρ}` on the sites of `B_{⌊3Rα⌋}`, zero on
    /// the rest of `region`.
    pub fn default_for(dist: &PotentialDistribution, table: &ScaleTable, t: f64, r: f64, region: &LatticeRegion) -> Result<Self> {
        Self::parabola(dist, table, t, r, region, &vec![0.0; region.dim()])
    }

    /// The default tilt with the parabola centred at `centre` (lattice units),
    /// `θ_z = (t/α^d)·e^{-1}·e^{ψ̂((z - centre)/α)/ρ}`, still clipped to `B_{⌊3Rα⌋}`.
    pub fn parabola(
        dist: &PotentialDistribution,
        table: &ScaleTable,
        t: f64,
        r: f64,
        region: &LatticeRegion,
        centre: &[f64],
    ) -> Result<Self> {
        let d = region.dim();
        let rho = dist.rho();
        if !(rho > 0.0) {
            return domain("the default tilt needs rho > 0");
        }
        let alpha = table.alpha(t, d)?;
        let big_t = t / alpha.powi(d as i32);
        let inner = (3.0 * r * alpha).floor() as i64;
        let theta = region
            .sites()
            .map(|z| {
                if z.iter().all(|&zi| zi.abs() <= inner) {
                    let x: Vec<f64> = z.iter().zip(centre).map(|(&zi, c)| (zi as f64 - c) / alpha).collect();
                    big_t * (psi_hat_at(rho, &x) / rho - 1.0).exp()
                } else {
                    0.0
                }
            })
            .collect();
        Self::new(dist, theta, format!("parabola tilt at t = {t} centred at {centre:?}"))
    }

    /// `Σ_z (H(θ_z) - θ_z ξ(z))`, the log likelihood ratio of a tilted sample.
    pub fn log_likelihood_ratio(&self, values: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .theta
            .iter()
            .zip(&self.log_normalizer)
            .zip(values)
            .map(|((th, h), v)| if *th == 0.0 { 0.0 } else { h - th * v })
            .collect();
        pairwise_sum(&terms)
    }
}

/// Uniform mixture of per-site tilts. A draw picks a component uniformly and
/// is weighted by `p/q_mix`, so the estimators stay unbiased.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltMixture {
    pub description: String,
    pub components: Vec<TiltSpec>,
}

impl TiltMixture {
    pub fn single(tilt: TiltSpec) -> Self {
        Self { description: tilt.description.clone(), components: vec![tilt] }
    }

    /// Parabola tilts centred at every point of `(1/refine)·Zᵈ` with
    /// `|c|_∞ ≤ radius` (lattice units).
    pub fn parabola_translates(
        dist: &PotentialDistribution,
        table: &ScaleTable,
        t: f64,
        r: f64,
        region: &LatticeRegion,
        radius: usize,
        refine: usize,
    ) -> Result<Self> {
        let d = region.dim();
        let refine = refine.max(1);
        let offsets = LatticeRegion::centered(d, (radius * refine) as i64);
        let components = offsets
            .sites()
            .map(|k| {
                let centre: Vec<f64> = k.iter().map(|&v| v as f64 / refine as f64).collect();
                TiltSpec::parabola(dist, table, t, r, region, &centre)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            description: format!("parabola tilts at t = {t} centred on (1/{refine})Z^d within {radius}"),
            components,
        })
    }

    /// `ln(p/q_mix) = ln K - ln Σ_k e^{-llr_k}`.
    pub fn log_likelihood_ratio(&self, values: &[f64]) -> f64 {
        let neg: Vec<f64> = self.components.iter().map(|c| -c.log_likelihood_ratio(values)).collect();
        (self.components.len() as f64).ln() - log_sum_exp(&neg)
    }
}

fn draw(dist: &PotentialDistribution, box_spec: BoxSpec, tilt: Option<&TiltMixture>, seed: u64) -> Result<(PotentialField, f64)> {
    match tilt {
        None => Ok((sample_field(dist, box_spec, seed)?, 0.0)),
        Some(mix) => {
            // Component choice on its own stream, away from the site chunks.
            let mut rng = stream_rng(seed, u64::MAX);
            let k = rng.gen_range(0..mix.components.len());
            let field = sample_field_tilted(dist, box_spec, &mix.components[k].theta, seed)?;
            let llr = mix.log_likelihood_ratio(&field.values);
            Ok((field, llr))
        }
    }
}

/// Importance-sampled `ln⟨e^{t λᵈ_B(ξ)}⟩` on a lattice box; replica `i` uses
/// seed `derive_seed(seed, i)`.
pub fn log_eigen_moment(
    dist: &PotentialDistribution,
    box_spec: BoxSpec,
    t: f64,
    tilt: Option<&TiltMixture>,
    n: usize,
    seed: u64,
) -> Result<LogWeightSummary> {
    let region = box_spec.region()?;
    let log_w: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (field, llr) = draw(dist, box_spec, tilt, derive_seed(seed, i as u64))?;
            Ok(t * principal_eigen_discrete(&region, &field.values, EIGEN_TOL)?.value + llr)
        })
        .collect::<Result<_>>()?;
    summarize_log_weights(&log_w).ok_or(Error::AllWeightsZero)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiltChoice {
    None,
    /// The parabola tilt [`TiltSpec::default_for`] centred at the origin.
    Centered,
    /// Uniform mixture of the parabola tilt recentred at the half-integer
    /// lattice points `c` with `|c|_∞ ≤ ⌊3Rα⌋`. The weight `e^{tλ}` does not
    /// see where the island sits, so a single centre leaves translated islands
    /// to rare draws with huge weights.
    Default,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfinementConfig {
    pub d: usize,
    pub t_grid: Vec<f64>,
    pub r: f64,
    /// `ρ` of the parabola; the distribution's own when absent.
    pub rho: Option<f64>,
    /// Truncation levels; [`default_m_levels`] when absent.
    pub m_levels: Option<Vec<f64>>,
    pub eps_grid: Vec<f64>,
    pub replicas: usize,
    pub tilt: TiltChoice,
    pub seed: u64,
    /// Midpoint cells per axis of the window `Q_R`.
    pub window_cells: usize,
    /// ESS below this value is flagged.
    pub ess_threshold: f64,
}

impl Default for ConfinementConfig {
    fn default() -> Self {
        Self {
            d: 1,
            t_grid: vec![30.0, 100.0, 300.0],
            r: 1.0,
            rho: None,
            m_levels: None,
            eps_grid: vec![0.0, 0.1, 0.3, 0.5, 1.0],
            replicas: 20000,
            tilt: TiltChoice::Default,
            seed: 1,
            window_cells: 200,
            ess_threshold: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRow {
    pub t: f64,
    pub replica: usize,
    pub log_weight: f64,
    pub distance: f64,
    pub argmin_shift: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSlice {
    pub t: f64,
    pub alpha: f64,
    /// `G_t(ε)` per entry of the ε grid.
    pub tail: Vec<f64>,
    /// Binomial standard error `sqrt(G(1-G)/ESS)` per ε.
    pub tail_stderr: Vec<f64>,
    pub effective_sample_size: f64,
    pub low_ess: bool,
    pub tilt: Option<String>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfinementReport {
    pub rho: f64,
    pub d: usize,
    pub r: f64,
    pub m_levels: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    pub slices: Vec<TimeSlice>,
    #[serde(skip)]
    pub rows: Vec<ReplicaRow>,
}

/// Mass-weighted fraction of rescaled profiles staying `ε`-far from every
/// shift of the parabola.
///
/// Per time `t`: replica `i` samples ξ on `B_{⌈3Rα⌉}` with seed
/// `derive_seed(derive_seed(seed, k), i)` (`k` the index of `t`), has log weight
/// `t·λᵈ_{B_{⌊3Rα⌋}}(ξ_t ∧ M/α²)` plus the tilt log likelihood ratio (`M` the top
/// level) and distance `D_i = min_M min_x d_R(ξ̄_t(x+·) ∧ M, ψ̂)` over shifts
/// `x ∈ Q_{2R} ∩ α^{-1}Zᵈ`. `G_t(ε) = Σ w_i 1{D_i > ε} / Σ w_i`.
pub fn confinement_experiment(dist: &PotentialDistribution, table: &ScaleTable, cfg: &ConfinementConfig) -> Result<ConfinementReport> {
    let rho = cfg.rho.unwrap_or_else(|| dist.rho());
    let d = cfg.d;
    if !(rho > 0.0) || d == 0 || cfg.replicas == 0 || !(cfg.r > 0.0) {
        return domain("confinement needs rho > 0, d >= 1, R > 0 and replicas");
    }
    let m_levels = cfg.m_levels.clone().unwrap_or_else(|| default_m_levels(rho, d));
    let m_top = m_levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m_top.is_finite() {
        return domain("no truncation level");
    }
    let window = ShapeWindow::new(d, cfg.r, rho, cfg.window_cells)?;
    let mut slices = Vec::with_capacity(cfg.t_grid.len());
    let mut rows = Vec::new();
    for (k, &t) in cfg.t_grid.iter().enumerate() {
        let alpha = table.alpha(t, d)?;
        let a2 = alpha * alpha;
        let outer = (3.0 * cfg.r * alpha).ceil() as usize;
        let inner = (3.0 * cfg.r * alpha).floor() as i64;
        let box_spec = BoxSpec::lattice(d, outer);
        let region = box_spec.region()?;
        let inner_region = LatticeRegion::centered(d, inner);
        let tilt = match cfg.tilt {
            TiltChoice::None => None,
            TiltChoice::Centered => Some(TiltMixture::single(TiltSpec::default_for(dist, table, t, cfg.r, &region)?)),
            TiltChoice::Default => Some(TiltMixture::parabola_translates(
                dist,
                table,
                t,
                cfg.r,
                &region,
                (3.0 * cfg.r * alpha).floor() as usize,
                2,
            )?),
        };
        let shifts = aligned_shifts(d, 2.0 * cfg.r, 1.0 / alpha);
        let seed_t = derive_seed(cfg.seed, k as u64);
        let replicas: Vec<ReplicaRow> = (0..cfg.replicas)
            .into_par_iter()
            .map(|i| {
                let (field, llr) = draw(dist, box_spec, tilt.as_ref(), derive_seed(seed_t, i as u64))?;
                let (xi_t, bar) = shift_rescale(&field, t, table, Some(3.0 * cfg.r))?;
                let capped: Vec<f64> = inner_region.restrict(&region, &xi_t.values).iter().map(|v| v.min(m_top / a2)).collect();
                let lambda = principal_eigen_discrete(&inner_region, &capped, EIGEN_TOL)?.value;
                let mut best: Option<(f64, Vec<f64>)> = None;
                for &m in &m_levels {
                    let s = best_shift_distance(&bar, &window, m, &shifts)?;
                    if best.as_ref().is_none_or(|(v, _)| s.value < *v) {
                        best = Some((s.value, s.argmin_shift));
                    }
                }
                let (distance, argmin_shift) = best.expect("at least one level");
                Ok(ReplicaRow { t, replica: i, log_weight: t * lambda + llr, distance, argmin_shift })
            })
            .collect::<Result<_>>()?;
        let log_w: Vec<f64> = replicas.iter().map(|r| r.log_weight).collect();
        let summary = summarize_log_weights(&log_w).ok_or(Error::AllWeightsZero)?;
        let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = log_w.iter().map(|l| (l - top).exp()).collect();
        let total = pairwise_sum(&w);
        let mut tail = Vec::with_capacity(cfg.eps_grid.len());
        let mut tail_stderr = Vec::with_capacity(cfg.eps_grid.len());
        for &eps in &cfg.eps_grid {
            let hit: Vec<f64> = w.iter().zip(&replicas).map(|(w, r)| if r.distance > eps { *w } else { 0.0 }).collect();
            let g = (pairwise_sum(&hit) / total).clamp(0.0, 1.0);
            tail.push(g);
            tail_stderr.push((g * (1.0 - g) / summary.ess).sqrt());
        }
        slices.push(TimeSlice {
            t,
            alpha,
            tail,
            tail_stderr,
            effective_sample_size: summary.ess,
            low_ess: summary.ess < cfg.ess_threshold,
            tilt: tilt.map(|s| s.description),
            seed: seed_t,
        });
        rows.extend(replicas);
    }
    Ok(ConfinementReport {
        rho,
        d,
        r: cfg.r,
        m_levels,
        eps_grid: cfg.eps_grid.clone(),
        t_grid: cfg.t_grid.clone(),
        replicas: cfg.replicas,
        seed: cfg.seed,
        slices,
        rows,
    })
}

/// `⟨U(t)^p⟩^{1/p} / ⟨U(t)^q⟩^{1/q}` over `n` fields on `box_spec`, with `U`
/// from the exact semigroup; replica `i` uses seed `derive_seed(seed, i)`.
pub fn intermittency_ratio(dist: &PotentialDistribution, p: f64, q: f64, t: f64, box_spec: BoxSpec, n: usize, seed: u64) -> Result<f64> {
    if !(p > 0.0) || !(q >= p) || n == 0 {
        return domain("intermittency ratio needs 0 < p <= q and replicas");
    }
    let log_u: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let field = sample_field(dist, box_spec, derive_seed(seed, i as u64))?;
            Ok(total_mass(&evolve_with(&field, t, 1e-10, EvolveMethod::Exact)?).ln())
        })
        .collect::<Result<_>>()?;
    let log_moment = |s: f64| {
        let scaled: Vec<f64> = log_u.iter().map(|l| s * l).collect();
        (log_sum_exp(&scaled) - (n as f64).ln()) / s
    };
    Ok((log_moment(p) - log_moment(q)).exp())
}

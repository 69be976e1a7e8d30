use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuum::ContinuumField;
use crate::error::{domain, Result};
use crate::grid::GridFunction;
use crate::lattice::BoxSpec;
use crate::potential::{centering, sample_field, PotentialDistribution, ScaleTable, StepFunction};
use crate::rng::derive_seed;
use crate::stats::{log_sum_exp, pairwise_sum, summarize_log_weights};
use crate::variational::log_functional_l_cube;

/// Profiles whose exponential mass `∫_{Q_r} e^{ψ/ρ}` can be evaluated.
pub trait ExponentialMass {
    /// `ln ∫_{Q_r} e^{ψ/ρ}`.
    fn log_exp_integral(&self, rho: f64, r: f64) -> Result<f64>;
}

impl ExponentialMass for GridFunction<f64> {
    fn log_exp_integral(&self, rho: f64, r: f64) -> Result<f64> {
        // ln ℒ_r = ln(ρ/e) + ln ∫ e^{ψ/ρ}.
        Ok(log_functional_l_cube(self, rho, r)? + 1.0 - rho.ln())
    }
}

impl ExponentialMass for StepFunction {
    /// Exact: cell values times the cell volumes inside `Q_r`.
    fn log_exp_integral(&self, rho: f64, r: f64) -> Result<f64> {
        if self.half_width() < r {
            return domain("step function does not cover the cube");
        }
        let a = self.alpha;
        let mut terms = Vec::new();
        for (i, z) in self.region.sites().enumerate() {
            let mut log_vol = 0.0;
            for &zi in &z {
                let len = (((zi + 1) as f64 / a).min(r) - (zi as f64 / a).max(-r)).max(0.0);
                log_vol += len.ln();
            }
            if log_vol > f64::NEG_INFINITY {
                terms.push(log_vol + self.cell_value(i) / rho);
            }
        }
        Ok(log_sum_exp(&terms))
    }
}

/// `ln F_{t,R}(ψ) = (t/α²)·ρ·ln((e/ρ)ℒ_{3R}(ψ))`.
pub fn functional_f<P: ExponentialMass + ?Sized>(psi: &P, t: f64, r: f64, rho: f64, table: &ScaleTable, d: usize) -> Result<f64> {
    let alpha = table.alpha(t, d)?;
    Ok(t / (alpha * alpha) * rho * psi.log_exp_integral(rho, 3.0 * r)?)
}

/// `|ℒ_{3R}(ψ) - ρ| ≤ β`.
pub fn d_beta_member<P: ExponentialMass + ?Sized>(psi: &P, beta: f64, r: f64, rho: f64) -> Result<bool> {
    let l = rho / std::f64::consts::E * psi.log_exp_integral(rho, 3.0 * r)?.exp();
    Ok((l - rho).abs() <= beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulantCheck {
    pub t: f64,
    pub finite_t: f64,
    pub limit: f64,
}

/// Exact finite-`t` cumulant of `f` against the rescaled potential,
/// `(α²/t) Σ_z [H(t c_z) - c_z α^d H(t/α^d)]` with `c_z = ∫_{cell_z ∩ Q_R} f`,
/// next to its limit `ρ ∫_{Q_R} f ln f` (the field's own box quadrature, `subcells` per cell and axis).
pub fn cumulant_rate_check<F: ContinuumField<f64> + ?Sized + Sync>(
    table: &ScaleTable,
    rho: f64,
    f: &F,
    r: f64,
    t: f64,
    subcells: usize,
) -> Result<CumulantCheck> {
    let d = f.dim();
    if f.half_width() < r {
        return domain("f is not defined on Q_R");
    }
    let alpha = table.alpha(t, d)?;
    let big_t = t / alpha.powi(d as i32);
    let h_big = table.cgf(big_t)?;
    let z_lo = (-r * alpha).floor() as i64;
    let z_hi = (r * alpha).ceil() as i64 - 1;
    let per_axis = (z_hi - z_lo + 1) as usize;
    let cells = per_axis.pow(d as u32);
    let terms: Vec<Result<(f64, f64)>> = (0..cells)
        .into_par_iter()
        .map(|i| {
            let mut rest = i;
            let mut lo = vec![0.0; d];
            let mut hi = vec![0.0; d];
            for a in (0..d).rev() {
                let z = z_lo + (rest % per_axis) as i64;
                rest /= per_axis;
                lo[a] = (z as f64 / alpha).max(-r);
                hi[a] = ((z + 1) as f64 / alpha).min(r);
            }
            let c = f.box_integral(&lo, &hi, subcells);
            let cumulant = if c == 0.0 { 0.0 } else { table.cgf(t * c)? - c * alpha.powi(d as i32) * h_big };
            Ok((cumulant, f.entropy_box_integral(&lo, &hi, subcells)))
        })
        .collect();
    let mut cum = Vec::with_capacity(cells);
    let mut ent = Vec::with_capacity(cells);
    for term in terms {
        let (c, e) = term?;
        cum.push(c);
        ent.push(e);
    }
    Ok(CumulantCheck { t, finite_t: alpha * alpha / t * pairwise_sum(&cum), limit: rho * pairwise_sum(&ent) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealedMoment {
    pub t: f64,
    pub alpha: f64,
    /// `D_t = K t/α²`, the exponent of `(e/ρ)ℒ_{3R}`.
    pub power: f64,
    pub m: f64,
    /// `(α²/t) ln⟨F_{t,R}(ξ̄_t ∧ M)^{K/ρ}⟩`.
    pub rate: f64,
    pub stderr: f64,
    pub ess: f64,
    /// Effective sample size below 10.
    pub low_ess: bool,
}

/// Monte Carlo estimate of `(α²/t) ln⟨F_{t,R}(ξ̄_t ∧ M)^{K/ρ}⟩` from `n`
/// fields; replica `i` samples with seed `derive_seed(seed, i)`.
///
/// `ℒ_{3R}` is taken over the cells of the lattice box `B_{⌊3Rα⌋}`, so
/// `(e/ρ)ℒ_{3R} = α^{-d} Σ_z e^{(α² ξ_t(z) ∧ M)/ρ}`.
#[allow(clippy::too_many_arguments)]
pub fn annealed_f_moment(
    dist: &PotentialDistribution,
    table: &ScaleTable,
    d: usize,
    t: f64,
    r: f64,
    k: f64,
    m: f64,
    n: usize,
    seed: u64,
) -> Result<AnnealedMoment> {
    let rho = dist.rho();
    if !(k > 0.0) || !(rho > 0.0) || n == 0 {
        return domain("annealed moment needs K > 0, rho > 0 and at least one replica");
    }
    let alpha = table.alpha(t, d)?;
    let a2 = alpha * alpha;
    let shift = centering(table, t, d)?;
    let power = k * t / a2;
    let radius = (3.0 * r * alpha).floor() as usize;
    let log_cell = -(d as f64) * alpha.ln();
    let log_w: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let field = sample_field(dist, BoxSpec::lattice(d, radius), derive_seed(seed, i as u64))?;
            let exps: Vec<f64> = field.values.iter().map(|v| (a2 * (v - shift)).min(m) / rho).collect();
            Ok(power * (log_cell + log_sum_exp(&exps)))
        })
        .collect::<Result<_>>()?;
    let s = summarize_log_weights(&log_w).ok_or(crate::error::Error::AllWeightsZero)?;
    Ok(AnnealedMoment {
        t,
        alpha,
        power,
        m,
        rate: s.log_mean / (t / a2),
        stderr: s.log_mean_stderr / (t / a2),
        ess: s.ess,
        low_ess: s.ess < 10.0,
    })
}

/// `⟨(Σ_{z ≤ sites} X_z)^power⟩` for i.i.d. `X_z` with `⟨X^k⟩ = moment(k)`,
/// regrouped over occupation numbers: `Σ_{|k| = power} (power; k) Π_z ⟨X^{k_z}⟩`.
pub fn annealed_partition_sum(moment: impl Fn(usize) -> f64, sites: usize, power: usize) -> f64 {
    let moments: Vec<f64> = (0..=power).map(&moment).collect();
    let mut log_fact = vec![0.0f64; power + 1];
    for j in 1..=power {
        log_fact[j] = log_fact[j - 1] + (j as f64).ln();
    }
    let mut terms = Vec::new();
    let mut k = vec![0usize; sites];
    compositions(&mut k, 0, power, &mut |k| {
        let coef = (log_fact[power] - k.iter().map(|&j| log_fact[j]).sum::<f64>()).exp().round();
        terms.push(coef * k.iter().map(|&j| moments[j]).product::<f64>());
    });
    pairwise_sum(&terms)
}

fn compositions(k: &mut [usize], pos: usize, left: usize, visit: &mut impl FnMut(&[usize])) {
    if pos + 1 == k.len() {
        k[pos] = left;
        visit(k);
        return;
    }
    for j in (0..=left).rev() {
        k[pos] = j;
        compositions(k, pos + 1, left - j, visit);
    }
}

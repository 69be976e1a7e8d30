use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;

use super::distribution::{PotentialDistribution, CGF_ABS_TOL};
use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate, QuadOptions};

/// Width of the table panels in `ln t`.
const PANEL: f64 = 0.25;
/// Relative residual accepted for the scale equation.
pub const ALPHA_RTOL: f64 = 1e-8;

type KappaFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Source {
    Distribution(PotentialDistribution),
    Kappa(KappaFn),
}

/// Memoized `H`, `κ` and `α` for one distribution.
///
/// `κ(t) = H(t) - ∫_0^{ln t} H(e^u) du`; the integral is stored cumulatively at
/// the nodes `u_k = k/4`, so each evaluation integrates at most one panel.
/// Built once, then safe to share between threads.
pub struct ScaleTable {
    source: Source,
    cumulative: Vec<f64>,
    kappa_nodes: Vec<f64>,
    h_cache: RwLock<HashMap<u64, f64>>,
    kappa_cache: RwLock<HashMap<u64, f64>>,
    alpha_cache: RwLock<HashMap<(u64, usize), f64>>,
}

impl fmt::Debug for ScaleTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let source = match &self.source {
            Source::Distribution(d) => format!("{d:?}"),
            Source::Kappa(_) => "synthetic kappa".into(),
        };
        f.debug_struct("ScaleTable").field("source", &source).field("nodes", &self.kappa_nodes.len()).finish()
    }
}

fn panel_opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-10, rel_tol: 1e-11, max_intervals: 200 }
}

impl ScaleTable {
    /// Tabulates `H` and `κ` for `1 ≤ t ≤ t_max` (larger `t` still work, at the
    /// cost of a longer quadrature).
    pub fn new(dist: PotentialDistribution, t_max: f64) -> Result<Self> {
        dist.validate()?;
        if !(t_max >= 1.0) {
            return domain("t_max must be at least 1");
        }
        let panels = (t_max.ln() / PANEL).ceil().max(1.0) as usize;
        let pieces: Vec<f64> = (0..panels)
            .into_par_iter()
            .map(|k| {
                let u0 = k as f64 * PANEL;
                let mut err = None;
                let v = integrate(
                    |u: f64| match dist.cgf(u.exp()) {
                        Ok(h) => h,
                        Err(e) => {
                            err.get_or_insert(e);
                            f64::NAN
                        }
                    },
                    u0,
                    u0 + PANEL,
                    panel_opts(),
                );
                match err {
                    Some(e) => Err(e),
                    None => v.map(|r| r.value),
                }
            })
            .collect::<Result<_>>()?;
        let mut cumulative = Vec::with_capacity(panels + 1);
        cumulative.push(0.0);
        for p in pieces {
            cumulative.push(cumulative.last().unwrap() + p);
        }
        let kappa_nodes = cumulative
            .iter()
            .enumerate()
            .map(|(k, c)| Ok(dist.cgf((k as f64 * PANEL).exp())? - c))
            .collect::<Result<_>>()?;
        Ok(Self {
            source: Source::Distribution(dist),
            cumulative,
            kappa_nodes,
            h_cache: RwLock::default(),
            kappa_cache: RwLock::default(),
            alpha_cache: RwLock::default(),
        })
    }

    /// Table driven by a prescribed `κ`; `H` is unavailable.
    pub fn from_kappa(kappa: impl Fn(f64) -> f64 + Send + Sync + 'static, t_max: f64) -> Self {
        let panels = (t_max.max(1.0).ln() / PANEL).ceil().max(1.0) as usize;
        let kappa_nodes = (0..=panels).map(|k| kappa((k as f64 * PANEL).exp())).collect();
        Self {
            source: Source::Kappa(Arc::new(kappa)),
            cumulative: Vec::new(),
            kappa_nodes,
            h_cache: RwLock::default(),
            kappa_cache: RwLock::default(),
            alpha_cache: RwLock::default(),
        }
    }

    pub fn distribution(&self) -> Option<&PotentialDistribution> {
        match &self.source {
            Source::Distribution(d) => Some(d),
            Source::Kappa(_) => None,
        }
    }

    /// Absolute accuracy of `H` values.
    pub fn tolerance(&self) -> f64 {
        CGF_ABS_TOL
    }

    pub fn cgf(&self, t: f64) -> Result<f64> {
        let dist = match &self.source {
            Source::Distribution(d) => d,
            Source::Kappa(_) => return Err(Error::Unsupported("H of a synthetic kappa table".into())),
        };
        if let Some(v) = self.h_cache.read().unwrap().get(&t.to_bits()) {
            return Ok(*v);
        }
        let v = dist.cgf(t)?;
        self.h_cache.write().unwrap().insert(t.to_bits(), v);
        Ok(v)
    }

    pub fn kappa(&self, t: f64) -> Result<f64> {
        if !(t >= 1.0) {
            return domain(format!("kappa needs t >= 1, got {t}"));
        }
        let dist = match &self.source {
            Source::Kappa(k) => return Ok(k(t)),
            Source::Distribution(d) => *d,
        };
        if let Some(v) = self.kappa_cache.read().unwrap().get(&t.to_bits()) {
            return Ok(*v);
        }
        let u = t.ln();
        let k = ((u / PANEL).floor() as usize).min(self.cumulative.len() - 1);
        let u0 = k as f64 * PANEL;
        let mut err = None;
        let rest = integrate(
            |s: f64| match dist.cgf(s.exp()) {
                Ok(h) => h,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NAN
                }
            },
            u0,
            u.max(u0),
            QuadOptions { max_intervals: 2000, ..panel_opts() },
        );
        if let Some(e) = err {
            return Err(e);
        }
        let v = self.cgf(t)? - self.cumulative[k] - rest?.value;
        self.kappa_cache.write().unwrap().insert(t.to_bits(), v);
        Ok(v)
    }

    fn log_scale_lhs(&self, log_beta: f64, d: usize) -> Result<f64> {
        let k = self.kappa(log_beta.exp())?;
        if !(k > 0.0) || !k.is_finite() {
            return Ok(f64::NAN);
        }
        let h = d as f64 / 2.0;
        Ok((1.0 + h) * log_beta - h * k.ln())
    }

    /// Smallest `t` for which [`Self::alpha`] succeeds in dimension `d`.
    pub fn alpha_threshold(&self, d: usize) -> Result<f64> {
        Ok(self.bracket_start(d)?.1.exp())
    }

    /// Table node minimizing `ln(β^{1+d/2} / κ(β)^{d/2})` among nodes with `κ > 0`.
    fn bracket_start(&self, d: usize) -> Result<(f64, f64)> {
        let h = d as f64 / 2.0;
        let mut best: Option<(f64, f64)> = None;
        for (k, &kap) in self.kappa_nodes.iter().enumerate() {
            if !(kap > 0.0) || !kap.is_finite() {
                continue;
            }
            let u = k as f64 * PANEL;
            let g = (1.0 + h) * u - h * kap.ln();
            if best.is_none_or(|(_, bg)| g < bg) {
                best = Some((u, g));
            }
        }
        best.ok_or_else(|| Error::Domain("kappa is nowhere positive on the table".into()))
    }

    /// `α(t)`: the root of `κ(t/α^d) = t/α^{d+2}`.
    ///
    /// Solved as `β^{1+d/2}/κ(β)^{d/2} = t` by bisection in `ln β` on the bracket
    /// starting at the table node minimizing the left side; `α = (β/κ(β))^{1/2}`.
    pub fn alpha(&self, t: f64, d: usize) -> Result<f64> {
        if d == 0 {
            return domain("dimension must be at least 1");
        }
        if let Some(v) = self.alpha_cache.read().unwrap().get(&(t.to_bits(), d)) {
            return Ok(*v);
        }
        let target = t.ln();
        let (start, g_min) = self.bracket_start(d)?;
        if !(target >= g_min) {
            return Err(Error::AlphaBracket { t, t_min: g_min.exp() });
        }
        let (mut lo, mut hi) = (start, start + 1.0);
        let mut width = 1.0;
        loop {
            let g = self.log_scale_lhs(hi, d)?;
            if g >= target {
                break;
            }
            if !g.is_finite() || hi > 700.0 {
                return Err(Error::AlphaBracket { t, t_min: g_min.exp() });
            }
            lo = hi;
            width *= 2.0;
            hi += width;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let g = self.log_scale_lhs(mid, d)?;
            if g.is_nan() || g < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let beta = (0.5 * (lo + hi)).exp();
        let alpha = (beta / self.kappa(beta)?).sqrt();
        let rhs = t / alpha.powi(d as i32 + 2);
        let residual = (self.kappa(t / alpha.powi(d as i32))? - rhs).abs();
        if !(residual <= ALPHA_RTOL * rhs) {
            return domain(format!("scale equation residual {residual:e} exceeds tolerance at t = {t}"));
        }
        self.alpha_cache.write().unwrap().insert((t.to_bits(), d), alpha);
        Ok(alpha)
    }

    /// `(H(yt) - yH(t), κ(t)·ρ·y·ln y)`.
    pub fn hk_ratio(&self, t: f64, y: f64, rho: f64) -> Result<(f64, f64)> {
        if !(t >= 1.0) || !(y > 0.0) {
            return domain("hk_ratio needs t >= 1 and y > 0");
        }
        if y == 1.0 {
            return Ok((0.0, 0.0));
        }
        let diff = self.cgf(y * t)? - y * self.cgf(t)?;
        Ok((diff, self.kappa(t)? * rho * y * y.ln()))
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::rng::open01;
use crate::stats::log_sum_exp;

/// Law of a single site value ξ(0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialDistribution {
    /// ξ = rho0 · ln ln(1 + E) with E ~ Exp(1).
    TripleExp { rho0: f64 },
    /// ξ ≡ c.
    Constant { c: f64 },
    /// ξ = a with probability p, b otherwise.
    TwoPoint { a: f64, b: f64, p: f64 },
}

/// Absolute accuracy of the TripleExp cumulant generating function.
pub const CGF_ABS_TOL: f64 = 1e-10;

impl PotentialDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::TripleExp { rho0 } if !(rho0 > 0.0 && rho0.is_finite()) => {
                domain(format!("rho0 must be positive, got {rho0}"))
            }
            Self::Constant { c } if !c.is_finite() => domain("constant must be finite"),
            Self::TwoPoint { a, b, p } if !(a.is_finite() && b.is_finite() && (0.0..=1.0).contains(&p)) => {
                domain("two-point law needs finite values and p in [0, 1]")
            }
            _ => Ok(()),
        }
    }

    /// The constant ρ of the (HK) class; zero for the degenerate oracle families.
    pub fn rho(&self) -> f64 {
        match *self {
            Self::TripleExp { rho0 } => rho0,
            _ => 0.0,
        }
    }

    /// Law of `scale · ξ` for `scale > 0`.
    pub fn scaled(&self, scale: f64) -> Self {
        match *self {
            Self::TripleExp { rho0 } => Self::TripleExp { rho0: rho0 * scale },
            Self::Constant { c } => Self::Constant { c: c * scale },
            Self::TwoPoint { a, b, p } => Self::TwoPoint { a: a * scale, b: b * scale, p },
        }
    }

    /// `H(t) = log E[e^{tξ}]` for `t ≥ 0`.
    pub fn cgf(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || !t.is_finite() {
            return domain(format!("cgf needs finite t >= 0, got {t}"));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        match *self {
            Self::Constant { c } => Ok(c * t),
            Self::TwoPoint { a, b, p } => Ok(two_point_cgf(a, b, p, t)),
            Self::TripleExp { rho0 } => log_power_moment(t * rho0),
        }
    }

    /// `P(ξ > r)`.
    pub fn tail(&self, r: f64) -> f64 {
        self.log_tail(r).exp()
    }

    /// `log P(ξ > r)`.
    pub fn log_tail(&self, r: f64) -> f64 {
        match *self {
            Self::TripleExp { rho0 } => 1.0 - (r / rho0).exp().exp(),
            Self::Constant { c } => {
                if r < c {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::TwoPoint { a, b, p } => {
                let mut mass = 0.0;
                if a > r {
                    mass += p;
                }
                if b > r {
                    mass += 1.0 - p;
                }
                mass.ln()
            }
        }
    }

    /// Exact draw by inverse transform.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::TripleExp { rho0 } => {
                let e = -open01(rng).ln();
                rho0 * e.ln_1p().ln()
            }
            Self::Constant { c } => c,
            Self::TwoPoint { a, b, p } => {
                if rng.gen::<f64>() < p {
                    a
                } else {
                    b
                }
            }
        }
    }

    /// Exact draw from the exponentially tilted law `e^{θξ - H(θ)} P(dξ)`, `θ ≥ 0`.
    pub fn sample_tilted<R: rand::Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> f64 {
        if theta == 0.0 {
            return self.sample(rng);
        }
        match *self {
            Self::TripleExp { rho0 } => {
                let u = TiltedTripleExp::new(theta * rho0).sample(rng);
                rho0 * u.ln_1p().ln()
            }
            Self::Constant { c } => c,
            Self::TwoPoint { a, b, p } => {
                let la = p.ln() + theta * a;
                let lb = (1.0 - p).ln() + theta * b;
                let pa = (la - log_sum_exp(&[la, lb])).exp();
                if rng.gen::<f64>() < pa {
                    a
                } else {
                    b
                }
            }
        }
    }
}

fn two_point_cgf(a: f64, b: f64, p: f64, t: f64) -> f64 {
    if p == 1.0 {
        return a * t;
    }
    if p == 0.0 {
        return b * t;
    }
    log_sum_exp(&[p.ln() + t * a, (1.0 - p).ln() + t * b])
}

/// Principal branch of the Lambert W function for `x ≥ 0`.
pub(crate) fn lambert_w(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut w = if x < 3.0 { x.ln_1p() * 0.8 } else { x.ln() - x.ln().ln() };
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        let step = f / (ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0));
        w -= step;
        if step.abs() <= 1e-15 * (1.0 + w.abs()) {
            break;
        }
    }
    w
}

/// `log ∫_0^∞ (ln(1+u))^a e^{-u} du` for `a > 0`.
///
/// The log-integrand `φ(u) = a ln ln(1+u) - u` is concave with mode at
/// `u* = e^{W(a)} - 1`; integration runs on `exp(φ - φ(u*))` over the window
/// where it exceeds `e^{-60}`. On `[0, 1]` the substitution `u = v^{1/(a+1)}`
/// removes the power-law behaviour at the origin.
pub(crate) fn log_power_moment(a: f64) -> Result<f64> {
    let phi = |u: f64| a * u.ln_1p().ln() - u;
    let w = lambert_w(a);
    let mode = w.exp_m1();
    let top = phi(mode);
    let sigma = (a / (w + 1.0)).sqrt().max(1.0);
    const CUT: f64 = -60.0;
    let opts = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-10, max_intervals: 4000 };

    let mut total = 0.0;
    if phi(1.0) - top > CUT || mode < 1.0 {
        let p = 1.0 / (a + 1.0);
        let head = integrate(
            |v: f64| {
                if v <= 0.0 {
                    return (-top).exp() * p;
                }
                let u = v.powf(p);
                let ratio = if u < 1e-8 { 1.0 - 0.5 * u } else { u.ln_1p() / u };
                (a * ratio.ln() - u - top).exp() * p
            },
            0.0,
            1.0,
            opts,
        )?;
        total += head.value;
    }
    // φ(u) - φ(u*) without cancellation: with δ = u - u* and w = ln(1+u*),
    // a·ln(ln(1+u)/w) = a·ln1p(ln1p(δ/(1+u*))/w).
    let g = |u: f64| {
        let delta = u - mode;
        (a * ((delta / (1.0 + mode)).ln_1p() / w).ln_1p() - delta).exp()
    };
    let right_start = mode.max(1.0);
    let mut right_end = right_start + sigma;
    let mut step = sigma;
    while phi(right_end) - top > CUT {
        step *= 2.0;
        right_end = right_start + step;
    }
    total += integrate(g, right_start, right_end, opts)?.value;
    if mode > 1.0 {
        let mut left_end = (mode - sigma).max(1.0);
        let mut step = sigma;
        while left_end > 1.0 && phi(left_end) - top > CUT {
            step *= 2.0;
            left_end = (mode - step).max(1.0);
        }
        total += integrate(g, left_end, mode, opts)?.value;
    }
    Ok(top + total.ln())
}

/// Sampler for the density proportional to `(ln(1+u))^a e^{-u}` on `u > 0`.
///
/// Rejection from a three-piece exponential envelope: tangents of the concave
/// log-density at the two points where it drops by 1 below the mode, and a flat
/// cap at the mode value.
pub(crate) struct TiltedTripleExp {
    a: f64,
    top: f64,
    x_l: f64,
    x_r: f64,
    s_l: f64,
    s_r: f64,
    mass: [f64; 3],
}

impl TiltedTripleExp {
    pub(crate) fn new(a: f64) -> Self {
        let phi = |u: f64| a * u.ln_1p().ln() - u;
        let dphi = |u: f64| a / ((1.0 + u) * u.ln_1p()) - 1.0;
        let mode = lambert_w(a).exp_m1();
        let top = phi(mode);
        let level = top - 1.0;
        let (mut lo, mut hi) = (0.0, mode);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if phi(mid) < level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let u_l = hi;
        let mut span = 1.0f64.max(mode);
        while phi(mode + span) > level {
            span *= 2.0;
        }
        let (mut lo, mut hi) = (mode, mode + span);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if phi(mid) > level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let u_r = lo;
        let s_l = dphi(u_l);
        let s_r = -dphi(u_r);
        let x_l = u_l + (top - phi(u_l)) / s_l;
        let x_r = u_r - (top - phi(u_r)) / s_r;
        let mass = [(-(-s_l * x_l).exp_m1()) / s_l, (x_r - x_l).max(0.0), 1.0 / s_r];
        Self { a, top, x_l, x_r, s_l, s_r, mass }
    }

    fn envelope(&self, u: f64) -> f64 {
        if u < self.x_l {
            self.top + self.s_l * (u - self.x_l)
        } else if u > self.x_r {
            self.top - self.s_r * (u - self.x_r)
        } else {
            self.top
        }
    }

    pub(crate) fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total: f64 = self.mass.iter().sum();
        loop {
            let pick = rng.gen::<f64>() * total;
            let v = open01(rng);
            let u = if pick < self.mass[0] {
                // Truncated exponential on (0, x_l), increasing towards x_l.
                let span = -(-self.s_l * self.x_l).exp_m1();
                self.x_l + (1.0 - v * span).ln() / self.s_l
            } else if pick < self.mass[0] + self.mass[1] {
                self.x_l + v * (self.x_r - self.x_l)
            } else {
                self.x_r - v.ln() / self.s_r
            };
            if u <= 0.0 {
                continue;
            }
            let log_target = self.a * u.ln_1p().ln() - u;
            if open01(rng).ln() <= log_target - self.envelope(u) {
                return u;
            }
        }
    }
}

//! Grid functionals `ℒ`, `ℋ`, `λ` and the optimizers for `χ` and its
//! constrained finite-box variant. The parabola `ψ̂` and Gaussian `ĝ` are the
//! closed-form ground truth.

mod optimize;

pub use optimize::{
    chi_gradient, chi_objective, minimize_chi, minimize_chi_constrained, minimize_chi_constrained_multistart, shape_constraint,
    ChiOptions, ConstrainedOptions, TraceRow, VariationalResult,
};

use crate::error::{domain, Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::lattice::LatticeRegion;
use crate::scalar::Real;
use crate::spectral::principal_eigen_discrete;
use crate::stats::pairwise_sum;

/// `ρ d (1 - ½ ln(ρ/π))`.
pub fn chi_closed_form<T: Real>(rho: T, d: usize) -> T {
    rho * T::from_count(d) * (T::one() - T::lit(0.5) * (rho / T::PI()).ln())
}

/// `λ(ψ̂) = ρ - ρd + ρ(d/2) ln(ρ/π)`.
pub fn lambda_psi_hat<T: Real>(rho: T, d: usize) -> T {
    let dd = T::from_count(d);
    rho - rho * dd + rho * dd * T::lit(0.5) * (rho / T::PI()).ln()
}

/// `ψ̂(x) = ρ + ρ(d/2) ln(ρ/π) - ρ²|x|²`.
pub fn psi_hat_at<T: Real>(rho: T, x: &[T]) -> T {
    let dd = T::from_count(x.len());
    let r2: T = x.iter().map(|v| *v * *v).sum();
    rho + rho * dd * T::lit(0.5) * (rho / T::PI()).ln() - rho * rho * r2
}

/// `ĝ(x) = (ρ/π)^{d/4} e^{-ρ|x|²/2}`.
pub fn g_hat_at<T: Real>(rho: T, x: &[T]) -> T {
    let dd = T::from_count(x.len());
    let r2: T = x.iter().map(|v| *v * *v).sum();
    (rho / T::PI()).powf(dd / T::lit(4.0)) * (-rho * r2 / T::lit(2.0)).exp()
}

pub fn parabola_psi_hat<T: Real>(rho: T, grid: GridSpec<T>) -> GridFunction<T> {
    GridFunction::from_fn(grid, |x| psi_hat_at(rho, x))
}

pub fn gaussian_g_hat<T: Real>(rho: T, grid: GridSpec<T>) -> GridFunction<T> {
    GridFunction::from_fn(grid, |x| g_hat_at(rho, x))
}

fn weighted<T: Real>(w: &[T], v: impl Iterator<Item = T>) -> T {
    let terms: Vec<T> = w.iter().zip(v).map(|(a, b)| *a * b).collect();
    pairwise_sum(&terms)
}

/// `ln ℒ(ψ) = ln((ρ/e) ∫ e^{ψ/ρ})`, evaluated with a max shift.
pub fn log_functional_l<T: Real>(psi: &GridFunction<T>, rho: T) -> T {
    log_functional_l_weighted(psi, rho, &psi.grid.weights())
}

fn log_functional_l_weighted<T: Real>(psi: &GridFunction<T>, rho: T, w: &[T]) -> T {
    let m = psi.values.iter().zip(w).filter(|(_, w)| **w > T::zero()).map(|(v, _)| *v).fold(T::neg_infinity(), T::max);
    if !m.is_finite() {
        return m;
    }
    let s = weighted(w, psi.values.iter().map(|v| ((*v - m) / rho).exp()));
    rho.ln() - T::one() + m / rho + s.ln()
}

/// `ℒ(ψ) = (ρ/e) ∫ e^{ψ/ρ}` over the grid cube.
pub fn functional_l<T: Real>(psi: &GridFunction<T>, rho: T) -> T {
    log_functional_l(psi, rho).exp()
}

/// `ln ℒ_r(ψ)`, the functional restricted to the grid-aligned cube `Q_r`.
pub fn log_functional_l_cube<T: Real>(psi: &GridFunction<T>, rho: T, r: T) -> Result<T> {
    Ok(log_functional_l_weighted(psi, rho, &psi.grid.cube_weights(r)?))
}

fn xlogx<T: Real>(y: T) -> T {
    if y > T::zero() {
        y * y.ln()
    } else {
        T::zero()
    }
}

/// `ℋ(g²) = ρ ∫ g² ln g²` with `0 ln 0 = 0`.
pub fn entropy_h<T: Real>(g: &GridFunction<T>, rho: T) -> T {
    rho * weighted(&g.grid.weights(), g.values.iter().map(|v| xlogx(*v * *v)))
}

/// `ℋ_R(f) = ρ ∫ f ln f` with `0 ln 0 = 0`.
pub fn rate_h_r<T: Real>(f: &GridFunction<T>, rho: T) -> T {
    rho * weighted(&f.grid.weights(), f.values.iter().map(|v| xlogx(*v)))
}

/// `‖∇g‖² - ℋ(g²)`.
pub fn chi_functional<T: Real>(g: &GridFunction<T>, rho: T) -> T {
    g.grad_norm_sq() - entropy_h(g, rho)
}

/// Principal eigenvalue of the `(2d+1)`-point finite-difference `Δ + ψ` on the
/// grid cube with zero boundary values.
pub fn eigen_continuum<T: Real>(psi: &GridFunction<T>, tol: T) -> Result<T> {
    let n = psi.grid.nodes();
    if n < 3 {
        return domain("grid has no interior nodes");
    }
    let d = psi.d();
    let h = psi.grid.spacing;
    let h2 = h * h;
    let interior = LatticeRegion { lo: vec![1; d], hi: vec![n as i64 - 2; d] };
    let potential: Vec<T> = interior
        .sites()
        .map(|z| {
            let idx = z.iter().fold(0usize, |acc, &k| acc * n + k as usize);
            h2 * psi.values[idx]
        })
        .collect();
    // The lattice residual cannot fall below rounding on the operator scale.
    let scale = potential.iter().fold(T::from_count(4 * d), |m, v| m.max(v.abs()));
    let lattice_tol = (tol * h2).max(T::lit(64.0) * T::epsilon() * scale);
    Ok(principal_eigen_discrete(&interior, &potential, lattice_tol)?.value / h2)
}

/// `ℒ(ψ) - (⟨g², ψ⟩ - ℋ(g²))`, nonnegative by Young's inequality.
pub fn legendre_gap<T: Real>(psi: &GridFunction<T>, g: &GridFunction<T>, rho: T) -> T {
    let w = psi.grid.weights();
    let pairing = weighted(&w, g.values.iter().zip(&psi.values).map(|(g, p)| *g * *g * *p));
    functional_l(psi, rho) - (pairing - entropy_h(g, rho))
}

/// `∫ p ln(p/q)`, `+∞` if `p > 0` somewhere `q = 0`.
pub fn relative_entropy<T: Real>(p: &GridFunction<T>, q: &GridFunction<T>) -> Result<T> {
    let tol = T::lit(1e-8);
    for f in [p, q] {
        let mass = f.integrate();
        if (mass - T::one()).abs() > tol {
            return Err(Error::NotNormalized { mass: mass.as_f64() });
        }
    }
    if p.grid != q.grid {
        return domain("densities live on different grids");
    }
    let mut terms = Vec::with_capacity(p.values.len());
    for ((pv, qv), w) in p.values.iter().zip(&q.values).zip(p.grid.weights()) {
        if *pv > T::zero() {
            if *qv <= T::zero() {
                return Ok(T::infinity());
            }
            terms.push(w * *pv * (*pv / *qv).ln());
        }
    }
    Ok(pairwise_sum(&terms))
}

/// `∫ |p - q|` by the trapezoid rule.
pub fn l1_distance<T: Real>(p: &GridFunction<T>, q: &GridFunction<T>) -> T {
    weighted(&p.grid.weights(), p.values.iter().zip(&q.values).map(|(a, b)| (*a - *b).abs()))
}

/// `min_c ∫ |g²(x) - ĝ²(x - c)| dx` over continuous shifts `c`, started from
/// the centre of mass of `g²` and refined per axis by golden-section search
/// within one grid spacing. Returns the distance and the shift.
pub fn aligned_profile_distance<T: Real>(g: &GridFunction<T>, rho: T) -> (T, Vec<T>) {
    let grid = g.grid;
    let w = grid.weights();
    let g2: Vec<T> = g.values.iter().map(|v| *v * *v).collect();
    let mass = weighted(&w, g2.iter().copied());
    let points: Vec<Vec<T>> = (0..grid.len()).map(|i| grid.point(i)).collect();
    let mut c: Vec<T> = (0..grid.d)
        .map(|a| weighted(&w, g2.iter().zip(&points).map(|(v, x)| *v * x[a])) / mass)
        .collect();
    let distance = |c: &[T]| {
        weighted(
            &w,
            g2.iter().zip(&points).map(|(v, x)| {
                let y: Vec<T> = x.iter().zip(c).map(|(xi, ci)| *xi - *ci).collect();
                let target = g_hat_at(rho, &y);
                (*v - target * target).abs()
            }),
        )
    };
    let ratio = T::lit(0.5) * (T::lit(5.0).sqrt() - T::one());
    for _sweep in 0..2 {
        for a in 0..grid.d {
            let (mut lo, mut hi) = (c[a] - grid.spacing, c[a] + grid.spacing);
            let mut probe = c.clone();
            let mut at = |v: T| {
                probe[a] = v;
                distance(&probe)
            };
            let mut x1 = hi - ratio * (hi - lo);
            let mut x2 = lo + ratio * (hi - lo);
            let (mut f1, mut f2) = (at(x1), at(x2));
            for _ in 0..40 {
                if f1 <= f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - ratio * (hi - lo);
                    f1 = at(x1);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + ratio * (hi - lo);
                    f2 = at(x2);
                }
            }
            c[a] = T::lit(0.5) * (lo + hi);
        }
    }
    (distance(&c), c)
}

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::g_hat_at;
use crate::error::{domain, Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::rng::stream_rng;
use crate::scalar::Real;
use crate::stats::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub value: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalResult<T> {
    /// `‖∇g‖² - ℋ(g²)` at the returned iterate (without penalty terms).
    pub value: T,
    pub minimizer: GridFunction<T>,
    pub iterations: usize,
    /// Norm of the gradient projected on the tangent space of the sphere.
    pub grad_norm: T,
    /// Largest of `|‖g‖² - 1|` and the constraint violation.
    pub feasibility_residual: T,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone)]
pub struct ChiOptions<T> {
    pub gtol: T,
    pub max_iter: usize,
    /// Starting point; a non-Gaussian off-centre bump when absent.
    pub init: Option<GridFunction<T>>,
    /// Shift `σ` of the preconditioner `(σ - Δ_h)^{-1}`, in units of `ρ`.
    pub sigma: T,
}

impl<T: Real> Default for ChiOptions<T> {
    fn default() -> Self {
        Self { gtol: T::lit(1e-6), max_iter: 5000, init: None, sigma: T::lit(2.0) }
    }
}

/// Unknowns are the interior nodes; boundary nodes are pinned to zero.
struct Interior<T> {
    d: usize,
    m: usize,
    h: T,
    strides: Vec<usize>,
    /// Sine basis (symmetric orthogonal) of the 1-D Dirichlet Laplacian.
    sine: Vec<T>,
    /// Eigenvalues of `-Δ_h` in 1-D.
    mu: Vec<T>,
}

impl<T: Real> Interior<T> {
    fn new(grid: &GridSpec<T>) -> Result<Self> {
        let n = grid.nodes();
        if n < 3 {
            return domain("grid has no interior nodes");
        }
        let m = n - 2;
        let d = grid.d;
        let mut strides = vec![1; d];
        for a in (0..d.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * m;
        }
        let mp1 = T::from_count(m + 1);
        let c = (T::lit(2.0) / mp1).sqrt();
        let mut sine = vec![T::zero(); m * m];
        for j in 0..m {
            for k in 0..m {
                sine[j * m + k] = c * (T::PI() * T::from_count((j + 1) * (k + 1)) / mp1).sin();
            }
        }
        let h = grid.spacing;
        let mu = (0..m)
            .map(|k| {
                let s = (T::PI() * T::from_count(k + 1) / (T::lit(2.0) * mp1)).sin();
                T::lit(4.0) * s * s / (h * h)
            })
            .collect();
        Ok(Self { d, m, h, strides, sine, mu })
    }

    fn len(&self) -> usize {
        self.m.pow(self.d as u32)
    }

    fn cell(&self) -> T {
        self.h.powi(self.d as i32)
    }

    fn inner(&self, a: &[T], b: &[T]) -> T {
        let p: Vec<T> = a.iter().zip(b).map(|(x, y)| *x * *y).collect();
        self.cell() * pairwise_sum(&p)
    }

    /// `-Δ_h g`.
    fn neg_laplacian(&self, g: &[T], out: &mut [T]) {
        let inv = T::one() / (self.h * self.h);
        let diag = T::from_count(2 * self.d) * inv;
        for (o, x) in out.iter_mut().zip(g) {
            *o = diag * *x;
        }
        for a in 0..self.d {
            let s = self.strides[a];
            for i in 0..g.len() {
                if (i / s) % self.m + 1 < self.m {
                    out[i] -= inv * g[i + s];
                    out[i + s] -= inv * g[i];
                }
            }
        }
    }

    /// Applies the sine basis along one axis; lines are independent.
    fn apply_axis(&self, data: &[T], axis: usize) -> Vec<T> {
        let m = self.m;
        let s = self.strides[axis];
        let mut out = vec![T::zero(); data.len()];
        out.par_chunks_mut(m * s).enumerate().for_each(|(o, block)| {
            let src = &data[o * m * s..(o + 1) * m * s];
            if s == 1 {
                // The basis is symmetric, so row k doubles as column k.
                for (k, &c) in src.iter().enumerate().take(m) {
                    for (o, sk) in block.iter_mut().zip(&self.sine[k * m..(k + 1) * m]) {
                        *o += c * *sk;
                    }
                }
                return;
            }
            // Strided axis: accumulate whole contiguous rows.
            for j in 0..m {
                let dst = &mut block[j * s..(j + 1) * s];
                for k in 0..m {
                    let c = self.sine[j * m + k];
                    for (o, x) in dst.iter_mut().zip(&src[k * s..(k + 1) * s]) {
                        *o += c * *x;
                    }
                }
            }
        });
        out
    }

    /// `(σ - Δ_h)^{-1} r` in the separable sine basis.
    fn precondition(&self, r: &[T], sigma: T) -> Vec<T> {
        let mut x = r.to_vec();
        for a in 0..self.d {
            x = self.apply_axis(&x, a);
        }
        for (i, v) in x.iter_mut().enumerate() {
            let mut lam = sigma;
            let mut rest = i;
            for _ in 0..self.d {
                lam += self.mu[rest % self.m];
                rest /= self.m;
            }
            *v /= lam;
        }
        for a in 0..self.d {
            x = self.apply_axis(&x, a);
        }
        x
    }

    fn extract(&self, f: &GridFunction<T>) -> Vec<T> {
        let n = f.grid.nodes();
        (0..self.len())
            .map(|i| {
                let mut rest = i;
                let mut idx = 0;
                let mut mult = 1;
                for _ in 0..self.d {
                    idx += (rest % self.m + 1) * mult;
                    rest /= self.m;
                    mult *= n;
                }
                f.values[idx]
            })
            .collect()
    }

    fn embed(&self, grid: GridSpec<T>, g: &[T]) -> GridFunction<T> {
        let n = grid.nodes();
        let mut out = GridFunction::zeros(grid);
        for (i, v) in g.iter().enumerate() {
            let mut rest = i;
            let mut idx = 0;
            let mut mult = 1;
            for _ in 0..self.d {
                idx += (rest % self.m + 1) * mult;
                rest /= self.m;
                mult *= n;
            }
            out.values[idx] = *v;
        }
        out
    }

    fn normalize(&self, g: &mut [T]) {
        let nrm = self.inner(g, g).sqrt();
        for x in g.iter_mut() {
            *x /= nrm;
        }
    }
}

/// `J(g) = ‖∇g‖² - ℋ(g²)` and its gradient `2(-Δ_h g - ρ g(ln g² + 1))` with
/// respect to the grid inner product.
fn chi_value_grad<T: Real>(ip: &Interior<T>, g: &[T], rho: T, want_grad: bool) -> (T, Vec<T>) {
    let mut lap = vec![T::zero(); g.len()];
    ip.neg_laplacian(g, &mut lap);
    let two = T::lit(2.0);
    let mut ent = Vec::with_capacity(g.len());
    let mut grad = if want_grad { Vec::with_capacity(g.len()) } else { Vec::new() };
    for (x, l) in g.iter().zip(&lap) {
        let y = *x * *x;
        let log_y = if y > T::zero() { y.ln() } else { T::zero() };
        ent.push(y * log_y);
        if want_grad {
            let nonlinear = if y > T::zero() { rho * *x * (log_y + T::one()) } else { T::zero() };
            grad.push(two * (*l - nonlinear));
        }
    }
    let value = ip.inner(g, &lap) - rho * ip.cell() * pairwise_sum(&ent);
    (value, grad)
}

/// `J(g)` for a grid function vanishing on the boundary.
pub fn chi_objective<T: Real>(g: &GridFunction<T>, rho: T) -> Result<T> {
    let ip = Interior::new(&g.grid)?;
    Ok(chi_value_grad(&ip, &ip.extract(g), rho, false).0)
}

/// Gradient of [`chi_objective`] in the inner product `h^d Σ_i a_i b_i` over
/// the interior nodes, so `∂J/∂g_i = h^d ∇J_i`; zero on the boundary.
pub fn chi_gradient<T: Real>(g: &GridFunction<T>, rho: T) -> Result<GridFunction<T>> {
    let ip = Interior::new(&g.grid)?;
    Ok(ip.embed(g.grid, &chi_value_grad(&ip, &ip.extract(g), rho, true).1))
}

struct Descent<T> {
    g: Vec<T>,
    value: T,
    grad_norm: T,
    iterations: usize,
    converged: bool,
    trace: Vec<TraceRow>,
}

/// Preconditioned projected gradient descent on the unit sphere with Armijo
/// backtracking along the normalized retraction.
fn sphere_descent<T: Real, F>(ip: &Interior<T>, mut g: Vec<T>, objective: F, sigma: T, gtol: T, max_iter: usize) -> Descent<T>
where
    F: Fn(&[T], bool) -> (T, Vec<T>),
{
    ip.normalize(&mut g);
    let (mut value, mut grad) = objective(&g, true);
    let mut step = T::one();
    let mut trace = Vec::new();
    let mut grad_norm = T::infinity();
    for it in 0..=max_iter {
        let radial = ip.inner(&grad, &g);
        let tangent: Vec<T> = grad.iter().zip(&g).map(|(a, b)| *a - radial * *b).collect();
        grad_norm = ip.inner(&tangent, &tangent).sqrt();
        trace.push(TraceRow { iteration: it, value: value.as_f64(), grad_norm: grad_norm.as_f64() });
        if grad_norm <= gtol {
            return Descent { g, value, grad_norm, iterations: it, converged: true, trace };
        }
        if it == max_iter {
            break;
        }
        let p = ip.precondition(&tangent, sigma);
        let pr = ip.inner(&p, &g);
        let dir: Vec<T> = p.iter().zip(&g).map(|(a, b)| -(*a - pr * *b)).collect();
        let slope = ip.inner(&grad, &dir);
        if !(slope < T::zero()) {
            break;
        }
        let mut accepted = false;
        step = (step * T::lit(2.0)).min(T::lit(64.0));
        for _ in 0..60 {
            let mut trial: Vec<T> = g.iter().zip(&dir).map(|(a, b)| *a + step * *b).collect();
            ip.normalize(&mut trial);
            let (tv, _) = objective(&trial, false);
            if tv <= value + T::lit(1e-4) * step * slope {
                g = trial;
                accepted = true;
                break;
            }
            step *= T::lit(0.5);
        }
        if !accepted {
            break;
        }
        let (v, gr) = objective(&g, true);
        value = v;
        grad = gr;
    }
    let iterations = trace.len() - 1;
    Descent { g, value, grad_norm, iterations, converged: false, trace }
}

fn default_init<T: Real>(grid: &GridSpec<T>, rho: T) -> GridFunction<T> {
    let l = grid.half_width;
    let shift = T::lit(0.37) / rho.sqrt();
    GridFunction::from_fn(*grid, |x| {
        let r2: T = x.iter().map(|v| (*v - shift) * (*v - shift)).sum();
        let edge = x.iter().fold(T::one(), |p, v| p * (T::one() - (*v / l) * (*v / l)).max(T::zero()));
        edge / (T::one() + rho * r2)
    })
}

/// Minimizes `‖∇g‖² - ℋ(g²)` over unit-norm grid functions vanishing on the
/// boundary of the grid cube.
pub fn minimize_chi<T: Real>(rho: T, grid: GridSpec<T>, opts: &ChiOptions<T>) -> Result<VariationalResult<T>> {
    if !(rho > T::zero()) {
        return domain("rho must be positive");
    }
    let ip = Interior::new(&grid)?;
    let init = opts.init.clone().unwrap_or_else(|| default_init(&grid, rho));
    if init.grid != grid {
        return domain("initial guess lives on a different grid");
    }
    let g0 = ip.extract(&init);
    let run = sphere_descent(&ip, g0, |g, want| chi_value_grad(&ip, g, rho, want), opts.sigma * rho, opts.gtol, opts.max_iter);
    let norm_res = (ip.inner(&run.g, &run.g) - T::one()).abs();
    Ok(VariationalResult {
        value: run.value,
        minimizer: ip.embed(grid, &run.g),
        iterations: run.iterations,
        grad_norm: run.grad_norm,
        feasibility_residual: norm_res,
        converged: run.converged,
        trace: run.trace,
    })
}

#[derive(Debug, Clone)]
pub struct ConstrainedOptions<T> {
    pub inner: ChiOptions<T>,
    /// Penalty weights of the outer loop, increasing.
    pub penalties: Vec<T>,
    /// Use every `shift_stride`-th grid-aligned shift.
    pub shift_stride: usize,
    /// Relative constraint violation accepted to stop the outer loop early.
    pub violation_rtol: T,
}

impl<T: Real> Default for ConstrainedOptions<T> {
    fn default() -> Self {
        Self {
            inner: ChiOptions { gtol: T::lit(1e-5), max_iter: 1500, ..ChiOptions::default() },
            penalties: [1e1, 1e2, 1e3, 1e4].iter().map(|&v| T::lit(v)).collect(),
            shift_stride: 1,
            violation_rtol: T::lit(1e-3),
        }
    }
}

/// Best-shift distance `min_x ∫_{Q_R} |g²(x+y) - ĝ²(y)| dy` over grid-aligned
/// `x ∈ Q_{2R}` (ties: first in lexicographic order), with the minimizing shift
/// as per-axis node offsets.
struct ShapeConstraint<T> {
    d: usize,
    n: usize,
    kr: usize,
    stride: usize,
    /// Trapezoid weights and `ĝ²` on the window nodes, row-major.
    window_w: Vec<T>,
    window_g2: Vec<T>,
    /// Full-grid index of each window node when the window sits at the origin corner.
    window_offsets: Vec<usize>,
}

impl<T: Real> ShapeConstraint<T> {
    fn new(grid: &GridSpec<T>, rho: T, r: T, stride: usize) -> Result<Self> {
        let h = grid.spacing;
        let kr = (r / h).round().to_usize().unwrap_or(0);
        let n = grid.nodes();
        if kr == 0 || 6 * kr + 1 != n || (T::from_count(kr) * h - r).abs() > T::lit(1e-9) * r {
            return domain("the constraint grid must be Q_{3R} with R a positive multiple of h");
        }
        let d = grid.d;
        let wn = 2 * kr + 1;
        let len = wn.pow(d as u32);
        let mut window_w = Vec::with_capacity(len);
        let mut window_g2 = Vec::with_capacity(len);
        let mut window_offsets = Vec::with_capacity(len);
        for i in 0..len {
            let mut rest = i;
            let mut w = T::one();
            let mut x = vec![T::zero(); d];
            let mut offset = 0;
            let mut mult = 1;
            for a in (0..d).rev() {
                let k = rest % wn;
                rest /= wn;
                offset += k * mult;
                mult *= n;
                x[a] = (T::from_count(k) - T::from_count(kr)) * h;
                w *= if k == 0 || k == wn - 1 { h * T::lit(0.5) } else { h };
            }
            let g = g_hat_at(rho, &x);
            window_w.push(w);
            window_g2.push(g * g);
            window_offsets.push(offset);
        }
        Ok(Self { d, n, kr, stride: stride.max(1), window_w, window_g2, window_offsets })
    }

    fn base_index(&self, corner: &[usize]) -> usize {
        corner.iter().fold(0, |acc, p| acc * self.n + p)
    }

    /// Returns the distance and the lower-corner offset of the best window.
    fn evaluate(&self, g2: &[T]) -> (T, Vec<usize>) {
        let span = 4 * self.kr;
        let per_axis = span / self.stride + 1;
        let count = per_axis.pow(self.d as u32);
        let mut best = (T::infinity(), vec![0; self.d]);
        for s in 0..count {
            let mut rest = s;
            let mut off = vec![0; self.d];
            for a in (0..self.d).rev() {
                off[a] = (rest % per_axis) * self.stride;
                rest /= per_axis;
            }
            let base = self.base_index(&off);
            let terms: Vec<T> = (0..self.window_w.len())
                .map(|k| self.window_w[k] * (g2[base + self.window_offsets[k]] - self.window_g2[k]).abs())
                .collect();
            let v = pairwise_sum(&terms);
            if v < best.0 {
                best = (v, off);
            }
        }
        best
    }
}

/// Best-shift `L¹` distance of `g²` to `ĝ²` on `Q_R` for `g` on the grid `Q_{3R}`.
pub fn shape_constraint<T: Real>(g: &GridFunction<T>, rho: T, r: T) -> Result<T> {
    let c = ShapeConstraint::new(&g.grid, rho, r, 1)?;
    let g2: Vec<T> = g.values.iter().map(|v| *v * *v).collect();
    Ok(c.evaluate(&g2).0)
}

/// `χ_R(ε)`: minimizes `J` over unit `g` supported in the grid cube `Q_{3R}`
/// whose squared profile stays `L¹`-distance at least `ε` on `Q_R` from every
/// shift of `ĝ²` by a grid-aligned `x ∈ Q_{2R}`. Quadratic penalty on the
/// violation with an increasing weight.
pub fn minimize_chi_constrained<T: Real>(
    rho: T,
    eps: T,
    r: T,
    grid: GridSpec<T>,
    opts: &ConstrainedOptions<T>,
) -> Result<VariationalResult<T>> {
    minimize_chi_constrained_on(rho, eps, r, grid, opts)
}

fn minimize_chi_constrained_on<T: Real>(
    rho: T,
    eps: T,
    r: T,
    grid: GridSpec<T>,
    opts: &ConstrainedOptions<T>,
) -> Result<VariationalResult<T>> {
    if !(eps >= T::zero()) {
        return domain("eps must be nonnegative");
    }
    let ip = Interior::new(&grid)?;
    let constraint = ShapeConstraint::new(&grid, rho, r, opts.shift_stride)?;
    let window_mass: T = constraint.window_w.iter().zip(&constraint.window_g2).map(|(w, g)| *w * *g).sum();
    let bound = T::one() + window_mass;
    if eps >= bound {
        return Err(Error::Infeasible { eps: eps.as_f64(), bound: bound.as_f64() });
    }
    if eps == T::zero() {
        return minimize_chi(rho, grid, &opts.inner);
    }
    let init = opts.inner.init.clone().unwrap_or_else(|| default_init(&grid, rho));
    let mut g = ip.extract(&init);
    let n_full = grid.nodes();
    let full_index = |i: usize| {
        let mut rest = i;
        let mut idx = 0;
        let mut mult = 1;
        for _ in 0..ip.d {
            idx += (rest % ip.m + 1) * mult;
            rest /= ip.m;
            mult *= n_full;
        }
        idx
    };
    let interior_of_full: Vec<Option<usize>> = {
        let mut map = vec![None; grid.len()];
        for i in 0..ip.len() {
            map[full_index(i)] = Some(i);
        }
        map
    };
    let constraint_of = |g: &[T]| {
        let mut g2 = vec![T::zero(); grid.len()];
        for (i, v) in g.iter().enumerate() {
            g2[full_index(i)] = *v * *v;
        }
        let (c, off) = constraint.evaluate(&g2);
        (c, off, g2)
    };
    let mut run = None;
    let mut iterations = 0;
    let mut trace = Vec::new();
    for &mu in &opts.penalties {
        let objective = |g: &[T], want: bool| {
            let (mut v, mut grad) = chi_value_grad(&ip, g, rho, want);
            let (c, off, g2) = constraint_of(g);
            let viol = (eps - c).max(T::zero());
            v += mu * viol * viol;
            if want && viol > T::zero() {
                let factor = -T::lit(2.0) * mu * viol / ip.cell();
                let base = constraint.base_index(&off);
                for k in 0..constraint.window_w.len() {
                    let full = base + constraint.window_offsets[k];
                    if let Some(i) = interior_of_full[full] {
                        let diff = g2[full] - constraint.window_g2[k];
                        let sign = if diff > T::zero() {
                            T::one()
                        } else if diff < T::zero() {
                            -T::one()
                        } else {
                            T::zero()
                        };
                        grad[i] += factor * constraint.window_w[k] * sign * T::lit(2.0) * g[i];
                    }
                }
            }
            (v, grad)
        };
        let d = sphere_descent(&ip, g.clone(), objective, opts.inner.sigma * rho, opts.inner.gtol, opts.inner.max_iter);
        iterations += d.iterations;
        let base = trace.len();
        trace.extend(d.trace.iter().map(|row| TraceRow { iteration: base + row.iteration, ..*row }));
        g = d.g.clone();
        let (c, _, _) = constraint_of(&g);
        let done = eps - c <= opts.violation_rtol * eps;
        run = Some((d, c));
        if done {
            break;
        }
    }
    let (d, c) = run.expect("at least one penalty level");
    let (value, _) = chi_value_grad(&ip, &d.g, rho, false);
    let norm_res = (ip.inner(&d.g, &d.g) - T::one()).abs();
    Ok(VariationalResult {
        value,
        minimizer: ip.embed(grid, &d.g),
        iterations,
        grad_norm: d.grad_norm,
        feasibility_residual: norm_res.max((eps - c).max(T::zero())),
        converged: d.converged,
        trace,
    })
}

/// [`minimize_chi_constrained`] from `starts` random initial profiles (start
/// `i` uses stream `i` of `seed`), run in parallel; results in start order.
pub fn minimize_chi_constrained_multistart<T: Real>(
    rho: T,
    eps: T,
    r: T,
    grid: GridSpec<T>,
    starts: usize,
    seed: u64,
    opts: &ConstrainedOptions<T>,
) -> Result<Vec<VariationalResult<T>>> {
    let d = grid.d;
    (0..starts)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            // Two Gaussian bumps of random centre, width and weight.
            let bumps: Vec<(Vec<T>, T, T)> = (0..2)
                .map(|_| {
                    let centre: Vec<T> = (0..d).map(|_| T::lit(rng.gen_range(-1.0..1.0)) * r).collect();
                    let width = T::lit(rng.gen_range(0.3..2.0)) / rho.sqrt();
                    let weight = T::lit(rng.gen_range(0.2..1.0));
                    (centre, width, weight)
                })
                .collect();
            let init = GridFunction::from_fn(grid, |x| {
                let l = grid.half_width;
                let edge = x.iter().fold(T::one(), |p, v| p * (T::one() - (*v / l) * (*v / l)).max(T::zero()));
                edge * bumps
                    .iter()
                    .map(|(c, w, a)| {
                        let r2: T = x.iter().zip(c).map(|(xi, ci)| ((*xi - *ci) / *w).powi(2)).sum();
                        *a * (-r2).exp()
                    })
                    .sum::<T>()
            });
            let mut o = opts.clone();
            o.inner.init = Some(init);
            minimize_chi_constrained_on(rho, eps, r, grid, &o)
        })
        .collect()
}

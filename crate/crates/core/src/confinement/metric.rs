use serde::{Deserialize, Serialize};

use crate::continuum::ContinuumField;
use crate::error::{domain, Result};
use crate::grid::GridFunction;
use crate::scalar::Real;
use crate::stats::pairwise_sum;
use crate::variational::psi_hat_at;

/// `Σ_{r ≤ r_max} 2^{-r} φ(∫_{Q_r} |f1 - f2|)` with `φ(s) = s/(1+s)`; the
/// omitted terms sum to at most `tail = 2^{-r_max}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalDistance<T> {
    pub value: T,
    pub tail: T,
}

/// The `L¹`-on-compacts metric, each `∫_{Q_r}` by the midpoint rule with
/// `per_unit` cells per unit length and axis.
pub fn dist_global<T: Real, F1, F2>(f1: &F1, f2: &F2, r_max: usize, per_unit: usize) -> Result<GlobalDistance<T>>
where
    F1: ContinuumField<T> + ?Sized,
    F2: ContinuumField<T> + ?Sized,
{
    let d = f1.dim();
    if f2.dim() != d {
        return domain("functions have different dimensions");
    }
    let r_top = T::from_count(r_max);
    if f1.half_width() < r_top || f2.half_width() < r_top {
        return domain("functions are not defined on Q_{r_max}");
    }
    let diff = crate::continuum::FnField { d, f: |x: &[T]| (f1.value_at(x) - f2.value_at(x)).abs() };
    let mut terms = Vec::with_capacity(r_max);
    // ∫_{Q_r} accumulated shell by shell over unit cubes.
    let mut inner = T::zero();
    let mut weight = T::one();
    for r in 1..=r_max {
        let ri = r as i64;
        let mut shell = Vec::new();
        for_each_cube(d, ri, |corner| {
            if corner.iter().any(|&c| c == -ri || c == ri - 1) {
                let lo: Vec<T> = corner.iter().map(|&c| T::lit(c as f64)).collect();
                shell.push(diff.cell_integral(&lo, T::one(), per_unit));
            }
        });
        inner += pairwise_sum(&shell);
        weight *= T::lit(0.5);
        terms.push(weight * inner / (T::one() + inner));
    }
    Ok(GlobalDistance { value: pairwise_sum(&terms), tail: weight })
}

/// Visits the lower corners `c ∈ [-r, r-1]^d` of the unit cubes tiling `Q_r`.
fn for_each_cube(d: usize, r: i64, mut f: impl FnMut(&[i64])) {
    let mut c = vec![-r; d];
    loop {
        f(&c);
        let mut a = d;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            c[a] += 1;
            if c[a] < r {
                break;
            }
            c[a] = -r;
        }
    }
}

/// `∫_{Q_R} |e^{ψ1/ρ} - e^{ψ2/ρ}|` by the trapezoid rule on the shared grid.
pub fn dist_box<T: Real>(psi1: &GridFunction<T>, psi2: &GridFunction<T>, r: T, rho: T) -> Result<T> {
    if psi1.grid != psi2.grid {
        return domain("profiles live on different grids");
    }
    let w = psi1.grid.cube_weights(r)?;
    let terms: Vec<T> = w
        .iter()
        .zip(psi1.values.iter().zip(&psi2.values))
        .map(|(w, (a, b))| if *w > T::zero() { *w * ((*a / rho).exp() - (*b / rho).exp()).abs() } else { T::zero() })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Best-shift distance of a profile to the parabola on `Q_R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeDistance<T> {
    pub value: T,
    pub argmin_shift: Vec<T>,
    /// Truncation level `M`.
    pub m: T,
    pub r: T,
}

/// Midpoint quadrature of `Q_R` with `e^{ψ̂/ρ}` precomputed at the nodes.
#[derive(Debug, Clone)]
pub struct ShapeWindow<T> {
    pub d: usize,
    pub r: T,
    pub rho: T,
    nodes: Vec<Vec<T>>,
    weight: T,
    target: Vec<T>,
}

impl<T: Real> ShapeWindow<T> {
    /// `per_axis` midpoint cells along each axis of `Q_R`.
    pub fn new(d: usize, r: T, rho: T, per_axis: usize) -> Result<Self> {
        if d == 0 || per_axis == 0 || !(r > T::zero()) || !(rho > T::zero()) {
            return domain("shape window needs d, R, rho and the cell count positive");
        }
        let h = T::lit(2.0) * r / T::from_count(per_axis);
        let len = per_axis.pow(d as u32);
        let mut nodes = Vec::with_capacity(len);
        let mut target = Vec::with_capacity(len);
        for i in 0..len {
            let mut rest = i;
            let mut y = vec![T::zero(); d];
            for a in (0..d).rev() {
                y[a] = -r + (T::from_count(rest % per_axis) + T::lit(0.5)) * h;
                rest /= per_axis;
            }
            target.push((psi_hat_at(rho, &y) / rho).exp());
            nodes.push(y);
        }
        Ok(Self { d, r, rho, nodes, weight: h.powi(d as i32), target })
    }

    /// `∫_{Q_R} e^{ψ̂/ρ}`, the distance of the zero profile `e^{-∞}`.
    pub fn target_mass(&self) -> T {
        self.weight * pairwise_sum(&self.target)
    }

    /// `∫_{Q_R} |e^{(ψ(x+y)∧M)/ρ} - e^{ψ̂(y)/ρ}| dy`.
    pub fn distance<F: ContinuumField<T> + ?Sized>(&self, psi: &F, shift: &[T], m: T) -> T {
        let mut z = vec![T::zero(); self.d];
        let terms: Vec<T> = self
            .nodes
            .iter()
            .zip(&self.target)
            .map(|(y, target)| {
                for a in 0..self.d {
                    z[a] = shift[a] + y[a];
                }
                ((psi.value_at(&z).min(m) / self.rho).exp() - *target).abs()
            })
            .collect();
        self.weight * pairwise_sum(&terms)
    }
}

/// Shifts `k·spacing` with `|k·spacing| ≤ radius` per axis, in lexicographic order.
pub fn aligned_shifts<T: Real>(d: usize, radius: T, spacing: T) -> Vec<Vec<T>> {
    let k_max = (radius / spacing + T::lit(1e-9)).floor().to_i64().unwrap_or(0);
    let mut out = Vec::new();
    let mut k = vec![-k_max; d];
    if d == 0 {
        return out;
    }
    loop {
        out.push(k.iter().map(|&v| T::lit(v as f64) * spacing).collect());
        let mut a = d;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            k[a] += 1;
            if k[a] <= k_max {
                break;
            }
            k[a] = -k_max;
        }
    }
}

/// Minimizes [`ShapeWindow::distance`] over `shifts`; equal distances go to the
/// lexicographically smallest shift.
pub fn best_shift_distance<T: Real, F: ContinuumField<T> + ?Sized>(
    psi: &F,
    window: &ShapeWindow<T>,
    m: T,
    shifts: &[Vec<T>],
) -> Result<ShapeDistance<T>> {
    if shifts.is_empty() {
        return domain("shift grid is empty");
    }
    if psi.dim() != window.d || shifts.iter().any(|s| s.len() != window.d) {
        return domain("profile, window and shifts disagree on the dimension");
    }
    let mut best: Option<(T, &Vec<T>)> = None;
    for s in shifts {
        let v = window.distance(psi, s, m);
        let better = match best {
            None => true,
            Some((bv, bs)) => v < bv || (v == bv && lex_less(s, bs)),
        };
        if better {
            best = Some((v, s));
        }
    }
    let (value, shift) = best.expect("shifts are nonempty");
    Ok(ShapeDistance { value, argmin_shift: shift.clone(), m, r: window.r })
}

fn lex_less<T: Real>(a: &[T], b: &[T]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuum::FnField;

    #[test]
    fn global_distance_of_constants() {
        let one = FnField { d: 1, f: |_: &[f64]| 1.0 };
        let zero = FnField { d: 1, f: |_: &[f64]| 0.0 };
        let g = dist_global(&one, &zero, 40, 1).unwrap();
        let series: f64 = (1..=40).map(|r| 0.5f64.powi(r) * (2 * r) as f64 / (1 + 2 * r) as f64).sum();
        assert!((g.value - series).abs() < 1e-14);
        assert!(g.tail < 1e-12);
    }

    #[test]
    fn shifts_are_lexicographic() {
        let s = aligned_shifts(2, 1.0f64, 0.5);
        assert_eq!(s.len(), 25);
        assert_eq!(s[0], vec![-1.0, -1.0]);
        assert_eq!(s[1], vec![-1.0, -0.5]);
        assert_eq!(s[24], vec![1.0, 1.0]);
    }

    #[test]
    fn parabola_is_its_own_best_shift() {
        let rho = 1.0f64;
        let window = ShapeWindow::new(1, 2.0, rho, 80).unwrap();
        let x0 = 0.75;
        let psi = FnField { d: 1, f: move |x: &[f64]| psi_hat_at(rho, &[x[0] - x0]) };
        let shifts = aligned_shifts(1, 4.0, 0.25);
        let best = best_shift_distance(&psi, &window, psi_hat_at(rho, &[0.0]) + 1.0, &shifts).unwrap();
        assert!(best.value < 1e-12);
        assert!((best.argmin_shift[0] - x0).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_the_smallest_shift() {
        let window = ShapeWindow::new(1, 1.0f64, 1.0, 10).unwrap();
        let flat = FnField { d: 1, f: |_: &[f64]| -1e6 };
        let best = best_shift_distance(&flat, &window, 10.0, &aligned_shifts(1, 2.0, 0.5)).unwrap();
        assert_eq!(best.argmin_shift, vec![-2.0]);
        assert!((best.value - window.target_mass()).abs() < 1e-15);
    }
}

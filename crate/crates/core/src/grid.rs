//! Functions sampled on a uniform tensor grid over a centred cube.

use serde::{Deserialize, Serialize};

use crate::continuum::ContinuumField;
use crate::error::{domain, Result};
use crate::potential::Truncate;
use crate::scalar::Real;

/// Behaviour of point evaluation outside the cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// The function vanishes outside the cube.
    Zero,
    /// The nearest boundary value is used.
    Clamp,
}

/// Geometry of a grid: `[-half_width, half_width]^d` with spacing `spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    pub d: usize,
    pub half_width: T,
    pub spacing: T,
}

impl<T: Real> GridSpec<T> {
    /// Checks that `2L/h` is an integer (up to relative 1e-9).
    pub fn new(d: usize, half_width: T, spacing: T) -> Result<Self> {
        if d == 0 || !(half_width > T::zero()) || !(spacing > T::zero()) {
            return domain("grid needs d >= 1 and positive half-width and spacing");
        }
        let cells = T::lit(2.0) * half_width / spacing;
        if (cells - cells.round()).abs() > T::lit(1e-9) * cells.max(T::one()) {
            return domain(format!("2L/h = {cells} is not an integer"));
        }
        Ok(Self { d, half_width, spacing })
    }

    /// Grid whose half-width is `half_width` rounded up to a multiple of `spacing`,
    /// so that the origin is a node.
    pub fn snapped(d: usize, half_width: T, spacing: T) -> Result<Self> {
        let k = (half_width / spacing - T::lit(1e-9)).ceil();
        Self::new(d, k * spacing, spacing)
    }

    /// Nodes per axis.
    pub fn nodes(&self) -> usize {
        (T::lit(2.0) * self.half_width / self.spacing).round().to_usize().expect("node count") + 1
    }

    pub fn len(&self) -> usize {
        self.nodes().pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, k: usize) -> T {
        -self.half_width + T::from_count(k) * self.spacing
    }

    /// Per-axis indices of node `index` (last axis fastest).
    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let n = self.nodes();
        let mut k = vec![0; self.d];
        for a in (0..self.d).rev() {
            k[a] = index % n;
            index /= n;
        }
        k
    }

    pub fn point(&self, index: usize) -> Vec<T> {
        self.multi_index(index).into_iter().map(|k| self.coord(k)).collect()
    }

    /// Composite trapezoid weights per axis node.
    pub fn axis_weights(&self) -> Vec<T> {
        let n = self.nodes();
        let mut w = vec![self.spacing; n];
        w[0] = self.spacing * T::lit(0.5);
        w[n - 1] = self.spacing * T::lit(0.5);
        w
    }

    /// Trapezoid weights of the sub-cube `Q_r`, which must be grid-aligned;
    /// nodes outside get weight 0.
    pub fn cube_weights(&self, r: T) -> Result<Vec<T>> {
        let h = self.spacing;
        let kr = r / h;
        if (kr - kr.round()).abs() > T::lit(1e-9) * kr.max(T::one()) || r > self.half_width * (T::one() + T::lit(1e-12)) {
            return domain(format!("cube radius {r} is not a grid-aligned sub-cube"));
        }
        let kr = kr.round().to_usize().expect("cube radius");
        let centre = (self.nodes() - 1) / 2;
        let axis: Vec<T> = (0..self.nodes())
            .map(|k| {
                let off = k.abs_diff(centre);
                if off < kr {
                    h
                } else if off == kr {
                    if kr == 0 {
                        T::zero()
                    } else {
                        h * T::lit(0.5)
                    }
                } else {
                    T::zero()
                }
            })
            .collect();
        Ok(self.tensor_weights(&axis))
    }

    fn tensor_weights(&self, axis: &[T]) -> Vec<T> {
        (0..self.len()).map(|i| self.multi_index(i).iter().map(|&k| axis[k]).fold(T::one(), |p, w| p * w)).collect()
    }

    /// Trapezoid weights of all nodes.
    pub fn weights(&self) -> Vec<T> {
        self.tensor_weights(&self.axis_weights())
    }
}

/// Values on the nodes of a [`GridSpec`], row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction<T> {
    pub grid: GridSpec<T>,
    pub values: Vec<T>,
    pub boundary: Boundary,
}

impl<T: Real> GridFunction<T> {
    pub fn new(grid: GridSpec<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return domain(format!("{} values for a grid of {} nodes", values.len(), grid.len()));
        }
        Ok(Self { grid, values, boundary: Boundary::Zero })
    }

    pub fn zeros(grid: GridSpec<T>) -> Self {
        Self { values: vec![T::zero(); grid.len()], grid, boundary: Boundary::Zero }
    }

    pub fn from_fn(grid: GridSpec<T>, f: impl Fn(&[T]) -> T) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Self { grid, values, boundary: Boundary::Zero }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn d(&self) -> usize {
        self.grid.d
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { values: self.values.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    /// Trapezoid quadrature over the cube.
    pub fn integrate(&self) -> T {
        weighted_sum(&self.grid.weights(), &self.values)
    }

    /// Trapezoid quadrature over the grid-aligned sub-cube `Q_r`.
    pub fn integrate_cube(&self, r: T) -> Result<T> {
        Ok(weighted_sum(&self.grid.cube_weights(r)?, &self.values))
    }

    /// `∫ f g` by the trapezoid rule.
    pub fn inner(&self, other: &Self) -> T {
        let prods: Vec<T> = self.values.iter().zip(&other.values).map(|(a, b)| *a * *b).collect();
        weighted_sum(&self.grid.weights(), &prods)
    }

    pub fn norm_sq(&self) -> T {
        self.inner(self)
    }

    /// `‖∇g‖²` from forward differences along grid edges, each edge weighted
    /// by `h` times the trapezoid weights of its transverse coordinates.
    pub fn grad_norm_sq(&self) -> T {
        let n = self.grid.nodes();
        let d = self.d();
        let h = self.grid.spacing;
        let axis_w = self.grid.axis_weights();
        let mut strides = vec![1usize; d];
        for a in (0..d.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * n;
        }
        let mut terms = Vec::with_capacity(self.values.len() * d);
        for i in 0..self.values.len() {
            let k = self.grid.multi_index(i);
            for a in 0..d {
                if k[a] + 1 >= n {
                    continue;
                }
                let diff = (self.values[i + strides[a]] - self.values[i]) / h;
                let mut w = h;
                for (b, &kb) in k.iter().enumerate() {
                    if b != a {
                        w *= axis_w[kb];
                    }
                }
                terms.push(w * diff * diff);
            }
        }
        crate::stats::pairwise_sum(&terms)
    }

    /// Multilinear interpolation; outside the cube per [`Boundary`].
    pub fn interpolate(&self, x: &[T]) -> T {
        let n = self.grid.nodes();
        let d = self.d();
        let h = self.grid.spacing;
        let mut base = vec![0usize; d];
        let mut frac = vec![T::zero(); d];
        for a in 0..d {
            let mut s = (x[a] + self.grid.half_width) / h;
            let top = T::from_count(n - 1);
            if s < T::zero() || s > top {
                let slack = T::lit(1e-9);
                if self.boundary == Boundary::Zero && (s < -slack || s > top + slack) {
                    return T::zero();
                }
                s = s.max(T::zero()).min(top);
            }
            let k = s.floor().to_usize().unwrap_or(0).min(n.saturating_sub(2));
            base[a] = k;
            frac[a] = if n > 1 { s - T::from_count(k) } else { T::zero() };
        }
        let mut acc = T::zero();
        for corner in 0..(1usize << d) {
            let mut w = T::one();
            let mut idx = 0;
            for a in 0..d {
                let up = (corner >> a) & 1 == 1;
                w *= if up { frac[a] } else { T::one() - frac[a] };
                let k = if up { (base[a] + 1).min(n - 1) } else { base[a] };
                idx = idx * n + k;
            }
            if w != T::zero() {
                acc += w * self.values[idx];
            }
        }
        acc
    }
}

fn weighted_sum<T: Real>(w: &[T], v: &[T]) -> T {
    let terms: Vec<T> = w.iter().zip(v).map(|(a, b)| *a * *b).collect();
    crate::stats::pairwise_sum(&terms)
}

impl<T: Real> ContinuumField<T> for GridFunction<T> {
    fn dim(&self) -> usize {
        self.d()
    }

    fn value_at(&self, x: &[T]) -> T {
        self.interpolate(x)
    }

    fn half_width(&self) -> T {
        match self.boundary {
            Boundary::Zero => T::infinity(),
            Boundary::Clamp => self.grid.half_width,
        }
    }

    fn resolution(&self) -> Option<T> {
        Some(self.grid.spacing)
    }
}

impl<T: Real> Truncate for GridFunction<T> {
    fn truncate(&self, level: f64) -> Self {
        let m = T::lit(level);
        self.map(|v| v.min(m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_integrates_constants_exactly() {
        let g = GridSpec::new(2, 1.5f64, 0.25).unwrap();
        assert_eq!(g.nodes(), 13);
        let one = GridFunction::from_fn(g, |_| 1.0);
        assert!((one.integrate() - 9.0).abs() < 1e-12);
        assert!((one.integrate_cube(0.5).unwrap() - 1.0).abs() < 1e-12);
        assert!(one.integrate_cube(0.3).is_err());
    }

    #[test]
    fn snapping_keeps_origin_on_grid() {
        let g = GridSpec::snapped(1, 8.0 / std::f64::consts::PI.sqrt(), 0.05).unwrap();
        assert!((g.half_width - 4.55).abs() < 1e-12);
        assert_eq!(g.nodes() % 2, 1);
        assert!(g.coord((g.nodes() - 1) / 2).abs() < 1e-12);
        assert!(GridSpec::new(1, 1.0, 0.3).is_err());
    }

    #[test]
    fn interpolation_reproduces_bilinear_functions() {
        let g = GridSpec::new(2, 1.0f64, 0.5).unwrap();
        let f = GridFunction::from_fn(g, |x| 1.0 + 2.0 * x[0] - x[1] + x[0] * x[1]);
        let p = [0.3, -0.7];
        assert!((f.interpolate(&p) - (1.0 + 0.6 + 0.7 - 0.21)).abs() < 1e-12);
        assert_eq!(f.interpolate(&[2.0, 0.0]), 0.0);
        let c = f.clone().with_boundary(Boundary::Clamp);
        assert!((c.interpolate(&[2.0, 0.0]) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_of_linear_function() {
        let g = GridSpec::new(2, 1.0f64, 0.1).unwrap();
        let f = GridFunction::from_fn(g, |x| 3.0 * x[0] + 4.0 * x[1]);
        assert!((f.grad_norm_sq() - 25.0 * 4.0).abs() < 1e-9);
    }
}

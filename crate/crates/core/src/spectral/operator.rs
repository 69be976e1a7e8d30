use crate::error::{domain, Result};
use crate::lattice::LatticeRegion;
use crate::scalar::Real;

/// `Δᵈ + V` on a lattice region with zero values outside.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeOperator<T> {
    region: LatticeRegion,
    potential: Vec<T>,
    strides: Vec<usize>,
}

impl<T: Real> LatticeOperator<T> {
    pub fn new(region: LatticeRegion, potential: Vec<T>) -> Result<Self> {
        if region.is_empty() {
            return domain("empty box");
        }
        if region.len() != potential.len() {
            return domain(format!("{} potential values for {} sites", potential.len(), region.len()));
        }
        let strides = region.strides();
        Ok(Self { region, potential, strides })
    }

    pub fn region(&self) -> &LatticeRegion {
        &self.region
    }

    pub fn potential(&self) -> &[T] {
        &self.potential
    }

    pub fn dim(&self) -> usize {
        self.potential.len()
    }

    /// Diagonal entry `V(z) - 2d`.
    pub fn diagonal(&self, i: usize) -> T {
        self.potential[i] - T::from_count(2 * self.region.dim())
    }

    /// `y = (Δᵈ + V) x`.
    pub fn apply(&self, x: &[T], y: &mut [T]) {
        let d = self.region.dim();
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.diagonal(i) * x[i];
        }
        for a in 0..d {
            let stride = self.strides[a];
            let n = self.region.extent(a);
            // Couple each site to its successor along axis `a`.
            for i in 0..x.len() {
                if (i / stride) % n + 1 < n {
                    let j = i + stride;
                    y[i] += x[j];
                    y[j] += x[i];
                }
            }
        }
    }

    /// Dense row-major matrix of the operator.
    pub fn to_dense(&self) -> Vec<T> {
        let n = self.dim();
        let mut m = vec![T::zero(); n * n];
        let mut e = vec![T::zero(); n];
        let mut col = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            self.apply(&e, &mut col);
            for i in 0..n {
                m[i * n + j] = col[i];
            }
            e[j] = T::zero();
        }
        m
    }

    /// `⟨Δᵈf, f⟩ + ⟨V, f²⟩` for unit `f`; divided by `‖f‖²` otherwise.
    pub fn rayleigh(&self, f: &[T]) -> T {
        let mut af = vec![T::zero(); f.len()];
        self.apply(f, &mut af);
        dot(&af, f) / dot(f, f)
    }
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let prods: Vec<T> = a.iter().zip(b).map(|(x, y)| *x * *y).collect();
    crate::stats::pairwise_sum(&prods)
}

pub(crate) fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

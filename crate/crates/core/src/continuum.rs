//! Real-valued functions on (a cube of) R^d that can be point-evaluated.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::Real;
use crate::stats::pairwise_sum;

pub trait ContinuumField<T: Real> {
    fn dim(&self) -> usize;

    /// Value at `x`; NaN outside the domain.
    fn value_at(&self, x: &[T]) -> T;

    /// The field is defined on `[-half_width, half_width]^d`.
    fn half_width(&self) -> T {
        T::infinity()
    }

    /// Native sampling resolution, if the field is grid-backed.
    fn resolution(&self) -> Option<T> {
        None
    }

    /// `∫ f` over the cube `lo + [0, width)^d`.
    fn cell_integral(&self, lo: &[T], width: T, subcells: usize) -> T {
        let hi: Vec<T> = lo.iter().map(|v| *v + width).collect();
        self.box_integral(lo, &hi, subcells)
    }

    /// `∫ f` over the box `[lo, hi)` by the composite midpoint rule with
    /// `subcells` cells per axis.
    fn box_integral(&self, lo: &[T], hi: &[T], subcells: usize) -> T {
        let d = self.dim();
        let m = subcells.max(1);
        let w: Vec<T> = lo.iter().zip(hi).map(|(a, b)| (*b - *a) / T::from_count(m)).collect();
        let volume = w.iter().fold(T::one(), |p, v| p * *v);
        let half = T::lit(0.5);
        let mut x = vec![T::zero(); d];
        let mut idx = vec![0usize; d];
        let mut acc = T::zero();
        loop {
            for a in 0..d {
                x[a] = lo[a] + (T::from_count(idx[a]) + half) * w[a];
            }
            acc += self.value_at(&x);
            let mut a = d;
            loop {
                if a == 0 {
                    return acc * volume;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < m {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    /// `∫ f ln f` over the box `[lo, hi)` with `0 ln 0 = 0`, by the composite
    /// midpoint rule with `subcells` cells per axis.
    fn entropy_box_integral(&self, lo: &[T], hi: &[T], subcells: usize) -> T {
        let g = FnField { d: self.dim(), f: |x: &[T]| xlogx(self.value_at(x)) };
        g.box_integral(lo, hi, subcells)
    }
}

fn xlogx<T: Real>(v: T) -> T {
    if v > T::zero() {
        v * v.ln()
    } else {
        T::zero()
    }
}

/// Adapter turning a closure into a [`ContinuumField`].
pub struct FnField<F> {
    pub d: usize,
    pub f: F,
}

impl<T: Real, F: Fn(&[T]) -> T> ContinuumField<T> for FnField<F> {
    fn dim(&self) -> usize {
        self.d
    }

    fn value_at(&self, x: &[T]) -> T {
        (self.f)(x)
    }
}

/// Piecewise-constant function on `Q_L` split into `pieces^d` equal cubes,
/// row-major with the last axis fastest; NaN outside `Q_L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstant<T> {
    pub d: usize,
    pub half_width: T,
    pub pieces: usize,
    pub values: Vec<T>,
}

impl<T: Real> PiecewiseConstant<T> {
    pub fn new(d: usize, half_width: T, pieces: usize, values: Vec<T>) -> Result<Self> {
        if d == 0 || pieces == 0 || !(half_width > T::zero()) {
            return domain("piecewise-constant field needs d, pieces and half-width positive");
        }
        if values.len() != pieces.pow(d as u32) {
            return domain("piece count does not match the number of values");
        }
        Ok(Self { d, half_width, pieces, values })
    }

    fn piece_width(&self) -> T {
        T::lit(2.0) * self.half_width / T::from_count(self.pieces)
    }

    /// `∫ f log f` over `Q_L`, with `0 log 0 = 0`.
    pub fn entropy_integral(&self) -> T {
        let vol = self.piece_width().powi(self.d as i32);
        let terms: Vec<T> = self
            .values
            .iter()
            .map(|v| vol * xlogx(*v))
            .collect();
        pairwise_sum(&terms)
    }

    /// `Σ_pieces g(value)·(overlap volume with [lo, hi))`.
    fn overlap_sum(&self, lo: &[T], hi: &[T], g: impl Fn(T) -> T) -> T {
        let w = self.piece_width();
        // Per axis: overlap length of [lo, hi) with each piece.
        let overlaps: Vec<Vec<T>> = (0..self.d)
            .map(|a| {
                (0..self.pieces)
                    .map(|k| {
                        let p_lo = -self.half_width + T::from_count(k) * w;
                        let p_hi = p_lo + w;
                        (hi[a].min(p_hi) - lo[a].max(p_lo)).max(T::zero())
                    })
                    .collect()
            })
            .collect();
        let terms: Vec<T> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut rest = i;
                let mut vol = T::one();
                for a in (0..self.d).rev() {
                    vol *= overlaps[a][rest % self.pieces];
                    rest /= self.pieces;
                }
                if vol > T::zero() { vol * g(*v) } else { T::zero() }
            })
            .collect();
        pairwise_sum(&terms)
    }
}

impl<T: Real> ContinuumField<T> for PiecewiseConstant<T> {
    fn dim(&self) -> usize {
        self.d
    }

    fn value_at(&self, x: &[T]) -> T {
        let w = self.piece_width();
        let mut index = 0;
        for v in x {
            if !(v.abs() <= self.half_width) {
                return T::nan();
            }
            let k = ((*v + self.half_width) / w).floor().to_usize().unwrap_or(0).min(self.pieces - 1);
            index = index * self.pieces + k;
        }
        self.values[index]
    }

    fn half_width(&self) -> T {
        self.half_width
    }

    /// Exact: sums piece values times overlap volumes. The box must lie in `Q_L`.
    fn box_integral(&self, lo: &[T], hi: &[T], _subcells: usize) -> T {
        self.overlap_sum(lo, hi, |v| v)
    }

    /// Exact, as [`ContinuumField::box_integral`].
    fn entropy_box_integral(&self, lo: &[T], hi: &[T], _subcells: usize) -> T {
        self.overlap_sum(lo, hi, xlogx)
    }
}

//! Lattice Schrödinger operators `Δᵈ + V` with zero boundary condition and
//! their principal eigenvalues, including the rescaled eigenvalue that links
//! lattice and continuum.

mod dense;
mod lanczos;
mod operator;
mod rescaled;

pub use dense::{symmetric_eigen, symmetric_eigenvalues, tridiagonal_eigenvalues, tridiagonal_top_pair};
pub use lanczos::lanczos_principal;
pub use operator::LatticeOperator;
pub use rescaled::{
    box_decomposition_gap, box_decomposition_gap_scaled, discretize_continuum, rescaled_eigen,
    rescaled_eigen_with_alpha, DecompositionGap,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeRegion;
use crate::scalar::Real;

/// Boxes with at most this many sites are solved densely.
pub const DENSE_MAX_SITES: usize = 400;
/// Krylov basis size per Lanczos cycle.
pub const LANCZOS_BASIS: usize = 120;
/// Lanczos restart budget.
pub const LANCZOS_RESTARTS: usize = 60;

/// Principal eigenpair with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult<T> {
    pub value: T,
    /// Unit ℓ² norm, nonnegative.
    pub vector: Vec<T>,
    pub iterations: usize,
    /// `‖Av - λv‖₂`.
    pub residual: T,
}

impl<T: Real> EigenResult<T> {
    /// Fixes the sign, recomputes the Rayleigh quotient and the residual.
    pub(crate) fn from_vector(op: &LatticeOperator<T>, mut v: Vec<T>, iterations: usize) -> Self {
        let sum: T = v.iter().copied().sum();
        if sum < T::zero() {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
        for x in v.iter_mut() {
            if *x < T::zero() {
                *x = T::zero();
            }
        }
        let nv = operator::norm(&v);
        for x in v.iter_mut() {
            *x /= nv;
        }
        let mut av = vec![T::zero(); v.len()];
        op.apply(&v, &mut av);
        let value = operator::dot(&av, &v);
        let r: Vec<T> = av.iter().zip(&v).map(|(a, x)| *a - value * *x).collect();
        Self { value, residual: operator::norm(&r), vector: v, iterations }
    }
}

/// Top of the spectrum of `Δᵈ + V` on `region` with zero boundary.
///
/// Dense Householder/QL for at most [`DENSE_MAX_SITES`] sites, a tridiagonal QL
/// solve for longer chains, Lanczos otherwise. Fails unless the residual is at
/// most `tol`.
pub fn principal_eigen_discrete<T: Real>(region: &LatticeRegion, potential: &[T], tol: T) -> Result<EigenResult<T>> {
    let op = LatticeOperator::new(region.clone(), potential.to_vec())?;
    principal_eigen(&op, tol)
}

/// [`principal_eigen_discrete`] for an existing operator.
pub fn principal_eigen<T: Real>(op: &LatticeOperator<T>, tol: T) -> Result<EigenResult<T>> {
    if !(tol > T::zero()) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let n = op.dim();
    let result = if n <= DENSE_MAX_SITES {
        let (_, vectors) = symmetric_eigen(op.to_dense(), n)?;
        let top: Vec<T> = (0..n).map(|k| vectors[k * n + n - 1]).collect();
        EigenResult::from_vector(op, top, 1)
    } else if op.region().dim() == 1 {
        let diag: Vec<T> = (0..n).map(|i| op.diagonal(i)).collect();
        let (_, v) = tridiagonal_top_pair(&diag, &vec![T::one(); n - 1])?;
        EigenResult::from_vector(op, v, 1)
    } else {
        return lanczos_principal(op, tol, LANCZOS_BASIS, LANCZOS_RESTARTS);
    };
    if result.residual <= tol {
        Ok(result)
    } else {
        Err(Error::EigenNonConvergence {
            rayleigh: result.value.as_f64(),
            residual: result.residual.as_f64(),
            iterations: result.iterations,
        })
    }
}

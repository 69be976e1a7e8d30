use rayon::prelude::*;

use super::{principal_eigen_discrete, EigenResult};
use crate::continuum::ContinuumField;
use crate::error::{Error, Result};
use crate::lattice::LatticeRegion;
use crate::potential::{PotentialField, ScaleTable};
use crate::scalar::Real;

/// Midpoint sub-cells per axis for fields without a native resolution.
pub const DEFAULT_SUBCELLS: usize = 8;

/// `ψᵈ(z) = α^d ∫_{z/α + [0,1/α)^d} ψ` on the centred lattice box of radius `radius`.
///
/// Grid-backed fields are integrated with `⌈1/(αh)⌉` midpoint sub-cells per
/// axis and must be at least as fine as the lattice cells.
pub fn discretize_continuum<T: Real, F: ContinuumField<T> + ?Sized>(psi: &F, alpha: T, radius: usize) -> Result<Vec<T>> {
    let d = psi.dim();
    let width = T::one() / alpha;
    let subcells = match psi.resolution() {
        Some(h) if h > width * (T::one() + T::lit(1e-12)) => {
            return Err(Error::GridTooCoarse { spacing: h.as_f64(), required: width.as_f64() });
        }
        Some(h) => (width / h - T::lit(1e-9)).ceil().to_usize().unwrap_or(1).max(1),
        None => DEFAULT_SUBCELLS,
    };
    let reach = T::from_count(radius) * width;
    if reach > psi.half_width() * (T::one() + T::lit(1e-12)) {
        return Err(Error::WindowExceedsField { required: reach.as_f64(), available: psi.half_width().as_f64() });
    }
    let region = LatticeRegion::centered(d, radius as i64);
    let scale = alpha.powi(d as i32);
    Ok(region
        .sites()
        .map(|z| {
            let lo: Vec<T> = z.iter().map(|&zi| T::lit(zi as f64) * width).collect();
            scale * psi.cell_integral(&lo, width, subcells)
        })
        .collect())
}

/// `α² λᵈ_{B_{⌊Rα⌋}}(ψᵈ/α²)` for a given `α`.
pub fn rescaled_eigen_with_alpha<T: Real, F: ContinuumField<T> + ?Sized>(psi: &F, r: T, alpha: T, tol: T) -> Result<T> {
    let radius = (r * alpha).floor().to_usize().unwrap_or(0);
    let a2 = alpha * alpha;
    let potential: Vec<T> = discretize_continuum(psi, alpha, radius)?.into_iter().map(|v| v / a2).collect();
    let region = LatticeRegion::centered(psi.dim(), radius as i64);
    // The eigenvalue is multiplied by α², so the residual target shrinks alike.
    Ok(a2 * principal_eigen_discrete(&region, &potential, tol / a2)?.value)
}

/// The rescaled eigenvalue `λ_R^{(t)}(ψ)` with `α = α(t)` from the table.
pub fn rescaled_eigen<F: ContinuumField<f64> + ?Sized>(psi: &F, r: f64, t: f64, table: &ScaleTable, tol: f64) -> Result<f64> {
    let alpha = table.alpha(t, psi.dim())?;
    rescaled_eigen_with_alpha(psi, r, alpha, tol)
}

/// Eigenvalue on a big box against the best of the overlapping sub-boxes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionGap<T> {
    pub lambda_big: T,
    pub lambda_submax: T,
    pub sub_boxes: usize,
}

impl<T: Real> DecompositionGap<T> {
    pub fn gap(&self) -> T {
        self.lambda_big - self.lambda_submax
    }
}

/// Compares `λᵈ` on `region` with the maximum over the boxes
/// `k·spacing + B_{sub_radius}` (clipped to `region`) that meet it.
pub fn box_decomposition_gap<T: Real>(
    region: &LatticeRegion,
    potential: &[T],
    sub_radius: usize,
    spacing: usize,
    tol: T,
) -> Result<DecompositionGap<T>> {
    if spacing == 0 {
        return Err(Error::Domain("sub-box spacing must be positive".into()));
    }
    let d = region.dim();
    let big = principal_eigen_discrete(region, potential, tol)?.value;
    let r = sub_radius as i64;
    let s = spacing as i64;
    // Range of centre multipliers per axis whose box meets the region.
    let k_lo: Vec<i64> = (0..d).map(|a| -(r - region.lo[a]).div_euclid(s)).collect();
    let k_hi: Vec<i64> = (0..d).map(|a| (region.hi[a] + r).div_euclid(s)).collect();
    let centres = LatticeRegion { lo: k_lo, hi: k_hi };
    let subs: Vec<LatticeRegion> = centres
        .sites()
        .map(|k| {
            let c: Vec<i64> = k.iter().map(|x| x * s).collect();
            LatticeRegion { lo: c.iter().map(|x| x - r).collect(), hi: c.iter().map(|x| x + r).collect() }.intersect(region)
        })
        .filter(|b| !b.is_empty())
        .collect();
    let values: Vec<T> = subs
        .par_iter()
        .map(|b| principal_eigen_discrete(b, &b.restrict(region, potential), tol).map(|e: EigenResult<T>| e.value))
        .collect::<Result<_>>()?;
    let lambda_submax = values.iter().copied().fold(T::neg_infinity(), T::max);
    Ok(DecompositionGap { lambda_big: big, lambda_submax, sub_boxes: subs.len() })
}

/// [`box_decomposition_gap`] with sub-radius `⌊3Rα⌋` and spacing `⌊4Rα⌋`, `α = α(t)`.
pub fn box_decomposition_gap_scaled(
    field: &PotentialField,
    r: f64,
    t: f64,
    table: &ScaleTable,
    tol: f64,
) -> Result<DecompositionGap<f64>> {
    let alpha = table.alpha(t, field.d())?;
    let sub = (3.0 * r * alpha).floor() as usize;
    let spacing = ((4.0 * r * alpha).floor() as usize).max(1);
    box_decomposition_gap(&field.region(), &field.values, sub, spacing, tol)
}

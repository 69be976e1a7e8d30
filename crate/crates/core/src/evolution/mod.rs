//! The Cauchy problem `∂v/∂t = Δᵈv + ξv`, `v(0) = 1₀`, on a box with zero
//! boundary, and its Feynman–Kac representation.

mod krylov;
mod walk;

pub use krylov::expmv;
pub use walk::{fk_estimate, fk_restricted, simulate_walk, FkEstimate, LocalTimes};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::lattice::{BoxSpec, LatticeRegion};
use crate::potential::PotentialField;
use crate::spectral::{symmetric_eigen, LatticeOperator};
use crate::stats::pairwise_sum;

/// Boxes up to this size may use the eigen-decomposition exponential.
pub const EXACT_MAX_SITES: usize = 4096;

/// `v(t, ·)` on a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionState {
    pub time: f64,
    #[serde(rename = "box")]
    pub box_spec: BoxSpec,
    pub values: Vec<f64>,
}

impl SolutionState {
    /// The initial datum `1₀`.
    pub fn initial(box_spec: BoxSpec) -> Result<Self> {
        let region = box_spec.region()?;
        let mut values = vec![0.0; region.len()];
        values[origin_index(&region)] = 1.0;
        Ok(Self { time: 0.0, box_spec, values })
    }

    pub fn region(&self) -> LatticeRegion {
        self.box_spec.region().expect("solutions live on lattice boxes")
    }

    /// Mass on the outermost layer of sites, a leakage monitor.
    pub fn boundary_mass(&self) -> f64 {
        let region = self.region();
        let r = self.box_spec.radius as i64;
        let edge: Vec<f64> = region
            .sites()
            .zip(&self.values)
            .filter(|(z, _)| z.iter().any(|c| c.abs() == r))
            .map(|(_, v)| *v)
            .collect();
        pairwise_sum(&edge)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }
}

fn origin_index(region: &LatticeRegion) -> usize {
    region.index_of(&vec![0; region.dim()]).expect("box contains the origin")
}

/// `U(t) = Σ_z v(t, z)`.
pub fn total_mass(state: &SolutionState) -> f64 {
    pairwise_sum(&state.values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolveMethod {
    /// Adaptive Krylov exponential.
    Krylov,
    /// Full eigen-decomposition (at most [`EXACT_MAX_SITES`] sites).
    Exact,
}

/// Evolves `1₀` to time `t` by the adaptive Krylov exponential with local
/// error `tol` per step.
pub fn evolve(field: &PotentialField, t: f64, tol: f64) -> Result<SolutionState> {
    evolve_with(field, t, tol, EvolveMethod::Krylov)
}

pub fn evolve_with(field: &PotentialField, t: f64, tol: f64, method: EvolveMethod) -> Result<SolutionState> {
    if !(t >= 0.0) || !t.is_finite() {
        return domain(format!("time must be finite and nonnegative, got {t}"));
    }
    let mut state = SolutionState::initial(field.box_spec)?;
    if t == 0.0 {
        return Ok(state);
    }
    let op = LatticeOperator::new(field.region(), field.values.clone())?;
    let mut values = match method {
        EvolveMethod::Krylov => expmv(&op, &state.values, t, tol)?,
        EvolveMethod::Exact => exact_exponential(&op, origin_index(op.region()), t)?,
    };
    // The semigroup is positivity preserving; negatives are rounding.
    for v in values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    state.values = values;
    state.time = t;
    Ok(state)
}

/// `e^{tA} e_{origin}` via `A = QΛQᵀ`.
fn exact_exponential(op: &LatticeOperator<f64>, origin: usize, t: f64) -> Result<Vec<f64>> {
    let n = op.dim();
    if n > EXACT_MAX_SITES {
        return domain(format!("exact exponential limited to {EXACT_MAX_SITES} sites, box has {n}"));
    }
    let (lambda, q) = symmetric_eigen(op.to_dense(), n)?;
    let top = lambda[n - 1];
    let growth = (t * top).exp();
    let coef: Vec<f64> = (0..n).map(|k| (t * (lambda[k] - top)).exp() * q[origin * n + k]).collect();
    Ok((0..n)
        .map(|i| {
            let terms: Vec<f64> = (0..n).map(|k| q[i * n + k] * coef[k]).collect();
            growth * pairwise_sum(&terms)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialDistribution;

    fn field(values: Vec<f64>, d: usize, r: usize) -> PotentialField {
        PotentialField::from_values(BoxSpec::lattice(d, r), values, PotentialDistribution::Constant { c: 0.0 }, 0).unwrap()
    }

    #[test]
    fn zero_time_is_initial_datum() {
        let f = field(vec![1.0; 5], 1, 2);
        let s = evolve(&f, 0.0, 1e-10).unwrap();
        assert_eq!(total_mass(&s), 1.0);
        assert_eq!(s.values[2], 1.0);
    }

    #[test]
    fn krylov_matches_exact_path() {
        let vals: Vec<f64> = (0..49).map(|i| ((i * 37 % 17) as f64 - 8.0) / 4.0).collect();
        let f = field(vals, 2, 3);
        let a = evolve_with(&f, 1.7, 1e-12, EvolveMethod::Krylov).unwrap();
        let b = evolve_with(&f, 1.7, 1e-12, EvolveMethod::Exact).unwrap();
        let (ma, mb) = (total_mass(&a), total_mass(&b));
        assert!((ma - mb).abs() < 1e-9 * mb, "{ma} vs {mb}");
    }
}

use serde::{Deserialize, Serialize};

use pamlab_core::confinement::TiltChoice;
use pamlab_core::potential::PotentialDistribution;

/// One flat JSON document configures every subcommand; keys a subcommand does
/// not use are ignored by it. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub distribution: PotentialDistribution,
    pub d: usize,
    /// `ρ` of the variational problems; the distribution's own when absent.
    pub rho: Option<f64>,
    /// Half width `L` of the variational grid; `8/√ρ` when absent.
    pub half_width: Option<f64>,
    pub h: f64,
    /// Box radii `R` in rescaled units; the first one is used where a single
    /// radius is needed.
    pub radii: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// Upper end of the cumulant table.
    pub t_max: f64,
    /// Monte Carlo size `N` for path, field and confinement samples.
    pub replicas: usize,
    /// Independent potential fields for `eigen`, `evolve` and `fk`.
    pub fields: usize,
    /// Samples of the intermittency ratio.
    pub samples: usize,
    pub seed: u64,
    /// Lattice radius of the boxes of `eigen`, `evolve`, `fk` and `moments`.
    pub lattice_radius: usize,
    pub tol: f64,
    pub gtol: f64,
    pub max_iter: usize,
    pub eps_grid: Vec<f64>,
    /// Constrained multistarts per `ε`; none when zero.
    pub multistarts: usize,
    /// Random profiles of the log-Sobolev suite; none when zero.
    pub profiles: usize,
    /// Ratio `y` of the (HK) check.
    pub y: f64,
    /// Pieces per axis of the `ldp` test function on `Q_R`.
    pub pieces: usize,
    /// `pieces^d` values of the test function, row major.
    pub piece_values: Vec<f64>,
    pub subcells: usize,
    pub k_values: Vec<f64>,
    pub m_levels: Option<Vec<f64>>,
    pub p: f64,
    pub q: f64,
    pub window_cells: usize,
    pub ess_threshold: f64,
    pub tilt: TiltChoice,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            distribution: PotentialDistribution::TripleExp { rho0: 1.0 },
            d: 1,
            rho: None,
            half_width: None,
            h: 0.05,
            radii: vec![1.0],
            t_grid: vec![30.0, 100.0, 300.0],
            t_max: 1e9,
            replicas: 20000,
            fields: 8,
            samples: 200,
            seed: 1,
            lattice_radius: 10,
            tol: 1e-10,
            gtol: 1e-6,
            max_iter: 5000,
            eps_grid: vec![0.0, 0.1, 0.3, 0.5, 1.0],
            multistarts: 0,
            profiles: 0,
            y: 2.0,
            pieces: 1,
            piece_values: vec![1.0],
            subcells: 8,
            k_values: vec![1.0, 2.0],
            m_levels: None,
            p: 1.0,
            q: 2.0,
            window_cells: 200,
            ess_threshold: 50.0,
            tilt: TiltChoice::Default,
        }
    }
}

impl RunConfig {
    /// `ρ` for the variational side: the override, else the distribution's
    /// own, else 1 for the degenerate families.
    pub fn rho(&self) -> f64 {
        match (self.rho, self.distribution.rho()) {
            (Some(r), _) => r,
            (None, r) if r > 0.0 => r,
            _ => 1.0,
        }
    }

    pub fn half_width(&self) -> f64 {
        self.half_width.unwrap_or_else(|| 8.0 / self.rho().sqrt())
    }

    pub fn radius(&self) -> Result<f64, String> {
        self.radii.first().copied().ok_or_else(|| "radii must not be empty".into())
    }

    pub fn validate(&self) -> Result<(), String> {
        self.distribution.validate().map_err(|e| e.to_string())?;
        if !(1..=3).contains(&self.d) {
            return Err(format!("d must be 1, 2 or 3, got {}", self.d));
        }
        if self.t_grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err("t_grid entries must be positive and finite".into());
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err("radii must be positive and finite".into());
        }
        if !(self.h > 0.0) {
            return Err("h must be positive".into());
        }
        Ok(())
    }
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distribution::PotentialDistribution;
use super::scale::ScaleTable;
use crate::continuum::ContinuumField;
use crate::error::{domain, Error, Result};
use crate::lattice::{BoxSpec, LatticeRegion};
use crate::rng::{stream_rng, Rng};

/// Sites per RNG stream when sampling fields.
pub const SAMPLE_CHUNK: usize = 4096;

/// An i.i.d. realization on a lattice box, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialField {
    #[serde(rename = "box")]
    pub box_spec: BoxSpec,
    pub values: Vec<f64>,
    pub seed: u64,
    pub dist: PotentialDistribution,
}

impl PotentialField {
    /// A field with prescribed values (used for fixtures and derived fields).
    pub fn from_values(box_spec: BoxSpec, values: Vec<f64>, dist: PotentialDistribution, seed: u64) -> Result<Self> {
        let region = box_spec.region()?;
        if region.len() != values.len() {
            return domain(format!("{} values for a box of {} sites", values.len(), region.len()));
        }
        Ok(Self { box_spec, values, seed, dist })
    }

    pub fn region(&self) -> LatticeRegion {
        self.box_spec.region().expect("fields live on lattice boxes")
    }

    pub fn radius(&self) -> usize {
        self.box_spec.radius as usize
    }

    pub fn d(&self) -> usize {
        self.box_spec.d
    }

    /// Value at the site `z`, if inside the box.
    pub fn at(&self, z: &[i64]) -> Option<f64> {
        self.region().index_of(z).map(|i| self.values[i])
    }

    /// Restriction to the centred sub-box of radius `radius`.
    pub fn restrict(&self, radius: usize) -> Result<PotentialField> {
        if radius > self.radius() {
            return Err(Error::WindowExceedsField { required: radius as f64, available: self.radius() as f64 });
        }
        let sub = LatticeRegion::centered(self.d(), radius as i64);
        Ok(Self {
            box_spec: BoxSpec::lattice(self.d(), radius),
            values: sub.restrict(&self.region(), &self.values),
            seed: self.seed,
            dist: self.dist,
        })
    }
}

/// Fills `n` site values; the sites of chunk `c` (of [`SAMPLE_CHUNK`] sites)
/// draw from stream `c` of `seed`, in enumeration order.
pub fn sample_sites(n: usize, seed: u64, draw: impl Fn(usize, &mut Rng) -> f64 + Sync) -> Vec<f64> {
    let mut values = vec![0.0; n];
    values.par_chunks_mut(SAMPLE_CHUNK).enumerate().for_each(|(c, chunk)| {
        let mut rng = stream_rng(seed, c as u64);
        for (k, v) in chunk.iter_mut().enumerate() {
            *v = draw(c * SAMPLE_CHUNK + k, &mut rng);
        }
    });
    values
}

/// Samples ξ on a lattice box.
pub fn sample_field(dist: &PotentialDistribution, box_spec: BoxSpec, seed: u64) -> Result<PotentialField> {
    let region = box_spec.region()?;
    let values = sample_sites(region.len(), seed, |_, rng| dist.sample(rng));
    Ok(PotentialField { box_spec, values, seed, dist: *dist })
}

/// Samples ξ with site `i` drawn from the law tilted by `theta[i]`.
pub fn sample_field_tilted(
    dist: &PotentialDistribution,
    box_spec: BoxSpec,
    theta: &[f64],
    seed: u64,
) -> Result<PotentialField> {
    let region = box_spec.region()?;
    if theta.len() != region.len() {
        return domain("tilt length differs from the number of sites");
    }
    let values = sample_sites(region.len(), seed, |i, rng| dist.sample_tilted(theta[i], rng));
    Ok(PotentialField { box_spec, values, seed, dist: *dist })
}

/// Piecewise-constant function `x ↦ min(values[⌊αx⌋], cap)` on the cells
/// `[z/α, (z+1)/α)` of a lattice region; NaN outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    pub alpha: f64,
    pub region: LatticeRegion,
    pub values: Vec<f64>,
    pub cap: f64,
}

impl StepFunction {
    pub fn new(alpha: f64, region: LatticeRegion, values: Vec<f64>) -> Self {
        Self { alpha, region, values, cap: f64::INFINITY }
    }

    pub fn cell_value(&self, index: usize) -> f64 {
        self.values[index].min(self.cap)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let z: Vec<i64> = x.iter().map(|&xi| (self.alpha * xi).floor() as i64).collect();
        match self.region.index_of(&z) {
            Some(i) => self.cell_value(i),
            None => f64::NAN,
        }
    }
}

impl ContinuumField<f64> for StepFunction {
    fn dim(&self) -> usize {
        self.region.dim()
    }

    fn value_at(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    fn half_width(&self) -> f64 {
        (0..self.dim())
            .map(|a| (-(self.region.lo[a] as f64)).min(self.region.hi[a] as f64 + 1.0) / self.alpha)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Pointwise minimum with a level.
pub trait Truncate {
    fn truncate(&self, level: f64) -> Self;
}

impl Truncate for StepFunction {
    fn truncate(&self, level: f64) -> Self {
        Self { cap: self.cap.min(level), ..self.clone() }
    }
}

/// `(α^d/t)·H(t/α^d)`, the vertical centering of the potential at time `t`.
pub fn centering(table: &ScaleTable, t: f64, d: usize) -> Result<f64> {
    let alpha = table.alpha(t, d)?;
    let big_t = t / alpha.powi(d as i32);
    Ok(table.cgf(big_t)? / big_t)
}

/// `ξ_t = ξ - (α^d/t)H(t/α^d)` and `ξ̄_t(x) = α² ξ_t(⌊αx⌋)`.
///
/// With `window = Some(r)`, the field must cover the continuum cube `Q_r`,
/// i.e. have lattice radius at least `⌈rα⌉`.
pub fn shift_rescale(
    field: &PotentialField,
    t: f64,
    table: &ScaleTable,
    window: Option<f64>,
) -> Result<(PotentialField, StepFunction)> {
    let d = field.d();
    let alpha = table.alpha(t, d)?;
    if let Some(r) = window {
        let required = (r * alpha).ceil();
        if required > field.radius() as f64 {
            return Err(Error::WindowExceedsField { required, available: field.radius() as f64 });
        }
    }
    let shift = centering(table, t, d)?;
    let xi_t = PotentialField {
        values: field.values.iter().map(|v| v - shift).collect(),
        ..field.clone()
    };
    let a2 = alpha * alpha;
    let bar = StepFunction::new(alpha, field.region(), xi_t.values.iter().map(|v| a2 * v).collect());
    Ok((xi_t, bar))
}

/// `P(ξ(0) > H(T)/T + M/α²)^{count/2}` with `T = t/α^d`.
pub fn exceedance_tail(
    dist: &PotentialDistribution,
    table: &ScaleTable,
    t: f64,
    d: usize,
    level: f64,
    count: usize,
) -> Result<f64> {
    if count == 0 {
        return Ok(1.0);
    }
    let alpha = table.alpha(t, d)?;
    let threshold = centering(table, t, d)? + level / (alpha * alpha);
    Ok((dist.log_tail(threshold) * count as f64 / 2.0).exp())
}

/// The exponential Markov bound `exp(-(t/α²)·M·count/(2α^d))` for [`exceedance_tail`].
pub fn exceedance_bound(table: &ScaleTable, t: f64, d: usize, level: f64, count: usize) -> Result<f64> {
    let alpha = table.alpha(t, d)?;
    Ok((-(t / (alpha * alpha)) * level * count as f64 / (2.0 * alpha.powi(d as i32))).exp())
}

//! The almost-bounded potential family, i.i.d. fields, and the scale functions
//! `H`, `κ`, `α` with the shifted/rescaled potentials `ξ_t`, `ξ̄_t`.

mod distribution;
mod field;
mod scale;

pub use distribution::{PotentialDistribution, CGF_ABS_TOL};
pub use field::{
    centering, exceedance_bound, exceedance_tail, sample_field, sample_field_tilted, sample_sites, shift_rescale,
    PotentialField, StepFunction, Truncate, SAMPLE_CHUNK,
};
pub use scale::{ScaleTable, ALPHA_RTOL};

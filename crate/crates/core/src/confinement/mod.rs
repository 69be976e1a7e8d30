//! Shape metrics against the parabola, deterministic rate-function checks and
//! the importance-sampled confinement experiment.

mod experiment;
mod metric;
mod rate;

pub use experiment::{
    confinement_experiment, default_m_levels, intermittency_ratio, log_eigen_moment, ConfinementConfig, ConfinementReport,
    ReplicaRow, TiltChoice, TiltMixture, TiltSpec, TimeSlice,
};
pub use metric::{aligned_shifts, best_shift_distance, dist_box, dist_global, GlobalDistance, ShapeDistance, ShapeWindow};
pub use rate::{
    annealed_f_moment, annealed_partition_sum, cumulant_rate_check, d_beta_member, functional_f, AnnealedMoment,
    CumulantCheck, ExponentialMass,
};

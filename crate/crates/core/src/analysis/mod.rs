//! Checks of the identities, inequalities and expansions satisfied by the
//! scheme and by its solutions.

mod auxiliary;
mod expansion;
mod lemma;
mod modulus;
mod record;
mod region;
mod sweeps;

pub use auxiliary::{
    aux_eval, omega_check, AuxArgs, AuxFunction, AuxiliaryFunctions, OmegaParams, OmegaReport,
};
pub use expansion::{
    effective_coefficients, effective_pde_coefficients, expansion_residual,
    normalized_infinity_laplacian, quadratic_residual_tolerance, EffectiveCoefficients,
    SmoothTestFunction,
};
pub use lemma::{
    barrier_check, barrier_value, time_osc_check, BarrierKind, BarrierReport, TimeOscAccumulator,
    TimeOscReport, TIME_OSC_FACTOR,
};
pub use modulus::{empirical_modulus, ModulusReport, SpaceTime};
pub use record::CheckRecord;
pub use region::QRegion;
pub use sweeps::{
    aux_consistency_check, exp_heat_rate, paired_rotation_check, quadratic_sweep,
    random_quadratic, AuxConsistencyReport, PairedRotationReport, QuadraticSweep, ResidualRate,
};

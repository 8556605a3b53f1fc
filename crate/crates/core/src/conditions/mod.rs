//! Condition sets evaluated as residual statistics over seeded samples.

mod checks;
pub mod equations;
mod report;
mod sample;

pub use checks::{
    check_energy_variation, check_gyro_class, derive_omega, lagrange_differential, BasicTwoForm,
    Checker, EnergyTrace, GyroClass, DEFAULT_TOL, ENERGY_TOL_FACTOR, NONTRIVIAL_TOL, REGULAR_TOL,
};
pub use report::{ConditionReport, MAX_SKIP_FRACTION};
pub use sample::SampleDomain;

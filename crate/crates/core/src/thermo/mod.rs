//! Pressure, dual variational checks and explicit potentials.

pub mod construct;
pub mod dual;
pub mod pressure;
pub mod transfer;

pub use construct::{
    construct_psi, dyadic_weights, non_equilibrium_measure, EntropyCertificate, PsiConstruction,
};
pub use dual::{dual_vp_check, DualityReport, FamilySpec, OptimizerParams};
pub use pressure::{
    pressure, pressure_at_infinity_lower, s_infinity, ErrorBound, InfinityBound, PressureEstimate,
    PressureMethod, PressureParams, SInfinity,
};
pub use transfer::{equilibrium_finite, parry_measure, Equilibrium};

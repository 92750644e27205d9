//! Closed-form stability analysis of the delayed SEIQRD model.
//!
//! Linearising about an equilibrium gives the factored characteristic function
//!
//! ```text
//! χ(λ) = (λ+μ)^m · (λ + μ + δα + ρ(1-α) e^{-κλ}) · P(λ)
//! ```
//!
//! with `m = 3` and a quadratic quasi-polynomial `P` at the disease-free
//! state, `m = 2` and a cubic one at the endemic state.

mod characteristic;
mod classify;
mod coefficients;
mod hopf;
mod threshold;

pub use characteristic::{
    leading_root, roots_in_box, Characteristic, Equilibrium, RootSearchError, SearchBox,
};
pub use classify::{classify_dfe, classify_endemic, StabilityReport, Verdict};
pub use coefficients::{quarantine_branch_stable, DfeCoefficients, EndemicCoefficients};
pub use hopf::{
    critical_delay, critical_delay_branch, crossing_drift, omega_star, transversality,
    CriticalDelay, NoCriticalDelay, Transversality, FIXED_POINT_MAX_ITER, FIXED_POINT_TOL,
};
pub use threshold::{
    disease_free_equilibrium, endemic_equilibrium, endemic_exists, reproduction_number,
    SpectralError,
};

//! Delayed SEIQRD epidemic model with temperature-dependent transmission.
//!
//! * [`dde`]: fixed-step RK4 integrator for constant-lag delay equations.
//! * [`model`]: parameters, transmission law, right-hand side and simulation.
//! * [`spectral`]: reproduction number, equilibria, characteristic equations,
//!   critical delay and stability classification.
//! * [`experiments`]: temperature, isolation, bifurcation and sensitivity studies.
//! * [`report`]: configuration files, CSV tables, SVG plots and run manifests.

pub mod dde;
pub mod experiments;
pub mod model;
pub mod report;
pub mod spectral;

use thiserror::Error;

use crate::model::{ModelParams, StateVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("reproduction number undefined: (ε+μ)(γ + p e^(-γτ) + μ) = {0}")]
    ZeroDenominator(f64),
}

/// `(ε+μ)(γ + p e^{-γτ} + μ)`, the outflow product shared by R₀ and S*.
fn outflow(params: &ModelParams) -> f64 {
    (params.epsilon + params.mu) * (params.gamma + params.isolation_rate() + params.mu)
}

/// Spectral radius of the next-generation matrix:
/// `R₀ = βε / ((ε+μ)(γ + p e^{-γτ} + μ))`.
pub fn reproduction_number(params: &ModelParams, beta: f64) -> Result<f64, SpectralError> {
    let den = outflow(params);
    if !(den > 0.0) {
        return Err(SpectralError::ZeroDenominator(den));
    }
    Ok(beta * params.epsilon / den)
}

pub fn disease_free_equilibrium() -> StateVector {
    StateVector::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
}

/// `(ε+μ)(γ + p e^{-γτ} + μ) < βε`
pub fn endemic_exists(params: &ModelParams, beta: f64) -> bool {
    outflow(params) < beta * params.epsilon
}

/// Closed-form interior equilibrium (assumes Ω = μ); `None` when it does not exist.
pub fn endemic_equilibrium(params: &ModelParams, beta: f64) -> Option<StateVector> {
    if !endemic_exists(params, beta) {
        return None;
    }
    let ModelParams {
        mu,
        epsilon,
        gamma,
        rho,
        alpha,
        delta,
        ..
    } = *params;
    let b = params.isolation_rate();
    let s = outflow(params) / (beta * epsilon);
    let e = (mu - mu * s) / (epsilon + mu);
    let i = epsilon / (mu + gamma + b) * e;
    let q = b / (rho * (1.0 - alpha) + delta * alpha + mu) * i;
    let r = (gamma * i + rho * (1.0 - alpha) * q) / mu;
    let d = delta * alpha / mu * q;
    Some(StateVector::new(s, e, i, q, r, d))
}

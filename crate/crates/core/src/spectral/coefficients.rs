use crate::model::ModelParams;

use super::threshold::endemic_equilibrium;

/// Coefficients of the disease-free quasi-polynomial
/// `λ² + d₁λ + d₂ + e^{-λτ}(e₁λ + e₂)` and of the frequency quartic
/// `ω⁴ + f₁ω² + f₂ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfeCoefficients {
    pub d1: f64,
    pub d2: f64,
    pub e1: f64,
    pub e2: f64,
    pub f1: f64,
    pub f2: f64,
}

impl DfeCoefficients {
    pub fn new(params: &ModelParams, beta: f64) -> Self {
        let ModelParams {
            mu, epsilon, gamma, ..
        } = *params;
        let b = params.isolation_rate();
        Self::from_raw(
            2.0 * mu + epsilon + gamma,
            (gamma + mu) * (epsilon + mu) - epsilon * beta,
            b,
            b * (mu + epsilon),
        )
    }

    pub fn from_raw(d1: f64, d2: f64, e1: f64, e2: f64) -> Self {
        Self {
            d1,
            d2,
            e1,
            e2,
            f1: d1 * d1 - 2.0 * d2 - e1 * e1,
            f2: d2 * d2 - e2 * e2,
        }
    }

    pub fn named(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("d1", self.d1),
            ("d2", self.d2),
            ("e1", self.e1),
            ("e2", self.e2),
            ("f1", self.f1),
            ("f2", self.f2),
        ]
    }
}

/// Coefficients of the endemic quasi-polynomial
/// `λ³ + a₁λ² + a₂λ + a₃ + e^{-λτ}(b₀λ² + b₁λ + b₂)` and of the sextic
/// `ω⁶ + c₁ω⁴ + c₂ω² + c₃ = 0` used by the delay-independent test.
///
/// The `c` family is kept in the form the stability conditions are stated in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndemicCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl EndemicCoefficients {
    /// `None` when the endemic equilibrium does not exist.
    pub fn new(params: &ModelParams, beta: f64) -> Option<Self> {
        let eq = endemic_equilibrium(params, beta)?;
        Some(Self::at_state(params, beta, eq.s, eq.i))
    }

    /// Coefficients of the linearisation about an arbitrary `(S, I)`.
    pub fn at_state(params: &ModelParams, beta: f64, s: f64, i: f64) -> Self {
        let ModelParams {
            mu, epsilon, gamma, ..
        } = *params;
        let b = params.isolation_rate();
        let bi = beta * i;
        let a1 = 3.0 * mu + epsilon + gamma + bi;
        let a2 = (gamma + mu) * (epsilon + mu) + (gamma + epsilon + 2.0 * mu) * (bi + mu)
            - epsilon * beta * s;
        let a3 = (gamma + mu) * (epsilon + mu) * (bi + mu) - beta * epsilon * mu * s;
        let b0 = b;
        let b1 = b * (2.0 * mu + epsilon + bi);
        let b2 = b * (epsilon + mu) * (mu + bi);
        let a3sq = a3 * a3;
        Self {
            a1,
            a2,
            a3,
            b0,
            b1,
            b2,
            c1: a1 * a1 - 2.0 * a2 - a3sq * b0 * b0,
            c2: a2 * a2 + 2.0 * a3sq * b0 * b2 - a3sq * b1 * b1 - 2.0 * a1 * a3,
            c3: a3sq * (1.0 - b2 * b2),
        }
    }

    pub fn named(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("a1", self.a1),
            ("a2", self.a2),
            ("a3", self.a3),
            ("b0", self.b0),
            ("b1", self.b1),
            ("b2", self.b2),
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
        ]
    }
}

/// Delay-independent stability of the quarantine factor
/// `λ + μ + δα + ρ(1-α)e^{-κλ}`: `(μ+δα)² > ρ²(1-α)²`.
pub fn quarantine_branch_stable(params: &ModelParams) -> bool {
    let lhs = (params.mu + params.delta * params.alpha).powi(2);
    let rhs = (params.rho * (1.0 - params.alpha)).powi(2);
    lhs > rhs
}

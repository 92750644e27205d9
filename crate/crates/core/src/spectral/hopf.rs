//! Purely imaginary roots of the disease-free quasi-polynomial and the
//! critical isolation delay at which they appear.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::model::ModelParams;

use super::coefficients::DfeCoefficients;

pub const FIXED_POINT_TOL: f64 = 1e-8;
pub const FIXED_POINT_MAX_ITER: usize = 200;

/// Unique positive root ω* of `ω⁴ + f₁ω² + f₂ = 0`.
///
/// With `f₂ < 0` the quadratic in `u = ω²` has exactly one positive root.
/// When `f₂ ≥ 0` and `f₁ < 0` there may be two; the larger is returned.
pub fn omega_star(c: &DfeCoefficients) -> Option<f64> {
    let (f1, f2) = (c.f1, c.f2);
    let disc = f1 * f1 - 4.0 * f2;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // Larger root of u² + f₁u + f₂, written to avoid cancellation.
    let u = if f1 >= 0.0 {
        if sq + f1 == 0.0 {
            return None;
        }
        -2.0 * f2 / (f1 + sq)
    } else {
        0.5 * (-f1 + sq)
    };
    if u > 0.0 && u.is_finite() {
        // One Newton polish on the quadratic.
        let g = u * u + f1 * u + f2;
        let dg = 2.0 * u + f1;
        let u = if dg != 0.0 { u - g / dg } else { u };
        Some(u.sqrt())
    } else {
        None
    }
}

/// `τ = (1/ω) arccos[((e₂ - d₁e₁)ω² - d₂e₂) / (e₁²ω² + e₂²)] + 2πk/ω` for
/// coefficients held fixed.
fn arccos_delay(c: &DfeCoefficients, omega: f64, branch: u32) -> f64 {
    let w2 = omega * omega;
    let ratio = ((c.e2 - c.d1 * c.e1) * w2 - c.d2 * c.e2) / (c.e1 * c.e1 * w2 + c.e2 * c.e2);
    (ratio.clamp(-1.0, 1.0).acos() + 2.0 * PI * f64::from(branch)) / omega
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalDelay {
    pub tau_star: f64,
    pub omega_star: f64,
    pub iterations: usize,
    /// Coefficients evaluated at `tau_star`.
    pub coefficients: DfeCoefficients,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NoCriticalDelay {
    #[error("d2² ≥ e2² at τ = {tau}: no purely imaginary root, stable for all delays")]
    NoImaginaryRoot { tau: f64 },
    #[error("fixed-point iteration did not settle after {iterations} iterations (last τ = {last_tau}, last change {last_change:e})")]
    Diverged {
        iterations: usize,
        last_tau: f64,
        last_change: f64,
    },
}

/// Smallest self-consistent critical delay.
///
/// `e₁` and `e₂` carry the factor `e^{-γτ}`, so the closed-form arccos
/// expression is iterated `τ_{k+1} = g(τ_k)` from `τ₀ = 0` until successive
/// values agree to [`FIXED_POINT_TOL`].
pub fn critical_delay(params: &ModelParams, beta: f64) -> Result<CriticalDelay, NoCriticalDelay> {
    critical_delay_branch(params, beta, 0)
}

/// Critical delay on the `k`-th arccos branch (`k = 0` is the first crossing).
pub fn critical_delay_branch(
    params: &ModelParams,
    beta: f64,
    branch: u32,
) -> Result<CriticalDelay, NoCriticalDelay> {
    let mut tau = 0.0;
    let mut last_change = f64::INFINITY;
    for iteration in 1..=FIXED_POINT_MAX_ITER {
        let at = ModelParams { tau, ..*params };
        let c = DfeCoefficients::new(&at, beta);
        if c.d2 * c.d2 >= c.e2 * c.e2 {
            return Err(NoCriticalDelay::NoImaginaryRoot { tau });
        }
        let omega = omega_star(&c).ok_or(NoCriticalDelay::NoImaginaryRoot { tau })?;
        let next = arccos_delay(&c, omega, branch);
        if !next.is_finite() {
            break;
        }
        last_change = (next - tau).abs();
        tau = next;
        if last_change < FIXED_POINT_TOL {
            let at = ModelParams { tau, ..*params };
            let c = DfeCoefficients::new(&at, beta);
            if c.d2 * c.d2 >= c.e2 * c.e2 {
                return Err(NoCriticalDelay::NoImaginaryRoot { tau });
            }
            let omega = omega_star(&c).ok_or(NoCriticalDelay::NoImaginaryRoot { tau })?;
            return Ok(CriticalDelay {
                tau_star: tau,
                omega_star: omega,
                iterations: iteration,
                coefficients: c,
            });
        }
    }
    Err(NoCriticalDelay::Diverged {
        iterations: FIXED_POINT_MAX_ITER,
        last_tau: tau,
        last_change,
    })
}

/// The three quotients whose signs decide the crossing direction, and the
/// resulting `x + y > 0 && x + y > z` test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transversality {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub holds: bool,
}

pub fn transversality(
    params: &ModelParams,
    beta: f64,
    omega_star: f64,
    tau_star: f64,
) -> Transversality {
    let c = DfeCoefficients::new(
        &ModelParams {
            tau: tau_star,
            ..*params
        },
        beta,
    );
    let (d1, d2) = (c.d1, c.d2);
    let g = params.gamma;
    let me = params.mu + params.epsilon;
    let w2 = omega_star * omega_star;
    let g2 = g * g;
    let common = (g2 - w2).powi(2) + 4.0 * w2 * g2;
    let x = (d1 * (-g2 + w2) * (d2 - w2) + 2.0 * w2 * d1 * g * (2.0 + d1))
        / (common * ((d2 - w2).powi(2) + d1 * w2));
    let y = ((g2 - w2) * me - 2.0 * w2 * g) / (common * (me * me + w2));
    let z = tau_star * g / (g2 + w2);
    Transversality {
        x,
        y,
        z,
        holds: x + y > 0.0 && x + y > z,
    }
}

/// `Re dλ/dτ` at `λ = iω`, from implicit differentiation of the disease-free
/// quasi-polynomial with its τ-dependent isolation factor.
pub fn crossing_drift(params: &ModelParams, beta: f64, omega: f64, tau: f64) -> f64 {
    let at = ModelParams { tau, ..*params };
    let c = DfeCoefficients::new(&at, beta);
    let b = at.isolation_rate();
    let lam = Complex64::new(0.0, omega);
    let delay = (-lam * tau).exp();
    let lin = lam + at.mu + at.epsilon;
    let p_tau = -b * (lam + at.gamma) * delay * lin;
    let p_lam = 2.0 * lam + c.d1 + b * delay * (1.0 - tau * lin);
    (-p_tau / p_lam).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn no_root_without_sign_change() {
        let c = DfeCoefficients {
            f1: 1.0,
            f2: 0.5,
            ..DfeCoefficients::from_raw(1.0, 1.0, 0.1, 0.1)
        };
        assert!(omega_star(&c).is_none());
    }

    #[test]
    fn unit_frequency() {
        // d₂ = 0, e₂ = 1, d₁ = e₁ so f₁ = 0 and ω⁴ = 1.
        let c = DfeCoefficients::from_raw(0.7, 0.0, 0.7, 1.0);
        assert_eq!(c.f1, 0.0);
        assert!((omega_star(&c).unwrap() - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn omega_star_residual(d1 in 0.0..3.0f64, d2 in -2.0..2.0f64, e1 in 0.0..2.0f64, extra in 0.001..2.0f64) {
            let e2 = d2.abs() + extra;
            let c = DfeCoefficients::from_raw(d1, d2, e1, e2);
            prop_assert!(c.f2 < 0.0);
            let w = omega_star(&c).unwrap();
            let w2 = w * w;
            prop_assert!((w2 * w2 + c.f1 * w2 + c.f2).abs() < 1e-12);
        }
    }

    #[test]
    fn stable_for_all_delays_when_d2_dominates() {
        // Small transmission keeps d₂ > e₂ at every τ ≥ 0.
        let p = ModelParams {
            p: 0.05,
            ..ModelParams::default()
        };
        for tau in [0.0, 10.0, 50.0] {
            let c = DfeCoefficients::new(&ModelParams { tau, ..p }, 0.05);
            assert!(c.d2 * c.d2 > c.e2 * c.e2);
        }
        assert!(matches!(
            critical_delay(&p, 0.05),
            Err(NoCriticalDelay::NoImaginaryRoot { .. })
        ));
    }

    #[test]
    fn z_is_positive() {
        let t = transversality(&ModelParams::default(), 0.5, 0.3, 2.0);
        assert!(t.z > 0.0);
    }
}

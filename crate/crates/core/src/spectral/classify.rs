use std::collections::BTreeMap;
use std::fmt;

use crate::model::ModelParams;

use super::characteristic::Equilibrium;
use super::coefficients::{quarantine_branch_stable, DfeCoefficients, EndemicCoefficients};
use super::hopf::{critical_delay, omega_star, transversality, Transversality};
use super::threshold::{endemic_exists, reproduction_number};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    StableAllDelays,
    StableBelowTauStar,
    Unstable,
    /// The sufficient conditions decide neither way.
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::StableAllDelays => "stable_all_delays",
            Verdict::StableBelowTauStar => "stable_below_tau_star",
            Verdict::Unstable => "unstable",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub equilibrium: Equilibrium,
    pub r0: f64,
    /// Coefficient values in evaluation order.
    pub coefficients: Vec<(String, f64)>,
    pub conditions: BTreeMap<String, bool>,
    pub omega_star: Option<f64>,
    pub tau_star: Option<f64>,
    pub transversality: Option<Transversality>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl StabilityReport {
    pub fn condition(&self, name: &str) -> Option<bool> {
        self.conditions.get(name).copied()
    }
}

fn set(map: &mut BTreeMap<String, bool>, name: &str, value: bool) -> bool {
    map.insert(name.to_string(), value);
    value
}

/// Classifies the disease-free equilibrium.
///
/// Premise: the quarantine branch is delay-independent stable, `f₁ > 0`, and
/// the undelayed system is stable. Then `d₂² > e₂²` gives stability for all
/// delays, while `d₂² < e₂²` with a self-consistent `τ*` and
/// `x + y > 0, x + y > z` gives stability below `τ*`.
pub fn classify_dfe(params: &ModelParams, beta: f64) -> StabilityReport {
    let c = DfeCoefficients::new(params, beta);
    let r0 = reproduction_number(params, beta).unwrap_or(f64::NAN);
    let mut conditions = BTreeMap::new();
    let mut notes = Vec::new();

    let quarantine = set(
        &mut conditions,
        "quarantine_branch",
        quarantine_branch_stable(params),
    );
    let f1_pos = set(&mut conditions, "f1_positive", c.f1 > 0.0);
    let undelayed_q =
        params.mu + params.delta * params.alpha + params.rho * (1.0 - params.alpha) > 0.0;
    let no_delay = set(
        &mut conditions,
        "no_delay_stable",
        params.mu > 0.0 && undelayed_q && c.d1 + c.e1 > 0.0 && c.d2 + c.e2 > 0.0,
    );
    set(&mut conditions, "d2_positive", c.d2 > 0.0);
    set(&mut conditions, "r0_below_one", r0 < 1.0);
    let d2_dominates = set(&mut conditions, "d2sq_gt_e2sq", c.d2 * c.d2 > c.e2 * c.e2);
    let e2_dominates = c.d2 * c.d2 < c.e2 * c.e2;

    let mut omega = None;
    let mut tau_star = None;
    let mut trans = None;
    if e2_dominates {
        omega = omega_star(&c);
        match critical_delay(params, beta) {
            Ok(cd) => {
                omega = Some(cd.omega_star);
                let t = transversality(params, beta, cd.omega_star, cd.tau_star);
                let w2 = cd.omega_star * cd.omega_star;
                set(
                    &mut conditions,
                    "gamma_sq_gt_omega_sq",
                    params.gamma.powi(2) > w2,
                );
                set(&mut conditions, "d2_lt_omega_sq", cd.coefficients.d2 < w2);
                set(&mut conditions, "x_gt_y", t.x > t.y);
                set(&mut conditions, "transversality", t.holds);
                set(
                    &mut conditions,
                    "tau_below_tau_star",
                    params.tau < cd.tau_star,
                );
                tau_star = Some(cd.tau_star);
                trans = Some(t);
            }
            Err(e) => notes.push(format!("critical delay: {e}")),
        }
    }

    let verdict = if !no_delay {
        if c.d2 + c.e2 < 0.0 {
            notes.push("χ(0) < 0: a positive real root exists".into());
            Verdict::Unstable
        } else {
            Verdict::Inconclusive
        }
    } else if !(quarantine && f1_pos) {
        if !quarantine {
            notes.push("(μ+δα)² ≤ ρ²(1-α)²: quarantine branch not delay-independent stable".into());
        }
        Verdict::Inconclusive
    } else if d2_dominates {
        Verdict::StableAllDelays
    } else if trans.is_some_and(|t| t.holds) {
        Verdict::StableBelowTauStar
    } else {
        Verdict::Inconclusive
    };
    if verdict != Verdict::StableBelowTauStar {
        if let Some(t) = tau_star.take() {
            notes.push(format!(
                "self-consistent critical delay τ* = {t} (not used for the verdict)"
            ));
        }
    }

    let mut coefficients: Vec<(String, f64)> = c
        .named()
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    if let Some(t) = trans {
        coefficients.extend([
            ("x".to_string(), t.x),
            ("y".to_string(), t.y),
            ("z".to_string(), t.z),
        ]);
    }

    StabilityReport {
        equilibrium: Equilibrium::DiseaseFree,
        r0,
        coefficients,
        conditions,
        omega_star: omega,
        tau_star,
        transversality: trans,
        verdict,
        notes,
    }
}

/// Classifies the endemic equilibrium; `None` when it does not exist.
///
/// Stable for all delays when the quarantine branch is delay-independent
/// stable and `c₁, c₂, c₃ > 0`; unstable when `c₃ < 0`.
pub fn classify_endemic(params: &ModelParams, beta: f64) -> Option<StabilityReport> {
    if !endemic_exists(params, beta) {
        return None;
    }
    let c = EndemicCoefficients::new(params, beta)?;
    let r0 = reproduction_number(params, beta).unwrap_or(f64::NAN);
    let mut conditions = BTreeMap::new();
    set(&mut conditions, "existence", true);
    let quarantine = set(
        &mut conditions,
        "quarantine_branch",
        quarantine_branch_stable(params),
    );
    set(&mut conditions, "c1_positive", c.c1 > 0.0);
    set(&mut conditions, "c2_positive", c.c2 > 0.0);
    set(&mut conditions, "c3_positive", c.c3 > 0.0);
    let all_c = set(
        &mut conditions,
        "c_all_positive",
        c.c1 > 0.0 && c.c2 > 0.0 && c.c3 > 0.0,
    );
    set(&mut conditions, "a1_plus_b0_positive", c.a1 + c.b0 > 0.0);
    set(&mut conditions, "a2_plus_b1_positive", c.a2 + c.b1 > 0.0);
    set(&mut conditions, "a3_plus_b2_positive", c.a3 + c.b2 > 0.0);

    let verdict = if quarantine && all_c {
        Verdict::StableAllDelays
    } else if c.c3 < 0.0 {
        Verdict::Unstable
    } else {
        Verdict::Inconclusive
    };
    let mut notes = Vec::new();
    if !quarantine {
        notes.push("(μ+δα)² ≤ ρ²(1-α)²: quarantine branch not delay-independent stable".into());
    }
    Some(StabilityReport {
        equilibrium: Equilibrium::Endemic,
        r0,
        coefficients: c
            .named()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        conditions,
        omega_star: None,
        tau_star: None,
        transversality: None,
        verdict,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endemic_report_recomputes_conditions() {
        let p = ModelParams::default();
        let r = classify_endemic(&p, 1.0).unwrap();
        assert_eq!(r.condition("existence"), Some(true));
        let c = EndemicCoefficients::new(&p, 1.0).unwrap();
        assert_eq!(r.condition("c3_positive"), Some(c.c3 > 0.0));
        let lhs = (0.062f64 + 1.0 * 0.0043).powi(2);
        let rhs = (1.0f64 / 14.0 * (1.0 - 0.0043)).powi(2);
        assert_eq!(r.condition("quarantine_branch"), Some(lhs > rhs));
        assert!(classify_endemic(&p, 0.5).is_none());
    }

    #[test]
    fn low_death_probability_is_not_unconditionally_stable() {
        let p = ModelParams {
            alpha: 0.001,
            ..ModelParams::default()
        };
        let r = classify_endemic(&p, 1.0).unwrap();
        assert_eq!(r.condition("quarantine_branch"), Some(false));
        assert_ne!(r.verdict, Verdict::StableAllDelays);
    }

    #[test]
    fn supercritical_dfe_is_unstable() {
        let r = classify_dfe(&ModelParams::default(), 1.0);
        assert_eq!(r.verdict, Verdict::Unstable);
        assert!(r.tau_star.is_none());
    }

    #[test]
    fn tau_star_implies_verdict() {
        for beta in [0.1, 0.3, 0.5, 0.7] {
            for p in [0.2, 0.6, 1.0] {
                let params = ModelParams {
                    p,
                    alpha: 0.05,
                    ..ModelParams::default()
                };
                let r = classify_dfe(&params, beta);
                if r.tau_star.is_some() {
                    assert!(r.omega_star.is_some());
                    assert_eq!(r.verdict, Verdict::StableBelowTauStar);
                }
            }
        }
    }
}

//! Six-compartment SEIQRD model with an isolation delay on `I` and a
//! quarantine delay on `Q`:
//!
//! ```text
//! S' = Ω - β S I - μ S
//! E' = β S I - (ε + μ) E
//! I' = ε E - γ I - p e^{-γτ} I(t-τ) - μ I
//! Q' = p e^{-γτ} I(t-τ) - ρ(1-α) Q(t-κ) - δα Q - μ Q
//! R' = γ I + ρ(1-α) Q(t-κ) - μ R
//! D' = δα Q - μ D
//! ```

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::dde::{self, ConstantHistory, DdeError, DelayedVectorField, Trajectory};

pub const DEFAULT_STEP: f64 = 0.01;
pub const DEFAULT_HORIZON: f64 = 500.0;

/// Linear transmission law `β(T) = β₀ + β₁ T`.
pub const LINEAR_BETA0: f64 = 0.84;
pub const LINEAR_BETA1: f64 = -0.00425;
/// Quadratic transmission law `β(T) = β₀ - β₁ (T - T_M)²`.
pub const QUADRATIC_BETA0: f64 = 0.792;
pub const QUADRATIC_BETA1: f64 = 0.000345;
pub const QUADRATIC_PEAK: f64 = 7.73;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),
    #[error(transparent)]
    Integration(#[from] DdeError),
}

/// Compartment identifiers, in state-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Compartment {
    S,
    E,
    I,
    Q,
    R,
    D,
}

impl Compartment {
    pub const ALL: [Compartment; 6] = [
        Compartment::S,
        Compartment::E,
        Compartment::I,
        Compartment::Q,
        Compartment::R,
        Compartment::D,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Compartment::S => "S",
            Compartment::E => "E",
            Compartment::I => "I",
            Compartment::Q => "Q",
            Compartment::R => "R",
            Compartment::D => "D",
        }
    }
}

impl fmt::Display for Compartment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Population fractions in each compartment.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateVector {
    pub s: f64,
    pub e: f64,
    pub i: f64,
    pub q: f64,
    pub r: f64,
    pub d: f64,
}

impl StateVector {
    pub const fn new(s: f64, e: f64, i: f64, q: f64, r: f64, d: f64) -> Self {
        Self { s, e, i, q, r, d }
    }

    /// The seeded outbreak `(0.999, 0, 0.001, 0, 0, 0)`.
    pub const fn initial_outbreak() -> Self {
        Self::new(0.999, 0.0, 0.001, 0.0, 0.0, 0.0)
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.s, self.e, self.i, self.q, self.r, self.d]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn get(&self, c: Compartment) -> f64 {
        self.to_array()[c.index()]
    }

    pub fn total(&self) -> f64 {
        self.to_array().iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaKind {
    Linear,
    Quadratic,
    Fixed,
}

impl BetaKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BetaKind::Linear => "linear",
            BetaKind::Quadratic => "quadratic",
            BetaKind::Fixed => "fixed",
        }
    }
}

impl FromStr for BetaKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(BetaKind::Linear),
            "quadratic" => Ok(BetaKind::Quadratic),
            "fixed" => Ok(BetaKind::Fixed),
            other => Err(format!(
                "unknown beta kind `{other}` (expected linear, quadratic or fixed)"
            )),
        }
    }
}

/// Transmission rate as a function of ambient temperature (°C).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TempBetaModel {
    Linear { beta0: f64, beta1: f64 },
    Quadratic { beta0: f64, beta1: f64, t_m: f64 },
    Fixed(f64),
}

/// Evaluated transmission rate. `clamped` is set when the raw law went negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaValue {
    pub value: f64,
    pub raw: f64,
    pub clamped: bool,
}

impl TempBetaModel {
    pub const fn linear() -> Self {
        TempBetaModel::Linear {
            beta0: LINEAR_BETA0,
            beta1: LINEAR_BETA1,
        }
    }

    pub const fn quadratic() -> Self {
        TempBetaModel::Quadratic {
            beta0: QUADRATIC_BETA0,
            beta1: QUADRATIC_BETA1,
            t_m: QUADRATIC_PEAK,
        }
    }

    pub fn kind(&self) -> BetaKind {
        match self {
            TempBetaModel::Linear { .. } => BetaKind::Linear,
            TempBetaModel::Quadratic { .. } => BetaKind::Quadratic,
            TempBetaModel::Fixed(_) => BetaKind::Fixed,
        }
    }

    pub fn eval(&self, temperature: f64) -> BetaValue {
        let raw = match *self {
            TempBetaModel::Linear { beta0, beta1 } => beta0 + beta1 * temperature,
            TempBetaModel::Quadratic { beta0, beta1, t_m } => {
                beta0 - beta1 * (temperature - t_m).powi(2)
            }
            TempBetaModel::Fixed(value) => value,
        };
        if raw < 0.0 {
            log::warn!("transmission rate {raw} at T = {temperature} clamped to 0");
            BetaValue {
                value: 0.0,
                raw,
                clamped: true,
            }
        } else {
            BetaValue {
                value: raw,
                raw,
                clamped: false,
            }
        }
    }
}

/// `β(T)` clamped at zero from below.
pub fn beta_at(model: &TempBetaModel, temperature: f64) -> f64 {
    model.eval(temperature).value
}

/// Rate constants, probabilities and delays of one model instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Birth rate Ω.
    pub omega: f64,
    /// Natural death rate μ.
    pub mu: f64,
    /// Exposed-to-infectious rate ε.
    pub epsilon: f64,
    /// Recovery rate of undetected infectives γ.
    pub gamma: f64,
    /// Detection (isolation) probability.
    pub p: f64,
    /// Isolation delay τ in days.
    pub tau: f64,
    /// Quarantine duration κ in days.
    pub kappa: f64,
    /// Quarantine exit rate ρ.
    pub rho: f64,
    /// Death probability α.
    pub alpha: f64,
    /// Death rate scale δ.
    pub delta: f64,
    pub beta: TempBetaModel,
    /// Permits probabilities outside `[0, 1]`, as used by wide sensitivity scans.
    pub exploratory: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        let mu = 0.062;
        Self {
            omega: mu,
            mu,
            epsilon: 0.1961,
            gamma: 1.0 / 7.0,
            p: 0.4,
            tau: 4.0,
            kappa: 14.0,
            rho: 1.0 / 14.0,
            alpha: 0.0043,
            delta: 1.0,
            beta: TempBetaModel::linear(),
            exploratory: false,
        }
    }
}

impl ModelParams {
    pub fn with_fixed_beta(beta: f64) -> Self {
        Self {
            beta: TempBetaModel::Fixed(beta),
            ..Self::default()
        }
    }

    /// Effective removal factor `p e^{-γτ}` applied to `I(t-τ)`.
    pub fn isolation_rate(&self) -> f64 {
        self.p * (-self.gamma * self.tau).exp()
    }

    /// Sets μ and keeps Ω tied to it, the model's standing assumption.
    pub fn set_mu(&mut self, mu: f64) {
        self.mu = mu;
        self.omega = mu;
    }

    /// Lists every violated constraint; empty when the set is usable.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let rates = [
            ("Omega", self.omega),
            ("mu", self.mu),
            ("epsilon", self.epsilon),
            ("gamma", self.gamma),
            ("p", self.p),
            ("tau", self.tau),
            ("kappa", self.kappa),
            ("rho", self.rho),
            ("alpha", self.alpha),
            ("delta", self.delta),
        ];
        for (name, v) in rates {
            if !v.is_finite() {
                out.push(format!("{name} must be finite (got {v})"));
            } else if v < 0.0 {
                out.push(format!("{name} must be nonnegative (got {v})"));
            }
        }
        if !self.exploratory {
            for (name, v) in [("p", self.p), ("alpha", self.alpha)] {
                if v > 1.0 {
                    out.push(format!(
                        "{name} = {v} is a probability and must lie in [0, 1] (use exploratory mode to override)"
                    ));
                }
            }
        }
        let beta_params: Vec<(&str, f64)> = match self.beta {
            TempBetaModel::Linear { beta0, beta1 } => {
                vec![("beta.beta0", beta0), ("beta.beta1", beta1)]
            }
            TempBetaModel::Quadratic { beta0, beta1, t_m } => {
                vec![
                    ("beta.beta0", beta0),
                    ("beta.beta1", beta1),
                    ("beta.t_m", t_m),
                ]
            }
            TempBetaModel::Fixed(v) => {
                if v < 0.0 {
                    out.push(format!("beta.value must be nonnegative (got {v})"));
                }
                vec![("beta.value", v)]
            }
        };
        for (name, v) in beta_params {
            if !v.is_finite() {
                out.push(format!("{name} must be finite (got {v})"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ModelError::InvalidParams(v))
        }
    }
}

/// Scalar quantities addressable by name in sweeps, scans and configs.
///
/// `Omega` is the birth rate; setting `mu` moves it along (Ω = μ), setting
/// `Omega` alone breaks that tie. `beta` pins a temperature-free rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parameter {
    Beta,
    Mu,
    BirthRate,
    Epsilon,
    Gamma,
    P,
    Tau,
    Kappa,
    Rho,
    Alpha,
    Delta,
}

impl Parameter {
    pub const ALL: [Parameter; 11] = [
        Parameter::Beta,
        Parameter::Mu,
        Parameter::BirthRate,
        Parameter::Epsilon,
        Parameter::Gamma,
        Parameter::P,
        Parameter::Tau,
        Parameter::Kappa,
        Parameter::Rho,
        Parameter::Alpha,
        Parameter::Delta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Parameter::Beta => "beta",
            Parameter::Mu => "mu",
            Parameter::BirthRate => "Omega",
            Parameter::Epsilon => "epsilon",
            Parameter::Gamma => "gamma",
            Parameter::P => "p",
            Parameter::Tau => "tau",
            Parameter::Kappa => "kappa",
            Parameter::Rho => "rho",
            Parameter::Alpha => "alpha",
            Parameter::Delta => "delta",
        }
    }

    /// Current value; `None` for `beta` unless it is pinned.
    pub fn get(self, params: &ModelParams) -> Option<f64> {
        Some(match self {
            Parameter::Beta => match params.beta {
                TempBetaModel::Fixed(v) => v,
                _ => return None,
            },
            Parameter::Mu => params.mu,
            Parameter::BirthRate => params.omega,
            Parameter::Epsilon => params.epsilon,
            Parameter::Gamma => params.gamma,
            Parameter::P => params.p,
            Parameter::Tau => params.tau,
            Parameter::Kappa => params.kappa,
            Parameter::Rho => params.rho,
            Parameter::Alpha => params.alpha,
            Parameter::Delta => params.delta,
        })
    }

    pub fn set(self, params: &mut ModelParams, value: f64) {
        match self {
            Parameter::Beta => params.beta = TempBetaModel::Fixed(value),
            Parameter::Mu => params.set_mu(value),
            Parameter::BirthRate => params.omega = value,
            Parameter::Epsilon => params.epsilon = value,
            Parameter::Gamma => params.gamma = value,
            Parameter::P => params.p = value,
            Parameter::Tau => params.tau = value,
            Parameter::Kappa => params.kappa = value,
            Parameter::Rho => params.rho = value,
            Parameter::Alpha => params.alpha = value,
            Parameter::Delta => params.delta = value,
        }
    }

    pub fn with(self, params: &ModelParams, value: f64) -> ModelParams {
        let mut out = *params;
        self.set(&mut out, value);
        out
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Parameter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(p) = Parameter::ALL.into_iter().find(|p| p.as_str() == s) {
            return Ok(p);
        }
        Err(match s {
            "omega" => {
                "`omega` is not a parameter of the model (the birth rate is `Omega`)".to_string()
            }
            other => {
                let names: Vec<&str> = Parameter::ALL.iter().map(|p| p.as_str()).collect();
                format!(
                    "unknown parameter `{other}` (expected one of {})",
                    names.join(", ")
                )
            }
        })
    }
}

/// Right-hand side of the model for an already evaluated transmission rate.
pub fn rhs_with_beta(
    x: &StateVector,
    i_lag: f64,
    q_lag: f64,
    params: &ModelParams,
    beta: f64,
) -> [f64; 6] {
    let ModelParams {
        omega,
        mu,
        epsilon,
        gamma,
        rho,
        alpha,
        delta,
        ..
    } = *params;
    let infection = beta * x.s * x.i;
    let isolation = params.isolation_rate() * i_lag;
    let release = rho * (1.0 - alpha) * q_lag;
    let death = delta * alpha * x.q;
    [
        omega - infection - mu * x.s,
        infection - (epsilon + mu) * x.e,
        epsilon * x.e - gamma * x.i - isolation - mu * x.i,
        isolation - release - death - mu * x.q,
        gamma * x.i + release - mu * x.r,
        death - mu * x.d,
    ]
}

/// Right-hand side at temperature `temperature`; `i_lag = I(t-τ)`, `q_lag = Q(t-κ)`.
pub fn rhs(
    _t: f64,
    x: &StateVector,
    i_lag: f64,
    q_lag: f64,
    params: &ModelParams,
    temperature: f64,
) -> [f64; 6] {
    rhs_with_beta(x, i_lag, q_lag, params, beta_at(&params.beta, temperature))
}

/// The model as a [`DelayedVectorField`] with lags `[τ, κ]`.
#[derive(Debug, Clone)]
pub struct SeiqrdField {
    params: ModelParams,
    beta: f64,
    lags: [f64; 2],
}

impl SeiqrdField {
    pub fn new(params: ModelParams, beta: f64) -> Self {
        Self {
            lags: [params.tau, params.kappa],
            params,
            beta,
        }
    }
}

impl DelayedVectorField for SeiqrdField {
    fn dimension(&self) -> usize {
        6
    }

    fn lags(&self) -> &[f64] {
        &self.lags
    }

    fn eval(&self, _t: f64, state: &[f64], delayed: &[Vec<f64>], out: &mut [f64]) {
        let x = StateVector::from_slice(state);
        let d = rhs_with_beta(
            &x,
            delayed[0][Compartment::I.index()],
            delayed[1][Compartment::Q.index()],
            &self.params,
            self.beta,
        );
        out.copy_from_slice(&d);
    }
}

/// A model run: trajectory plus the transmission rate that drove it.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub trajectory: Trajectory,
    pub beta: BetaValue,
    pub temperature: f64,
}

impl Simulation {
    pub fn state_at(&self, t: f64) -> Result<StateVector, DdeError> {
        Ok(StateVector::from_slice(&self.trajectory.interpolate(t)?))
    }

    pub fn final_state(&self) -> StateVector {
        StateVector::from_slice(self.trajectory.last_state())
    }

    pub fn time_average(&self, c: Compartment, window: (f64, f64)) -> Result<f64, DdeError> {
        time_average(&self.trajectory, c, window)
    }
}

/// Integrates the model on `[0, horizon]` with constant history `init` for `t ≤ 0`.
pub fn simulate(
    params: &ModelParams,
    temperature: f64,
    horizon: f64,
    step: f64,
    init: StateVector,
) -> Result<Simulation, ModelError> {
    match simulate_prefix(params, temperature, horizon, step, init)? {
        (sim, None) => Ok(sim),
        (_, Some(err)) => Err(err.into()),
    }
}

/// [`simulate`] that keeps the finite part of a run whose solution blows up.
///
/// The model is not positivity preserving: the delayed isolation outflow can
/// push `I` below zero, after which the bilinear term grows without bound.
pub fn simulate_prefix(
    params: &ModelParams,
    temperature: f64,
    horizon: f64,
    step: f64,
    init: StateVector,
) -> Result<(Simulation, Option<DdeError>), ModelError> {
    simulate_with(
        params,
        temperature,
        horizon,
        step,
        init,
        HistoryMode::Constant,
    )
}

/// State assumed for `t < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HistoryMode {
    /// The initial state has held forever.
    #[default]
    Constant,
    /// The infection arrives at `t = 0`: `I` and `Q` are empty before it,
    /// so nothing is isolated or released during the first delay interval.
    Seeded,
}

impl HistoryMode {
    pub fn as_str(self) -> &'static str {
        match self {
            HistoryMode::Constant => "constant",
            HistoryMode::Seeded => "seeded",
        }
    }
}

impl FromStr for HistoryMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constant" => Ok(HistoryMode::Constant),
            "seeded" => Ok(HistoryMode::Seeded),
            other => Err(format!(
                "unknown history `{other}` (expected constant or seeded)"
            )),
        }
    }
}

/// [`simulate_prefix`] with an explicit pre-history.
pub fn simulate_with(
    params: &ModelParams,
    temperature: f64,
    horizon: f64,
    step: f64,
    init: StateVector,
    history: HistoryMode,
) -> Result<(Simulation, Option<DdeError>), ModelError> {
    params.validate()?;
    let beta = params.beta.eval(temperature);
    let field = SeiqrdField::new(*params, beta.value);
    let start = init.to_array();
    let (trajectory, breakdown) = match history {
        HistoryMode::Constant => {
            dde::integrate_prefix(&field, &ConstantHistory(start.to_vec()), 0.0, horizon, step)?
        }
        HistoryMode::Seeded => {
            let before = StateVector {
                i: 0.0,
                q: 0.0,
                ..init
            }
            .to_array();
            let seeded = move |t: f64, out: &mut [f64]| {
                out.copy_from_slice(if t < 0.0 { &before } else { &start });
            };
            dde::integrate_prefix(&field, &seeded, 0.0, horizon, step)?
        }
    };
    let sim = Simulation {
        trajectory,
        beta,
        temperature,
    };
    Ok((sim, breakdown))
}

/// Trapezoidal mean of one compartment over `window` on the stored grid.
///
/// Window ends that fall between grid points are handled with the Hermite
/// interpolant so the partial end intervals are included.
pub fn time_average(
    traj: &Trajectory,
    c: Compartment,
    window: (f64, f64),
) -> Result<f64, DdeError> {
    let (ta, tb) = window;
    if !(ta < tb) {
        return Err(DdeError::InvalidSpan { t0: ta, t_end: tb });
    }
    let idx = c.index();
    let value = |t: f64| -> Result<f64, DdeError> { Ok(traj.interpolate(t)?[idx]) };
    let va = value(ta)?;
    let vb = value(tb)?;
    let h = traj.step();
    let t0 = traj.t0();
    // First grid point strictly after ta and last strictly before tb.
    let snap = 1e-9;
    let first = (((ta - t0) / h) + snap).floor() as usize + 1;
    let last_f = ((tb - t0) / h - snap).ceil();
    let last = if last_f < 1.0 { 0 } else { last_f as usize - 1 };
    let mut integral = 0.0;
    if first > last {
        integral = 0.5 * (va + vb) * (tb - ta);
    } else {
        let y_first = traj.state(first)[idx];
        integral += 0.5 * (va + y_first) * (traj.time(first) - ta);
        let mut prev = y_first;
        for k in first + 1..=last {
            let y = traj.state(k)[idx];
            integral += 0.5 * (prev + y) * h;
            prev = y;
        }
        integral += 0.5 * (prev + vb) * (tb - traj.time(last));
    }
    Ok(integral / (tb - ta))
}

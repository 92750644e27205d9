use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use crate::experiments::{
    Execution, Grid, OmegaTarget, ScanOptions, SweepOptions, BIFURCATION_HORIZON, BIFURCATION_TAIL,
    DEFAULT_THRESHOLD,
};
use crate::model::{
    BetaKind, BetaValue, HistoryMode, ModelParams, Parameter, StateVector, TempBetaModel,
    DEFAULT_HORIZON, DEFAULT_STEP, LINEAR_BETA0, LINEAR_BETA1, QUADRATIC_BETA0, QUADRATIC_BETA1,
    QUADRATIC_PEAK,
};

const MODEL_KEYS: [&str; 10] = [
    "Omega", "mu", "epsilon", "gamma", "p", "tau", "kappa", "rho", "alpha", "delta",
];

const OTHER_KEYS: [&str; 26] = [
    "beta",
    "beta.kind",
    "beta.beta0",
    "beta.beta1",
    "beta.t_m",
    "beta.value",
    "temperature",
    "init",
    "step",
    "horizon",
    "tail_window",
    "history",
    "exploratory",
    "out",
    "grid.temperature",
    "grid.p",
    "grid.tau",
    "grid.bifurcation",
    "bifurcation.horizon",
    "bifurcation.tail",
    "sensitivity.parameter",
    "sensitivity.interval",
    "sensitivity.step",
    "sensitivity.threshold",
    "sensitivity.sample_every",
    "sensitivity.omega_target",
];

fn is_known(key: &str) -> bool {
    MODEL_KEYS.contains(&key) || OTHER_KEYS.contains(&key)
}

/// Grids of the sweep subcommands. An unset bifurcation grid is placed
/// around the critical delay at run time.
#[derive(Debug, Clone, PartialEq)]
pub struct Grids {
    pub temperature: Grid,
    pub p: Grid,
    pub tau: Grid,
    pub bifurcation: Option<Grid>,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            temperature: Grid::new(-10.0, 40.0, 5.0).unwrap(),
            p: Grid::new(0.0, 1.0, 0.1).unwrap(),
            tau: Grid::new(0.0, 10.0, 1.0).unwrap(),
            bifurcation: None,
        }
    }
}

/// With no parameter set, the sensitivity command runs the reference table.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityConfig {
    pub parameter: Option<String>,
    pub interval: Option<(f64, f64)>,
    pub step: f64,
    pub threshold: f64,
    pub sample_every: usize,
    pub omega_target: OmegaTarget,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            parameter: None,
            interval: None,
            step: 0.01,
            threshold: DEFAULT_THRESHOLD,
            sample_every: 10,
            omega_target: OmegaTarget::Rho,
        }
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    /// Ambient temperature (°C) fed to the transmission law.
    pub temperature: f64,
    pub init: StateVector,
    pub step: f64,
    pub horizon: f64,
    pub tail_window: f64,
    pub history: HistoryMode,
    pub grids: Grids,
    pub bifurcation_horizon: f64,
    pub bifurcation_tail: f64,
    pub sensitivity: SensitivityConfig,
    pub out: Option<PathBuf>,
    pub exploratory: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ModelParams::default(),
            temperature: 0.0,
            init: StateVector::initial_outbreak(),
            step: DEFAULT_STEP,
            horizon: DEFAULT_HORIZON,
            tail_window: 1.0,
            history: HistoryMode::Constant,
            grids: Grids::default(),
            bifurcation_horizon: BIFURCATION_HORIZON,
            bifurcation_tail: BIFURCATION_TAIL,
            sensitivity: SensitivityConfig::default(),
            out: None,
            exploratory: false,
        }
    }
}

impl RunConfig {
    pub fn beta(&self) -> BetaValue {
        self.params.beta.eval(self.temperature)
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            horizon: self.horizon,
            step: self.step,
            tail_window: self.tail_window,
            temperature: self.temperature,
            init: self.init,
            history: self.history,
            execution: Execution::Parallel,
        }
    }

    pub fn bifurcation_options(&self) -> SweepOptions {
        SweepOptions {
            horizon: self.bifurcation_horizon,
            tail_window: self.bifurcation_tail,
            ..self.sweep_options()
        }
    }

    pub fn scan_options(&self) -> ScanOptions {
        ScanOptions {
            step: self.sensitivity.step,
            threshold: self.sensitivity.threshold,
            horizon: self.horizon,
            dt: self.step,
            sample_every: self.sensitivity.sample_every,
            temperature: self.temperature,
            init: self.init,
            history: self.history,
            exploratory: self.exploratory,
            omega_target: self.sensitivity.omega_target,
            execution: Execution::Parallel,
        }
    }

    /// Every setting as `key = value`; parsing the text gives back `self`.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let p = &self.params;
        for (k, v) in [
            ("mu", p.mu),
            ("Omega", p.omega),
            ("epsilon", p.epsilon),
            ("gamma", p.gamma),
            ("p", p.p),
            ("tau", p.tau),
            ("kappa", p.kappa),
            ("rho", p.rho),
            ("alpha", p.alpha),
            ("delta", p.delta),
        ] {
            put(k, format!("{v:?}"));
        }
        put("beta.kind", p.beta.kind().as_str().into());
        match p.beta {
            TempBetaModel::Linear { beta0, beta1 } => {
                put("beta.beta0", format!("{beta0:?}"));
                put("beta.beta1", format!("{beta1:?}"));
            }
            TempBetaModel::Quadratic { beta0, beta1, t_m } => {
                put("beta.beta0", format!("{beta0:?}"));
                put("beta.beta1", format!("{beta1:?}"));
                put("beta.t_m", format!("{t_m:?}"));
            }
            TempBetaModel::Fixed(v) => put("beta.value", format!("{v:?}")),
        }
        put("temperature", format!("{:?}", self.temperature));
        let init: Vec<String> = self
            .init
            .to_array()
            .iter()
            .map(|v| format!("{v:?}"))
            .collect();
        put("init", init.join(", "));
        put("step", format!("{:?}", self.step));
        put("horizon", format!("{:?}", self.horizon));
        put("tail_window", format!("{:?}", self.tail_window));
        put("history", self.history.as_str().into());
        put("grid.temperature", self.grids.temperature.to_string());
        put("grid.p", self.grids.p.to_string());
        put("grid.tau", self.grids.tau.to_string());
        if let Some(g) = self.grids.bifurcation {
            put("grid.bifurcation", g.to_string());
        }
        put(
            "bifurcation.horizon",
            format!("{:?}", self.bifurcation_horizon),
        );
        put("bifurcation.tail", format!("{:?}", self.bifurcation_tail));
        let sens = &self.sensitivity;
        if let Some(name) = &sens.parameter {
            put("sensitivity.parameter", name.clone());
        }
        if let Some((a, b)) = sens.interval {
            put("sensitivity.interval", format!("{a:?}:{b:?}"));
        }
        put("sensitivity.step", format!("{:?}", sens.step));
        put("sensitivity.threshold", format!("{:?}", sens.threshold));
        put("sensitivity.sample_every", sens.sample_every.to_string());
        put(
            "sensitivity.omega_target",
            sens.omega_target.as_str().into(),
        );
        if let Some(out) = &self.out {
            put("out", out.display().to_string());
        }
        put("exploratory", self.exploratory.to_string());
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override,
    Default,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Override => f.write_str("--set"),
            Origin::Default => f.write_str("default"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub origin: Origin,
    pub key: String,
    pub message: String,
}

/// Every problem found in one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "invalid configuration ({} problem(s))",
            self.issues.len()
        )?;
        for i in &self.issues {
            if i.key.is_empty() {
                write!(f, "\n  {}: {}", i.origin, i.message)?;
            } else {
                write!(f, "\n  {}: {}: {}", i.origin, i.key, i.message)?;
            }
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

struct Entry {
    origin: Origin,
    value: String,
}

struct Resolver {
    entries: BTreeMap<String, Entry>,
    issues: Vec<ConfigIssue>,
}

/// Accepts decimals and simple fractions such as `1/7`.
fn parse_number(text: &str) -> Result<f64, String> {
    let value = match text.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n
                .trim()
                .parse()
                .map_err(|_| format!("`{text}` is not a number"))?;
            let d: f64 = d
                .trim()
                .parse()
                .map_err(|_| format!("`{text}` is not a number"))?;
            if d == 0.0 {
                return Err(format!("`{text}` divides by zero"));
            }
            n / d
        }
        None => text
            .parse()
            .map_err(|_| format!("`{text}` is not a number"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("`{text}` is not a finite number"))
    }
}

impl Resolver {
    fn origin(&self, key: &str) -> Origin {
        self.entries.get(key).map_or(Origin::Default, |e| e.origin)
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn issue(&mut self, key: &str, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            origin: self.origin(key),
            key: key.to_string(),
            message: message.into(),
        });
    }

    fn raw(&self, key: &str) -> Option<String> {
        self.entries.get(key).map(|e| e.value.clone())
    }

    fn parsed<T>(&mut self, key: &str, parse: impl FnOnce(&str) -> Result<T, String>) -> Option<T> {
        let raw = self.raw(key)?;
        match parse(&raw) {
            Ok(v) => Some(v),
            Err(msg) => {
                self.issue(key, msg);
                None
            }
        }
    }

    fn num(&mut self, key: &str) -> Option<f64> {
        self.parsed(key, parse_number)
    }

    fn num_or(&mut self, key: &str, default: f64) -> f64 {
        self.num(key).unwrap_or(default)
    }

    fn grid(&mut self, key: &str) -> Option<Grid> {
        self.parsed(key, |s| s.parse::<Grid>().map_err(|e| e.to_string()))
    }

    fn positive(&mut self, key: &str, default: f64) -> f64 {
        let v = self.num_or(key, default);
        if !(v > 0.0) {
            self.issue(key, format!("{key} must be positive (got {v})"));
        }
        v
    }

    fn fraction(&mut self, key: &str, default: f64) -> f64 {
        let v = self.num_or(key, default);
        if !(v > 0.0 && v <= 1.0) {
            self.issue(key, format!("{key} must lie in (0, 1] (got {v})"));
        }
        v
    }

    fn unused(&mut self, key: &str, why: &str) {
        if self.has(key) {
            self.issue(key, why.to_string());
        }
    }

    fn beta(&mut self) -> TempBetaModel {
        if self.has("beta") && self.has("beta.value") {
            self.issue(
                "beta",
                "`beta` and `beta.value` both set the fixed rate; keep one",
            );
        }
        let fixed_value = if self.has("beta") {
            self.num("beta")
        } else {
            self.num("beta.value")
        };
        let fixed_given = self.has("beta") || self.has("beta.value");
        let kind = match self.parsed("beta.kind", |s| s.parse::<BetaKind>()) {
            Some(k) => k,
            None if fixed_given => BetaKind::Fixed,
            None => BetaKind::Linear,
        };
        match kind {
            BetaKind::Fixed => {
                for key in ["beta.beta0", "beta.beta1", "beta.t_m"] {
                    self.unused(key, "not used by a fixed transmission rate");
                }
                if !fixed_given {
                    self.issue("beta.kind", "beta.kind = fixed requires beta.value");
                }
                TempBetaModel::Fixed(fixed_value.unwrap_or(0.0))
            }
            BetaKind::Linear => {
                self.unused("beta.t_m", "only the quadratic law has a peak temperature");
                for key in ["beta", "beta.value"] {
                    self.unused(key, "a fixed rate needs beta.kind = fixed");
                }
                TempBetaModel::Linear {
                    beta0: self.num_or("beta.beta0", LINEAR_BETA0),
                    beta1: self.num_or("beta.beta1", LINEAR_BETA1),
                }
            }
            BetaKind::Quadratic => {
                for key in ["beta", "beta.value"] {
                    self.unused(key, "a fixed rate needs beta.kind = fixed");
                }
                TempBetaModel::Quadratic {
                    beta0: self.num_or("beta.beta0", QUADRATIC_BETA0),
                    beta1: self.num_or("beta.beta1", QUADRATIC_BETA1),
                    t_m: self.num_or("beta.t_m", QUADRATIC_PEAK),
                }
            }
        }
    }

    fn init(&mut self) -> StateVector {
        let parsed = self.parsed("init", |s| {
            let vals: Result<Vec<f64>, String> =
                s.split(',').map(|t| parse_number(t.trim())).collect();
            let vals = vals?;
            if vals.len() != 6 {
                return Err(format!(
                    "init needs 6 values (S, E, I, Q, R, D), got {}",
                    vals.len()
                ));
            }
            if vals.iter().any(|v| *v < 0.0) {
                return Err("init values must be nonnegative".into());
            }
            Ok(StateVector::from_slice(&vals))
        });
        parsed.unwrap_or_else(StateVector::initial_outbreak)
    }

    fn bool(&mut self, key: &str) -> Option<bool> {
        self.parsed(key, |s| match s {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(format!("`{other}` is not true or false")),
        })
    }

    fn sensitivity(&mut self) -> SensitivityConfig {
        let d = SensitivityConfig::default();
        let parameter = self.parsed("sensitivity.parameter", |s| {
            if s == "omega" {
                return Ok(s.to_string());
            }
            s.parse::<Parameter>().map(|p| p.as_str().to_string())
        });
        let interval = self.parsed("sensitivity.interval", |s| {
            let (a, b) = s
                .split_once(':')
                .ok_or_else(|| format!("expected a:b, got `{s}`"))?;
            let (a, b) = (parse_number(a.trim())?, parse_number(b.trim())?);
            if b < a {
                return Err(format!("interval end {b} lies below its start {a}"));
            }
            Ok((a, b))
        });
        if self.has("sensitivity.parameter") != self.has("sensitivity.interval") {
            let key = if self.has("sensitivity.parameter") {
                "sensitivity.parameter"
            } else {
                "sensitivity.interval"
            };
            self.issue(
                key,
                "sensitivity.parameter and sensitivity.interval go together",
            );
        }
        let sample_every = self
            .parsed("sensitivity.sample_every", |s| {
                s.parse::<usize>()
                    .ok()
                    .filter(|n| *n >= 1)
                    .ok_or_else(|| format!("`{s}` is not a positive integer"))
            })
            .unwrap_or(d.sample_every);
        SensitivityConfig {
            parameter,
            interval,
            step: self.positive("sensitivity.step", d.step),
            threshold: self.positive("sensitivity.threshold", d.threshold),
            sample_every,
            omega_target: self
                .parsed("sensitivity.omega_target", |s| s.parse::<OmegaTarget>())
                .unwrap_or(d.omega_target),
        }
    }

    fn resolve(mut self, exploratory_flag: bool) -> Result<RunConfig, ConfigError> {
        let d = RunConfig::default();
        let mut params = ModelParams::default();
        if let Some(mu) = self.num("mu") {
            params.set_mu(mu);
        }
        let fields: [(&str, &mut f64); 9] = [
            ("Omega", &mut params.omega),
            ("epsilon", &mut params.epsilon),
            ("gamma", &mut params.gamma),
            ("p", &mut params.p),
            ("tau", &mut params.tau),
            ("kappa", &mut params.kappa),
            ("rho", &mut params.rho),
            ("alpha", &mut params.alpha),
            ("delta", &mut params.delta),
        ];
        for (key, slot) in fields {
            if let Some(v) = self.num(key) {
                *slot = v;
            }
        }
        params.beta = self.beta();
        let exploratory = self.bool("exploratory").unwrap_or(false) || exploratory_flag;
        params.exploratory = exploratory;
        for v in params.violations() {
            let name = v.split_whitespace().next().unwrap_or("").to_string();
            let key = if name == "beta.value" && self.has("beta") {
                "beta".to_string()
            } else {
                name
            };
            self.issue(&key, v);
        }

        let step = self.positive("step", d.step);
        for (key, lag) in [("tau", params.tau), ("kappa", params.kappa)] {
            if lag > 0.0 && step > lag {
                self.issue(
                    "step",
                    format!("step {step} exceeds the positive delay {key} = {lag}"),
                );
            }
        }
        let horizon = self.positive("horizon", d.horizon);
        let tail_window = self.fraction("tail_window", d.tail_window);
        let bifurcation_horizon = self.positive("bifurcation.horizon", d.bifurcation_horizon);
        let bifurcation_tail = self.fraction("bifurcation.tail", d.bifurcation_tail);
        let grids = Grids {
            temperature: self.grid("grid.temperature").unwrap_or(d.grids.temperature),
            p: self.grid("grid.p").unwrap_or(d.grids.p),
            tau: self.grid("grid.tau").unwrap_or(d.grids.tau),
            bifurcation: self.grid("grid.bifurcation"),
        };
        let out = self.raw("out").map(PathBuf::from);
        let cfg = RunConfig {
            params,
            temperature: self.num_or("temperature", d.temperature),
            init: self.init(),
            step,
            horizon,
            tail_window,
            history: self
                .parsed("history", |s| s.parse::<HistoryMode>())
                .unwrap_or(d.history),
            grids,
            bifurcation_horizon,
            bifurcation_tail,
            sensitivity: self.sensitivity(),
            out,
            exploratory,
        };
        if self.issues.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError {
                issues: self.issues,
            })
        }
    }
}

fn split_entry(line: &str) -> Result<Option<(String, String)>, String> {
    let content = line.split('#').next().unwrap_or("").trim();
    if content.is_empty() {
        return Ok(None);
    }
    let (key, value) = content
        .split_once('=')
        .ok_or_else(|| format!("expected `key = value`, got `{content}`"))?;
    let (key, value) = (key.trim(), value.trim());
    if key.is_empty() {
        return Err(format!("missing key in `{content}`"));
    }
    if value.is_empty() {
        return Err(format!("missing value for `{key}`"));
    }
    Ok(Some((key.to_string(), value.to_string())))
}

fn unknown_key_message(key: &str) -> String {
    if key == "omega" {
        "unknown key `omega`: the model has no such parameter (the birth rate is `Omega`)".into()
    } else {
        format!("unknown key `{key}`")
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with(text, &[], false)
}

/// Parses `key = value` lines, then applies `overrides` (each `key=value`)
/// on top. Every offending line is reported at once.
pub fn parse_config_with(
    text: &str,
    overrides: &[String],
    exploratory: bool,
) -> Result<RunConfig, ConfigError> {
    let mut r = Resolver {
        entries: BTreeMap::new(),
        issues: Vec::new(),
    };
    let add = |r: &mut Resolver, origin: Origin, key: String, value: String| {
        if !is_known(&key) {
            r.issues.push(ConfigIssue {
                origin,
                message: unknown_key_message(&key),
                key,
            });
            return;
        }
        if let (Origin::Line(_), Some(prev)) = (origin, r.entries.get(&key)) {
            r.issues.push(ConfigIssue {
                origin,
                message: format!("duplicate key (first set on {})", prev.origin),
                key,
            });
            return;
        }
        r.entries.insert(key, Entry { origin, value });
    };
    for (n, line) in text.lines().enumerate() {
        let origin = Origin::Line(n + 1);
        match split_entry(line) {
            Ok(Some((k, v))) => add(&mut r, origin, k, v),
            Ok(None) => {}
            Err(message) => r.issues.push(ConfigIssue {
                origin,
                key: String::new(),
                message,
            }),
        }
    }
    for o in overrides {
        match split_entry(o) {
            Ok(Some((k, v))) => add(&mut r, Origin::Override, k, v),
            Ok(None) => {}
            Err(message) => r.issues.push(ConfigIssue {
                origin: Origin::Override,
                key: String::new(),
                message,
            }),
        }
    }
    let syntax = std::mem::take(&mut r.issues);
    match r.resolve(exploratory) {
        Ok(cfg) if syntax.is_empty() => Ok(cfg),
        Ok(_) => Err(ConfigError { issues: syntax }),
        Err(mut e) => {
            let mut all = syntax;
            all.append(&mut e.issues);
            Err(ConfigError { issues: all })
        }
    }
}

use std::fmt;

use rayon::prelude::*;
use twofloat::TwoFloat;

use crate::model::{
    simulate_with, Compartment, HistoryMode, ModelParams, Parameter, StateVector, DEFAULT_HORIZON,
    DEFAULT_STEP,
};

use super::{Execution, ExperimentError, Grid};

/// Verdict threshold on `max_t MSE(t)` for compartment fractions.
pub const DEFAULT_THRESHOLD: f64 = 1e-4;

/// What the name `omega` is scanned as. It is not a symbol of the model, so
/// any choice is an interpretation and is reported as a warning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaTarget {
    Rho,
    BirthRate,
}

impl OmegaTarget {
    fn parameter(self) -> Parameter {
        match self {
            OmegaTarget::Rho => Parameter::Rho,
            OmegaTarget::BirthRate => Parameter::BirthRate,
        }
    }

    pub fn as_str(self) -> &'static str {
        self.parameter().as_str()
    }
}

impl std::str::FromStr for OmegaTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rho" => Ok(OmegaTarget::Rho),
            "Omega" => Ok(OmegaTarget::BirthRate),
            other => Err(format!(
                "unknown omega target `{other}` (expected rho or Omega)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Spacing of the sampled parameter values.
    pub step: f64,
    pub threshold: f64,
    pub horizon: f64,
    /// Integration step.
    pub dt: f64,
    /// Keep every n-th integration point of each trajectory.
    pub sample_every: usize,
    pub temperature: f64,
    pub init: StateVector,
    pub history: HistoryMode,
    /// Allows values outside the epidemiological range and the `omega` mapping.
    pub exploratory: bool,
    pub omega_target: OmegaTarget,
    pub execution: Execution,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            step: 0.01,
            threshold: DEFAULT_THRESHOLD,
            horizon: DEFAULT_HORIZON,
            dt: DEFAULT_STEP,
            sample_every: 10,
            temperature: 0.0,
            init: StateVector::initial_outbreak(),
            history: HistoryMode::Constant,
            exploratory: false,
            omega_target: OmegaTarget::Rho,
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensitivityVerdict {
    Sensitive,
    Insensitive,
}

impl SensitivityVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            SensitivityVerdict::Sensitive => "sensitive",
            SensitivityVerdict::Insensitive => "insensitive",
        }
    }
}

impl fmt::Display for SensitivityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityResult {
    /// Name as requested.
    pub parameter: String,
    /// Model quantity actually varied.
    pub target: Parameter,
    pub interval: (f64, f64),
    pub step: f64,
    pub values: Vec<f64>,
    pub times: Vec<f64>,
    /// `fan[i][j]` is `I(times[j])` for `values[i]`.
    pub fan: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub mse: Vec<f64>,
    pub max_mse: f64,
    pub threshold: f64,
    pub verdict: SensitivityVerdict,
    /// Parameter values whose solution blew up, with the breakdown time.
    /// The fan is cut at the earliest breakdown.
    pub diverged: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

/// Column sums are carried in double-double arithmetic, so the mean and both
/// spread formulas are accurate even when the fan members nearly coincide.
fn column_mean_dd(fan: &[Vec<f64>], j: usize) -> TwoFloat {
    fan.iter().fold(TwoFloat::from(0.0), |acc, f| acc + f[j]) / fan.len() as f64
}

fn column_mean(fan: &[Vec<f64>], j: usize) -> f64 {
    f64::from(column_mean_dd(fan, j))
}

/// `(1/n) Σ (I_i - Ī)²` at each sample time.
pub fn mse_by_definition(fan: &[Vec<f64>]) -> Vec<f64> {
    let m = fan.iter().map(Vec::len).min().unwrap_or(0);
    (0..m)
        .map(|j| {
            let mean = column_mean_dd(fan, j);
            let ss = fan.iter().fold(TwoFloat::from(0.0), |acc, f| {
                let d = TwoFloat::from(f[j]) - mean;
                acc + d * d
            });
            f64::from(ss / fan.len() as f64)
        })
        .collect()
}

/// `E[I²] - Ī²` at each sample time, clamped at zero. Absolute accuracy is
/// about `1e-32 · E[I²]`.
pub fn mse_by_moments(fan: &[Vec<f64>]) -> Vec<f64> {
    let m = fan.iter().map(Vec::len).min().unwrap_or(0);
    (0..m)
        .map(|j| {
            let mean = column_mean_dd(fan, j);
            let second = fan.iter().fold(TwoFloat::from(0.0), |acc, f| {
                acc + TwoFloat::from(f[j]) * f[j]
            }) / fan.len() as f64;
            f64::from(second - mean * mean).max(0.0)
        })
        .collect()
}

fn resolve(
    name: &str,
    opts: &ScanOptions,
    warnings: &mut Vec<String>,
) -> Result<Parameter, ExperimentError> {
    if name == "omega" {
        if !opts.exploratory {
            return Err(ExperimentError::Unmapped(name.into()));
        }
        let target = opts.omega_target.parameter();
        let msg = format!("unmapped parameter `omega` scanned as `{target}`");
        log::warn!("{msg}");
        warnings.push(msg);
        return Ok(target);
    }
    name.parse().map_err(ExperimentError::UnknownParameter)
}

/// Runs the model once per value of `name` on `interval` and measures the
/// spread of the infective trajectories.
pub fn sensitivity_scan(
    name: &str,
    interval: (f64, f64),
    base: &ModelParams,
    opts: &ScanOptions,
) -> Result<SensitivityResult, ExperimentError> {
    let mut warnings = Vec::new();
    let target = resolve(name, opts, &mut warnings)?;
    let grid = if interval.0 == interval.1 {
        Grid::point(interval.0)
    } else {
        Grid::new(interval.0, interval.1, opts.step)?
    };
    if opts.sample_every == 0 {
        return Err(ExperimentError::InvalidSpec(
            "sample_every must be at least 1".into(),
        ));
    }
    let mut base = *base;
    base.exploratory |= opts.exploratory;
    let values = grid.values();
    for &v in [values[0], values[values.len() - 1]].iter() {
        target.with(&base, v).validate()?;
    }

    let idx = Compartment::I.index();
    let run = |v: f64| -> Result<(Vec<f64>, Option<f64>), ExperimentError> {
        let params = target.with(&base, v);
        let (sim, breakdown) = simulate_with(
            &params,
            opts.temperature,
            opts.horizon,
            opts.dt,
            opts.init,
            opts.history,
        )?;
        let traj = &sim.trajectory;
        let samples = (0..traj.len())
            .step_by(opts.sample_every)
            .map(|k| traj.state(k)[idx])
            .collect();
        Ok((samples, breakdown.map(|_| traj.t_end())))
    };
    let runs: Vec<(Vec<f64>, Option<f64>)> = match opts.execution {
        Execution::Serial => values.iter().map(|&v| run(v)).collect::<Result<_, _>>()?,
        Execution::Parallel => values
            .par_iter()
            .map(|&v| run(v))
            .collect::<Result<_, _>>()?,
    };

    let diverged: Vec<(f64, f64)> = values
        .iter()
        .zip(&runs)
        .filter_map(|(&v, (_, t))| t.map(|t| (v, t)))
        .collect();
    let common = runs.iter().map(|(s, _)| s.len()).min().unwrap_or(0);
    if !diverged.is_empty() {
        let msg = format!(
            "{} of {} runs blew up; statistics cover the first {} samples",
            diverged.len(),
            values.len(),
            common
        );
        log::warn!("{name}: {msg}");
        warnings.push(msg);
    }
    let fan: Vec<Vec<f64>> = runs
        .into_iter()
        .map(|(mut s, _)| {
            s.truncate(common);
            s
        })
        .collect();
    let sample_dt = opts.dt * opts.sample_every as f64;
    let times = (0..common).map(|j| j as f64 * sample_dt).collect();
    let mean = (0..common).map(|j| column_mean(&fan, j)).collect();
    let mse = mse_by_definition(&fan);
    let max_mse = mse.iter().copied().fold(0.0, f64::max);
    let verdict = if max_mse > opts.threshold {
        SensitivityVerdict::Sensitive
    } else {
        SensitivityVerdict::Insensitive
    };
    Ok(SensitivityResult {
        parameter: name.to_string(),
        target,
        interval,
        step: opts.step,
        values,
        times,
        fan,
        mean,
        mse,
        max_mse,
        threshold: opts.threshold,
        verdict,
        diverged,
        warnings,
    })
}

/// A scan interval with the verdict reported for it in the reference summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceScan {
    pub parameter: &'static str,
    pub interval: (f64, f64),
    pub expected: SensitivityVerdict,
}

/// The fourteen reference scan intervals and verdicts.
pub fn reference_scans() -> [ReferenceScan; 14] {
    use SensitivityVerdict::{Insensitive as No, Sensitive as Yes};
    let row = |parameter, a, b, expected| ReferenceScan {
        parameter,
        interval: (a, b),
        expected,
    };
    [
        row("mu", 0.0, 0.5, Yes),
        row("mu", 0.5, 2.5, No),
        row("beta", 0.0, 0.5, Yes),
        row("beta", 2.0, 3.0, No),
        row("alpha", 0.0, 1.0, No),
        row("alpha", 2.0, 5.0, No),
        row("gamma", 0.0, 1.0, Yes),
        row("gamma", 1.0, 2.5, No),
        row("epsilon", 0.0, 0.5, Yes),
        row("epsilon", 1.5, 2.5, No),
        row("omega", 0.0, 2.0, Yes),
        row("omega", 2.0, 4.0, Yes),
        row("delta", 0.0, 1.0, No),
        row("delta", 1.0, 2.5, No),
    ]
}

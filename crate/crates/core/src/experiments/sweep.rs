use rayon::prelude::*;

use crate::model::{
    simulate_with, Compartment, HistoryMode, ModelParams, Parameter, StateVector, DEFAULT_HORIZON,
    DEFAULT_STEP,
};
use crate::spectral::reproduction_number;

use super::{ExperimentError, Grid};

pub const BIFURCATION_HORIZON: f64 = 2000.0;
pub const BIFURCATION_TAIL: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Swept {
    /// Ambient temperature fed to the base β(T) law.
    Temperature,
    Parameter(Parameter),
}

impl Swept {
    pub fn label(&self) -> &'static str {
        match self {
            Swept::Temperature => "T",
            Swept::Parameter(p) => p.as_str(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Response {
    R0,
    /// Mean of every compartment over the measurement window.
    TimeAverages,
    /// Min, max and range of `I` over the measurement window.
    TailAmplitude,
}

impl Response {
    pub fn as_str(self) -> &'static str {
        match self {
            Response::R0 => "r0",
            Response::TimeAverages => "time_averages",
            Response::TailAmplitude => "tail_amplitude",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub horizon: f64,
    pub step: f64,
    /// Trailing fraction of the horizon used for averages and amplitudes.
    pub tail_window: f64,
    /// Temperature used whenever it is not the swept quantity.
    pub temperature: f64,
    pub init: StateVector,
    pub history: HistoryMode,
    pub execution: Execution,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            step: DEFAULT_STEP,
            tail_window: 1.0,
            temperature: 0.0,
            init: StateVector::initial_outbreak(),
            history: HistoryMode::Constant,
            execution: Execution::Parallel,
        }
    }
}

impl SweepOptions {
    /// Long horizon and a 25% tail, as used for the delay bifurcation diagram.
    pub fn bifurcation() -> Self {
        Self {
            horizon: BIFURCATION_HORIZON,
            tail_window: BIFURCATION_TAIL,
            ..Self::default()
        }
    }

    /// Measurement window `[horizon·(1 - tail), horizon]`.
    pub fn window(&self) -> (f64, f64) {
        (self.horizon * (1.0 - self.tail_window), self.horizon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub swept: Swept,
    pub grid: Grid,
    pub response: Response,
    pub base: ModelParams,
    pub options: SweepOptions,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let o = &self.options;
        let mut problems = Vec::new();
        if !(self.grid.stop > self.grid.start) {
            problems.push(format!(
                "grid stop {} must exceed start {}",
                self.grid.stop, self.grid.start
            ));
        }
        if !(o.tail_window > 0.0 && o.tail_window <= 1.0) {
            problems.push(format!("tail window {} must lie in (0, 1]", o.tail_window));
        }
        if !(o.horizon > 0.0 && o.horizon.is_finite()) {
            problems.push(format!("horizon {} must be positive", o.horizon));
        }
        if !(o.step > 0.0 && o.step.is_finite()) {
            problems.push(format!("step {} must be positive", o.step));
        }
        if self.response != Response::R0 {
            if let Swept::Parameter(p @ (Parameter::Tau | Parameter::Kappa)) = self.swept {
                if let Some(bad) = self
                    .grid
                    .values()
                    .into_iter()
                    .find(|&v| v > 0.0 && v < o.step)
                {
                    problems.push(format!(
                        "{p} = {bad} is shorter than the integration step {}; refine the step or coarsen the grid",
                        o.step
                    ));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ExperimentError::InvalidSpec(problems.join("; ")))
        }
    }

    fn columns(&self) -> Vec<String> {
        let mut cols = vec![self.swept.label().to_string()];
        if self.swept == Swept::Temperature && self.response != Response::TailAmplitude {
            cols.push("beta".into());
        }
        match self.response {
            Response::R0 => cols.push("R0".into()),
            Response::TimeAverages => cols.extend(
                Compartment::ALL
                    .iter()
                    .map(|c| format!("avg_{}", c.label())),
            ),
            Response::TailAmplitude => {
                cols.extend(["I_min", "I_max", "amplitude"].map(String::from))
            }
        }
        cols
    }

    fn point(&self, x: f64) -> Result<Vec<f64>, String> {
        let mut params = self.base;
        let temperature = match self.swept {
            Swept::Temperature => x,
            Swept::Parameter(p) => {
                p.set(&mut params, x);
                self.options.temperature
            }
        };
        params.validate().map_err(|e| e.to_string())?;
        let beta = params.beta.eval(temperature);
        let mut out = vec![x];
        if self.swept == Swept::Temperature && self.response != Response::TailAmplitude {
            out.push(beta.value);
        }
        let o = &self.options;
        match self.response {
            Response::R0 => {
                out.push(reproduction_number(&params, beta.value).map_err(|e| e.to_string())?)
            }
            Response::TimeAverages | Response::TailAmplitude => {
                let (sim, breakdown) =
                    simulate_with(&params, temperature, o.horizon, o.step, o.init, o.history)
                        .map_err(|e| e.to_string())?;
                if let Some(e) = breakdown {
                    return Err(e.to_string());
                }
                let window = o.window();
                if self.response == Response::TimeAverages {
                    for c in Compartment::ALL {
                        out.push(sim.time_average(c, window).map_err(|e| e.to_string())?);
                    }
                } else {
                    let traj = &sim.trajectory;
                    let first = ((window.0 - traj.t0()) / traj.step() - 1e-9)
                        .ceil()
                        .max(0.0) as usize;
                    let idx = Compartment::I.index();
                    let (lo, hi) = (first..traj.len())
                        .map(|k| traj.state(k)[idx])
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                            (lo.min(v), hi.max(v))
                        });
                    out.extend([lo, hi, hi - lo]);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepMeta {
    pub swept: String,
    pub response: Response,
    pub base: ModelParams,
    pub options: SweepOptions,
}

/// One grid point. Failed points keep their grid value and carry `NaN`
/// responses plus the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub values: Vec<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub meta: SweepMeta,
}

impl SweepTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[j]).collect())
    }

    pub fn grid(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.values[0]).collect()
    }

    pub fn failures(&self) -> impl Iterator<Item = (f64, &str)> {
        self.rows
            .iter()
            .filter_map(|r| r.failure.as_deref().map(|f| (r.values[0], f)))
    }

    pub fn is_complete(&self) -> bool {
        self.rows.iter().all(|r| r.failure.is_none())
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable, ExperimentError> {
    spec.validate()?;
    let columns = spec.columns();
    let width = columns.len();
    let row = |x: f64| match spec.point(x) {
        Ok(values) => SweepRow {
            values,
            failure: None,
        },
        Err(reason) => {
            let mut values = vec![f64::NAN; width];
            values[0] = x;
            SweepRow {
                values,
                failure: Some(reason),
            }
        }
    };
    let grid = spec.grid.values();
    let rows: Vec<SweepRow> = match spec.options.execution {
        Execution::Serial => grid.into_iter().map(row).collect(),
        Execution::Parallel => grid.into_par_iter().map(row).collect(),
    };
    for r in &rows {
        if let Some(reason) = &r.failure {
            log::warn!("{} = {}: {reason}", spec.swept.label(), r.values[0]);
        }
    }
    Ok(SweepTable {
        columns,
        rows,
        meta: SweepMeta {
            swept: spec.swept.label().to_string(),
            response: spec.response,
            base: spec.base,
            options: spec.options,
        },
    })
}

/// Time-averaged compartments against temperature under the base β(T) law.
pub fn temperature_sweep(
    base: &ModelParams,
    grid: Grid,
    options: &SweepOptions,
) -> Result<SweepTable, ExperimentError> {
    if base.beta.kind() == crate::model::BetaKind::Fixed {
        return Err(ExperimentError::InvalidSpec(
            "temperature sweep needs a linear or quadratic beta law".into(),
        ));
    }
    run_sweep(&SweepSpec {
        swept: Swept::Temperature,
        grid,
        response: Response::TimeAverages,
        base: *base,
        options: *options,
    })
}

pub fn isolation_probability_sweep(
    base: &ModelParams,
    grid: Grid,
    options: &SweepOptions,
) -> Result<SweepTable, ExperimentError> {
    run_sweep(&SweepSpec {
        swept: Swept::Parameter(Parameter::P),
        grid,
        response: Response::TimeAverages,
        base: *base,
        options: *options,
    })
}

pub fn isolation_delay_sweep(
    base: &ModelParams,
    grid: Grid,
    options: &SweepOptions,
) -> Result<SweepTable, ExperimentError> {
    run_sweep(&SweepSpec {
        swept: Swept::Parameter(Parameter::Tau),
        grid,
        response: Response::TimeAverages,
        base: *base,
        options: *options,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum R0Axis {
    Temperature,
    P,
    Tau,
}

pub fn r0_sweep(
    base: &ModelParams,
    axis: R0Axis,
    grid: Grid,
    temperature: f64,
) -> Result<SweepTable, ExperimentError> {
    let swept = match axis {
        R0Axis::Temperature => Swept::Temperature,
        R0Axis::P => Swept::Parameter(Parameter::P),
        R0Axis::Tau => Swept::Parameter(Parameter::Tau),
    };
    run_sweep(&SweepSpec {
        swept,
        grid,
        response: Response::R0,
        base: *base,
        options: SweepOptions {
            temperature,
            execution: Execution::Serial,
            ..SweepOptions::default()
        },
    })
}

/// Tail range of `I` against the isolation delay at a pinned transmission rate.
pub fn bifurcation_sweep(
    base: &ModelParams,
    beta: f64,
    grid: Grid,
    options: &SweepOptions,
) -> Result<SweepTable, ExperimentError> {
    run_sweep(&SweepSpec {
        swept: Swept::Parameter(Parameter::Tau),
        grid,
        response: Response::TailAmplitude,
        base: Parameter::Beta.with(base, beta),
        options: *options,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SweepOptions {
        SweepOptions {
            horizon: 60.0,
            step: 0.05,
            ..SweepOptions::default()
        }
    }

    #[test]
    fn r0_against_p_and_tau() {
        let base = ModelParams::default();
        let t = r0_sweep(&base, R0Axis::P, Grid::new(0.0, 1.0, 0.25).unwrap(), 0.0).unwrap();
        assert_eq!(t.columns, ["p", "R0"]);
        let r0 = t.column("R0").unwrap();
        assert!(r0.windows(2).all(|w| w[1] < w[0]));
        let zero_p = ModelParams { p: 0.0, ..base };
        let t = r0_sweep(
            &zero_p,
            R0Axis::Tau,
            Grid::new(0.0, 10.0, 1.0).unwrap(),
            0.0,
        )
        .unwrap();
        let r0 = t.column("R0").unwrap();
        assert!(r0.iter().all(|&v| v == r0[0]));
        let t = r0_sweep(
            &base,
            R0Axis::Temperature,
            Grid::new(-10.0, 40.0, 5.0).unwrap(),
            0.0,
        )
        .unwrap();
        assert_eq!(t.columns, ["T", "beta", "R0"]);
    }

    #[test]
    fn temperature_columns_and_failures() {
        let t = temperature_sweep(
            &ModelParams::default(),
            Grid::new(0.0, 10.0, 5.0).unwrap(),
            &quick(),
        )
        .unwrap();
        assert_eq!(
            t.columns,
            ["T", "beta", "avg_S", "avg_E", "avg_I", "avg_Q", "avg_R", "avg_D"]
        );
        assert_eq!(t.rows.len(), 3);
        assert!(t.is_complete());

        // p > 1 outside exploratory mode is flagged, not dropped.
        let t = isolation_probability_sweep(
            &ModelParams::default(),
            Grid::new(0.5, 1.5, 0.5).unwrap(),
            &quick(),
        )
        .unwrap();
        assert_eq!(t.rows.len(), 3);
        let failed: Vec<f64> = t.failures().map(|(x, _)| x).collect();
        assert_eq!(failed, [1.5]);
        assert!(t.rows[2].values[1..].iter().all(|v| v.is_nan()));
    }

    #[test]
    fn fixed_beta_cannot_sweep_temperature() {
        let base = ModelParams::with_fixed_beta(0.5);
        assert!(temperature_sweep(&base, Grid::new(0.0, 1.0, 1.0).unwrap(), &quick()).is_err());
    }

    #[test]
    fn delay_grid_must_respect_step() {
        let grid = Grid::new(0.0, 0.1, 0.02).unwrap();
        let err = isolation_delay_sweep(&ModelParams::default(), grid, &quick()).unwrap_err();
        assert!(err
            .to_string()
            .contains("shorter than the integration step"));
        // Zero delay is fine: it reads the current state.
        let ok = isolation_delay_sweep(
            &ModelParams::default(),
            Grid::new(0.0, 0.1, 0.05).unwrap(),
            &quick(),
        )
        .unwrap();
        assert!(ok.is_complete());
    }

    #[test]
    fn spec_invariants() {
        let spec = SweepSpec {
            swept: Swept::Temperature,
            grid: Grid::point(1.0),
            response: Response::R0,
            base: ModelParams::default(),
            options: SweepOptions {
                tail_window: 0.0,
                ..SweepOptions::default()
            },
        };
        let msg = spec.validate().unwrap_err().to_string();
        assert!(
            msg.contains("must exceed start") && msg.contains("tail window"),
            "{msg}"
        );
    }

    #[test]
    fn no_quarantine_without_isolation() {
        let t = isolation_probability_sweep(
            &ModelParams::default(),
            Grid::new(0.0, 0.4, 0.4).unwrap(),
            &quick(),
        )
        .unwrap();
        assert_eq!(t.column("avg_Q").unwrap()[0], 0.0);
        assert!(t.column("avg_Q").unwrap()[1] > 0.0);
    }

    #[test]
    fn serial_equals_parallel() {
        let grid = Grid::new(-10.0, 40.0, 10.0).unwrap();
        let par = temperature_sweep(&ModelParams::default(), grid, &quick()).unwrap();
        let ser = temperature_sweep(
            &ModelParams::default(),
            grid,
            &SweepOptions {
                execution: Execution::Serial,
                ..quick()
            },
        )
        .unwrap();
        assert_eq!(par.rows, ser.rows);
    }
}

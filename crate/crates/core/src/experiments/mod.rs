//! Batch studies: parameter sweeps, the delay bifurcation diagram and
//! interval sensitivity scans.
//!
//! Grid points are independent jobs. They run on the current rayon pool
//! (install a sized pool to bound the worker count) and results are always
//! assembled in grid order, so parallel and serial runs agree bit for bit.

mod sensitivity;
mod sweep;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::ModelError;

pub use sensitivity::{
    mse_by_definition, mse_by_moments, reference_scans, sensitivity_scan, OmegaTarget,
    ReferenceScan, ScanOptions, SensitivityResult, SensitivityVerdict, DEFAULT_THRESHOLD,
};
pub use sweep::{
    bifurcation_sweep, isolation_delay_sweep, isolation_probability_sweep, r0_sweep, run_sweep,
    temperature_sweep, Execution, R0Axis, Response, SweepMeta, SweepOptions, SweepRow, SweepSpec,
    SweepTable, Swept, BIFURCATION_HORIZON, BIFURCATION_TAIL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error("{0}")]
    UnknownParameter(String),
    #[error("`{0}` does not appear in the model; scan it only in exploratory mode with an explicit mapping")]
    Unmapped(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Uniform grid `start, start + step, …` up to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    /// `stop == start` gives the one-point grid.
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, ExperimentError> {
        if !(start.is_finite() && stop.is_finite()) {
            return Err(ExperimentError::InvalidGrid(format!(
                "bounds must be finite, got {start}:{stop}"
            )));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(ExperimentError::InvalidGrid(format!(
                "step must be positive, got {step}"
            )));
        }
        if stop < start {
            return Err(ExperimentError::InvalidGrid(format!(
                "stop {stop} lies below start {start}"
            )));
        }
        Ok(Self { start, stop, step })
    }

    pub fn point(x: f64) -> Self {
        Self {
            start: x,
            stop: x,
            step: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid values; a last point within rounding of `stop` is set to `stop`.
    pub fn values(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|k| {
                let v = self.start + k as f64 * self.step;
                if k + 1 == n && (v - self.stop).abs() <= 1e-9 * self.step {
                    self.stop
                } else {
                    v
                }
            })
            .collect()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}:{:?}:{:?}", self.start, self.stop, self.step)
    }
}

/// Parses `start:stop:step`.
impl FromStr for Grid {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(ExperimentError::InvalidGrid(format!(
                "expected start:stop:step, got `{s}`"
            )));
        };
        let num = |t: &str| {
            t.parse::<f64>().map_err(|_| {
                ExperimentError::InvalidGrid(format!("`{t}` is not a number in `{s}`"))
            })
        };
        Grid::new(num(a)?, num(b)?, num(c)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_lengths() {
        assert_eq!(Grid::new(-10.0, 40.0, 5.0).unwrap().len(), 11);
        assert_eq!(Grid::new(0.0, 1.0, 0.1).unwrap().values().len(), 11);
        assert_eq!(Grid::new(0.0, 0.5, 0.01).unwrap().len(), 51);
        assert_eq!(Grid::new(0.5, 2.5, 0.01).unwrap().len(), 201);
        assert_eq!(Grid::point(3.0).values(), vec![3.0]);
        assert_eq!(
            *Grid::new(0.0, 1.0, 0.1).unwrap().values().last().unwrap(),
            1.0
        );
    }

    #[test]
    fn grid_parsing() {
        let g: Grid = "-10:40:5".parse().unwrap();
        assert_eq!(g, Grid::new(-10.0, 40.0, 5.0).unwrap());
        assert_eq!(g.to_string().parse::<Grid>().unwrap(), g);
        assert!("1:0:1".parse::<Grid>().is_err());
        assert!("0:1:0".parse::<Grid>().is_err());
        assert!("0:1".parse::<Grid>().is_err());
        assert!("0:x:1".parse::<Grid>().is_err());
    }
}

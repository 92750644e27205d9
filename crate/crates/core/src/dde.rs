//! Fixed-step integration of delay differential equations with constant lags.
//!
//! The method of steps is carried out with the classical four-stage
//! Runge-Kutta scheme. Every accepted step stores the state and its
//! derivative, so the solution doubles as a piecewise cubic Hermite
//! interpolant; delayed arguments `y(t - lag)` are read from that interpolant
//! once `t - lag >= t0` and from the prescribed history before it.

use thiserror::Error;

/// Relative slack used when snapping a time onto the grid.
const GRID_SNAP: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DdeError {
    #[error("step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("integration span [{t0}, {t_end}] is empty or not finite")]
    InvalidSpan { t0: f64, t_end: f64 },
    #[error("lag #{index} is {lag}; lags must be finite and nonnegative")]
    InvalidLag { index: usize, lag: f64 },
    #[error("step {step} exceeds the smallest positive lag {lag}")]
    StepExceedsLag { step: f64, lag: f64 },
    #[error("history has dimension {got}, field expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite state encountered at t = {time}")]
    NonFinite { time: f64 },
    #[error("t = {t} lies outside the trajectory span [{t0}, {t_end}]")]
    OutOfRange { t: f64, t0: f64, t_end: f64 },
}

/// Right-hand side `y'(t) = f(t, y(t), y(t - lag_1), ..., y(t - lag_m))`.
pub trait DelayedVectorField {
    fn dimension(&self) -> usize;

    /// Constant lags, in the order the delayed states are handed to [`eval`](Self::eval).
    fn lags(&self) -> &[f64];

    /// Writes the derivative into `out`. `delayed[j]` is the state at `t - lags()[j]`.
    fn eval(&self, t: f64, state: &[f64], delayed: &[Vec<f64>], out: &mut [f64]);
}

/// Initial function on `[t0 - max_lag, t0]`.
pub trait History {
    fn eval(&self, t: f64, out: &mut [f64]);
}

/// History that is constant in time, such as the epidemic seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantHistory(pub Vec<f64>);

impl History for ConstantHistory {
    fn eval(&self, _t: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.0);
    }
}

impl<F> History for F
where
    F: Fn(f64, &mut [f64]),
{
    fn eval(&self, t: f64, out: &mut [f64]) {
        self(t, out)
    }
}

/// Solution on a uniform grid together with the derivatives needed for
/// Hermite dense output.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    t0: f64,
    step: f64,
    dim: usize,
    len: usize,
    states: Vec<f64>,
    derivatives: Vec<f64>,
}

/// Number of grid points covering `[t0, t_end]` with spacing `step`.
pub fn grid_len(t0: f64, t_end: f64, step: f64) -> usize {
    ((t_end - t0) / step + GRID_SNAP).floor() as usize + 1
}

impl Trajectory {
    /// Assembles a trajectory from flat row-major arrays (`len * dim` entries each).
    pub fn from_parts(
        t0: f64,
        step: f64,
        dim: usize,
        states: Vec<f64>,
        derivatives: Vec<f64>,
    ) -> Result<Self, DdeError> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(DdeError::InvalidStep(step));
        }
        if dim == 0
            || states.len() % dim != 0
            || states.len() != derivatives.len()
            || states.is_empty()
        {
            return Err(DdeError::DimensionMismatch {
                expected: dim,
                got: states.len(),
            });
        }
        let len = states.len() / dim;
        Ok(Self {
            t0,
            step,
            dim,
            len,
            states,
            derivatives,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len - 1)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.step
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |k| self.time(k))
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn derivative(&self, k: usize) -> &[f64] {
        &self.derivatives[k * self.dim..(k + 1) * self.dim]
    }

    /// Values of one component along the grid.
    pub fn component(&self, index: usize) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().skip(index).step_by(self.dim).copied()
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len - 1)
    }

    /// Keeps the first `len` grid points.
    fn truncate(&mut self, len: usize) {
        self.len = len;
        self.states.truncate(len * self.dim);
        self.derivatives.truncate(len * self.dim);
    }

    /// Cubic Hermite value at `t`; exact at grid points.
    pub fn interpolate(&self, t: f64) -> Result<Vec<f64>, DdeError> {
        let mut out = vec![0.0; self.dim];
        self.interpolate_into(t, &mut out)?;
        Ok(out)
    }

    pub fn interpolate_into(&self, t: f64, out: &mut [f64]) -> Result<(), DdeError> {
        let t_end = self.t_end();
        let slack = GRID_SNAP * self.step;
        if !(t >= self.t0 - slack && t <= t_end + slack) {
            return Err(DdeError::OutOfRange {
                t,
                t0: self.t0,
                t_end,
            });
        }
        hermite_on_grid(self, self.len, t, out);
        Ok(())
    }
}

/// Hermite evaluation using only the first `filled` grid points. Times past
/// the last filled point extrapolate the last completed segment.
fn hermite_on_grid(traj: &Trajectory, filled: usize, t: f64, out: &mut [f64]) {
    let u = (t - traj.t0) / traj.step;
    let nearest = u.round();
    if (u - nearest).abs() <= GRID_SNAP && nearest >= 0.0 && (nearest as usize) < filled {
        out.copy_from_slice(traj.state(nearest as usize));
        return;
    }
    if filled < 2 {
        out.copy_from_slice(traj.state(0));
        return;
    }
    let k = (u.floor().max(0.0) as usize).min(filled - 2);
    let s = u - k as f64;
    let h = traj.step;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let (y0, y1) = (traj.state(k), traj.state(k + 1));
    let (f0, f1) = (traj.derivative(k), traj.derivative(k + 1));
    for i in 0..traj.dim {
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
    }
}

/// Integrates `field` from `t0` to `t_end` with fixed step `step`.
///
/// Zero lags read the current stage state. Positive lags must be at least one
/// step long so every delayed query falls on the already computed part of
/// the solution (or on the history).
pub fn integrate<F, H>(
    field: &F,
    history: &H,
    t0: f64,
    t_end: f64,
    step: f64,
) -> Result<Trajectory, DdeError>
where
    F: DelayedVectorField + ?Sized,
    H: History + ?Sized,
{
    match integrate_prefix(field, history, t0, t_end, step)? {
        (traj, None) => Ok(traj),
        (_, Some(err)) => Err(err),
    }
}

/// Like [`integrate`], but a non-finite state does not discard the work done:
/// the finite prefix of the solution is returned together with the
/// breakdown. Configuration errors are still reported as `Err`.
pub fn integrate_prefix<F, H>(
    field: &F,
    history: &H,
    t0: f64,
    t_end: f64,
    step: f64,
) -> Result<(Trajectory, Option<DdeError>), DdeError>
where
    F: DelayedVectorField + ?Sized,
    H: History + ?Sized,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(DdeError::InvalidStep(step));
    }
    if !(t0.is_finite() && t_end.is_finite() && t_end > t0) {
        return Err(DdeError::InvalidSpan { t0, t_end });
    }
    let lags = field.lags();
    for (index, &lag) in lags.iter().enumerate() {
        if !(lag >= 0.0 && lag.is_finite()) {
            return Err(DdeError::InvalidLag { index, lag });
        }
    }
    if let Some(min_lag) = lags.iter().copied().filter(|&l| l > 0.0).reduce(f64::min) {
        if step > min_lag * (1.0 + GRID_SNAP) {
            return Err(DdeError::StepExceedsLag { step, lag: min_lag });
        }
    }

    let dim = field.dimension();
    let len = grid_len(t0, t_end, step);
    let mut traj = Trajectory {
        t0,
        step,
        dim,
        len,
        states: vec![0.0; len * dim],
        derivatives: vec![0.0; len * dim],
    };

    let mut y = vec![0.0; dim];
    history.eval(t0, &mut y);
    check_finite(&y, t0)?;

    let mut stepper = Stepper::new(dim, lags.len());
    traj.states[..dim].copy_from_slice(&y);
    stepper.derivative(field, history, &traj, 0, t0, &y, 0);
    traj.derivatives[..dim].copy_from_slice(&stepper.k[0]);

    if let Err(e) = check_finite(&stepper.k[0], t0) {
        traj.truncate(1);
        return Ok((traj, Some(e)));
    }

    for n in 0..len - 1 {
        let t = traj.time(n);
        let next = stepper.advance(field, history, &traj, n, t, step, &y);
        y.copy_from_slice(next);
        let t_next = traj.time(n + 1);
        // The derivative at the new grid point is the first stage of the next
        // step; it is also the Hermite slope of the segment just completed.
        let ok = check_finite(&y, t_next).and_then(|()| {
            traj.states[(n + 1) * dim..(n + 2) * dim].copy_from_slice(&y);
            stepper.derivative(field, history, &traj, n, t_next, &y, 0);
            check_finite(&stepper.k[0], t_next)
        });
        if let Err(e) = ok {
            traj.truncate(n + 1);
            return Ok((traj, Some(e)));
        }
        traj.derivatives[(n + 1) * dim..(n + 2) * dim].copy_from_slice(&stepper.k[0]);
    }
    Ok((traj, None))
}

fn check_finite(v: &[f64], time: f64) -> Result<(), DdeError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(DdeError::NonFinite { time })
    }
}

/// Scratch buffers for one RK4 step.
struct Stepper {
    k: [Vec<f64>; 4],
    stage: Vec<f64>,
    delayed: Vec<Vec<f64>>,
    out: Vec<f64>,
}

impl Stepper {
    fn new(dim: usize, n_lags: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            stage: vec![0.0; dim],
            delayed: vec![vec![0.0; dim]; n_lags],
            out: vec![0.0; dim],
        }
    }

    /// Fills `self.k[slot]` with the field evaluated at `(t, state)`. Delayed
    /// lookups only use grid points `0..=last`.
    #[allow(clippy::too_many_arguments)]
    fn derivative<F, H>(
        &mut self,
        field: &F,
        history: &H,
        traj: &Trajectory,
        last: usize,
        t: f64,
        state: &[f64],
        slot: usize,
    ) where
        F: DelayedVectorField + ?Sized,
        H: History + ?Sized,
    {
        for (buf, &lag) in self.delayed.iter_mut().zip(field.lags()) {
            if lag == 0.0 {
                buf.copy_from_slice(state);
                continue;
            }
            let tq = t - lag;
            if tq < traj.t0 {
                history.eval(tq, buf);
            } else {
                hermite_on_grid(traj, last + 1, tq, buf);
            }
        }
        field.eval(t, state, &self.delayed, &mut self.k[slot]);
    }

    /// One classical RK4 step from grid point `n`. Assumes `self.k[0]` already
    /// holds the derivative at `(t, y)`.
    #[allow(clippy::too_many_arguments)]
    fn advance<F, H>(
        &mut self,
        field: &F,
        history: &H,
        traj: &Trajectory,
        n: usize,
        t: f64,
        h: f64,
        y: &[f64],
    ) -> &[f64]
    where
        F: DelayedVectorField + ?Sized,
        H: History + ?Sized,
    {
        let dim = y.len();
        let half = 0.5 * h;
        for (slot, (dt, weight)) in [(half, half), (half, half), (h, h)].into_iter().enumerate() {
            let prev = &self.k[slot];
            for i in 0..dim {
                self.stage[i] = y[i] + weight * prev[i];
            }
            let stage = std::mem::take(&mut self.stage);
            self.derivative(field, history, traj, n, t + dt, &stage, slot + 1);
            self.stage = stage;
        }
        let sixth = h / 6.0;
        for i in 0..dim {
            self.out[i] = y[i]
                + sixth * (self.k[0][i] + 2.0 * self.k[1][i] + 2.0 * self.k[2][i] + self.k[3][i]);
        }
        &self.out
    }
}

/// `y'(t) = -y(t - 1)` with `y = 1` on `[-1, 0]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitLagDecay;

impl DelayedVectorField for UnitLagDecay {
    fn dimension(&self) -> usize {
        1
    }
    fn lags(&self) -> &[f64] {
        &[1.0]
    }
    fn eval(&self, _t: f64, _state: &[f64], delayed: &[Vec<f64>], out: &mut [f64]) {
        out[0] = -delayed[0][0];
    }
}

/// Exact solution of [`UnitLagDecay`]: `Σ_k (-1)^k (t - k + 1)^k / k!` over
/// the terms with `t ≥ k - 1`.
pub fn unit_lag_decay_exact(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let mut sum = 1.0;
    let mut term_scale = 1.0;
    let mut k = 1;
    while t >= (k - 1) as f64 {
        term_scale *= -1.0 / k as f64;
        sum += term_scale * (t - (k - 1) as f64).powi(k);
        k += 1;
    }
    sum
}

/// One solver self-check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    /// `value >= limit` passes instead of `value < limit`.
    pub at_least: bool,
}

impl Check {
    pub fn passed(&self) -> bool {
        if self.at_least {
            self.value >= self.limit
        } else {
            self.value < self.limit
        }
    }
}

/// Largest deviation from the exact solution over `[0, 4]`, sampled off the
/// step grid so the dense output is exercised too.
pub fn unit_lag_max_error(step: f64) -> Result<f64, DdeError> {
    let traj = integrate(&UnitLagDecay, &ConstantHistory(vec![1.0]), 0.0, 4.0, step)?;
    let n = 3989;
    let mut worst = 0.0f64;
    for j in 0..=n {
        let t = 4.0 * j as f64 / n as f64;
        let y = traj.interpolate(t)?[0];
        worst = worst.max((y - unit_lag_decay_exact(t)).abs());
    }
    Ok(worst)
}

/// Nodal accuracy at step 0.01 and the error ratio under step halving.
pub fn validation_suite() -> Result<Vec<Check>, DdeError> {
    let traj = integrate(&UnitLagDecay, &ConstantHistory(vec![1.0]), 0.0, 4.0, 0.01)?;
    let coarse = unit_lag_max_error(0.01)?;
    let fine = unit_lag_max_error(0.005)?;
    let check = |name: &str, value: f64, limit: f64, at_least: bool| Check {
        name: name.into(),
        value,
        limit,
        at_least,
    };
    Ok(vec![
        check(
            "|y(1) - 0| at h = 0.01",
            traj.interpolate(1.0)?[0].abs(),
            1e-8,
            false,
        ),
        check(
            "|y(2) + 0.5| at h = 0.01",
            (traj.interpolate(2.0)?[0] + 0.5).abs(),
            1e-6,
            false,
        ),
        check(
            "max error on [0, 4], h = 0.01 over h = 0.005",
            coarse / fine,
            8.0,
            true,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    /// y'(t) = -y(t - 1)
    struct UnitLag {
        lags: [f64; 1],
    }

    impl DelayedVectorField for UnitLag {
        fn dimension(&self) -> usize {
            1
        }
        fn lags(&self) -> &[f64] {
            &self.lags
        }
        fn eval(&self, _t: f64, _state: &[f64], delayed: &[Vec<f64>], out: &mut [f64]) {
            out[0] = -delayed[0][0];
        }
    }

    struct Zero;

    impl DelayedVectorField for Zero {
        fn dimension(&self) -> usize {
            2
        }
        fn lags(&self) -> &[f64] {
            &[0.5]
        }
        fn eval(&self, _t: f64, _s: &[f64], _d: &[Vec<f64>], out: &mut [f64]) {
            out.fill(0.0);
        }
    }

    #[test]
    fn zero_field_keeps_history_endpoint() {
        let history = |t: f64, out: &mut [f64]| {
            out[0] = 3.0 + t;
            out[1] = -1.0;
        };
        let traj = integrate(&Zero, &history, 0.0, 5.0, 0.1).unwrap();
        for k in 0..traj.len() {
            assert_eq!(traj.state(k), &[3.0, -1.0]);
        }
    }

    #[test]
    fn grid_length_matches_floor_rule() {
        let traj = integrate(&Zero, &ConstantHistory(vec![0.0, 0.0]), 0.0, 1.05, 0.1).unwrap();
        assert_eq!(traj.len(), 11);
        assert_eq!(grid_len(0.0, 500.0, 0.01), 50_001);
    }

    #[test]
    fn method_of_steps_polynomials() {
        let field = UnitLag { lags: [1.0] };
        let traj = integrate(&field, &ConstantHistory(vec![1.0]), 0.0, 2.0, 0.01).unwrap();
        assert!(traj.interpolate(1.0).unwrap()[0].abs() < 1e-8);
        assert!((traj.interpolate(2.0).unwrap()[0] + 0.5).abs() < 1e-6);
    }

    #[test]
    fn hermite_reproduces_linear_data() {
        let dim = 1;
        let step = 0.25;
        let states: Vec<f64> = (0..9).map(|k| k as f64 * step).collect();
        let derivs = vec![1.0; states.len()];
        let traj = Trajectory::from_parts(0.0, step, dim, states, derivs).unwrap();
        for &t in &[0.1, 0.125, 1.3, 1.99] {
            assert!((traj.interpolate(t).unwrap()[0] - t).abs() < 1e-15);
        }
    }

    #[test]
    fn interpolation_is_exact_at_grid_points() {
        let field = UnitLag { lags: [1.0] };
        let traj = integrate(&field, &ConstantHistory(vec![1.0]), 0.0, 3.0, 0.01).unwrap();
        for k in 0..traj.len() {
            assert_eq!(traj.interpolate(traj.time(k)).unwrap()[0], traj.state(k)[0]);
        }
        assert_eq!(traj.interpolate(0.0).unwrap(), vec![1.0]);
    }

    #[test]
    fn out_of_range_queries_fail() {
        let traj = integrate(&Zero, &ConstantHistory(vec![1.0, 1.0]), 0.0, 1.0, 0.1).unwrap();
        assert!(matches!(
            traj.interpolate(-0.5),
            Err(DdeError::OutOfRange { .. })
        ));
        assert!(matches!(
            traj.interpolate(1.5),
            Err(DdeError::OutOfRange { .. })
        ));
    }

    #[test]
    fn configuration_errors() {
        let field = UnitLag { lags: [0.05] };
        let h = ConstantHistory(vec![1.0]);
        assert!(matches!(
            integrate(&field, &h, 0.0, 1.0, 0.1),
            Err(DdeError::StepExceedsLag { .. })
        ));
        assert!(matches!(
            integrate(&field, &h, 0.0, 1.0, 0.0),
            Err(DdeError::InvalidStep(_))
        ));
        assert!(matches!(
            integrate(&field, &h, 1.0, 1.0, 0.01),
            Err(DdeError::InvalidSpan { .. })
        ));
        let bad = UnitLag { lags: [-1.0] };
        assert!(matches!(
            integrate(&bad, &h, 0.0, 1.0, 0.01),
            Err(DdeError::InvalidLag { .. })
        ));
    }

    #[test]
    fn blow_up_reports_failing_time() {
        struct Explode;
        impl DelayedVectorField for Explode {
            fn dimension(&self) -> usize {
                1
            }
            fn lags(&self) -> &[f64] {
                &[]
            }
            fn eval(&self, _t: f64, s: &[f64], _d: &[Vec<f64>], out: &mut [f64]) {
                out[0] = s[0] * s[0];
            }
        }
        match integrate(&Explode, &ConstantHistory(vec![1.0]), 0.0, 5.0, 0.01) {
            Err(DdeError::NonFinite { time }) => assert!(time > 0.9 && time < 1.2, "{time}"),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn zero_lag_reads_current_state() {
        // y' = -y(t - 0) is plain exponential decay.
        let field = UnitLag { lags: [0.0] };
        let traj = integrate(&field, &ConstantHistory(vec![1.0]), 0.0, 1.0, 0.01).unwrap();
        assert!((traj.last_state()[0] - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn prefix_survives_blow_up() {
        // y' = y², y(0) = 1 blows up at t = 1.
        struct Square;
        impl DelayedVectorField for Square {
            fn dimension(&self) -> usize {
                1
            }
            fn lags(&self) -> &[f64] {
                &[]
            }
            fn eval(&self, _t: f64, y: &[f64], _d: &[Vec<f64>], out: &mut [f64]) {
                out[0] = y[0] * y[0];
            }
        }
        let (traj, err) =
            integrate_prefix(&Square, &ConstantHistory(vec![1.0]), 0.0, 2.0, 0.01).unwrap();
        assert!(matches!(err, Some(DdeError::NonFinite { .. })));
        assert!(traj.t_end() > 0.9 && traj.t_end() < 2.0);
        assert!(traj.last_state()[0].is_finite());
        assert_eq!(traj.states.len(), traj.len() * traj.dimension());
        assert!(integrate(&Square, &ConstantHistory(vec![1.0]), 0.0, 2.0, 0.01).is_err());
    }

    #[test]
    fn exact_unit_lag_solution() {
        assert_eq!(unit_lag_decay_exact(-0.5), 1.0);
        assert_eq!(unit_lag_decay_exact(0.25), 0.75);
        assert!(unit_lag_decay_exact(1.0).abs() < 1e-15);
        assert!((unit_lag_decay_exact(2.0) + 0.5).abs() < 1e-15);
        // 1 - t + (t-1)²/2 - (t-2)³/6 on [2, 3]
        let t = 2.5f64;
        let want = 1.0 - t + (t - 1.0).powi(2) / 2.0 - (t - 2.0).powi(3) / 6.0;
        assert!((unit_lag_decay_exact(t) - want).abs() < 1e-15);
    }

    #[test]
    fn validation_suite_passes() {
        let checks = validation_suite().unwrap();
        for c in &checks {
            assert!(c.passed(), "{c:?}");
        }
    }
}

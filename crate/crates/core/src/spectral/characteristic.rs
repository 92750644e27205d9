//! Numerical roots of the transcendental characteristic function.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::ModelParams;

use super::coefficients::{DfeCoefficients, EndemicCoefficients};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equilibrium {
    DiseaseFree,
    Endemic,
}

impl Equilibrium {
    pub fn as_str(self) -> &'static str {
        match self {
            Equilibrium::DiseaseFree => "DFE",
            Equilibrium::Endemic => "endemic",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootSearchError {
    #[error("endemic equilibrium does not exist for these parameters")]
    NoEquilibrium,
    #[error("no root of χ found in Re ∈ [{re_min}, {re_max}], Im ∈ [{im_min}, {im_max}]")]
    NoRootInBox {
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
    },
}

/// Rectangle of the upper half plane scanned for roots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub resolution: f64,
}

impl Default for SearchBox {
    fn default() -> Self {
        Self {
            re: (-2.0, 1.0),
            im: (0.0, 5.0),
            resolution: 0.05,
        }
    }
}

impl SearchBox {
    fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.re.0 - slack
            && z.re <= self.re.1 + slack
            && z.im >= self.im.0 - slack
            && z.im <= self.im.1 + slack
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Infective {
    /// `λ² + d₁λ + d₂ + e^{-λτ}(e₁λ + e₂)`
    Quadratic { d1: f64, d2: f64, e1: f64, e2: f64 },
    /// `λ³ + a₁λ² + a₂λ + a₃ + e^{-λτ}(b₀λ² + b₁λ + b₂)`
    Cubic {
        a1: f64,
        a2: f64,
        a3: f64,
        b0: f64,
        b1: f64,
        b2: f64,
    },
}

/// Factored characteristic function `χ(λ) = (λ+μ)^m · q(λ) · P(λ)` of one equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Characteristic {
    mu: f64,
    multiplicity: i32,
    /// `μ + δα`
    q_rate: f64,
    /// `ρ(1-α)`
    q_release: f64,
    kappa: f64,
    tau: f64,
    infective: Infective,
}

impl Characteristic {
    pub fn new(
        params: &ModelParams,
        beta: f64,
        equilibrium: Equilibrium,
    ) -> Result<Self, RootSearchError> {
        let (multiplicity, infective) = match equilibrium {
            Equilibrium::DiseaseFree => {
                let c = DfeCoefficients::new(params, beta);
                (
                    3,
                    Infective::Quadratic {
                        d1: c.d1,
                        d2: c.d2,
                        e1: c.e1,
                        e2: c.e2,
                    },
                )
            }
            Equilibrium::Endemic => {
                let c =
                    EndemicCoefficients::new(params, beta).ok_or(RootSearchError::NoEquilibrium)?;
                (
                    2,
                    Infective::Cubic {
                        a1: c.a1,
                        a2: c.a2,
                        a3: c.a3,
                        b0: c.b0,
                        b1: c.b1,
                        b2: c.b2,
                    },
                )
            }
        };
        Ok(Self {
            mu: params.mu,
            multiplicity,
            q_rate: params.mu + params.delta * params.alpha,
            q_release: params.rho * (1.0 - params.alpha),
            kappa: params.kappa,
            tau: params.tau,
            infective,
        })
    }

    /// Each factor with its multiplicity, value and derivative at `lam`.
    fn factors(&self, lam: Complex64) -> [(i32, Complex64, Complex64); 3] {
        let one = Complex64::new(1.0, 0.0);
        let linear = (self.multiplicity, lam + self.mu, one);
        let qe = (-lam * self.kappa).exp() * self.q_release;
        let quarantine = (1, lam + self.q_rate + qe, one - self.kappa * qe);
        let delay = (-lam * self.tau).exp();
        let infective = match self.infective {
            Infective::Quadratic { d1, d2, e1, e2 } => {
                let tail = lam * e1 + e2;
                (
                    1,
                    lam * lam + lam * d1 + d2 + delay * tail,
                    2.0 * lam + d1 + delay * (e1 - self.tau * tail),
                )
            }
            Infective::Cubic {
                a1,
                a2,
                a3,
                b0,
                b1,
                b2,
            } => {
                let tail = (lam * b0 + b1) * lam + b2;
                (
                    1,
                    ((lam + a1) * lam + a2) * lam + a3 + delay * tail,
                    (3.0 * lam + 2.0 * a1) * lam
                        + a2
                        + delay * (2.0 * b0 * lam + b1 - self.tau * tail),
                )
            }
        };
        [linear, quarantine, infective]
    }

    pub fn eval(&self, lam: Complex64) -> Complex64 {
        self.factors(lam)
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &(m, f, _)| acc * f.powi(m))
    }

    /// `χ'(λ)` by the product rule.
    pub fn derivative(&self, lam: Complex64) -> Complex64 {
        let fs = self.factors(lam);
        let mut total = Complex64::new(0.0, 0.0);
        for (j, &(mj, fj, dj)) in fs.iter().enumerate() {
            let mut term = dj * f64::from(mj) * fj.powi(mj - 1);
            for (k, &(mk, fk, _)) in fs.iter().enumerate() {
                if k != j {
                    term *= fk.powi(mk);
                }
            }
            total += term;
        }
        total
    }

    /// `ln|χ(λ)|`, safe against overflow of the individual factors.
    fn log_abs(&self, lam: Complex64) -> f64 {
        self.factors(lam)
            .iter()
            .map(|&(m, f, _)| f64::from(m) * f.norm().ln())
            .sum()
    }

    /// Newton step `χ/χ'` computed through the logarithmic derivative.
    fn newton_step(&self, lam: Complex64) -> Option<Complex64> {
        let mut logd = Complex64::new(0.0, 0.0);
        for (m, f, d) in self.factors(lam) {
            if f.norm() == 0.0 {
                return Some(Complex64::new(0.0, 0.0));
            }
            logd += f64::from(m) * d / f;
        }
        if logd.norm() == 0.0 || !logd.is_finite() {
            None
        } else {
            Some(logd.inv())
        }
    }

    /// Damped Newton iteration from `seed`; `None` if it stalls.
    pub fn polish(&self, seed: Complex64) -> Option<Complex64> {
        let mut lam = seed;
        let mut level = self.log_abs(lam);
        for _ in 0..200 {
            if level == f64::NEG_INFINITY {
                return Some(lam);
            }
            let step = self.newton_step(lam)?;
            if step.norm() <= 1e-14 * (1.0 + lam.norm()) {
                return Some(lam);
            }
            let mut scale = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let trial = lam - step * scale;
                let trial_level = self.log_abs(trial);
                if trial_level < level || trial_level == f64::NEG_INFINITY {
                    lam = trial;
                    level = trial_level;
                    accepted = true;
                    break;
                }
                scale *= 0.5;
            }
            if !accepted {
                // No decrease possible: either converged to rounding level or stuck.
                return if (step * scale).norm() < 1e-10 * (1.0 + lam.norm()) {
                    Some(lam)
                } else {
                    None
                };
            }
        }
        Some(lam)
    }
}

/// Indices of grid points that are no larger than any of their neighbours.
fn grid_minima(values: &[f64], nx: usize, ny: usize) -> Vec<(usize, usize)> {
    let at = |ix: usize, iy: usize| values[iy * nx + ix];
    let mut out = Vec::new();
    for iy in 0..ny {
        for ix in 0..nx {
            let v = at(ix, iy);
            let is_min = (-1i64..=1).all(|dy| {
                (-1i64..=1).all(|dx| {
                    let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                    (dx == 0 && dy == 0)
                        || jx < 0
                        || jy < 0
                        || jx >= nx as i64
                        || jy >= ny as i64
                        || at(jx as usize, jy as usize) >= v
                })
            });
            if is_min {
                out.push((ix, iy));
            }
        }
    }
    out
}

/// All distinct roots found in the box.
///
/// `|χ|` and each of its factors are sampled on the grid; every local
/// minimum seeds a damped Newton polish on χ. Seeding per factor keeps a
/// root of one factor from being masked by a deep valley of another.
pub fn roots_in_box(ch: &Characteristic, search: &SearchBox) -> Vec<Complex64> {
    let h = search.resolution;
    let nx = ((search.re.1 - search.re.0) / h).round() as usize + 1;
    let ny = ((search.im.1 - search.im.0) / h).round() as usize + 1;
    let point = |ix: usize, iy: usize| {
        Complex64::new(search.re.0 + ix as f64 * h, search.im.0 + iy as f64 * h)
    };
    let mut layers = vec![Vec::with_capacity(nx * ny); 4];
    for iy in 0..ny {
        for ix in 0..nx {
            let fs = ch.factors(point(ix, iy));
            let mut total = 0.0;
            for (layer, &(m, f, _)) in layers.iter_mut().zip(fs.iter()) {
                let v = f.norm().ln();
                layer.push(v);
                total += f64::from(m) * v;
            }
            layers[3].push(total);
        }
    }
    let mut seeds: Vec<(usize, usize)> =
        layers.iter().flat_map(|l| grid_minima(l, nx, ny)).collect();
    seeds.sort_unstable();
    seeds.dedup();

    let mut roots: Vec<Complex64> = Vec::new();
    for (ix, iy) in seeds {
        let Some(mut root) = ch.polish(point(ix, iy)) else {
            continue;
        };
        if root.im < 0.0 {
            root = root.conj();
        }
        if root.im.abs() < 1e-10 {
            root.im = 0.0;
        }
        if !search.contains(root, 1e-9) {
            continue;
        }
        if roots
            .iter()
            .all(|r| (r - root).norm() > 1e-6 * (1.0 + root.norm()))
        {
            roots.push(root);
        }
    }
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    roots
}

/// Rightmost root of χ inside `search` (upper half plane representative).
pub fn leading_root(
    params: &ModelParams,
    beta: f64,
    equilibrium: Equilibrium,
    search: &SearchBox,
) -> Result<Complex64, RootSearchError> {
    let ch = Characteristic::new(params, beta, equilibrium)?;
    roots_in_box(&ch, search)
        .into_iter()
        .next()
        .ok_or(RootSearchError::NoRootInBox {
            re_min: search.re.0,
            re_max: search.re.1,
            im_min: search.im.0,
            im_max: search.im.1,
        })
}

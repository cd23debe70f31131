//! Reduced gap dynamics of a body falling onto a wall through a thin film.
//!
//! Two closures of the drag balance are provided:
//!
//! * inertial: `m v' = -m g - c_d h^(-beta) v`, `h' = v`;
//! * quasi-static: `h' = -kappa h^beta` with `kappa = m g / c_d`.
//!
//! The quasi-static law reaches `h = 0` in finite time iff `beta < 1`.

mod dopri;
mod rosenbrock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::quadrature::least_squares_line;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    FullInertial,
    QuasiStatic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FallConfig {
    pub m: f64,
    pub g: f64,
    pub c_d: f64,
    pub beta: f64,
    pub h0: f64,
    /// Initial gap velocity; ignored in quasi-static mode.
    #[serde(default)]
    pub v0: f64,
    pub mode: Mode,
    #[serde(default = "default_h_stop")]
    pub h_stop: f64,
    pub t_max: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_h_stop() -> f64 {
    1e-12
}

fn default_tol() -> f64 {
    1e-9
}

fn default_max_steps() -> usize {
    2_000_000
}

impl FallConfig {
    /// Quasi-static configuration with default stop threshold and tolerance.
    pub fn quasi_static(m: f64, g: f64, c_d: f64, beta: f64, h0: f64, t_max: f64) -> Self {
        Self {
            m,
            g,
            c_d,
            beta,
            h0,
            v0: 0.0,
            mode: Mode::QuasiStatic,
            h_stop: default_h_stop(),
            t_max,
            tol: default_tol(),
            max_steps: default_max_steps(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.m > 0.0 && self.m.is_finite(), "m", self.m, "must be positive")?;
        ensure(self.g > 0.0 && self.g.is_finite(), "g", self.g, "must be positive")?;
        ensure(self.c_d > 0.0 && self.c_d.is_finite(), "c_d", self.c_d, "must be positive")?;
        ensure(self.beta >= 0.0 && self.beta.is_finite(), "beta", self.beta, "must be non-negative")?;
        ensure(self.h_stop > 0.0, "h_stop", self.h_stop, "must be positive")?;
        ensure(self.h0 > self.h_stop && self.h0.is_finite(), "h0", self.h0, "must exceed h_stop")?;
        ensure(self.v0.is_finite(), "v0", self.v0, "must be finite")?;
        ensure(self.t_max > 0.0 && self.t_max.is_finite(), "t_max", self.t_max, "must be positive")?;
        ensure(self.tol > 0.0 && self.tol <= 1e-2, "tol", self.tol, "must lie in (0, 1e-2]")?;
        ensure(self.max_steps > 0, "max_steps", 0.0, "must be positive")
    }

    /// Quasi-static rate `m g / c_d`.
    pub fn kappa(&self) -> f64 {
        self.m * self.g / self.c_d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FallSample {
    pub t: f64,
    pub h: f64,
    pub hdot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FallVerdict {
    Contact,
    NoContactByHorizon,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FallTrajectory {
    pub mode: Mode,
    pub beta: f64,
    pub samples: Vec<FallSample>,
    pub contact_time: Option<f64>,
    pub verdict: FallVerdict,
    pub steps: usize,
    pub rejected_steps: usize,
}

/// `3 alpha / (1 + alpha)`.
pub fn beta_of_alpha(alpha: f64) -> Result<f64> {
    ensure(alpha > 0.0 && alpha.is_finite(), "alpha", alpha, "must be positive")?;
    Ok(3.0 * alpha / (1.0 + alpha))
}

/// Largest fraction of the time to reach `h = 0` at the current speed that one
/// step may cover.
const STEP_FRACTION: f64 = 0.5;
/// Smallest number of steps across the horizon.
const MIN_STEPS: f64 = 200.0;

pub fn simulate_fall(cfg: &FallConfig) -> Result<FallTrajectory> {
    cfg.validate()?;
    match cfg.mode {
        Mode::QuasiStatic => quasi_static(cfg),
        Mode::FullInertial => inertial(cfg),
    }
}

struct Controller {
    dt: f64,
    /// Reciprocal of the order of the local error estimate.
    exponent: f64,
    steps: usize,
    rejected: usize,
}

impl Controller {
    fn new(dt: f64, estimate_order: u32) -> Self {
        Self {
            dt,
            exponent: 1.0 / estimate_order as f64,
            steps: 0,
            rejected: 0,
        }
    }

    /// Weighted RMS error norm relative to the larger of the old and new state,
    /// or to `floor` when that is larger.
    fn error_norm<const N: usize>(tol: f64, floor: f64, y: &[f64; N], y_new: &[f64; N], err: &[f64; N]) -> f64 {
        let mut s = 0.0;
        for i in 0..N {
            let scale = tol * y[i].abs().max(y_new[i].abs()).max(floor);
            s += (err[i] / scale).powi(2);
        }
        (s / N as f64).sqrt()
    }

    fn adapt(&mut self, err: f64) {
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-self.exponent)).clamp(0.2, 5.0) };
        self.dt *= fac;
    }
}

fn check_step(cfg: &FallConfig, t: f64, c: &Controller) -> Result<()> {
    if c.dt < 1e-18 * cfg.t_max {
        return Err(Error::Integrator {
            t,
            reason: "step size underflow",
        });
    }
    if c.steps + c.rejected >= cfg.max_steps {
        return Err(Error::Integrator {
            t,
            reason: "step limit reached",
        });
    }
    Ok(())
}

/// Integrates `y = ln h` with `y' = -kappa exp((beta - 1) y)`, so relative accuracy
/// in `h` is absolute accuracy in `y` and the gap stays positive. Errors in `y` are
/// therefore controlled in absolute terms.
fn quasi_static(cfg: &FallConfig) -> Result<FallTrajectory> {
    let kappa = cfg.kappa();
    let beta = cfg.beta;
    let rate = |y: f64| kappa * ((beta - 1.0) * y).exp();
    let f = move |_t: f64, s: &[f64; 1]| [-rate(s[0])];
    let sample = |t: f64, y: f64| {
        let h = y.exp();
        FallSample {
            t,
            h,
            hdot: -kappa * h.powf(beta),
        }
    };

    let cap = |y: f64| (STEP_FRACTION / rate(y)).min(cfg.t_max / MIN_STEPS);
    let mut t = 0.0;
    let mut y = cfg.h0.ln();
    let y_stop = cfg.h_stop.ln();
    let mut samples = vec![sample(t, y)];
    let mut c = Controller::new(1e-3 * cap(y), 5);
    while t < cfg.t_max {
        check_step(cfg, t, &c)?;
        let dt = c.dt.min(cap(y)).min(cfg.t_max - t);
        let (next, err) = dopri::step(&f, t, &[y], dt);
        let e = Controller::error_norm(cfg.tol, 1.0, &[0.0], &[0.0], &err);
        if !(e <= 1.0) || !next[0].is_finite() {
            c.rejected += 1;
            c.dt = dt;
            c.adapt(if e.is_finite() { e } else { 1e10 });
            continue;
        }
        c.steps += 1;
        c.dt = dt;
        c.adapt(e);
        t += dt;
        y = next[0];
        if y.exp() == 0.0 {
            return Err(Error::Integrator {
                t,
                reason: "gap below the smallest representable number",
            });
        }
        samples.push(sample(t, y));
        if beta < 1.0 && y <= y_stop {
            // closed-form remaining time of h' = -kappa h^beta from the current gap
            let tail = ((1.0 - beta) * y).exp() / (kappa * (1.0 - beta));
            return Ok(FallTrajectory {
                mode: cfg.mode,
                beta,
                samples,
                contact_time: Some(t + tail),
                verdict: FallVerdict::Contact,
                steps: c.steps,
                rejected_steps: c.rejected,
            });
        }
    }
    Ok(FallTrajectory {
        mode: cfg.mode,
        beta,
        samples,
        contact_time: None,
        verdict: FallVerdict::NoContactByHorizon,
        steps: c.steps,
        rejected_steps: c.rejected,
    })
}

/// Near the wall the velocity relaxes on the time scale `m h^beta / c_d`, far
/// shorter than the gap time scale when `beta > 1/2`, so the state `(h, v)` is
/// advanced by a linearly implicit scheme.
fn inertial(cfg: &FallConfig) -> Result<FallTrajectory> {
    let (m, g, c_d, beta) = (cfg.m, cfg.g, cfg.c_d, cfg.beta);
    let a = c_d / m;
    let f = move |s: &[f64; 2]| [s[1], -g - a * s[0].powf(-beta) * s[1]];
    let jac = move |s: &[f64; 2]| {
        let drag = a * s[0].powf(-beta);
        [[0.0, 1.0], [beta * drag * s[1] / s[0], -drag]]
    };
    let cap = |h: f64, v: f64| {
        let horizon = cfg.t_max / MIN_STEPS;
        if v < 0.0 {
            (STEP_FRACTION * h / -v).min(horizon)
        } else {
            horizon
        }
    };
    let mut t = 0.0;
    let mut s = [cfg.h0, cfg.v0];
    let mut samples = vec![FallSample {
        t,
        h: s[0],
        hdot: s[1],
    }];
    let start = cap(s[0], s[1]).min((cfg.h0 / g).sqrt());
    let mut c = Controller::new(1e-3 * start, 3);
    while t < cfg.t_max {
        check_step(cfg, t, &c)?;
        let dt = c.dt.min(cap(s[0], s[1])).min(cfg.t_max - t);
        let Some((next, err)) = rosenbrock::step(&f, &jac, &s, dt) else {
            c.rejected += 1;
            c.dt = 0.2 * dt;
            continue;
        };
        let e = Controller::error_norm(cfg.tol, 1e-300, &s, &next, &err);
        if !(e <= 1.0) || !(next[0] > 0.0) || !next[1].is_finite() {
            c.rejected += 1;
            c.dt = dt;
            c.adapt(if e.is_finite() && next[0] > 0.0 { e } else { 1e10 });
            continue;
        }
        c.steps += 1;
        c.dt = dt;
        c.adapt(e);
        t += dt;
        s = next;
        samples.push(FallSample {
            t,
            h: s[0],
            hdot: s[1],
        });
        if beta < 1.0 && s[0] <= cfg.h_stop && s[1] < 0.0 {
            // quasi-static continuation matched to the current speed
            let tail = s[0] / (-s[1] * (1.0 - beta));
            return Ok(FallTrajectory {
                mode: cfg.mode,
                beta,
                samples,
                contact_time: Some(t + tail),
                verdict: FallVerdict::Contact,
                steps: c.steps,
                rejected_steps: c.rejected,
            });
        }
    }
    Ok(FallTrajectory {
        mode: cfg.mode,
        beta,
        samples,
        contact_time: None,
        verdict: FallVerdict::NoContactByHorizon,
        steps: c.steps,
        rejected_steps: c.rejected,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Growth {
    Linear,
    Concave,
    Convex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLawFit {
    /// Slope of `|ln h|` against `t` over the trailing half of the run.
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the linear fit.
    pub residual: f64,
    /// Leading coefficient of a quadratic fit over the same window.
    pub curvature: f64,
    pub growth: Growth,
    pub samples_used: usize,
}

/// Linear fit of `|ln h|` against `t` over the trailing half of a trajectory that
/// did not reach contact.
pub fn log_law_check(traj: &FallTrajectory, cfg: &FallConfig) -> Result<LogLawFit> {
    ensure(cfg.beta >= 1.0, "beta", cfg.beta, "the log law concerns beta >= 1")?;
    if traj.verdict != FallVerdict::NoContactByHorizon {
        return Err(Error::Fit("trajectory reached contact"));
    }
    let t_end = traj.samples.last().map_or(0.0, |s| s.t);
    let window: Vec<&FallSample> = traj.samples.iter().filter(|s| s.t >= 0.5 * t_end).collect();
    if window.len() < 10 {
        return Err(Error::Fit("fewer than 10 samples in the trailing half"));
    }
    let ts: Vec<f64> = window.iter().map(|s| s.t).collect();
    let ls: Vec<f64> = window.iter().map(|s| s.h.ln().abs()).collect();
    let (slope, intercept) = least_squares_line(&ts, &ls)?;
    let n = ts.len() as f64;
    let residual = (ts
        .iter()
        .zip(&ls)
        .map(|(t, l)| (l - slope * t - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let curvature = quadratic_coefficient(&ts, &ls)?;
    let span = ts[ts.len() - 1] - ts[0];
    let bend = curvature.abs() * span * span;
    let scale = ls.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
    let growth = if bend <= 1e-6 * scale {
        Growth::Linear
    } else if curvature < 0.0 {
        Growth::Concave
    } else {
        Growth::Convex
    };
    Ok(LogLawFit {
        slope,
        intercept,
        residual,
        curvature,
        growth,
        samples_used: ts.len(),
    })
}

/// Least-squares `c` in `y ~ a + b t + c t^2`, with `t` centred and scaled.
fn quadratic_coefficient(ts: &[f64], ys: &[f64]) -> Result<f64> {
    let n = ts.len() as f64;
    let mid = ts.iter().sum::<f64>() / n;
    let half = ts.iter().map(|t| (t - mid).abs()).fold(0.0, f64::max);
    if half == 0.0 {
        return Err(Error::Fit("degenerate time window"));
    }
    let u: Vec<f64> = ts.iter().map(|t| (t - mid) / half).collect();
    // normal equations for the basis 1, u, u^2
    let mut m = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for (x, y) in u.iter().zip(ys) {
        let b = [1.0, *x, x * x];
        for i in 0..3 {
            rhs[i] += b[i] * y;
            for j in 0..3 {
                m[i][j] += b[i] * b[j];
            }
        }
    }
    let sol = solve3(m, rhs).ok_or(Error::Fit("singular quadratic fit"))?;
    Ok(sol[2] / (half * half))
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (dst, src) in m[row].iter_mut().zip(pivot_row).skip(col) {
                *dst -= f * src;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    Some(x)
}

/// `alpha` values within this distance of 1/2 are excluded from dichotomy grids.
pub const CRITICAL_BAND: (f64, f64) = (0.48, 0.52);

/// Twenty points in `(0, 1]`, ten on each side of the critical band.
pub fn default_alpha_grid() -> Vec<f64> {
    let below = (0..10).map(|k| 0.05 + 0.4 * k as f64 / 9.0);
    let above = (0..10).map(|k| 0.55 + 0.45 * k as f64 / 9.0);
    below.chain(above).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DichotomyRow {
    pub alpha: f64,
    pub beta: f64,
    pub verdict: FallVerdict,
    pub contact_time: Option<f64>,
}

/// Quasi-static falls with `beta = 3 alpha / (1 + alpha)` across a grid of
/// `alpha`, checking that contact happens exactly when `beta < 1`.
pub fn contact_dichotomy(alpha_grid: &[f64], template: &FallConfig) -> Result<Vec<DichotomyRow>> {
    for &a in alpha_grid {
        ensure(a > 0.0 && a <= 1.0, "alpha", a, "must lie in (0, 1]")?;
        ensure(
            !(CRITICAL_BAND.0..=CRITICAL_BAND.1).contains(&a),
            "alpha",
            a,
            "lies in the excluded band [0.48, 0.52] around 1/2",
        )?;
    }
    let rows = alpha_grid
        .par_iter()
        .map(|&alpha| {
            let beta = beta_of_alpha(alpha)?;
            let cfg = FallConfig {
                beta,
                mode: Mode::QuasiStatic,
                ..*template
            };
            let traj = simulate_fall(&cfg)?;
            Ok(DichotomyRow {
                alpha,
                beta,
                verdict: traj.verdict,
                contact_time: traj.contact_time,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for row in &rows {
        if (row.verdict == FallVerdict::Contact) != (row.beta < 1.0) {
            return Err(Error::Dichotomy {
                alpha: row.alpha,
                beta: row.beta,
            });
        }
    }
    Ok(rows)
}

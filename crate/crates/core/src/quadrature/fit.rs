//! Exponent fits for sequences `v(h)` as `h -> 0`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Half-width of the band around zero read as bounded.
pub const BOUNDED_BAND: f64 = 0.05;
/// Smallest fitted exponent read as a divergence.
pub const DIVERGENT_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Bounded,
    Divergent,
    Marginal,
}

/// Reads a fitted blow-up exponent `e` (as in `v ~ h^(-e)`).
pub fn classify_exponent(e: f64) -> Verdict {
    if e.abs() <= BOUNDED_BAND {
        Verdict::Bounded
    } else if e >= DIVERGENT_THRESHOLD {
        Verdict::Divergent
    } else {
        Verdict::Marginal
    }
}

/// Ordinary least-squares line `y = slope x + intercept`.
pub fn least_squares_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Fit("need at least two paired samples"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if !(sxx > 0.0) || !sxy.is_finite() {
        return Err(Error::Fit("degenerate abscissae"));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Slope of `ln v` against `ln h`.
pub fn loglog_slope(hs: &[f64], values: &[f64]) -> Result<f64> {
    if values.iter().chain(hs).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit("log-log fit needs positive finite samples"));
    }
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    Ok(least_squares_line(&xs, &ys)?.0)
}

/// Model `v(h) = amplitude * h^(-exponent) + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OffsetPowerLaw {
    pub exponent: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// Root-mean-square relative residual.
    pub residual: f64,
}

impl OffsetPowerLaw {
    /// Blow-up rate implied by the fit; zero when the model stays bounded.
    pub fn blowup_exponent(&self) -> f64 {
        if self.exponent > 0.0 && self.amplitude > 0.0 {
            self.exponent
        } else {
            0.0
        }
    }
}

/// Fits [`OffsetPowerLaw`] by variable projection: for each trial exponent the
/// amplitude and offset solve a relative-error linear least-squares problem.
pub fn fit_offset_power_law(hs: &[f64], values: &[f64]) -> Result<OffsetPowerLaw> {
    if hs.len() != values.len() || hs.len() < 3 {
        return Err(Error::Fit("need at least three paired samples"));
    }
    if values.iter().chain(hs).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit("power-law fit needs positive finite samples"));
    }
    // normalise h so h^(-e) stays representable over the search range
    let h_ref = hs.iter().cloned().fold(f64::INFINITY, f64::min);
    let xs: Vec<f64> = hs.iter().map(|h| h / h_ref).collect();

    let (lo, hi, step) = (-3.0, 6.0, 0.01);
    let mut best = (f64::INFINITY, 0.0);
    let n_grid = ((hi - lo) / step) as usize;
    for k in 0..=n_grid {
        let e = lo + step * k as f64;
        let r = project(&xs, values, e).2;
        if r < best.0 {
            best = (r, e);
        }
    }
    let (mut a, mut b) = (best.1 - step, best.1 + step);
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (project(&xs, values, c).2, project(&xs, values, d).2);
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = project(&xs, values, c).2;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = project(&xs, values, d).2;
        }
    }
    let e = 0.5 * (a + b);
    let (amp, offset, ss) = project(&xs, values, e);
    Ok(OffsetPowerLaw {
        exponent: e,
        amplitude: amp * h_ref.powf(e),
        offset,
        residual: (ss / hs.len() as f64).sqrt(),
    })
}

/// Weighted linear fit of `v ~ A x^(-e) + B` with weights `1/v`.
/// Returns `(A, B, sum of squared relative residuals)`.
fn project(xs: &[f64], values: &[f64], e: f64) -> (f64, f64, f64) {
    let (mut s11, mut s12, mut s22, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, v) in xs.iter().zip(values) {
        let w = 1.0 / v;
        let g = x.powf(-e) * w;
        s11 += g * g;
        s12 += g * w;
        s22 += w * w;
        t1 += g;
        t2 += w;
    }
    let det = s11 * s22 - s12 * s12;
    let (amp, offset) = if det.abs() > 1e-13 * s11 * s22 {
        ((t1 * s22 - t2 * s12) / det, (s11 * t2 - s12 * t1) / det)
    } else {
        // basis functions collinear: a single scale factor
        let c = (t1 + t2) / (s11 + 2.0 * s12 + s22);
        (c, c)
    };
    let ss = xs
        .iter()
        .zip(values)
        .map(|(x, v)| {
            let r = (amp * x.powf(-e) + offset) / v - 1.0;
            r * r
        })
        .sum();
    (amp, offset, ss)
}

//! Singular integrals over the cusp region and exponent fits across gap heights.
//!
//! The near-contact scale is `r_c = h^(1/(1+alpha))`. With the substitution
//! enabled the radial integral is split at `r_c`: the inner piece uses `r = r_c s`
//! and the outer piece the logarithmic variable `u = ln r`.

mod adaptive;
mod fit;
mod legendre;

use std::cell::RefCell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::geometry::{profile_unchecked, CuspGeometry};
use crate::testfield::{cusp_field_unchecked, FieldSample};
use adaptive::{integrate, Segment};

pub use fit::{
    classify_exponent, fit_offset_power_law, least_squares_line, loglog_slope, OffsetPowerLaw,
    Verdict, BOUNDED_BAND, DIVERGENT_THRESHOLD,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    /// Cap on the number of adaptive cells.
    pub max_subdivisions: usize,
    /// Stretch `r = h^(1/(1+alpha)) s` near the axis.
    pub substitution: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_subdivisions: 1_000_000,
            substitution: true,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(
            self.rel_tol > 0.0 && self.rel_tol <= 1e-2,
            "rel_tol",
            self.rel_tol,
            "must lie in (0, 1e-2]",
        )?;
        ensure(
            self.max_subdivisions >= 1000,
            "max_subdivisions",
            self.max_subdivisions as f64,
            "must be at least 1000",
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Quantity {
    Field,
    Gradient,
    HDerivative,
}

impl Quantity {
    pub fn magnitude(self, s: &FieldSample) -> f64 {
        match self {
            Quantity::Field => s.magnitude(),
            Quantity::Gradient => s.gradient_norm(),
            Quantity::HDerivative => s.h_derivative_norm(),
        }
    }

    /// Largest `p` for which the norm stays bounded as `h -> 0`.
    pub fn critical_p(self, alpha: f64) -> f64 {
        match self {
            Quantity::Field => 1.0 + 3.0 / alpha,
            Quantity::Gradient | Quantity::HDerivative => (3.0 + alpha) / (1.0 + 2.0 * alpha),
        }
    }

    /// Radial kernel `(r^a, psi^b)` of the dominant term of `int |Q|^p`:
    /// `r/psi` for the field and `r/psi^2` for both derivatives, with one factor
    /// `psi r` from the volume element.
    pub fn dominant_kernel(self, p: f64) -> (f64, f64) {
        match self {
            Quantity::Field => (p + 1.0, p - 1.0),
            Quantity::Gradient | Quantity::HDerivative => (p + 1.0, 2.0 * p - 1.0),
        }
    }

    /// Predicted blow-up exponent of the norm (the integral exponent divided by `p`).
    pub fn predicted_norm_exponent(self, p: f64, alpha: f64) -> (f64, Verdict) {
        let (a, b) = self.dominant_kernel(p);
        let (e, class) = kernel_predicted_exponent(a, b, alpha);
        (e / p, class)
    }
}

/// Blow-up exponent of `int_0^r0 r^p / (h + r^(1+alpha))^q dr` as `h -> 0`, and
/// its classification. Equality `p + 1 = q (1 + alpha)` is the logarithmic case.
pub fn kernel_predicted_exponent(p: f64, q: f64, alpha: f64) -> (f64, Verdict) {
    let gap = p + 1.0 - q * (1.0 + alpha);
    if gap.abs() <= 1e-12 * (p + 1.0).abs().max(1.0) {
        (0.0, Verdict::Marginal)
    } else if gap > 0.0 {
        (0.0, Verdict::Bounded)
    } else {
        (-gap / (1.0 + alpha), Verdict::Divergent)
    }
}

/// `int_0^r0 r^p / (h + r^(1+alpha))^q dr`.
pub fn kernel_integral(p: f64, q: f64, alpha: f64, h: f64, r0: f64, cfg: &QuadratureConfig) -> Result<f64> {
    cfg.validate()?;
    ensure(p > 0.0, "p", p, "must be positive")?;
    ensure(q >= 0.0 && q.is_finite(), "q", q, "must be non-negative")?;
    ensure(alpha > 0.0 && alpha.is_finite(), "alpha", alpha, "must be positive")?;
    ensure(h > 0.0 && h.is_finite(), "h", h, "must be positive")?;
    ensure(r0 > 0.0 && r0.is_finite(), "r0", r0, "must be positive")?;

    let plain = |r: f64| r.powf(p) / (h + r.powf(1.0 + alpha)).powf(q);
    if !cfg.substitution {
        return Ok(integrate(&[Segment { a: 0.0, b: r0, f: &plain }], cfg.rel_tol, cfg.max_subdivisions)?.value);
    }
    let rc = h.powf(1.0 / (1.0 + alpha));
    let scale = rc.powf(p + 1.0) * h.powf(-q);
    let inner = |s: f64| scale * s.powf(p) / (1.0 + s.powf(1.0 + alpha)).powf(q);
    let outer = |u: f64| ((p + 1.0) * u - q * (h + (u * (1.0 + alpha)).exp()).ln()).exp();
    let segments = radial_segments(rc, r0, &inner, &outer);
    Ok(integrate(&segments, cfg.rel_tol, cfg.max_subdivisions)?.value)
}

fn radial_segments<'a>(
    rc: f64,
    r0: f64,
    inner: &'a dyn Fn(f64) -> f64,
    outer: &'a dyn Fn(f64) -> f64,
) -> Vec<Segment<'a>> {
    if rc >= r0 {
        vec![Segment { a: 0.0, b: r0 / rc, f: inner }]
    } else {
        vec![
            Segment { a: 0.0, b: 1.0, f: inner },
            Segment { a: rc.ln(), b: r0.ln(), f: outer },
        ]
    }
}

/// Largest even `p` handled by the exact Gauss–Legendre inner rule.
const MAX_POLYNOMIAL_P: u32 = 16;

/// `(int_{cusp} |Q|^p 2 pi r dr dx3)^(1/p)` over the cusp region of gap `h`.
///
/// At fixed `r` each entry of the field is a cubic in `t = x3 / psi`, so for even
/// integer `p` the inner integral is a polynomial of degree `3p` and Gauss–Legendre
/// is exact; other `p` fall back to adaptive integration in `t`.
pub fn lp_norm(quantity: Quantity, p: f64, h: f64, geom: &CuspGeometry, cfg: &QuadratureConfig) -> Result<f64> {
    cfg.validate()?;
    ensure(p > 0.0 && p.is_finite(), "p", p, "must be positive")?;
    geom.check_gap(h)?;
    let alpha = geom.alpha();
    let r0 = geom.r0();

    let even = p.fract() == 0.0 && p % 2.0 == 0.0 && (p as u32) <= MAX_POLYNOMIAL_P;
    let rule = if even {
        legendre::gauss_legendre_unit(((3.0 * p + 2.0) / 2.0).ceil() as usize)
    } else {
        Vec::new()
    };
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let inner_tol = 0.1 * cfg.rel_tol;

    let slice = |r: f64| -> f64 {
        let psi = profile_unchecked(r, h, alpha).value;
        let point = |t: f64| quantity.magnitude(&cusp_field_unchecked(r, t * psi, h, alpha)).powf(p);
        let column = if even {
            rule.iter().map(|(t, w)| w * point(*t)).sum()
        } else {
            match integrate(&[Segment { a: 0.0, b: 1.0, f: &point }], inner_tol, cfg.max_subdivisions) {
                Ok(e) => e.value,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        };
        2.0 * std::f64::consts::PI * r * psi * column
    };

    let total = if cfg.substitution {
        let rc = h.powf(1.0 / (1.0 + alpha));
        let inner = |s: f64| rc * slice(rc * s);
        let outer = |u: f64| {
            let r = u.exp();
            r * slice(r)
        };
        let segments = radial_segments(rc, r0, &inner, &outer);
        integrate(&segments, cfg.rel_tol, cfg.max_subdivisions)
    } else {
        integrate(&[Segment { a: 0.0, b: r0, f: &slice }], cfg.rel_tol, cfg.max_subdivisions)
    };
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(total?.value.powf(1.0 / p))
}

/// Geometric grid from `1e-1` down to `1e-6` with ratio `10^(-1/2)`.
pub fn default_h_grid() -> Vec<f64> {
    (0..11).map(|k| 10f64.powf(-1.0 - 0.5 * k as f64)).collect()
}

/// The default grid restricted to heights admissible for `geom`.
pub fn admissible_h_grid(geom: &CuspGeometry) -> Vec<f64> {
    default_h_grid().into_iter().filter(|h| geom.is_admissible(*h)).collect()
}

fn check_grid(h_grid: &[f64]) -> Result<()> {
    if h_grid.len() < 3 {
        return Err(Error::InvalidGrid("need at least three gap heights"));
    }
    if h_grid.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(Error::InvalidGrid("gap heights must be positive and finite"));
    }
    if h_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidGrid("gap heights must be strictly decreasing"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormSweep {
    pub quantity: Quantity,
    pub p: f64,
    pub alpha: f64,
    pub r0: f64,
    pub d0: f64,
    pub h_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// `e` in `values ~ C h^(-e)`, from least squares in log-log coordinates.
    pub fitted_exponent: f64,
    pub verdict: Verdict,
    /// Dominant-term prediction for the norm exponent.
    pub predicted_exponent: f64,
    pub predicted_verdict: Verdict,
    /// Indices `i` where the norm decreased from `h_grid[i]` to `h_grid[i + 1]`.
    /// Only tracked for the derivative quantities.
    pub monotonicity_violations: Vec<usize>,
}

pub fn norm_sweep(
    quantity: Quantity,
    p: f64,
    geom: &CuspGeometry,
    h_grid: &[f64],
    cfg: &QuadratureConfig,
) -> Result<NormSweep> {
    cfg.validate()?;
    ensure(p > 0.0 && p.is_finite(), "p", p, "must be positive")?;
    check_grid(h_grid)?;
    for &h in h_grid {
        geom.check_gap(h)?;
    }
    let values = h_grid
        .par_iter()
        .map(|&h| lp_norm(quantity, p, h, geom, cfg))
        .collect::<Result<Vec<f64>>>()?;
    let fitted_exponent = -loglog_slope(h_grid, &values)?;
    let monotonicity_violations = match quantity {
        Quantity::Field => Vec::new(),
        _ => values
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1] < w[0] * (1.0 - 10.0 * cfg.rel_tol))
            .map(|(i, _)| i)
            .collect(),
    };
    let (predicted_exponent, predicted_verdict) = quantity.predicted_norm_exponent(p, geom.alpha());
    Ok(NormSweep {
        quantity,
        p,
        alpha: geom.alpha(),
        r0: geom.r0(),
        d0: geom.d0(),
        h_grid: h_grid.to_vec(),
        values,
        fitted_exponent,
        verdict: classify_exponent(fitted_exponent),
        predicted_exponent,
        predicted_verdict,
        monotonicity_violations,
    })
}

/// Kernel integral across a grid of gap heights with both exponent fits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelStudy {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub r0: f64,
    pub h_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Slope of `ln I` against `ln h`; negative when the integral blows up.
    pub loglog_slope: f64,
    /// Blow-up exponent from the fit `I ~ A h^(-e) + B`, clamped at zero.
    pub fitted_exponent: f64,
    pub fit: OffsetPowerLaw,
    pub verdict: Verdict,
    pub predicted_exponent: f64,
    pub predicted: Verdict,
}

pub fn kernel_study(
    p: f64,
    q: f64,
    alpha: f64,
    r0: f64,
    h_grid: &[f64],
    cfg: &QuadratureConfig,
) -> Result<KernelStudy> {
    check_grid(h_grid)?;
    let values = h_grid
        .par_iter()
        .map(|&h| kernel_integral(p, q, alpha, h, r0, cfg))
        .collect::<Result<Vec<f64>>>()?;
    let loglog_slope = loglog_slope(h_grid, &values)?;
    let fit = fit_offset_power_law(h_grid, &values)?;
    let fitted_exponent = fit.blowup_exponent();
    let (predicted_exponent, predicted) = kernel_predicted_exponent(p, q, alpha);
    Ok(KernelStudy {
        p,
        q,
        alpha,
        r0,
        h_grid: h_grid.to_vec(),
        values,
        loglog_slope,
        fitted_exponent,
        fit,
        verdict: classify_exponent(fitted_exponent),
        predicted_exponent,
        predicted,
    })
}

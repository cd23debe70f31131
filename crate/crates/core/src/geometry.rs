//! Gap geometry between the rough body and the flat wall.
//!
//! Near the contact point the lower body surface is `x3 = h + r^(1+alpha)`.
//! Everything downstream is expressed through the profile `psi(r) = h + r^(1+alpha)`.

use serde::Serialize;

use crate::error::{ensure, Error, Result};

/// Shape of the cusp: roughness exponent, cusp radius and wall safety distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CuspGeometry {
    alpha: f64,
    r0: f64,
    d0: f64,
}

impl CuspGeometry {
    pub fn new(alpha: f64, r0: f64, d0: f64) -> Result<Self> {
        ensure(alpha > 0.0 && alpha <= 1.0, "alpha", alpha, "must lie in (0, 1]")?;
        ensure(r0 > 0.0 && r0 < 1.0, "r0", r0, "must lie in (0, 1)")?;
        ensure(d0 > 0.0, "d0", d0, "must be positive")?;
        ensure(d0 < r0, "d0", d0, "must be smaller than r0")?;
        ensure(
            r0.powf(1.0 + alpha) < d0,
            "d0",
            d0,
            "must exceed r0^(1+alpha), otherwise no gap height is admissible",
        )?;
        Ok(Self { alpha, r0, d0 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    /// Largest gap height with `h + r0^(1+alpha) <= d0`.
    pub fn max_gap(&self) -> f64 {
        self.d0 - self.r0.powf(1.0 + self.alpha)
    }

    pub fn is_admissible(&self, h: f64) -> bool {
        h > 0.0 && h + self.r0.powf(1.0 + self.alpha) <= self.d0
    }

    pub fn check_gap(&self, h: f64) -> Result<()> {
        if self.is_admissible(h) {
            Ok(())
        } else {
            Err(Error::InadmissibleGap {
                h,
                max_h: self.max_gap(),
            })
        }
    }

    pub fn psi(&self, r: f64, h: f64) -> Result<Profile> {
        psi(r, h, self.alpha)
    }

    /// Membership in the cusp region `0 <= r < r0, 0 <= x3 <= h + r^(1+alpha)`.
    pub fn in_cusp(&self, point: GapPoint, h: f64) -> Result<bool> {
        self.check_gap(h)?;
        Ok(point.r >= 0.0
            && point.r < self.r0
            && point.x3 >= 0.0
            && point.x3 <= profile_unchecked(point.r, h, self.alpha).value)
    }

    /// Like [`in_cusp`](Self::in_cusp) but includes the closing edge `r = r0`.
    pub fn in_cusp_closure(&self, point: GapPoint, h: f64) -> Result<bool> {
        self.check_gap(h)?;
        Ok(point.r >= 0.0
            && point.r <= self.r0
            && point.x3 >= 0.0
            && point.x3 <= profile_unchecked(point.r, h, self.alpha).value)
    }
}

/// A point of the meridian half-plane in cylindrical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapPoint {
    pub r: f64,
    pub x3: f64,
}

impl GapPoint {
    pub fn new(r: f64, x3: f64) -> Self {
        Self { r, x3 }
    }
}

/// Second derivative of the profile. At `r = 0` with `alpha < 1` it is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Curvature {
    Finite(f64),
    Singular,
}

impl Curvature {
    pub fn finite(self) -> Option<f64> {
        match self {
            Curvature::Finite(v) => Some(v),
            Curvature::Singular => None,
        }
    }
}

/// `psi(r)` together with its first two radial derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Profile {
    pub value: f64,
    pub slope: f64,
    pub curvature: Curvature,
    /// `r * psi''(r) = alpha (1+alpha) r^alpha`, finite everywhere.
    pub r_curvature: f64,
}

pub fn psi(r: f64, h: f64, alpha: f64) -> Result<Profile> {
    ensure(r >= 0.0, "r", r, "must be non-negative")?;
    ensure(h > 0.0 || (h == 0.0 && r > 0.0), "h", h, "must be positive")?;
    ensure(alpha > 0.0, "alpha", alpha, "must be positive")?;
    Ok(profile_unchecked(r, h, alpha))
}

pub(crate) fn profile_unchecked(r: f64, h: f64, alpha: f64) -> Profile {
    let r_alpha = r.powf(alpha);
    let curvature = if r > 0.0 {
        Curvature::Finite(alpha * (1.0 + alpha) * r.powf(alpha - 1.0))
    } else if alpha == 1.0 {
        Curvature::Finite(2.0)
    } else {
        Curvature::Singular
    };
    Profile {
        value: h + r * r_alpha,
        slope: (1.0 + alpha) * r_alpha,
        curvature,
        r_curvature: alpha * (1.0 + alpha) * r_alpha,
    }
}

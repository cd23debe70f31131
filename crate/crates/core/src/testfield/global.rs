use serde::{Deserialize, Serialize};

use super::body::{Distance, ReferenceBody};
use super::cusp::cusp_field_unchecked;
use super::jet::{Jet, H, R, X3};
use super::FieldSample;
use crate::error::{ensure, Result};
use crate::geometry::{CuspGeometry, GapPoint};

/// Transition bands of the two smooth cutoffs.
///
/// `chi` is 1 for `r < chi_inner, x3 < chi_inner` and 0 once either coordinate
/// exceeds `chi_outer`. `eta` is 1 within distance `eta_inner` of the body and 0
/// beyond `eta_outer`. Both use the quintic smoothstep `6u^5 - 15u^4 + 10u^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffConfig {
    pub chi_inner: f64,
    pub chi_outer: f64,
    pub eta_inner: f64,
    pub eta_outer: f64,
}

impl CutoffConfig {
    pub fn from_geometry(geom: &CuspGeometry) -> Self {
        Self {
            chi_inner: geom.r0(),
            chi_outer: 2.0 * geom.r0(),
            eta_inner: 0.5 * geom.d0(),
            eta_outer: geom.d0(),
        }
    }

    pub fn validate(&self, geom: &CuspGeometry) -> Result<()> {
        ensure(self.chi_inner > 0.0, "chi_inner", self.chi_inner, "must be positive")?;
        ensure(
            self.chi_outer > self.chi_inner && self.chi_outer <= 2.0 * geom.r0(),
            "chi_outer",
            self.chi_outer,
            "must lie in (chi_inner, 2 r0]",
        )?;
        ensure(self.eta_inner > 0.0, "eta_inner", self.eta_inner, "must be positive")?;
        ensure(
            self.eta_outer > self.eta_inner,
            "eta_outer",
            self.eta_outer,
            "must exceed eta_inner",
        )?;
        Ok(())
    }
}

/// Test field on the whole half-space `x3 >= 0` built from the blended stream function
/// `phi_h = (r/2) [(1 - chi) eta + chi Phi(x3/psi)]`.
///
/// Inside the body the field is the rigid lift `e_3`. Where `chi = 1` the result is
/// exactly [`cusp_field_unchecked`].
pub fn eval_global_field(
    point: GapPoint,
    h: f64,
    geom: &CuspGeometry,
    cutoffs: &CutoffConfig,
) -> Result<FieldSample> {
    geom.check_gap(h)?;
    cutoffs.validate(geom)?;
    ensure(point.r >= 0.0, "r", point.r, "must be non-negative")?;
    ensure(point.x3 >= 0.0, "x3", point.x3, "must be non-negative")?;

    let (r, x3) = (point.r, point.x3);
    let body = ReferenceBody::new(geom, h);
    if body.contains(r, x3) {
        return Ok(FieldSample::rigid_lift());
    }
    if r < cutoffs.chi_inner && x3 < cutoffs.chi_inner {
        return Ok(cusp_field_unchecked(r, x3, h, geom.alpha()));
    }

    let rj = Jet::variable(r, R);
    let zj = Jet::variable(x3, X3);
    let hj = Jet::variable(h, H);

    let chi = one_minus_step(rj, cutoffs.chi_inner, cutoffs.chi_outer)
        * one_minus_step(zj, cutoffs.chi_inner, cutoffs.chi_outer);

    let eta = {
        let dist = body.distance_jet(r, x3);
        if dist.value <= cutoffs.eta_inner {
            Jet::constant(1.0)
        } else if dist.value >= cutoffs.eta_outer {
            Jet::constant(0.0)
        } else {
            one_minus_step(distance_to_jet(&dist), cutoffs.eta_inner, cutoffs.eta_outer)
        }
    };

    let stream = if chi.v == 0.0 {
        eta
    } else {
        let alpha = geom.alpha();
        // Only r * d2/dr2 of the stream function is consumed, so the singular
        // curvature of r^(1+alpha) at the axis can be dropped there.
        let rr = if r > 0.0 {
            rj.map(
                r.powf(1.0 + alpha),
                (1.0 + alpha) * r.powf(alpha),
                alpha * (1.0 + alpha) * r.powf(alpha - 1.0),
            )
        } else {
            rj.map(0.0, 0.0, 0.0)
        };
        let t = zj * (hj + rr).recip();
        let tv = t.v;
        let shape = t.map(
            tv * tv * (3.0 - 2.0 * tv),
            6.0 * tv * (1.0 - tv),
            6.0 - 12.0 * tv,
        );
        (Jet::constant(1.0) - chi) * eta + chi * shape
    };

    Ok(sample_from_reduced_stream(r, &stream))
}

/// Field from the reduced stream function `Psi = phi / (r/2)`.
fn sample_from_reduced_stream(r: f64, s: &Jet) -> FieldSample {
    let half_r = 0.5 * r;
    let wr_over_r = -0.5 * s.d[X3];
    FieldSample {
        w_r: -half_r * s.d[X3],
        w_3: s.v + half_r * s.d[R],
        dr_wr: wr_over_r - half_r * s.dd[R][X3],
        d3_wr: -half_r * s.dd[X3][X3],
        dr_w3: 1.5 * s.d[R] + half_r * s.dd[R][R],
        d3_w3: s.d[X3] + half_r * s.dd[R][X3],
        wr_over_r,
        dh_wr: -half_r * s.dd[X3][H],
        dh_w3: s.d[H] + half_r * s.dd[R][H],
    }
}

fn smoothstep(u: f64) -> (f64, f64, f64) {
    if u <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if u >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let u2 = u * u;
        (
            u2 * u * (10.0 - 15.0 * u + 6.0 * u2),
            30.0 * u2 * (1.0 - u) * (1.0 - u),
            60.0 * u * (1.0 - u) * (1.0 - 2.0 * u),
        )
    }
}

/// `1 - S((x - inner) / (outer - inner))` as a jet.
fn one_minus_step(x: Jet, inner: f64, outer: f64) -> Jet {
    let width = outer - inner;
    let (s, ds, dds) = smoothstep((x.v - inner) / width);
    x.map(1.0 - s, -ds / width, -dds / (width * width))
}

/// The body translates rigidly with `h`, so `d/dh = -d/dx3`.
fn distance_to_jet(d: &Distance) -> Jet {
    let mut j = Jet::constant(d.value);
    j.d = [d.grad[0], d.grad[1], -d.grad[1]];
    let (rr, rz, zz) = (d.hess[0][0], d.hess[0][1], d.hess[1][1]);
    j.dd = [[rr, rz, -rz], [rz, zz, -zz], [-rz, -zz, zz]];
    j
}

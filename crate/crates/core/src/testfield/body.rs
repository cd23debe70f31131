//! Reference body used by the global cutoff.
//!
//! The lower surface follows the cusp profile `h + r^(1+alpha)` up to `r = 2 r0`
//! and continues as a sphere centred on the axis, tangent to the profile there.

use crate::geometry::{profile_unchecked, CuspGeometry};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceBody {
    alpha: f64,
    h: f64,
    /// End of the cusp profile (`2 r0`).
    profile_end: f64,
    /// Height of the profile at `profile_end`.
    junction_height: f64,
    center: f64,
    radius: f64,
    /// Polar angle of the junction measured from the downward axis.
    junction_angle: f64,
}

/// Distance to the body boundary with its gradient and Hessian in `(r, x3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Distance {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl ReferenceBody {
    pub fn new(geom: &CuspGeometry, h: f64) -> Self {
        let alpha = geom.alpha();
        let profile_end = 2.0 * geom.r0();
        let prof = profile_unchecked(profile_end, h, alpha);
        let slope = prof.slope;
        let radius = profile_end * (1.0 + 1.0 / (slope * slope)).sqrt();
        let center = prof.value + profile_end / slope;
        Self {
            alpha,
            h,
            profile_end,
            junction_height: prof.value,
            center,
            radius,
            junction_angle: slope.atan(),
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn center_height(&self) -> f64 {
        self.center
    }

    fn lower(&self, r: f64) -> f64 {
        if r <= self.profile_end {
            profile_unchecked(r, self.h, self.alpha).value
        } else {
            self.center - (self.radius * self.radius - r * r).max(0.0).sqrt()
        }
    }

    pub fn contains(&self, r: f64, x3: f64) -> bool {
        if r > self.radius {
            return false;
        }
        let upper = self.center + (self.radius * self.radius - r * r).max(0.0).sqrt();
        x3 >= self.lower(r) && x3 <= upper
    }

    /// Distance from an exterior point to the body.
    pub fn distance(&self, r: f64, x3: f64) -> f64 {
        self.distance_jet(r, x3).value
    }

    pub(crate) fn distance_jet(&self, r: f64, x3: f64) -> Distance {
        let profile = self.profile_distance(r, x3);
        match self.arc_distance(r, x3) {
            Some(arc) if arc.value < profile.value => arc,
            _ => profile,
        }
    }

    fn arc_distance(&self, r: f64, x3: f64) -> Option<Distance> {
        let (dr, dz) = (r, x3 - self.center);
        let angle = dr.atan2(-dz);
        if angle < self.junction_angle {
            return None;
        }
        let rho = dr.hypot(dz);
        if rho == 0.0 {
            return None;
        }
        let sign = if rho >= self.radius { 1.0 } else { -1.0 };
        let n = [dr / rho, dz / rho];
        let c = sign / rho;
        Some(Distance {
            value: sign * (rho - self.radius),
            grad: [sign * n[0], sign * n[1]],
            hess: [
                [c * (1.0 - n[0] * n[0]), -c * n[0] * n[1]],
                [-c * n[0] * n[1], c * (1.0 - n[1] * n[1])],
            ],
        })
    }

    fn profile_distance(&self, r: f64, x3: f64) -> Distance {
        let end = self.profile_end;
        let sq = |s: f64| {
            let z = profile_unchecked(s, self.h, self.alpha).value;
            (s - r) * (s - r) + (z - x3) * (z - x3)
        };

        // Coarse scan on a grid clustered at the tip, then golden-section refinement.
        const N: usize = 128;
        let node = |k: usize| end * (k as f64 / N as f64).powi(2);
        let mut best = 0;
        let mut best_val = sq(0.0);
        for k in 1..=N {
            let v = sq(node(k));
            if v < best_val {
                best = k;
                best_val = v;
            }
        }
        let mut lo = node(best.saturating_sub(1));
        let mut hi = node((best + 1).min(N));
        let bracket = hi - lo;
        let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = hi - inv_phi * (hi - lo);
        let mut d = lo + inv_phi * (hi - lo);
        let (mut fc, mut fd) = (sq(c), sq(d));
        while hi - lo > 1e-15 * end.max(1e-300) {
            if fc < fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - inv_phi * (hi - lo);
                fc = sq(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + inv_phi * (hi - lo);
                fd = sq(d);
            }
        }
        let mut s = 0.5 * (lo + hi);
        // golden section only locates the foot to ~sqrt(eps); polish with Newton
        if s > 0.0 && s < end {
            for _ in 0..8 {
                let p = profile_unchecked(s, self.h, self.alpha);
                let Some(k) = p.curvature.finite() else { break };
                let dz = p.value - x3;
                let f = (s - r) + dz * p.slope;
                let df = 1.0 + p.slope * p.slope + dz * k;
                if df <= 0.0 {
                    break;
                }
                let next = s - f / df;
                if !(next > 0.0 && next < end) || (next - s).abs() > bracket {
                    break;
                }
                let done = (next - s).abs() <= 4.0 * f64::EPSILON * s;
                s = next;
                if done {
                    break;
                }
            }
        }
        for cand in [0.0, end] {
            if sq(cand) < sq(s) {
                s = cand;
            }
        }

        let prof = profile_unchecked(s, self.h, self.alpha);
        let (fr, fz) = (r - s, x3 - prof.value);
        let value = fr.hypot(fz);
        let grad = [fr / value, fz / value];
        let norm = (1.0 + prof.slope * prof.slope).sqrt();
        let tau = [1.0 / norm, prof.slope / norm];
        let coeff = match prof.curvature.finite() {
            Some(k) => {
                let kappa = k / (norm * norm * norm);
                kappa / (1.0 + kappa * value)
            }
            None => 1.0 / value,
        };
        Distance {
            value,
            grad,
            hess: [
                [coeff * tau[0] * tau[0], coeff * tau[0] * tau[1]],
                [coeff * tau[0] * tau[1], coeff * tau[1] * tau[1]],
            ],
        }
    }
}

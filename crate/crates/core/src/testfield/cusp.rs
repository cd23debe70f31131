use super::{phi_shape, FieldSample};
use crate::error::{Error, Result};
use crate::geometry::{profile_unchecked, CuspGeometry, GapPoint};

/// Closed-form test field inside the (closed) cusp region.
pub fn eval_cusp_field(point: GapPoint, h: f64, geom: &CuspGeometry) -> Result<FieldSample> {
    if !geom.in_cusp_closure(point, h)? {
        return Err(Error::OutsideCusp {
            r: point.r,
            x3: point.x3,
        });
    }
    Ok(cusp_field_unchecked(point.r, point.x3, h, geom.alpha()))
}

/// The cusp formulas without any region or admissibility check.
///
/// The expressions are polynomial in `t = x3 / psi`, so they extend smoothly past
/// the cusp boundaries; this is what finite-difference probes rely on. Requires
/// `r >= 0` and `psi(r) > 0`.
///
/// With `a = psi'/psi`, `G(t) = t Phi'(t)`:
///
/// ```text
/// w_r    = -(r/2) Phi' / psi
/// w_3    = Phi - (r/2) a G
/// dr w_r = -Phi'/(2 psi) + (r/2) a (t Phi'' + Phi') / psi
/// d3 w_r = -(r/2) Phi'' / psi^2
/// dr w_3 = -(3/2) a G - (r a')/2 G + (r/2) a^2 t G'
/// d3 w_3 = (Phi' - (r/2) a G') / psi
/// w_r/r  = -Phi' / (2 psi)
/// dh w_r = r (t Phi'' + Phi') / (2 psi^2)
/// dh w_3 = (-G + (r/2) a (G + t G')) / psi
/// ```
///
/// where `r a' = r psi''/psi - r a^2` is finite at `r = 0`.
pub fn cusp_field_unchecked(r: f64, x3: f64, h: f64, alpha: f64) -> FieldSample {
    let prof = profile_unchecked(r, h, alpha);
    let psi = prof.value;
    let a = prof.slope / psi;
    let r_da = prof.r_curvature / psi - r * a * a;
    let t = x3 / psi;

    let shape = phi_shape(t);
    let (p0, p1, p2) = (shape.value, shape.first, shape.second);
    let g = t * p1;
    let g1 = 12.0 * t - 18.0 * t * t;
    let half_r = 0.5 * r;

    let wr_over_r = -0.5 * p1 / psi;
    FieldSample {
        w_r: -half_r * p1 / psi,
        w_3: p0 - half_r * a * g,
        dr_wr: wr_over_r + half_r * a * (t * p2 + p1) / psi,
        d3_wr: -half_r * p2 / (psi * psi),
        dr_w3: -1.5 * a * g - 0.5 * r_da * g + half_r * a * a * t * g1,
        d3_w3: (p1 - half_r * a * g1) / psi,
        wr_over_r,
        dh_wr: half_r * (t * p2 + p1) / (psi * psi),
        dh_w3: (-g + half_r * a * (g + t * g1)) / psi,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn geom() -> CuspGeometry {
        CuspGeometry::new(0.3, 0.3, 0.25).unwrap()
    }

    #[test]
    fn body_trace_is_vertical_unit() {
        let g = geom();
        let h = 1e-3;
        for i in 0..=200 {
            let r = g.r0() * i as f64 / 200.0;
            let top = g.psi(r, h).unwrap().value;
            let s = eval_cusp_field(GapPoint::new(r, top), h, &g).unwrap();
            assert!(s.w_r.abs() <= 1e-12, "r={r}");
            assert!((s.w_3 - 1.0).abs() <= 1e-12, "r={r}");
        }
    }

    #[test]
    fn wall_trace_vanishes() {
        let g = geom();
        let h = 1e-3;
        for i in 0..=200 {
            let r = g.r0() * i as f64 / 200.0;
            let s = eval_cusp_field(GapPoint::new(r, 0.0), h, &g).unwrap();
            assert_eq!(s.w_r, 0.0);
            assert_eq!(s.w_3, 0.0);
            assert_eq!(s.d3_w3, 0.0);
        }
    }

    #[test]
    fn axis_limit() {
        let g = geom();
        let h = 1e-3;
        let x3 = 0.4 * h;
        let s = eval_cusp_field(GapPoint::new(0.0, x3), h, &g).unwrap();
        let p1 = phi_shape(x3 / h).first;
        assert_eq!(s.w_r, 0.0);
        assert!((s.wr_over_r + 0.5 * p1 / h).abs() < 1e-12 * p1 / h);
        // approaches the limit continuously
        let near = eval_cusp_field(GapPoint::new(1e-9, x3), h, &g).unwrap();
        assert!((near.wr_over_r - s.wr_over_r).abs() < 1e-6 * s.wr_over_r.abs());
        assert!(s.divergence().abs() <= 1e-12 * s.divergence_scale());
    }

    #[test]
    fn outside_points_rejected() {
        let g = geom();
        let h = 1e-3;
        let err = eval_cusp_field(GapPoint::new(0.1, 0.5), h, &g).unwrap_err();
        assert!(matches!(err, Error::OutsideCusp { .. }));
        assert!(eval_cusp_field(GapPoint::new(0.1, 0.0), 1.0, &g).is_err());
    }

    fn fd_sample(r: f64, x3: f64, h: f64, alpha: f64) -> FieldSample {
        let psi = profile_unchecked(r, h, alpha).value;
        let step = 1e-6 * psi;
        let dr = step.min(0.5 * r);
        let f = |r: f64, x3: f64, h: f64| cusp_field_unchecked(r, x3, h, alpha);
        let (rp, rm) = (f(r + dr, x3, h), f(r - dr, x3, h));
        let (zp, zm) = (f(r, x3 + step, h), f(r, x3 - step, h));
        let dh = 1e-6 * psi;
        let (hp, hm) = (f(r, x3, h + dh), f(r, x3, h - dh));
        let base = f(r, x3, h);
        FieldSample {
            w_r: base.w_r,
            w_3: base.w_3,
            dr_wr: (rp.w_r - rm.w_r) / (2.0 * dr),
            d3_wr: (zp.w_r - zm.w_r) / (2.0 * step),
            dr_w3: (rp.w_3 - rm.w_3) / (2.0 * dr),
            d3_w3: (zp.w_3 - zm.w_3) / (2.0 * step),
            wr_over_r: base.w_r / r,
            dh_wr: (hp.w_r - hm.w_r) / (2.0 * dh),
            dh_w3: (hp.w_3 - hm.w_3) / (2.0 * dh),
        }
    }

    fn assert_close_to_fd(r: f64, x3: f64, h: f64, alpha: f64) {
        let an = cusp_field_unchecked(r, x3, h, alpha);
        let fd = fd_sample(r, x3, h, alpha);
        let grad_scale = an.gradient_norm().max(1.0);
        let dh_scale = an.h_derivative_norm().max(1.0);
        let pairs = [
            (an.dr_wr, fd.dr_wr, grad_scale),
            (an.d3_wr, fd.d3_wr, grad_scale),
            (an.dr_w3, fd.dr_w3, grad_scale),
            (an.d3_w3, fd.d3_w3, grad_scale),
            (an.wr_over_r, fd.wr_over_r, grad_scale),
            (an.dh_wr, fd.dh_wr, dh_scale),
            (an.dh_w3, fd.dh_w3, dh_scale),
        ];
        for (i, (a, b, scale)) in pairs.into_iter().enumerate() {
            assert!(
                (a - b).abs() <= 1e-5 * scale,
                "entry {i}: analytic {a} vs fd {b} at r={r} x3={x3} h={h} alpha={alpha}"
            );
        }
    }

    #[test]
    fn reference_point_matches_finite_differences() {
        let (r, h, alpha) = (0.01, 1e-3, 0.3);
        let psi = profile_unchecked(r, h, alpha).value;
        let s = cusp_field_unchecked(r, 0.5 * psi, h, alpha);
        assert!(s.divergence().abs() <= 1e-12 * s.divergence_scale());
        assert_close_to_fd(r, 0.5 * psi, h, alpha);
    }

    #[test]
    fn random_points_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let alpha = rng.gen_range(0.05..=1.0);
            let h = 10f64.powf(rng.gen_range(-6.0..-1.0));
            let r = rng.gen_range(1e-4..0.5);
            let t: f64 = rng.gen_range(0.0..=1.0);
            let psi = profile_unchecked(r, h, alpha).value;
            let s = cusp_field_unchecked(r, t * psi, h, alpha);
            assert!(s.divergence().abs() <= 1e-12 * s.divergence_scale());
            assert_close_to_fd(r, t * psi, h, alpha);
        }
    }
}

//! The divergence-free test field `w_h = curl(phi_h e_theta)`.
//!
//! In cylindrical coordinates `w_h = -d3 phi e_r + (1/r) dr(r phi) e_3`. Inside the
//! cusp the stream function is `(r/2) Phi(x3 / psi(r))` with the shape cubic
//! `Phi(t) = t^2 (3 - 2t)`, and every component is evaluated in closed form.
//! Away from the cusp the stream function is blended with smooth cutoffs.

mod body;
mod cusp;
mod global;
mod jet;

use serde::Serialize;

pub use body::ReferenceBody;
pub use cusp::{cusp_field_unchecked, eval_cusp_field};
pub use global::{eval_global_field, CutoffConfig};

/// The shape cubic `Phi(t) = 3t^2 - 2t^3` with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapePolynomial {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

pub fn phi_shape(t: f64) -> ShapePolynomial {
    ShapePolynomial {
        value: t * t * (3.0 - 2.0 * t),
        first: 6.0 * t * (1.0 - t),
        second: 6.0 - 12.0 * t,
    }
}

/// Test field, its gradient and its `h`-derivative at one point.
///
/// The gradient of an axisymmetric field `w_r e_r + w_3 e_3` has the five
/// independent entries `dr_wr, d3_wr, dr_w3, d3_w3` and the hoop entry `w_r / r`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FieldSample {
    pub w_r: f64,
    pub w_3: f64,
    pub dr_wr: f64,
    pub d3_wr: f64,
    pub dr_w3: f64,
    pub d3_w3: f64,
    pub wr_over_r: f64,
    pub dh_wr: f64,
    pub dh_w3: f64,
}

impl FieldSample {
    pub(crate) fn rigid_lift() -> Self {
        Self {
            w_3: 1.0,
            ..Self::default()
        }
    }

    pub fn divergence(&self) -> f64 {
        self.dr_wr + self.wr_over_r + self.d3_w3
    }

    /// Sum of the magnitudes entering the divergence, used to scale its residual.
    pub fn divergence_scale(&self) -> f64 {
        self.dr_wr.abs() + self.wr_over_r.abs() + self.d3_w3.abs()
    }

    pub fn magnitude(&self) -> f64 {
        self.w_r.hypot(self.w_3)
    }

    /// Frobenius norm of the Cartesian velocity gradient.
    pub fn gradient_norm(&self) -> f64 {
        (self.dr_wr * self.dr_wr
            + self.d3_wr * self.d3_wr
            + self.dr_w3 * self.dr_w3
            + self.d3_w3 * self.d3_w3
            + self.wr_over_r * self.wr_over_r)
            .sqrt()
    }

    pub fn h_derivative_norm(&self) -> f64 {
        self.dh_wr.hypot(self.dh_w3)
    }

    /// The nine entries in declaration order.
    pub fn entries(&self) -> [f64; 9] {
        [
            self.w_r,
            self.w_3,
            self.dr_wr,
            self.d3_wr,
            self.dr_w3,
            self.d3_w3,
            self.wr_over_r,
            self.dh_wr,
            self.dh_w3,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_cubic_values() {
        assert_eq!(phi_shape(0.0), ShapePolynomial { value: 0.0, first: 0.0, second: 6.0 });
        assert_eq!(phi_shape(1.0), ShapePolynomial { value: 1.0, first: 0.0, second: -6.0 });
        assert_eq!(phi_shape(0.5), ShapePolynomial { value: 0.5, first: 1.5, second: 0.0 });
    }

    #[test]
    fn shape_cubic_derivatives() {
        for i in 0..=20 {
            let t = -0.5 + 0.1 * i as f64;
            let d = 1e-6;
            let p = phi_shape(t);
            let fd1 = (phi_shape(t + d).value - phi_shape(t - d).value) / (2.0 * d);
            let fd2 = (phi_shape(t + d).first - phi_shape(t - d).first) / (2.0 * d);
            assert!((fd1 - p.first).abs() < 1e-8);
            assert!((fd2 - p.second).abs() < 1e-8);
        }
    }
}

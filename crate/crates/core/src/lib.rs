//! Numerical laboratory for finite-time contact of a rough body falling onto a wall
//! through a compressible fluid.
//!
//! * [`geometry`]: the cusp gap profile `h + r^(1+alpha)`.
//! * [`testfield`]: the divergence-free test field and its derivatives.
//! * [`quadrature`]: singular integrals over the cusp and `h`-sweep exponent fits.
//! * [`certify`]: energy constants, exponent thresholds and the collision certificate.
//! * [`lubrication`]: reduced gap dynamics with power-law drag.

// `!(x > 0.0)` is used on purpose so that NaN takes the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod error;
pub mod geometry;
pub mod lubrication;
pub mod quadrature;
pub mod testfield;

pub use error::{Error, Result};
pub use geometry::{CuspGeometry, GapPoint};
pub use lubrication::{FallConfig, FallTrajectory, FallVerdict, Mode};
pub use quadrature::{NormSweep, QuadratureConfig, Quantity, Verdict};
pub use testfield::{CutoffConfig, FieldSample};

//! Energy constants, per-term exponent thresholds and the sufficient collision
//! inequality, plus the distance guarantee for a body held by a spring–damper.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::geometry::CuspGeometry;
use crate::quadrature::{lp_norm, QuadratureConfig, Quantity};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Adiabatic exponent of the pressure law `p = rho^gamma`.
    pub gamma: f64,
    pub mu: f64,
    pub lambda: f64,
    pub g: f64,
    pub rho_s: f64,
    pub m: f64,
    pub diam_omega: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.gamma > 1.5 && self.gamma.is_finite(), "gamma", self.gamma, "must exceed 3/2")?;
        ensure(self.mu > 0.0, "mu", self.mu, "must be positive")?;
        ensure(
            2.0 * self.mu + 3.0 * self.lambda >= 0.0,
            "lambda",
            self.lambda,
            "need 2 mu + 3 lambda >= 0",
        )?;
        ensure(self.g > 0.0 && self.g.is_finite(), "g", self.g, "must be positive")?;
        ensure(self.rho_s > 0.0, "rho_s", self.rho_s, "must be positive")?;
        ensure(self.m > 0.0 && self.m.is_finite(), "m", self.m, "must be positive")?;
        ensure(self.diam_omega > 0.0, "diam_omega", self.diam_omega, "must be positive")
    }
}

/// Initial vertical speed of the solid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolidSpeed {
    Fixed { v0: f64 },
    /// `v0 = c / sqrt(m)`, which keeps the solid kinetic energy `c^2 / 2` fixed.
    MassScaled { c: f64 },
}

impl SolidSpeed {
    pub fn at_mass(&self, m: f64) -> f64 {
        match *self {
            SolidSpeed::Fixed { v0 } => v0,
            SolidSpeed::MassScaled { c } => c / m.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    /// Fluid kinetic energy `int |q0|^2 / (2 rho0)`.
    pub kinetic_fluid: f64,
    /// Pressure potential `int rho0^gamma / (gamma - 1)`.
    pub pressure_potential: f64,
    pub v0: SolidSpeed,
}

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        ensure(self.kinetic_fluid >= 0.0, "kinetic_fluid", self.kinetic_fluid, "must be non-negative")?;
        ensure(
            self.pressure_potential >= 0.0,
            "pressure_potential",
            self.pressure_potential,
            "must be non-negative",
        )?;
        match self.v0 {
            SolidSpeed::Fixed { v0 } => ensure(v0 >= 0.0 && v0.is_finite(), "v0", v0, "must be non-negative"),
            SolidSpeed::MassScaled { c } => ensure(c >= 0.0 && c.is_finite(), "v0.c", c, "must be non-negative"),
        }
    }
}

/// `C(gamma) = 2^(1/(gamma-1)) (2 - 2/gamma)^(gamma/(gamma-1))`, evaluated in logs
/// since both factors over- or underflow as `gamma -> 1`.
pub fn c_gamma(gamma: f64) -> Result<f64> {
    ensure(gamma > 1.0 && !gamma.is_nan(), "gamma", gamma, "must exceed 1")?;
    let k = 1.0 / (gamma - 1.0);
    let log = k * std::f64::consts::LN_2 + gamma * k * (2.0 - 2.0 / gamma).ln();
    let c = log.exp();
    debug_assert!(c <= 3.0, "C({gamma}) = {c}");
    Ok(c)
}

/// `L = C(gamma) g^(gamma/(gamma-1)) diam^(gamma/(gamma-1) + 3)`.
pub fn l_const(g: f64, gamma: f64, diam_omega: f64) -> Result<f64> {
    ensure(g > 0.0, "g", g, "must be positive")?;
    ensure(diam_omega > 0.0, "diam_omega", diam_omega, "must be positive")?;
    let c = c_gamma(gamma)?;
    let k = gamma / (gamma - 1.0);
    Ok((c.ln() + k * g.ln() + (k + 3.0) * diam_omega.ln()).exp())
}

/// `E0 = kinetic_fluid + pressure_potential + m v0^2 / 2`.
pub fn initial_energy(data: &InitialData, m: f64) -> f64 {
    let v0 = data.v0.at_mass(m);
    data.kinetic_fluid + data.pressure_potential + 0.5 * m * v0 * v0
}

/// `sup |h'| <= sqrt(2 (E0 + L) / m)`.
pub fn hdot_bound(m: f64, e0: f64, l: f64) -> Result<f64> {
    ensure(m > 0.0, "m", m, "must be positive")?;
    ensure(e0 + l >= 0.0, "e0 + l", e0 + l, "must be non-negative")?;
    Ok((2.0 * (e0 + l) / m).sqrt())
}

/// Upper bounds on `alpha` under which each momentum term is controlled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TermThresholds {
    /// Convective term.
    pub i1: f64,
    /// Time-derivative term.
    pub i2: f64,
    /// Moving-domain term.
    pub i3: f64,
    /// Viscous term.
    pub i4: f64,
    /// Gravity term.
    pub i5: f64,
}

impl TermThresholds {
    pub fn min(&self) -> f64 {
        [self.i1, self.i2, self.i3, self.i4, self.i5]
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn term_thresholds(gamma: f64) -> Result<TermThresholds> {
    ensure(gamma > 1.5 && !gamma.is_nan(), "gamma", gamma, "must exceed 3/2")?;
    Ok(TermThresholds {
        i1: 3.0 * (gamma - 3.0) / (4.0 * gamma + 3.0),
        i2: (3.0 * gamma - 3.0) / (gamma + 1.0),
        i3: 9.0 * (gamma - 2.0) / (7.0 * gamma + 6.0),
        i4: 1.0 / 3.0,
        i5: 3.0 - 3.0 / gamma,
    })
}

/// `min(1/3, 3(gamma-3)/(4gamma+3))` for `gamma > 3`, and 0 otherwise.
pub fn alpha_max(gamma: f64) -> Result<f64> {
    let t = term_thresholds(gamma)?;
    if gamma <= 3.0 {
        return Ok(0.0);
    }
    Ok(t.i4.min(t.i1))
}

/// Where the aggregate constant of the final inequality came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum C0Source {
    Input,
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollisionCertificate {
    pub gamma: f64,
    pub alpha: f64,
    pub thresholds: TermThresholds,
    pub alpha_max: f64,
    pub c_gamma: f64,
    pub l_const: f64,
    pub e0: f64,
    pub hdot_bound: f64,
    pub c0: f64,
    pub c0_source: C0Source,
    /// `C0 (1/m + m^(-1/2) + m^(-3/2)) (1 + (E0+L)^(1+1/gamma) + g (E0+L)^(1/gamma))`.
    pub lhs: f64,
    pub g: f64,
    /// `lhs < g`.
    pub satisfied: bool,
    /// `K / (g - K)` with `K = lhs`, from `g T <= K (1 + T)`; present iff satisfied.
    pub time_bound: Option<f64>,
    /// `gamma > 3` and `alpha < alpha_max`.
    pub applicable: bool,
    pub inapplicable_reason: Option<String>,
    /// `applicable && satisfied`.
    pub collision_certified: bool,
}

fn lhs_value(c0: f64, m: f64, g: f64, gamma: f64, e_total: f64) -> f64 {
    let mass = 1.0 / m + m.powf(-0.5) + m.powf(-1.5);
    let energy = 1.0 + e_total.powf(1.0 + 1.0 / gamma) + g * e_total.powf(1.0 / gamma);
    c0 * mass * energy
}

/// `K / (g - K)`, the bound on `T` implied by `g T <= K (1 + T)` when `K < g`.
pub fn time_bound(k: f64, g: f64) -> Option<f64> {
    (k < g).then(|| k / (g - k))
}

pub fn final_inequality(
    params: &PhysicalParams,
    data: &InitialData,
    alpha: f64,
    c0: f64,
) -> Result<CollisionCertificate> {
    certificate(params, data, alpha, c0, C0Source::Input)
}

fn certificate(
    params: &PhysicalParams,
    data: &InitialData,
    alpha: f64,
    c0: f64,
    c0_source: C0Source,
) -> Result<CollisionCertificate> {
    params.validate()?;
    data.validate()?;
    ensure(alpha > 0.0 && alpha <= 1.0, "alpha", alpha, "must lie in (0, 1]")?;
    ensure(c0 > 0.0 && c0.is_finite(), "c0", c0, "must be positive")?;
    let gamma = params.gamma;
    let thresholds = term_thresholds(gamma)?;
    let amax = alpha_max(gamma)?;
    let c = c_gamma(gamma)?;
    let l = l_const(params.g, gamma, params.diam_omega)?;
    let e0 = initial_energy(data, params.m);
    let lhs = lhs_value(c0, params.m, params.g, gamma, e0 + l);
    let satisfied = lhs < params.g;
    let inapplicable_reason = if gamma <= 3.0 {
        Some(format!("gamma = {gamma} does not exceed 3"))
    } else if alpha >= amax {
        Some(format!("alpha = {alpha} is not below alpha_max = {amax}"))
    } else {
        None
    };
    let applicable = inapplicable_reason.is_none();
    Ok(CollisionCertificate {
        gamma,
        alpha,
        thresholds,
        alpha_max: amax,
        c_gamma: c,
        l_const: l,
        e0,
        hdot_bound: hdot_bound(params.m, e0, l)?,
        c0,
        c0_source,
        lhs,
        g: params.g,
        satisfied,
        time_bound: time_bound(lhs, params.g),
        applicable,
        inapplicable_reason,
        collision_certified: applicable && satisfied,
    })
}

/// Lower and upper ends of the mass search.
pub const MASS_RANGE: (f64, f64) = (1e-6, 1e12);

/// Smallest mass in [`MASS_RANGE`] for which the final inequality holds.
///
/// Needs the solid kinetic energy to be independent of `m` (the mass-scaled
/// speed rule, or a zero fixed speed); then `lhs` is strictly decreasing in `m`.
pub fn mass_threshold(params: &PhysicalParams, data: &InitialData, c0: f64) -> Result<f64> {
    data.validate()?;
    ensure(c0 > 0.0 && c0.is_finite(), "c0", c0, "must be positive")?;
    if let SolidSpeed::Fixed { v0 } = data.v0 {
        if v0 != 0.0 {
            return Err(Error::MassThreshold(
                "needs the mass-scaled initial speed rule; with a fixed speed lhs need not be monotone in m",
            ));
        }
    }
    let at = |m: f64| -> Result<f64> {
        let p = PhysicalParams { m, ..*params };
        p.validate()?;
        let l = l_const(p.g, p.gamma, p.diam_omega)?;
        Ok(lhs_value(c0, m, p.g, p.gamma, initial_energy(data, m) + l))
    };
    let (mut lo, mut hi) = MASS_RANGE;
    let g = params.g;
    if at(hi)? >= g {
        return Err(Error::MassThreshold("no mass up to 1e12 satisfies the inequality"));
    }
    if at(lo)? < g {
        return Err(Error::MassThreshold("the inequality already holds at the smallest mass 1e-6"));
    }
    while hi / lo - 1.0 > 1e-12 {
        let mid = (lo * hi).sqrt();
        if at(mid)? < g {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Outcome of the no-contact bound for a body held by a spring–damper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdGuarantee {
    /// `sqrt(2 C e / k_p)`, a bound on `|G1 - G(t)|`.
    pub displacement_bound: f64,
    /// `dist(G1) - 1 - displacement_bound` when positive.
    pub epsilon: Option<f64>,
    pub guaranteed: bool,
}

pub fn pd_guarantee(e_init: f64, k_p: f64, k_d: f64, dist_g1: f64, c_energy: f64) -> Result<PdGuarantee> {
    ensure(e_init >= 0.0 && e_init.is_finite(), "e_init", e_init, "must be non-negative")?;
    ensure(k_p > 0.0, "k_p", k_p, "must be positive")?;
    ensure(k_d >= 0.0, "k_d", k_d, "must be non-negative")?;
    ensure(dist_g1 > 1.0 && dist_g1.is_finite(), "dist_g1", dist_g1, "must exceed 1")?;
    ensure(c_energy > 0.0 && c_energy.is_finite(), "c_energy", c_energy, "must be positive")?;
    let displacement_bound = (2.0 * c_energy * e_init / k_p).sqrt();
    let eps = dist_g1 - 1.0 - displacement_bound;
    Ok(PdGuarantee {
        displacement_bound,
        epsilon: (eps > 0.0).then_some(eps),
        guaranteed: eps > 0.0,
    })
}

/// One test-field norm entering the momentum estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TermNorm {
    pub term: &'static str,
    pub quantity: Quantity,
    pub p: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalC0 {
    pub h_ref: f64,
    pub norms: Vec<TermNorm>,
    /// Sum of the norms, used as a proxy for the aggregate constant.
    pub c0: f64,
}

/// Test-field norms at the Lebesgue exponents the momentum estimates use, at a
/// reference gap `h_ref`. Their sum stands in for the unspecified constant.
pub fn empirical_c0(gamma: f64, geom: &CuspGeometry, h_ref: f64, cfg: &QuadratureConfig) -> Result<EmpiricalC0> {
    ensure(gamma > 3.0 && gamma.is_finite(), "gamma", gamma, "must exceed 3")?;
    let terms = [
        ("I1", Quantity::Gradient, 3.0 * gamma / (2.0 * gamma - 3.0)),
        ("I2", Quantity::Field, 2.0 * gamma / (gamma - 1.0)),
        ("I3", Quantity::HDerivative, 6.0 * gamma / (5.0 * gamma - 6.0)),
        ("I4", Quantity::Gradient, 2.0),
        ("I5", Quantity::Field, gamma / (gamma - 1.0)),
    ];
    let mut norms = Vec::with_capacity(terms.len());
    for (term, quantity, p) in terms {
        norms.push(TermNorm {
            term,
            quantity,
            p,
            value: lp_norm(quantity, p, h_ref, geom, cfg)?,
        });
    }
    let c0 = norms.iter().map(|n| n.value).sum();
    Ok(EmpiricalC0 { h_ref, norms, c0 })
}

/// [`final_inequality`] with the aggregate constant from [`empirical_c0`].
pub fn final_inequality_empirical(
    params: &PhysicalParams,
    data: &InitialData,
    geom: &CuspGeometry,
    h_ref: f64,
    cfg: &QuadratureConfig,
) -> Result<(CollisionCertificate, EmpiricalC0)> {
    params.validate()?;
    let emp = empirical_c0(params.gamma, geom, h_ref, cfg)?;
    let cert = certificate(params, data, geom.alpha(), emp.c0, C0Source::Empirical)?;
    Ok((cert, emp))
}

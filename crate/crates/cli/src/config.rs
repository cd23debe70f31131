//! Run configuration: one JSON document, with dotted `key=value` overrides applied
//! before deserialization.

use std::path::Path;

use cusplab_core::certify::{InitialData, PhysicalParams};
use cusplab_core::lubrication::{FallConfig, Mode};
use cusplab_core::{CuspGeometry, CutoffConfig, QuadratureConfig, Quantity};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: Option<GeometrySection>,
    pub physics: Option<PhysicalParams>,
    pub initial: Option<InitialData>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    pub field: Option<FieldSection>,
    pub kernel: Option<KernelSection>,
    pub norms: Option<NormsSection>,
    pub certify: Option<CertifySection>,
    pub fall: Option<FallConfig>,
    pub dichotomy: Option<DichotomySection>,
    pub pd: Option<PdSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub alpha: f64,
    pub r0: f64,
    pub d0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// Points `0 <= r <= r0`, `0 <= x3 <= psi(r)`.
    Cusp,
    /// A rectangle of the half-space, evaluated with the blended field.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub h: f64,
    #[serde(default = "default_nr")]
    pub nr: usize,
    #[serde(default = "default_nx3")]
    pub nx3: usize,
    #[serde(default = "default_region")]
    pub region: Region,
    /// Extent of the global rectangle; defaults to `2 r0` by `2 d0`.
    pub r_max: Option<f64>,
    pub x3_max: Option<f64>,
    pub cutoffs: Option<CutoffConfig>,
}

fn default_nr() -> usize {
    41
}

fn default_nx3() -> usize {
    21
}

fn default_region() -> Region {
    Region::Cusp
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub p: f64,
    pub q: f64,
    /// Defaults to the geometry's `alpha`.
    pub alpha: Option<f64>,
    /// Defaults to the geometry's `r0`.
    pub r0: Option<f64>,
    pub h_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsSection {
    pub quantity: Quantity,
    pub p: f64,
    pub h_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    /// Defaults to the geometry's `alpha`.
    pub alpha: Option<f64>,
    /// Aggregate constant of the momentum estimates. When absent it is estimated
    /// from test-field norms at `h_ref`.
    pub c0: Option<f64>,
    pub h_ref: Option<f64>,
    #[serde(default)]
    pub mass_threshold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DichotomySection {
    pub alpha_grid: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub m: f64,
    #[serde(default = "one")]
    pub g: f64,
    #[serde(default = "one")]
    pub c_d: f64,
    #[serde(default = "one")]
    pub h0: f64,
    #[serde(default = "default_dichotomy_horizon")]
    pub t_max: f64,
    #[serde(default = "default_fall_tol")]
    pub tol: f64,
}

fn one() -> f64 {
    1.0
}

fn default_dichotomy_horizon() -> f64 {
    100.0
}

fn default_fall_tol() -> f64 {
    1e-9
}

impl DichotomySection {
    pub fn template(&self) -> FallConfig {
        FallConfig {
            tol: self.tol,
            mode: Mode::QuasiStatic,
            ..FallConfig::quasi_static(self.m, self.g, self.c_d, 1.0, self.h0, self.t_max)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdSection {
    pub e_init: f64,
    pub k_p: f64,
    pub k_d: f64,
    pub dist_g1: f64,
    pub c_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
}

/// Reads the config file and applies the overrides in order.
pub fn load(path: &Path, overrides: &[String]) -> Result<(RunConfig, Value), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    let mut doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("config {} is not valid JSON: {e}", path.display())))?;
    for item in overrides {
        apply_override(&mut doc, item)?;
    }
    let cfg: RunConfig =
        serde_json::from_value(doc.clone()).map_err(|e| CliError::Validation(format!("config: {e}")))?;
    Ok((cfg, doc))
}

/// Sets `a.b.c` to the value after `=`, parsed as JSON when possible and as a
/// string otherwise. Missing intermediate objects are created.
pub fn apply_override(doc: &mut Value, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Validation(format!("override {item:?} is not key=value")))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Validation(format!("override key {key:?} is malformed")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let map = match node {
            Value::Object(map) => map,
            _ => {
                let path = parts[..i].join(".");
                return Err(CliError::Validation(format!("override {key}: {path} is not an object")));
            }
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split always yields at least one part")
}

impl RunConfig {
    pub fn geometry(&self) -> Result<Option<CuspGeometry>, CliError> {
        self.geometry
            .map(|g| CuspGeometry::new(g.alpha, g.r0, g.d0))
            .transpose()
            .map_err(CliError::from)
    }

    /// Checks every section that is present, whatever the command.
    pub fn validate(&self) -> Result<(), CliError> {
        let geom = self.geometry()?;
        if let Some(p) = &self.physics {
            p.validate()?;
        }
        if let Some(d) = &self.initial {
            d.validate()?;
        }
        self.quadrature.validate()?;
        if let Some(f) = &self.field {
            let geom = geom.ok_or_else(|| missing("geometry", "field"))?;
            geom.check_gap(f.h)?;
            if f.nr < 2 || f.nx3 < 2 {
                return Err(CliError::Validation("field: nr and nx3 must be at least 2".into()));
            }
            if f.nr * f.nx3 > 4_000_000 {
                return Err(CliError::Validation("field: more than 4e6 grid points".into()));
            }
            for (name, v) in [("field.r_max", f.r_max), ("field.x3_max", f.x3_max)] {
                if let Some(v) = v {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(CliError::Validation(format!("{name} = {v} must be positive")));
                    }
                }
            }
            if let Some(c) = &f.cutoffs {
                c.validate(&geom)?;
            }
        }
        if let Some(f) = &self.fall {
            f.validate()?;
        }
        if let Some(d) = &self.dichotomy {
            d.template().validate()?;
        }
        if let Some(c) = &self.certify {
            match (c.c0, c.h_ref) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Validation("certify: give either c0 or h_ref, not both".into()))
                }
                (None, None) => return Err(CliError::Validation("certify: give c0 or h_ref".into())),
                (None, Some(h)) => {
                    let geom = geom.ok_or_else(|| missing("geometry", "certify.h_ref"))?;
                    geom.check_gap(h)?;
                    if let Some(a) = c.alpha {
                        if a != geom.alpha() {
                            return Err(CliError::Validation(format!(
                                "certify.alpha = {a} differs from geometry.alpha = {}; the estimated c0 uses the geometry",
                                geom.alpha()
                            )));
                        }
                    }
                }
                (Some(_), None) => {}
            }
        }
        Ok(())
    }
}

pub(crate) fn missing(section: &str, by: &str) -> CliError {
    CliError::Validation(format!("section {section} is required by {by}"))
}

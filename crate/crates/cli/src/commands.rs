//! One function per subcommand. Each returns the files to write, in memory, so
//! nothing touches the disk unless the whole computation succeeded.

use cusplab_core::certify::{
    final_inequality, final_inequality_empirical, mass_threshold, pd_guarantee, EmpiricalC0,
};
use cusplab_core::lubrication::{
    contact_dichotomy, default_alpha_grid, log_law_check, simulate_fall, FallVerdict, LogLawFit,
};
use cusplab_core::quadrature::{admissible_h_grid, default_h_grid, kernel_study, norm_sweep};
use cusplab_core::testfield::{eval_cusp_field, eval_global_field};
use cusplab_core::{CutoffConfig, FieldSample, GapPoint};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{missing, Region, RunConfig};
use crate::emit::{csv_bytes, json_bytes, to_canonical_value, Cell};
use crate::{CliError, Command, TOOL_VERSION};

pub type Files = Vec<(String, Vec<u8>)>;

/// Schema identifier for a command's JSON report.
pub fn schema_id(command: Command) -> String {
    format!("cusplab/{}/v1", command.name())
}

fn report<T: Serialize>(command: Command, digest: &str, payload: &T) -> Result<(String, Vec<u8>), CliError> {
    let value = to_canonical_value(&json!({
        "schema": schema_id(command),
        "command": command.name(),
        "input_digest": digest,
        "tool_version": TOOL_VERSION,
        "payload": to_canonical_value(payload)?,
    }))?;
    Ok((format!("{}.json", command.name()), json_bytes(&value)))
}

pub fn execute(command: Command, cfg: &RunConfig, digest: &str) -> Result<Files, CliError> {
    match command {
        Command::Field => field(cfg, digest),
        Command::Kernel => kernel(cfg, digest),
        Command::Norms => norms(cfg, digest),
        Command::Certify => certify(cfg, digest),
        Command::Fall => fall(cfg, digest),
        Command::Dichotomy => dichotomy(cfg, digest),
        Command::Pd => pd(cfg, digest),
    }
}

const FIELD_COLUMNS: [&str; 12] = [
    "r", "x3", "w_r", "w_3", "dr_wr", "d3_wr", "dr_w3", "d3_w3", "wr_over_r", "dh_wr", "dh_w3", "div",
];

fn field(cfg: &RunConfig, digest: &str) -> Result<Files, CliError> {
    let sec = cfg.field.ok_or_else(|| missing("field", "field"))?;
    let geom = cfg.geometry()?.ok_or_else(|| missing("geometry", "field"))?;
    let h = sec.h;
    let cutoffs = sec.cutoffs.unwrap_or_else(|| CutoffConfig::from_geometry(&geom));
    let r_max = match sec.region {
        Region::Cusp => geom.r0(),
        Region::Global => sec.r_max.unwrap_or(2.0 * geom.r0()),
    };
    let x3_max = sec.x3_max.unwrap_or(2.0 * geom.d0());
    let rows = (0..sec.nr)
        .into_par_iter()
        .map(|i| {
            let r = r_max * (i as f64 / (sec.nr - 1) as f64);
            let top = match sec.region {
                Region::Cusp => geom.psi(r, h)?.value,
                Region::Global => x3_max,
            };
            (0..sec.nx3)
                .map(|j| {
                    // the fraction first, so the last row lands exactly on psi(r)
                    let x3 = top * (j as f64 / (sec.nx3 - 1) as f64);
                    let p = GapPoint::new(r, x3);
                    let s = match sec.region {
                        Region::Cusp => eval_cusp_field(p, h, &geom)?,
                        Region::Global => eval_global_field(p, h, &geom, &cutoffs)?,
                    };
                    Ok((r, x3, s))
                })
                .collect::<cusplab_core::Result<Vec<(f64, f64, FieldSample)>>>()
        })
        .collect::<cusplab_core::Result<Vec<_>>>()?;
    let points: Vec<(f64, f64, FieldSample)> = rows.into_iter().flatten().collect();

    let mut max_div = 0.0f64;
    let mut max_rel_div = 0.0f64;
    let mut table = Vec::with_capacity(points.len());
    for (r, x3, s) in &points {
        let div = s.divergence();
        max_div = max_div.max(div.abs());
        if s.divergence_scale() > 0.0 {
            max_rel_div = max_rel_div.max(div.abs() / s.divergence_scale());
        }
        let mut row: Vec<Cell> = vec![Cell::from(*r), Cell::from(*x3)];
        row.extend(s.entries().iter().map(|v| Cell::from(*v)));
        row.push(Cell::from(div));
        table.push(row);
    }
    let payload = json!({
        "region": sec.region,
        "h": h,
        "alpha": geom.alpha(),
        "r0": geom.r0(),
        "d0": geom.d0(),
        "nr": sec.nr,
        "nx3": sec.nx3,
        "points": points.len(),
        "max_abs_divergence": max_div,
        "max_relative_divergence": max_rel_div,
        "cutoffs": match sec.region {
            Region::Cusp => Value::Null,
            Region::Global => serde_json::to_value(cutoffs).expect("plain struct"),
        },
    });
    Ok(vec![
        ("field.csv".into(), csv_bytes(&FIELD_COLUMNS, &table)),
        report(Command::Field, digest, &payload)?,
    ])
}

fn h_value_csv(h_grid: &[f64], values: &[f64]) -> Vec<u8> {
    let rows: Vec<Vec<Cell>> = h_grid
        .iter()
        .zip(values)
        .map(|(h, v)| vec![Cell::from(*h), Cell::from(*v)])
        .collect();
    csv_bytes(&["h", "value"], &rows)
}

fn kernel(cfg: &RunConfig, digest: &str) -> Result<Files, CliError> {
    let sec = cfg.kernel.as_ref().ok_or_else(|| missing("kernel", "kernel"))?;
    let alpha = match (sec.alpha, cfg.geometry) {
        (Some(a), _) => a,
        (None, Some(g)) => g.alpha,
        (None, None) => return Err(missing("geometry or kernel.alpha", "kernel")),
    };
    let r0 = match (sec.r0, cfg.geometry) {
        (Some(r), _) => r,
        (None, Some(g)) => g.r0,
        (None, None) => return Err(missing("geometry or kernel.r0", "kernel")),
    };
    let grid = sec.h_grid.clone().unwrap_or_else(default_h_grid);
    let study = kernel_study(sec.p, sec.q, alpha, r0, &grid, &cfg.quadrature)?;
    Ok(vec![
        ("kernel.csv".into(), h_value_csv(&study.h_grid, &study.values)),
        report(Command::Kernel, digest, &study)?,
    ])
}

fn norms(cfg: &RunConfig, digest: &str) -> Result<Files, CliError> {
    let sec = cfg.norms.as_ref().ok_or_else(|| missing("norms", "norms"))?;
    let geom = cfg.geometry()?.ok_or_else(|| missing("geometry", "norms"))?;
    let grid = sec.h_grid.clone().unwrap_or_else(|| admissible_h_grid(&geom));
    let sweep = norm_sweep(sec.quantity, sec.p, &geom, &grid, &cfg.quadrature)?;
    Ok(vec![
        ("norms.csv".into(), h_value_csv(&sweep.h_grid, &sweep.values)),
        report(Command::Norms, digest, &sweep)?,
    ])
}

#[derive(Serialize)]
struct CertifyPayload {
    certificate: cusplab_core::certify::CollisionCertificate,
    empirical_c0: Option<EmpiricalC0>,
    mass_threshold: Option<f64>,
}

fn certify(cfg: &RunConfig, digest: &str) -> Result<Files, CliError> {
    let sec = cfg.certify.ok_or_else(|| missing("certify", "certify"))?;
    let params = cfg.physics.ok_or_else(|| missing("physics", "certify"))?;
    let data = cfg.initial.ok_or_else(|| missing("initial", "certify"))?;
    let (certificate, empirical) = match (sec.c0, sec.h_ref) {
        (Some(c0), _) => {
            let alpha = match (sec.alpha, cfg.geometry) {
                (Some(a), _) => a,
                (None, Some(g)) => g.alpha,
                (None, None) => return Err(missing("geometry or certify.alpha", "certify")),
            };
            (final_inequality(&params, &data, alpha, c0)?, None)
        }
        (None, Some(h_ref)) => {
            let geom = cfg.geometry()?.ok_or_else(|| missing("geometry", "certify"))?;
            let (cert, emp) = final_inequality_empirical(&params, &data, &geom, h_ref, &cfg.quadrature)?;
            (cert, Some(emp))
        }
        (None, None) => return Err(CliError::Validation("certify: give c0 or h_ref".into())),
    };
    let mass_threshold = if sec.mass_threshold {
        Some(mass_threshold(&params, &data, certificate.c0)?)
    } else {
        None
    };
    let payload = CertifyPayload {
        certificate,
        empirical_c0: empirical,
        mass_threshold,
    };
    Ok(vec![report(Command::Certify, digest, &payload)?])
}

#[derive(Serialize)]
struct FallPayload {
    mode: cusplab_core::lubrication::Mode,
    beta: f64,
    verdict: FallVerdict,
    contact_time: Option<f64>,
    samples: usize,
    steps: usize,
    rejected_steps: usize,
    final_t: f64,
    final_h: f64,
    log_law: Option<LogLawFit>,
}

fn fall(cfg: &RunConfig, digest: &str) -> Result<Files, CliError> {
    let fc = cfg.fall.ok_or_else(|| missing("fall", "fall"))?;
    let traj = simulate_fall(&fc)?;
    let log_law = if fc.beta >= 1.0 && traj.verdict == FallVerdict::NoContactByHorizon {
        // too few samples for a fit is not an error for the run itself
        log_law_check(&traj, &fc).ok()
    } else {
        None
    };
    let last = traj.samples.last().copied().expect("a trajectory holds its initial sample");
    let rows: Vec<Vec<Cell>> = traj
        .samples
        .iter()
        .map(|s| vec![Cell::from(s.t), Cell::from(s.h), Cell::from(s.hdot)])
        .collect();
    let payload = FallPayload {
        mode: traj.mode,
        beta: traj.beta,
        verdict: traj.verdict,
        contact_time: traj.contact_time,
        samples: traj.samples.len(),
        steps: traj.steps,
        rejected_steps: traj.rejected_steps,
        final_t: last.t,
        final_h: last.h,
        log_law,
    };
    Ok(vec![
        ("fall.csv".into(), csv_bytes(&["t", "h", "hdot"], &rows)),
        report(Command::Fall, digest, &payload)?,
    ])
}

fn dichotomy(cfg: &RunConfig, digest: &str) -> Result<Files, CliError> {
    let sec = cfg.dichotomy.as_ref().ok_or_else(|| missing("dichotomy", "dichotomy"))?;
    let grid = sec.alpha_grid.clone().unwrap_or_else(default_alpha_grid);
    let rows = contact_dichotomy(&grid, &sec.template())?;
    let verdict = |v: FallVerdict| match v {
        FallVerdict::Contact => "CONTACT",
        FallVerdict::NoContactByHorizon => "NO_CONTACT_BY_HORIZON",
    };
    let table: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                Cell::from(r.alpha),
                Cell::from(r.beta),
                Cell::from(verdict(r.verdict)),
                Cell::from(r.contact_time),
            ]
        })
        .collect();
    let payload = json!({ "template": sec.template(), "rows": rows });
    Ok(vec![
        ("dichotomy.csv".into(), csv_bytes(&["alpha", "beta", "verdict", "contact_time"], &table)),
        report(Command::Dichotomy, digest, &payload)?,
    ])
}

fn pd(cfg: &RunConfig, digest: &str) -> Result<Files, CliError> {
    let sec = cfg.pd.ok_or_else(|| missing("pd", "pd"))?;
    let g = pd_guarantee(sec.e_init, sec.k_p, sec.k_d, sec.dist_g1, sec.c_energy)?;
    Ok(vec![report(Command::Pd, digest, &g)?])
}

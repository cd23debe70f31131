//! Globally adaptive 7/15-point Gauss–Kronrod integration over a list of segments.
//!
//! The cell with the largest error estimate is bisected until the summed error
//! drops below `rel_tol * |value|`. Refinement order and the final summation
//! order are fixed, so results are bit-reproducible.

// nodes and weights as tabulated, beyond f64 precision
#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

pub(crate) struct Segment<'a> {
    pub a: f64,
    pub b: f64,
    pub f: &'a dyn Fn(f64) -> f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Estimate {
    pub value: f64,
    pub error: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    segment: usize,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

struct Ranked {
    error: f64,
    index: usize,
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        // largest error first, earliest cell on ties
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.index.cmp(&self.index))
    }
}

/// One Gauss–Kronrod 15-point application with the QUADPACK error heuristic.
pub(crate) fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let abs_sum = abs_sum * half.abs();
    let asc = asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * abs_sum);
    }
    (value, err)
}

pub(crate) fn integrate(segments: &[Segment<'_>], rel_tol: f64, max_cells: usize) -> Result<Estimate> {
    let mut cells: Vec<Cell> = Vec::with_capacity(64);
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for (i, s) in segments.iter().enumerate() {
        if s.b <= s.a {
            continue;
        }
        let (value, error) = gk15(s.f, s.a, s.b);
        total += value;
        total_err += error;
        heap.push(Ranked {
            error,
            index: cells.len(),
        });
        cells.push(Cell {
            segment: i,
            a: s.a,
            b: s.b,
            value,
            error,
        });
    }

    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(failure(&cells, total, total_err));
        }
        if total_err <= rel_tol * total.abs() {
            break;
        }
        if cells.len() + 1 > max_cells {
            return Err(failure(&cells, total, total_err));
        }
        let Some(worst) = heap.pop() else { break };
        let cell = cells[worst.index];
        let mid = 0.5 * (cell.a + cell.b);
        if mid <= cell.a || mid >= cell.b {
            // cannot bisect further in floating point
            return Err(failure(&cells, total, total_err));
        }
        let f = segments[cell.segment].f;
        let (lv, le) = gk15(f, cell.a, mid);
        let (rv, re) = gk15(f, mid, cell.b);
        total += lv + rv - cell.value;
        total_err += le + re - cell.error;
        cells[worst.index] = Cell {
            b: mid,
            value: lv,
            error: le,
            ..cell
        };
        heap.push(Ranked {
            error: le,
            index: worst.index,
        });
        heap.push(Ranked {
            error: re,
            index: cells.len(),
        });
        cells.push(Cell {
            a: mid,
            value: rv,
            error: re,
            ..cell
        });
    }

    cells.sort_by(|x, y| x.segment.cmp(&y.segment).then(x.a.total_cmp(&y.a)));
    Ok(Estimate {
        value: cells.iter().map(|c| c.value).sum(),
        error: cells.iter().map(|c| c.error).sum(),
        cells: cells.len(),
    })
}

fn failure(cells: &[Cell], total: f64, total_err: f64) -> Error {
    let worst = cells
        .iter()
        .max_by(|x, y| x.error.total_cmp(&y.error))
        .copied()
        .unwrap_or(Cell {
            segment: 0,
            a: f64::NAN,
            b: f64::NAN,
            value: f64::NAN,
            error: f64::NAN,
        });
    Error::Quadrature {
        value: total,
        error: total_err,
        worst_a: worst.a,
        worst_b: worst.b,
        worst_error: worst.error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Estimate {
        integrate(&[Segment { a, b, f }], tol, 100_000).unwrap()
    }

    #[test]
    fn polynomial_is_exact() {
        let e = run(&|x: f64| x.powi(5) - 3.0 * x * x, 0.0, 2.0, 1e-12);
        assert!((e.value - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
        assert_eq!(e.cells, 1);
    }

    #[test]
    fn endpoint_singularity() {
        let e = run(&|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10);
        assert!((e.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn several_segments() {
        let f = |x: f64| x.exp();
        let g = |x: f64| x.cos();
        let e = integrate(
            &[Segment { a: 0.0, b: 1.0, f: &f }, Segment { a: 0.0, b: 1.0, f: &g }],
            1e-12,
            1000,
        )
        .unwrap();
        assert!((e.value - (1f64.exp() - 1.0 + 1f64.sin())).abs() < 1e-12);
    }

    #[test]
    fn cap_is_reported() {
        let f = |x: f64| if x > 0.3 { 1.0 } else { 0.0 };
        let err = integrate(&[Segment { a: 0.0, b: 1.0, f: &f }], 1e-15, 4).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }
}

//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! The interval is split into panels; the panel with the largest error
//! estimate is bisected until the summed estimate drops below the absolute
//! tolerance. Evaluation order is fixed, so results are deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Default absolute tolerance used throughout the crate.
pub const DEFAULT_ABS_TOL: f64 = 1e-10;

/// Maximum number of panels before giving up.
const MAX_PANELS: usize = 4096;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
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

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

/// One 15-point Kronrod pass. Returns (kronrod estimate, |kronrod - gauss|).
pub(crate) fn gauss_kronrod15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * sum;
        // odd Kronrod abscissae are the 7-point Gauss nodes
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrates `f` over `[lo, hi]` to absolute accuracy `abs_tol`.
///
/// Returns an [`Error::Integration`] carrying the residual estimate when the
/// panel budget is exhausted.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, abs_tol: f64) -> Result<f64> {
    if !(lo <= hi) {
        return Err(Error::param(format!("integration bounds out of order: [{lo}, {hi}]")));
    }
    if !(abs_tol > 0.0) {
        return Err(Error::param(format!("abs_tol must be positive, got {abs_tol}")));
    }
    if lo == hi {
        return Ok(0.0);
    }

    let (value, error) = gauss_kronrod15(&f, lo, hi);
    let mut total_err = error;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { lo, hi, value, error });

    loop {
        if total_err <= abs_tol {
            // the running sum drifts when errors span many magnitudes
            total_err = heap.iter().map(|p| p.error).sum();
            if total_err <= abs_tol {
                break;
            }
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if heap.len() + 1 >= MAX_PANELS || mid <= worst.lo || mid >= worst.hi {
            return Err(Error::Integration {
                lo,
                hi,
                residual: total_err.max(worst.error),
                evaluations: 15 * (2 * heap.len() + 1),
            });
        }
        let (lv, le) = gauss_kronrod15(&f, worst.lo, mid);
        let (rv, re) = gauss_kronrod15(&f, mid, worst.hi);
        total_err += le + re - worst.error;
        heap.push(Panel { lo: worst.lo, hi: mid, value: lv, error: le });
        heap.push(Panel { lo: mid, hi: worst.hi, value: rv, error: re });
    }

    // re-sum from the panels to shed accumulated update rounding
    let mut panels = heap.into_vec();
    panels.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    Ok(panels.iter().map(|p| p.value).sum())
}

//! Truncated continuous source densities.
//!
//! A [`SourceModel`] is a pdf restricted to a bounded interval and
//! renormalized to unit mass. Construction precomputes everything the other
//! modules need repeatedly: the maximum density, the differential entropy in
//! bits, the integral of `f log2^2 f`, the first two moments, and a tabulated
//! CDF used for inverse-transform sampling.

use std::f64::consts::{LOG2_E, PI};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_kronrod15, integrate, DEFAULT_ABS_TOL};
use crate::search::golden_section;

/// Number of equal-width panels in the tabulated CDF.
const CDF_PANELS: usize = 4096;

/// Truncated mass below which a source is rejected as degenerate.
const MIN_MASS: f64 = 1e-12;

/// Unnormalized density families.
#[derive(Clone)]
pub enum Family {
    Exponential { rate: f64 },
    Gaussian { mean: f64, std: f64 },
    Uniform,
    /// Any non-negative density; it is renormalized over the support.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Exponential { rate } => write!(f, "Exponential {{ rate: {rate} }}"),
            Family::Gaussian { mean, std } => write!(f, "Gaussian {{ mean: {mean}, std: {std} }}"),
            Family::Uniform => write!(f, "Uniform"),
            Family::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Family {
    fn raw_density(&self, x: f64) -> f64 {
        match self {
            Family::Exponential { rate } => rate * (-rate * x).exp(),
            Family::Gaussian { mean, std } => {
                let z = (x - mean) / std;
                (-0.5 * z * z).exp() / (std * (2.0 * PI).sqrt())
            }
            Family::Uniform => 1.0,
            Family::Custom(f) => f(x),
        }
    }

    /// Location of the untruncated mode, when known in closed form.
    fn mode(&self) -> Option<f64> {
        match self {
            Family::Exponential { .. } => Some(0.0),
            Family::Gaussian { mean, .. } => Some(*mean),
            Family::Uniform | Family::Custom(_) => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Family::Exponential { rate } if !(*rate > 0.0 && rate.is_finite()) => {
                Err(Error::param(format!("exponential rate must be positive, got {rate}")))
            }
            Family::Gaussian { std, .. } if !(*std > 0.0 && std.is_finite()) => {
                Err(Error::param(format!("gaussian std must be positive, got {std}")))
            }
            Family::Gaussian { mean, .. } if !mean.is_finite() => {
                Err(Error::param(format!("gaussian mean must be finite, got {mean}")))
            }
            _ => Ok(()),
        }
    }
}

/// A renormalized truncated pdf on a bounded interval.
///
/// Immutable after construction; clones share the CDF table.
#[derive(Debug, Clone)]
pub struct SourceModel {
    family: Family,
    support_lo: f64,
    support_hi: f64,
    /// Raw mass of the untruncated density over the support.
    mass: f64,
    max_density: f64,
    diff_entropy_bits: f64,
    log2sq_integral: f64,
    mean: f64,
    variance: f64,
    abs_tol: f64,
    cdf_table: Arc<Vec<f64>>,
}

impl SourceModel {
    /// Truncates `family` to `[lo, hi]` and renormalizes it.
    pub fn new(family: Family, lo: f64, hi: f64, abs_tol: f64) -> Result<Self> {
        family.validate()?;
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::param(format!("support must be finite, got [{lo}, {hi}]")));
        }
        if lo > hi {
            return Err(Error::param(format!("support interval is reversed: [{lo}, {hi}]")));
        }
        if lo == hi {
            return Err(Error::DegenerateSource(format!("empty support interval [{lo}, {hi}]")));
        }
        if !(abs_tol > 0.0) {
            return Err(Error::param(format!("abs_tol must be positive, got {abs_tol}")));
        }

        // Panel masses double as the normalizer, so the CDF ends at exactly 1.
        let width = (hi - lo) / CDF_PANELS as f64;
        let panel_tol = abs_tol / CDF_PANELS as f64;
        let mut cumulative = Vec::with_capacity(CDF_PANELS + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for k in 0..CDF_PANELS {
            let a = lo + k as f64 * width;
            let b = if k + 1 == CDF_PANELS { hi } else { lo + (k + 1) as f64 * width };
            let m = integrate(|x| family.raw_density(x).max(0.0), a, b, panel_tol)?;
            acc += m;
            cumulative.push(acc);
        }
        let mass = acc;
        if !(mass > MIN_MASS) || !mass.is_finite() {
            return Err(Error::DegenerateSource(format!(
                "truncated mass {mass:e} on [{lo}, {hi}] is too small"
            )));
        }
        for c in cumulative.iter_mut() {
            *c /= mass;
        }
        *cumulative.last_mut().unwrap() = 1.0;

        let mut model = SourceModel {
            family,
            support_lo: lo,
            support_hi: hi,
            mass,
            max_density: 0.0,
            diff_entropy_bits: 0.0,
            log2sq_integral: 0.0,
            mean: 0.0,
            variance: 0.0,
            abs_tol,
            cdf_table: Arc::new(cumulative),
        };

        if let Family::Uniform = model.family {
            let w = hi - lo;
            model.max_density = 1.0 / w;
            model.diff_entropy_bits = w.log2();
            model.log2sq_integral = w.log2().powi(2);
            model.mean = 0.5 * (lo + hi);
            model.variance = w * w / 12.0;
            return Ok(model);
        }

        model.max_density = model.find_max_density();
        let diff_entropy_bits = -model.integrate_piecewise(|x| xlog2x(model.density(x)))?;
        let log2sq_integral = model.integrate_piecewise(|x| {
            let v = model.density(x);
            if v > 0.0 {
                v * v.log2().powi(2)
            } else {
                0.0
            }
        })?;
        let mean = model.integrate_piecewise(|x| x * model.density(x))?;
        let variance = model.integrate_piecewise(|x| (x - mean).powi(2) * model.density(x))?;
        model.diff_entropy_bits = diff_entropy_bits;
        model.log2sq_integral = log2sq_integral;
        model.mean = mean;
        model.variance = variance;
        Ok(model)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.support_lo, self.support_hi)
    }

    pub fn support_lo(&self) -> f64 {
        self.support_lo
    }

    pub fn support_hi(&self) -> f64 {
        self.support_hi
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// M, the maximum of the density over the support.
    pub fn max_density(&self) -> f64 {
        self.max_density
    }

    /// h(X) in bits.
    pub fn diff_entropy_bits(&self) -> f64 {
        self.diff_entropy_bits
    }

    /// The integral of `f log2^2 f` over the support.
    pub fn log2sq_integral(&self) -> f64 {
        self.log2sq_integral
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Integration tolerance the model was built with.
    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }

    /// The renormalized density; zero outside the support.
    pub fn density(&self, x: f64) -> f64 {
        if x < self.support_lo || x > self.support_hi {
            return 0.0;
        }
        self.family.raw_density(x).max(0.0) / self.mass
    }

    /// Integrates `g` over `[lo, hi]` at the model's tolerance.
    pub fn integrate<G: Fn(f64) -> f64>(&self, g: G, lo: f64, hi: f64) -> Result<f64> {
        integrate(g, lo, hi, self.abs_tol)
    }

    /// Integrates `g` over the whole support panel by panel.
    fn integrate_piecewise<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let panels = 16;
        let w = (self.support_hi - self.support_lo) / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let a = self.support_lo + k as f64 * w;
            let b = if k + 1 == panels { self.support_hi } else { a + w };
            total += integrate(&g, a, b, self.abs_tol / panels as f64)?;
        }
        Ok(total)
    }

    fn find_max_density(&self) -> f64 {
        let (lo, hi) = self.support();
        let seed = match self.family.mode() {
            Some(m) => m.clamp(lo, hi),
            None => {
                // coarse scan stands in for an analytic mode
                let n = 256;
                (0..=n)
                    .map(|k| lo + (hi - lo) * k as f64 / n as f64)
                    .fold((lo, f64::NEG_INFINITY), |best, x| {
                        let v = self.density(x);
                        if v > best.1 {
                            (x, v)
                        } else {
                            best
                        }
                    })
                    .0
            }
        };
        let half = 0.01 * (hi - lo);
        let a = (seed - half).max(lo);
        let b = (seed + half).min(hi);
        let r = golden_section(|x| -self.density(x), a, b, 1e-12 * (hi - lo));
        [-r.value, self.density(seed), self.density(lo), self.density(hi)]
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// F(x) of the truncated distribution.
    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let width = (hi - lo) / CDF_PANELS as f64;
        let k = (((x - lo) / width) as usize).min(CDF_PANELS - 1);
        let a = lo + k as f64 * width;
        (self.cdf_table[k] + self.partial_mass(a, x)).clamp(0.0, 1.0)
    }

    fn partial_mass(&self, a: f64, x: f64) -> f64 {
        if x <= a {
            return 0.0;
        }
        gauss_kronrod15(&|t| self.density(t), a, x).0
    }

    /// Returns x with F(x) = u, by safeguarded Newton iteration on the
    /// tabulated CDF. `u` is clamped to [0, 1].
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let (lo, hi) = self.support();
        let u = if u.is_nan() { 0.0 } else { u.clamp(0.0, 1.0) };
        if u <= 0.0 {
            return lo;
        }
        if u >= 1.0 {
            return hi;
        }
        let table = &self.cdf_table;
        // first panel whose right edge reaches u
        let k = table[1..].partition_point(|&c| c < u).min(CDF_PANELS - 1);
        let width = (hi - lo) / CDF_PANELS as f64;
        let mut a = lo + k as f64 * width;
        let mut b = if k + 1 == CDF_PANELS { hi } else { a + width };
        let base = table[k];
        let target = u - base;
        let panel_start = a;

        let mut x = a + (b - a) * (target / (table[k + 1] - base)).clamp(0.0, 1.0);
        for _ in 0..100 {
            let g = self.partial_mass(panel_start, x) - target;
            // the residual is at rounding level; further steps only chase noise
            if g.abs() <= 4.0 * f64::EPSILON * u {
                return x;
            }
            if g > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let d = self.density(x);
            let mut next = if d > 0.0 { x - g / d } else { f64::NAN };
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) || b - a <= f64::EPSILON * x.abs().max(1.0) {
                return next;
            }
            x = next;
        }
        x
    }
}

fn xlog2x(v: f64) -> f64 {
    if v > 0.0 {
        v * v.ln() * LOG2_E
    } else {
        0.0
    }
}

/// exp(`rate`) restricted to `[lo, hi]` and renormalized.
pub fn make_truncated_exponential(rate: f64, lo: f64, hi: f64) -> Result<SourceModel> {
    SourceModel::new(Family::Exponential { rate }, lo, hi, DEFAULT_ABS_TOL)
}

/// N(`mean`, `std`^2) restricted to `[lo, hi]` and renormalized.
pub fn make_truncated_gaussian(mean: f64, std: f64, lo: f64, hi: f64) -> Result<SourceModel> {
    SourceModel::new(Family::Gaussian { mean, std }, lo, hi, DEFAULT_ABS_TOL)
}

pub fn make_uniform_source(lo: f64, hi: f64) -> Result<SourceModel> {
    SourceModel::new(Family::Uniform, lo, hi, DEFAULT_ABS_TOL)
}

/// Free-function form of [`SourceModel::inverse_cdf`].
pub fn inverse_cdf_sample(model: &SourceModel, u: f64) -> f64 {
    model.inverse_cdf(u)
}

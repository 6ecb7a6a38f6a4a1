//! Sampling policies and the renewal-reward AoI formula.
//!
//! With i.i.d. service times L and a deterministic waiting time Z(L)
//! inserted after each delivery,
//!
//! ```text
//! AoI = E[(L + Z)^2] / (2 E[L + Z]) + E[L]
//! ```
//!
//! The optimizer searches the threshold family Z(l) = max(0, beta - l),
//! which contains zero-wait (beta <= ess inf L).

use serde::{Deserialize, Serialize};

use crate::coder::CodeLengths;
use crate::error::{Error, Result};
use crate::quantizer::entropy_bits;
use crate::search::golden_section;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplingPolicy {
    ZeroWait,
    Threshold { beta: f64 },
}

impl SamplingPolicy {
    /// Waiting time after a service of length `l`.
    pub fn waiting(&self, l: f64) -> f64 {
        match *self {
            SamplingPolicy::ZeroWait => 0.0,
            SamplingPolicy::Threshold { beta } => (beta - l).max(0.0),
        }
    }

    pub fn beta(&self) -> f64 {
        match *self {
            SamplingPolicy::ZeroWait => 0.0,
            SamplingPolicy::Threshold { beta } => beta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoIReport {
    pub aoi: f64,
    /// E[(L+Z)^2] / (2 E[L+Z]).
    pub second_moment_term: f64,
    /// E[L].
    pub mean_term: f64,
    /// (3/2) H of the cell distribution.
    pub lower_bound: f64,
    pub policy: SamplingPolicy,
}

/// Analytic AoI of `code` under `policy`.
pub fn aoi_analytic(probs: &[f64], code: &CodeLengths, policy: SamplingPolicy) -> Result<AoIReport> {
    if probs.len() != code.lengths.len() {
        return Err(Error::param(format!(
            "{} probabilities but {} lengths",
            probs.len(),
            code.lengths.len()
        )));
    }
    if let SamplingPolicy::Threshold { beta } = policy {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::param(format!("threshold must be finite and non-negative, got {beta}")));
        }
    }
    let mut mean_len = 0.0;
    let mut cycle = 0.0;
    let mut cycle_sq = 0.0;
    for (&p, &l) in probs.iter().zip(&code.lengths) {
        let y = l + policy.waiting(l);
        mean_len += p * l;
        cycle += p * y;
        cycle_sq += p * y * y;
    }
    if cycle <= 0.0 {
        return Err(Error::DegenerateAoi);
    }
    let second_moment_term = cycle_sq / (2.0 * cycle);
    Ok(AoIReport {
        aoi: second_moment_term + mean_len,
        second_moment_term,
        mean_term: mean_len,
        lower_bound: 1.5 * entropy_bits(probs),
        policy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroWaitCondition {
    Holds { margin: f64 },
    Violated { margin: f64 },
}

impl ZeroWaitCondition {
    pub fn holds(&self) -> bool {
        matches!(self, ZeroWaitCondition::Holds { .. })
    }

    /// ess inf L - E[L^2] / (2 E[L]).
    pub fn margin(&self) -> f64 {
        match *self {
            ZeroWaitCondition::Holds { margin } | ZeroWaitCondition::Violated { margin } => margin,
        }
    }
}

/// Zero-wait is optimal iff ess inf L >= E[L^2] / (2 E[L]).
pub fn zero_wait_condition(code: &CodeLengths) -> ZeroWaitCondition {
    let rhs = if code.mean_len > 0.0 {
        code.second_moment / (2.0 * code.mean_len)
    } else {
        0.0
    };
    let margin = code.ess_inf - rhs;
    if margin >= 0.0 {
        ZeroWaitCondition::Holds { margin }
    } else {
        ZeroWaitCondition::Violated { margin }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdOptimum {
    pub beta_star: f64,
    pub report: AoIReport,
    /// Upper end of the searched interval, max l + E[L].
    pub search_upper: f64,
}

/// Grid points used to bracket the minimum before golden-section refinement.
const BRACKET_GRID: usize = 256;

/// Minimizes the AoI over the threshold family on [0, max l + E[L]].
///
/// A coarse grid brackets the best threshold, golden-section refines it to
/// `tol`, and the zero-wait value is kept whenever it is no worse.
pub fn optimize_threshold(probs: &[f64], code: &CodeLengths, tol: f64) -> Result<ThresholdOptimum> {
    if !(tol > 0.0) {
        return Err(Error::param(format!("tol must be positive, got {tol}")));
    }
    let zero = aoi_analytic(probs, code, SamplingPolicy::ZeroWait)?;
    let max_len = code.lengths.iter().copied().fold(0.0, f64::max);
    let upper = max_len + code.mean_len;
    let eval = |beta: f64| {
        aoi_analytic(probs, code, SamplingPolicy::Threshold { beta })
            .map(|r| r.aoi)
            .unwrap_or(f64::INFINITY)
    };

    let step = upper / BRACKET_GRID as f64;
    let (mut best_k, mut best_v) = (0, f64::INFINITY);
    for k in 0..=BRACKET_GRID {
        let v = eval(k as f64 * step);
        if v < best_v {
            best_k = k;
            best_v = v;
        }
    }
    let a = best_k.saturating_sub(1) as f64 * step;
    let b = ((best_k + 1).min(BRACKET_GRID)) as f64 * step;
    let refined = golden_section(eval, a, b, tol);

    let mut candidates = vec![(best_k as f64 * step, best_v), (refined.x, refined.value)];
    candidates.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.total_cmp(&y.0)));
    let (beta, value) = candidates[0];

    if value >= zero.aoi {
        return Ok(ThresholdOptimum {
            beta_star: 0.0,
            report: zero,
            search_upper: upper,
        });
    }
    Ok(ThresholdOptimum {
        beta_star: beta,
        report: aoi_analytic(probs, code, SamplingPolicy::Threshold { beta })?,
        search_upper: upper,
    })
}

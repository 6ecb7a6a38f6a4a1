//! Codeword-length assignment for quantizer cells.
//!
//! All constructors take the probabilities of the cells that can occur
//! (strictly positive entries). Only lengths are produced; actual bit strings
//! exist for any assignment meeting the Kraft inequality.
//!
//! The AoI-optimal assignment minimizes the zero-wait objective
//! `J(L) = E[L^2] / (2 E[L]) + E[L]` over `sum 2^-l_i <= 1`. Because
//! `J(cL) = c J(L)`, any Kraft slack can be removed by shrinking all lengths,
//! so the optimum is Kraft-tight and the search runs over the probability
//! simplex with `l_i = -log2 q_i`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on the Kraft sum and on integer rounding.
pub const KRAFT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeKind {
    ShannonReal,
    ShannonInt,
    AoiOptReal,
    AoiOptInt,
    ConstReal,
    ConstInt,
}

impl CodeKind {
    pub const ALL: [CodeKind; 6] = [
        CodeKind::ShannonReal,
        CodeKind::ShannonInt,
        CodeKind::AoiOptReal,
        CodeKind::AoiOptInt,
        CodeKind::ConstReal,
        CodeKind::ConstInt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CodeKind::ShannonReal => "shannon_real",
            CodeKind::ShannonInt => "shannon_int",
            CodeKind::AoiOptReal => "aoi_opt_real",
            CodeKind::AoiOptInt => "aoi_opt_int",
            CodeKind::ConstReal => "const_real",
            CodeKind::ConstInt => "const_int",
        }
    }

    pub fn is_integer(self) -> bool {
        matches!(self, CodeKind::ShannonInt | CodeKind::AoiOptInt | CodeKind::ConstInt)
    }

    /// The real-valued code this integer code is the ceiling of.
    pub fn real_counterpart(self) -> CodeKind {
        match self {
            CodeKind::ShannonInt => CodeKind::ShannonReal,
            CodeKind::AoiOptInt => CodeKind::AoiOptReal,
            CodeKind::ConstInt => CodeKind::ConstReal,
            k => k,
        }
    }
}

impl std::str::FromStr for CodeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CodeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::param(format!("unknown code kind '{s}'")))
    }
}

/// Lengths aligned with the positive-probability cells, plus their moments.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeLengths {
    pub lengths: Vec<f64>,
    pub integer_valued: bool,
    pub kraft_sum: f64,
    pub mean_len: f64,
    pub second_moment: f64,
    /// Shortest length that occurs with positive probability.
    pub ess_inf: f64,
}

impl CodeLengths {
    pub fn new(probs: &[f64], lengths: Vec<f64>, integer_valued: bool) -> Result<Self> {
        let (mean_len, second_moment, ess_inf) = code_moments(probs, &lengths)?;
        Ok(CodeLengths {
            kraft_sum: kraft_sum(&lengths),
            lengths,
            integer_valued,
            mean_len,
            second_moment,
            ess_inf,
        })
    }

    /// Zero-wait AoI, `E[L^2]/(2E[L]) + E[L]`.
    pub fn zero_wait_objective(&self) -> f64 {
        objective_from_moments(self.mean_len, self.second_moment)
    }

    /// E[L^2] / E[L]^2.
    pub fn moment_ratio(&self) -> f64 {
        self.second_moment / (self.mean_len * self.mean_len)
    }
}

pub fn kraft_sum(lengths: &[f64]) -> f64 {
    lengths.iter().map(|&l| (-l).exp2()).sum()
}

fn objective_from_moments(mean: f64, second: f64) -> f64 {
    if mean == 0.0 {
        0.0
    } else {
        second / (2.0 * mean) + mean
    }
}

/// Zero-wait objective of an arbitrary length vector.
pub fn zero_wait_objective(probs: &[f64], lengths: &[f64]) -> Result<f64> {
    let (m, s, _) = code_moments(probs, lengths)?;
    Ok(objective_from_moments(m, s))
}

/// Returns `(E[L], E[L^2], ess inf L)`.
pub fn code_moments(probs: &[f64], lengths: &[f64]) -> Result<(f64, f64, f64)> {
    if probs.len() != lengths.len() {
        return Err(Error::param(format!(
            "{} probabilities but {} lengths",
            probs.len(),
            lengths.len()
        )));
    }
    let mut mean = 0.0;
    let mut second = 0.0;
    let mut ess_inf = f64::INFINITY;
    for (&p, &l) in probs.iter().zip(lengths) {
        mean += p * l;
        second += p * l * l;
        if p > 0.0 {
            ess_inf = ess_inf.min(l);
        }
    }
    if ess_inf == f64::INFINITY {
        ess_inf = 0.0;
    }
    Ok((mean, second, ess_inf))
}

fn validate_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::param("probability vector is empty"));
    }
    if let Some(p) = probs.iter().find(|&&p| !(p > 0.0 && p.is_finite())) {
        return Err(Error::param(format!(
            "probabilities must be positive and finite (zero cells removed), got {p}"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::param(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

fn ceil_snapped(l: f64, at_least_one: bool) -> f64 {
    let c = (l - KRAFT_SLACK).ceil().max(0.0);
    if at_least_one {
        c.max(1.0)
    } else {
        c
    }
}

/// `l_i = -log2 p_i`.
pub fn shannon_real(probs: &[f64]) -> Result<CodeLengths> {
    validate_probs(probs)?;
    let lengths = probs.iter().map(|&p| -p.log2()).collect();
    CodeLengths::new(probs, lengths, false)
}

/// `l_i = ceil(-log2 p_i)`.
pub fn shannon_integer(probs: &[f64]) -> Result<CodeLengths> {
    validate_probs(probs)?;
    let multi = probs.len() >= 2;
    let lengths = probs.iter().map(|&p| ceil_snapped(-p.log2(), multi)).collect();
    CodeLengths::new(probs, lengths, true)
}

/// Every cell gets `log2 N` bits, or `ceil(log2 N)` for integer codes.
///
/// Lengths are returned for all `levels`; with `probs` the moments are taken
/// against the given distribution, otherwise against the uniform one.
pub fn constant_length(levels: usize, integer_valued: bool) -> CodeLengths {
    let n = levels.max(1);
    let l = if integer_valued {
        ceil_snapped((n as f64).log2(), false)
    } else {
        (n as f64).log2()
    };
    let lengths = vec![l; n];
    CodeLengths {
        kraft_sum: kraft_sum(&lengths),
        lengths,
        integer_valued,
        mean_len: l,
        second_moment: l * l,
        ess_inf: l,
    }
}

/// Constant-length code aligned to a specific cell distribution.
pub fn constant_length_for(probs: &[f64], levels: usize, integer_valued: bool) -> Result<CodeLengths> {
    validate_probs(probs)?;
    if probs.len() > levels {
        return Err(Error::param(format!("{} cells exceed {levels} levels", probs.len())));
    }
    let l = constant_length(levels, integer_valued).lengths[0];
    CodeLengths::new(probs, vec![l; probs.len()], integer_valued)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative objective change at which a run stops.
    pub tol: f64,
    pub max_iters: usize,
    /// Extra starts from perturbed Shannon points.
    pub restarts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iters: 100_000,
            restarts: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverOutcome {
    pub code: CodeLengths,
    pub objective: f64,
    /// Iterations of the winning start.
    pub iterations: usize,
    /// max_i |g_i/q_i - sum g| / |sum g| at the returned point; zero at a KKT point.
    pub kkt_residual: f64,
}

struct Iterate {
    theta: Vec<f64>,
    lengths: Vec<f64>,
    q: Vec<f64>,
    objective: f64,
}

impl Iterate {
    fn from_theta(probs: &[f64], mut theta: Vec<f64>) -> Self {
        let max = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for t in theta.iter_mut() {
            *t -= max;
        }
        let lse = theta.iter().map(|t| t.exp()).sum::<f64>().ln();
        let lengths: Vec<f64> = theta.iter().map(|t| (lse - t) / LN_2).collect();
        let q = theta.iter().map(|t| (t - lse).exp()).collect();
        let (mut mean, mut second) = (0.0, 0.0);
        for (&p, &l) in probs.iter().zip(&lengths) {
            mean += p * l;
            second += p * l * l;
        }
        Iterate {
            theta,
            lengths,
            q,
            objective: objective_from_moments(mean, second),
        }
    }

    /// Scaled descent direction `(g_i/q_i - G)/ln 2` and the KKT residual.
    fn direction(&self, probs: &[f64]) -> (Vec<f64>, f64) {
        let (mut mean, mut second) = (0.0, 0.0);
        for (&p, &l) in probs.iter().zip(&self.lengths) {
            mean += p * l;
            second += p * l * l;
        }
        let c = 1.0 - second / (2.0 * mean * mean);
        let grad: Vec<f64> = probs.iter().zip(&self.lengths).map(|(&p, &l)| p * (l / mean + c)).collect();
        let total: f64 = grad.iter().sum();
        let scaled: Vec<f64> = grad.iter().zip(&self.q).map(|(g, q)| g / q).collect();
        let spread = scaled.iter().map(|s| (s - total).abs()).fold(0.0, f64::max);
        let residual = spread / total.abs().max(f64::MIN_POSITIVE);
        (scaled.iter().map(|s| (s - total) / LN_2).collect(), residual)
    }
}

/// Multiplicative-update descent on the simplex from one start.
fn descend(probs: &[f64], theta0: Vec<f64>, opts: &SolverOptions) -> (Iterate, usize, f64, bool) {
    let mut cur = Iterate::from_theta(probs, theta0);
    let mut step = 1.0;
    let mut residual = f64::INFINITY;
    for iter in 1..=opts.max_iters {
        let (dir, res) = cur.direction(probs);
        residual = res;
        let slope: f64 = -dir.iter().zip(&cur.q).map(|(d, q)| q * d * d).sum::<f64>();
        if slope == 0.0 || res <= 1e-13 {
            return (cur, iter, residual, true);
        }
        let mut accepted = None;
        for _ in 0..60 {
            let theta: Vec<f64> = cur.theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
            let cand = Iterate::from_theta(probs, theta);
            if cand.objective <= cur.objective + 1e-4 * step * slope {
                accepted = Some(cand);
                break;
            }
            step *= 0.5;
        }
        let Some(next) = accepted else {
            // no representable decrease left along the direction
            return (cur, iter, residual, residual <= opts.tol.sqrt());
        };
        let change = (cur.objective - next.objective).abs() / cur.objective.abs().max(f64::MIN_POSITIVE);
        cur = next;
        step = (step * 2.0).min(1e6);
        if change <= opts.tol && residual <= opts.tol.sqrt() {
            let (_, res) = cur.direction(probs);
            return (cur, iter, res, true);
        }
    }
    (cur, opts.max_iters, residual, false)
}

/// Real-valued AoI-optimal lengths with the default solver budget.
pub fn aoi_optimal_real(probs: &[f64], tol: f64) -> Result<CodeLengths> {
    aoi_optimal_real_with(
        probs,
        SolverOptions {
            tol,
            ..SolverOptions::default()
        },
    )
    .map(|o| o.code)
}

pub fn aoi_optimal_real_with(probs: &[f64], opts: SolverOptions) -> Result<SolverOutcome> {
    validate_probs(probs)?;
    if !(opts.tol > 0.0) {
        return Err(Error::param(format!("solver tol must be positive, got {}", opts.tol)));
    }
    if probs.len() == 1 {
        return Ok(SolverOutcome {
            code: CodeLengths::new(probs, vec![0.0], false)?,
            objective: 0.0,
            iterations: 0,
            kkt_residual: 0.0,
        });
    }

    let shannon: Vec<f64> = probs.iter().map(|p| p.ln()).collect();
    let mut best: Option<(Iterate, usize, f64, bool)> = None;
    for k in 0..=opts.restarts {
        let theta: Vec<f64> = shannon
            .iter()
            .enumerate()
            .map(|(j, t)| {
                if k == 0 {
                    *t
                } else {
                    // deterministic low-discrepancy perturbation
                    let phase = (k as f64 * 0.618_033_988_749_895 + j as f64 * 0.414_213_562_373_095).fract();
                    t + 0.5 * (2.0 * phase - 1.0)
                }
            })
            .collect();
        let run = descend(probs, theta, &opts);
        let better = match &best {
            None => true,
            Some(b) => (run.3 && !b.3) || (run.3 == b.3 && run.0.objective < b.0.objective),
        };
        if better {
            best = Some(run);
        }
    }
    let (it, iterations, residual, converged) = best.expect("at least one start");
    if !converged {
        return Err(Error::Solver {
            best: it.lengths,
            residual,
            iterations,
        });
    }
    let objective = it.objective;
    Ok(SolverOutcome {
        code: CodeLengths::new(probs, it.lengths, false)?,
        objective,
        iterations,
        kkt_residual: residual,
    })
}

/// Exhaustive search over Kraft-tight codes for at most three symbols.
///
/// Walks `q` over the simplex in steps of `step` with `l = -log2 q`, then
/// repeats on a 100x finer grid around the best point. Used to cross-check
/// [`aoi_optimal_real`]; the cost grows as `step^-(N-1)`.
pub fn grid_search_real(probs: &[f64], step: f64) -> Result<CodeLengths> {
    validate_probs(probs)?;
    if !(step > 0.0 && step < 0.5) {
        return Err(Error::param(format!("grid step must lie in (0, 0.5), got {step}")));
    }
    let n = probs.len();
    if n > 3 {
        return Err(Error::param(format!("grid search supports at most 3 symbols, got {n}")));
    }
    if n == 1 {
        return CodeLengths::new(probs, vec![0.0], false);
    }
    let eval = |q: &[f64]| -> f64 {
        let lengths: Vec<f64> = q.iter().map(|v| -v.log2()).collect();
        zero_wait_objective(probs, &lengths).unwrap_or(f64::INFINITY)
    };
    let scan = |center: &[f64], radius: f64, h: f64| -> (f64, Vec<f64>) {
        let mut best = (f64::INFINITY, center.to_vec());
        let lo0 = (center[0] - radius).max(h);
        let hi0 = (center[0] + radius).min(1.0 - h);
        let k0 = ((hi0 - lo0) / h).floor() as usize;
        for i in 0..=k0 {
            let a = lo0 + i as f64 * h;
            if n == 2 {
                let q = [a, 1.0 - a];
                let v = eval(&q);
                if v < best.0 {
                    best = (v, q.to_vec());
                }
                continue;
            }
            let lo1 = (center[1] - radius).max(h);
            let hi1 = (center[1] + radius).min(1.0 - a - h);
            if hi1 < lo1 {
                continue;
            }
            let k1 = ((hi1 - lo1) / h).floor() as usize;
            for j in 0..=k1 {
                let b = lo1 + j as f64 * h;
                let q = [a, b, 1.0 - a - b];
                let v = eval(&q);
                if v < best.0 {
                    best = (v, q.to_vec());
                }
            }
        }
        best
    };
    let uniform = vec![1.0 / n as f64; n];
    let (_, coarse) = scan(&uniform, 1.0, step);
    let (_, fine) = scan(&coarse, step, step / 100.0);
    CodeLengths::new(probs, fine.iter().map(|v| -v.log2()).collect(), false)
}

/// Ceiling of the real-valued AoI-optimal lengths.
pub fn aoi_optimal_integer(probs: &[f64], tol: f64) -> Result<CodeLengths> {
    let real = aoi_optimal_real(probs, tol)?;
    Ok(ceil_code(probs, &real))
}

/// Integer code obtained by rounding every length of `real` up.
pub fn ceil_code(probs: &[f64], real: &CodeLengths) -> CodeLengths {
    let multi = real.lengths.len() >= 2;
    let lengths = real.lengths.iter().map(|&l| ceil_snapped(l, multi)).collect();
    CodeLengths::new(probs, lengths, true).expect("lengths aligned with probs")
}

//! Scalar quantizers: uniform and Lloyd-Max.
//!
//! Cell integrals are always taken one cell at a time so no integration
//! panel straddles an endpoint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::source::SourceModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantizerKind {
    Uniform,
    LloydMax,
}

impl QuantizerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QuantizerKind::Uniform => "uniform",
            QuantizerKind::LloydMax => "lloyd_max",
        }
    }
}

impl std::str::FromStr for QuantizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(QuantizerKind::Uniform),
            "lloyd_max" => Ok(QuantizerKind::LloydMax),
            _ => Err(Error::param(format!("unknown quantizer kind '{s}'"))),
        }
    }
}

/// How the uniform quantizer chooses its representation points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepPoints {
    /// Conditional mean of each cell (MSE-optimal for the partition).
    #[default]
    Centroid,
    Midpoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerSpec {
    pub kind: QuantizerKind,
    /// a_0 < a_1 < ... < a_N, spanning the support.
    pub endpoints: Vec<f64>,
    pub reps: Vec<f64>,
    pub probs: Vec<f64>,
    /// Cell width for uniform quantizers.
    pub cell_size: Option<f64>,
    pub distortion: f64,
    pub entropy_bits: f64,
    pub levels: usize,
}

impl QuantizerSpec {
    /// Indices of cells with positive probability.
    pub fn active_cells(&self) -> Vec<usize> {
        (0..self.levels).filter(|&i| self.probs[i] > 0.0).collect()
    }

    /// Probabilities of the cells with positive probability, in cell order.
    pub fn active_probs(&self) -> Vec<f64> {
        self.probs.iter().copied().filter(|&p| p > 0.0).collect()
    }

    /// Index of the cell containing `x`. Interior endpoints belong to the
    /// cell on their right.
    pub fn cell_of(&self, x: f64) -> usize {
        let interior = &self.endpoints[1..self.levels];
        interior.partition_point(|&a| a <= x)
    }

    /// -log2(delta M), the high-resolution approximation of the shortest
    /// Shannon codeword. Uniform quantizers only.
    pub fn ess_inf_approx(&self, model: &SourceModel) -> Option<f64> {
        self.cell_size.map(|d| -(d * model.max_density()).log2())
    }
}

/// Entropy in bits of a probability vector, skipping zero entries.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

struct CellStats {
    prob: f64,
    first_moment: f64,
}

fn cell_stats(model: &SourceModel, a: f64, b: f64, tol: f64) -> Result<CellStats> {
    let prob = crate::quadrature::integrate(|x| model.density(x), a, b, tol)?;
    let first_moment = crate::quadrature::integrate(|x| x * model.density(x), a, b, tol)?;
    Ok(CellStats { prob, first_moment })
}

fn cell_distortion(model: &SourceModel, a: f64, b: f64, rep: f64, tol: f64) -> Result<f64> {
    crate::quadrature::integrate(|x| (x - rep).powi(2) * model.density(x), a, b, tol)
}

fn validate_partition(model: &SourceModel, endpoints: &[f64], reps: &[f64]) -> Result<()> {
    if endpoints.len() < 2 {
        return Err(Error::param("a partition needs at least two endpoints"));
    }
    if reps.len() + 1 != endpoints.len() {
        return Err(Error::param(format!(
            "{} endpoints need {} representation points, got {}",
            endpoints.len(),
            endpoints.len() - 1,
            reps.len()
        )));
    }
    if !endpoints.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::param("endpoints must be strictly increasing"));
    }
    let (lo, hi) = model.support();
    let slack = 1e-9 * (hi - lo);
    if (endpoints[0] - lo).abs() > slack || (endpoints[endpoints.len() - 1] - hi).abs() > slack {
        return Err(Error::param(format!(
            "endpoints must span the support [{lo}, {hi}], got [{}, {}]",
            endpoints[0],
            endpoints[endpoints.len() - 1]
        )));
    }
    Ok(())
}

/// MSE distortion of an arbitrary partition and representation points.
pub fn distortion_of(model: &SourceModel, endpoints: &[f64], reps: &[f64]) -> Result<f64> {
    validate_partition(model, endpoints, reps)?;
    let tol = model.abs_tol() / reps.len() as f64;
    let mut total = 0.0;
    for (i, &c) in reps.iter().enumerate() {
        total += cell_distortion(model, endpoints[i], endpoints[i + 1], c, tol)?;
    }
    Ok(total)
}

fn uniform_endpoints(model: &SourceModel, levels: usize) -> Vec<f64> {
    let (lo, hi) = model.support();
    let delta = (hi - lo) / levels as f64;
    let mut e: Vec<f64> = (0..=levels).map(|i| lo + i as f64 * delta).collect();
    e[levels] = hi;
    e
}

/// Fills in probabilities, reps, distortion and entropy for a partition.
fn evaluate_partition(
    model: &SourceModel,
    kind: QuantizerKind,
    endpoints: Vec<f64>,
    reps: RepPoints,
    cell_size: Option<f64>,
) -> Result<QuantizerSpec> {
    let levels = endpoints.len() - 1;
    let tol = model.abs_tol() / levels as f64;
    let mut probs = Vec::with_capacity(levels);
    let mut points = Vec::with_capacity(levels);
    let mut distortion = 0.0;
    for i in 0..levels {
        let (a, b) = (endpoints[i], endpoints[i + 1]);
        let stats = cell_stats(model, a, b, tol)?;
        let prob = stats.prob.max(0.0);
        let c = match reps {
            RepPoints::Centroid if prob > 0.0 => (stats.first_moment / prob).clamp(a, b),
            _ => 0.5 * (a + b),
        };
        distortion += cell_distortion(model, a, b, c, tol)?;
        probs.push(prob);
        points.push(c);
    }
    Ok(QuantizerSpec {
        kind,
        entropy_bits: entropy_bits(&probs),
        endpoints,
        reps: points,
        probs,
        cell_size,
        distortion,
        levels,
    })
}

/// N equal cells over the support with centroid representation points.
pub fn build_uniform(model: &SourceModel, levels: usize) -> Result<QuantizerSpec> {
    build_uniform_with(model, levels, RepPoints::Centroid)
}

pub fn build_uniform_with(model: &SourceModel, levels: usize, reps: RepPoints) -> Result<QuantizerSpec> {
    if levels < 1 {
        return Err(Error::param("levels must be at least 1"));
    }
    let (lo, hi) = model.support();
    let delta = (hi - lo) / levels as f64;
    evaluate_partition(model, QuantizerKind::Uniform, uniform_endpoints(model, levels), reps, Some(delta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LloydMaxOptions {
    /// Stop when the relative distortion change falls to this value.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for LloydMaxOptions {
    fn default() -> Self {
        LloydMaxOptions {
            tol: 1e-12,
            max_iters: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LloydMaxOutcome {
    pub spec: QuantizerSpec,
    pub iterations: usize,
    /// False when `max_iters` ran out first; the spec is still usable.
    pub converged: bool,
    /// Distortion after each centroid step; nonincreasing.
    pub distortion_history: Vec<f64>,
    /// Empty cells re-seeded by splitting the most probable cell.
    pub repaired_cells: usize,
    /// Coincident levels merged at convergence.
    pub merged_levels: usize,
}

/// Lloyd-Max iteration started from the uniform partition.
pub fn build_lloyd_max(model: &SourceModel, levels: usize, opts: LloydMaxOptions) -> Result<LloydMaxOutcome> {
    if levels < 1 {
        return Err(Error::param("levels must be at least 1"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::param(format!("tol must be positive, got {}", opts.tol)));
    }
    let tol = model.abs_tol() / levels as f64;
    let mut endpoints = uniform_endpoints(model, levels);
    let mut history: Vec<f64> = Vec::new();
    let mut repaired_cells = 0;
    let mut converged = false;
    let mut iterations = 0;

    let mut reps = vec![0.0; levels];

    while iterations < opts.max_iters {
        iterations += 1;

        // centroid step, re-seeding empty cells
        let mut k = 0;
        while k < levels {
            let stats = cell_stats(model, endpoints[k], endpoints[k + 1], tol)?;
            if stats.prob > 0.0 {
                reps[k] = (stats.first_moment / stats.prob).clamp(endpoints[k], endpoints[k + 1]);
                k += 1;
                continue;
            }
            if levels == 1 || !split_richest_cell(model, &mut endpoints, k, tol)? {
                // nothing splittable; keep the empty cell at its midpoint
                reps[k] = 0.5 * (endpoints[k] + endpoints[k + 1]);
                k += 1;
                continue;
            }
            repaired_cells += 1;
            k = 0;
        }

        let mut d = 0.0;
        for i in 0..levels {
            d += cell_distortion(model, endpoints[i], endpoints[i + 1], reps[i], tol)?;
        }
        let prev = history.last().copied();
        history.push(d);
        if let Some(p) = prev {
            if (p - d).abs() <= opts.tol * p.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
        if levels == 1 {
            converged = true;
            break;
        }

        // nearest-neighbour step
        for i in 1..levels {
            let mid = 0.5 * (reps[i - 1] + reps[i]);
            endpoints[i] = mid;
        }
    }

    // merge coincident levels that survived to convergence
    let (lo, hi) = model.support();
    let eps = 1e-12 * (hi - lo);
    let mut merged_levels = 0;
    let mut i = 1;
    while i < reps.len() {
        if (reps[i] - reps[i - 1]).abs() <= eps {
            reps.remove(i);
            endpoints.remove(i);
            merged_levels += 1;
        } else {
            i += 1;
        }
    }

    let mut spec = if merged_levels > 0 {
        evaluate_partition(model, QuantizerKind::LloydMax, endpoints, RepPoints::Centroid, None)?
    } else {
        let mut probs = Vec::with_capacity(levels);
        for i in 0..levels {
            probs.push(cell_stats(model, endpoints[i], endpoints[i + 1], tol)?.prob.max(0.0));
        }
        QuantizerSpec {
            kind: QuantizerKind::LloydMax,
            entropy_bits: entropy_bits(&probs),
            distortion: *history.last().expect("at least one iteration"),
            endpoints,
            reps,
            probs,
            cell_size: None,
            levels,
        }
    };
    spec.kind = QuantizerKind::LloydMax;

    Ok(LloydMaxOutcome {
        spec,
        iterations,
        converged,
        distortion_history: history,
        repaired_cells,
        merged_levels,
    })
}

/// Removes empty cell `empty` and splits the most probable other cell at its
/// centroid. Returns false when no cell can be split.
fn split_richest_cell(model: &SourceModel, endpoints: &mut Vec<f64>, empty: usize, tol: f64) -> Result<bool> {
    let levels = endpoints.len() - 1;
    let mut best: Option<(usize, f64, f64)> = None;
    for i in (0..levels).filter(|&i| i != empty) {
        let s = cell_stats(model, endpoints[i], endpoints[i + 1], tol)?;
        if s.prob > 0.0 && best.map_or(true, |(_, p, _)| s.prob > p) {
            best = Some((i, s.prob, s.first_moment / s.prob));
        }
    }
    let Some((richest, _, centroid)) = best else {
        return Ok(false);
    };
    if !(centroid > endpoints[richest] && centroid < endpoints[richest + 1]) {
        return Ok(false);
    }
    // drop the empty cell's right boundary (or left, for the last cell)
    let drop = if empty + 1 < levels { empty + 1 } else { empty };
    endpoints.remove(drop);
    let insert_at = endpoints.partition_point(|&a| a < centroid);
    endpoints.insert(insert_at, centroid);
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::{make_truncated_exponential, make_truncated_gaussian, make_uniform_source, Family};
    use std::sync::Arc;

    fn unit() -> SourceModel {
        make_uniform_source(0.0, 1.0).unwrap()
    }

    #[test]
    fn uniform_two_levels_on_flat_source() {
        let q = build_uniform(&unit(), 2).unwrap();
        assert!((q.probs[0] - 0.5).abs() < 1e-12 && (q.probs[1] - 0.5).abs() < 1e-12);
        assert_eq!(q.cell_size, Some(0.5));
        assert!((q.distortion - 1.0 / 48.0).abs() < 1e-12);
        assert!((q.entropy_bits - 1.0).abs() < 1e-12);
        assert!((q.reps[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn one_level_is_variance() {
        let q = build_uniform(&unit(), 1).unwrap();
        assert!((q.distortion - 1.0 / 12.0).abs() < 1e-12);
        assert_eq!(q.entropy_bits, 0.0);
    }

    #[test]
    fn zero_levels_rejected() {
        assert!(matches!(build_uniform(&unit(), 0), Err(Error::Parameter(_))));
        assert!(matches!(
            build_lloyd_max(&unit(), 0, LloydMaxOptions::default()),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn distortion_of_examples() {
        let s = unit();
        assert!((distortion_of(&s, &[0.0, 1.0], &[0.5]).unwrap() - 1.0 / 12.0).abs() < 1e-12);
        assert!((distortion_of(&s, &[0.0, 1.0], &[0.0]).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(matches!(
            distortion_of(&s, &[0.0, 0.7, 0.3, 1.0], &[0.1, 0.5, 0.9]),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(distortion_of(&s, &[0.0, 1.0], &[0.1, 0.2]), Err(Error::Parameter(_))));
    }

    #[test]
    fn spec_invariants_hold() {
        let s = make_truncated_exponential(1.0, 0.0, 15.0).unwrap();
        for n in [1, 2, 5, 32] {
            let q = build_uniform(&s, n).unwrap();
            assert!((q.probs.iter().sum::<f64>() - 1.0).abs() <= 10.0 * s.abs_tol());
            assert!(q.probs.iter().all(|&p| p >= 0.0));
            assert!(q.endpoints.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(q.endpoints[0], 0.0);
            assert_eq!(q.endpoints[n], 15.0);
            let d = distortion_of(&s, &q.endpoints, &q.reps).unwrap();
            assert!((d - q.distortion).abs() < 1e-10);
            assert!((q.entropy_bits - entropy_bits(&q.probs)).abs() < 1e-15);
            for (i, &c) in q.reps.iter().enumerate() {
                assert!(c >= q.endpoints[i] && c <= q.endpoints[i + 1]);
            }
        }
    }

    #[test]
    fn cell_lookup() {
        let q = build_uniform(&unit(), 4).unwrap();
        assert_eq!(q.cell_of(0.0), 0);
        assert_eq!(q.cell_of(0.25), 1);
        assert_eq!(q.cell_of(0.74), 2);
        assert_eq!(q.cell_of(1.0), 3);
    }

    #[test]
    fn exp_high_resolution_ratio_at_32() {
        let s = make_truncated_exponential(1.0, 0.0, 15.0).unwrap();
        let q = build_uniform(&s, 32).unwrap();
        let d = q.cell_size.unwrap();
        let r = 12.0 * q.distortion / (d * d);
        assert!((0.95..=1.05).contains(&r), "12D/delta^2 = {r}");
    }

    #[test]
    fn centroid_first_order_optimality() {
        let s = make_truncated_gaussian(0.0, 1.0, -5.0, 5.0).unwrap();
        let q = build_uniform(&s, 6).unwrap();
        let base = distortion_of(&s, &q.endpoints, &q.reps).unwrap();
        for i in 0..q.levels {
            for h in [-1e-3, 1e-3] {
                let mut r = q.reps.clone();
                r[i] += h;
                assert!(distortion_of(&s, &q.endpoints, &r).unwrap() >= base);
            }
        }
    }

    #[test]
    fn lloyd_max_flat_fixed_point() {
        let out = build_lloyd_max(&unit(), 2, LloydMaxOptions::default()).unwrap();
        assert!(out.converged);
        let q = out.spec;
        assert!((q.endpoints[1] - 0.5).abs() < 1e-12);
        assert!((q.reps[0] - 0.25).abs() < 1e-12 && (q.reps[1] - 0.75).abs() < 1e-12);
        assert!((q.distortion - 1.0 / 48.0).abs() < 1e-12);
        assert_eq!(q.cell_size, None);
    }

    #[test]
    fn lloyd_max_single_level_is_mean_and_variance() {
        let s = make_truncated_exponential(1.0, 0.0, 15.0).unwrap();
        let out = build_lloyd_max(&s, 1, LloydMaxOptions::default()).unwrap();
        assert!((out.spec.reps[0] - s.mean()).abs() < 1e-10);
        assert!((out.spec.distortion - s.variance()).abs() < 1e-10);
    }

    #[test]
    fn lloyd_max_history_nonincreasing_and_beats_uniform() {
        for s in [
            make_truncated_exponential(1.0, 0.0, 15.0).unwrap(),
            make_truncated_gaussian(0.0, 1.0, -5.0, 5.0).unwrap(),
        ] {
            for n in [3, 8] {
                let out = build_lloyd_max(&s, n, LloydMaxOptions::default()).unwrap();
                for w in out.distortion_history.windows(2) {
                    assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
                }
                let u = build_uniform(&s, n).unwrap();
                assert!(out.spec.distortion <= u.distortion);
            }
        }
    }

    #[test]
    fn lloyd_max_reports_exhausted_budget() {
        let s = make_truncated_exponential(1.0, 0.0, 15.0).unwrap();
        let out = build_lloyd_max(&s, 8, LloydMaxOptions { tol: 1e-15, max_iters: 3 }).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
    }

    #[test]
    fn empty_cells_are_repaired() {
        // density vanishes on (1, 3): the uniform start leaves an empty cell
        let f = Family::Custom(Arc::new(|x: f64| if (1.0..=3.0).contains(&x) { 0.0 } else { 1.0 }));
        let s = SourceModel::new(f, 0.0, 4.0, 1e-10).unwrap();
        let out = build_lloyd_max(&s, 4, LloydMaxOptions::default()).unwrap();
        assert!(out.repaired_cells >= 1);
        assert!(out.spec.probs.iter().all(|&p| p > 0.0));
        assert!(out.spec.endpoints.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn uniform_keeps_zero_probability_cells() {
        let f = Family::Custom(Arc::new(|x: f64| if x < 1.0 { 1.0 } else { 0.0 }));
        let s = SourceModel::new(f, 0.0, 2.0, 1e-10).unwrap();
        let q = build_uniform(&s, 4).unwrap();
        assert_eq!(q.levels, 4);
        assert_eq!(q.active_cells(), vec![0, 1]);
        assert!((q.reps[3] - 1.75).abs() < 1e-15);
        assert!((q.entropy_bits - 1.0).abs() < 1e-9);
    }
}

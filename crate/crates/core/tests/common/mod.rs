//! Reference computations that share no code with the library.
#![allow(dead_code)]

use std::f64::consts::{LN_2, PI};

use age_distortion::source::{make_truncated_exponential, make_truncated_gaussian, SourceModel};

pub fn exp_source() -> SourceModel {
    make_truncated_exponential(1.0, 0.0, 15.0).unwrap()
}

pub fn gauss_source() -> SourceModel {
    make_truncated_gaussian(0.0, 1.0, -5.0, 5.0).unwrap()
}

/// Maclaurin series of erf; accurate to ~1e-11 for |x| <= 4.
pub fn erf(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..200 {
        term *= -x2 / n as f64;
        let add = term / (2 * n + 1) as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    2.0 / PI.sqrt() * sum
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / 2f64.sqrt()))
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// exp(1) truncated to [0, t]: closed-form pieces.
pub struct TruncExp {
    pub t: f64,
}

impl TruncExp {
    pub fn mass(&self) -> f64 {
        1.0 - (-self.t).exp()
    }

    pub fn prob(&self, a: f64, b: f64) -> f64 {
        ((-a).exp() - (-b).exp()) / self.mass()
    }

    pub fn mean(&self) -> f64 {
        (1.0 - (self.t + 1.0) * (-self.t).exp()) / self.mass()
    }

    /// Differential entropy in bits: ln Z + E[X], converted.
    pub fn entropy_bits(&self) -> f64 {
        (self.mass().ln() + self.mean()) / LN_2
    }

    /// Conditional mean of X on [a, b].
    pub fn centroid(&self, a: f64, b: f64) -> f64 {
        let (ea, eb) = ((-a).exp(), (-b).exp());
        ((a + 1.0) * ea - (b + 1.0) * eb) / (ea - eb)
    }

    /// MSE of the uniform N-level quantizer with centroid points.
    pub fn uniform_centroid_distortion(&self, n: usize) -> f64 {
        let d = self.t / n as f64;
        (0..n)
            .map(|k| {
                let (a, b) = (k as f64 * d, (k + 1) as f64 * d);
                let (ea, eb) = ((-a).exp(), (-b).exp());
                // E[X^2 1{a<X<b}] for the untruncated density
                let m2 = (a * a + 2.0 * a + 2.0) * ea - (b * b + 2.0 * b + 2.0) * eb;
                let c = self.centroid(a, b);
                (m2 - c * c * (ea - eb)) / self.mass()
            })
            .sum()
    }
}

pub fn zero_wait_objective(probs: &[f64], lengths: &[f64]) -> f64 {
    let m: f64 = probs.iter().zip(lengths).map(|(p, l)| p * l).sum();
    let s: f64 = probs.iter().zip(lengths).map(|(p, l)| p * l * l).sum();
    s / (2.0 * m) + m
}

pub fn entropy(probs: &[f64]) -> f64 {
    probs.iter().filter(|&&p| p > 0.0).map(|p| -p * p.log2()).sum()
}

/// Minimum zero-wait objective over Kraft-tight lengths, by a grid on the
/// simplex (spacing `step`) refined once at spacing `step/50`.
pub fn grid_oracle(probs: &[f64], step: f64) -> f64 {
    let n = probs.len();
    assert!((2..=3).contains(&n));
    let obj = |q: &[f64]| {
        let l: Vec<f64> = q.iter().map(|v| -v.log2()).collect();
        zero_wait_objective(probs, &l)
    };
    let search = |lo: [f64; 2], hi: [f64; 2], h: f64| -> (f64, [f64; 2]) {
        let mut best = (f64::INFINITY, [0.0; 2]);
        let mut a = lo[0].max(h);
        while a <= hi[0].min(1.0 - h) + 1e-15 {
            if n == 2 {
                let v = obj(&[a, 1.0 - a]);
                // strict comparison keeps the lexicographically first point
                if v < best.0 {
                    best = (v, [a, 0.0]);
                }
            } else {
                let mut b = lo[1].max(h);
                while b <= hi[1].min(1.0 - a - h) + 1e-15 {
                    let v = obj(&[a, b, 1.0 - a - b]);
                    if v < best.0 {
                        best = (v, [a, b]);
                    }
                    b += h;
                }
            }
            a += h;
        }
        best
    };
    let (_, c) = search([0.0, 0.0], [1.0, 1.0], step);
    let (v, _) = search([c[0] - step, c[1] - step], [c[0] + step, c[1] + step], step / 50.0);
    v
}

/// Two-level Lloyd-Max quantizer for N(0,1) truncated to [-5, 5]: the
/// threshold is 0 by symmetry, so the levels are +-E[X | 0 < X < 5].
pub fn gauss_two_level() -> (f64, f64) {
    let half = normal_cdf(5.0) - 0.5;
    let rep = (normal_pdf(0.0) - normal_pdf(5.0)) / half;
    let second = 1.0 - 5.0 * normal_pdf(5.0) / half;
    (rep, second - rep * rep)
}

/// Reference objectives from an independent SLSQP solve on quadrature
/// cell probabilities (uniform quantizer, centroid points).
pub mod frozen {
    pub const EXP_N32_AOI_OPT_REAL: f64 = 4.120909835154457;
    pub const EXP_N16_AOI_OPT_REAL: f64 = 2.773776471234725;
    pub const GAUSS_N32_AOI_OPT_REAL: f64 = 5.709489592928599;
    pub const EXP_N32_SHANNON_REAL: f64 = 4.22426;
    pub const GAUSS_N32_SHANNON_REAL: f64 = 5.7359;
}

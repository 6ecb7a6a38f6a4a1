//! TOML run configuration.
//!
//! Every section is optional and falls back to the defaults below. Unknown
//! keys are rejected so that typos fail loudly instead of being ignored.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coder::{CodeKind, SolverOptions};
use crate::error::{Error, Result};
use crate::experiments::{dense_levels, Pairing, SweepConfig, DEFAULT_LEVELS};
use crate::quadrature::DEFAULT_ABS_TOL;
use crate::quantizer::{LloydMaxOptions, QuantizerKind, RepPoints};
use crate::sampler::SamplingPolicy;
use crate::source::{Family, SourceModel};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub source: SourceSpec,
    pub quantizer: QuantizerSection,
    pub code: CodeSection,
    pub policy: PolicySpec,
    pub sim: SimSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceFamily {
    Exponential,
    Gaussian,
    Uniform,
}

/// A `[source]` table must name its family and support; parameters that
/// the family does not use must be left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub family: SourceFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
}

fn default_abs_tol() -> f64 {
    DEFAULT_ABS_TOL
}

impl Default for SourceSpec {
    fn default() -> Self {
        SourceSpec::preset("exp").expect("known preset")
    }
}

impl SourceSpec {
    /// Named sources: `exp` (rate 1 on [0, 15]), `gauss` (N(0,1) on [-5, 5])
    /// and `uniform` (on [0, 1]).
    pub fn preset(name: &str) -> Result<Self> {
        let base = SourceSpec {
            family: SourceFamily::Uniform,
            rate: None,
            mean: None,
            std: None,
            lo: 0.0,
            hi: 1.0,
            abs_tol: DEFAULT_ABS_TOL,
        };
        match name {
            "exp" | "exponential" => Ok(SourceSpec {
                family: SourceFamily::Exponential,
                rate: Some(1.0),
                hi: 15.0,
                ..base
            }),
            "gauss" | "gaussian" => Ok(SourceSpec {
                family: SourceFamily::Gaussian,
                mean: Some(0.0),
                std: Some(1.0),
                lo: -5.0,
                hi: 5.0,
                ..base
            }),
            "uniform" => Ok(base),
            _ => Err(Error::Config(format!(
                "unknown source '{name}' (expected exp, gauss or uniform)"
            ))),
        }
    }

    /// Short identifier used in CSV rows, free of commas.
    pub fn id(&self) -> String {
        match self.family {
            SourceFamily::Exponential => format!("exp({})[{}:{}]", self.rate.unwrap_or(f64::NAN), self.lo, self.hi),
            SourceFamily::Gaussian => format!(
                "gauss({};{})[{}:{}]",
                self.mean.unwrap_or(f64::NAN),
                self.std.unwrap_or(f64::NAN),
                self.lo,
                self.hi
            ),
            SourceFamily::Uniform => format!("uniform[{}:{}]", self.lo, self.hi),
        }
    }

    pub fn build(&self) -> Result<SourceModel> {
        let stray = |name: &str, v: Option<f64>| match v {
            Some(_) => Err(Error::Config(format!(
                "source.{name} does not apply to the {:?} family",
                self.family
            ))),
            None => Ok(()),
        };
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| Error::Config(format!("source.{name} is required for the {:?} family", self.family)))
        };
        let model = match self.family {
            SourceFamily::Exponential => {
                stray("mean", self.mean)?;
                stray("std", self.std)?;
                let rate = need("rate", self.rate)?;
                SourceModel::new(Family::Exponential { rate }, self.lo, self.hi, self.abs_tol)
            }
            SourceFamily::Gaussian => {
                stray("rate", self.rate)?;
                let mean = need("mean", self.mean)?;
                let std = need("std", self.std)?;
                SourceModel::new(Family::Gaussian { mean, std }, self.lo, self.hi, self.abs_tol)
            }
            SourceFamily::Uniform => {
                stray("rate", self.rate)?;
                stray("mean", self.mean)?;
                stray("std", self.std)?;
                SourceModel::new(Family::Uniform, self.lo, self.hi, self.abs_tol)
            }
        }?;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizerSection {
    pub kind: QuantizerKind,
    pub levels: usize,
    pub reps: RepPoints,
    pub lloyd_tol: f64,
    pub lloyd_max_iters: usize,
}

impl Default for QuantizerSection {
    fn default() -> Self {
        let lm = LloydMaxOptions::default();
        QuantizerSection {
            kind: QuantizerKind::Uniform,
            levels: 32,
            reps: RepPoints::Centroid,
            lloyd_tol: lm.tol,
            lloyd_max_iters: lm.max_iters,
        }
    }
}

impl QuantizerSection {
    pub fn lloyd(&self) -> LloydMaxOptions {
        LloydMaxOptions {
            tol: self.lloyd_tol,
            max_iters: self.lloyd_max_iters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodeSection {
    pub kind: CodeKind,
    pub solver_tol: f64,
    pub solver_max_iters: usize,
    pub solver_restarts: usize,
    /// Explicit symbol probabilities for `solve-code`; otherwise the cell
    /// probabilities of the configured quantizer are used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    /// Cross-check the solver against a grid search (at most 3 symbols).
    pub oracle_check: bool,
    pub oracle_step: f64,
}

impl Default for CodeSection {
    fn default() -> Self {
        let s = SolverOptions::default();
        CodeSection {
            kind: CodeKind::AoiOptReal,
            solver_tol: s.tol,
            solver_max_iters: s.max_iters,
            solver_restarts: s.restarts,
            probs: None,
            oracle_check: false,
            oracle_step: 1e-3,
        }
    }
}

impl CodeSection {
    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver_tol,
            max_iters: self.solver_max_iters,
            restarts: self.solver_restarts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    #[default]
    ZeroWait,
    Threshold {
        beta: f64,
    },
    /// Best threshold policy found by search.
    Optimal {
        tol: f64,
    },
}

impl PolicySpec {
    /// The fixed policy, or `None` when a search is requested.
    pub fn fixed(&self) -> Option<SamplingPolicy> {
        match *self {
            PolicySpec::ZeroWait => Some(SamplingPolicy::ZeroWait),
            PolicySpec::Threshold { beta } => Some(SamplingPolicy::Threshold { beta }),
            PolicySpec::Optimal { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub seed: u64,
    pub updates: usize,
    pub warmup: usize,
}

impl Default for SimSection {
    fn default() -> Self {
        let s = crate::sim::SimConfig::default();
        SimSection {
            seed: s.seed,
            updates: s.num_updates,
            warmup: s.warmup_updates,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub levels: Vec<usize>,
    /// Every N from 2 to 32, overriding `levels`.
    pub dense: bool,
    pub quantizers: Vec<QuantizerKind>,
    pub codes: Vec<CodeKind>,
    pub pairing: Pairing,
    pub slope_window: usize,
    pub lower_bound: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            levels: DEFAULT_LEVELS.to_vec(),
            dense: false,
            quantizers: vec![QuantizerKind::Uniform],
            codes: vec![
                CodeKind::ShannonReal,
                CodeKind::ShannonInt,
                CodeKind::AoiOptReal,
                CodeKind::AoiOptInt,
            ],
            pairing: Pairing::Figure,
            slope_window: 3,
            lower_bound: true,
            title: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// File stem for sweep outputs.
    pub name: String,
    /// Also write a one-row CSV from `evaluate`.
    pub csv: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            name: "sweep".to_string(),
            csv: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            e => e,
        })
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            levels: if self.sweep.dense {
                dense_levels()
            } else {
                self.sweep.levels.clone()
            },
            codes: self.sweep.codes.clone(),
            quantizers: self.sweep.quantizers.clone(),
            pairing: self.sweep.pairing,
            reps: self.quantizer.reps,
            solver: self.code.solver(),
            lloyd: self.quantizer.lloyd(),
        }
    }
}

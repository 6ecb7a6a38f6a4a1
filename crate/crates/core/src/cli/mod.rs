//! Command-line front end: `evaluate`, `sweep`, `simulate` and `solve-code`.
//!
//! Each command reads an optional TOML [`RunConfig`], applies flag
//! overrides, and writes plain `key: value` lines to the given writer.
//! Exit status is 0 on success, 1 when a computation fails to converge or
//! an output cannot be written, and 2 for usage or configuration errors.

mod config;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{
    CodeSection, OutputSection, PolicySpec, QuantizerSection, RunConfig, SimSection, SourceFamily, SourceSpec,
    SweepSection,
};

use crate::coder::{aoi_optimal_real_with, ceil_code, grid_search_real, CodeKind, CodeLengths};
use crate::error::{Error, Result};
use crate::experiments::{
    build_code, csv_string, emit_csv, emit_plot, evaluate_row, fit_asymptotics_with, run_sweep, Metadata, PlotOptions,
};
use crate::quantizer::{build_lloyd_max, build_uniform_with, QuantizerKind, QuantizerSpec};
use crate::sampler::{aoi_analytic, optimize_threshold, zero_wait_condition, SamplingPolicy};
use crate::sim::{simulate, SimConfig, GENERATOR};
use crate::source::SourceModel;

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "AGE_DISTORTION_OUT_DIR";

/// Solver-versus-grid objective gap tolerated by `solve-code --oracle`.
pub const ORACLE_GAP: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "age-distortion", version, about = "Age of information under quantization and variable-length coding")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one quantizer/code/policy combination analytically.
    Evaluate(CommonArgs),
    /// Sweep the number of levels and write CSV and SVG results.
    Sweep(CommonArgs),
    /// Simulate the age process and compare with the analytic value.
    Simulate(SimulateArgs),
    /// Solve for AoI-optimal real-valued code lengths.
    SolveCode(SolveArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = OUT_DIR_ENV)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated level counts.
    #[arg(long, value_delimiter = ',')]
    pub levels: Vec<usize>,
    /// Source preset: exp, gauss or uniform.
    #[arg(long)]
    pub source: Option<String>,
    /// Comma-separated quantizer kinds: uniform, lloyd_max.
    #[arg(long, value_delimiter = ',')]
    pub quantizer: Vec<QuantizerKind>,
    /// Comma-separated code kinds, e.g. shannon_real,aoi_opt_int.
    #[arg(long, value_delimiter = ',')]
    pub code: Vec<CodeKind>,
    /// Sweep every N from 2 to 32.
    #[arg(long)]
    pub dense_sweep: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub updates: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated symbol probabilities.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub probs: Vec<f64>,
    /// Cross-check against a grid search (at most 3 symbols).
    #[arg(long)]
    pub oracle: bool,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Evaluate(a) => resolve(a, false).and_then(|c| cmd_evaluate(&c, out)),
        Command::Sweep(a) => resolve(a, true).and_then(|c| cmd_sweep(&c, out)),
        Command::Simulate(a) => resolve(&a.common, false).and_then(|mut c| {
            if let Some(u) = a.updates {
                c.sim.updates = u;
            }
            cmd_simulate(&c, out)
        }),
        Command::SolveCode(a) => resolve(&a.common, false).and_then(|mut c| {
            if !a.probs.is_empty() {
                c.code.probs = Some(a.probs.clone());
            }
            c.code.oracle_check |= a.oracle;
            cmd_solve_code(&c, out)
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

/// Loads the config file, if any, and applies flag overrides.
pub fn resolve(args: &CommonArgs, sweep: bool) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(name) = &args.source {
        cfg.source = SourceSpec::preset(name)?;
    }
    if let Some(seed) = args.seed {
        cfg.sim.seed = seed;
    }
    if let Some(dir) = &args.out_dir {
        cfg.output.dir = dir.clone();
    }
    if sweep {
        if !args.levels.is_empty() {
            cfg.sweep.levels = args.levels.clone();
        }
        if !args.quantizer.is_empty() {
            cfg.sweep.quantizers = args.quantizer.clone();
        }
        if !args.code.is_empty() {
            cfg.sweep.codes = args.code.clone();
        }
        cfg.sweep.dense |= args.dense_sweep;
        return Ok(cfg);
    }
    let single = |flag: &str, n: usize| {
        if n > 1 {
            Err(Error::Config(format!("--{flag} takes a single value outside of sweep")))
        } else {
            Ok(())
        }
    };
    single("levels", args.levels.len())?;
    single("quantizer", args.quantizer.len())?;
    single("code", args.code.len())?;
    if args.dense_sweep {
        return Err(Error::Config("--dense-sweep only applies to sweep".into()));
    }
    if let Some(&n) = args.levels.first() {
        cfg.quantizer.levels = n;
    }
    if let Some(&q) = args.quantizer.first() {
        cfg.quantizer.kind = q;
    }
    if let Some(&c) = args.code.first() {
        cfg.code.kind = c;
    }
    Ok(cfg)
}

fn build_quantizer(cfg: &RunConfig, model: &SourceModel) -> Result<QuantizerSpec> {
    let q = &cfg.quantizer;
    match q.kind {
        QuantizerKind::Uniform => build_uniform_with(model, q.levels, q.reps),
        QuantizerKind::LloydMax => {
            let o = build_lloyd_max(model, q.levels, q.lloyd())?;
            if !o.converged {
                return Err(Error::Convergence(format!(
                    "Lloyd-Max stopped after {} iterations; raise quantizer.lloyd_max_iters",
                    o.iterations
                )));
            }
            Ok(o.spec)
        }
    }
}

fn build_setup(cfg: &RunConfig) -> Result<(SourceModel, QuantizerSpec, CodeLengths)> {
    let model = cfg.source.build()?;
    let quant = build_quantizer(cfg, &model)?;
    let probs = quant.active_probs();
    let code = build_code(cfg.code.kind, &quant, &probs, &mut None, cfg.code.solver())?;
    Ok((model, quant, code))
}

/// Fixed policy from the config, or the best threshold found by search.
fn resolve_policy(cfg: &RunConfig, probs: &[f64], code: &CodeLengths) -> Result<SamplingPolicy> {
    match cfg.policy {
        PolicySpec::Optimal { tol } => {
            let opt = optimize_threshold(probs, code, tol)?;
            Ok(opt.report.policy)
        }
        p => Ok(p.fixed().expect("non-search policy")),
    }
}

fn policy_label(p: SamplingPolicy) -> String {
    match p {
        SamplingPolicy::ZeroWait => "zero_wait".into(),
        SamplingPolicy::Threshold { beta } => format!("threshold(beta={beta})"),
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.9}")).collect::<Vec<_>>().join(",")
}

fn wio(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

/// Echo of every numeric default that affects results.
pub fn metadata(cfg: &RunConfig) -> Metadata {
    let s = cfg.sweep_config();
    let levels: Vec<String> = s.levels.iter().map(|n| n.to_string()).collect();
    vec![
        ("tool".into(), format!("age-distortion {}", env!("CARGO_PKG_VERSION"))),
        ("source".into(), cfg.source.id()),
        ("source_abs_tol".into(), format!("{:e}", cfg.source.abs_tol)),
        ("levels".into(), levels.join(" ")),
        ("pairing".into(), format!("{:?}", s.pairing).to_lowercase()),
        ("rep_points".into(), format!("{:?}", s.reps).to_lowercase()),
        ("solver_tol".into(), format!("{:e}", s.solver.tol)),
        ("solver_max_iters".into(), s.solver.max_iters.to_string()),
        ("solver_restarts".into(), s.solver.restarts.to_string()),
        ("lloyd_tol".into(), format!("{:e}", s.lloyd.tol)),
        ("lloyd_max_iters".into(), s.lloyd.max_iters.to_string()),
        ("slope_window".into(), cfg.sweep.slope_window.to_string()),
        ("seed".into(), cfg.sim.seed.to_string()),
        ("generator".into(), GENERATOR.into()),
        ("policy".into(), "zero_wait".into()),
    ]
}

pub fn cmd_evaluate(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let (_, quant, code) = build_setup(cfg)?;
    let probs = quant.active_probs();
    let policy = resolve_policy(cfg, &probs, &code)?;
    let report = aoi_analytic(&probs, &code, policy)?;
    let zero = aoi_analytic(&probs, &code, SamplingPolicy::ZeroWait)?;
    let zw = zero_wait_condition(&code);

    let mut s = String::new();
    let mut line = |k: &str, v: String| s.push_str(&format!("{k}: {v}\n"));
    line("source", cfg.source.id());
    line("quantizer", quant.kind.as_str().into());
    line("levels", quant.levels.to_string());
    if let Some(d) = quant.cell_size {
        line("delta", d.to_string());
    }
    line("distortion", quant.distortion.to_string());
    line("log2_distortion", quant.distortion.log2().to_string());
    line("entropy_bits", quant.entropy_bits.to_string());
    line("code", cfg.code.kind.as_str().into());
    line("lengths", fmt_list(&code.lengths));
    line("kraft_sum", code.kraft_sum.to_string());
    line("mean_length", code.mean_len.to_string());
    line("policy", policy_label(policy));
    line("aoi", report.aoi.to_string());
    line("second_moment_term", report.second_moment_term.to_string());
    line("mean_term", report.mean_term.to_string());
    line("zero_wait_aoi", zero.aoi.to_string());
    line("lower_bound", report.lower_bound.to_string());
    line(
        "zero_wait_condition",
        format!("{} (margin {})", if zw.holds() { "holds" } else { "violated" }, zw.margin()),
    );
    out.write_all(s.as_bytes()).map_err(wio)?;

    if cfg.output.csv {
        fs::create_dir_all(&cfg.output.dir).map_err(|e| Error::io(&cfg.output.dir, e))?;
        let path = cfg.output.dir.join("evaluate.csv");
        let row = evaluate_row(&cfg.source.id(), &quant, cfg.code.kind, &code)?;
        emit_csv(&[row], &path, &metadata(cfg))?;
        writeln!(out, "csv: {}", path.display()).map_err(wio)?;
    }
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let model = cfg.source.build()?;
    let scfg = cfg.sweep_config();
    let id = cfg.source.id();
    let rows = run_sweep(&model, &id, &scfg)?;

    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join(format!("{}.csv", cfg.output.name));
    let svg_path = dir.join(format!("{}.svg", cfg.output.name));
    emit_csv(&rows, &csv_path, &metadata(cfg))?;
    let title = cfg.sweep.title.clone().unwrap_or_else(|| format!("AoI vs log2 D, {id}"));
    emit_plot(
        &rows,
        &svg_path,
        &PlotOptions {
            title,
            lower_bound: cfg.sweep.lower_bound,
        },
    )?;

    let mut s = format!("rows: {}\ncsv: {}\nsvg: {}\n", rows.len(), csv_path.display(), svg_path.display());
    for &code in &scfg.codes {
        if let Ok(rep) = fit_asymptotics_with(&rows, &model, code, cfg.sweep.slope_window) {
            s.push_str(&format!(
                "asymptotics {}: slope {:.6} over N={:?}, intercept_gap {:.6}, moment_ratio {:.6}",
                code.as_str(),
                rep.slope_estimate,
                rep.levels_used,
                rep.intercept_gap,
                rep.moment_ratio
            ));
            if let Some(g) = rep.integer_gap_max {
                s.push_str(&format!(", integer_gap_max {g:.6}"));
            }
            s.push('\n');
        }
    }
    out.write_all(s.as_bytes()).map_err(wio)
}

pub fn cmd_simulate(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let (model, quant, code) = build_setup(cfg)?;
    let probs = quant.active_probs();
    let policy = resolve_policy(cfg, &probs, &code)?;
    let analytic = aoi_analytic(&probs, &code, policy)?;
    let sim_cfg = SimConfig {
        num_updates: cfg.sim.updates,
        seed: cfg.sim.seed,
        policy,
        warmup_updates: cfg.sim.warmup.min(cfg.sim.updates.saturating_sub(1)),
    };
    let r = simulate(&model, &quant, &code, &sim_cfg)?;
    let z_age = (r.time_avg_age - analytic.aoi).abs() / r.std_error;
    let z_mse = (r.empirical_mse - quant.distortion).abs() / r.mse_std_error;
    let verdict = |z: f64, diff: f64| if diff == 0.0 || z <= 3.0 { "within 3 sigma" } else { "outside 3 sigma" };

    let s = format!(
        "source: {}\nquantizer: {} N={}\ncode: {}\npolicy: {}\nseed: {}\ngenerator: {GENERATOR}\nupdates_counted: {}\n\
         analytic_aoi: {}\nempirical_aoi: {}\nstd_error: {}\nage_agreement: {}\n\
         distortion: {}\nempirical_mse: {}\nmse_std_error: {}\nmse_agreement: {}\n",
        cfg.source.id(),
        quant.kind.as_str(),
        quant.levels,
        cfg.code.kind.as_str(),
        policy_label(policy),
        cfg.sim.seed,
        r.updates_counted,
        analytic.aoi,
        r.time_avg_age,
        r.std_error,
        verdict(z_age, r.time_avg_age - analytic.aoi),
        quant.distortion,
        r.empirical_mse,
        r.mse_std_error,
        verdict(z_mse, r.empirical_mse - quant.distortion),
    );
    out.write_all(s.as_bytes()).map_err(wio)
}

pub fn cmd_solve_code(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let probs = match &cfg.code.probs {
        Some(p) => p.clone(),
        None => {
            let model = cfg.source.build()?;
            build_quantizer(cfg, &model)?.active_probs()
        }
    };
    let sol = aoi_optimal_real_with(&probs, cfg.code.solver())?;
    let int = ceil_code(&probs, &sol.code);
    let mut s = format!(
        "symbols: {}\nlengths: {}\nobjective: {}\nkraft_sum: {}\niterations: {}\nkkt_residual: {:e}\n\
         integer_lengths: {}\ninteger_objective: {}\n",
        probs.len(),
        fmt_list(&sol.code.lengths),
        sol.objective,
        sol.code.kraft_sum,
        sol.iterations,
        sol.kkt_residual,
        fmt_list(&int.lengths),
        int.zero_wait_objective(),
    );
    let mut failed = None;
    if cfg.code.oracle_check {
        if probs.len() > 3 {
            return Err(Error::Config(format!(
                "the grid oracle handles at most 3 symbols, got {}",
                probs.len()
            )));
        }
        let grid = grid_search_real(&probs, cfg.code.oracle_step)?;
        let gap = grid.zero_wait_objective() - sol.objective;
        s.push_str(&format!("oracle_objective: {}\noracle_gap: {gap:e}\n", grid.zero_wait_objective()));
        if gap.abs() > ORACLE_GAP {
            failed = Some(gap);
        }
    }
    out.write_all(s.as_bytes()).map_err(wio)?;
    match failed {
        Some(gap) => Err(Error::Solver {
            best: sol.code.lengths,
            residual: gap.abs(),
            iterations: sol.iterations,
        }),
        None => Ok(()),
    }
}

/// Runs the configured sweep and returns the CSV text without writing it.
pub fn sweep_csv(cfg: &RunConfig) -> Result<String> {
    let model = cfg.source.build()?;
    let rows = run_sweep(&model, &cfg.source.id(), &cfg.sweep_config())?;
    csv_string(&rows, &metadata(cfg))
}

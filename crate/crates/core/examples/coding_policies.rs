//! AoI against log2 D for Shannon and AoI-optimal codes, real and integer,
//! on a uniform quantizer with the (3/2)H lower bound alongside.
//!
//!     cargo run --release --example coding_policies -- gauss

use std::path::PathBuf;

use age_distortion::cli::{SourceSpec, OUT_DIR_ENV};
use age_distortion::coder::CodeKind;
use age_distortion::experiments::{dense_levels, emit_csv, emit_plot, run_sweep, PlotOptions, SweepConfig};

fn main() -> age_distortion::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "exp".into());
    let spec = SourceSpec::preset(&name)?;
    let model = spec.build()?;

    let cfg = SweepConfig {
        levels: dense_levels(),
        codes: vec![
            CodeKind::ShannonReal,
            CodeKind::ShannonInt,
            CodeKind::AoiOptReal,
            CodeKind::AoiOptInt,
        ],
        ..SweepConfig::default()
    };
    let rows = run_sweep(&model, &spec.id(), &cfg)?;

    println!("{:>3} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}", "N", "log2 D", "1.5H", "S real", "S int", "F* real", "F* int");
    for n in &cfg.levels {
        let at = |k: CodeKind| rows.iter().find(|r| r.levels == *n && r.code_kind == k).unwrap();
        let s = at(CodeKind::ShannonReal);
        println!(
            "{n:>3} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            s.log2_distortion,
            s.lower_bound,
            s.aoi,
            at(CodeKind::ShannonInt).aoi,
            at(CodeKind::AoiOptReal).aoi,
            at(CodeKind::AoiOptInt).aoi,
        );
    }

    let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| "out".into());
    std::fs::create_dir_all(&dir).map_err(|e| age_distortion::Error::Io { path: dir.clone(), source: e })?;
    let stem = format!("coding_policies_{name}");
    emit_csv(&rows, &dir.join(format!("{stem}.csv")), &vec![("source".into(), spec.id())])?;
    emit_plot(
        &rows,
        &dir.join(format!("{stem}.svg")),
        &PlotOptions {
            title: format!("Coding policies, {}", spec.id()),
            lower_bound: true,
        },
    )?;
    println!("wrote {}/{stem}.{{csv,svg}}", dir.display());
    Ok(())
}

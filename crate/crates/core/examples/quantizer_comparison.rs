//! Uniform quantizer with variable-length codes against a Lloyd-Max
//! quantizer with a constant-length code.
//!
//!     cargo run --release --example quantizer_comparison -- exp int

use age_distortion::cli::SourceSpec;
use age_distortion::coder::CodeKind;
use age_distortion::experiments::{dense_levels, run_sweep, SweepConfig};
use age_distortion::quantizer::QuantizerKind;

fn main() -> age_distortion::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "exp".into());
    let integer = args.next().as_deref() == Some("int");
    let spec = SourceSpec::preset(&name)?;
    let model = spec.build()?;

    let (shannon, optimal, constant) = if integer {
        (CodeKind::ShannonInt, CodeKind::AoiOptInt, CodeKind::ConstInt)
    } else {
        (CodeKind::ShannonReal, CodeKind::AoiOptReal, CodeKind::ConstReal)
    };
    let cfg = SweepConfig {
        levels: dense_levels(),
        codes: vec![shannon, optimal, constant],
        quantizers: vec![QuantizerKind::Uniform, QuantizerKind::LloydMax],
        ..SweepConfig::default()
    };
    let rows = run_sweep(&model, &spec.id(), &cfg)?;
    let find = |q, c, n| rows.iter().find(|r| r.quantizer_kind == q && r.code_kind == c && r.levels == n).unwrap();

    println!("{}  ({} codes)", spec.id(), if integer { "integer" } else { "real" });
    println!("{:>3} {:>12} {:>12} {:>12} {:>12} {:>12}", "N", "D uniform", "D lloyd", "AoI unif+S", "AoI unif+F*", "AoI LM+const");
    let mut uniform_wins = 0;
    for &n in &cfg.levels {
        let s = find(QuantizerKind::Uniform, shannon, n);
        let o = find(QuantizerKind::Uniform, optimal, n);
        let c = find(QuantizerKind::LloydMax, constant, n);
        if s.aoi < c.aoi {
            uniform_wins += 1;
        }
        println!(
            "{n:>3} {:>12.5} {:>12.5} {:>12.4} {:>12.4} {:>12.4}",
            s.distortion, c.distortion, s.aoi, o.aoi, c.aoi
        );
    }
    println!("uniform+Shannon beats Lloyd-Max+const at {uniform_wins} of {} N", cfg.levels.len());
    Ok(())
}

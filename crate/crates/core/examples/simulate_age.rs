//! Monte-Carlo age of information against the analytic value.
//!
//!     cargo run --release --example simulate_age -- gauss 8

use age_distortion::cli::SourceSpec;
use age_distortion::coder::{aoi_optimal_real, shannon_real};
use age_distortion::quantizer::build_uniform;
use age_distortion::sampler::{aoi_analytic, SamplingPolicy};
use age_distortion::sim::{simulate, SimConfig};

fn main() -> age_distortion::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "exp".into());
    let levels: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(8);

    let spec = SourceSpec::preset(&name)?;
    let model = spec.build()?;
    let quant = build_uniform(&model, levels)?;
    let probs = quant.active_probs();

    for (label, code) in [
        ("shannon_real", shannon_real(&probs)?),
        ("aoi_opt_real", aoi_optimal_real(&probs, 1e-10)?),
    ] {
        let analytic = aoi_analytic(&probs, &code, SamplingPolicy::ZeroWait)?.aoi;
        let r = simulate(&model, &quant, &code, &SimConfig::default())?;
        println!("{} N={levels} {label}", spec.id());
        println!(
            "  age  analytic {analytic:.5}  simulated {:.5} +- {:.5}  ({:.2} sigma)",
            r.time_avg_age,
            r.std_error,
            (r.time_avg_age - analytic).abs() / r.std_error
        );
        println!(
            "  mse  analytic {:.6}  simulated {:.6} +- {:.6}",
            quant.distortion, r.empirical_mse, r.mse_std_error
        );
    }
    Ok(())
}

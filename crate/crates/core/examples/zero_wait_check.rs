//! When is sending immediately optimal? Checks the zero-wait condition and
//! searches the threshold family for a better waiting policy.

use age_distortion::cli::SourceSpec;
use age_distortion::coder::{shannon_integer, shannon_real, CodeLengths};
use age_distortion::quantizer::build_uniform;
use age_distortion::sampler::{optimize_threshold, zero_wait_condition};

fn report(label: &str, probs: &[f64], code: &CodeLengths) -> age_distortion::Result<()> {
    let cond = zero_wait_condition(code);
    let best = optimize_threshold(probs, code, 1e-9)?;
    println!(
        "{label:<34} margin {:>8.4} ({})  beta* {:>7.4}  AoI {:.5}",
        cond.margin(),
        if cond.holds() { "zero-wait optimal" } else { "waiting may help" },
        best.beta_star,
        best.report.aoi
    );
    Ok(())
}

fn main() -> age_distortion::Result<()> {
    // two very different lengths: waiting after the short one pays off
    let p = [0.5, 0.5];
    report("toy lengths (1, 10)", &p, &CodeLengths::new(&p, vec![1.0, 10.0], false)?)?;

    for name in ["exp", "gauss"] {
        let spec = SourceSpec::preset(name)?;
        let model = spec.build()?;
        for n in [4, 8, 16, 32, 64] {
            let q = build_uniform(&model, n)?;
            let probs = q.active_probs();
            report(&format!("{name} N={n} shannon_real"), &probs, &shannon_real(&probs)?)?;
            report(&format!("{name} N={n} shannon_int"), &probs, &shannon_integer(&probs)?)?;
        }
    }
    Ok(())
}

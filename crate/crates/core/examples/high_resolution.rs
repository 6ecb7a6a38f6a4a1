//! High-resolution behaviour of the uniform quantizer: 12 D / delta^2 and
//! H + log2 delta approach 1 and h(X) as the cells shrink, and the AoI of
//! the optimal code falls by about 3/4 per halving of log2 D.

use age_distortion::cli::SourceSpec;
use age_distortion::coder::aoi_optimal_real;
use age_distortion::experiments::least_squares_slope;
use age_distortion::quantizer::{build_uniform_with, RepPoints};
use age_distortion::sampler::{aoi_analytic, SamplingPolicy};

fn main() -> age_distortion::Result<()> {
    for name in ["exp", "gauss"] {
        let spec = SourceSpec::preset(name)?;
        let model = spec.build()?;
        println!("{}  h(X) = {:.5} bits", spec.id(), model.diff_entropy_bits());
        println!("{:>5} {:>10} {:>12} {:>14} {:>10}", "N", "delta", "12D/delta^2", "H+log2 delta", "AoI F*");
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for n in [4, 8, 16, 32, 64, 128, 256] {
            let mid = build_uniform_with(&model, n, RepPoints::Midpoint)?;
            let cen = build_uniform_with(&model, n, RepPoints::Centroid)?;
            let delta = cen.cell_size.unwrap();
            let probs = cen.active_probs();
            let aoi = aoi_analytic(&probs, &aoi_optimal_real(&probs, 1e-10)?, SamplingPolicy::ZeroWait)?.aoi;
            println!(
                "{n:>5} {delta:>10.5} {:>12.5} {:>14.5} {aoi:>10.4}",
                12.0 * mid.distortion / (delta * delta),
                cen.entropy_bits + delta.log2(),
            );
            xs.push(cen.distortion.log2());
            ys.push(aoi);
        }
        let k = xs.len();
        println!(
            "slope of AoI vs log2 D over the last three N: {:.4}\n",
            least_squares_slope(&xs[k - 3..], &ys[k - 3..])
        );
    }
    Ok(())
}

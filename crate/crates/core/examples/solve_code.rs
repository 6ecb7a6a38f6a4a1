//! Real-valued AoI-optimal code lengths for a probability vector, compared
//! with the Shannon lengths and the (3/2)H bound.
//!
//!     cargo run --release --example solve_code -- 0.6 0.3 0.1

use age_distortion::coder::{aoi_optimal_real_with, ceil_code, grid_search_real, shannon_real, SolverOptions};
use age_distortion::quantizer::entropy_bits;

fn main() -> age_distortion::Result<()> {
    let mut probs: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    if probs.is_empty() {
        probs = vec![0.6, 0.3, 0.1];
    }

    let sol = aoi_optimal_real_with(&probs, SolverOptions::default())?;
    let shannon = shannon_real(&probs)?;
    let int = ceil_code(&probs, &sol.code);

    println!("p          {:?}", probs);
    println!("F*         {:?}", sol.code.lengths);
    println!("ceil F*    {:?}", int.lengths);
    println!("Shannon    {:?}", shannon.lengths);
    println!();
    println!("J(F*)      {:.10}  ({} iterations, KKT residual {:.1e})", sol.objective, sol.iterations, sol.kkt_residual);
    println!("J(ceil F*) {:.10}", int.zero_wait_objective());
    println!("J(Shannon) {:.10}", shannon.zero_wait_objective());
    println!("1.5 H      {:.10}", 1.5 * entropy_bits(&probs));
    println!("Kraft sum  {:.12}", sol.code.kraft_sum);

    if probs.len() <= 3 {
        let grid = grid_search_real(&probs, 1e-3)?;
        println!("grid J     {:.10}  (gap {:.2e})", grid.zero_wait_objective(), grid.zero_wait_objective() - sol.objective);
    }
    Ok(())
}

mod common;

use age_distortion::coder::{
    aoi_optimal_real, ceil_code, constant_length_for, shannon_integer, shannon_real, CodeLengths, KRAFT_SLACK,
};
use age_distortion::quantizer::entropy_bits;
use age_distortion::sampler::{aoi_analytic, optimize_threshold, zero_wait_condition, SamplingPolicy};
use common::*;
use proptest::prelude::*;

fn probs_strategy(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001f64..1.0, 2..=max_len).prop_map(|w| {
        let total: f64 = w.iter().sum();
        w.iter().map(|x| x / total).collect()
    })
}

/// Log-uniform weights spanning nine decades, like tail cells of a fine quantizer.
fn skewed_probs_strategy(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-9.0f64..0.0, 2..=max_len).prop_map(|e| {
        let w: Vec<f64> = e.iter().map(|x| 10f64.powf(*x)).collect();
        let total: f64 = w.iter().sum();
        w.iter().map(|x| x / total).collect()
    })
}

fn all_codes(p: &[f64]) -> Vec<(&'static str, CodeLengths)> {
    let opt = aoi_optimal_real(p, 1e-10).unwrap();
    vec![
        ("shannon_real", shannon_real(p).unwrap()),
        ("shannon_int", shannon_integer(p).unwrap()),
        ("aoi_opt_int", ceil_code(p, &opt)),
        ("const_real", constant_length_for(p, p.len(), false).unwrap()),
        ("const_int", constant_length_for(p, p.len(), true).unwrap()),
        ("aoi_opt_real", opt),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn every_code_satisfies_kraft(p in probs_strategy(24)) {
        for (name, c) in all_codes(&p) {
            prop_assert!(c.kraft_sum <= 1.0 + KRAFT_SLACK, "{name}: {}", c.kraft_sum);
            prop_assert!(c.lengths.iter().all(|&l| l >= 0.0));
            if c.integer_valued {
                prop_assert!(c.lengths.iter().all(|l| l.fract() == 0.0), "{name}");
            }
        }
    }

    #[test]
    fn sandwich(p in prop_oneof![probs_strategy(24), skewed_probs_strategy(40)]) {
        let lb = 1.5 * entropy_bits(&p);
        let opt = aoi_optimal_real(&p, 1e-10).unwrap().zero_wait_objective();
        let sh = shannon_real(&p).unwrap().zero_wait_objective();
        prop_assert!(lb <= opt + 1e-9, "{lb} > {opt}");
        prop_assert!(opt <= sh + 1e-9, "{opt} > {sh}");
        // Jensen on the optimal code
        let c = aoi_optimal_real(&p, 1e-10).unwrap();
        prop_assert!(opt >= 1.5 * c.mean_len - 1e-9);
    }

    #[test]
    fn integer_rounding_costs_less_than_five_halves(
        p in prop_oneof![probs_strategy(24), skewed_probs_strategy(40)]
    ) {
        let opt = aoi_optimal_real(&p, 1e-10).unwrap();
        let gap_opt = ceil_code(&p, &opt).zero_wait_objective() - opt.zero_wait_objective();
        let sh_gap = shannon_integer(&p).unwrap().zero_wait_objective()
            - shannon_real(&p).unwrap().zero_wait_objective();
        prop_assert!(gap_opt < 2.5, "aoi_opt gap {gap_opt}");
        prop_assert!(sh_gap < 2.5, "shannon gap {sh_gap}");
    }

    #[test]
    fn analytic_aoi_matches_objective_and_bound(p in probs_strategy(16)) {
        for (_, c) in all_codes(&p) {
            let r = aoi_analytic(&p, &c, SamplingPolicy::ZeroWait).unwrap();
            prop_assert!((r.aoi - zero_wait_objective(&p, &c.lengths)).abs() < 1e-12 * r.aoi.max(1.0));
            prop_assert!(r.aoi >= r.lower_bound - 1e-9);
        }
    }

    #[test]
    fn threshold_search_never_worse_than_zero_wait(p in probs_strategy(8)) {
        let c = shannon_real(&p).unwrap();
        let zero = aoi_analytic(&p, &c, SamplingPolicy::ZeroWait).unwrap().aoi;
        let best = optimize_threshold(&p, &c, 1e-9).unwrap();
        prop_assert!(best.report.aoi <= zero);
        if zero_wait_condition(&c).holds() {
            prop_assert!((best.report.aoi - zero).abs() < 1e-9);
        }
    }

    #[test]
    fn inverse_cdf_monotone_and_consistent(mut us in prop::collection::vec(0.0f64..1.0, 2..40)) {
        us.sort_by(f64::total_cmp);
        for s in [exp_source(), gauss_source()] {
            let xs: Vec<f64> = us.iter().map(|&u| s.inverse_cdf(u)).collect();
            prop_assert!(xs.windows(2).all(|w| w[0] <= w[1]));
            for (&u, &x) in us.iter().zip(&xs) {
                prop_assert!((s.cdf(x) - u).abs() < 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn solver_matches_grid_oracle(p in probs_strategy(3)) {
        let solver = aoi_optimal_real(&p, 1e-10).unwrap().zero_wait_objective();
        let grid = grid_oracle(&p, 1e-3);
        prop_assert!(solver <= grid + 1e-9, "solver {solver} worse than grid {grid}");
        prop_assert!(grid - solver < 1e-3);
    }
}

#[test]
fn kraft_tight_optimum() {
    let p = [0.55, 0.2, 0.15, 0.1];
    let c = aoi_optimal_real(&p, 1e-10).unwrap();
    assert!((c.kraft_sum - 1.0).abs() < 1e-9);
}

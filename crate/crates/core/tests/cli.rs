use std::fs;
use std::path::Path;

use age_distortion::cli::{run, RunConfig, OUT_DIR_ENV};
use age_distortion::experiments::csv_body;

fn exec(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("age-distortion").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn field(out: &str, key: &str) -> String {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in\n{out}"))
        .to_string()
}

fn num(out: &str, key: &str) -> f64 {
    field(out, key).parse().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn evaluate_uniform_fixture() {
    let (code, out, err) = exec(&["evaluate", "--source", "uniform", "--levels", "2", "--code", "shannon_real"]);
    assert_eq!(code, 0, "{err}");
    assert!((num(&out, "aoi") - 1.5).abs() < 1e-12);
    assert!((num(&out, "distortion") - 1.0 / 48.0).abs() < 1e-12);
    assert!((num(&out, "entropy_bits") - 1.0).abs() < 1e-12);
    assert!(field(&out, "zero_wait_condition").starts_with("holds"));
}

#[test]
fn evaluate_exp_optimal_code_in_sandwich() {
    let (code, out, _) = exec(&["evaluate", "--source", "exp", "--levels", "32", "--code", "aoi_opt_real"]);
    assert_eq!(code, 0);
    let aoi = num(&out, "aoi");
    assert!(num(&out, "lower_bound") <= aoi + 1e-9);
    let (_, sh, _) = exec(&["evaluate", "--source", "exp", "--levels", "32", "--code", "shannon_real"]);
    assert!(aoi <= num(&sh, "aoi") + 1e-9);
}

#[test]
fn evaluate_threshold_search_policy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[policy]\nkind = \"optimal\"\ntol = 1e-9\n[code]\nkind = \"shannon_real\"\n");
    let (code, out, err) = exec(&["evaluate", "--config", &cfg]);
    assert_eq!(code, 0, "{err}");
    // exp at N = 32 violates the zero-wait condition, so waiting helps
    assert!(field(&out, "policy").starts_with("threshold"));
    assert!(num(&out, "aoi") < num(&out, "zero_wait_aoi"));
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "[quantizer]\nlevles = 4\n");
    let (code, _, err) = exec(&["evaluate", "--config", &cfg]);
    assert_eq!(code, 2);
    assert!(err.contains("levles") && err.contains("line 2"), "{err}");

    let cfg = write_config(dir.path(), "syntax.toml", "[quantizer\n");
    let (code, _, err) = exec(&["evaluate", "--config", &cfg]);
    assert_eq!(code, 2);
    assert!(err.contains("syntax.toml"), "{err}");
}

#[test]
fn sweep_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let (code, out, err) = exec(&[
        "sweep",
        "--source",
        "gauss",
        "--quantizer",
        "uniform,lloyd_max",
        "--code",
        "shannon_real,aoi_opt_real,const_real",
        "--out-dir",
        out_dir,
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(field(&out, "rows"), "15");
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.starts_with("# schema"));
    assert!(csv.contains("# seed: "));
    assert!(csv.contains("# solver_tol: 1e-10"));
    let svg = fs::read_to_string(dir.path().join("sweep.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="series""#).count(), 4);
    assert!(out.contains("asymptotics aoi_opt_real"));
}

#[test]
fn sweep_rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let (code, _, _) = exec(&["sweep", "--source", "exp", "--seed", "3", "--out-dir", d.path().to_str().unwrap()]);
        assert_eq!(code, 0);
    }
    let read = |d: &tempfile::TempDir| fs::read_to_string(d.path().join("sweep.csv")).unwrap();
    assert_eq!(csv_body(&read(&a)), csv_body(&read(&b)));
    assert_eq!(read(&a), read(&b));
}

#[test]
fn sweep_rejects_empty_levels() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[sweep]\nlevels = []\n");
    let (code, _, err) = exec(&["sweep", "--config", &cfg, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("empty"), "{err}");
    let (code, _, _) = exec(&["sweep", "--levels", "1,2"]);
    assert_eq!(code, 2);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    // only this test touches the variable
    std::env::set_var(OUT_DIR_ENV, dir.path());
    let (code, _, err) = exec(&["sweep", "--source", "uniform", "--levels", "2,4,8"]);
    std::env::remove_var(OUT_DIR_ENV);
    assert_eq!(code, 0, "{err}");
    assert!(dir.path().join("sweep.csv").exists());
}

#[test]
fn simulate_unit_lengths_exact() {
    let (code, out, err) = exec(&[
        "simulate", "--source", "uniform", "--levels", "2", "--code", "shannon_int", "--updates", "5000",
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(num(&out, "empirical_aoi"), 1.5);
    assert_eq!(field(&out, "age_agreement"), "within 3 sigma");
}

#[test]
fn simulate_agrees_with_analytic() {
    let (code, out, _) = exec(&[
        "simulate", "--source", "exp", "--levels", "8", "--code", "aoi_opt_real", "--seed", "42",
    ]);
    assert_eq!(code, 0);
    let (a, e, se) = (num(&out, "analytic_aoi"), num(&out, "empirical_aoi"), num(&out, "std_error"));
    assert!((a - e).abs() <= 3.0 * se, "{a} {e} {se}");
}

#[test]
fn simulate_rejects_bad_seed() {
    let (code, _, err) = exec(&["simulate", "--seed", "abc"]);
    assert_eq!(code, 2);
    assert!(err.contains("--seed"), "{err}");
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[sim]\nseed = \"seven\"\n");
    let (code, _, _) = exec(&["simulate", "--config", &cfg]);
    assert_eq!(code, 2);
}

#[test]
fn solve_code_two_equal_symbols() {
    let (code, out, err) = exec(&["solve-code", "--probs", "0.5,0.5"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(field(&out, "lengths"), "1.000000000,1.000000000");
    assert!((num(&out, "objective") - 1.5).abs() < 1e-12);
}

#[test]
fn solve_code_oracle_flag() {
    let (code, out, err) = exec(&["solve-code", "--probs", "0.5,0.3,0.2", "--oracle"]);
    assert_eq!(code, 0, "{err}");
    assert!(num(&out, "oracle_gap").abs() <= 1e-3);
    let (code, _, err) = exec(&["solve-code", "--probs", "0.4,0.3,0.2,0.1", "--oracle"]);
    assert_eq!(code, 2);
    assert!(err.contains("at most 3"), "{err}");
}

#[test]
fn solve_code_rejects_negative_probs() {
    let (code, _, err) = exec(&["solve-code", "--probs", "1.2,-0.2"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn solve_code_from_quantizer() {
    let (code, out, _) = exec(&["solve-code", "--source", "gauss", "--levels", "4"]);
    assert_eq!(code, 0);
    assert_eq!(field(&out, "symbols"), "4");
    assert!((num(&out, "objective") - 1.787944311846988).abs() < 1e-8);
}

#[test]
fn single_valued_flags_outside_sweep() {
    let (code, _, err) = exec(&["evaluate", "--levels", "4,8"]);
    assert_eq!(code, 2);
    assert!(err.contains("single value"));
    let (code, _, _) = exec(&["evaluate", "--dense-sweep"]);
    assert_eq!(code, 2);
}

#[test]
fn figure_configs_parse_and_round_trip() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap();
        cfg.source.build().unwrap();
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg, "{}", path.display());
        seen += 1;
    }
    assert_eq!(seen, 6);
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = exec(&["--help"]);
    assert_eq!(code, 0);
    for cmd in ["evaluate", "sweep", "simulate", "solve-code"] {
        assert!(out.contains(cmd));
    }
}

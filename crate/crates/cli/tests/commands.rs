mod common;

use std::fs;

use common::{code, json, run, spec};

#[test]
fn cantor_is_singular_continuous() {
    let out = run(&["classify", &spec("cantor.json")]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["command"], "classify");
    assert_eq!(v["result"]["classification"]["outcome"], "SingularContinuous");
    assert_eq!(v["spec"]["name"], "cantor");
}

#[test]
fn example_specs_classify_as_expected() {
    for (file, expected) in [
        ("uniform.json", "AbsolutelyContinuous"),
        ("two_term_half.json", "AbsolutelyContinuous"),
        ("cantor_discrete.json", "Discrete"),
        ("cantor_perturbed.json", "SingularContinuous"),
        ("summable_gaps.json", "AbsolutelyContinuous"),
    ] {
        let out = run(&["classify", &spec(file)]);
        assert_eq!(code(&out), 0, "{file}");
        assert_eq!(json(&out)["result"]["classification"]["outcome"], expected, "{file}");
    }
}

#[test]
fn log_corrected_dimension_of_cantor() {
    let out = run(&["dimension", &spec("cantor.json"), "--variant", "log-corrected"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let d = v["result"]["limit"].as_f64().unwrap();
    assert!((d - 2f64.ln() / 3f64.ln()).abs() < 1e-4, "{d}");
    assert_eq!(v["warnings"].as_array().unwrap().len(), 0);
}

#[test]
fn as_printed_dimension_carries_a_warning() {
    let out = run(&["dimension", &spec("cantor.json"), "--variant", "as-printed"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["result"]["variant"], "as-printed");
    assert!((v["result"]["limit"].as_f64().unwrap() - 2f64.ln() / 3.0).abs() < 1e-4);
    assert!(!v["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn measure_of_two_term_support() {
    let out = run(&["measure", &spec("two_term_half.json")]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["result"]["outcome"], "positive");
    let lo = v["result"]["value"]["lo"].as_f64().unwrap();
    let hi = v["result"]["value"]["hi"].as_f64().unwrap();
    assert!(lo <= 0.5 && 0.5 <= hi && hi - lo < 1e-9);
}

#[test]
fn cdf_csv_is_monotone_and_bracketed() {
    let out = run(&["cdf", &spec("cantor.json"), "--points", "33"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,lo,hi"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 33);
    for w in rows.windows(2) {
        assert!(w[0][1] <= w[1][2] + 1e-12);
    }
    for r in &rows {
        assert!(0.0 <= r[1] && r[1] <= r[2] && r[2] <= 1.0);
    }
    assert_eq!(rows.last().unwrap()[1], 1.0);
}

#[test]
fn charfn_at_zero_is_one() {
    let out = run(&["charfn", &spec("cantor.json"), "--points", "4", "--to", "3"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let first = text.lines().nth(1).unwrap();
    assert_eq!(first, "0.0,1.0,0.0");
}

#[test]
fn samples_are_reproducible_and_in_range() {
    let args = ["sample", &spec("cantor.json"), "--count", "200", "--seed", "11"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let xs: Vec<f64> = String::from_utf8(a.stdout).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(xs.len(), 200);
    assert!(xs.iter().all(|x| (0.0..=1.0).contains(x)));
    let other = run(&["sample", &spec("cantor.json"), "--count", "200", "--seed", "12"]);
    assert_ne!(other.stdout, b.stdout);
}

#[test]
fn sample_output_does_not_depend_on_thread_count() {
    let path = spec("uniform.json");
    let args = ["sample", path.as_str(), "--count", "500", "--seed", "3"];
    let bin = env!("CARGO_BIN_EXE_bernconv");
    let one = std::process::Command::new(bin).args(args).env("BERNCONV_THREADS", "1").output().unwrap();
    let four = std::process::Command::new(bin).args(args).env("BERNCONV_THREADS", "4").output().unwrap();
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let cantor = spec("cantor.json");
    let mu = spec("laws_fair.json");
    let nu = spec("laws_converging.json");
    let cases: Vec<Vec<&str>> = vec![
        vec!["classify", &cantor],
        vec!["support", &cantor, "--level", "6"],
        vec!["moments", &cantor],
        vec!["laws", "--count", "300", "--seed", "5"],
        vec!["demo-counterexample", "--level", "12"],
        vec!["oracle", "hellinger", "--mu", &mu, "--nu", &nu, "--level", "8"],
        vec!["oracle", "box-count", &cantor, "--level", "10", "--box-size", "0.0001"],
    ];
    for args in cases {
        let a = run(&args);
        let b = run(&args);
        assert_eq!(code(&a), 0, "{args:?}: {}", String::from_utf8_lossy(&a.stdout));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn support_csv_lists_cylinders() {
    let out = run(&["support", &spec("cantor.json"), "--level", "3", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 8);
}

#[test]
fn hellinger_oracle_agrees_with_factor_product() {
    let out = run(&[
        "oracle", "hellinger", "--mu", &spec("laws_fair.json"), "--nu", &spec("laws_converging.json"), "--level", "10",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!(v["result"]["discrepancy"].as_f64().unwrap() < 1e-12);
}

#[test]
fn laws_report_records_seed_and_no_violations() {
    let out = run(&["laws", "--count", "500", "--seed", "9"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["seed"], 9);
    assert!(v["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&["classify", "--help"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["dimension", &spec("cantor.json"), "--variant", "sideways"])), 1);
    assert_eq!(code(&run(&["sample", &spec("cantor.json"), "--count", "many"])), 1);
}

#[test]
fn malformed_spec_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"scales": {"kind": "geometric", "lambda": "half"}, "digits": {"kind": "constant", "p0": 0.5}}"#)
        .unwrap();
    let out = run(&["classify", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let v = json(&out);
    assert_eq!(v["error"]["kind"], "invalid_spec");
    assert!(v["error"]["field"].as_str().unwrap().starts_with("scales"), "{v}");
    assert!(v["error"]["line"].is_u64());
    assert!(v.get("result").is_none());
}

#[test]
fn out_of_range_parameter_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"scales": {"kind": "geometric", "lambda": 0.4}, "digits": {"kind": "constant", "p0": 1.5}}"#)
        .unwrap();
    let out = run(&["measure", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let v = json(&out);
    assert_eq!(v["error"]["kind"], "invalid_spec");
    assert!(v["error"]["field"].as_str().unwrap().contains("p0"), "{v}");
}

#[test]
fn missing_file_is_an_input_error() {
    let out = run(&["moments", "/nonexistent/spec.json"]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["error"]["kind"], "io");
}

#[test]
fn invalid_numeric_option_is_an_input_error() {
    let out = run(&["charfn", &spec("cantor.json"), "--tol", "0"]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["error"]["kind"], "range");
    let out = run(&["demo-counterexample", "--p", "0.9"]);
    assert_eq!(code(&out), 2);
    let out = run(&["cdf", &spec("cantor.json"), "--from", "1", "--to", "0"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn overlapping_scales_exit_three_with_partial_report() {
    let out = run(&["classify", &spec("overlap.json")]);
    assert_eq!(code(&out), 3);
    let v = json(&out);
    assert_eq!(v["error"]["kind"], "hypothesis");
    assert_eq!(v["result"]["classification"]["outcome"], "Indeterminate");
    assert!(v["result"]["almost_every_lambda"].is_object());
}

#[test]
fn overlapping_scales_still_get_a_density_verdict() {
    let out = run(&["support", &spec("overlap.json"), "--level", "4"]);
    assert_eq!(code(&out), 0);
    assert!(json(&out)["result"]["density"].is_object());
}

#[test]
fn increasing_scales_exit_three_with_partial_support() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rising.json");
    fs::write(&path, RISING).unwrap();
    let out = run(&["support", path.to_str().unwrap(), "--level", "4"]);
    assert_eq!(code(&out), 3);
    let v = json(&out);
    assert_eq!(v["error"]["kind"], "hypothesis");
    assert!(v["result"]["approximation"].is_object());
    assert!(v["result"].get("density").is_none());
}

const RISING: &str = r#"{
  "scales": {
    "kind": "explicit",
    "prefix": [0.1, 0.4],
    "tail": { "kind": "exact_geometric", "ratio": 0.5, "scale": 1.0, "start_index": 3 }
  },
  "digits": { "kind": "constant", "p0": 0.5 }
}"#;

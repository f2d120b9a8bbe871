use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn freecorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freecorr")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| v.to_string().parse().unwrap())
}

fn row(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(num).collect()
}

#[test]
fn uniform_schur_moments() {
    let out = freecorr(&["moments", "--model", "uniform-schur", "-k", "4"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["schema"], "freecorr/1");
    let orders = v["result"]["orders"].as_array().unwrap();
    let lln = row(&orders[0]);
    for (k, m) in lln.iter().enumerate() {
        assert!((m - 1.0 / (k as f64 + 2.0)).abs() < 1e-15);
    }
    assert_eq!(row(&orders[1]), vec![-0.5; 4]);
}

#[test]
fn gue_second_order_has_genus_column() {
    let out = freecorr(&["moments", "--model", "gue", "-n", "2", "-k", "6", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,order_0,order_1,order_2,nu_2");
    assert_eq!(lines[4], "4,2.0000000000000000e+0,0.0000000000000000e+0,0.0000000000000000e+0,1.0000000000000000e+0");
    assert!(lines[6].starts_with("6,5.0000000000000000e+0,"));
}

#[test]
fn zero_k_is_a_config_error() {
    let out = freecorr(&["moments", "--model", "gue", "-k", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_model_is_a_config_error() {
    assert_eq!(freecorr(&["moments", "--model", "nope"]).status.code(), Some(2));
    assert_eq!(freecorr(&["density", "--model", "gue", "--eta", "5"]).status.code(), Some(2));
}

#[test]
fn dbbp_density_has_outlier_atom() {
    let out = freecorr(&["density", "--model", "dbbp", "--params", "9,4", "--order", "1", "--format", "csv", "--points", "50"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("kind,t,value\n"));
    let atoms: Vec<&str> = text.lines().filter(|l| l.starts_with("atom,")).collect();
    assert_eq!(atoms, vec!["atom,1.6250000000000000e+1,1.0000000000000000e+0"]);
    assert_eq!(text.lines().filter(|l| l.starts_with("density,")).count(), 50);
}

#[test]
fn catalog_density_reports_zero_mass() {
    let out = freecorr(&["density", "--catalog", "gue_bbp", "--params", "2"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!(num(&v["result"]["total_mass"]).abs() < 1e-9);
    assert!((num(&v["result"]["moments"][0]) - 2.0).abs() < 1e-9);
}

#[test]
fn verify_dk_schur_passes() {
    for extra in [&["--exact"][..], &[][..]] {
        let mut args = vec!["verify", "dk-schur", "--lambda", "2,1,0"];
        args.extend_from_slice(extra);
        let out = freecorr(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let v = json(&out);
        assert_eq!(v["pass"], true);
        assert_eq!(v["result"].as_array().unwrap().len(), 3);
    }
}

#[test]
fn verify_rejects_unsorted_signature() {
    assert_eq!(freecorr(&["verify", "dk-schur", "--lambda", "0,1"]).status.code(), Some(2));
}

#[test]
fn failed_check_exits_one() {
    // a |z| bound of 0 cannot be met by any simulation
    let out = freecorr(&["mc", "--ensemble", "gue", "--samples", "50", "--grid", "8,16,32", "-k", "2", "--bound", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["pass"], false);
}

#[test]
fn spiked_gue_mc_within_three_sigma() {
    let out = freecorr(&["mc", "--ensemble", "gue", "--spikes", "2", "--samples", "400", "-k", "4", "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    for r in json(&out)["result"].as_array().unwrap() {
        for z in row(&r["z_scores"]) {
            assert!(z.abs() < 3.0);
        }
    }
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("job.json");
    fs::write(&cfg, r#"{"command": "moments", "model": "gue-bbp", "params": [2.0], "k": 3}"#).unwrap();
    let cfg = cfg.to_str().unwrap();

    let out = freecorr(&["--config", cfg]);
    assert!(out.status.success());
    assert_eq!(row(&json(&out)["result"]["orders"][1]), vec![2.0, 4.0, 14.0]);

    let out = freecorr(&["--config", cfg, "moments", "-k", "2"]);
    assert_eq!(row(&json(&out)["result"]["orders"][1]), vec![2.0, 4.0]);

    assert_eq!(freecorr(&["--config", cfg, "verify", "dk-schur"]).status.code(), Some(2));
    assert_eq!(freecorr(&["--config", "/nonexistent/job.json"]).status.code(), Some(2));
}

#[test]
fn series_input_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("input.json");
    let series = r#"{"side": "hc", "epsilon": 1.0, "series": [
        {"center": 0.0, "coeffs": [0, 0, 0.5, 0, 0, 0, 0, 0, 0]},
        {"center": 0.0, "coeffs": [0, 0, 0.5, 0, 0, 0, 0, 0, 0]}]}"#;
    fs::write(&input, series).unwrap();
    let out = freecorr(&["moments", "--input", input.to_str().unwrap(), "-k", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(row(&v["result"]["orders"][0]), vec![0.0, 1.0, 0.0, 2.0]);
    assert_eq!(row(&v["result"]["orders"][1]), vec![0.0, 1.0, 0.0, 4.0]);

    // too short for K = 12
    let out = freecorr(&["moments", "--input", input.to_str().unwrap(), "-k", "12"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_dir_gets_both_formats_and_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let args = ["cumulants", "--model", "aztec", "--params", "0.9,3", "-k", "5", "--quiet", "--out-dir", d];
    let out = freecorr(&args);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let first = fs::read(dir.path().join("cumulants.json")).unwrap();
    assert!(fs::read_to_string(dir.path().join("cumulants.csv")).unwrap().starts_with("m,order_0,order_1\n"));
    freecorr(&args);
    assert_eq!(first, fs::read(dir.path().join("cumulants.json")).unwrap());
}

#[test]
fn examples_lists_everything() {
    let v = json(&freecorr(&["examples"]));
    let names = |key: &str| -> Vec<String> {
        v["result"][key].as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap().to_string()).collect()
    };
    assert!(names("models").contains(&"plancherel-dbbp".to_string()));
    assert!(names("catalog").contains(&"aztec".to_string()));
    assert!(names("functionals").contains(&"gue_pure".to_string()));
}

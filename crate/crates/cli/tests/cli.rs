use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn redgeo(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_redgeo"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn csv_column(path: &Path, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|row| row.unwrap()[idx].to_string()).collect()
}

#[test]
fn gaussian_rv_curve_is_one() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _, err) = redgeo(tmp.path(), &["rv", "--model", "gaussian:n=2", "--tau-min", "0.01", "--tau-max", "100"]);
    assert_eq!(code, 0, "{err}");
    let csv = tmp.path().join("out/gaussian-n2/rv.csv");
    let mut r = csv::Reader::from_path(&csv).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["tau", "value", "flag", "config_hash"]);
    let values = csv_column(&csv, "value");
    assert_eq!(values.len(), 33);
    for v in values {
        assert!((v.parse::<f64>().unwrap() - 1.0).abs() <= 1e-6);
    }
}

#[test]
fn sphere_limits_main_equality() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _, err) = redgeo(tmp.path(), &["limits", "--model", "sphere:n=2"]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(tmp.path().join("out/sphere-n2/limits.json")).unwrap();
    let records: Vec<Value> = serde_json::from_str(&text).unwrap();
    let main = records.iter().find(|r| r["quantity"] == "main_equality").unwrap();
    for key in ["V_limit", "I_limit"] {
        let v = main[key].as_f64().unwrap();
        assert!((v - 0.736).abs() < 0.01, "{key} = {v}");
    }
    assert_eq!(main["pass"], true);
    for r in &records {
        assert!(r["config_hash"].is_string());
        for key in ["model", "weight", "quantity"] {
            assert!(r.get(key).is_some());
        }
    }
}

#[test]
fn negative_control_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _, err) = redgeo(tmp.path(), &["certify", "--model", "gaussian:n=2", "--weight", "quadratic_control"]);
    assert_eq!(code, 2);
    assert!(err.contains("flagged"), "{err}");
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/gaussian-n2/certify.json")).unwrap())
            .unwrap();
    assert_eq!(report["report"]["status"], "flagged");
    assert!(report["report"]["worst_residual"].as_f64().unwrap() > 0.0);
    for key in ["weight_id", "witness_center", "witness_scale"] {
        assert!(report["report"].get(key).is_some());
    }
}

#[test]
fn uncertified_weight_is_refused_then_admitted_by_override() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["rv", "--model", "gaussian:n=2", "--weight", "quadratic_control", "--tau-max", "10"];
    let (code, _, _) = redgeo(tmp.path(), &args);
    assert_eq!(code, 2);
    assert!(!tmp.path().join("out/gaussian-n2/rv.csv").exists());
    let mut with = args.to_vec();
    with.push("--allow-flagged");
    let (code, _, _) = redgeo(tmp.path(), &with);
    assert_eq!(code, 2);
    let flags = csv_column(&tmp.path().join("out/gaussian-n2/rv.csv"), "flag");
    assert!(flags.iter().all(|f| f.contains("flagged_weight")));
}

#[test]
fn configuration_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(redgeo(tmp.path(), &["rv", "--model", "torus"]).0, 1);
    assert_eq!(redgeo(tmp.path(), &["rv", "--model", "sphere:n=2", "--tau-min", "5", "--tau-max", "1"]).0, 1);
    assert_eq!(redgeo(tmp.path(), &["density", "--model", "cone:slope=0.5"]).0, 1);
    assert_eq!(redgeo(tmp.path(), &["rv", "--config", "missing.json"]).0, 1);
    std::fs::write(tmp.path().join("bad.json"), r#"{"id":"x","model":{"name":"sphere","n":2},"quantities":["nope"]}"#)
        .unwrap();
    assert_eq!(redgeo(tmp.path(), &["run", "--config", "bad.json"]).0, 1);
}

#[test]
fn runs_are_byte_identical_and_carry_the_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "id": "det",
        "model": {"name": "cone", "slope": 0.5},
        "grid": {"tau_min": 0.1, "tau_max": 100.0, "r_min": 0.5, "r_max": 50.0},
        "quantities": ["rv_curve", "i_curve", "j_curve", "limits"]
    }"#;
    std::fs::write(tmp.path().join("cfg.json"), cfg).unwrap();
    let files = ["rv.csv", "i.csv", "j.csv", "limits.json", "records.json"];
    let mut first = Vec::new();
    for (k, out) in ["a", "b"].iter().enumerate() {
        let threads = if k == 0 { "1" } else { "4" };
        let (code, stdout, err) = redgeo(
            tmp.path(),
            &["--threads", threads, "run", "--config", "cfg.json", "--out", out],
        );
        assert_eq!(code, 0, "{stdout}{err}");
        let bytes: Vec<Vec<u8>> = files
            .iter()
            .map(|f| std::fs::read(tmp.path().join(out).join("det").join(f)).unwrap())
            .collect();
        if k == 0 {
            first = bytes;
        } else {
            assert_eq!(first, bytes);
        }
    }
    let hash = csv_column(&tmp.path().join("a/det/i.csv"), "config_hash");
    assert!(hash.windows(2).all(|w| w[0] == w[1]) && hash[0].len() == 16);
    let header = csv::Reader::from_path(tmp.path().join("a/det/i.csv"))
        .unwrap()
        .headers()
        .unwrap()
        .clone();
    assert_eq!(&header, vec!["r", "value_primary", "value_alternative", "flag", "config_hash"]);
    assert_eq!(
        csv::Reader::from_path(tmp.path().join("a/det/j.csv")).unwrap().headers().unwrap(),
        vec!["r", "value", "flag", "config_hash"]
    );
}

#[test]
fn flags_override_config_fields() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("cfg.json"),
        r#"{"id":"ov","model":{"name":"gaussian","n":2},"quantities":["rv_curve"]}"#,
    )
    .unwrap();
    let (code, _, err) = redgeo(
        tmp.path(),
        &["run", "--config", "cfg.json", "--model", "sphere:n=2", "--tau-max", "1", "--out", "o"],
    );
    assert_eq!(code, 0, "{err}");
    let taus = csv_column(&tmp.path().join("o/ov/rv.csv"), "tau");
    assert_eq!(taus.last().unwrap().parse::<f64>().unwrap(), 1.0);
    let values = csv_column(&tmp.path().join("o/ov/rv.csv"), "value");
    assert!(values.last().unwrap().parse::<f64>().unwrap() < 1.0);
}

#[test]
fn checks_density_and_ij() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _, err) = redgeo(tmp.path(), &["density", "--model", "sphere:n=2"]);
    assert_eq!(code, 0, "{err}");
    let d: Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/sphere-n2/density.json")).unwrap()).unwrap();
    assert!((d["density"].as_f64().unwrap() - 2.0 / std::f64::consts::E).abs() < 1e-12);

    let (code, _, err) = redgeo(tmp.path(), &["checks", "--model", "cone:slope=0.5"]);
    assert_eq!(code, 0, "{err}");
    let (code, _, err) = redgeo(tmp.path(), &["ij-check", "--model", "sphere:n=2", "--r-min", "1", "--r-max", "30"]);
    assert_eq!(code, 0, "{err}");
    let ij: Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/sphere-n2/ij_check.json")).unwrap())
            .unwrap();
    assert!(ij["report"]["max_relative"].as_f64().unwrap() < 1e-2);
}

#[test]
fn ell_points_and_field_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, out, err) = redgeo(tmp.path(), &["ell", "--model", "cone:slope=0.5", "--tau", "0.5", "--u", "3"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.lines().nth(1).unwrap().ends_with(",4.5"), "{out}");
    let (code, out, err) = redgeo(
        tmp.path(),
        &["ell", "--model", "sphere:n=2", "--route", "variational", "--u", "1.2", "--tau", "2"],
    );
    assert_eq!(code, 0, "{err}");
    let v: f64 = out.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    let (_, exact, _) = redgeo(tmp.path(), &["ell", "--model", "sphere:n=2", "--u", "1.2", "--tau", "2"]);
    let e: f64 = exact.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!((v - e).abs() < 1e-4, "{v} vs {e}");
    let (code, _, err) = redgeo(
        tmp.path(),
        &["ell", "--model", "sphere:n=2", "--field", "f.csv", "--tau-min", "1", "--tau-max", "10"],
    );
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(tmp.path().join("f.csv")).unwrap();
    assert!(text.starts_with("tau,coord,ell,grad_ell,dtau_ell,K"));
}

#[test]
fn variational_field_route_matches_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let base = ["rv", "--model", "sphere:n=2", "--tau-min", "0.1", "--tau-max", "10", "--out"];
    let mut exact = base.to_vec();
    exact.push("e");
    let mut field = base.to_vec();
    field.extend(["f", "--field"]);
    assert_eq!(redgeo(tmp.path(), &exact).0, 0);
    let (code, _, err) = redgeo(tmp.path(), &field);
    assert_eq!(code, 0, "{err}");
    let a = csv_column(&tmp.path().join("e/sphere-n2/rv.csv"), "value");
    let b = csv_column(&tmp.path().join("f/sphere-n2/rv.csv"), "value");
    for (x, y) in a.iter().zip(&b) {
        let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
        assert!((x - y).abs() < 1e-3 * x, "{x} vs {y}");
    }
}

#[test]
fn model_list_and_suite_subset() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, out, _) = redgeo(tmp.path(), &["model", "list"]);
    assert_eq!(code, 0);
    for name in ["gaussian", "cone", "sphere", "scaled_super", "product"] {
        assert!(out.contains(name));
    }
    let (code, out, err) = redgeo(tmp.path(), &["suite", "acceptance", "--only", "1,11", "--json", "acc.json"]);
    assert_eq!(code, 0, "{out}{err}");
    assert_eq!(out.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("acc.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
}

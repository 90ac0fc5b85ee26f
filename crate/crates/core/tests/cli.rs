use std::process::Command;

fn twistor_lab(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_twistor-lab"))
        .args(args)
        .output()
        .expect("run twistor-lab");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn list_shows_catalogue() {
    let (code, out, _) = twistor_lab(&["list"]);
    assert_eq!(code, 0);
    for name in ["flat", "s4", "h4", "cp2", "s2xs2", "perturbed"] {
        assert!(out.contains(name), "{out}");
    }
    let (code, out, _) = twistor_lab(&["list", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 7);
}

#[test]
fn flat_decomposition() {
    let (code, out, _) = twistor_lab(&["decompose", "--manifold", "flat", "--point", "0,0,0,0", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    for key in ["scalar", "b_norm", "w_plus_norm", "w_minus_norm"] {
        assert_eq!(v[key].as_f64(), Some(0.0), "{key}");
    }
}

#[test]
fn sphere_product_decomposition() {
    let (code, out, _) = twistor_lab(&["decompose", "--manifold", "s2xs2", "--point", "0.1,-0.2,0.3,0", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["scalar"].as_f64().unwrap() - 4.0).abs() < 1e-9);
    assert_eq!(v["einstein"], true);
    assert_eq!(v["selfdual"], false);
    assert_eq!(v["antiselfdual"], false);
}

#[test]
fn verify_first_chern_on_sphere() {
    let (code, out, _) = twistor_lab(&["verify", "prop1", "--manifold", "s4", "--t", "1", "--n", "2", "--samples", "50", "--seed", "7"]);
    assert_eq!(code, 0, "{out}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 1);
    assert_eq!(results[0]["verdict"], "pass");
    assert!(results[0]["max_abs_residual"].as_f64().unwrap() < 1e-7);
    assert!(v["wall_time_ms"].is_null());
    assert!(v["versions"]["twistor_lab"].is_string());
}

#[test]
fn hyperbolic_suite_passes() {
    let (code, out, _) = twistor_lab(&["suite", "--manifold", "h4", "--t", "1", "--samples", "4", "--format", "csv"]);
    assert_eq!(code, 0, "{out}");
    let mut theorems: Vec<&str> = out.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    theorems.dedup();
    for id in ["prop1", "prop2", "prop4", "nijenhuis_chern"] {
        assert!(theorems.contains(&id), "{id} missing");
    }
    assert!(out.lines().skip(1).all(|l| l.contains(",pass,")));
}

#[test]
fn failing_verdict_exits_one() {
    let (code, out, _) = twistor_lab(&["verify", "prop1", "--manifold", "s4", "--t", "1", "--n", "1", "--samples", "2", "--tol", "prop1=1e-300", "--format", "text"]);
    assert_eq!(code, 1);
    assert!(out.contains("fail"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["verify", "prop9", "--manifold", "s4"][..],
        &["suite", "--manifold", "torus"],
        &["suite", "--samples", "0"],
        &["suite", "--t", "-1"],
        &["verify", "nijenhuis_chern", "--manifold", "perturbed"],
        &["decompose", "--manifold", "h4", "--point", "5,0,0,0"],
        &["frobnicate"],
    ] {
        let (code, _, err) = twistor_lab(args);
        assert_eq!(code, 2, "{args:?}: {err}");
    }
}

#[test]
fn config_file_and_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out = dir.path().join("report.json");
    std::fs::write(&cfg, r#"{"manifold": "cp2", "t": [1.0], "n": [1], "samples": 2, "seed": 3}"#).unwrap();
    let (code, stdout, _) = twistor_lab(&["verify", "prop2", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["config"]["manifold"], "cp2");
    assert_eq!(v["config"]["seed"], 3);

    std::fs::write(&cfg, "{not json").unwrap();
    let (code, _, _) = twistor_lab(&["suite", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn oracle_command() {
    let (code, out, _) = twistor_lab(&["oracle", "--manifold", "s2xs2", "--t", "1", "--samples", "10"]);
    assert_eq!(code, 0, "{out}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let o = &v["oracle"][0];
    assert_eq!(o["checked"], 1);
    assert!(o["twistor_discrepancy"].as_f64().unwrap() < 1e-4);
}

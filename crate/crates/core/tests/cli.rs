use std::fs;
use std::process::{Command, Output};

fn bcs_ent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcs-ent"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn two_level_report_matches_closed_form() {
    let out = bcs_ent(&["solve", "--L", "2", "--lambda", "0.5", "--backend", "both"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // E0 = -sqrt(1 + g^2) with g = 1/2, C = g / sqrt(1 + g^2)
    let exact_e = -(1.25f64).sqrt();
    let exact_c = 0.5 / 1.25f64.sqrt();
    for r in doc["reports"].as_array().unwrap() {
        assert!((r["energy"].as_f64().unwrap() - exact_e).abs() < 1e-12);
        assert!((r["alc"].as_f64().unwrap() - exact_c).abs() < 1e-12);
    }
    let dev = &doc["diagnostics"]["max_deviation"];
    assert!(dev["energy"].as_f64().unwrap() < 1e-10);
    assert!(dev["local_concurrence"].as_f64().unwrap() < 1e-10);
}

#[test]
fn ed_capacity_error_names_binomial() {
    let out = bcs_ent(&["solve", "--L", "68", "--lambda", "1", "--backend", "ed"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("binomial(68,34)"));
}

#[test]
fn invalid_arguments_exit_with_two() {
    assert_eq!(bcs_ent(&["solve", "--L", "3", "--lambda", "1"]).status.code(), Some(2));
    assert_eq!(bcs_ent(&["solve", "--L", "4", "--lambda", "-1"]).status.code(), Some(2));
    assert_eq!(bcs_ent(&["meanfield", "--grid", "1:0"]).status.code(), Some(2));
    assert_eq!(bcs_ent(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn config_file_supplies_missing_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# half filling\nL = 2\nlambda = 0.5\nbackend = ed\n").unwrap();
    let out = bcs_ent(&["solve", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["reports"][0]["source"], "exactdiag");

    // flags win over the file
    let out = bcs_ent(&["solve", "--config", cfg.to_str().unwrap(), "--lambda", "1"]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["lambda"].as_f64(), Some(1.0));
}

#[test]
fn figure_one_reruns_are_byte_identical_and_ordered() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = bcs_ent(&[
            "figure", "fig1", "--grid", "0.8:3:12", "--out", d.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let csv_a = fs::read(a.path().join("fig1_meanfield_alc.csv")).unwrap();
    let csv_b = fs::read(b.path().join("fig1_meanfield_alc.csv")).unwrap();
    assert_eq!(csv_a, csv_b);

    // profile order at every λ: square < abs < uniform < parabolic < tent
    let text = String::from_utf8(csv_a).unwrap();
    let mut by_lambda: std::collections::BTreeMap<String, Vec<(String, f64)>> = Default::default();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        by_lambda
            .entry(f[1].to_string())
            .or_default()
            .push((f[0].to_string(), f[3].parse().unwrap()));
    }
    assert_eq!(by_lambda.len(), 12);
    let order = ["square", "abs", "uniform", "parabolic", "tent"];
    for (lam, rows) in by_lambda {
        let alc: Vec<f64> = order
            .iter()
            .map(|p| rows.iter().find(|(n, _)| n == p).unwrap().1)
            .collect();
        assert!(alc.windows(2).all(|w| w[0] < w[1]), "λ={lam}: {alc:?}");
    }
    assert!(a.path().join("metadata.json").exists());
}

#[test]
fn numbers_carry_seventeen_significant_digits() {
    let out = bcs_ent(&["sweep", "--L", "4", "--grid", "0.5:1:2", "--backend", "ed"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().filter(|l| !l.starts_with('#')).nth(1).unwrap();
    let energy = row.split(',').nth(5).unwrap();
    let mantissa = energy.trim_start_matches('-').split('e').next().unwrap();
    assert_eq!(mantissa.replace('.', "").len(), 17, "{energy}");
}

#[test]
fn verify_exits_nonzero_on_loose_tolerance() {
    let out = bcs_ent(&["verify", "--only", "4", "--tol-newton", "1e-3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[FAIL]"));
}

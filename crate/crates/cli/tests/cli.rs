use std::path::PathBuf;
use std::process::Command;

fn hermite(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hermite")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn default_config() -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json");
    root.to_string_lossy().into_owned()
}

#[test]
fn rho_spot_value() {
    let (code, out, _) = hermite(&["spaces", "rho", "--x", "3"]);
    assert_eq!(code, 0);
    assert_eq!(out, "0.25\n");
}

#[test]
fn heat_kernel_at_origin() {
    let (code, out, _) = hermite(&["kernel", "heat", "--x", "0", "--y", "0", "--t", "1", "--n", "1"]);
    assert_eq!(code, 0);
    let v: f64 = out.trim().parse().unwrap();
    let exact = ((-2.0f64).exp() / (std::f64::consts::PI * (1.0 - (-4.0f64).exp()))).sqrt();
    assert!((v - exact).abs() < 1e-15, "{v}");
}

#[test]
fn polarization_with_default_config() {
    let config = default_config();
    let (code, out, err) = hermite(&["verify", "polarization", "--config", &config, "--format", "json"]);
    assert_eq!(code, 0, "{err}");
    let reports: serde_json::Value = serde_json::from_str(&out).unwrap();
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert!(reports.iter().all(|r| r["pass"] == true));
    let lhs = reports[0]["computed"][0].as_f64().unwrap();
    assert!((lhs - 0.25).abs() <= 1e-4);
    assert!(reports[0].get("runtime").is_none());
}

#[test]
fn output_is_byte_identical_across_runs() {
    let config = default_config();
    let args = ["gamma", "rank-one", "--b", "1,-2,0.5", "--q", "1.5", "--config", config.as_str(), "--d", "3", "--M", "20000"];
    let (c1, a, _) = hermite(&args);
    let (c2, b, _) = hermite(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    let (_, other, _) = hermite(&["gamma", "rank-one", "--b", "1,-2,0.5", "--q", "1.5", "--M", "20000", "--seed", "1"]);
    assert_ne!(a, other);
}

#[test]
fn failed_check_exits_one() {
    let (code, out, _) = hermite(&["verify", "heat-spectral", "--t", "0.1", "--kmax", "20"]);
    assert_eq!(code, 1);
    assert!(out.contains(",false,"));
}

#[test]
fn usage_and_config_errors_exit_two() {
    let (code, _, err) = hermite(&["frobnicate"]);
    assert_eq!(code, 2);
    assert!(err.contains("Usage"));
    let (code, _, _) = hermite(&["spaces", "rho", "--x", "1", "--bogus"]);
    assert_eq!(code, 2);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"grid": {"R": 10, "spacing": 0.1}}"#).unwrap();
    let (code, _, err) = hermite(&["spaces", "rho", "--x", "1", "--config", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("grid.spacing"), "{err}");

    std::fs::write(&bad, r#"{"time": {"tmin": 1, "tmax": 0.5}}"#).unwrap();
    let (code, _, err) = hermite(&["spaces", "rho", "--x", "1", "--config", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("time.tmax"), "{err}");

    let (code, _, err) = hermite(&["kernel", "heat", "--x", "0", "--y", "0", "--t", "-1"]);
    assert_eq!(code, 2);
    assert!(!err.is_empty());
}

#[test]
fn help_documents_every_subcommand() {
    let (code, out, _) = hermite(&["--help"]);
    assert_eq!(code, 0);
    for sub in ["basis", "kernel", "semigroup", "gamma", "spaces", "verify"] {
        assert!(out.contains(sub), "{sub}");
        let (code, help, _) = hermite(&[sub, "--help"]);
        assert_eq!(code, 0);
        assert!(help.contains("Usage"));
    }
}

#[test]
fn csv_tables_have_headers_and_write_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    let (code, out, _) = hermite(&["basis", "table", "--x", "0.5", "--K", "4", "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(reader.headers().unwrap(), vec!["k", "x", "value", "derivative"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 5);
    let h0: f64 = rows[0][2].parse().unwrap();
    assert!((h0 - std::f64::consts::PI.powf(-0.25) * (-0.125f64).exp()).abs() < 1e-15);
}

#[test]
fn json_scalar_and_semigroup_table() {
    let (code, out, _) = hermite(&["--format", "json", "semigroup", "apply", "--kind", "poisson", "--coeffs", "1", "--t", "1", "--x", "0"]);
    assert_eq!(code, 0);
    let rows: serde_json::Value = serde_json::from_str(&out).unwrap();
    let v = rows[0]["value"].as_f64().unwrap();
    assert!((v - (-1.0f64).exp() * std::f64::consts::PI.powf(-0.25)).abs() < 1e-15);
    let (code, out, _) = hermite(&["spaces", "rho", "--x", "0.5", "--format", "json"]);
    assert_eq!(code, 0);
    assert_eq!(out, "{\"value\":0.5}\n");
}

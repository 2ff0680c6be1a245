//! End-to-end runs of the `dstc-sim` binary.

use std::path::Path;
use std::process::Command;

fn dstc_sim(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dstc-sim"))
        .args(args)
        .env_remove("DSTC_SIM_THREADS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn minimal_config_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "min.json",
        r#"{"protocol": "EJHS", "T": 5, "N": 5, "M": 2, "sigma2sq": 0.5, "P_dB": [6], "blocks": 100, "seed": 1}"#,
    );
    let out = dir.path().join("out");
    let run = dstc_sim(&["ber", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(
        run.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let csv = std::fs::read_to_string(out.join("ber.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with(
        "protocol,sigma2sq,P_dB,p1,p2,p3,blocks,bit_errors,ber,ci_low,ci_high,config_hash"
    ));
    assert!(lines[1].starts_with("EJHS,0.5,6.0,"));

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let hash = manifest["config_hash"].as_str().unwrap();
    assert!(lines[1].ends_with(hash));
}

#[test]
fn explicit_sum_mismatch_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "bad.json",
        r#"{
  "protocol": "RMC", "T": 2, "N": 2, "M": 2, "sigma2sq": 0.5,
  "P_dB": [10],
  "blocks": 10, "seed": 1,
  "allocation": "explicit",
  "p1": [3.0], "p2": [3.0], "p3": [3.0]
}"#,
    );
    let run = dstc_sim(&[
        "ber",
        "--config",
        &config,
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(2));
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(err.contains("p1+p2+p3"), "{err}");
    assert!(err.contains(":6:"), "{err}");
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "extra.json",
        r#"{"protocol": "RSC", "T": 2, "N": 2, "M": 2, "sigma2sq": 0.5, "P_dB": [6], "blocks": 5, "seed": 1, "colour": 3}"#,
    );
    let run = dstc_sim(&[
        "ber",
        "--config",
        &config,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("colour"));
}

#[test]
fn missing_config_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let run = dstc_sim(&[
        "ber",
        "--config",
        missing.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(3));
}

#[test]
fn seed_override_changes_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "c.json",
        r#"{"protocol": "MJHS", "T": 2, "N": 2, "M": 2, "sigma2sq": 0.15, "P_dB": [8], "blocks": 50, "seed": 1, "grid": 0.05}"#,
    );
    let hash = |out: &Path, extra: &[&str]| {
        let mut args = vec!["ber", "--config", &config, "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        assert_eq!(dstc_sim(&args).status.code(), Some(0));
        let csv = std::fs::read_to_string(out.join("ber.csv")).unwrap();
        csv.lines()
            .nth(1)
            .unwrap()
            .rsplit(',')
            .next()
            .unwrap()
            .to_string()
    };
    let a = hash(&dir.path().join("a"), &[]);
    let b = hash(&dir.path().join("b"), &["--seed-override", "2"]);
    assert_ne!(a, b);
}

#[test]
fn powalloc_ejhs_rows_are_equal_split() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pa");
    let run = dstc_sim(&[
        "powalloc",
        "--protocol",
        "ejhs",
        "--sigma2sq",
        "0.3",
        "--from",
        "0",
        "--to",
        "24",
        "--step",
        "6",
        "--grid",
        "0.01",
        "--fit",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        run.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let mut reader = csv::Reader::from_path(out.join("powalloc.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        for name in ["p1_frac", "p2_frac", "p3_frac"] {
            let f: f64 = rec[col(name)].parse().unwrap();
            assert!((f - 1.0 / 3.0).abs() <= 0.01 + 1e-9);
        }
        rows += 1;
    }
    assert_eq!(rows, 5);
    assert!(out.join("fit.json").exists());
}

#[test]
fn powalloc_rejects_reversed_range() {
    let dir = tempfile::tempdir().unwrap();
    let run = dstc_sim(&[
        "powalloc",
        "--protocol",
        "RMC",
        "--sigma2sq",
        "0.3",
        "--from",
        "10",
        "--to",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn snrmap_covers_the_simplex() {
    let dir = tempfile::tempdir().unwrap();
    let run = dstc_sim(&[
        "snrmap",
        "--protocol",
        "RSC",
        "--sigma2sq",
        "0.15",
        "--p-db",
        "10",
        "--grid",
        "0.1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("snrmap.csv")).unwrap();
    // 11 + 10 + ... + 1 grid points plus the header
    assert_eq!(csv.lines().count(), 66 + 1);
}

#[test]
fn validate_passes_and_detects_injected_fault() {
    let ok = dstc_sim(&["validate", "--threads", "2"]);
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stdout)
    );
    let bad = dstc_sim(&["validate", "--inject-fault"]);
    assert_eq!(bad.status.code(), Some(1));
    let table = String::from_utf8_lossy(&bad.stdout);
    assert!(table
        .lines()
        .any(|l| l.starts_with("covariance-hermitian") && l.contains("FAIL")));
}

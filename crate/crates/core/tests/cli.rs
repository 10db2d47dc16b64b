use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cluster-mass"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn grow_twice_gives_identical_exports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "leaf.json",
        r#"{"scheme": "LeafMass", "steps": 300, "poisson_rate": 2.0}"#,
    );
    for run in ["a", "b"] {
        let out = bin(
            &[
                "grow", "--config", &cfg, "--seed", "42", "--out", run, "--format", "dot",
            ],
            dir.path(),
        );
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for file in ["edges.tsv", "stats.json", "steps.jsonl", "forest.dot"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
        assert!(!a.is_empty(), "{file}");
    }
    let stats: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("a/stats.json")).unwrap()).unwrap();
    let v = stats["vertices"].as_u64().unwrap();
    assert_eq!(stats["edges"].as_u64().unwrap(), v - 1);
    let lines = fs::read_to_string(dir.path().join("a/steps.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 300);
    let first = lines.lines().next().unwrap();
    let at = |key: &str| first.find(&format!("\"{key}\":")).unwrap();
    let order = ["step", "arrivals", "targets", "weights", "choices"].map(at);
    assert!(order.windows(2).all(|w| w[0] < w[1]), "{first}");
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"scheme": "MeanAffine", "steps": 100, "seed": 1}"#,
    );
    assert_eq!(
        bin(&["grow", "--config", &cfg, "--out", "cfg"], dir.path())
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        bin(
            &["grow", "--config", &cfg, "--seed", "1", "--out", "same"],
            dir.path()
        )
        .status
        .code(),
        Some(0)
    );
    assert_eq!(
        bin(
            &["grow", "--config", &cfg, "--seed", "2", "--out", "other"],
            dir.path()
        )
        .status
        .code(),
        Some(0)
    );
    let read = |d: &str| fs::read(dir.path().join(d).join("edges.tsv")).unwrap();
    assert_eq!(read("cfg"), read("same"));
    assert_ne!(read("cfg"), read("other"));
}

#[test]
fn grow_without_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["grow", "--scheme", "leaf-mass"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn random_forest_delta_error_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "rf.json",
        r#"{"scheme": "RandomForest", "beta": 1.0, "delta": 1.0}"#,
    );
    let out = bin(&["grow", "--config", &cfg, "--seed", "3"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));
}

#[test]
fn density_levy_marginal_to_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(
        &[
            "density",
            "levy-marginal",
            "--alpha-i",
            "1",
            "--alpha-total",
            "2",
            "--points",
            "101",
            "--out",
            "d",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("d/density.csv")).unwrap();
    let row = text
        .lines()
        .find(|l| l.starts_with("5.0000000000000000e-1,"))
        .unwrap();
    let value: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((value - std::f64::consts::FRAC_2_PI).abs() < 1e-6);
}

#[test]
fn sample_normalized_mean() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(
        &[
            "sample",
            "normalized",
            "--family",
            "gamma",
            "--alphas",
            "1,3",
            "--count",
            "100000",
            "--seed",
            "7",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut sum = 0.0;
    let mut n = 0.0;
    for line in text.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cells.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        sum += cells[0];
        n += 1.0;
    }
    assert_eq!(n, 100000.0);
    assert!((sum / n - 0.25).abs() < 0.005);
}

#[test]
fn validate_small_sample_passes_with_wide_bands() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(
        &["validate", "--seed", "1", "--n-samples", "100"],
        dir.path(),
    );
    let table = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{table}");
    assert_eq!(table.matches("PASS").count(), 6);
}

#[test]
fn validate_rejects_zero_samples_and_unknown_flags() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        bin(&["validate", "--seed", "1", "--n-samples", "0"], dir.path())
            .status
            .code(),
        Some(1)
    );
    let out = bin(&["validate", "--frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

use std::path::Path;
use std::process::{Command, Output};

fn uniradar(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uniradar"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("UNIRADAR_THREADS", "2")
        .output()
        .expect("binary runs")
}

#[test]
fn halton_pair_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = uniradar(
        &["radar", "--gen", "halton", "--n", "250", "--dims", "14,15"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "radar.json",
        "radar.csv",
        "radar.svg",
        "design.svg",
        "manifest.json",
    ] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let scan: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("radar.json")).unwrap()).unwrap();
    assert_eq!(scan["n"], 250);
}

#[test]
fn uniform_design_mostly_accepted() {
    // stochastic: a 5% level over 720 correlated directions rejects now and then
    let mut accepted = 0;
    for seed in 1..=10 {
        let dir = tempfile::tempdir().unwrap();
        let s = seed.to_string();
        let out = uniradar(
            &[
                "radar",
                "--gen",
                "uniform",
                "--n",
                "100",
                "--d",
                "2",
                "--seed",
                &s,
                "--level",
                "0.95",
                "--formats",
                "json",
            ],
            dir.path(),
        );
        let code = out.status.code().unwrap();
        assert!(code == 0 || code == 3);
        accepted += usize::from(code == 0);
    }
    assert!(accepted >= 6, "only {accepted}/10 uniform designs accepted");
}

#[test]
fn seed_one_uniform_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let out = uniradar(
        &[
            "radar", "--gen", "uniform", "--n", "100", "--d", "2", "--seed", "1",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn missing_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = uniradar(&["radar", "--input", "/nonexistent/design.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("design.csv"));
}

#[test]
fn bad_flags_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = uniradar(&["radar", "--gen", "uniform", "--n", "10"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = uniradar(
        &[
            "radar", "--gen", "uniform", "--n", "10", "--d", "2", "--level", "2",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_uniradar"))
        .args(["radar", "--gen", "oa49"])
        .env("UNIRADAR_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gn_rejects_halton_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = uniradar(
        &["gn", "--gen", "halton", "--n", "100", "--dims", "3,6"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("gn.json")).unwrap()).unwrap();
    let g = report["g"].as_f64().unwrap();
    assert!((5.2..=7.0).contains(&g), "G = {g}");
    assert_eq!(report["rejected"], true);
}

#[test]
fn gn_single_centered_point_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("one.csv");
    std::fs::write(&input, "0,0\n").unwrap();
    let out = uniradar(
        &["gn", "--input", input.to_str().unwrap()],
        &dir.path().join("out"),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn gn_beyond_table_warns() {
    let dir = tempfile::tempdir().unwrap();
    let out = uniradar(
        &[
            "gn", "--gen", "uniform", "--n", "150", "--d", "2", "--seed", "3",
        ],
        dir.path(),
    );
    assert!(matches!(out.status.code(), Some(0 | 3)));
    assert!(String::from_utf8_lossy(&out.stderr).contains("using the N = 100 row"));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("gn.json")).unwrap()).unwrap();
    assert_eq!(report["table_n"], 100);
}

#[test]
fn gn_table_and_custom_table() {
    let dir = tempfile::tempdir().unwrap();
    let table_dir = dir.path().join("table");
    let out = uniradar(
        &[
            "gn-table",
            "--n-values",
            "3,6",
            "--replicates",
            "1000",
            "--resolution",
            "2",
        ],
        &table_dir,
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(table_dir.join("gn_table.csv")).unwrap();
    assert!(csv.starts_with("N,P80,P85,P90,P95,P99\n3,"));
    assert_eq!(csv.lines().count(), 3);
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(table_dir.join("gn_table.json")).unwrap()).unwrap();
    assert_eq!(meta["replicates"], 1000);
    assert_eq!(meta["seed"], 42);

    let table = table_dir.join("gn_table.csv");
    let out = uniradar(
        &[
            "gn",
            "--gen",
            "uniform",
            "--n",
            "6",
            "--d",
            "2",
            "--table",
            table.to_str().unwrap(),
        ],
        &dir.path().join("gn"),
    );
    assert!(matches!(out.status.code(), Some(0 | 3)));
}

#[test]
fn replay_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let out = uniradar(
        &[
            "radar",
            "--gen",
            "uniform",
            "--n",
            "30",
            "--d",
            "3",
            "--seed",
            "5",
            "--resolution",
            "6",
        ],
        &first,
    );
    assert!(matches!(out.status.code(), Some(0 | 3)));
    let second = dir.path().join("b");
    let manifest = first.join("manifest.json");
    let replay = uniradar(&["replay", manifest.to_str().unwrap()], &second);
    assert_eq!(replay.status.code(), out.status.code());
    for f in [
        "radar.json",
        "radar.csv",
        "radar_heatmap.svg",
        "radar_pins.svg",
    ] {
        assert_eq!(
            std::fs::read(first.join(f)).unwrap(),
            std::fs::read(second.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn high_dimension_needs_arity() {
    let dir = tempfile::tempdir().unwrap();
    let out = uniradar(
        &["radar", "--gen", "halton", "--n", "50", "--d", "4"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let out = uniradar(
        &[
            "radar",
            "--gen",
            "halton",
            "--n",
            "50",
            "--d",
            "4",
            "--arity",
            "3",
            "--resolution",
            "10",
        ],
        dir.path(),
    );
    assert!(matches!(out.status.code(), Some(0 | 3)));
    let scans: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("subspaces.json")).unwrap()).unwrap();
    assert_eq!(scans.as_array().unwrap().len(), 4);
}

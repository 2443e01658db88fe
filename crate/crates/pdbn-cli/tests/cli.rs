//! End-to-end tests for the `pdbn` binary: every subcommand, the documented
//! exit codes, and byte-level reproducibility of generated artifacts.

use std::path::Path;
use std::process::{Command, Output};

fn pdbn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdbn"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

#[test]
fn gen_validate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdbn(
        &["gen", "--kind", "tree", "-n", "7", "--seed", "3", "--out", "model.json"],
        dir.path(),
    );
    assert!(out.status.success());

    let report = stdout_of(&pdbn(&["validate", "--model", "model.json"], dir.path()));
    assert!(report.contains("class: tree"));
    assert!(report.contains("hidden nodes: 7"));
    assert!(report.contains("observation leaves: 4"));
    assert!(report.contains("exact engine: supported"));
}

#[test]
fn gen_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = stdout_of(&pdbn(
        &["gen", "--kind", "polytree", "-n", "9", "--seed", "11"],
        dir.path(),
    ));
    let b = stdout_of(&pdbn(
        &["gen", "--kind", "polytree", "-n", "9", "--seed", "11"],
        dir.path(),
    ));
    let c = stdout_of(&pdbn(
        &["gen", "--kind", "polytree", "-n", "9", "--seed", "12"],
        dir.path(),
    ));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn sample_then_smooth_yields_normalized_posteriors() {
    let dir = tempfile::tempdir().unwrap();
    pdbn(
        &["gen", "--kind", "tree", "-n", "3", "--seed", "5", "--out", "model.json"],
        dir.path(),
    );
    let out = pdbn(
        &[
            "sample", "--model", "model.json", "--slices", "6", "--seed", "8", "--out",
            "ev.json", "--trajectory-out", "traj.json",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let traj: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("traj.json")).unwrap())
            .unwrap();
    assert_eq!(traj["hidden"].as_array().unwrap().len(), 3);
    assert_eq!(traj["hidden"][0].as_array().unwrap().len(), 6);

    let text = stdout_of(&pdbn(
        &["smooth", "--model", "model.json", "--evidence", "ev.json", "--slices", "6"],
        dir.path(),
    ));
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["horizon"], 6);
    let posteriors = doc["posteriors"].as_array().unwrap();
    assert_eq!(posteriors.len(), 3);
    for p in posteriors {
        let cp = p["changepoint"].as_array().unwrap();
        assert_eq!(cp.len(), 7);
        let total: f64 = cp.iter().map(|v| v.as_f64().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn filter_emits_one_row_per_node_slice() {
    let dir = tempfile::tempdir().unwrap();
    pdbn(
        &["gen", "--kind", "tree", "-n", "3", "--seed", "5", "--out", "model.json"],
        dir.path(),
    );
    pdbn(
        &["sample", "--model", "model.json", "--slices", "4", "--seed", "1", "--out", "ev.json"],
        dir.path(),
    );
    let csv = stdout_of(&pdbn(
        &[
            "filter", "--model", "model.json", "--evidence", "ev.json", "--slices", "4",
            "--algorithm", "window", "--window", "2", "--pin",
        ],
        dir.path(),
    ));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "node,t,p_on");
    assert_eq!(lines.len(), 1 + 3 * 4);
    for line in &lines[1..] {
        let p: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&p), "marginal out of range: {line}");
    }
}

#[test]
fn bench_csv_is_byte_identical_without_wall_times() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "bench", "--kind", "tree", "-n", "3,7", "--slices", "4", "--reps", "2", "--seed",
        "9", "--algorithms", "smooth,ve,bk,window", "--windows", "2", "--no-wall",
    ];
    let a = stdout_of(&pdbn(&args, dir.path()));
    let b = stdout_of(&pdbn(&args, dir.path()));
    assert_eq!(a, b);
    assert!(a.starts_with("kind,n,m,evidence_fraction,rep,seed,algorithm,window,t,status,"));
}

#[test]
fn plotdata_writes_three_aggregate_files() {
    let dir = tempfile::tempdir().unwrap();
    pdbn(
        &[
            "bench", "--kind", "tree", "-n", "3", "--slices", "4,8", "--reps", "2", "--seed",
            "2", "--algorithms", "smooth,bk", "--no-wall", "--out", "results.csv",
        ],
        dir.path(),
    );
    let out = pdbn(
        &["plotdata", "--input", "results.csv", "--out-dir", "plots"],
        dir.path(),
    );
    assert!(out.status.success());
    for name in ["time_vs_n.csv", "time_vs_m.csv", "error_vs_w.csv"] {
        let text = std::fs::read_to_string(dir.path().join("plots").join(name)).unwrap();
        assert!(text.lines().next().unwrap().contains("kind,"), "{name} has a header");
    }
}

#[test]
fn malformed_model_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("broken.json"), "not json").unwrap();
    let out = pdbn(&["validate", "--model", "broken.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_probability_evidence_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("never.json"),
        r#"{"nodes": [{"id": "a", "parents": [], "persistent": true, "cpd": {"": 0.0}}]}"#,
    )
    .unwrap();
    std::fs::write(
        dir.path().join("on.json"),
        r#"[{"node": "a", "t": 1, "value": 1}]"#,
    )
    .unwrap();

    let smooth = pdbn(
        &["smooth", "--model", "never.json", "--evidence", "on.json", "--slices", "3"],
        dir.path(),
    );
    assert_eq!(smooth.status.code(), Some(3));

    let filter = pdbn(
        &[
            "filter", "--model", "never.json", "--evidence", "on.json", "--slices", "3",
            "--algorithm", "exact",
        ],
        dir.path(),
    );
    assert_eq!(filter.status.code(), Some(3));
}

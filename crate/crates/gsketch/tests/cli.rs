//! End-to-end tests of the command-line pipeline: generate, plan, ingest,
//! query, inspect, and the error paths a shell user can hit.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gsketch::bench::ExactOracle;
use gsketch::stream::parse_stream_line;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gsketch")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn run_err(args: &[&str]) -> String {
    let out = run(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// generate -> plan -> ingest under one temp dir; returns the artifact paths.
fn pipeline(dir: &Path, with_global: bool) -> (PathBuf, PathBuf, PathBuf) {
    let stream = dir.join("stream.tsv");
    let plan = dir.join("plan.json");
    let snap = dir.join("engine.snap");
    run_ok(&[
        "generate", "--scale", "10", "--edges", "20000", "--seed", "5",
        "--out", stream.to_str().unwrap(),
    ]);
    run_ok(&[
        "plan", "--stream", stream.to_str().unwrap(), "--sample-size", "2000",
        "--budget-bytes", "65536", "--depth", "4", "--seed", "5",
        "--out", plan.to_str().unwrap(),
    ]);
    let mut ingest = vec![
        "ingest", "--plan", plan.to_str().unwrap(), "--stream", stream.to_str().unwrap(),
        "--seed", "5", "--out", snap.to_str().unwrap(),
    ];
    if with_global {
        ingest.push("--with-global");
    }
    run_ok(&ingest);
    (stream, plan, snap)
}

fn oracle_for(stream: &Path) -> ExactOracle {
    let elements: Vec<_> = std::fs::read_to_string(stream)
        .unwrap()
        .lines()
        .map(|l| parse_stream_line(l, 0).unwrap())
        .collect();
    ExactOracle::build(&elements)
}

#[test]
fn generate_is_deterministic_and_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.tsv"), dir.path().join("b.tsv"));
    for out in [&a, &b] {
        run_ok(&[
            "generate", "--scale", "8", "--edges", "5000", "--seed", "17",
            "--out", out.to_str().unwrap(),
        ]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 5000);
    for line in text.lines() {
        let e = parse_stream_line(line, 0).unwrap();
        assert!(e.freq >= 1);
    }
    // A different seed produces a different stream.
    let c = dir.path().join("c.tsv");
    run_ok(&[
        "generate", "--scale", "8", "--edges", "5000", "--seed", "18",
        "--out", c.to_str().unwrap(),
    ]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn query_single_edge_never_underestimates() {
    let dir = tempfile::tempdir().unwrap();
    let (stream, _, snap) = pipeline(dir.path(), true);
    let oracle = oracle_for(&stream);
    let (src, dst) = oracle.distinct_edges()[0].clone();
    for engine in ["gsketch", "global"] {
        let out = run_ok(&[
            "query", "--snapshot", snap.to_str().unwrap(),
            "--src", src.as_str(), "--dst", dst.as_str(), "--engine", engine,
        ]);
        let fields: Vec<&str> = out.trim().split('\t').collect();
        assert_eq!(fields[0], src.as_str());
        assert_eq!(fields[1], dst.as_str());
        let est: u64 = fields[2].parse().unwrap();
        assert!(est >= oracle.truth(&src, &dst), "{engine}: {est}");
    }
}

#[test]
fn query_file_and_subgraph_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    let (stream, _, snap) = pipeline(dir.path(), false);
    let oracle = oracle_for(&stream);
    let edges = oracle.distinct_edges();

    // A plain query file: one estimate line per edge, same order.
    let qfile = dir.path().join("queries.tsv");
    let lines: Vec<String> = edges[..4]
        .iter()
        .map(|(s, d)| format!("{}\t{}", s.as_str(), d.as_str()))
        .collect();
    std::fs::write(&qfile, lines.join("\n")).unwrap();
    let out = run_ok(&["query", "--snapshot", snap.to_str().unwrap(), "--queries", qfile.to_str().unwrap()]);
    let estimates: Vec<u64> = out
        .lines()
        .map(|l| l.rsplit('\t').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(estimates.len(), 4);
    for ((s, d), est) in edges[..4].iter().zip(&estimates) {
        assert!(*est >= oracle.truth(s, d));
    }

    // The same edges as one subgraph block, under each aggregate.
    let sfile = dir.path().join("subgraph.tsv");
    std::fs::write(&sfile, lines.join("\n")).unwrap();
    let mut got = Vec::new();
    for aggregate in ["sum", "min", "average"] {
        let out = run_ok(&[
            "query", "--snapshot", snap.to_str().unwrap(), "--queries", sfile.to_str().unwrap(),
            "--subgraphs", "--aggregate", aggregate,
        ]);
        let fields: Vec<&str> = out.trim().split('\t').collect();
        assert_eq!(fields[1], aggregate);
        got.push(fields[2].parse::<f64>().unwrap());
    }
    let sum: u64 = estimates.iter().sum();
    let min = *estimates.iter().min().unwrap();
    assert_eq!(got[0], sum as f64);
    assert_eq!(got[1], min as f64);
    assert_eq!(got[2], sum as f64 / estimates.len() as f64);
}

#[test]
fn ingest_reports_exact_stream_mass() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("stream.tsv");
    run_ok(&[
        "generate", "--scale", "9", "--edges", "8000", "--freq-zipf-alpha", "1.2",
        "--seed", "3", "--out", stream.to_str().unwrap(),
    ]);
    let plan = dir.path().join("plan.json");
    run_ok(&[
        "plan", "--stream", stream.to_str().unwrap(), "--sample-size", "800",
        "--budget-bytes", "32768", "--seed", "3", "--out", plan.to_str().unwrap(),
    ]);
    let snap = dir.path().join("engine.snap");
    let mass: u64 = run_ok(&[
        "ingest", "--plan", plan.to_str().unwrap(), "--stream", stream.to_str().unwrap(),
        "--seed", "3", "--out", snap.to_str().unwrap(),
    ])
    .trim()
    .parse()
    .unwrap();
    let expected: u64 = std::fs::read_to_string(&stream)
        .unwrap()
        .lines()
        .map(|l| parse_stream_line(l, 0).unwrap().freq)
        .sum();
    assert_eq!(mass, expected);
}

#[test]
fn inspect_summarizes_plans_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let (_, plan, snap) = pipeline(dir.path(), true);
    let plan_out = run_ok(&["inspect", plan.to_str().unwrap()]);
    assert!(plan_out.contains("depth\t4"), "{plan_out}");
    assert!(plan_out.contains("leaves\t"), "{plan_out}");
    assert!(plan_out.contains("outlier_width\t"), "{plan_out}");
    let snap_out = run_ok(&["inspect", snap.to_str().unwrap()]);
    assert!(snap_out.contains("ingested_mass\t"), "{snap_out}");
    assert!(snap_out.contains("global\ttrue"), "{snap_out}");
}

#[test]
fn bench_writes_csv_with_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("stream.tsv");
    run_ok(&[
        "generate", "--scale", "9", "--edges", "10000", "--seed", "21",
        "--out", stream.to_str().unwrap(),
    ]);
    let csv = dir.path().join("report.csv");
    run_ok(&[
        "bench", "--stream", stream.to_str().unwrap(), "--budgets", "16384,65536",
        "--sample-size", "1000", "--query-count", "200", "--seed", "21",
        "--out", csv.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("engine,scenario,budget_bytes"), "{header}");
    let rows: Vec<&str> = lines.collect();
    // Two budgets, two engines each, partitioned engine first.
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("gsketch,"));
    assert!(rows[1].starts_with("global,"));
}

#[test]
fn user_errors_are_reported_not_panicked() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.tsv").to_str().unwrap().to_string();

    let err = run_err(&[
        "plan", "--stream", &missing, "--sample-size", "100",
        "--budget-bytes", "4096", "--seed", "1",
        "--out", dir.path().join("p.json").to_str().unwrap(),
    ]);
    assert!(err.contains("error:"), "{err}");

    let stream = dir.path().join("stream.tsv");
    run_ok(&[
        "generate", "--scale", "6", "--edges", "500", "--seed", "1",
        "--out", stream.to_str().unwrap(),
    ]);

    // Collision bound outside (0, 1).
    let err = run_err(&[
        "plan", "--stream", stream.to_str().unwrap(), "--sample-size", "100",
        "--budget-bytes", "4096", "--c", "1.5", "--seed", "1",
        "--out", dir.path().join("p.json").to_str().unwrap(),
    ]);
    assert!(err.contains("error:"), "{err}");

    // Workload scenario without a workload file.
    let err = run_err(&[
        "plan", "--stream", stream.to_str().unwrap(), "--sample-size", "100",
        "--budget-bytes", "4096", "--scenario", "workload", "--seed", "1",
        "--out", dir.path().join("p.json").to_str().unwrap(),
    ]);
    assert!(err.contains("--workload"), "{err}");

    // Querying the global engine from a snapshot written without one.
    let (_, _, snap) = pipeline(dir.path(), false);
    let err = run_err(&[
        "query", "--snapshot", snap.to_str().unwrap(),
        "--src", "v0", "--dst", "v1", "--engine", "global",
    ]);
    assert!(err.contains("--with-global"), "{err}");

    // A malformed stream line.
    let bad = dir.path().join("bad.tsv");
    std::fs::write(&bad, "only_one_field\n").unwrap();
    let err = run_err(&[
        "plan", "--stream", bad.to_str().unwrap(), "--sample-size", "10",
        "--budget-bytes", "4096", "--seed", "1",
        "--out", dir.path().join("p.json").to_str().unwrap(),
    ]);
    assert!(err.contains("error:"), "{err}");
}

use std::fs;
use std::path::Path;

use clap::error::ErrorKind;
use clap::Parser;

use super::*;

fn parse(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
    Cli::try_parse_from(std::iter::once("semtopo").chain(args.iter().copied()))
}

fn run_args(args: &[&str]) -> Result<RunManifest> {
    run(parse(args).expect("arguments parse").command)
}

fn csv_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn bad_scenario_id_is_a_usage_error() {
    let e = parse(&["simulate", "--scenario", "4", "--out", "x"]).unwrap_err();
    assert_eq!(e.kind(), ErrorKind::ValueValidation);
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn empty_grid_is_a_usage_error() {
    assert!(parse(&["sweep", "--epsilon-grid", "", "--out", "x"]).is_err());
    assert!(parse(&["sweep", "--epsilon-grid", "--out", "x"]).is_err());
    assert!(parse(&["sweep", "--epsilon-grid", "0.2", "--dims", "64", "--out", "x"]).is_err());
    assert!(parse(&["simulate", "--trials", "0", "--out", "x"]).is_err());
}

#[test]
fn one_trial_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let m = run_args(&[
        "simulate",
        "--scenario",
        "1",
        "--trials",
        "1",
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();
    assert_eq!(csv_rows(&out.join("trials.csv")), 1);
    assert_eq!(m.command, "simulate");
    assert_eq!(m.seed, Some(0));
    assert!(out.join(MANIFEST_FILE).is_file());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["summaries"].as_array().unwrap().len(), 1);
    assert!(summary.get("scenario_two_minus_one").is_none());
}

#[test]
fn invalid_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    fs::write(
        &config,
        r#"{"dimension":64,"topics":16,"n_parent":20,"sigma_noise":0.1}"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    let err = run_args(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap_err();
    assert!(format!("{err:#}").contains("n_parent <= topics"), "{err:#}");
}

#[test]
fn sweep_writes_grid_rows_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.json");
    fs::write(
        &config,
        r#"{"dimension":64,"topics":16,"n_parent":8,"sigma_noise":0.1,"corpus_size":20}"#,
    )
    .unwrap();
    let out = dir.path().join("sw");
    let c = config.to_str().unwrap();
    let o = out.to_str().unwrap();
    run_args(&[
        "sweep",
        "--config",
        c,
        "--trials",
        "2",
        "--epsilon-grid",
        "0.4,1.0,2.0",
        "--plot",
        "--out",
        o,
    ])
    .unwrap();
    // 2 scenarios x 2 trials x 3 scales
    assert_eq!(csv_rows(&out.join("sweep.csv")), 12);
    assert_eq!(csv_rows(&out.join("summary.csv")), 6);
    assert!(fs::read_to_string(out.join("w1_h0.svg")).unwrap().starts_with("<svg"));

    let out = dir.path().join("dims");
    run_args(&[
        "sweep",
        "--config",
        c,
        "--trials",
        "2",
        "--dims",
        "32,16",
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(text.starts_with("dimension,"));
    // baseline plus two projections
    assert_eq!(csv_rows(&out.join("summary.csv")), 6);
}

#[test]
fn missing_corpus_dir_fails_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere");
    let err = run_args(&[
        "ingest",
        "--corpus",
        missing.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ])
    .unwrap_err();
    assert!(format!("{err:#}").contains("reading corpus"), "{err:#}");
}

fn write_docs(dir: &Path) {
    fs::create_dir_all(dir).unwrap();
    let words = |seed: usize, n: usize| -> String {
        (0..n)
            .map(|i| format!("w{}", (i * 7 + seed * 13) % 97))
            .collect::<Vec<_>>()
            .join(" ")
    };
    fs::write(dir.join("a.txt"), words(1, 130)).unwrap();
    fs::write(dir.join("b.txt"), words(2, 95)).unwrap();
    fs::write(dir.join(".hidden"), "ignored").unwrap();
}

#[test]
fn ingest_analyze_and_report_on_a_tiny_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let docs = dir.path().join("docs");
    write_docs(&docs);
    let ing = dir.path().join("ing");
    let m = run_args(&[
        "ingest",
        "--corpus",
        docs.to_str().unwrap(),
        "--granularity",
        "10,30",
        "--dimension",
        "48",
        "--out",
        ing.to_str().unwrap(),
    ])
    .unwrap();
    assert_eq!(m.outputs.len(), 4);

    // chunks of both granularities tile the same token streams
    for t in [10, 30] {
        let set = semtopo::corpus::ChunkSet::read_jsonl(&ing.join(format!("chunks_T{t}.jsonl"))).unwrap();
        for doc in ["a", "b"] {
            let spans: Vec<_> = set.chunks.iter().filter(|c| c.doc_id == doc).collect();
            assert_eq!(spans[0].token_start, 0);
            assert!(spans.windows(2).all(|w| w[0].token_end == w[1].token_start));
            assert_eq!(spans.last().unwrap().token_end, if doc == "a" { 130 } else { 95 });
        }
    }

    let an = dir.path().join("an");
    run_args(&[
        "analyze",
        "--queries",
        ing.join("embeddings_T30.jsonl").to_str().unwrap(),
        "--corpus",
        ing.join("embeddings_T10.jsonl").to_str().unwrap(),
        "--k",
        "5",
        "--epsilon-grid",
        "0.4",
        "--both",
        "--out",
        an.to_str().unwrap(),
    ])
    .unwrap();
    let forward = an.join("scores_Q_C30_C_C10.csv");
    let reverse = an.join("scores_Q_C10_C_C30.csv");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(an.join("summary.json")).unwrap()).unwrap();
    let dirs = summary["directions"].as_array().unwrap();
    assert_eq!(dirs.len(), 2);
    // one row per scored query at a single scale
    assert_eq!(
        csv_rows(&forward) as u64,
        dirs[0]["summary"]["scored"].as_u64().unwrap()
    );
    assert_eq!(
        csv_rows(&reverse) as u64,
        dirs[1]["summary"]["scored"].as_u64().unwrap()
    );

    let rep = dir.path().join("rep");
    run_args(&[
        "report",
        "--input",
        forward.to_str().unwrap(),
        reverse.to_str().unwrap(),
        "--kde-points",
        "50",
        "--out",
        rep.to_str().unwrap(),
    ])
    .unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(rep.join("report.json")).unwrap()).unwrap();
    // two groups, two metrics each
    assert_eq!(report.as_array().unwrap().len(), 4);
    assert_eq!(csv_rows(&rep.join("kde.csv")), 4 * 50);
}

#[test]
fn analyze_rejects_mismatched_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let docs = dir.path().join("docs");
    write_docs(&docs);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, d) in [(&a, "32"), (&b, "64")] {
        run_args(&[
            "ingest",
            "--corpus",
            docs.to_str().unwrap(),
            "--granularity",
            "10",
            "--dimension",
            d,
            "--out",
            out.to_str().unwrap(),
        ])
        .unwrap();
    }
    let err = run_args(&[
        "analyze",
        "--queries",
        a.join("embeddings_T10.jsonl").to_str().unwrap(),
        "--corpus",
        b.join("embeddings_T10.jsonl").to_str().unwrap(),
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ])
    .unwrap_err();
    assert!(format!("{err:#}").contains("dimension mismatch"), "{err:#}");
}

#[test]
fn report_handles_single_rows_and_rejects_empty_files() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.csv");
    fs::write(
        &one,
        "query_id,epsilon,w1_h0,lt_max_h1,points_used,degenerate_flag\nq,0.4,0.3,0.0,4,false\n",
    )
    .unwrap();
    let out = dir.path().join("r");
    run_args(&[
        "report",
        "--input",
        one.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(
        report[0]["kde"]["bandwidth"].as_f64().unwrap(),
        semtopo::report::MIN_BANDWIDTH
    );

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "query_id,epsilon,w1_h0,lt_max_h1\n").unwrap();
    assert!(run_args(&[
        "report",
        "--input",
        empty.to_str().unwrap(),
        "--out",
        out.to_str().unwrap()
    ])
    .is_err());
}

#[test]
fn rerun_reproduces_outputs_and_honours_a_new_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    run_args(&["gen-corpus", "--seed", "3", "--out", first.to_str().unwrap()]).unwrap();
    let second = dir.path().join("second");
    let m = run_args(&[
        "rerun",
        "--manifest",
        first.join(MANIFEST_FILE).to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ])
    .unwrap();
    assert_eq!(m.command, "gen-corpus");
    assert_eq!(m.seed, Some(3));
    for f in &m.outputs {
        assert_eq!(
            fs::read(first.join(f)).unwrap(),
            fs::read(second.join(f)).unwrap(),
            "{}",
            f.display()
        );
    }
    // the recorded invocation carries the resolved generator config
    let text = fs::read_to_string(second.join(MANIFEST_FILE)).unwrap();
    assert!(text.contains("\"topic_share\""));
}

#[test]
fn manifest_round_trips_every_command_shape() {
    for args in [
        vec!["simulate", "--out", "o"],
        vec!["sweep", "--dimension-grid", "--out", "o"],
        vec![
            "ingest",
            "--corpus",
            "c",
            "--embedder",
            "service",
            "--cache",
            "k.jsonl",
            "--out",
            "o",
        ],
        vec![
            "analyze",
            "--queries",
            "q",
            "--corpus",
            "c",
            "--no-containment",
            "--out",
            "o",
        ],
        vec!["calibrate", "--corpus", "c", "--clusters", "2", "--out", "o"],
        vec!["report", "--input", "a.csv", "--out", "o"],
    ] {
        let cmd = parse(&args).unwrap().command;
        let json = serde_json::to_string(&cmd).unwrap();
        let back: Command = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
        assert_eq!(back.name(), args[0]);
    }
}

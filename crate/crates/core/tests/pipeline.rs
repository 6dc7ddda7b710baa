use std::collections::BTreeSet;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::Command;

use hawkes_topics::events::overlap_fraction;
use hawkes_topics::ingest::{write_submissions, write_ticks, TickRecord};
use hawkes_topics::pipeline::{
    cmd_events, cmd_fit, cmd_run, cmd_simulate, cmd_topics, files, read_event_files, ErrorKind, MarketConfig,
    PipelineConfig, RunManifest, RunOptions, SourceConfig, HEATMAP_FILE, MANIFEST_FILE, OVERLAP_FILE, WEIGHTS_FILE,
};
use hawkes_topics::synth::{generate_fixture, write_fixture, FixtureSpec};
use hawkes_topics::topics::{write_theta_csv, DocTopicMix};
use serde_json::Value;

const START: i64 = 1_600_000_200;
const WIDTH: i64 = 900;
const N: usize = 200;

fn dir_files(dir: &Path) -> BTreeSet<String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != MANIFEST_FILE)
        .collect()
}

fn manifest_files(dir: &Path) -> BTreeSet<String> {
    let m: RunManifest = serde_json::from_reader(File::open(dir.join(MANIFEST_FILE)).unwrap()).unwrap();
    m.files.into_iter().collect()
}

fn mix(id: String, bucket: usize, theta: [f64; 2]) -> DocTopicMix {
    DocTopicMix {
        doc_id: id,
        timestamp: START + bucket as i64 * WIDTH + 10,
        source: "s".into(),
        theta: theta.to_vec(),
    }
}

/// One source with two topics and one market, with theta written straight
/// into the output directory. Topic 0 spikes at bucket 50, topic 1 at 120.
fn events_setup(dir: &Path, price: impl Fn(usize) -> f64) -> RunOptions {
    let mut mixes = Vec::new();
    for b in 0..N {
        mixes.push(mix(format!("base{b}"), b, [0.05, 0.95]));
    }
    for i in 0..5 {
        mixes.push(mix(format!("a{i}"), 50, [0.9, 0.1]));
        mixes.push(mix(format!("b{i}"), 120, [0.05, 0.95]));
    }
    write_theta_csv(File::create(dir.join(files::theta("s"))).unwrap(), &mixes).unwrap();
    let ticks: Vec<TickRecord> = (0..N)
        .map(|b| TickRecord {
            timestamp_ms: (START + b as i64 * WIDTH + 100) * 1000,
            price: price(b),
            amount: 1.0,
        })
        .collect();
    write_ticks(dir.join("m.csv"), &ticks).unwrap();

    let mut config = PipelineConfig {
        out_dir: dir.to_path_buf(),
        ..PipelineConfig::default()
    };
    config.sources = vec![SourceConfig {
        name: "s".into(),
        label: None,
        path: dir.join("unused.jsonl"),
        selected_topics: vec![0, 1],
        k: Some(2),
    }];
    config.markets = vec![MarketConfig {
        name: "M".into(),
        path: dir.join("m.csv"),
    }];
    RunOptions::new(config)
}

#[test]
fn disjoint_jumps_have_full_overlap_fraction() {
    let tmp = tempfile::tempdir().unwrap();
    let opts = events_setup(tmp.path(), |b| if b < 160 { 100.0 } else { 105.0 });
    let manifest = cmd_events(&opts).unwrap();
    let set = read_event_files(tmp.path()).unwrap();
    let buckets: Vec<Vec<usize>> = set.streams().iter().map(|s| s.event_buckets.clone()).collect();
    assert_eq!(set.labels(), ["s_0", "s_1", "M_pos", "M_neg"]);
    assert_eq!(buckets, [vec![50], vec![120], vec![160], vec![]]);
    assert_eq!(overlap_fraction(&set).unwrap(), 1.0);

    let report: Value = serde_json::from_reader(File::open(tmp.path().join(OVERLAP_FILE)).unwrap()).unwrap();
    assert_eq!(report["overlap_fraction"], 1.0);
    assert_eq!(report["total_events"], 3);
    assert!(manifest.stages[0].warnings.iter().any(|w| w.contains("M_neg")));
}

#[test]
fn alternating_prices_tie_at_threshold_and_yield_no_market_events() {
    let tmp = tempfile::tempdir().unwrap();
    let opts = events_setup(tmp.path(), |b| if b % 2 == 0 { 100.0 } else { 102.0 });
    cmd_events(&opts).unwrap();
    let set = read_event_files(tmp.path()).unwrap();
    // Every up-return equals the 99th-percentile value; none is strictly above.
    assert!(set.streams()[2].is_empty());
    assert!(set.streams()[3].is_empty());
    assert_eq!(set.streams()[0].event_buckets, [50]);
}

#[test]
fn events_rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let opts = events_setup(tmp.path(), |b| 100.0 + (b * 7 % 13) as f64);
    cmd_events(&opts).unwrap();
    let first = std::fs::read(tmp.path().join("events.csv")).unwrap();
    cmd_events(&opts).unwrap();
    assert_eq!(first, std::fs::read(tmp.path().join("events.csv")).unwrap());
}

fn write_spec(dir: &Path) -> PathBuf {
    let path = dir.join("spec.toml");
    std::fs::write(
        &path,
        r#"labels = ["a", "b", "c"]
lambda0 = [0.01, 0.01, 0.01]
weights = [[0.5, 0.05, 0.05], [0.05, 0.5, 0.05], [0.05, 0.05, 0.5]]
"#,
    )
    .unwrap();
    path
}

fn cell_attr(line: &str, key: &str) -> String {
    let start = line.find(&format!("{key}=\"")).unwrap() + key.len() + 2;
    line[start..].split('"').next().unwrap().to_string()
}

#[test]
fn simulate_then_fit_writes_consistent_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = PipelineConfig {
        out_dir: tmp.path().join("out"),
        seed: 9,
        ..PipelineConfig::default()
    };
    config.hawkes.iterations = 300;
    config.hawkes.burn_in = 100;
    let opts = RunOptions::new(config);
    cmd_simulate(&opts, &write_spec(tmp.path()), 20_000).unwrap();
    cmd_fit(&opts).unwrap();
    let out = tmp.path().join("out");

    let csv = std::fs::read_to_string(out.join(WEIGHTS_FILE)).unwrap();
    let mut rows = csv.lines();
    assert_eq!(rows.next().unwrap(), ",a,b,c");
    let weights: Vec<Vec<String>> = rows.map(|r| r.split(',').skip(1).map(String::from).collect()).collect();

    let svg = std::fs::read_to_string(out.join(HEATMAP_FILE)).unwrap();
    let cells: Vec<&str> = svg.lines().filter(|l| l.contains("class=\"cell\"")).collect();
    assert_eq!(cells.len(), 9);
    let mut diag_grey = 0u32;
    let mut off_grey = u32::MAX;
    for cell in cells {
        let (r, c): (usize, usize) = (cell_attr(cell, "data-row").parse().unwrap(), cell_attr(cell, "data-col").parse().unwrap());
        assert_eq!(cell_attr(cell, "data-weight"), weights[r][c]);
        let fill = cell_attr(cell, "fill");
        let grey: u32 = fill.trim_start_matches("rgb(").split(',').next().unwrap().parse().unwrap();
        if r == c {
            diag_grey = diag_grey.max(grey);
        } else {
            off_grey = off_grey.min(grey);
        }
    }
    assert!(diag_grey < off_grey, "diagonal must be darker: {diag_grey} vs {off_grey}");
    assert_eq!(manifest_files(&out), dir_files(&out));
}

fn small_fixture(dir: &Path) -> PipelineConfig {
    let spec = FixtureSpec {
        days: 14,
        ..FixtureSpec::default()
    };
    let written = write_fixture(&generate_fixture(&spec).unwrap(), dir).unwrap();
    let mut config = PipelineConfig::load(&written.config).unwrap();
    config.out_dir = dir.join("out");
    config.topics.sweeps = 100;
    config.topics.burn_in = 50;
    config.hawkes.iterations = 200;
    config.hawkes.burn_in = 50;
    config
}

#[test]
fn topic_report_lists_ten_words_per_topic_and_slice() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_fixture(tmp.path());
    let k = config.sources[0].k.unwrap();
    cmd_topics(&RunOptions::new(config.clone())).unwrap();
    let report = std::fs::read_to_string(config.out_dir.join(files::topic_report(&config.sources[0].name))).unwrap();
    let blocks: Vec<&str> = report.split("\n\n").filter(|b| !b.trim().is_empty()).collect();
    assert_eq!(blocks.len(), 2 * k, "two weekly slices of {k} topics");
    for block in blocks {
        let mut lines = block.lines();
        assert!(lines.next().unwrap().starts_with("slice "));
        assert_eq!(lines.count(), 10);
    }
}

#[test]
fn full_run_manifest_lists_exactly_the_emitted_files() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_fixture(tmp.path());
    let out = config.out_dir.clone();
    let manifest = cmd_run(&RunOptions::new(config)).unwrap();
    assert_eq!(manifest.stages.iter().map(|s| s.name.as_str()).collect::<Vec<_>>(), ["topics", "events", "fit"]);
    assert!(manifest.stages.iter().all(|s| s.completed));
    assert_eq!(manifest_files(&out), dir_files(&out));
}

#[test]
fn empty_corpus_is_an_input_error_in_the_topics_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = small_fixture(tmp.path());
    write_submissions(tmp.path().join("coinmarkets.jsonl"), &[]).unwrap();
    config.sources.truncate(1);
    let err = cmd_topics(&RunOptions::new(config.clone())).unwrap_err();
    assert_eq!(err.stage, "topics");
    assert_eq!(err.kind, ErrorKind::Input);
    assert_eq!(err.exit_code(), 3);
    let m: RunManifest = serde_json::from_reader(File::open(config.out_dir.join(MANIFEST_FILE)).unwrap()).unwrap();
    assert!(!m.stages[0].completed);
    assert!(m.stages[0].error.is_some());
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hawkes-topics")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = dir.join("out");
    let out = out.to_str().unwrap();

    let (code, err) = cli(&["--config", dir.join("missing.toml").to_str().unwrap(), "run"]);
    assert_eq!(code, 2, "{err}");

    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "[topics]\nk = 0\n").unwrap();
    assert_eq!(cli(&["--config", bad.to_str().unwrap(), "topics"]).0, 2);

    let cfg = dir.join("cfg.toml");
    std::fs::write(&cfg, "[[sources]]\nname = \"s\"\npath = \"nope.jsonl\"\n").unwrap();
    let (code, err) = cli(&["--config", cfg.to_str().unwrap(), "--out", out, "topics"]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("topics"));

    let spec = dir.join("unstable.toml");
    std::fs::write(&spec, "labels = [\"a\", \"b\"]\nlambda0 = [0.01, 0.01]\nweights = [[0.9, 0.5], [0.5, 0.9]]\n").unwrap();
    let (code, err) = cli(&["--out", out, "simulate", "--spec", spec.to_str().unwrap(), "--n-buckets", "100"]);
    assert_eq!(code, 4, "{err}");

    let (code, err) = cli(&["--out", out, "--seed", "3", "simulate", "--spec", write_spec(dir).to_str().unwrap(), "--n-buckets", "500"]);
    assert_eq!(code, 0, "{err}");
    assert!(Path::new(out).join("events.csv").is_file());
}

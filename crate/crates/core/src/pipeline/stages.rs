use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::time::Instant;

use super::heatmap::render_heatmap;
use super::manifest::{RunManifest, StageRecord};
use super::{derive_seed, Classify, ErrorKind, PipelineConfig, PipelineError, Scope};
use crate::corpus::{
    build_vocabulary, default_stoplist, parse_word_list, vectorize, BowDocument, HeuristicTagger, Preprocessor,
    ProcessedDocument,
};
use crate::events::{
    bucketize_prices, detect_jumps, directed, jump_threshold, jumps_above, log_returns, nearest_rank,
    overlap_fraction, read_event_csv, write_event_csv, BucketGrid, Direction, EventStream, GridSidecar, ProcessSet,
    ReturnSeries,
};
use crate::hawkes::{
    fit, read_network_spec, simulate_on, write_posterior_json, write_weight_csv, PosteriorReport,
};
use crate::ingest::{read_submissions, read_ticks, ReadMode, TickRecord};
use crate::topics::{
    fit_dynamic, occurrence_series, read_theta_csv, write_theta_csv, write_topic_report, DocTopicMix, REPORT_WORDS,
};

pub const EVENTS_FILE: &str = "events.csv";
pub const GRID_FILE: &str = "events.grid.json";
pub const OVERLAP_FILE: &str = "overlap.json";
pub const WEIGHTS_FILE: &str = "weights.csv";
pub const POSTERIOR_FILE: &str = "posterior.json";
pub const HEATMAP_FILE: &str = "heatmap.svg";

/// Per-source output file names.
pub mod files {
    pub fn theta(source: &str) -> String {
        format!("{source}.theta.csv")
    }

    pub fn topic_report(source: &str) -> String {
        format!("{source}.topics.txt")
    }
}

const FIT_STREAM: u64 = 1;
const SOURCE_STREAM_BASE: u64 = 1_000;

/// Configuration after command-line overrides, plus the input mode.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: PipelineConfig,
    /// Skip and count malformed input lines instead of failing.
    pub lenient: bool,
}

impl RunOptions {
    pub fn new(config: PipelineConfig) -> Self {
        Self { config, lenient: false }
    }

    fn mode(&self) -> ReadMode {
        if self.lenient {
            ReadMode::Lenient
        } else {
            ReadMode::Strict
        }
    }

    fn out(&self) -> &Path {
        &self.config.out_dir
    }
}

type Seeds = BTreeMap<String, u64>;
type Stage<'a> = (&'static str, Box<dyn Fn(&mut StageRecord, &mut Seeds) -> Result<(), PipelineError> + 'a>);

fn execute(opts: &RunOptions, fresh: bool, stages: Vec<Stage<'_>>) -> Result<RunManifest, PipelineError> {
    let dir = opts.out();
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::input("output", format!("{}: {e}", dir.display())))?;
    let mut manifest = if fresh {
        RunManifest::new(opts.config.clone())
    } else {
        RunManifest::load_existing(dir, opts.config.clone())
    };
    for (name, run) in stages {
        let mut rec = StageRecord::new(name);
        let started = Instant::now();
        let outcome = run(&mut rec, &mut manifest.seeds);
        rec.seconds = started.elapsed().as_secs_f64();
        rec.completed = outcome.is_ok();
        if let Err(e) = outcome {
            rec.error = Some(e.to_string());
            manifest.record(rec);
            manifest.write(dir)?;
            return Err(e);
        }
        manifest.record(rec);
    }
    manifest.write(dir)?;
    Ok(manifest)
}

fn emit(rec: &mut StageRecord, dir: &Path, name: String, bytes: &[u8]) -> Result<(), PipelineError> {
    let path = dir.join(&name);
    std::fs::write(&path, bytes).map_err(|e| PipelineError::input("output", format!("{}: {e}", path.display())))?;
    rec.files.push(name);
    Ok(())
}

fn open(stage: &'static str, path: &Path, hint: &str) -> Result<BufReader<File>, PipelineError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| PipelineError::input(stage, format!("{}: {e}{hint}", path.display())))
}

fn retag(stage: &'static str) -> impl Fn(PipelineError) -> PipelineError {
    move |e| PipelineError { stage, ..e }
}

fn preprocessor(cfg: &PipelineConfig) -> Result<Preprocessor, PipelineError> {
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|e| PipelineError::config("topics", format!("{}: {e}", p.display())))
    };
    let stoplist = match &cfg.corpus.stoplist {
        Some(p) => parse_word_list(&read(p)?),
        None => default_stoplist(),
    };
    let tagger = match &cfg.corpus.tagger_rules {
        Some(p) => HeuristicTagger::from_rules(&read(p)?).map_err(|e| PipelineError::config("topics", e))?,
        None => HeuristicTagger::bundled(),
    };
    Ok(Preprocessor::new(stoplist, tagger))
}

fn stage_topics(opts: &RunOptions, rec: &mut StageRecord, seeds: &mut Seeds) -> Result<(), PipelineError> {
    let cfg = &opts.config;
    cfg.validate().map_err(retag("topics"))?;
    if cfg.sources.is_empty() {
        return Err(PipelineError::config("topics", "no sources configured"));
    }
    let pre = preprocessor(cfg)?;
    let mut processed: Vec<Vec<ProcessedDocument>> = Vec::with_capacity(cfg.sources.len());
    for s in &cfg.sources {
        let report = read_submissions(&s.path, opts.mode()).map_err(|e| PipelineError::at("topics", e))?;
        rec.counts.insert(format!("{}.records", s.name), report.records.len());
        rec.counts.insert(format!("{}.skipped", s.name), report.skipped);
        if report.skipped > 0 {
            rec.warnings.push(format!("{}: skipped {} malformed lines", s.name, report.skipped));
        }
        processed.push(
            report
                .records
                .iter()
                .map(|r| ProcessedDocument {
                    source: s.name.clone(),
                    ..pre.process(r)
                })
                .collect(),
        );
    }

    let vocab_cfg = cfg.corpus.vocab();
    let pooled = match cfg.corpus.prune_scope {
        Scope::Pooled => {
            let all: Vec<ProcessedDocument> = processed.iter().flatten().cloned().collect();
            Some(build_vocabulary(&all, &vocab_cfg).map_err(|e| PipelineError::at("topics", e))?)
        }
        Scope::PerSource => None,
    };

    for (i, (s, docs)) in cfg.sources.iter().zip(&processed).enumerate() {
        let vocab = match &pooled {
            Some(v) => v.clone(),
            None => build_vocabulary(docs, &vocab_cfg)
                .map_err(|e| PipelineError::input("topics", format!("source {}: {e}", s.name)))?,
        };
        if vocab.is_empty() {
            return Err(PipelineError::input(
                "topics",
                format!("source {}: no term survives vocabulary pruning", s.name),
            ));
        }
        let (bows, empty): (Vec<BowDocument>, Vec<BowDocument>) =
            docs.iter().map(|d| vectorize(d, &vocab)).partition(|b| !b.is_empty());
        if !empty.is_empty() {
            rec.warnings.push(format!(
                "{}: {} documents have no in-vocabulary tokens and get no mixture",
                s.name,
                empty.len()
            ));
        }
        let seed = derive_seed(cfg.seed, SOURCE_STREAM_BASE + i as u64);
        seeds.insert(format!("topics.{}", s.name), seed);
        let lda = cfg.lda(s, seed);
        let (model, mixes) = fit_dynamic(&bows, vocab.len(), cfg.topics.slice_duration, &lda, cfg.topics.kappa)
            .map_err(|e| PipelineError::new("topics", e.kind(), format!("source {}: {e}", s.name)))?;

        let mut report = Vec::new();
        write_topic_report(&mut report, &model, &vocab, REPORT_WORDS).map_err(|e| PipelineError::at("topics", e))?;
        emit(rec, opts.out(), files::topic_report(&s.name), &report)?;
        let mut theta = Vec::new();
        write_theta_csv(&mut theta, &mixes).map_err(|e| PipelineError::at("topics", e))?;
        emit(rec, opts.out(), files::theta(&s.name), &theta)?;

        rec.counts.insert(format!("{}.documents", s.name), bows.len());
        rec.counts.insert(format!("{}.empty_documents", s.name), empty.len());
        rec.counts.insert(format!("{}.vocabulary", s.name), vocab.len());
        rec.counts.insert(format!("{}.slices", s.name), model.slices.len());
        rec.counts.insert(format!("{}.tokens", s.name), bows.iter().map(BowDocument::len).sum());
    }
    Ok(())
}

fn span(values: impl Iterator<Item = i64>) -> Option<(i64, i64)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

fn stage_events(opts: &RunOptions, rec: &mut StageRecord) -> Result<(), PipelineError> {
    let cfg = &opts.config;
    cfg.validate_processes().map_err(retag("events"))?;
    let ev = &cfg.events;

    let mut mixes: Vec<Vec<DocTopicMix>> = Vec::new();
    for s in cfg.sources.iter().filter(|s| !s.selected_topics.is_empty()) {
        let path = opts.out().join(files::theta(&s.name));
        let m = read_theta_csv(open("events", &path, " (run the topics stage first)")?)
            .map_err(|e| PipelineError::input("events", format!("{}: {e}", path.display())))?;
        let k = m.first().map_or(0, |d| d.theta.len());
        if let Some(&t) = s.selected_topics.iter().find(|&&t| t >= k) {
            return Err(PipelineError::config(
                "events",
                format!("source {}: selected topic {t} but the theta file has {k} topics", s.name),
            ));
        }
        mixes.push(m);
    }
    let mut ticks: Vec<Vec<TickRecord>> = Vec::new();
    for m in &cfg.markets {
        let report = read_ticks(&m.path, opts.mode()).map_err(|e| PipelineError::at("events", e))?;
        rec.counts.insert(format!("{}.ticks", m.name), report.records.len());
        rec.counts.insert(format!("{}.skipped", m.name), report.skipped);
        if report.skipped > 0 {
            rec.warnings.push(format!("{}: skipped {} malformed lines", m.name, report.skipped));
        }
        ticks.push(report.records);
    }

    // The grid covers the time span shared by every input.
    let mut spans = Vec::new();
    for (s, m) in cfg.sources.iter().filter(|s| !s.selected_topics.is_empty()).zip(&mixes) {
        spans.push(span(m.iter().map(|d| d.timestamp)).ok_or_else(|| {
            PipelineError::input("events", format!("source {}: theta file has no documents", s.name))
        })?);
    }
    for (m, t) in cfg.markets.iter().zip(&ticks) {
        spans.push(
            span(t.iter().map(|x| x.timestamp_ms.div_euclid(1000)))
                .ok_or_else(|| PipelineError::input("events", format!("market {}: no ticks", m.name)))?,
        );
    }
    let first = spans.iter().map(|s| s.0).max().expect("at least two processes");
    let last = spans.iter().map(|s| s.1).min().expect("at least two processes");
    if first > last {
        return Err(PipelineError::input("events", "inputs share no common time span"));
    }
    let grid = BucketGrid::covering(first, last, ev.bucket_width).map_err(|e| PipelineError::at("events", e))?;
    if grid.n_buckets() < 11 {
        return Err(PipelineError::input(
            "events",
            format!("common span covers only {} buckets; jump detection needs 11", grid.n_buckets()),
        ));
    }
    rec.counts.insert("buckets".into(), grid.n_buckets());

    let at = |e| PipelineError::at("events", e);
    let mut topic_returns: Vec<(String, ReturnSeries)> = Vec::new();
    for (s, m) in cfg.sources.iter().filter(|s| !s.selected_topics.is_empty()).zip(&mixes) {
        let inside: Vec<DocTopicMix> = m.iter().filter(|d| grid.bucket_of(d.timestamp).is_some()).cloned().collect();
        rec.counts.insert(format!("{}.documents_outside_grid", s.name), m.len() - inside.len());
        let series = occurrence_series(&inside, cfg.topics.occurrence_threshold, grid)
            .map_err(|e| PipelineError::at("events", e))?;
        for &t in &s.selected_topics {
            let returns = log_returns(&series[t].to_bucket_series(grid), ev.count_smoothing).map_err(at)?;
            topic_returns.push((format!("{}_{t}", s.prefix()), returns));
        }
    }

    let mut streams: Vec<EventStream> = Vec::new();
    match ev.threshold_scope {
        Scope::PerSource => {
            for (label, r) in &topic_returns {
                streams.push(detect_jumps(label.clone(), r, ev.percentile, Direction::Up).map_err(at)?);
            }
        }
        Scope::Pooled => {
            let pooled: Vec<f64> =
                topic_returns.iter().flat_map(|(_, r)| directed(&r.returns, Direction::Up)).collect();
            if !pooled.is_empty() {
                let threshold = nearest_rank(&pooled, ev.percentile);
                for (label, r) in &topic_returns {
                    streams.push(jumps_above(label.clone(), r, threshold, Direction::Up));
                }
            }
        }
    }
    for (m, t) in cfg.markets.iter().zip(&ticks) {
        let prices = bucketize_prices(t, grid).map_err(at)?;
        let returns = log_returns(&prices, 0.0).map_err(at)?;
        for (suffix, dir) in [("pos", Direction::Up), ("neg", Direction::Down)] {
            let threshold = jump_threshold(&returns, ev.percentile, dir).map_err(at)?;
            streams.push(jumps_above(format!("{}_{suffix}", m.name), &returns, threshold, dir));
        }
    }
    for s in &streams {
        rec.counts.insert(format!("events.{}", s.label), s.len());
        if s.is_empty() {
            rec.warnings.push(format!("stream {} has no events", s.label));
        }
    }
    let set = ProcessSet::new(grid, streams).map_err(at)?;

    let mut csv = Vec::new();
    write_event_csv(&set, &mut csv).map_err(at)?;
    emit(rec, opts.out(), EVENTS_FILE.into(), &csv)?;
    let sidecar = serde_json::to_string_pretty(&GridSidecar::of(&set)).expect("sidecar serializes") + "\n";
    emit(rec, opts.out(), GRID_FILE.into(), sidecar.as_bytes())?;

    let fraction = match overlap_fraction(&set) {
        Ok(f) => Some(f),
        Err(_) => {
            rec.warnings.push("no events in any stream; overlap fraction undefined".into());
            None
        }
    };
    let per_stream: Vec<serde_json::Value> = set
        .streams()
        .iter()
        .map(|s| serde_json::json!({"label": s.label, "events": s.len()}))
        .collect();
    let overlap = serde_json::json!({
        "overlap_fraction": fraction,
        "definition": "share of events whose bucket holds no other event on any stream",
        "total_events": set.total_events(),
        "n_buckets": set.n_buckets(),
        "streams": per_stream,
    });
    let text = serde_json::to_string_pretty(&overlap).expect("overlap report serializes") + "\n";
    emit(rec, opts.out(), OVERLAP_FILE.into(), text.as_bytes())?;
    rec.counts.insert("events.total".into(), set.total_events());
    Ok(())
}

/// Reads the event CSV and its grid sidecar from `dir`.
pub fn read_event_files(dir: &Path) -> Result<ProcessSet, PipelineError> {
    let hint = " (run the events or simulate stage first)";
    let sidecar: GridSidecar = serde_json::from_reader(open("fit", &dir.join(GRID_FILE), hint)?)
        .map_err(|e| PipelineError::input("fit", format!("{GRID_FILE}: {e}")))?;
    read_event_csv(open("fit", &dir.join(EVENTS_FILE), hint)?, &sidecar).map_err(|e| PipelineError::at("fit", e))
}

fn stage_fit(opts: &RunOptions, rec: &mut StageRecord, seeds: &mut Seeds) -> Result<(), PipelineError> {
    let cfg = &opts.config;
    let basis = cfg.hawkes.basis().map_err(retag("fit"))?;
    let set = read_event_files(opts.out())?;
    if set.n_processes() < 2 {
        return Err(PipelineError::config(
            "fit",
            format!("need at least 2 event streams, found {}", set.n_processes()),
        ));
    }
    let seed = derive_seed(cfg.seed, FIT_STREAM);
    seeds.insert("fit".into(), seed);
    let gibbs = cfg.hawkes.gibbs(seed);
    let summary = fit(&set, cfg.hawkes.dt_max, &basis, &gibbs).map_err(|e| PipelineError::at("fit", e))?;
    if summary.mean_weights.iter().chain(&summary.mean_lambda0).any(|x| !x.is_finite()) {
        return Err(PipelineError::new("fit", ErrorKind::Numeric, "posterior mean is not finite"));
    }

    let mut weights = Vec::new();
    write_weight_csv(&summary, &mut weights).map_err(|e| PipelineError::at("fit", e))?;
    emit(rec, opts.out(), WEIGHTS_FILE.into(), &weights)?;
    let mut posterior = Vec::new();
    write_posterior_json(&PosteriorReport::new(&summary, &basis, &gibbs), &mut posterior)
        .map_err(|e| PipelineError::at("fit", e))?;
    emit(rec, opts.out(), POSTERIOR_FILE.into(), &posterior)?;
    let svg = render_heatmap(&summary.labels, &summary.mean_weights);
    emit(rec, opts.out(), HEATMAP_FILE.into(), svg.as_bytes())?;

    rec.counts.insert("processes".into(), set.n_processes());
    rec.counts.insert("buckets".into(), set.n_buckets());
    rec.counts.insert("events".into(), set.total_events());
    rec.counts.insert("samples".into(), summary.n_samples);
    Ok(())
}

fn stage_simulate(
    opts: &RunOptions,
    spec_path: &Path,
    n_buckets: usize,
    rec: &mut StageRecord,
    seeds: &mut Seeds,
) -> Result<(), PipelineError> {
    let text = std::fs::read_to_string(spec_path)
        .map_err(|e| PipelineError::config("simulate", format!("{}: {e}", spec_path.display())))?;
    let net = read_network_spec(&text)
        .and_then(|s| s.to_network())
        .map_err(|e| PipelineError::at("simulate", e))?;
    let grid = BucketGrid::new(0, opts.config.events.bucket_width, n_buckets)
        .map_err(|e| PipelineError::at("simulate", e))?;
    let seed = opts.config.seed;
    seeds.insert("simulate".into(), seed);
    let sim = simulate_on(&net, grid, seed).map_err(|e| PipelineError::at("simulate", e))?;

    let mut csv = Vec::new();
    write_event_csv(&sim.set, &mut csv).map_err(|e| PipelineError::at("simulate", e))?;
    emit(rec, opts.out(), EVENTS_FILE.into(), &csv)?;
    let sidecar = serde_json::to_string_pretty(&GridSidecar::of(&sim.set)).expect("sidecar serializes") + "\n";
    emit(rec, opts.out(), GRID_FILE.into(), sidecar.as_bytes())?;
    for (s, raw) in sim.set.streams().iter().zip(&sim.raw_counts) {
        rec.counts.insert(format!("events.{}", s.label), s.len());
        rec.counts.insert(format!("raw_events.{}", s.label), *raw);
    }
    rec.counts.insert("buckets".into(), n_buckets);
    Ok(())
}

/// Fits a dynamic topic model per source; writes `<source>.topics.txt` and
/// `<source>.theta.csv`.
pub fn cmd_topics(opts: &RunOptions) -> Result<RunManifest, PipelineError> {
    execute(opts, false, vec![("topics", Box::new(|r, s| stage_topics(opts, r, s)))])
}

/// Builds event streams from the theta files and tick files; writes
/// `events.csv`, its grid sidecar and `overlap.json`.
pub fn cmd_events(opts: &RunOptions) -> Result<RunManifest, PipelineError> {
    execute(opts, false, vec![("events", Box::new(|r, _| stage_events(opts, r)))])
}

/// Fits the Hawkes network to the event files; writes `weights.csv`,
/// `posterior.json` and `heatmap.svg`.
pub fn cmd_fit(opts: &RunOptions) -> Result<RunManifest, PipelineError> {
    execute(opts, false, vec![("fit", Box::new(|r, s| stage_fit(opts, r, s)))])
}

/// Simulates the network described in `spec_path` (TOML, see
/// [`NetworkSpec`](crate::hawkes::NetworkSpec)) over `n_buckets` buckets,
/// seeded with the configured seed; writes the same event files as
/// [`cmd_events`].
pub fn cmd_simulate(opts: &RunOptions, spec_path: &Path, n_buckets: usize) -> Result<RunManifest, PipelineError> {
    execute(
        opts,
        false,
        vec![("simulate", Box::new(|r, s| stage_simulate(opts, spec_path, n_buckets, r, s)))],
    )
}

/// Topics, events and fit in order with a fresh manifest. The first failing
/// stage aborts the run; the manifest still records what completed.
pub fn cmd_run(opts: &RunOptions) -> Result<RunManifest, PipelineError> {
    opts.config.validate_processes()?;
    execute(
        opts,
        true,
        vec![
            ("topics", Box::new(|r, s| stage_topics(opts, r, s))),
            ("events", Box::new(|r, _| stage_events(opts, r))),
            ("fit", Box::new(|r, s| stage_fit(opts, r, s))),
        ],
    )
}

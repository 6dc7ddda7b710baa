//! Synthetic end-to-end fixtures: pseudo-word corpora whose topic bursts and
//! price jumps are driven by a known Hawkes network.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::corpus::Preprocessor;
use crate::events::{BucketGrid, ProcessSet};
use crate::hawkes::{spectral_radius, HawkesError, NetworkSpec};
use crate::ingest::{write_submissions, write_ticks, IngestError, RawSubmission, TickRecord};
use crate::pipeline::{MarketConfig, PipelineConfig, SourceConfig};
use crate::topics::synthetic::sample_dirichlet;

/// One synthetic text source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    pub name: String,
    pub label: String,
    /// True number of topics.
    pub topics: usize,
    /// Topics `0..bursting` are Hawkes processes; the rest stay background.
    pub bursting: usize,
    /// Mean background submissions per bucket.
    pub docs_per_bucket: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    pub seed: u64,
    /// Aligned Unix seconds of the first bucket.
    pub start: i64,
    pub days: usize,
    pub bucket_width: i64,
    pub sources: Vec<SourceSpec>,
    pub market: String,
    pub words_per_topic: usize,
    /// Mean extra submissions on the bursting topic per burst event.
    pub burst_docs: f64,
    /// Mean tokens per submission.
    pub doc_length: f64,
    pub background_rate: f64,
    /// Per-bucket log-return noise of the price.
    pub volatility: f64,
    /// Absolute log-return added at each price event.
    pub jump_size: f64,
    pub start_price: f64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        let source = |name: &str, label: &str| SourceSpec {
            name: name.into(),
            label: label.into(),
            topics: 5,
            bursting: 2,
            docs_per_bucket: 0.8,
        };
        Self {
            seed: 20_180_101,
            start: 1_514_764_800,
            days: 28,
            bucket_width: 900,
            sources: vec![source("coinmarkets", "cm"), source("chainchat", "cc")],
            market: "SYN".into(),
            words_per_topic: 30,
            burst_docs: 10.0,
            doc_length: 30.0,
            background_rate: 0.006,
            volatility: 0.002,
            jump_size: 0.03,
            start_price: 1_000.0,
        }
    }
}

impl FixtureSpec {
    pub fn n_buckets(&self) -> usize {
        self.days * 86_400 / self.bucket_width as usize
    }

    /// Process labels of the generating network: bursting topics source by
    /// source, then the market's up and down streams.
    pub fn labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self
            .sources
            .iter()
            .flat_map(|s| (0..s.bursting).map(move |t| format!("{}_{t}", s.label)))
            .collect();
        labels.push(format!("{}_pos", self.market));
        labels.push(format!("{}_neg", self.market));
        labels
    }

    /// Generating network: every process excites itself; the first source's
    /// topic 0 drives up-jumps, the last source's topic 0 drives down-jumps,
    /// and up-jumps feed back into the first source's topic 1.
    pub fn truth(&self) -> NetworkSpec {
        let labels = self.labels();
        let k = labels.len();
        let pos = k - 2;
        let neg = k - 1;
        let mut w = vec![vec![0.0; k]; k];
        for (i, row) in w.iter_mut().enumerate() {
            row[i] = if i >= pos { 0.1 } else { 0.2 };
        }
        w[0][pos] = 0.3;
        let last_first_topic = k - 2 - self.sources.last().map_or(0, |s| s.bursting);
        w[last_first_topic][neg] = 0.3;
        if self.sources.first().is_some_and(|s| s.bursting > 1) {
            w[pos][1] = 0.2;
        }
        NetworkSpec {
            lambda0: vec![self.background_rate; k],
            labels,
            weights: w,
            dt_max: 96,
            basis_edges: None,
            impulse: Some(vec![0.7, 0.2, 0.1]),
        }
    }
}

/// Generated inputs plus the ground truth behind them.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub spec: FixtureSpec,
    pub submissions: Vec<Vec<RawSubmission>>,
    pub ticks: Vec<TickRecord>,
    pub truth: NetworkSpec,
    /// Events of the generating network, on the fixture grid.
    pub truth_events: ProcessSet,
    /// Per source, the words of each true topic.
    pub topic_words: Vec<Vec<Vec<String>>>,
}

const CONSONANTS: &[u8] = b"bdfgkmnprstz";
const VOWELS: &[u8] = b"aeiou";
const FILLER: &[&str] = &["the", "and", "of", "to", "is", "this", "that", "with", "for", "it"];

/// `n` distinct pseudo-words that pass `pre` unchanged.
fn pseudo_words(rng: &mut ChaCha8Rng, n: usize, taken: &mut HashSet<String>, pre: &Preprocessor) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.random_range(2..=3);
        let word: String = (0..syllables)
            .flat_map(|_| {
                [
                    *CONSONANTS.choose(rng).expect("nonempty") as char,
                    *VOWELS.choose(rng).expect("nonempty") as char,
                ]
            })
            .collect();
        if !taken.contains(&word) && pre.tokens(&word) == [word.clone()] {
            taken.insert(word.clone());
            out.push(word);
        }
    }
    out
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

fn pick(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    crate::topics::categorical(rng, weights, weights.iter().sum())
}

fn compose(rng: &mut ChaCha8Rng, words: &[Vec<String>], topic_weights: &[Vec<f64>], theta: &[f64], len: usize) -> String {
    let mut text: Vec<String> = Vec::with_capacity(len * 2);
    for i in 0..len {
        if rng.random_bool(0.3) {
            text.push(FILLER.choose(rng).expect("nonempty").to_string());
        }
        let z = pick(rng, theta);
        let w = &words[z][pick(rng, &topic_weights[z])];
        if i == 0 {
            let mut c = w.chars();
            let first = c.next().expect("nonempty word").to_ascii_uppercase();
            text.push(std::iter::once(first).chain(c).collect());
        } else {
            text.push(w.clone());
        }
    }
    if rng.random_bool(0.1) {
        text.push(format!("https://example.org/{}", rng.random_range(0..10_000)));
    }
    let mut s = text.join(" ");
    s.push(if rng.random_bool(0.2) { '?' } else { '.' });
    s
}

/// Draws a fixture. Deterministic given `spec.seed`.
pub fn generate_fixture(spec: &FixtureSpec) -> Result<Fixture, HawkesError> {
    let truth = spec.truth();
    let net = truth.to_network()?;
    let radius = spectral_radius(net.weights())?;
    if radius >= 1.0 {
        return Err(HawkesError::NonStationary(radius));
    }
    let grid = BucketGrid::new(spec.start, spec.bucket_width, spec.n_buckets())?;
    let truth_events = crate::hawkes::simulate_on(&net, grid, spec.seed)?.set;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5EED);
    let pre = Preprocessor::default();
    let mut taken = HashSet::new();
    let mut submissions = Vec::new();
    let mut topic_words = Vec::new();
    let mut process = 0;
    for s in &spec.sources {
        let words: Vec<Vec<String>> =
            (0..s.topics).map(|_| pseudo_words(&mut rng, spec.words_per_topic, &mut taken, &pre)).collect();
        let weights: Vec<Vec<f64>> =
            (0..s.topics).map(|_| sample_dirichlet(&mut rng, &vec![1.0; spec.words_per_topic])).collect();
        let mut docs = Vec::new();
        let mut emit = |rng: &mut ChaCha8Rng, bucket: usize, theta: Vec<f64>| {
            let len = 4 + poisson(rng, spec.doc_length);
            let text = compose(rng, &words, &weights, &theta, len);
            let created_utc = grid.bucket_start(bucket) + rng.random_range(0..spec.bucket_width);
            docs.push(RawSubmission {
                id: format!("{}{:06}", s.label, docs.len()),
                created_utc,
                source: s.name.clone(),
                text,
            });
        };
        for b in 0..grid.n_buckets() {
            for _ in 0..poisson(&mut rng, s.docs_per_bucket) {
                let theta = sample_dirichlet(&mut rng, &vec![0.2; s.topics]);
                emit(&mut rng, b, theta);
            }
        }
        for t in 0..s.bursting {
            for &b in &truth_events.streams()[process + t].event_buckets {
                for _ in 0..1 + poisson(&mut rng, spec.burst_docs - 1.0) {
                    let mut theta = sample_dirichlet(&mut rng, &vec![0.2; s.topics]);
                    theta.iter_mut().for_each(|x| *x *= 0.15);
                    theta[t] += 0.85;
                    emit(&mut rng, b, theta);
                }
            }
        }
        process += s.bursting;
        docs.sort_by_key(|d| d.created_utc);
        submissions.push(docs);
        topic_words.push(words);
    }

    let pos = &truth_events.streams()[process].event_buckets;
    let neg = &truth_events.streams()[process + 1].event_buckets;
    let noise = Normal::new(0.0, spec.volatility).expect("finite volatility");
    let mut ticks = Vec::new();
    let mut close = spec.start_price;
    for b in 0..grid.n_buckets() {
        let mut r = noise.sample(&mut rng);
        if pos.binary_search(&b).is_ok() {
            r += spec.jump_size;
        }
        if neg.binary_search(&b).is_ok() {
            r -= spec.jump_size;
        }
        let open = close;
        close = if b == 0 { spec.start_price } else { open * r.exp() };
        let start_ms = grid.bucket_start(b) * 1000;
        let width_ms = spec.bucket_width * 1000;
        let n = 1 + poisson(&mut rng, 2.0);
        let mut offsets: Vec<i64> = (0..n).map(|_| rng.random_range(0..width_ms)).collect();
        offsets.sort_unstable();
        if b == 0 {
            offsets[0] = 0;
        }
        for (i, &off) in offsets.iter().enumerate() {
            let price = if i + 1 == n {
                close
            } else {
                open + (close - open) * rng.random::<f64>()
            };
            ticks.push(TickRecord {
                timestamp_ms: start_ms + off,
                price: (price * 100.0).round() / 100.0,
                amount: (rng.random_range(0.01..2.0) * 1e4f64).round() / 1e4,
            });
        }
    }

    Ok(Fixture {
        spec: spec.clone(),
        submissions,
        ticks,
        truth,
        truth_events,
        topic_words,
    })
}

/// Paths of a fixture written by [`write_fixture`].
#[derive(Debug, Clone)]
pub struct FixtureFiles {
    pub config: PathBuf,
    pub truth: PathBuf,
    pub submissions: Vec<PathBuf>,
    pub ticks: PathBuf,
}

/// Pipeline configuration for a fixture written to a directory: all true
/// topics of every source selected (fitted topic order is arbitrary), paths
/// relative to the directory, and a small document-topic
/// concentration suited to short documents.
pub fn fixture_config(spec: &FixtureSpec) -> PipelineConfig {
    let mut cfg = PipelineConfig {
        seed: spec.seed,
        ..PipelineConfig::default()
    };
    cfg.topics.k = spec.sources.iter().map(|s| s.topics).max().unwrap_or(2);
    // 50 / k would swamp short documents: every theta would clear the
    // occurrence threshold from smoothing alone.
    cfg.topics.alpha = Some(0.1);
    cfg.topics.slice_duration = 7 * 86_400;
    cfg.events.bucket_width = spec.bucket_width;
    cfg.sources = spec
        .sources
        .iter()
        .map(|s| SourceConfig {
            name: s.name.clone(),
            label: Some(s.label.clone()),
            path: PathBuf::from(format!("{}.jsonl", s.name)),
            selected_topics: (0..s.topics).collect(),
            k: Some(s.topics),
        })
        .collect();
    cfg.markets = vec![MarketConfig {
        name: spec.market.clone(),
        path: PathBuf::from(format!("{}_ticks.csv", spec.market)),
    }];
    cfg
}

/// Writes submissions, ticks, the generating network and a pipeline
/// configuration into `dir`.
pub fn write_fixture(fixture: &Fixture, dir: &Path) -> Result<FixtureFiles, IngestError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| IngestError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut submissions = Vec::new();
    for (s, docs) in fixture.spec.sources.iter().zip(&fixture.submissions) {
        let path = dir.join(format!("{}.jsonl", s.name));
        write_submissions(&path, docs)?;
        submissions.push(path);
    }
    let ticks = dir.join(format!("{}_ticks.csv", fixture.spec.market));
    write_ticks(&ticks, &fixture.ticks)?;

    let truth = dir.join("truth.toml");
    let text = toml::to_string(&fixture.truth).expect("network spec serializes");
    std::fs::write(&truth, text).map_err(io(&truth))?;

    let config = dir.join("pipeline.toml");
    let text = toml::to_string(&fixture_config(&fixture.spec)).expect("config serializes");
    std::fs::write(&config, text).map_err(io(&config))?;
    Ok(FixtureFiles {
        config,
        truth,
        submissions,
        ticks,
    })
}

/// True weight matrix of a fixture as an array.
pub fn truth_weights(fixture: &Fixture) -> Array2<f64> {
    let k = fixture.truth.labels.len();
    Array2::from_shape_fn((k, k), |(a, b)| fixture.truth.weights[a][b])
}

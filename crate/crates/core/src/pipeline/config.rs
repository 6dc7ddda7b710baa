use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::corpus::VocabConfig;
use crate::events::DEFAULT_BUCKET_WIDTH;
use crate::hawkes::{GammaPrior, GibbsConfig, ImpulseBasis, DEFAULT_DT_MAX};
use crate::topics::{LdaConfig, DEFAULT_OCCURRENCE_THRESHOLD, DEFAULT_SLICE_DURATION};

/// Whole-run configuration, read from TOML.
///
/// Relative paths resolve against the directory holding the config file.
/// Every key except `sources` and `markets` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub corpus: CorpusSection,
    #[serde(default)]
    pub topics: TopicsSection,
    #[serde(default)]
    pub events: EventsSection,
    #[serde(default)]
    pub hawkes: HawkesSection,
    #[serde(default)]
    pub sources: Vec<SourceConfig>,
    #[serde(default)]
    pub markets: Vec<MarketConfig>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            out_dir: default_out_dir(),
            seed: 0,
            corpus: CorpusSection::default(),
            topics: TopicsSection::default(),
            events: EventsSection::default(),
            hawkes: HawkesSection::default(),
            sources: Vec::new(),
            markets: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    #[default]
    PerSource,
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub min_df: usize,
    pub max_df_ratio: f64,
    /// Whether document frequencies are counted per source or over all
    /// sources together.
    pub prune_scope: Scope,
    /// Replacement stopword list, one word per line.
    pub stoplist: Option<PathBuf>,
    /// Replacement tagger rule file.
    pub tagger_rules: Option<PathBuf>,
}

impl Default for CorpusSection {
    fn default() -> Self {
        let v = VocabConfig::default();
        Self {
            min_df: v.min_df,
            max_df_ratio: v.max_df_ratio,
            prune_scope: Scope::PerSource,
            stoplist: None,
            tagger_rules: None,
        }
    }
}

impl CorpusSection {
    pub fn vocab(&self) -> VocabConfig {
        VocabConfig {
            min_df: self.min_df,
            max_df_ratio: self.max_df_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicsSection {
    pub k: usize,
    /// Defaults to `50 / k`.
    pub alpha: Option<f64>,
    pub eta: f64,
    pub sweeps: usize,
    pub burn_in: usize,
    pub slice_duration: i64,
    pub kappa: f64,
    pub occurrence_threshold: f64,
}

impl Default for TopicsSection {
    fn default() -> Self {
        let lda = LdaConfig::default();
        Self {
            k: lda.k,
            alpha: None,
            eta: lda.eta,
            sweeps: lda.sweeps,
            burn_in: lda.burn_in,
            slice_duration: DEFAULT_SLICE_DURATION,
            kappa: 1.0,
            occurrence_threshold: DEFAULT_OCCURRENCE_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventsSection {
    pub bucket_width: i64,
    pub percentile: f64,
    /// Per-series thresholds, or one threshold over all topic series.
    pub threshold_scope: Scope,
    pub count_smoothing: f64,
}

impl Default for EventsSection {
    fn default() -> Self {
        Self {
            bucket_width: DEFAULT_BUCKET_WIDTH,
            percentile: 0.99,
            threshold_scope: Scope::PerSource,
            count_smoothing: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HawkesSection {
    pub dt_max: usize,
    /// Inclusive upper lag of each boxcar; defaults scale 8/32/96 to `dt_max`.
    pub basis_edges: Option<Vec<usize>>,
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub prior_lambda0: GammaPrior,
    pub prior_weights: GammaPrior,
    pub prior_impulse: f64,
}

impl Default for HawkesSection {
    fn default() -> Self {
        let g = GibbsConfig::default();
        Self {
            dt_max: DEFAULT_DT_MAX,
            basis_edges: None,
            iterations: g.iterations,
            burn_in: g.burn_in,
            thinning: g.thinning,
            prior_lambda0: g.prior_lambda0,
            prior_weights: g.prior_weights,
            prior_impulse: g.prior_impulse,
        }
    }
}

impl HawkesSection {
    pub fn basis(&self) -> Result<ImpulseBasis, PipelineError> {
        match &self.basis_edges {
            Some(edges) => ImpulseBasis::boxcars(self.dt_max, edges),
            None => ImpulseBasis::default_for(self.dt_max),
        }
        .map_err(|e| PipelineError::config("config", e))
    }

    pub fn gibbs(&self, seed: u64) -> GibbsConfig {
        GibbsConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            thinning: self.thinning,
            prior_lambda0: self.prior_lambda0,
            prior_weights: self.prior_weights,
            prior_impulse: self.prior_impulse,
            seed,
        }
    }
}

/// One text source, fitted with its own topic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    /// Matched against the `subreddit` field; also names the output files.
    pub name: String,
    /// Prefix of process labels, `<label>_<topic>`. Defaults to `name`.
    #[serde(default)]
    pub label: Option<String>,
    pub path: PathBuf,
    /// Topic indices entering the Hawkes model, in process order.
    #[serde(default)]
    pub selected_topics: Vec<usize>,
    /// Overrides `topics.k` for this source.
    #[serde(default)]
    pub k: Option<usize>,
}

impl SourceConfig {
    pub fn prefix(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.name)
    }
}

/// One exchange tick file; yields `<name>_pos` and `<name>_neg` processes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub name: String,
    pub path: PathBuf,
}

impl PipelineConfig {
    /// Parses TOML and resolves relative paths against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| PipelineError::config("config", e))?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.out_dir);
        for s in &mut cfg.sources {
            resolve(&mut s.path);
        }
        for m in &mut cfg.markets {
            resolve(&mut m.path);
        }
        if let Some(p) = cfg.corpus.stoplist.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.corpus.tagger_rules.as_mut() {
            resolve(p);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::config("config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn lda(&self, source: &SourceConfig, seed: u64) -> LdaConfig {
        let k = source.k.unwrap_or(self.topics.k);
        LdaConfig {
            k,
            alpha: self.topics.alpha.unwrap_or(50.0 / k as f64),
            eta: self.topics.eta,
            sweeps: self.topics.sweeps,
            burn_in: self.topics.burn_in,
            seed,
            ..LdaConfig::with_topics(k)
        }
    }

    /// Process labels in configured order: selected topics source by
    /// source, then each market's up and down streams.
    pub fn process_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self
            .sources
            .iter()
            .flat_map(|s| s.selected_topics.iter().map(move |k| format!("{}_{k}", s.prefix())))
            .collect();
        for m in &self.markets {
            labels.push(format!("{}_pos", m.name));
            labels.push(format!("{}_neg", m.name));
        }
        labels
    }

    /// Checks everything that does not need the input files.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::config("config", m));
        let names = self.sources.iter().map(|s| &s.name).chain(self.markets.iter().map(|m| &m.name));
        for name in names {
            // Source names become file names.
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
                return bad(format!("name {name:?} must be non-empty ASCII letters, digits, '_', '-' or '.'"));
            }
        }
        for s in &self.sources {
            let lda = self.lda(s, 0);
            lda.validate().map_err(|e| PipelineError::config("config", format!("source {}: {e}", s.name)))?;
            if let Some(&t) = s.selected_topics.iter().find(|&&t| t >= lda.k) {
                return bad(format!("source {}: selected topic {t} >= k = {}", s.name, lda.k));
            }
        }
        if !(self.corpus.max_df_ratio > 0.0 && self.corpus.max_df_ratio <= 1.0) {
            return bad(format!("max_df_ratio must lie in (0, 1], got {}", self.corpus.max_df_ratio));
        }
        if self.topics.slice_duration <= 0 || !(self.topics.kappa >= 0.0) {
            return bad("slice_duration must be positive and kappa nonnegative".into());
        }
        if !(self.topics.occurrence_threshold >= 0.0 && self.topics.occurrence_threshold < 1.0) {
            return bad("occurrence_threshold must lie in [0, 1)".into());
        }
        if self.events.bucket_width <= 0 || !(self.events.count_smoothing >= 0.0) {
            return bad("bucket_width must be positive and count_smoothing nonnegative".into());
        }
        if !(self.events.percentile > 0.0 && self.events.percentile < 1.0) {
            return bad(format!("percentile must lie in (0, 1), got {}", self.events.percentile));
        }
        self.hawkes.basis()?;
        self.hawkes.gibbs(0).validate().map_err(|e| PipelineError::config("config", e))?;
        let labels = self.process_labels();
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return bad(format!("duplicate process label {dup}"));
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus the requirement of at least two
    /// processes, which the event and fit stages need.
    pub fn validate_processes(&self) -> Result<(), PipelineError> {
        self.validate()?;
        let n = self.process_labels().len();
        if n < 2 {
            return Err(PipelineError::config("config", format!("need at least 2 processes, config selects {n}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[[sources]]
name = "alpha"
label = "a"
path = "alpha.jsonl"
selected_topics = [3, 1]

[[markets]]
name = "XYZ"
path = "/abs/xyz.csv"
"#;

    #[test]
    fn defaults_match_documented_values() {
        let cfg = PipelineConfig::from_toml(MINIMAL, Path::new("/base")).unwrap();
        assert_eq!(cfg.events.bucket_width, 900);
        assert_eq!(cfg.events.percentile, 0.99);
        assert_eq!(cfg.hawkes.dt_max, 96);
        assert_eq!(cfg.topics.occurrence_threshold, 0.1);
        assert_eq!(cfg.corpus.min_df, 20);
        assert_eq!(cfg.corpus.max_df_ratio, 0.5);
        assert_eq!(cfg.topics.k, 30);
        assert_eq!(cfg.lda(&cfg.sources[0], 1).alpha, 50.0 / 30.0);
        assert_eq!(cfg.sources[0].path, Path::new("/base/alpha.jsonl"));
        assert_eq!(cfg.markets[0].path, Path::new("/abs/xyz.csv"));
        assert_eq!(cfg.out_dir, Path::new("/base/out"));
        cfg.validate_processes().unwrap();
    }

    #[test]
    fn labels_follow_configured_order() {
        let cfg = PipelineConfig::from_toml(MINIMAL, Path::new(".")).unwrap();
        assert_eq!(cfg.process_labels(), ["a_3", "a_1", "XYZ_pos", "XYZ_neg"]);
    }

    #[test]
    fn rejects_bad_settings() {
        let with = |extra: &str| PipelineConfig::from_toml(&format!("{extra}\n{MINIMAL}"), Path::new("."));
        assert!(with("[topics]\nk = 3").unwrap().validate().is_err());
        assert!(with("[events]\npercentile = 1.0").unwrap().validate().is_err());
        assert!(with("[hawkes]\niterations = 10\nburn_in = 10").unwrap().validate().is_err());
        assert!(with("unknown_key = 1").is_err());
        let lone = PipelineConfig::from_toml("[[sources]]\nname = \"a\"\npath = \"a\"\nselected_topics = [0]", Path::new("."))
            .unwrap();
        assert!(lone.validate().is_ok());
        assert!(lone.validate_processes().is_err());
    }
}

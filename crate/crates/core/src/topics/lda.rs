use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TopicsError;
use crate::corpus::{BowDocument, Vocabulary};

/// Collapsed Gibbs settings for LDA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    /// Symmetric document-topic concentration.
    pub alpha: f64,
    /// Symmetric topic-word concentration.
    pub eta: f64,
    pub sweeps: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Mean document length; only the synthetic generator reads it.
    pub xi: f64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self::with_topics(30)
    }
}

impl LdaConfig {
    /// Defaults for `k` topics, with `alpha = 50 / k`.
    pub fn with_topics(k: usize) -> Self {
        Self {
            k,
            alpha: 50.0 / k as f64,
            eta: 0.01,
            sweeps: 500,
            burn_in: 250,
            seed: 0,
            xi: 80.0,
        }
    }

    pub fn validate(&self) -> Result<(), TopicsError> {
        let bad = |m: &str| Err(TopicsError::InvalidConfig(m.to_string()));
        if self.k < 2 {
            return bad("k must be at least 2");
        }
        if !(self.alpha > 0.0) || !(self.eta > 0.0) {
            return bad("alpha and eta must be positive");
        }
        if self.sweeps <= self.burn_in {
            return bad("sweeps must exceed burn_in");
        }
        Ok(())
    }
}

/// Topic-word distributions for one time slice; row `k` is topic `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModelSlice {
    pub slice_index: usize,
    pub beta: Array2<f64>,
}

impl TopicModelSlice {
    pub fn n_topics(&self) -> usize {
        self.beta.nrows()
    }

    pub fn vocab_size(&self) -> usize {
        self.beta.ncols()
    }
}

/// Topic mixture of one document.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTopicMix {
    pub doc_id: String,
    pub timestamp: i64,
    pub source: String,
    pub theta: Vec<f64>,
}

/// Draws an index with probability proportional to `weights[i]`, given their
/// precomputed `total`.
pub(crate) fn categorical<R: Rng>(rng: &mut R, weights: &[f64], total: f64) -> usize {
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        u -= w;
        if u < 0.0 {
            return i;
        }
    }
    // Rounding left a sliver past the last bin; fall back to the last
    // positive weight.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Per-(topic, term) Dirichlet prior, stored term-major.
pub(crate) struct TopicWordPrior {
    k: usize,
    /// `values[v * k + topic]`
    values: Vec<f64>,
    row_sums: Vec<f64>,
}

impl TopicWordPrior {
    pub(crate) fn symmetric(k: usize, v: usize, eta: f64) -> Self {
        Self::from_fn(k, v, |_, _| eta)
    }

    pub(crate) fn from_fn(k: usize, v: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; k * v];
        for term in 0..v {
            for topic in 0..k {
                values[term * k + topic] = f(topic, term);
            }
        }
        let mut row_sums = vec![0.0; k];
        for term in 0..v {
            for topic in 0..k {
                row_sums[topic] += values[term * k + topic];
            }
        }
        Self { k, values, row_sums }
    }

    fn at(&self, topic: usize, term: usize) -> f64 {
        self.values[term * self.k + topic]
    }

    /// Expected topic-word distributions under the prior alone.
    pub(crate) fn mean(&self) -> Array2<f64> {
        let v = self.values.len() / self.k;
        Array2::from_shape_fn((self.k, v), |(topic, term)| {
            self.at(topic, term) / self.row_sums[topic]
        })
    }
}

/// Token-level sampler state for one corpus.
struct GibbsState {
    k: usize,
    #[cfg_attr(not(test), allow(dead_code))]
    v: usize,
    /// Term of every token, documents laid out back to back.
    words: Vec<usize>,
    /// Topic of every token.
    z: Vec<usize>,
    doc_offsets: Vec<usize>,
    /// `n_vk[v * k + topic]`
    n_vk: Vec<u32>,
    n_k: Vec<u32>,
    /// `m_dk[d * k + topic]`
    m_dk: Vec<u32>,
}

impl GibbsState {
    fn new<R: Rng>(
        docs: &[BowDocument],
        k: usize,
        v: usize,
        prior: &TopicWordPrior,
        rng: &mut R,
    ) -> Self {
        let mut words = Vec::new();
        let mut doc_offsets = vec![0];
        for d in docs {
            for &(term, count) in &d.counts {
                words.extend(std::iter::repeat_n(term, count as usize));
            }
            doc_offsets.push(words.len());
        }
        let mut state = Self {
            k,
            v,
            z: vec![0; words.len()],
            words,
            doc_offsets,
            n_vk: vec![0; v * k],
            n_k: vec![0; k],
            m_dk: vec![0; docs.len() * k],
        };
        // Initial topics are drawn from the topic-word prior of each token's
        // term, which is uniform for a symmetric prior.
        for d in 0..docs.len() {
            for i in state.doc_offsets[d]..state.doc_offsets[d + 1] {
                let term = state.words[i];
                let weights = &prior.values[term * k..(term + 1) * k];
                let total: f64 = weights.iter().sum();
                let topic = categorical(rng, weights, total);
                state.assign(d, i, topic);
            }
        }
        state
    }

    fn assign(&mut self, d: usize, i: usize, topic: usize) {
        self.z[i] = topic;
        self.n_vk[self.words[i] * self.k + topic] += 1;
        self.n_k[topic] += 1;
        self.m_dk[d * self.k + topic] += 1;
    }

    fn unassign(&mut self, d: usize, i: usize) {
        let topic = self.z[i];
        self.n_vk[self.words[i] * self.k + topic] -= 1;
        self.n_k[topic] -= 1;
        self.m_dk[d * self.k + topic] -= 1;
    }

    fn sweep<R: Rng>(&mut self, alpha: f64, prior: &TopicWordPrior, weights: &mut [f64], rng: &mut R) {
        let k = self.k;
        for d in 0..self.doc_offsets.len() - 1 {
            for i in self.doc_offsets[d]..self.doc_offsets[d + 1] {
                self.unassign(d, i);
                let term = self.words[i];
                let mut total = 0.0;
                for topic in 0..k {
                    let w = (self.m_dk[d * k + topic] as f64 + alpha)
                        * (self.n_vk[term * k + topic] as f64 + prior.values[term * k + topic])
                        / (self.n_k[topic] as f64 + prior.row_sums[topic]);
                    weights[topic] = w;
                    total += w;
                }
                let topic = categorical(rng, weights, total);
                self.assign(d, i, topic);
            }
        }
    }

    #[cfg(test)]
    fn check_conservation(&self, docs: &[BowDocument]) {
        let mut freq = vec![0u32; self.v];
        for d in docs {
            for &(t, c) in &d.counts {
                freq[t] += c;
            }
        }
        for (term, &f) in freq.iter().enumerate() {
            let s: u32 = (0..self.k).map(|t| self.n_vk[term * self.k + t]).sum();
            assert_eq!(s, f);
        }
        for (d, doc) in docs.iter().enumerate() {
            let s: u32 = (0..self.k).map(|t| self.m_dk[d * self.k + t]).sum();
            assert_eq!(s as usize, doc.len());
        }
    }
}

pub(crate) fn check_docs(docs: &[BowDocument], vocab_size: usize, k: usize) -> Result<(), TopicsError> {
    if docs.is_empty() {
        return Err(TopicsError::EmptyCorpus);
    }
    let mut tokens = 0usize;
    for d in docs {
        if d.is_empty() {
            return Err(TopicsError::EmptyDocument(d.doc_id.clone()));
        }
        if let Some(&(t, _)) = d.counts.iter().find(|&&(t, _)| t >= vocab_size) {
            return Err(TopicsError::TermOutOfRange { term: t, vocab_size });
        }
        tokens += d.len();
    }
    if k > tokens {
        return Err(TopicsError::TooManyTopics { k, tokens });
    }
    Ok(())
}

/// Runs collapsed Gibbs and returns beta plus per-document theta, both from
/// counts averaged over post-burn-in sweeps.
pub(crate) fn gibbs_fit(
    docs: &[BowDocument],
    vocab_size: usize,
    config: &LdaConfig,
    prior: &TopicWordPrior,
    seed: u64,
    slice_index: usize,
) -> (TopicModelSlice, Vec<DocTopicMix>) {
    let k = config.k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = GibbsState::new(docs, k, vocab_size, prior, &mut rng);
    let mut weights = vec![0.0; k];
    let mut sum_n_vk = vec![0.0; vocab_size * k];
    let mut sum_m_dk = vec![0.0; docs.len() * k];
    let mut kept = 0usize;
    for sweep in 0..config.sweeps {
        state.sweep(config.alpha, prior, &mut weights, &mut rng);
        #[cfg(test)]
        state.check_conservation(docs);
        if sweep >= config.burn_in {
            kept += 1;
            for (acc, &n) in sum_n_vk.iter_mut().zip(&state.n_vk) {
                *acc += n as f64;
            }
            for (acc, &m) in sum_m_dk.iter_mut().zip(&state.m_dk) {
                *acc += m as f64;
            }
        }
    }
    let kept = kept as f64;

    let mut beta = Array2::<f64>::zeros((k, vocab_size));
    for topic in 0..k {
        let n_topic: f64 = (0..vocab_size).map(|v| sum_n_vk[v * k + topic] / kept).sum();
        let denom = n_topic + prior.row_sums[topic];
        for v in 0..vocab_size {
            beta[[topic, v]] = (sum_n_vk[v * k + topic] / kept + prior.at(topic, v)) / denom;
        }
    }

    let mixes = docs
        .iter()
        .enumerate()
        .map(|(d, doc)| {
            let denom = doc.len() as f64 + k as f64 * config.alpha;
            let theta = (0..k)
                .map(|topic| (sum_m_dk[d * k + topic] / kept + config.alpha) / denom)
                .collect();
            DocTopicMix {
                doc_id: doc.doc_id.clone(),
                timestamp: doc.timestamp,
                source: doc.source.clone(),
                theta,
            }
        })
        .collect();
    (TopicModelSlice { slice_index, beta }, mixes)
}

/// Fits LDA by collapsed Gibbs sampling over token-topic assignments.
pub fn fit_lda(
    docs: &[BowDocument],
    vocab_size: usize,
    config: &LdaConfig,
) -> Result<(TopicModelSlice, Vec<DocTopicMix>), TopicsError> {
    config.validate()?;
    check_docs(docs, vocab_size, config.k)?;
    let prior = TopicWordPrior::symmetric(config.k, vocab_size, config.eta);
    Ok(gibbs_fit(docs, vocab_size, config, &prior, config.seed, 0))
}

/// Topic mixture of a single document with `slice.beta` held fixed.
///
/// The first half of the sweeps is discarded; theta averages the rest.
pub fn infer_mixture(
    doc: &BowDocument,
    slice: &TopicModelSlice,
    alpha: f64,
    sweeps: usize,
    seed: u64,
) -> Result<DocTopicMix, TopicsError> {
    if doc.is_empty() {
        return Err(TopicsError::EmptyDocument(doc.doc_id.clone()));
    }
    if sweeps == 0 || !(alpha > 0.0) {
        return Err(TopicsError::InvalidConfig(
            "inference needs sweeps > 0 and alpha > 0".into(),
        ));
    }
    let k = slice.n_topics();
    let v = slice.vocab_size();
    if let Some(&(t, _)) = doc.counts.iter().find(|&&(t, _)| t >= v) {
        return Err(TopicsError::TermOutOfRange { term: t, vocab_size: v });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words: Vec<usize> = doc
        .counts
        .iter()
        .flat_map(|&(t, c)| std::iter::repeat_n(t, c as usize))
        .collect();
    let mut weights = vec![0.0; k];
    let mut m = vec![0u32; k];
    let mut z = Vec::with_capacity(words.len());
    for &w in &words {
        let col = slice.beta.column(w);
        for (dst, &b) in weights.iter_mut().zip(col.iter()) {
            *dst = b;
        }
        let total: f64 = weights.iter().sum();
        let topic = categorical(&mut rng, &weights, total);
        m[topic] += 1;
        z.push(topic);
    }
    let burn_in = sweeps / 2;
    let mut sum_m = vec![0.0; k];
    for sweep in 0..sweeps {
        for (i, &w) in words.iter().enumerate() {
            m[z[i]] -= 1;
            let mut total = 0.0;
            for topic in 0..k {
                let p = (m[topic] as f64 + alpha) * slice.beta[[topic, w]];
                weights[topic] = p;
                total += p;
            }
            let topic = categorical(&mut rng, &weights, total);
            m[topic] += 1;
            z[i] = topic;
        }
        if sweep >= burn_in {
            for (acc, &c) in sum_m.iter_mut().zip(&m) {
                *acc += c as f64;
            }
        }
    }
    let kept = (sweeps - burn_in) as f64;
    let denom = words.len() as f64 + k as f64 * alpha;
    Ok(DocTopicMix {
        doc_id: doc.doc_id.clone(),
        timestamp: doc.timestamp,
        source: doc.source.clone(),
        theta: sum_m.iter().map(|s| (s / kept + alpha) / denom).collect(),
    })
}

/// The `n` most probable terms of `topic`, ties broken lexicographically.
pub fn top_words(
    slice: &TopicModelSlice,
    topic: usize,
    n: usize,
    vocab: &Vocabulary,
) -> Result<Vec<(String, f64)>, TopicsError> {
    if topic >= slice.n_topics() {
        return Err(TopicsError::TopicOutOfRange {
            topic,
            k: slice.n_topics(),
        });
    }
    let mut ranked: Vec<(String, f64)> = slice
        .beta
        .row(topic)
        .iter()
        .enumerate()
        .map(|(v, &p)| (vocab.term(v).to_string(), p))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(n);
    Ok(ranked)
}

use std::collections::BTreeMap;

use super::lda::{check_docs, gibbs_fit, DocTopicMix, LdaConfig, TopicModelSlice, TopicWordPrior};
use super::TopicsError;
use crate::corpus::BowDocument;

/// One week.
pub const DEFAULT_SLICE_DURATION: i64 = 7 * 24 * 3600;

/// Slice-chained LDA: each slice's topic-word prior is centred on the
/// previous slice's topics.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicTopicModel {
    pub slices: Vec<TopicModelSlice>,
    /// Timestamp where slice 0 begins.
    pub origin: i64,
    pub slice_duration: i64,
    pub kappa: f64,
    pub vocab_size: usize,
    pub config: LdaConfig,
}

impl DynamicTopicModel {
    pub fn slice_of(&self, timestamp: i64) -> usize {
        slice_index(timestamp, self.origin, self.slice_duration)
    }
}

fn slice_index(ts: i64, origin: i64, duration: i64) -> usize {
    ((ts - origin) / duration) as usize
}

/// Seed used for slice `t`. Slice 0 uses the configured seed unchanged.
pub fn slice_seed(seed: u64, t: usize) -> u64 {
    seed.wrapping_add((t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Splits documents into slices of `slice_duration` seconds starting at the
/// earliest timestamp. Returns per-slice document indices.
pub fn partition_slices(docs: &[BowDocument], slice_duration: i64) -> (i64, Vec<Vec<usize>>) {
    let origin = docs.iter().map(|d| d.timestamp).min().unwrap_or(0);
    let mut by_slice: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, d) in docs.iter().enumerate() {
        by_slice
            .entry(slice_index(d.timestamp, origin, slice_duration))
            .or_default()
            .push(i);
    }
    let n = by_slice.keys().next_back().map_or(0, |&last| last + 1);
    let mut slices = vec![Vec::new(); n];
    for (s, idx) in by_slice {
        slices[s] = idx;
    }
    (origin, slices)
}

/// Fits one LDA per time slice, chaining topic-word priors with strength
/// `kappa`: slice `t` uses `eta + kappa * beta[t-1][k][v] * V * eta`.
///
/// With `kappa = 0` every slice is an independent [`fit_lda`](super::fit_lda)
/// run seeded with [`slice_seed`]. A slice without documents gets the mean of
/// its prior as topics.
pub fn fit_dynamic(
    docs: &[BowDocument],
    vocab_size: usize,
    slice_duration: i64,
    config: &LdaConfig,
    kappa: f64,
) -> Result<(DynamicTopicModel, Vec<DocTopicMix>), TopicsError> {
    config.validate()?;
    if slice_duration <= 0 {
        return Err(TopicsError::InvalidConfig("slice_duration must be positive".into()));
    }
    if !(kappa >= 0.0) {
        return Err(TopicsError::InvalidConfig("kappa must be nonnegative".into()));
    }
    check_docs(docs, vocab_size, config.k)?;

    let k = config.k;
    let (origin, partition) = partition_slices(docs, slice_duration);
    let mut slices: Vec<TopicModelSlice> = Vec::with_capacity(partition.len());
    let mut mixes: Vec<Option<DocTopicMix>> = vec![None; docs.len()];
    let carry = kappa * vocab_size as f64 * config.eta;
    for (t, members) in partition.iter().enumerate() {
        let prior = match slices.last() {
            Some(prev) => TopicWordPrior::from_fn(k, vocab_size, |topic, v| {
                config.eta + carry * prev.beta[[topic, v]]
            }),
            None => TopicWordPrior::symmetric(k, vocab_size, config.eta),
        };
        let slice_docs: Vec<BowDocument> = members.iter().map(|&i| docs[i].clone()).collect();
        let tokens: usize = slice_docs.iter().map(BowDocument::len).sum();
        if slice_docs.is_empty() || tokens < k {
            slices.push(TopicModelSlice {
                slice_index: t,
                beta: prior.mean(),
            });
            if !slice_docs.is_empty() {
                // Too few tokens to sample; fall back to the prior mean topics
                // and a uniform mixture.
                for &i in members {
                    mixes[i] = Some(DocTopicMix {
                        doc_id: docs[i].doc_id.clone(),
                        timestamp: docs[i].timestamp,
                        source: docs[i].source.clone(),
                        theta: vec![1.0 / k as f64; k],
                    });
                }
            }
            continue;
        }
        let (slice, slice_mixes) = gibbs_fit(
            &slice_docs,
            vocab_size,
            config,
            &prior,
            slice_seed(config.seed, t),
            t,
        );
        for (&i, mix) in members.iter().zip(slice_mixes) {
            mixes[i] = Some(mix);
        }
        slices.push(slice);
    }
    let model = DynamicTopicModel {
        slices,
        origin,
        slice_duration,
        kappa,
        vocab_size,
        config: config.clone(),
    };
    Ok((model, mixes.into_iter().map(|m| m.expect("every doc is in a slice")).collect()))
}

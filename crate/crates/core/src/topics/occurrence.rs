use super::lda::DocTopicMix;
use super::TopicsError;
use crate::events::{BucketGrid, BucketSeries, SeriesKind};

/// Default share of a document a topic must exceed to count as an occurrence.
pub const DEFAULT_OCCURRENCE_THRESHOLD: f64 = 0.1;

/// Per-bucket count of documents in which one topic occurs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicOccurrenceSeries {
    pub topic_index: usize,
    pub bucket_start: i64,
    pub bucket_width: i64,
    pub counts: Vec<u32>,
}

impl TopicOccurrenceSeries {
    pub fn to_bucket_series(&self, grid: BucketGrid) -> BucketSeries {
        BucketSeries {
            grid,
            values: self.counts.iter().map(|&c| c as f64).collect(),
            kind: SeriesKind::Count,
        }
    }
}

/// One series per topic; a document counts toward topic `k` in its bucket
/// when `theta[k] > threshold`. One document may count for several topics.
pub fn occurrence_series(
    mixes: &[DocTopicMix],
    threshold: f64,
    grid: BucketGrid,
) -> Result<Vec<TopicOccurrenceSeries>, TopicsError> {
    let k = mixes.first().map_or(0, |m| m.theta.len());
    let mut counts = vec![vec![0u32; grid.n_buckets()]; k];
    for m in mixes {
        if m.theta.len() != k {
            return Err(TopicsError::InvalidConfig(format!(
                "document {} has {} topics, expected {k}",
                m.doc_id,
                m.theta.len()
            )));
        }
        let b = grid
            .bucket_of(m.timestamp)
            .ok_or(TopicsError::OutsideGrid(m.timestamp))?;
        for (topic, &share) in m.theta.iter().enumerate() {
            if share > threshold {
                counts[topic][b] += 1;
            }
        }
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(topic_index, counts)| TopicOccurrenceSeries {
            topic_index,
            bucket_start: grid.start(),
            bucket_width: grid.bucket_width(),
            counts,
        })
        .collect())
}

//! LDA and slice-chained dynamic topic models fitted by collapsed Gibbs
//! sampling, plus topic-occurrence series.

use thiserror::Error;

mod dynamic;
mod lda;
pub mod metrics;
mod occurrence;
mod report;
pub mod synthetic;

pub use dynamic::{fit_dynamic, partition_slices, slice_seed, DynamicTopicModel, DEFAULT_SLICE_DURATION};
pub use lda::{fit_lda, infer_mixture, top_words, DocTopicMix, LdaConfig, TopicModelSlice};
pub use occurrence::{occurrence_series, TopicOccurrenceSeries, DEFAULT_OCCURRENCE_THRESHOLD};
pub(crate) use lda::categorical;
pub use report::{write_theta_csv, read_theta_csv, write_topic_report, REPORT_WORDS};

#[derive(Debug, Error)]
pub enum TopicsError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("document {0} has no in-vocabulary tokens")]
    EmptyDocument(String),
    #[error("{k} topics requested but the corpus has only {tokens} tokens")]
    TooManyTopics { k: usize, tokens: usize },
    #[error("term index {term} out of range for vocabulary of {vocab_size}")]
    TermOutOfRange { term: usize, vocab_size: usize },
    #[error("topic {topic} out of range for {k} topics")]
    TopicOutOfRange { topic: usize, k: usize },
    #[error("timestamp {0} lies outside the bucket grid")]
    OutsideGrid(i64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("theta CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

//! Text preprocessing: tokenization, stopword and part-of-speech filtering,
//! vocabulary pruning and bag-of-words vectorization.

use std::collections::HashSet;

use thiserror::Error;

use crate::ingest::RawSubmission;

mod tagger;
mod tokenize;
mod vocab;

pub use tagger::{filter_pos, HeuristicTagger, PosTag, PosTagger, RuleError};
pub use tokenize::{default_stoplist, parse_word_list, remove_stopwords, tokenize};
pub use vocab::{build_vocabulary, document_frequencies, vectorize, VocabConfig, Vocabulary};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error(transparent)]
    Rules(#[from] RuleError),
}

/// A submission after tokenization and filtering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessedDocument {
    pub id: String,
    pub timestamp: i64,
    pub source: String,
    pub tokens: Vec<String>,
}

/// Sparse term counts for one document. `counts` holds `(term_index, count)`
/// pairs with strictly increasing term indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BowDocument {
    pub doc_id: String,
    pub timestamp: i64,
    pub source: String,
    pub counts: Vec<(usize, u32)>,
}

impl BowDocument {
    pub fn len(&self) -> usize {
        self.counts.iter().map(|&(_, c)| c as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Tokenize, drop stopwords, keep nouns and adjectives.
pub struct Preprocessor {
    stoplist: HashSet<String>,
    tagger: Box<dyn PosTagger + Send + Sync>,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Self::new(default_stoplist(), HeuristicTagger::bundled())
    }
}

impl Preprocessor {
    pub fn new(stoplist: HashSet<String>, tagger: impl PosTagger + Send + Sync + 'static) -> Self {
        Self {
            stoplist,
            tagger: Box::new(tagger),
        }
    }

    pub fn tokens(&self, text: &str) -> Vec<String> {
        let tokens = remove_stopwords(tokenize(text), &self.stoplist);
        filter_pos(tokens, self.tagger.as_ref())
    }

    pub fn process(&self, raw: &RawSubmission) -> ProcessedDocument {
        ProcessedDocument {
            id: raw.id.clone(),
            timestamp: raw.created_utc,
            source: raw.source.clone(),
            tokens: self.tokens(&raw.text),
        }
    }
}

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{BowDocument, CorpusError, ProcessedDocument};

/// Document-frequency pruning bounds. Both bounds are inclusive-keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VocabConfig {
    pub min_df: usize,
    pub max_df_ratio: f64,
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self {
            min_df: 20,
            max_df_ratio: 0.5,
        }
    }
}

/// Pruned, lexicographically ordered vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_frequency: Vec<usize>,
    corpus_size: usize,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, idx: usize) -> &str {
        &self.terms[idx]
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn doc_frequency(&self, idx: usize) -> usize {
        self.doc_frequency[idx]
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    /// Builds a vocabulary directly from terms, e.g. for fixtures. Terms are
    /// sorted and deduplicated; document frequencies are left at zero.
    pub fn from_terms<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut terms: Vec<String> = terms.into_iter().map(Into::into).collect();
        terms.sort();
        terms.dedup();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self {
            doc_frequency: vec![0; terms.len()],
            terms,
            corpus_size: 0,
            index,
        }
    }
}

fn keep(df: usize, n_docs: usize, config: &VocabConfig) -> bool {
    df >= config.min_df && df as f64 <= config.max_df_ratio * n_docs as f64
}

/// Counts, for every term, the number of documents containing it.
pub fn document_frequencies<'a, I>(docs: I) -> BTreeMap<String, usize>
where
    I: IntoIterator<Item = &'a ProcessedDocument>,
{
    let mut df = BTreeMap::new();
    for doc in docs {
        let distinct: HashSet<&str> = doc.tokens.iter().map(String::as_str).collect();
        for t in distinct {
            *df.entry(t.to_string()).or_insert(0) += 1;
        }
    }
    df
}

/// Keeps terms appearing in at least `min_df` documents and in at most
/// `max_df_ratio` of all documents.
pub fn build_vocabulary(
    docs: &[ProcessedDocument],
    config: &VocabConfig,
) -> Result<Vocabulary, CorpusError> {
    if docs.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let n = docs.len();
    let (terms, doc_frequency): (Vec<_>, Vec<_>) = document_frequencies(docs)
        .into_iter()
        .filter(|&(_, df)| keep(df, n, config))
        .unzip();
    let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    let vocab = Vocabulary {
        terms,
        doc_frequency,
        corpus_size: n,
        index,
    };
    debug_assert!(vocab.doc_frequency.iter().all(|&df| keep(df, n, config)));
    Ok(vocab)
}

/// Sparse term counts of `doc` over `vocab`; unknown tokens are dropped.
pub fn vectorize(doc: &ProcessedDocument, vocab: &Vocabulary) -> BowDocument {
    let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
    for t in &doc.tokens {
        if let Some(i) = vocab.index_of(t) {
            *counts.entry(i).or_insert(0) += 1;
        }
    }
    BowDocument {
        doc_id: doc.id.clone(),
        timestamp: doc.timestamp,
        source: doc.source.clone(),
        counts: counts.into_iter().collect(),
    }
}

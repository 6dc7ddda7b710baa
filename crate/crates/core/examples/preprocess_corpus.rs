//! Reads a submission dump, preprocesses it and prints the pruned
//! vocabulary with document frequencies.
//!
//! ```sh
//! cargo run --example preprocess_corpus -- fixtures/synthetic/coinmarkets.jsonl
//! ```

use hawkes_topics::corpus::{build_vocabulary, vectorize, Preprocessor, VocabConfig};
use hawkes_topics::ingest::{read_submissions, ReadMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "fixtures/synthetic/coinmarkets.jsonl".into());
    let report = read_submissions(&path, ReadMode::Lenient)?;
    let pre = Preprocessor::default();
    let docs: Vec<_> = report.records.iter().map(|r| pre.process(r)).collect();
    let vocab = build_vocabulary(&docs, &VocabConfig::default())?;
    let empty = docs.iter().filter(|d| vectorize(d, &vocab).is_empty()).count();
    println!("{} submissions ({} skipped lines), {} terms kept, {empty} documents empty after pruning", docs.len(), report.skipped, vocab.len());
    for (i, term) in vocab.terms().iter().enumerate().take(20) {
        println!("{term:<16} df {}", vocab.doc_frequency(i));
    }
    Ok(())
}

//! Fits LDA to a corpus drawn from known topics and reports how close each
//! fitted topic lands to its best-matching true topic.

use hawkes_topics::topics::metrics::match_topics;
use hawkes_topics::topics::synthetic::{generate_corpus, random_topics};
use hawkes_topics::topics::{fit_lda, LdaConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let beta = random_topics(&mut rng, 3, 60, 0.1);
    let docs: Vec<_> = generate_corpus(&mut rng, &beta, 0.5, 80.0, &vec![0; 2_000])
        .into_iter()
        .map(|d| d.doc)
        .collect();
    let config = LdaConfig { alpha: 0.5, ..LdaConfig::with_topics(3) };
    let (slice, _) = fit_lda(&docs, 60, &config)?;
    for (k, (truth, tv)) in match_topics(&slice.beta, &beta).into_iter().enumerate() {
        println!("fitted topic {k} -> true topic {truth}, total variation {tv:.4}");
    }
    Ok(())
}

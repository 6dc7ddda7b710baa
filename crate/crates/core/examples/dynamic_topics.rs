//! Fits slice-chained LDA to drifting topics with and without chaining and
//! compares the slice-to-slice drift of the fitted topics.

use hawkes_topics::topics::metrics::mean_slice_drift;
use hawkes_topics::topics::synthetic::{drift_topics, generate_corpus, random_topics};
use hawkes_topics::topics::{fit_dynamic, LdaConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let slice = 1_000;
    let mut beta = random_topics(&mut rng, 3, 60, 0.1);
    let mut docs = Vec::new();
    for t in 0..5 {
        let stamps: Vec<i64> = (0..150).map(|i| t * slice + i).collect();
        docs.extend(generate_corpus(&mut rng, &beta, 0.5, 40.0, &stamps).into_iter().map(|d| d.doc));
        beta = drift_topics(&mut rng, &beta, 0.1, 0.1);
    }
    for (i, d) in docs.iter_mut().enumerate() {
        d.doc_id = format!("d{i}");
    }
    let config = LdaConfig { alpha: 0.5, sweeps: 200, burn_in: 100, ..LdaConfig::with_topics(3) };
    for kappa in [0.0, 1.0, 5.0] {
        let (model, _) = fit_dynamic(&docs, 60, slice, &config, kappa)?;
        println!("kappa {kappa}: {} slices, mean drift {:.4}", model.slices.len(), mean_slice_drift(&model.slices));
    }
    Ok(())
}

//! Corpora drawn from the LDA generative process, for recovery checks.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use super::lda::categorical;
use crate::corpus::BowDocument;

/// One draw from a symmetric-or-not Dirichlet via normalized gammas.
pub fn sample_dirichlet<R: Rng>(rng: &mut R, concentration: &[f64]) -> Vec<f64> {
    let mut draws: Vec<f64> = concentration
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("positive concentration").sample(rng))
        .collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 {
        draws.iter_mut().for_each(|x| *x /= total);
    } else {
        // All gammas underflowed; put the mass on one coordinate.
        let i = rng.random_range(0..draws.len());
        draws.iter_mut().for_each(|x| *x = 0.0);
        draws[i] = 1.0;
    }
    draws
}

/// `k` topics over `v` terms, each drawn from a symmetric Dirichlet.
pub fn random_topics<R: Rng>(rng: &mut R, k: usize, v: usize, concentration: f64) -> Array2<f64> {
    let mut beta = Array2::zeros((k, v));
    for mut row in beta.rows_mut() {
        for (dst, x) in row.iter_mut().zip(sample_dirichlet(rng, &vec![concentration; v])) {
            *dst = x;
        }
    }
    beta
}

/// Mixes every topic with a fresh random distribution: `(1 - step) * beta + step * noise`.
pub fn drift_topics<R: Rng>(rng: &mut R, beta: &Array2<f64>, step: f64, concentration: f64) -> Array2<f64> {
    let noise = random_topics(rng, beta.nrows(), beta.ncols(), concentration);
    beta * (1.0 - step) + noise * step
}

/// A generated document with its true mixture.
#[derive(Debug, Clone)]
pub struct SyntheticDoc {
    pub doc: BowDocument,
    pub theta: Vec<f64>,
}

/// Draws documents per the LDA generative process: length `N ~ Poisson(xi)`,
/// mixture `theta ~ Dir(alpha)`, then per token a topic from `theta` and a
/// term from that topic's row of `beta`. Zero-length draws are redrawn.
pub fn generate_corpus<R: Rng>(
    rng: &mut R,
    beta: &Array2<f64>,
    alpha: f64,
    xi: f64,
    timestamps: &[i64],
) -> Vec<SyntheticDoc> {
    let k = beta.nrows();
    let v = beta.ncols();
    let length = Poisson::new(xi).expect("positive mean length");
    let rows: Vec<Vec<f64>> = beta.rows().into_iter().map(|r| r.to_vec()).collect();
    let row_totals: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    timestamps
        .iter()
        .enumerate()
        .map(|(d, &ts)| {
            let theta = sample_dirichlet(rng, &vec![alpha; k]);
            let n = loop {
                let n = length.sample(rng) as usize;
                if n > 0 {
                    break n;
                }
            };
            let mut counts = vec![0u32; v];
            for _ in 0..n {
                let z = categorical(rng, &theta, 1.0);
                let w = categorical(rng, &rows[z], row_totals[z]);
                counts[w] += 1;
            }
            let counts = counts
                .into_iter()
                .enumerate()
                .filter(|&(_, c)| c > 0)
                .collect();
            SyntheticDoc {
                doc: BowDocument {
                    doc_id: format!("syn{d}"),
                    timestamp: ts,
                    source: "synthetic".into(),
                    counts,
                },
                theta,
            }
        })
        .collect()
}

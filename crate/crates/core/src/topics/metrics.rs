//! Distances between fitted and reference topics, and held-out perplexity.

use ndarray::{Array2, ArrayView1};

use super::lda::{infer_mixture, TopicModelSlice};
use super::TopicsError;
use crate::corpus::BowDocument;

pub fn total_variation(p: ArrayView1<f64>, q: ArrayView1<f64>) -> f64 {
    0.5 * p.iter().zip(q.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Matches fitted topics to reference topics by the permutation minimizing
/// total TV distance. Returns, for each reference topic, the matched fitted
/// topic and its distance. Exhaustive, so meant for small `k` (at most 8).
pub fn match_topics(fitted: &Array2<f64>, reference: &Array2<f64>) -> Vec<(usize, f64)> {
    let k = reference.nrows();
    assert!(k <= 8, "exhaustive matching is limited to 8 topics");
    assert_eq!(fitted.nrows(), k);
    let dist = Array2::from_shape_fn((k, k), |(r, f)| {
        total_variation(reference.row(r), fitted.row(f))
    });
    let best = permutations(k)
        .into_iter()
        .min_by(|a, b| {
            let cost = |p: &[usize]| p.iter().enumerate().map(|(r, &f)| dist[[r, f]]).sum::<f64>();
            cost(a).total_cmp(&cost(b))
        })
        .expect("at least one permutation");
    best.iter().enumerate().map(|(r, &f)| (f, dist[[r, f]])).collect()
}

/// Mean TV distance between same-index topics of consecutive slices.
pub fn mean_slice_drift(slices: &[TopicModelSlice]) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for pair in slices.windows(2) {
        for k in 0..pair[0].n_topics() {
            total += total_variation(pair[0].beta.row(k), pair[1].beta.row(k));
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        total / n as f64
    }
}

/// Document-completion perplexity: theta is inferred from every other token
/// of each held-out document and scored on the remaining tokens.
pub fn held_out_perplexity(
    slice: &TopicModelSlice,
    docs: &[BowDocument],
    alpha: f64,
    sweeps: usize,
    seed: u64,
) -> Result<f64, TopicsError> {
    let mut log_lik = 0.0;
    let mut n_scored = 0usize;
    for (d, doc) in docs.iter().enumerate() {
        let tokens: Vec<usize> = doc
            .counts
            .iter()
            .flat_map(|&(t, c)| std::iter::repeat_n(t, c as usize))
            .collect();
        let (mut observed, mut scored) = (Vec::new(), Vec::new());
        for (i, &t) in tokens.iter().enumerate() {
            if i % 2 == 0 {
                observed.push(t);
            } else {
                scored.push(t);
            }
        }
        if observed.is_empty() || scored.is_empty() {
            continue;
        }
        let half = BowDocument {
            doc_id: doc.doc_id.clone(),
            timestamp: doc.timestamp,
            source: doc.source.clone(),
            counts: to_counts(&observed),
        };
        let mix = infer_mixture(&half, slice, alpha, sweeps, seed.wrapping_add(d as u64))?;
        for &t in &scored {
            let p: f64 = (0..slice.n_topics())
                .map(|k| mix.theta[k] * slice.beta[[k, t]])
                .sum();
            log_lik += p.ln();
            n_scored += 1;
        }
    }
    if n_scored == 0 {
        return Err(TopicsError::EmptyCorpus);
    }
    Ok((-log_lik / n_scored as f64).exp())
}

fn to_counts(tokens: &[usize]) -> Vec<(usize, u32)> {
    let mut sorted = tokens.to_vec();
    sorted.sort_unstable();
    let mut out: Vec<(usize, u32)> = Vec::new();
    for t in sorted {
        match out.last_mut() {
            Some((last, c)) if *last == t => *c += 1,
            _ => out.push((t, 1)),
        }
    }
    out
}

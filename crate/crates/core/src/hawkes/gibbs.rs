//! Blocked Gibbs sampling with parent (branching) auxiliary variables.
//!
//! Each sweep draws a parent for every event, then `lambda0`, `W` and the
//! kernel coefficients from their conjugate conditionals.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::basis::ImpulseBasis;
use super::network::HawkesNetwork;
use super::HawkesError;
use crate::events::ProcessSet;
use crate::topics::synthetic::sample_dirichlet;

/// Gamma distribution in shape/rate form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    fn sample<R: Rng>(&self, extra_shape: f64, extra_rate: f64, rng: &mut R) -> f64 {
        Gamma::new(self.shape + extra_shape, 1.0 / (self.rate + extra_rate))
            .expect("positive gamma parameters")
            .sample(rng)
    }
}

impl Default for GammaPrior {
    fn default() -> Self {
        Self { shape: 1.0, rate: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GibbsConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub prior_lambda0: GammaPrior,
    pub prior_weights: GammaPrior,
    /// Symmetric Dirichlet concentration over basis coefficients.
    pub prior_impulse: f64,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            iterations: 1500,
            burn_in: 500,
            thinning: 1,
            prior_lambda0: GammaPrior::default(),
            prior_weights: GammaPrior::default(),
            prior_impulse: 1.0,
            seed: 0,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<(), HawkesError> {
        let bad = |m: String| Err(HawkesError::Config(m));
        if self.iterations <= self.burn_in {
            return bad(format!(
                "iterations ({}) must exceed burn_in ({})",
                self.iterations, self.burn_in
            ));
        }
        if self.thinning == 0 {
            return bad("thinning must be at least 1".into());
        }
        let priors = [
            self.prior_lambda0.shape,
            self.prior_lambda0.rate,
            self.prior_weights.shape,
            self.prior_weights.rate,
            self.prior_impulse,
        ];
        if priors.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return bad("all prior parameters must be positive".into());
        }
        Ok(())
    }
}

/// Origin of one event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parent {
    Background,
    Event { process: usize, bucket: usize },
}

/// A parent for every event of a process set, ordered process by process
/// and, within a process, by bucket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParentAssignment {
    pub parents: Vec<Parent>,
}

/// Flattened events of a process set with their admissible parents.
struct EventIndex {
    k: usize,
    n_buckets: usize,
    process: Vec<usize>,
    bucket: Vec<usize>,
    /// Per-event candidate parents as `(event index, lag)`.
    cand_offsets: Vec<usize>,
    candidates: Vec<(usize, usize)>,
    events_per_process: Vec<usize>,
}

impl EventIndex {
    fn new(set: &ProcessSet, dt_max: usize) -> Self {
        let k = set.n_processes();
        let mut process = Vec::new();
        let mut bucket = Vec::new();
        let mut first = Vec::with_capacity(k);
        for (p, s) in set.streams().iter().enumerate() {
            first.push(process.len());
            for &t in &s.event_buckets {
                process.push(p);
                bucket.push(t);
            }
        }
        let mut cand_offsets = vec![0];
        let mut candidates = Vec::new();
        for &t in &bucket {
            let lo = t.saturating_sub(dt_max);
            for (a, s) in set.streams().iter().enumerate() {
                let ev = &s.event_buckets;
                let from = ev.partition_point(|&u| u < lo);
                for (i, &u) in ev.iter().enumerate().skip(from).take_while(|&(_, &u)| u < t) {
                    candidates.push((first[a] + i, t - u));
                }
            }
            cand_offsets.push(candidates.len());
        }
        Self {
            k,
            n_buckets: set.n_buckets(),
            process,
            bucket,
            cand_offsets,
            candidates,
            events_per_process: set.streams().iter().map(|s| s.len()).collect(),
        }
    }

    fn len(&self) -> usize {
        self.process.len()
    }

    fn candidates(&self, e: usize) -> &[(usize, usize)] {
        &self.candidates[self.cand_offsets[e]..self.cand_offsets[e + 1]]
    }

    /// Event index of the event on `process` at `bucket`.
    fn find(&self, process: usize, bucket: usize) -> Option<usize> {
        let lo = self.process.partition_point(|&p| p < process);
        let hi = self.process.partition_point(|&p| p <= process);
        self.bucket[lo..hi].binary_search(&bucket).ok().map(|i| lo + i)
    }
}

/// Parent draws as event indices; `None` is background.
fn draw_parents<R: Rng>(
    index: &EventIndex,
    lambda0: &[f64],
    weights: &Array2<f64>,
    kernels: &[Vec<f64>],
    rng: &mut R,
    out: &mut Vec<Option<usize>>,
) {
    let k = index.k;
    let mut probs: Vec<f64> = Vec::new();
    out.clear();
    for e in 0..index.len() {
        let b = index.process[e];
        let cands = index.candidates(e);
        probs.clear();
        probs.push(lambda0[b]);
        let mut total = lambda0[b];
        for &(p, lag) in cands {
            let a = index.process[p];
            let w = weights[[a, b]] * kernels[a * k + b][lag - 1];
            probs.push(w);
            total += w;
        }
        let pick = crate::topics::categorical(rng, &probs, total);
        out.push(if pick == 0 { None } else { Some(cands[pick - 1].0) });
    }
}

/// Draws a parent for every event given the current network.
pub fn sample_parents(net: &HawkesNetwork, set: &ProcessSet, seed: u64) -> Result<ParentAssignment, HawkesError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_parents_with(net, set, &mut rng)
}

pub fn sample_parents_with<R: Rng>(
    net: &HawkesNetwork,
    set: &ProcessSet,
    rng: &mut R,
) -> Result<ParentAssignment, HawkesError> {
    if set.n_processes() != net.n_processes() {
        return Err(HawkesError::Shape(format!(
            "network has {} processes, event set has {}",
            net.n_processes(),
            set.n_processes()
        )));
    }
    let index = EventIndex::new(set, net.dt_max());
    let k = net.n_processes();
    let kernels: Vec<Vec<f64>> = (0..k * k).map(|e| net.kernel(e / k, e % k).to_vec()).collect();
    let mut raw = Vec::new();
    draw_parents(&index, net.lambda0(), net.weights(), &kernels, rng, &mut raw);
    Ok(ParentAssignment {
        parents: raw
            .into_iter()
            .map(|p| match p {
                None => Parent::Background,
                Some(i) => Parent::Event {
                    process: index.process[i],
                    bucket: index.bucket[i],
                },
            })
            .collect(),
    })
}

/// One draw of every network parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParameters {
    pub lambda0: Vec<f64>,
    pub weights: Array2<f64>,
    /// Basis coefficients per edge, row-major over `(source, target)`.
    pub impulse: Vec<Vec<f64>>,
}

impl NetworkParameters {
    pub fn to_network(&self, labels: Vec<String>, basis: &ImpulseBasis) -> Result<HawkesNetwork, HawkesError> {
        HawkesNetwork::from_basis(labels, self.lambda0.clone(), self.weights.clone(), basis, &self.impulse)
    }
}

/// Sufficient statistics of a parent assignment.
struct ParentCounts {
    background: Vec<f64>,
    /// Children on `b` attributed to parents on `a`, at `[[a, b]]`.
    offspring: Array2<f64>,
    /// Soft per-basis lag counts per edge.
    basis_counts: Vec<Vec<f64>>,
}

fn tally(
    index: &EventIndex,
    parents: &[Option<usize>],
    basis: &ImpulseBasis,
    impulse: &[Vec<f64>],
) -> ParentCounts {
    let k = index.k;
    let nb = basis.len();
    let mut background = vec![0.0; k];
    let mut offspring = Array2::zeros((k, k));
    let mut basis_counts = vec![vec![0.0; nb]; k * k];
    let mut resp = vec![0.0; nb];
    for (e, parent) in parents.iter().enumerate() {
        let b = index.process[e];
        match *parent {
            None => background[b] += 1.0,
            Some(p) => {
                let a = index.process[p];
                let lag = index.bucket[e] - index.bucket[p];
                offspring[[a, b]] += 1.0;
                let coeffs = &impulse[a * k + b];
                let mut total = 0.0;
                for j in 0..nb {
                    resp[j] = basis.mass(j, lag) * coeffs[j];
                    total += resp[j];
                }
                if total <= 0.0 {
                    for j in 0..nb {
                        resp[j] = basis.mass(j, lag);
                    }
                    total = resp.iter().sum();
                }
                for j in 0..nb {
                    basis_counts[a * k + b][j] += resp[j] / total;
                }
            }
        }
    }
    ParentCounts {
        background,
        offspring,
        basis_counts,
    }
}

fn draw_parameters<R: Rng>(
    counts: &ParentCounts,
    index: &EventIndex,
    config: &GibbsConfig,
    rng: &mut R,
) -> NetworkParameters {
    let k = index.k;
    let lambda0 = counts
        .background
        .iter()
        .map(|&c| config.prior_lambda0.sample(c, index.n_buckets as f64, rng))
        .collect();
    let weights = Array2::from_shape_fn((k, k), |_| 0.0);
    let mut weights = weights;
    for a in 0..k {
        let exposure = index.events_per_process[a] as f64;
        for b in 0..k {
            weights[[a, b]] = config.prior_weights.sample(counts.offspring[[a, b]], exposure, rng);
        }
    }
    let impulse = counts
        .basis_counts
        .iter()
        .map(|c| {
            let conc: Vec<f64> = c.iter().map(|&x| config.prior_impulse + x).collect();
            sample_dirichlet(rng, &conc)
        })
        .collect();
    NetworkParameters {
        lambda0,
        weights,
        impulse,
    }
}

/// Draws `lambda0`, `W` and kernel coefficients from their conditionals
/// given a parent assignment. `current_impulse` sets the split of each
/// lag's responsibility across overlapping basis functions.
pub fn update_parameters<R: Rng>(
    assignment: &ParentAssignment,
    set: &ProcessSet,
    basis: &ImpulseBasis,
    current_impulse: &[Vec<f64>],
    config: &GibbsConfig,
    rng: &mut R,
) -> Result<NetworkParameters, HawkesError> {
    let index = EventIndex::new(set, basis.dt_max());
    if assignment.parents.len() != index.len() {
        return Err(HawkesError::Shape(format!(
            "{} parents for {} events",
            assignment.parents.len(),
            index.len()
        )));
    }
    let k = index.k;
    if current_impulse.len() != k * k || current_impulse.iter().any(|c| c.len() != basis.len()) {
        return Err(HawkesError::Shape("impulse coefficients do not match the basis".into()));
    }
    let mut raw = Vec::with_capacity(index.len());
    for (e, p) in assignment.parents.iter().enumerate() {
        match *p {
            Parent::Background => raw.push(None),
            Parent::Event { process, bucket } => {
                let i = index.find(process, bucket).ok_or_else(|| {
                    HawkesError::Inconsistent(format!("parent ({process}, {bucket}) is not an event"))
                })?;
                let lag = index.bucket[e].saturating_sub(bucket);
                if lag == 0 || lag > basis.dt_max() {
                    return Err(HawkesError::Inconsistent(format!(
                        "parent lag {lag} outside 1..={}",
                        basis.dt_max()
                    )));
                }
                raw.push(Some(i));
            }
        }
    }
    let counts = tally(&index, &raw, basis, current_impulse);
    Ok(draw_parameters(&counts, &index, config, rng))
}

/// Posterior means and 90% intervals from the retained samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub labels: Vec<String>,
    pub mean_lambda0: Vec<f64>,
    pub mean_weights: Array2<f64>,
    /// 5th percentile of each weight.
    pub ci90_lower: Array2<f64>,
    /// 95th percentile of each weight.
    pub ci90_upper: Array2<f64>,
    /// Mean basis coefficients per edge, row-major over `(source, target)`.
    pub mean_impulse: Vec<Vec<f64>>,
    pub n_samples: usize,
}

impl PosteriorSummary {
    /// Network at the posterior means.
    pub fn mean_network(&self, basis: &ImpulseBasis) -> Result<HawkesNetwork, HawkesError> {
        HawkesNetwork::from_basis(
            self.labels.clone(),
            self.mean_lambda0.clone(),
            self.mean_weights.clone(),
            basis,
            &self.mean_impulse,
        )
    }
}

fn nearest_rank_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    sorted[rank - 1]
}

/// Runs the sampler for `config.iterations` sweeps and summarizes the
/// samples kept after burn-in and thinning.
pub fn fit(
    set: &ProcessSet,
    dt_max: usize,
    basis: &ImpulseBasis,
    config: &GibbsConfig,
) -> Result<PosteriorSummary, HawkesError> {
    let mut trace = |_: usize, _: &NetworkParameters| {};
    fit_traced(set, dt_max, basis, config, &mut trace)
}

/// [`fit`] with a callback receiving every sweep's parameter draw.
pub fn fit_traced(
    set: &ProcessSet,
    dt_max: usize,
    basis: &ImpulseBasis,
    config: &GibbsConfig,
    trace: &mut dyn FnMut(usize, &NetworkParameters),
) -> Result<PosteriorSummary, HawkesError> {
    config.validate()?;
    if basis.dt_max() != dt_max {
        return Err(HawkesError::Config(format!(
            "basis covers {} lags but dt_max is {dt_max}",
            basis.dt_max()
        )));
    }
    let k = set.n_processes();
    if k == 0 {
        return Err(HawkesError::Config("no processes to fit".into()));
    }
    let index = EventIndex::new(set, dt_max);
    let n = set.n_buckets() as f64;
    let nb = basis.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut params = NetworkParameters {
        lambda0: index
            .events_per_process
            .iter()
            .map(|&c| if c > 0 { c as f64 / n } else { config.prior_lambda0.mean() / (1.0 + n) })
            .collect(),
        weights: Array2::from_elem((k, k), 0.5 / k as f64),
        impulse: vec![vec![1.0 / nb as f64; nb]; k * k],
    };

    let mut sum_lambda0 = vec![0.0; k];
    let mut sum_impulse = vec![vec![0.0; nb]; k * k];
    let mut weight_samples: Vec<Vec<f64>> = vec![Vec::new(); k * k];
    let mut parents = Vec::with_capacity(index.len());
    let mut kept = 0usize;

    for iter in 0..config.iterations {
        let kernels: Vec<Vec<f64>> = params.impulse.iter().map(|c| basis.kernel(c)).collect();
        draw_parents(&index, &params.lambda0, &params.weights, &kernels, &mut rng, &mut parents);
        let counts = tally(&index, &parents, basis, &params.impulse);
        debug_assert_eq!(
            counts.background.iter().sum::<f64>() + counts.offspring.sum(),
            index.len() as f64
        );
        params = draw_parameters(&counts, &index, config, &mut rng);
        trace(iter, &params);

        if iter >= config.burn_in && (iter - config.burn_in).is_multiple_of(config.thinning) {
            kept += 1;
            for (acc, &x) in sum_lambda0.iter_mut().zip(&params.lambda0) {
                *acc += x;
            }
            for (e, samples) in weight_samples.iter_mut().enumerate() {
                samples.push(params.weights[[e / k, e % k]]);
            }
            for (acc, c) in sum_impulse.iter_mut().zip(&params.impulse) {
                for (a, &x) in acc.iter_mut().zip(c) {
                    *a += x;
                }
            }
        }
    }

    let kept_f = kept as f64;
    let mut mean_weights = Array2::zeros((k, k));
    let mut ci90_lower = Array2::zeros((k, k));
    let mut ci90_upper = Array2::zeros((k, k));
    for (e, samples) in weight_samples.iter_mut().enumerate() {
        let (a, b) = (e / k, e % k);
        mean_weights[[a, b]] = samples.iter().sum::<f64>() / kept_f;
        samples.sort_by(f64::total_cmp);
        ci90_lower[[a, b]] = nearest_rank_sorted(samples, 0.05);
        ci90_upper[[a, b]] = nearest_rank_sorted(samples, 0.95);
    }
    Ok(PosteriorSummary {
        labels: set.labels(),
        mean_lambda0: sum_lambda0.iter().map(|s| s / kept_f).collect(),
        mean_weights,
        ci90_lower,
        ci90_upper,
        mean_impulse: sum_impulse
            .into_iter()
            .map(|c| c.into_iter().map(|x| x / kept_f).collect())
            .collect(),
        n_samples: kept,
    })
}

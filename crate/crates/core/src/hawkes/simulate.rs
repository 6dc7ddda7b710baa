use std::collections::VecDeque;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;

use super::network::{spectral_radius, HawkesNetwork};
use super::HawkesError;
use crate::events::{BucketGrid, EventStream, ProcessSet, DEFAULT_BUCKET_WIDTH};

/// Simulated events, plus the number of raw events per process before
/// same-bucket events were collapsed into one indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub set: ProcessSet,
    pub raw_counts: Vec<usize>,
}

fn poisson_draw(mean: f64, rng: &mut ChaCha8Rng) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as usize
}

/// Simulates by the branching construction on a grid starting at 0 with
/// fifteen-minute buckets.
pub fn simulate(net: &HawkesNetwork, n_buckets: usize, seed: u64) -> Result<ProcessSet, HawkesError> {
    let grid = BucketGrid::new(0, DEFAULT_BUCKET_WIDTH, n_buckets)?;
    Ok(simulate_on(net, grid, seed)?.set)
}

/// Branching simulation: background events per (process, bucket) are
/// Poisson(`lambda0`); every event on `a` spawns Poisson(`W[a][b]`)
/// children on each `b` at lags drawn from `g_ab`. Children past the grid
/// end are dropped.
pub fn simulate_on(net: &HawkesNetwork, grid: BucketGrid, seed: u64) -> Result<Simulation, HawkesError> {
    let radius = spectral_radius(net.weights())?;
    if radius >= 1.0 {
        return Err(HawkesError::NonStationary(radius));
    }
    let k = net.n_processes();
    let n = grid.n_buckets();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let lag_samplers: Vec<WeightedIndex<f64>> = (0..k * k)
        .map(|e| WeightedIndex::new(net.kernel(e / k, e % k)).expect("kernel has positive mass"))
        .collect();

    let mut counts = vec![vec![0u32; n]; k];
    let mut pending: VecDeque<(usize, usize)> = VecDeque::new();
    for (b, &rate) in net.lambda0().iter().enumerate() {
        let background = Poisson::new(rate).expect("positive background rate");
        for t in 0..n {
            let c = background.sample(&mut rng) as u32;
            for _ in 0..c {
                pending.push_back((b, t));
            }
        }
    }

    while let Some((a, t)) = pending.pop_front() {
        counts[a][t] += 1;
        for b in 0..k {
            let children = poisson_draw(net.weights()[[a, b]], &mut rng);
            for _ in 0..children {
                let lag = lag_samplers[a * k + b].sample(&mut rng) + 1;
                if t + lag < n {
                    pending.push_back((b, t + lag));
                }
            }
        }
    }

    let raw_counts = counts.iter().map(|c| c.iter().map(|&x| x as usize).sum()).collect();
    let streams = counts
        .iter()
        .zip(net.labels())
        .map(|(c, label)| {
            let buckets = c.iter().enumerate().filter(|&(_, &x)| x > 0).map(|(t, _)| t).collect();
            EventStream::new(label.clone(), buckets)
        })
        .collect();
    Ok(Simulation {
        set: ProcessSet::new(grid, streams)?,
        raw_counts,
    })
}

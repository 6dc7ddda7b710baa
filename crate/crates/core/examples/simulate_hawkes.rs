//! Simulates a three-process network and compares empirical rates with the
//! stationary rates implied by the weights.

use hawkes_topics::events::BucketGrid;
use hawkes_topics::hawkes::{simulate_on, spectral_radius, HawkesNetwork, ImpulseBasis};
use ndarray::array;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let weights = array![[0.4, 0.2, 0.0], [0.0, 0.2, 0.4], [0.2, 0.0, 0.2]];
    let basis = ImpulseBasis::default_for(96)?;
    let labels = vec!["a".to_string(), "b".into(), "c".into()];
    let net = HawkesNetwork::with_shared_kernel(labels, vec![0.01; 3], weights.clone(), &basis, &basis.unit(0))?;
    println!("spectral radius {:.3}", spectral_radius(&weights)?);
    let n = 50_000;
    let sim = simulate_on(&net, BucketGrid::new(0, 900, n)?, 7)?;
    for (stream, raw) in sim.set.streams().iter().zip(&sim.raw_counts) {
        println!("{}: {raw} raw events, {} occupied buckets, rate {:.4}", stream.label, stream.len(), *raw as f64 / n as f64);
    }
    Ok(())
}

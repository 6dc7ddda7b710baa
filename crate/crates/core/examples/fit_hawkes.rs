//! Simulates a known network, fits it by Gibbs sampling and prints the
//! posterior mean weights next to the truth.

use hawkes_topics::events::BucketGrid;
use hawkes_topics::hawkes::{fit, simulate_on, GibbsConfig, HawkesNetwork, ImpulseBasis};
use ndarray::array;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = array![[0.4, 0.2, 0.0], [0.0, 0.2, 0.4], [0.2, 0.0, 0.2]];
    let basis = ImpulseBasis::default_for(96)?;
    let labels = vec!["a".to_string(), "b".into(), "c".into()];
    let net = HawkesNetwork::with_shared_kernel(labels, vec![0.01; 3], truth.clone(), &basis, &basis.unit(0))?;
    let set = simulate_on(&net, BucketGrid::new(0, 900, 50_000)?, 11)?.set;
    let post = fit(&set, 96, &basis, &GibbsConfig::default())?;
    println!("{} samples; lambda0 {:.4?}", post.n_samples, post.mean_lambda0);
    for ((a, b), w) in post.mean_weights.indexed_iter() {
        println!(
            "{} -> {}: mean {w:.3}  90% [{:.3}, {:.3}]  true {:.1}",
            post.labels[a], post.labels[b], post.ci90_lower[[a, b]], post.ci90_upper[[a, b]], truth[[a, b]]
        );
    }
    Ok(())
}

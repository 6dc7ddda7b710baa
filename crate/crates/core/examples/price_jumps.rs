//! Bucketizes a tick file, takes log returns and prints the up and down
//! jump events at the 99th percentile.
//!
//! ```sh
//! cargo run --example price_jumps -- fixtures/synthetic/SYN_ticks.csv
//! ```

use hawkes_topics::events::{bucketize_prices, detect_jumps, log_returns, BucketGrid, Direction};
use hawkes_topics::ingest::{read_ticks, ReadMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "fixtures/synthetic/SYN_ticks.csv".into());
    let ticks = read_ticks(&path, ReadMode::Strict)?.records;
    let (first, last) = match (ticks.first(), ticks.last()) {
        (Some(a), Some(b)) => (a.timestamp_ms / 1000, b.timestamp_ms / 1000),
        _ => return Err("no ticks".into()),
    };
    let grid = BucketGrid::covering(first, last, 900)?;
    let returns = log_returns(&bucketize_prices(&ticks, grid)?, 0.0)?;
    for direction in [Direction::Up, Direction::Down] {
        let stream = detect_jumps(format!("{direction:?}"), &returns, 0.99, direction)?;
        println!("{:<5} {} events of {} returns, first buckets {:?}", stream.label, stream.len(), returns.returns.len(), &stream.event_buckets[..stream.len().min(8)]);
    }
    Ok(())
}

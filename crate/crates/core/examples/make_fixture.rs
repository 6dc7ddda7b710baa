//! Writes a synthetic end-to-end fixture: two submission dumps, a tick
//! file, the generating network and a pipeline configuration.
//!
//! ```sh
//! cargo run --example make_fixture -- fixtures/synthetic
//! ```

use std::path::PathBuf;

use hawkes_topics::synth::{generate_fixture, write_fixture, FixtureSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map_or_else(|| PathBuf::from("fixtures/synthetic"), PathBuf::from);
    let spec = FixtureSpec::default();
    let fixture = generate_fixture(&spec)?;
    let files = write_fixture(&fixture, &dir)?;
    for (s, docs) in spec.sources.iter().zip(&fixture.submissions) {
        println!("{}: {} submissions", s.name, docs.len());
    }
    println!("{}: {} ticks", spec.market, fixture.ticks.len());
    for stream in fixture.truth_events.streams() {
        println!("true stream {:<8} {:>4} events", stream.label, stream.len());
    }
    println!("config: {}", files.config.display());
    Ok(())
}

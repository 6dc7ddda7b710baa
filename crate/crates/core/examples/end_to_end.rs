//! Runs topics, events and fit on a configuration and prints the manifest.
//!
//! ```sh
//! cargo run --release --example end_to_end -- fixtures/synthetic/pipeline.toml /tmp/out
//! ```

use std::path::PathBuf;

use hawkes_topics::pipeline::{cmd_run, PipelineConfig, RunOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let config_path = args.next().map_or_else(|| PathBuf::from("fixtures/synthetic/pipeline.toml"), PathBuf::from);
    let mut config = PipelineConfig::load(&config_path)?;
    if let Some(out) = args.next() {
        config.out_dir = out.into();
    }
    let manifest = cmd_run(&RunOptions::new(config))?;
    for stage in &manifest.stages {
        println!("{:<7} {:>6.2}s {:?}", stage.name, stage.seconds, stage.counts);
        for w in &stage.warnings {
            println!("        warning: {w}");
        }
    }
    println!("{}", serde_json::to_string_pretty(&manifest.files)?);
    Ok(())
}

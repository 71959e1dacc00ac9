//! Generates a small synthetic dataset, two noisy detectors and the three
//! random baselines, then runs the full evaluation.
//!
//!     cargo run --example evaluate_synthetic -- [out-dir]

use std::path::PathBuf;

use detbench::dataset::{SyntheticDataset, SyntheticDetector};
use detbench::runner::{self, BaselineConfig, RunConfig};

fn main() -> detbench::error::Result<()> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("detbench-synthetic"));
    let data = out.join("data");
    let detections = out.join("detections");

    let manifest = SyntheticDataset {
        sequences: 6,
        images: 4,
        ..Default::default()
    }
    .write(&data)?;

    let sharp = SyntheticDetector {
        seed: 1,
        ..Default::default()
    };
    let blurry = SyntheticDetector {
        position_noise: 3.0,
        scale_noise: 0.3,
        dropout: 0.4,
        seed: 2,
        ..Default::default()
    };
    sharp.write(&manifest, &data, &detections, "SHARP-A")?;
    blurry.write(&manifest, &data, &detections, "BLURRY-S")?;

    let baselines = BaselineConfig::new(data.join("manifest.json"), &detections, 42);
    runner::generate_baselines(&baselines)?;

    let mut config = RunConfig::new(data.join("manifest.json"), &detections, out.join("results"));
    config.workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let outcome = runner::evaluate(&config, None)?;

    println!(
        "{} records ({} degenerate)",
        outcome.bundle.records.len(),
        outcome.degenerate
    );
    for split in &outcome.bundle.splits {
        println!("\n[{}] {} tasks", split.name, split.tasks);
        for s in &split.summaries {
            let stb = s.stability.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
            println!(
                "  {:<10} rep {:6.2}%  stb {stb:>5}  rank {}",
                s.detector,
                100.0 * s.rep,
                s.rank
            );
        }
    }
    println!();
    print!(
        "{}",
        std::fs::read_to_string(out.join("results/table.csv")).unwrap_or_default()
    );
    println!("\nartifacts in {}", out.join("results").display());
    Ok(())
}

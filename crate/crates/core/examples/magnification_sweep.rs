//! Repeatability as every region is magnified by a common factor. With the
//! excircle test run after normalization the curve is flat; the legacy
//! order makes it depend on the factor.
//!
//!     cargo run --example magnification_sweep -- [out-dir]

use std::path::PathBuf;

use detbench::dataset::{SyntheticDataset, SyntheticDetector};
use detbench::geometry::QuickReject;
use detbench::runner::{self, RunConfig};

fn main() -> detbench::error::Result<()> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("detbench-sweep"));
    let data = out.join("data");
    let detections = out.join("detections");
    let manifest = SyntheticDataset {
        sequences: 4,
        images: 3,
        ..Default::default()
    }
    .write(&data)?;
    SyntheticDetector {
        regions: 400,
        seed: 3,
        ..Default::default()
    }
    .write(&manifest, &data, &detections, "SYN-A")?;

    let gammas = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
    for (label, mode) in [("fixed", QuickReject::Normalized), ("legacy", QuickReject::Legacy)] {
        let mut config = RunConfig::new(data.join("manifest.json"), &detections, out.join(label));
        config.params.quick_reject = mode;
        config.workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        let report = runner::sweep(&config, 300, &gammas)?;
        for s in &report.series {
            let reps: Vec<String> = s.points.iter().map(|(g, r)| format!("{g}:{:.3}", r)).collect();
            println!(
                "{label:<6} {}  spread {:.4}  [{}]",
                s.detector,
                s.spread(),
                reps.join(" ")
            );
        }
    }
    println!("figures in {}/{{fixed,legacy}}/sweep.svg", out.display());
    Ok(())
}

//! Samples the three random baselines for one image and summarizes them.
//!
//!     cargo run --example random_baselines -- [seed]

use detbench::baselines::{derive_seed, sample, BaselineKind, RandParams};
use detbench::dataset::format_detections;

fn main() -> detbench::error::Result<()> {
    let master: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let (w, h) = (800.0, 600.0);
    for kind in BaselineKind::ALL {
        let params = RandParams::default().with_seed(derive_seed(master, &["example", kind.name()]));
        let regions = sample(kind, w, h, 1000, &params)?;
        let mut radii: Vec<f64> = regions.iter().map(|r| r.excircle_radius()).collect();
        radii.sort_by(f64::total_cmp);
        let mean_area = regions.iter().map(|r| r.area()).sum::<f64>() / regions.len() as f64;
        println!(
            "{}: {} regions, excircle radius min {:.2} median {:.2} max {:.2}, mean area {:.1}",
            kind.name(),
            regions.len(),
            radii[0],
            radii[radii.len() / 2],
            radii[radii.len() - 1],
            mean_area
        );
        let text = format_detections(&regions[..3]);
        for line in text.lines() {
            println!("    {line}");
        }
    }
    Ok(())
}

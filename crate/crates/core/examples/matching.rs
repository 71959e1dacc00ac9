//! Candidate correspondences and greedy one-to-one matching between two
//! detection sets related by a translation.
//!
//!     cargo run --example matching

use detbench::geometry::{Homography, Region};
use detbench::matching::{build_candidates, greedy_match, OverlapParams};

fn main() -> detbench::error::Result<()> {
    let refs = vec![
        Region::circle(40.0, 40.0, 8.0, 3.0)?,
        Region::circle(60.0, 40.0, 8.0, 2.0)?,
        Region::circle(150.0, 90.0, 12.0, 1.0)?,
    ];
    // Target image shifted by (+5, -3); detections are slightly off.
    let h = Homography::translation(5.0, -3.0);
    let targets = vec![
        Region::circle(45.5, 37.0, 8.0, 3.0)?,
        Region::circle(52.0, 37.0, 9.0, 2.0)?,
        Region::circle(64.0, 37.5, 8.5, 1.5)?,
        Region::circle(300.0, 10.0, 6.0, 1.0)?,
    ];

    let params = OverlapParams::default();
    let candidates = build_candidates(&refs, &targets, &h, &params);
    println!(
        "{} candidates at overlap >= {:.2}:",
        candidates.len(),
        params.threshold()
    );
    for c in &candidates {
        println!(
            "  ref {} - target {}  overlap {:.3}",
            c.ref_index, c.target_index, c.overlap
        );
    }

    let matching = greedy_match(&candidates);
    println!(
        "\n{} matches (total overlap {:.3}):",
        matching.len(),
        matching.total_overlap()
    );
    for p in &matching.pairs {
        println!("  ref {} - target {}", p.ref_index, p.target_index);
    }
    Ok(())
}

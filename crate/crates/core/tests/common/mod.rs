//! Independent reference implementations shared by the integration and
//! acceptance tests. Nothing here calls into the code it checks.

#![allow(dead_code)]

use std::path::Path;

use detbench::geometry::Region;
use detbench::matching::CandidatePair;
use detbench::protocol::RepeatabilityRecord;
use nalgebra::Matrix2;
use rand::Rng;

/// Quadratic form test written out by hand.
fn inside(center: (f64, f64), m: &Matrix2<f64>, x: f64, y: f64) -> bool {
    let (dx, dy) = (x - center.0, y - center.1);
    m[(0, 0)] * dx * dx + 2.0 * m[(0, 1)] * dx * dy + m[(1, 1)] * dy * dy <= 1.0
}

/// Axis-aligned half extents of `{d : dᵀ M d ≤ 1}`: `sqrt(diag(M⁻¹))`.
fn extents(m: &Matrix2<f64>) -> (f64, f64) {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(0, 1)];
    ((m[(1, 1)] / det).sqrt(), (m[(0, 0)] / det).sqrt())
}

/// Monte-Carlo intersection over union from uniform samples of the joint
/// bounding box.
pub fn monte_carlo_iou<R: Rng>(a: &Region, b: &Region, samples: usize, rng: &mut R) -> f64 {
    let ca = (a.center().x, a.center().y);
    let cb = (b.center().x, b.center().y);
    let (ea, eb) = (extents(a.shape()), extents(b.shape()));
    let x0 = (ca.0 - ea.0).min(cb.0 - eb.0);
    let x1 = (ca.0 + ea.0).max(cb.0 + eb.0);
    let y0 = (ca.1 - ea.1).min(cb.1 - eb.1);
    let y1 = (ca.1 + ea.1).max(cb.1 + eb.1);
    let (mut both, mut either) = (0u64, 0u64);
    for _ in 0..samples {
        let x = rng.random_range(x0..x1);
        let y = rng.random_range(y0..y1);
        let ia = inside(ca, a.shape(), x, y);
        let ib = inside(cb, b.shape(), x, y);
        both += (ia && ib) as u64;
        either += (ia || ib) as u64;
    }
    both as f64 / either as f64
}

/// Maximum total weight of a one-to-one matching, by dynamic programming
/// over subsets of the (at most 16) target indices.
pub fn exhaustive_max_weight(rows: usize, cols: usize, candidates: &[CandidatePair]) -> f64 {
    assert!(cols <= 16);
    let mut weight = vec![vec![None; cols]; rows];
    for c in candidates {
        weight[c.ref_index][c.target_index] = Some(c.overlap);
    }
    let full = 1usize << cols;
    let mut best = vec![f64::NEG_INFINITY; full];
    best[0] = 0.0;
    for row in &weight {
        let mut next = best.clone();
        for (mask, &base) in best.iter().enumerate() {
            if base == f64::NEG_INFINITY {
                continue;
            }
            for (j, w) in row.iter().enumerate() {
                if let Some(w) = w {
                    if mask & (1 << j) == 0 {
                        let m = mask | (1 << j);
                        next[m] = next[m].max(base + w);
                    }
                }
            }
        }
        best = next;
    }
    best.into_iter().fold(0.0, f64::max)
}

/// Linear-interpolation percentile computed from a freshly sorted copy.
pub fn sorted_percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = p * (v.len() as f64 - 1.0);
    let below = pos.floor();
    let w = pos - below;
    let i = below as usize;
    if i + 1 >= v.len() {
        return v[v.len() - 1];
    }
    (1.0 - w) * v[i] + w * v[i + 1]
}

pub fn record(detector: &str, task: &str, n: usize, rep: f64) -> RepeatabilityRecord {
    RepeatabilityRecord {
        detector: detector.to_string(),
        task: task.to_string(),
        n,
        rep,
        correspondences: 0,
        ref_filtered: 1,
        target_filtered: 1,
        degenerate: false,
        warp_drops: 0,
    }
}

/// One sequence with `images` images of `width × height` whose
/// homographies are all the identity. Writes `manifest.json` under `root`.
pub fn identity_dataset(root: &Path, sequence: &str, images: usize, width: u32, height: u32) {
    let seq_dir = root.join(sequence);
    std::fs::create_dir_all(&seq_dir).unwrap();
    let mut hs = Vec::new();
    for k in 2..=images {
        std::fs::write(seq_dir.join(format!("H_1_{k}")), "1 0 0\n0 1 0\n0 0 1\n").unwrap();
        hs.push(format!(r#"{{"file": "H_1_{k}", "from": 1, "to": {k}}}"#));
    }
    let imgs: Vec<String> = (1..=images)
        .map(|k| format!(r#"{{"file": "{k}.ppm", "width": {width}, "height": {height}}}"#))
        .collect();
    let manifest = format!(
        r#"{{"schema": "detbench-manifest/1", "name": "toy", "sequences": [
  {{"id": "{sequence}", "nuisance": "viewpoint", "images": [{}], "homographies": [{}]}}]}}"#,
        imgs.join(", "),
        hs.join(", ")
    );
    std::fs::write(root.join("manifest.json"), manifest).unwrap();
}

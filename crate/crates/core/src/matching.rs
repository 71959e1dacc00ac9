//! Thresholded candidate graph between two detection sets and its greedy
//! one-to-one matching.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::geometry::{normalized_overlap, Homography, QuickReject, Region, DEFAULT_NORM_AREA};

/// Pairs whose analytic area ratio falls this far below the threshold are
/// skipped without rasterizing; IoU never exceeds min(area)/max(area).
const AREA_RATIO_MARGIN: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CandidatePair {
    pub ref_index: usize,
    pub target_index: usize,
    pub overlap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverlapParams {
    /// Maximum tolerated overlap error; a pair needs overlap ≥ 1 - eps.
    pub overlap_eps: f64,
    pub norm_area: f64,
    pub quick_reject: QuickReject,
}

impl Default for OverlapParams {
    fn default() -> Self {
        Self {
            overlap_eps: 0.4,
            norm_area: DEFAULT_NORM_AREA,
            quick_reject: QuickReject::Normalized,
        }
    }
}

impl OverlapParams {
    pub fn threshold(&self) -> f64 {
        1.0 - self.overlap_eps
    }
}

/// All `(ref, target)` pairs whose normalized overlap reaches `1 - eps`.
///
/// `h` maps reference pixels to target pixels; targets are warped once into
/// the reference frame with its inverse. Targets whose warp is degenerate
/// produce no candidates. Output is ordered by `(ref_index, target_index)`.
pub fn build_candidates(
    refs: &[Region],
    targets: &[Region],
    h: &Homography,
    params: &OverlapParams,
) -> Vec<CandidatePair> {
    let Ok(back) = h.inverse() else {
        return Vec::new();
    };
    let warped: Vec<Option<Region>> = targets.iter().map(|t| t.warp(&back).ok()).collect();
    candidates_in_ref_frame(refs, &warped, params)
}

/// Same as [`build_candidates`] for targets already expressed in the
/// reference frame (`None` marks a target that could not be warped).
pub fn candidates_in_ref_frame(
    refs: &[Region],
    warped: &[Option<Region>],
    params: &OverlapParams,
) -> Vec<CandidatePair> {
    let threshold = params.threshold();
    let target_areas: Vec<f64> = warped.iter().map(|t| t.map_or(0.0, |t| t.area())).collect();
    refs.par_iter()
        .enumerate()
        .flat_map_iter(|(i, r)| {
            let ref_area = r.area();
            let target_areas = &target_areas;
            warped.iter().enumerate().filter_map(move |(j, t)| {
                let t = t.as_ref()?;
                let ta = target_areas[j];
                if ref_area.min(ta) / ref_area.max(ta) < threshold - AREA_RATIO_MARGIN {
                    return None;
                }
                let overlap = normalized_overlap(r, t, params.norm_area, params.quick_reject).ok()?;
                (overlap >= threshold).then_some(CandidatePair {
                    ref_index: i,
                    target_index: j,
                    overlap,
                })
            })
        })
        .collect()
}

/// A one-to-one set of correspondences sorted by overlap, highest first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Matching {
    pub pairs: Vec<CandidatePair>,
}

impl Matching {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn total_overlap(&self) -> f64 {
        self.pairs.iter().map(|p| p.overlap).sum()
    }
}

fn candidate_order(a: &CandidatePair, b: &CandidatePair) -> Ordering {
    b.overlap
        .total_cmp(&a.overlap)
        .then(a.ref_index.cmp(&b.ref_index))
        .then(a.target_index.cmp(&b.target_index))
}

/// Greedy approximation of the maximum-weight bipartite matching.
///
/// Candidates are visited by decreasing overlap, ties by `(ref, target)`;
/// a candidate is kept when neither endpoint is taken yet.
pub fn greedy_match(candidates: &[CandidatePair]) -> Matching {
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable_by(candidate_order);

    let ref_len = sorted.iter().map(|c| c.ref_index + 1).max().unwrap_or(0);
    let target_len = sorted.iter().map(|c| c.target_index + 1).max().unwrap_or(0);
    let mut ref_taken = vec![false; ref_len];
    let mut target_taken = vec![false; target_len];

    let pairs = sorted
        .into_iter()
        .filter(|c| {
            if ref_taken[c.ref_index] || target_taken[c.target_index] {
                return false;
            }
            ref_taken[c.ref_index] = true;
            target_taken[c.target_index] = true;
            true
        })
        .collect();
    Matching { pairs }
}

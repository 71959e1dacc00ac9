//! Repeatability of one detector on one image pair.
//!
//! Pipeline: keep the `n` strongest detections per image, optionally magnify
//! them, drop regions whose centers leave the other image, warp the target
//! regions into the reference frame, threshold their normalized overlaps and
//! match greedily. Repeatability is the match count over the smaller of the
//! two filtered sets.

use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Homography, QuickReject, Region, DEFAULT_NORM_AREA};
use crate::matching::{candidates_in_ref_frame, greedy_match, OverlapParams};

/// Image identity plus its pixel domain `[0, width) × [0, height)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageInfo {
    pub id: String,
    pub width: u32,
    pub height: u32,
}

impl ImageInfo {
    pub fn new(id: impl Into<String>, width: u32, height: u32) -> Self {
        Self {
            id: id.into(),
            width,
            height,
        }
    }

    pub fn contains(&self, p: Point2<f64>) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x < self.width as f64 && p.y < self.height as f64
    }
}

/// One evaluation unit: reference image, target image and the homography
/// mapping reference pixels to target pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct PairTask {
    pub id: String,
    pub sequence: String,
    pub nuisance: String,
    pub reference: ImageInfo,
    pub target: ImageInfo,
    pub homography: Homography,
}

impl PairTask {
    pub fn new(id: impl Into<String>, reference: ImageInfo, target: ImageInfo, homography: Homography) -> Result<Self> {
        for img in [&reference, &target] {
            if img.width == 0 || img.height == 0 {
                return Err(Error::InvalidParameter(format!(
                    "image `{}` has an empty domain",
                    img.id
                )));
            }
        }
        homography.inverse()?;
        Ok(Self {
            id: id.into(),
            sequence: String::new(),
            nuisance: String::new(),
            reference,
            target,
            homography,
        })
    }

    pub fn with_sequence(mut self, sequence: impl Into<String>, nuisance: impl Into<String>) -> Self {
        self.sequence = sequence.into();
        self.nuisance = nuisance.into();
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalParams {
    pub overlap_eps: f64,
    pub norm_area: f64,
    pub top_n: Vec<usize>,
    pub point_radius: f64,
    pub magnification: f64,
    pub quick_reject: QuickReject,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            overlap_eps: 0.4,
            norm_area: DEFAULT_NORM_AREA,
            top_n: vec![100, 200, 500, 1000],
            point_radius: 10.0,
            magnification: 1.0,
            quick_reject: QuickReject::Normalized,
        }
    }
}

impl EvalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.overlap_eps > 0.0 && self.overlap_eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "overlap error {} must lie in (0, 1)",
                self.overlap_eps
            )));
        }
        if !(self.norm_area > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "normalization area {} must be positive",
                self.norm_area
            )));
        }
        if self.top_n.is_empty() || self.top_n[0] == 0 || self.top_n.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "top-n list {:?} must be non-empty, positive and strictly increasing",
                self.top_n
            )));
        }
        if !(self.point_radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "point radius {} must be positive",
                self.point_radius
            )));
        }
        if !(self.magnification > 0.0) || !self.magnification.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "magnification {} must be positive",
                self.magnification
            )));
        }
        Ok(())
    }

    pub fn overlap(&self) -> OverlapParams {
        OverlapParams {
            overlap_eps: self.overlap_eps,
            norm_area: self.norm_area,
            quick_reject: self.quick_reject,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatabilityRecord {
    pub detector: String,
    pub task: String,
    pub n: usize,
    pub rep: f64,
    pub correspondences: usize,
    pub ref_filtered: usize,
    pub target_filtered: usize,
    /// Set when either filtered set is empty; `rep` is then 0.
    pub degenerate: bool,
    /// Regions dropped because their center could not be mapped.
    #[serde(default)]
    pub warp_drops: usize,
}

/// The `n` highest-scoring regions; equal scores keep their input order.
pub fn select_top_n(detections: &[Region], n: usize) -> Vec<Region> {
    let mut sorted = detections.to_vec();
    sorted.sort_by(|a, b| b.score().total_cmp(&a.score()));
    sorted.truncate(n);
    sorted
}

/// Regions that survive the common-part test.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CommonPart {
    pub refs: Vec<Region>,
    pub targets: Vec<Region>,
    /// Target regions mapped into the reference frame, aligned with `targets`.
    pub warped_targets: Vec<Region>,
    pub warp_drops: usize,
}

/// Keeps reference regions whose centers map inside the target image and
/// target regions whose centers map back inside the reference image.
pub fn common_part_filter(refs: &[Region], targets: &[Region], task: &PairTask) -> Result<CommonPart> {
    let forward = &task.homography;
    let back = forward.inverse()?;
    let mut out = CommonPart::default();
    for r in refs {
        match forward.map_point(r.center()) {
            Ok(p) if task.target.contains(p) => out.refs.push(*r),
            Ok(_) => {}
            Err(_) => out.warp_drops += 1,
        }
    }
    for t in targets {
        match back.map_point(t.center()) {
            Ok(p) if task.reference.contains(p) => match t.warp(&back) {
                Ok(w) => {
                    out.targets.push(*t);
                    out.warped_targets.push(w);
                }
                Err(_) => out.warp_drops += 1,
            },
            Ok(_) => {}
            Err(_) => out.warp_drops += 1,
        }
    }
    Ok(out)
}

/// Repeatability of `detector` on `task` using the top `n` detections.
pub fn pair_repeatability(
    detector: &str,
    refs: &[Region],
    targets: &[Region],
    task: &PairTask,
    params: &EvalParams,
    n: usize,
) -> Result<RepeatabilityRecord> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut refs = select_top_n(refs, n);
    let mut targets = select_top_n(targets, n);
    if params.magnification != 1.0 {
        refs = refs
            .iter()
            .map(|r| r.magnify(params.magnification))
            .collect::<Result<_>>()?;
        targets = targets
            .iter()
            .map(|r| r.magnify(params.magnification))
            .collect::<Result<_>>()?;
    }
    let common = common_part_filter(&refs, &targets, task)?;
    let warped: Vec<Option<Region>> = common.warped_targets.iter().copied().map(Some).collect();
    let candidates = candidates_in_ref_frame(&common.refs, &warped, &params.overlap());
    let matching = greedy_match(&candidates);

    let ref_filtered = common.refs.len();
    let target_filtered = common.targets.len();
    let denom = ref_filtered.min(target_filtered);
    let (rep, degenerate) = if denom == 0 {
        (0.0, true)
    } else {
        (matching.len() as f64 / denom as f64, false)
    };
    Ok(RepeatabilityRecord {
        detector: detector.to_string(),
        task: task.id.clone(),
        n,
        rep,
        correspondences: matching.len(),
        ref_filtered,
        target_filtered,
        degenerate,
        warp_drops: common.warp_drops,
    })
}

/// Repeatability for each magnification factor in `gammas`.
pub fn magnification_sweep(
    refs: &[Region],
    targets: &[Region],
    task: &PairTask,
    params: &EvalParams,
    n: usize,
    gammas: &[f64],
) -> Result<Vec<(f64, f64)>> {
    gammas
        .iter()
        .map(|&gamma| {
            if !(gamma > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "magnification factor {gamma} must be positive"
                )));
            }
            let params = EvalParams {
                magnification: gamma,
                ..params.clone()
            };
            pair_repeatability("", refs, targets, task, &params, n).map(|r| (gamma, r.rep))
        })
        .collect()
}

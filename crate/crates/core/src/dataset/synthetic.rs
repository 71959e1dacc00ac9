//! Small generated datasets for examples, tests and smoke runs.
//!
//! A synthetic dataset has a manifest and homography files but no pixels:
//! evaluation never reads image data. A synthetic detector draws elliptical
//! "scene" regions in each reference image and re-detects them in the
//! other images through the ground-truth homography, with positional and
//! shape noise, dropouts and clutter.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{Matrix2, Matrix3, Point2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::baselines::{derive_seed, ellipse_from_frame, rand_a_frame};
use crate::dataset::files::{format_homography, write_detections};
use crate::dataset::manifest::{DatasetManifest, HomographyDirection, HomographyEntry, ImageEntry, Sequence};
use crate::error::{Error, Result};
use crate::geometry::{Homography, Region};
use crate::report::write_file;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDataset {
    pub name: String,
    pub sequences: usize,
    /// Images per sequence, including the reference.
    pub images: usize,
    pub width: u32,
    pub height: u32,
    pub seed: u64,
}

impl Default for SyntheticDataset {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            sequences: 4,
            images: 4,
            width: 640,
            height: 480,
            seed: 0,
        }
    }
}

/// Sequences alternate between `illumination` (near-identity maps) and
/// `viewpoint` (rotation, scale and mild perspective about the center).
fn sequence_homography(rng: &mut ChaCha20Rng, viewpoint: bool, step: usize, w: f64, h: f64) -> Result<Homography> {
    let (cx, cy) = (0.5 * w, 0.5 * h);
    let center = Matrix3::new(1.0, 0.0, -cx, 0.0, 1.0, -cy, 0.0, 0.0, 1.0);
    let back = Matrix3::new(1.0, 0.0, cx, 0.0, 1.0, cy, 0.0, 0.0, 1.0);
    let k = step as f64;
    let core = if viewpoint {
        let angle = rng.random_range(-0.08..0.08) * k;
        let scale = 1.0 + rng.random_range(-0.06..0.06) * k;
        let (s, c) = angle.sin_cos();
        let p = 1.5e-4 * k;
        Matrix3::new(
            scale * c,
            -scale * s,
            rng.random_range(-6.0..6.0),
            scale * s,
            scale * c,
            rng.random_range(-6.0..6.0),
            rng.random_range(-p..p),
            rng.random_range(-p..p),
            1.0,
        )
    } else {
        Matrix3::new(
            1.0,
            0.0,
            rng.random_range(-2.0..2.0),
            0.0,
            1.0,
            rng.random_range(-2.0..2.0),
            0.0,
            0.0,
            1.0,
        )
    };
    Homography::new(back * core * center)
}

impl SyntheticDataset {
    /// Writes `manifest.json` and the homography files into `root`.
    pub fn write(&self, root: &Path) -> Result<DatasetManifest> {
        if self.images < 2 || self.sequences == 0 {
            return Err(Error::InvalidParameter(
                "a synthetic dataset needs at least one sequence of two images".into(),
            ));
        }
        let (w, h) = (self.width as f64, self.height as f64);
        let mut sequences = Vec::with_capacity(self.sequences);
        for s in 0..self.sequences {
            let viewpoint = s % 2 == 1;
            let id = format!("{}_{s:03}", if viewpoint { "v" } else { "i" });
            let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(self.seed, &["synthetic-sequence", &id]));
            let mut homographies = Vec::with_capacity(self.images - 1);
            for k in 2..=self.images {
                let hom = sequence_homography(&mut rng, viewpoint, k - 1, w, h)?;
                let file = format!("H_1_{k}");
                write_file(&root.join(&id).join(&file), &format_homography(&hom))?;
                homographies.push(HomographyEntry {
                    file,
                    from: 1,
                    to: k,
                    direction: HomographyDirection::FromToTo,
                    download: None,
                });
            }
            sequences.push(Sequence {
                id,
                nuisance: if viewpoint { "viewpoint" } else { "illumination" }.into(),
                images: (1..=self.images)
                    .map(|k| ImageEntry {
                        file: format!("{k}.ppm"),
                        width: self.width,
                        height: self.height,
                        download: None,
                    })
                    .collect(),
                homographies,
            });
        }
        let manifest = DatasetManifest::new(&self.name, sequences);
        manifest.validate()?;
        write_file(&root.join("manifest.json"), &manifest.to_json()?)?;
        Ok(manifest)
    }
}

/// Behaviour of a synthetic detector.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDetector {
    /// Scene regions drawn per sequence.
    pub regions: usize,
    /// Standard deviation of the center jitter, in pixels.
    pub position_noise: f64,
    /// Standard deviation of the log2 scale jitter.
    pub scale_noise: f64,
    /// Probability that a scene region is missed in a non-reference image.
    pub dropout: f64,
    /// Spurious regions added to every image, as a fraction of `regions`.
    pub clutter: f64,
    /// Standard deviation of the score jitter (scores start in `[0, 1)`).
    pub score_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticDetector {
    fn default() -> Self {
        Self {
            regions: 1200,
            position_noise: 1.0,
            scale_noise: 0.1,
            dropout: 0.2,
            clutter: 0.2,
            score_noise: 0.1,
            seed: 0,
        }
    }
}

fn random_ellipse(rng: &mut ChaCha20Rng, w: f64, h: f64, score: f64) -> Result<Region> {
    let s = (rng.random_range(1.0f64..4.5)).exp2();
    let frame = rand_a_frame(s, rng.random_range(-PI..PI), rng.random_range(0.0..1.5));
    let c = Point2::new(rng.random_range(0.0..w), rng.random_range(0.0..h));
    ellipse_from_frame(c, &frame, score)
}

fn jitter(
    region: &Region,
    rng: &mut ChaCha20Rng,
    pos: &Normal<f64>,
    scale: &Normal<f64>,
    score: f64,
) -> Result<Region> {
    let c = region.center();
    let f = scale.sample(rng).exp2();
    let shape: Matrix2<f64> = region.shape() / (f * f);
    Region::new(Point2::new(c.x + pos.sample(rng), c.y + pos.sample(rng)), shape, score)
}

impl SyntheticDetector {
    /// Writes `<out>/<name>/<sequence>/<index>.det` for every image of
    /// `manifest`, reading homographies from `root`. Returns the file count.
    pub fn write(&self, manifest: &DatasetManifest, root: &Path, out: &Path, name: &str) -> Result<usize> {
        let pos = Normal::new(0.0, self.position_noise)
            .map_err(|e| Error::InvalidParameter(format!("position noise: {e}")))?;
        let scale =
            Normal::new(0.0, self.scale_noise).map_err(|e| Error::InvalidParameter(format!("scale noise: {e}")))?;
        let score =
            Normal::new(0.0, self.score_noise).map_err(|e| Error::InvalidParameter(format!("score noise: {e}")))?;
        let tasks = manifest.pair_tasks(root)?;
        let mut files = 0;
        for seq in &manifest.sequences {
            let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(self.seed, &["synthetic-detector", name, &seq.id]));
            let reference = seq.image_info(1);
            let (w, h) = (reference.width as f64, reference.height as f64);
            let scene: Vec<Region> = (0..self.regions)
                .map(|_| {
                    let quality = rng.random::<f64>();
                    random_ellipse(&mut rng, w, h, quality)
                })
                .collect::<Result<_>>()?;
            for k in 1..=seq.images.len() {
                let info = seq.image_info(k);
                let hom = if k == 1 {
                    Homography::identity()
                } else {
                    tasks
                        .iter()
                        .find(|t| t.sequence == seq.id && t.target.id == info.id)
                        .map(|t| t.homography)
                        .expect("every non-reference image has a task")
                };
                let mut regions = Vec::with_capacity(self.regions);
                for r in &scene {
                    if k > 1 && rng.random::<f64>() < self.dropout {
                        continue;
                    }
                    let Ok(warped) = r.warp(&hom) else { continue };
                    if !info.contains(warped.center()) {
                        continue;
                    }
                    let s = r.score() + score.sample(&mut rng);
                    regions.push(jitter(&warped, &mut rng, &pos, &scale, s)?);
                }
                let extra = (self.clutter * self.regions as f64).round() as usize;
                for _ in 0..extra {
                    let s = rng.random::<f64>() + score.sample(&mut rng);
                    regions.push(random_ellipse(&mut rng, info.width as f64, info.height as f64, s)?);
                }
                write_detections(crate::runner::detection_path(out, name, &seq.id, k), &regions)?;
                files += 1;
            }
        }
        Ok(files)
    }
}

//! Random baseline detectors: points (RAND-T), circles (RAND-S) and
//! ellipses (RAND-A).
//!
//! All sampling goes through ChaCha20, whose output stream is fixed across
//! platforms and crate versions. Scores are descending ranks `n, n-1, ..., 1`
//! so that truncating to the top `n' < n` yields a prefix of the same sample.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Point2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::Region;

/// Consecutive rejected draws tolerated before giving up.
pub const MAX_REJECTIONS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BaselineKind {
    #[serde(rename = "RAND-T")]
    Points,
    #[serde(rename = "RAND-S")]
    Circles,
    #[serde(rename = "RAND-A")]
    Ellipses,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [BaselineKind::Points, BaselineKind::Circles, BaselineKind::Ellipses];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Points => "RAND-T",
            BaselineKind::Circles => "RAND-S",
            BaselineKind::Ellipses => "RAND-A",
        }
    }

    /// Parses `rand-t`, `RAND-S`, ... (case-insensitive).
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RAND-T" => Ok(BaselineKind::Points),
            "RAND-S" => Ok(BaselineKind::Circles),
            "RAND-A" => Ok(BaselineKind::Ellipses),
            _ => Err(Error::InvalidParameter(format!("unknown baseline type `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandParams {
    pub s_min: f64,
    pub s_max: f64,
    pub point_radius: f64,
    pub seed: u64,
}

impl Default for RandParams {
    fn default() -> Self {
        Self {
            s_min: 0.1,
            s_max: 50.0,
            point_radius: 10.0,
            seed: 0,
        }
    }
}

impl RandParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.s_min > 0.0 && self.s_min < self.s_max) {
            return Err(Error::InvalidParameter(format!(
                "scale range must satisfy 0 < s_min < s_max (got {} and {})",
                self.s_min, self.s_max
            )));
        }
        if !(self.point_radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "point radius {} must be positive",
                self.point_radius
            )));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    fn rng(&self) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(self.seed)
    }
}

/// Stable sub-seed: first 8 bytes (little endian) of
/// `SHA-256("detbench-seed" ‖ master ‖ len-prefixed parts…)`.
pub fn derive_seed(master: u64, parts: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"detbench-seed");
    hasher.update(master.to_le_bytes());
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Draws `min(|g|, s_max)` with `g ~ Normal(s_min, (s_max - s_min) / 2)`.
pub fn sample_scale<R: Rng + ?Sized>(params: &RandParams, rng: &mut R) -> f64 {
    let normal = Normal::new(params.s_min, 0.5 * (params.s_max - params.s_min))
        .expect("standard deviation is positive for validated params");
    normal.sample(rng).abs().min(params.s_max)
}

fn check_domain(width: f64, height: f64, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if !(width > 0.0 && height > 0.0) {
        return Err(Error::InvalidParameter(format!("empty image domain {width}x{height}")));
    }
    Ok(())
}

fn rank_score(n: usize, i: usize) -> f64 {
    (n - i) as f64
}

fn uniform_center<R: Rng + ?Sized>(rng: &mut R, width: f64, height: f64, margin: f64) -> Point2<f64> {
    let x = margin + rng.random::<f64>() * (width - 2.0 * margin);
    let y = margin + rng.random::<f64>() * (height - 2.0 * margin);
    Point2::new(x, y)
}

/// RAND-T: `n` circles of the point radius, centers uniform on the image
/// shrunk by that radius.
pub fn sample_rand_t(width: f64, height: f64, n: usize, params: &RandParams) -> Result<Vec<Region>> {
    params.validate()?;
    check_domain(width, height, n)?;
    let margin = params.point_radius;
    if width <= 2.0 * margin || height <= 2.0 * margin {
        return Err(Error::InvalidParameter(format!(
            "image {width}x{height} too small for point radius {margin}"
        )));
    }
    let mut rng = params.rng();
    (0..n)
        .map(|i| {
            let c = uniform_center(&mut rng, width, height, margin);
            Region::circle(c.x, c.y, margin, rank_score(n, i))
        })
        .collect()
}

/// RAND-S: circles whose radius follows [`sample_scale`].
///
/// Draws with a radius of at least half the shorter image side are
/// rejected and redrawn.
pub fn sample_rand_s(width: f64, height: f64, n: usize, params: &RandParams) -> Result<Vec<Region>> {
    params.validate()?;
    check_domain(width, height, n)?;
    let limit = 0.5 * width.min(height);
    let mut rng = params.rng();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut rejected = 0;
        let s = loop {
            let s = sample_scale(params, &mut rng);
            if s > 0.0 && s < limit {
                break s;
            }
            rejected += 1;
            if rejected > MAX_REJECTIONS {
                return Err(Error::TooManyRejections(rejected));
            }
        };
        let c = uniform_center(&mut rng, width, height, s);
        out.push(Region::circle(c.x, c.y, s, rank_score(n, i))?);
    }
    Ok(out)
}

/// The affine frame `R(θ) · diag(s·2^(-a/2), s·2^(a/2))` of a RAND-A feature.
pub fn rand_a_frame(s: f64, theta: f64, a: f64) -> Matrix2<f64> {
    let (sin, cos) = theta.sin_cos();
    let rot = Matrix2::new(cos, -sin, sin, cos);
    let half = (0.5 * a).exp2();
    rot * Matrix2::new(s / half, 0.0, 0.0, s * half)
}

/// Ellipse that is the image of the unit disk under `frame`: `M = (A Aᵀ)⁻¹`.
pub fn ellipse_from_frame(center: Point2<f64>, frame: &Matrix2<f64>, score: f64) -> Result<Region> {
    let cov = frame * frame.transpose();
    let shape = cov
        .try_inverse()
        .ok_or_else(|| Error::InvalidRegion("singular affine frame".into()))?;
    Region::new(center, shape, score)
}

/// RAND-A: ellipses from a random rotation and anisotropy `2^a`,
/// `θ ~ U(-π, π)`, `a ~ U(0, 2)`, with `sqrt(det A) = s`. Centers keep a
/// margin equal to the larger semi-axis.
pub fn sample_rand_a(width: f64, height: f64, n: usize, params: &RandParams) -> Result<Vec<Region>> {
    params.validate()?;
    check_domain(width, height, n)?;
    let limit = 0.5 * width.min(height);
    let mut rng = params.rng();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut rejected = 0;
        let (frame, margin) = loop {
            let s = sample_scale(params, &mut rng);
            let theta = -PI + 2.0 * PI * rng.random::<f64>();
            let a = 2.0 * rng.random::<f64>();
            let margin = s * (0.5 * a).exp2();
            if s > 0.0 && margin < limit {
                break (rand_a_frame(s, theta, a), margin);
            }
            rejected += 1;
            if rejected > MAX_REJECTIONS {
                return Err(Error::TooManyRejections(rejected));
            }
        };
        let c = uniform_center(&mut rng, width, height, margin);
        out.push(ellipse_from_frame(c, &frame, rank_score(n, i))?);
    }
    Ok(out)
}

pub fn sample(kind: BaselineKind, width: f64, height: f64, n: usize, params: &RandParams) -> Result<Vec<Region>> {
    match kind {
        BaselineKind::Points => sample_rand_t(width, height, n, params),
        BaselineKind::Circles => sample_rand_s(width, height, n, params),
        BaselineKind::Ellipses => sample_rand_a(width, height, n, params),
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::protocol::select_top_n;

    #[test]
    fn same_seed_same_output() {
        let p = RandParams::default().with_seed(42);
        for kind in BaselineKind::ALL {
            let a = sample(kind, 640.0, 480.0, 300, &p).unwrap();
            let b = sample(kind, 640.0, 480.0, 300, &p).unwrap();
            assert_eq!(a, b);
            let c = sample(kind, 640.0, 480.0, 300, &p.with_seed(43)).unwrap();
            assert_ne!(a, c);
            assert_eq!(a.len(), c.len());
        }
    }

    #[test]
    fn rand_t_within_bounds() {
        let p = RandParams::default().with_seed(1);
        let d = sample_rand_t(640.0, 480.0, 100_000, &p).unwrap();
        assert!(d.iter().all(|r| {
            let c = r.center();
            c.x >= 10.0 && c.x <= 630.0 && c.y >= 10.0 && c.y <= 470.0
        }));
        assert!(sample_rand_t(20.0, 480.0, 10, &p).is_err());
    }

    #[test]
    fn regions_inside_domain() {
        let p = RandParams::default().with_seed(2);
        for kind in [BaselineKind::Circles, BaselineKind::Ellipses] {
            let d = sample(kind, 640.0, 480.0, 100_000, &p).unwrap();
            for r in &d {
                let (c, e) = (r.center(), r.excircle_radius() * (1.0 - 1e-12));
                assert!(c.x - e >= 0.0 && c.x + e <= 640.0 && c.y - e >= 0.0 && c.y + e <= 480.0);
            }
        }
    }

    #[test]
    fn scores_are_strict_ranks_and_prefix_consistent() {
        let p = RandParams::default().with_seed(9);
        let d = sample_rand_s(640.0, 480.0, 1000, &p).unwrap();
        assert_eq!(d[0].score(), 1000.0);
        assert_eq!(d[999].score(), 1.0);
        assert_eq!(select_top_n(&d, 100), d[..100].to_vec());
    }

    #[test]
    fn scale_in_range() {
        let p = RandParams::default();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for _ in 0..1_000_000 {
            let s = sample_scale(&p, &mut rng);
            assert!(s > 0.0 && s <= 50.0);
        }
    }

    #[test]
    fn frame_has_unit_scale_determinant() {
        for (s, theta, a) in [(3.0, 0.3, 1.7), (0.1, -3.0, 0.01), (50.0, 2.0, 2.0)] {
            let f = rand_a_frame(s, theta, a);
            assert_relative_eq!(f.determinant().sqrt(), s, max_relative = 1e-9);
        }
        let circle = ellipse_from_frame(Point2::new(5.0, 5.0), &rand_a_frame(4.0, 1.1, 0.0), 0.0).unwrap();
        assert_relative_eq!(*circle.shape(), Matrix2::identity() / 16.0, epsilon = 1e-15);
    }

    #[test]
    fn tiny_domain_errors_out() {
        let p = RandParams::default().with_seed(3);
        assert!(matches!(
            sample_rand_s(1e-4, 1e-4, 5, &p),
            Err(Error::TooManyRejections(_))
        ));
    }

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        let a = derive_seed(7, &["seq", "1", "RAND-T"]);
        assert_eq!(a, derive_seed(7, &["seq", "1", "RAND-T"]));
        assert_ne!(a, derive_seed(7, &["seq", "1", "RAND-S"]));
        assert_ne!(a, derive_seed(8, &["seq", "1", "RAND-T"]));
        assert_ne!(derive_seed(7, &["ab", "c"]), derive_seed(7, &["a", "bc"]));
    }
}

//! Elliptical regions, projective warps and the normalized overlap score.
//!
//! A region is the set `{p : (p - c)ᵀ M (p - c) ≤ 1}` for a symmetric
//! positive-definite shape matrix `M`. Regions detected in a target image are
//! brought into the reference frame by linearizing the homography at the
//! region center, and pairs are compared by intersection-over-union after
//! rescaling both so that the reference region has a fixed area.

use nalgebra::{Matrix2, Matrix3, Point2, Vector3};

use crate::error::{Error, Result};

/// Default normalization area (a 30 × 30 px square).
pub const DEFAULT_NORM_AREA: f64 = 900.0;

/// Grid samples across the smaller normalized region.
pub const RASTER_SAMPLES: f64 = 64.0;
pub const RASTER_MIN_STEP: f64 = 0.05;
pub const RASTER_MAX_STEP: f64 = 1.0;

const HORIZON_EPS: f64 = 1e-12;
const SINGULAR_EPS: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-9;

/// One detected region: an ellipse with a detector-specific score.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    center: Point2<f64>,
    shape: Matrix2<f64>,
    score: f64,
}

impl Region {
    /// Builds a region from its center and the entries `m11, m12, m22` of the
    /// symmetric shape matrix.
    pub fn from_shape(center: Point2<f64>, m11: f64, m12: f64, m22: f64, score: f64) -> Result<Self> {
        Self::new(center, Matrix2::new(m11, m12, m12, m22), score)
    }

    pub fn new(center: Point2<f64>, shape: Matrix2<f64>, score: f64) -> Result<Self> {
        if !center.x.is_finite() || !center.y.is_finite() {
            return Err(Error::InvalidRegion(format!("non-finite center {center}")));
        }
        if !score.is_finite() {
            return Err(Error::InvalidRegion(format!("non-finite score {score}")));
        }
        if shape.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRegion("non-finite shape matrix".into()));
        }
        let asym = (shape[(0, 1)] - shape[(1, 0)]).abs();
        if asym > SYMMETRY_TOL * shape.amax() {
            return Err(Error::InvalidRegion(format!(
                "shape matrix not symmetric (m12 = {}, m21 = {})",
                shape[(0, 1)],
                shape[(1, 0)]
            )));
        }
        let shape = symmetrize(shape);
        let det = shape.determinant();
        if !(shape[(0, 0)] > 0.0 && shape[(1, 1)] > 0.0 && det > 0.0) {
            return Err(Error::InvalidRegion(format!(
                "shape matrix not positive definite (m11 = {}, m22 = {}, det = {det:e})",
                shape[(0, 0)],
                shape[(1, 1)]
            )));
        }
        let area = std::f64::consts::PI / det.sqrt();
        if !area.is_finite() {
            return Err(Error::InvalidRegion(format!("area {area} not finite")));
        }
        Ok(Self { center, shape, score })
    }

    /// A disk of radius `radius` around `(x, y)`.
    pub fn circle(x: f64, y: f64, radius: f64, score: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidRegion(format!("radius {radius} must be positive")));
        }
        let inv = 1.0 / (radius * radius);
        Self::from_shape(Point2::new(x, y), inv, 0.0, inv, score)
    }

    pub fn center(&self) -> Point2<f64> {
        self.center
    }

    pub fn shape(&self) -> &Matrix2<f64> {
        &self.shape
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = score;
        self
    }

    /// Area `π / sqrt(det M)` in px².
    pub fn area(&self) -> f64 {
        std::f64::consts::PI / self.shape.determinant().sqrt()
    }

    /// Largest semi-axis, i.e. the radius of the enclosing circle.
    pub fn excircle_radius(&self) -> f64 {
        let (lambda_min, _) = eigenvalues(&self.shape);
        1.0 / lambda_min.sqrt()
    }

    /// Half extents of the axis-aligned bounding box around the center.
    pub fn half_extents(&self) -> (f64, f64) {
        let det = self.shape.determinant();
        ((self.shape[(1, 1)] / det).sqrt(), (self.shape[(0, 0)] / det).sqrt())
    }

    pub fn contains(&self, p: Point2<f64>) -> bool {
        let d = p - self.center;
        (d.transpose() * self.shape * d)[(0, 0)] <= 1.0
    }

    /// Scales the region about its own center by `gamma` (area grows by `gamma²`).
    pub fn magnify(&self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "magnification factor {gamma} must be positive"
            )));
        }
        Region::new(self.center, self.shape / (gamma * gamma), self.score)
    }

    /// Image of the region under `h`, using the first-order approximation of
    /// the projective map at the region center.
    pub fn warp(&self, h: &Homography) -> Result<Self> {
        let center = h.map_point(self.center)?;
        let a = h.jacobian(self.center)?;
        let a_inv = a.try_inverse().ok_or(Error::DegenerateWarp {
            x: self.center.x,
            y: self.center.y,
            w: 0.0,
        })?;
        let shape = symmetrize(a_inv.transpose() * self.shape * a_inv);
        Region::new(center, shape, self.score)
    }
}

fn symmetrize(m: Matrix2<f64>) -> Matrix2<f64> {
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    Matrix2::new(m[(0, 0)], off, off, m[(1, 1)])
}

/// Eigenvalues `(min, max)` of a symmetric 2×2 matrix.
fn eigenvalues(m: &Matrix2<f64>) -> (f64, f64) {
    let half_trace = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let half_diff = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let radius = half_diff.hypot(m[(0, 1)]);
    (half_trace - radius, half_trace + radius)
}

/// Area of `r` in px².
pub fn area(r: &Region) -> f64 {
    r.area()
}

pub fn excircle_radius(r: &Region) -> f64 {
    r.excircle_radius()
}

pub fn magnify(r: &Region, gamma: f64) -> Result<Region> {
    r.magnify(gamma)
}

pub fn warp_region(r: &Region, h: &Homography) -> Result<Region> {
    r.warp(h)
}

pub fn affine_approx(h: &Homography, p: Point2<f64>) -> Result<Matrix2<f64>> {
    h.jacobian(p)
}

/// A planar projective map from reference-image to target-image pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homography {
    matrix: Matrix3<f64>,
}

impl Homography {
    /// Wraps a matrix that maps reference coordinates to target coordinates.
    ///
    /// The matrix is rescaled so that `h33 = 1` when that entry is not
    /// vanishing, otherwise to unit Frobenius norm. Singularity is tested on
    /// the unit-norm copy.
    pub fn new(matrix: Matrix3<f64>) -> Result<Self> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite homography entry".into()));
        }
        let norm = matrix.norm();
        if norm == 0.0 {
            return Err(Error::SingularHomography { det: 0.0 });
        }
        let unit = matrix / norm;
        let det = unit.determinant();
        if det.abs() <= SINGULAR_EPS {
            return Err(Error::SingularHomography { det });
        }
        let h33 = matrix[(2, 2)];
        let matrix = if h33.abs() > 1e-8 * norm { matrix / h33 } else { unit };
        Ok(Self { matrix })
    }

    /// Wraps a matrix given in the target → reference direction.
    pub fn from_target_to_ref(matrix: Matrix3<f64>) -> Result<Self> {
        Self::new(matrix)?.inverse()
    }

    pub fn identity() -> Self {
        Self {
            matrix: Matrix3::identity(),
        }
    }

    /// Pure translation by `(dx, dy)`.
    pub fn translation(dx: f64, dy: f64) -> Self {
        Self {
            matrix: Matrix3::new(1.0, 0.0, dx, 0.0, 1.0, dy, 0.0, 0.0, 1.0),
        }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .matrix
            .try_inverse()
            .ok_or(Error::SingularHomography { det: 0.0 })?;
        Self::new(inv)
    }

    fn homogeneous(&self, p: Point2<f64>) -> Result<Vector3<f64>> {
        let v = self.matrix * Vector3::new(p.x, p.y, 1.0);
        if v.z.abs() <= HORIZON_EPS || !v.iter().all(|c| c.is_finite()) {
            return Err(Error::DegenerateWarp { x: p.x, y: p.y, w: v.z });
        }
        Ok(v)
    }

    pub fn map_point(&self, p: Point2<f64>) -> Result<Point2<f64>> {
        let v = self.homogeneous(p)?;
        Ok(Point2::new(v.x / v.z, v.y / v.z))
    }

    /// Jacobian of the projective map at `p`.
    pub fn jacobian(&self, p: Point2<f64>) -> Result<Matrix2<f64>> {
        let v = self.homogeneous(p)?;
        let h = &self.matrix;
        let (u, w) = (v.x / v.z, v.y / v.z);
        Ok(Matrix2::new(
            (h[(0, 0)] - u * h[(2, 0)]) / v.z,
            (h[(0, 1)] - u * h[(2, 1)]) / v.z,
            (h[(1, 0)] - w * h[(2, 0)]) / v.z,
            (h[(1, 1)] - w * h[(2, 1)]) / v.z,
        ))
    }
}

/// Where the excircle test runs relative to area normalization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuickReject {
    /// Excircles are compared after both regions are normalized.
    #[default]
    Normalized,
    /// Excircles are compared on the raw regions, before normalization.
    /// Reproduces the historical behaviour that makes the score depend on
    /// the magnification factor.
    Legacy,
}

/// Intersection-over-union of two regions estimated by scanline integration.
///
/// Rows are spaced 1/64 of the smaller excircle diameter apart, clamped to
/// `[0.05, 1]` px, over the union of both bounding boxes. On each row the
/// inside of a convex region is a single interval whose end points are the
/// roots of the row's quadratic, so interval lengths are used directly
/// rather than counting sample columns.
pub fn raster_overlap(a: &Region, b: &Region) -> f64 {
    if a.center == b.center && a.shape == b.shape {
        return 1.0;
    }
    let (_, ay) = a.half_extents();
    let (_, by) = b.half_extents();
    let y0 = (a.center.y - ay).min(b.center.y - by);
    let y1 = (a.center.y + ay).max(b.center.y + by);
    let diameter = 2.0 * a.excircle_radius().min(b.excircle_radius());
    let step = (diameter / RASTER_SAMPLES).clamp(RASTER_MIN_STEP, RASTER_MAX_STEP);
    let rows = ((y1 - y0) / step).ceil().max(1.0) as i64;

    let (mut len_a, mut len_b, mut len_ab) = (0.0, 0.0, 0.0);
    for j in 0..rows {
        let y = y0 + (j as f64 + 0.5) * step;
        let sa = row_span(a, y);
        let sb = row_span(b, y);
        if let Some((lo, hi)) = sa {
            len_a += hi - lo;
        }
        if let Some((lo, hi)) = sb {
            len_b += hi - lo;
        }
        if let (Some(sa), Some(sb)) = (sa, sb) {
            len_ab += (sa.1.min(sb.1) - sa.0.max(sb.0)).max(0.0);
        }
    }
    let union = len_a + len_b - len_ab;
    if !(union > 0.0) {
        return 0.0;
    }
    (len_ab / union).clamp(0.0, 1.0)
}

/// Interval of `x` with `(x, y)` inside `r`.
fn row_span(r: &Region, y: f64) -> Option<(f64, f64)> {
    let m = &r.shape;
    let (m11, m12, m22) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
    let dy = y - r.center.y;
    // m11 dx² + 2 m12 dy dx + (m22 dy² - 1) ≤ 0
    let disc = m11 - (m11 * m22 - m12 * m12) * dy * dy;
    if !(disc > 0.0) {
        return None;
    }
    let root = disc.sqrt();
    Some((
        r.center.x + (-m12 * dy - root) / m11,
        r.center.x + (-m12 * dy + root) / m11,
    ))
}

/// Normalized overlap of a reference region and a target region that has
/// already been warped into the reference frame.
///
/// Both regions are magnified about their own centers by `sqrt(norm_area /
/// area(reference))`, so the reference ends up with area `norm_area`. Pairs
/// whose normalized excircles are disjoint score 0 without rasterizing.
pub fn normalized_overlap(
    reference: &Region,
    warped_target: &Region,
    norm_area: f64,
    quick_reject: QuickReject,
) -> Result<f64> {
    if !(norm_area > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "normalization area {norm_area} must be positive"
        )));
    }
    let distance = (reference.center - warped_target.center).norm();
    if quick_reject == QuickReject::Legacy && distance > reference.excircle_radius() + warped_target.excircle_radius() {
        return Ok(0.0);
    }
    let factor = (norm_area / reference.area()).sqrt();
    let a = reference.magnify(factor)?;
    let b = warped_target.magnify(factor)?;
    if distance > a.excircle_radius() + b.excircle_radius() {
        return Ok(0.0);
    }
    Ok(raster_overlap(&a, &b))
}

//! Rectangle arithmetic, IoU, quadrant splitting, polyline clipping and the
//! ground-control-point homography.

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BBox, Rect};

/// Area of `a ∩ b`, zero when they are disjoint or only touch.
pub fn intersection_area(a: &Rect, b: &Rect) -> f64 {
    let w = a.right().min(b.right()) - a.x.max(b.x);
    let h = a.bottom().min(b.bottom()) - a.y.max(b.y);
    if w <= 0.0 || h <= 0.0 {
        0.0
    } else {
        w * h
    }
}

/// Intersection over union of a detection and a ground-truth box.
pub fn iou(b_d: &BBox, b_gt: &BBox) -> Result<f64> {
    for b in [b_d, b_gt] {
        if b.is_degenerate() {
            return Err(Error::DegenerateBox { w: b.w, h: b.h });
        }
    }
    Ok(iou_unchecked(&b_d.rect(), &b_gt.rect()))
}

/// IoU for rectangles already known to have positive area.
pub(crate) fn iou_unchecked(a: &Rect, b: &Rect) -> f64 {
    // (x + w) - x need not round back to w
    if a == b {
        return 1.0;
    }
    let inter = intersection_area(a, b);
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

pub fn is_splittable(r: &Rect) -> bool {
    r.w >= 2.0 && r.h >= 2.0
}

/// Splits `r` into `[NW, NE, SW, SE]`. The north-west child takes the floor
/// of each half so that the four children tile `r` exactly.
pub fn split_quadrants(r: &Rect) -> Result<[Rect; 4]> {
    if !is_splittable(r) {
        return Err(Error::Unsplittable { w: r.w, h: r.h });
    }
    let hw = (r.w / 2.0).floor();
    let hh = (r.h / 2.0).floor();
    Ok([
        Rect::new(r.x, r.y, hw, hh),
        Rect::new(r.x + hw, r.y, r.w - hw, hh),
        Rect::new(r.x, r.y + hh, hw, r.h - hh),
        Rect::new(r.x + hw, r.y + hh, r.w - hw, r.h - hh),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(p: [f64; 2]) -> Self {
        Point::new(p[0], p[1])
    }
}

/// A road centre line in pixel space.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub road_id: String,
    vertices: Vec<Point>,
}

impl Polyline {
    pub fn new(road_id: impl Into<String>, vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::Polyline("at least two vertices are required".into()));
        }
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::Polyline("non-finite vertex".into()));
        }
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Polyline("consecutive vertices must be distinct".into()));
        }
        Ok(Self { road_id: road_id.into(), vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| a.distance(&b)).sum()
    }

    /// Point at arc length `s` from the first vertex (clamped to the ends).
    pub fn point_at(&self, s: f64) -> Point {
        let mut remaining = s.max(0.0);
        for (a, b) in self.segments() {
            let len = a.distance(&b);
            if remaining <= len {
                let t = remaining / len;
                return Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
            }
            remaining -= len;
        }
        *self.vertices.last().unwrap()
    }
}

/// Parametric (Liang-Barsky) clip of segment `a -> b` against `r`. Returns
/// the parameter interval that lies inside.
pub fn clip_segment(a: Point, b: Point, r: &Rect) -> Option<(f64, f64)> {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    // (p, q, far edge)
    let checks = [
        (-dx, a.x - r.x, false),
        (dx, r.right() - a.x, true),
        (-dy, a.y - r.y, false),
        (dy, r.bottom() - a.y, true),
    ];
    for (p, q, far_edge) in checks {
        if p == 0.0 {
            // A segment running along the right or bottom edge belongs to
            // the neighbour, so abutting rects never both count it.
            if q < 0.0 || (q == 0.0 && far_edge) {
                return None;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
            if t0 > t1 {
                return None;
            }
        }
    }
    Some((t0, t1))
}

/// Length of the part of `p` that lies inside `r`. With a homography the
/// clipped endpoints are mapped to world coordinates before measuring.
pub fn clip_polyline_length(p: &Polyline, r: &Rect, h: Option<&Homography>) -> Result<f64> {
    if r.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (a, b) in p.segments() {
        let Some((t0, t1)) = clip_segment(a, b, r) else {
            continue;
        };
        if t1 <= t0 {
            continue;
        }
        let lerp = |t: f64| Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
        let (c0, c1) = (lerp(t0), lerp(t1));
        total += match h {
            None => c0.distance(&c1),
            Some(h) => h.apply(c0)?.distance(&h.apply(c1)?),
        };
    }
    Ok(total)
}

/// Projective map from pixel to world coordinates, bottom-right entry 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Homography {
    pub matrix: [[f64; 3]; 3],
    pub unit: String,
}

const DET_EPS: f64 = 1e-9;
const W_EPS: f64 = 1e-12;

impl Homography {
    pub fn new(matrix: [[f64; 3]; 3], unit: impl Into<String>) -> Result<Self> {
        let m = to_matrix(&matrix);
        if m[(2, 2)].abs() < W_EPS {
            return Err(Error::Homography("bottom-right entry is zero".into()));
        }
        let m = m / m[(2, 2)];
        if m.determinant().abs() < DET_EPS {
            return Err(Error::Homography("matrix is singular".into()));
        }
        Ok(Self { matrix: from_matrix(&m), unit: unit.into() })
    }

    pub fn identity(unit: impl Into<String>) -> Self {
        Self { matrix: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], unit: unit.into() }
    }

    pub fn apply(&self, p: Point) -> Result<Point> {
        let m = &self.matrix;
        let w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
        if w.abs() < W_EPS {
            return Err(Error::Homography(format!(
                "point ({}, {}) maps to the plane at infinity",
                p.x, p.y
            )));
        }
        Ok(Point::new(
            (m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w,
            (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w,
        ))
    }

    pub fn inverse(&self) -> Result<Homography> {
        let inv = to_matrix(&self.matrix)
            .try_inverse()
            .ok_or_else(|| Error::Homography("matrix is singular".into()))?;
        Homography::new(from_matrix(&inv), self.unit.clone())
    }
}

fn to_matrix(m: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|r, c| m[r][c])
}

fn from_matrix(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = m[(r, c)];
        }
    }
    out
}

/// Pixel/world correspondence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gcp {
    pub px: Point,
    pub world: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomographyFit {
    pub homography: Homography,
    /// Root-mean-square reprojection distance over the pairs, world units.
    pub rms_residual: f64,
}

fn collinear(a: Point, b: Point, c: Point) -> bool {
    let (ux, uy) = (b.x - a.x, b.y - a.y);
    let (vx, vy) = (c.x - a.x, c.y - a.y);
    let cross = ux * vy - uy * vx;
    let scale = (ux * ux + uy * uy).max(vx * vx + vy * vy);
    scale == 0.0 || cross.abs() <= 1e-9 * scale
}

/// Isotropic scaling that moves the centroid to the origin and the mean
/// distance to sqrt(2).
fn normalizer(points: &[Point]) -> Matrix3<f64> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.y).sum::<f64>() / n;
    let mean = points.iter().map(|p| (p.x - cx).hypot(p.y - cy)).sum::<f64>() / n;
    let s = if mean > 0.0 { std::f64::consts::SQRT_2 / mean } else { 1.0 };
    Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0)
}

fn transform(m: &Matrix3<f64>, p: Point) -> Point {
    let v = m * Vector3::new(p.x, p.y, 1.0);
    Point::new(v.x / v.z, v.y / v.z)
}

/// Normalized direct linear transform over four or more ground control
/// points.
pub fn estimate_homography(pairs: &[Gcp], unit: &str) -> Result<HomographyFit> {
    let n = pairs.len();
    if n < 4 {
        return Err(Error::Homography(format!("need at least 4 point pairs, got {n}")));
    }
    let px: Vec<Point> = pairs.iter().map(|g| g.px).collect();
    let world: Vec<Point> = pairs.iter().map(|g| g.world).collect();
    if n == 4 {
        for (i, j, k) in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)] {
            if collinear(px[i], px[j], px[k]) {
                return Err(Error::Homography("three pixel points are collinear".into()));
            }
        }
    }

    let tp = normalizer(&px);
    let tw = normalizer(&world);
    // At least 9 rows so the SVD exposes the full right null space.
    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (p, w)) in px.iter().zip(&world).enumerate() {
        let p = transform(&tp, *p);
        let w = transform(&tw, *w);
        let r = 2 * i;
        a.row_mut(r).copy_from_slice(&[-p.x, -p.y, -1.0, 0.0, 0.0, 0.0, w.x * p.x, w.x * p.y, w.x]);
        a.row_mut(r + 1)
            .copy_from_slice(&[0.0, 0.0, 0.0, -p.x, -p.y, -1.0, w.y * p.x, w.y * p.y, w.y]);
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Homography("SVD failed".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let largest = svd.singular_values[order[order.len() - 1]];
    let second_smallest = svd.singular_values[order[1]];
    if largest == 0.0 || second_smallest / largest < 1e-9 {
        return Err(Error::Homography("rank-deficient point configuration".into()));
    }
    let h = v_t.row(order[0]);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let tw_inv = tw
        .try_inverse()
        .ok_or_else(|| Error::Homography("degenerate world points".into()))?;
    let m = tw_inv * hn * tp;
    let homography = Homography::new(from_matrix(&m), unit)?;

    let mut sq = 0.0;
    for (p, w) in px.iter().zip(&world) {
        let q = homography.apply(*p)?;
        sq += q.distance(w).powi(2);
    }
    Ok(HomographyFit { homography, rms_residual: (sq / n as f64).sqrt() })
}

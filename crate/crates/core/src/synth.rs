//! Synthetic cameras with distance-degraded detection, and a brute-force
//! HAIR oracle.
//!
//! The oracle enumerates every quadtree node up to the maximal depth and
//! evaluates each one from scratch with its own matching and precision code.
//! It shares only the rectangle primitives of [`crate::geometry`] with
//! [`crate::quadtree::identify_hair`].

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{intersection_area, split_quadrants, Point, Polyline};
use crate::model::{
    BBox, CameraDataset, EmptyRegionPolicy, ImageRecord, RapConfig, Rect, ZeroRecallMode,
};
use crate::quadtree::{Hair, QuadPath, Quadrant, QuadrantNode};

/// Detection probability as a function of apparent box size (width, px).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DetectCurve {
    Constant { p: f64 },
    /// `below` for sizes under `size`, `above` otherwise.
    Step { size: f64, below: f64, above: f64 },
    /// Linear interpolation between (size, probability) knots, clamped at
    /// both ends.
    Piecewise { points: Vec<[f64; 2]> },
}

impl DetectCurve {
    pub fn probability(&self, size: f64) -> f64 {
        match self {
            DetectCurve::Constant { p } => *p,
            DetectCurve::Step { size: s, below, above } => {
                if size < *s {
                    *below
                } else {
                    *above
                }
            }
            DetectCurve::Piecewise { points } => interpolate(points, size),
        }
    }

    fn validate(&self) -> Result<()> {
        let probs: Vec<f64> = match self {
            DetectCurve::Constant { p } => vec![*p],
            DetectCurve::Step { below, above, .. } => vec![*below, *above],
            DetectCurve::Piecewise { points } => {
                if points.is_empty() || points.windows(2).any(|w| w[0][0] >= w[1][0]) {
                    return Err(Error::Config("piecewise knots must be strictly increasing".into()));
                }
                points.iter().map(|p| p[1]).collect()
            }
        };
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("detection probabilities must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

fn interpolate(points: &[[f64; 2]], x: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if x <= first[0] {
        return first[1];
    }
    if x >= last[0] {
        return last[1];
    }
    for w in points.windows(2) {
        let ([x0, y0], [x1, y1]) = (w[0], w[1]);
        if x <= x1 {
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    last[1]
}

/// Mean confidence grows linearly from `far` at the far box size to `near`
/// at the near size; `noise` is the half-width of a uniform perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreModel {
    pub far: f64,
    pub near: f64,
    pub noise: f64,
    /// Spurious detections are sized for the row they appear in and score
    /// this fraction of what a true detection of that size would.
    pub false_positive: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    #[serde(default = "default_camera_id")]
    pub camera_id: String,
    pub width: f64,
    pub height: f64,
    /// Road centre line in image space; vehicles are placed along it.
    pub road: Vec<[f64; 2]>,
    /// Horizontal half-spread of vehicles around the road at the near size,
    /// shrinking with apparent size.
    #[serde(default)]
    pub lateral_spread: f64,
    pub vehicles_per_image: f64,
    pub size_near: f64,
    pub size_far: f64,
    /// Box height over box width.
    #[serde(default = "default_aspect")]
    pub aspect: f64,
    pub detect_prob: DetectCurve,
    pub fp_rate: f64,
    pub localization_jitter: f64,
    pub score: ScoreModel,
    pub seed: u64,
}

fn default_camera_id() -> String {
    "synthetic".into()
}

fn default_aspect() -> f64 {
    0.75
}

impl SynthSpec {
    /// Low camera, 704x480, one road running from the bottom of the frame to
    /// the top. Vehicles shrink from 90 px to 10 px with distance and the
    /// detector misses everything under 30 px, i.e. the top quarter of the
    /// frame.
    pub fn degraded_camera() -> Self {
        Self {
            camera_id: "degraded".into(),
            width: 704.0,
            height: 480.0,
            road: vec![[300.0, 478.0], [400.0, 2.0]],
            lateral_spread: 200.0,
            vehicles_per_image: 4.0,
            size_near: 90.0,
            size_far: 10.0,
            aspect: 0.75,
            detect_prob: DetectCurve::Step { size: 30.0, below: 0.0, above: 0.97 },
            fp_rate: 0.1,
            localization_jitter: 2.0,
            score: ScoreModel { far: 0.35, near: 0.95, noise: 0.05, false_positive: 0.5 },
            seed: 20_200_101,
        }
    }

    /// Same geometry with a detector that finds every vehicle exactly.
    pub fn perfect_detector() -> Self {
        Self {
            camera_id: "perfect".into(),
            detect_prob: DetectCurve::Constant { p: 1.0 },
            fp_rate: 0.0,
            localization_jitter: 0.0,
            ..Self::degraded_camera()
        }
    }

    pub fn polyline(&self) -> Result<Polyline> {
        Polyline::new("road", self.road.iter().map(|&p| Point::from(p)).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.width) || !positive(self.height) {
            return Err(Error::Config("width and height must be positive".into()));
        }
        if !(positive(self.size_far) && self.size_near >= self.size_far) {
            return Err(Error::Config("need size_near >= size_far > 0".into()));
        }
        if !positive(self.aspect) {
            return Err(Error::Config("aspect must be positive".into()));
        }
        for (name, v) in [
            ("vehicles_per_image", self.vehicles_per_image),
            ("fp_rate", self.fp_rate),
            ("localization_jitter", self.localization_jitter),
            ("lateral_spread", self.lateral_spread),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be non-negative")));
            }
        }
        for (name, v) in [
            ("score.far", self.score.far),
            ("score.near", self.score.near),
            ("score.false_positive", self.score.false_positive),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        self.detect_prob.validate()?;
        let extent = Rect::new(0.0, 0.0, self.width, self.height);
        let road = self.polyline()?;
        if road.vertices().iter().any(|p| !extent.contains_point(p.x, p.y)) {
            return Err(Error::Config("road vertices must lie inside the frame".into()));
        }
        Ok(())
    }

    /// Apparent box width at vertical position `y`.
    pub fn size_at(&self, y: f64) -> f64 {
        let t = (y / self.height).clamp(0.0, 1.0);
        self.size_far + (self.size_near - self.size_far) * t
    }

    fn mean_score(&self, size: f64) -> f64 {
        let span = self.size_near - self.size_far;
        let t = if span > 0.0 { ((size - self.size_far) / span).clamp(0.0, 1.0) } else { 1.0 };
        self.score.far + (self.score.near - self.score.far) * t
    }

    /// Largest shift per axis that keeps IoU with the source box above 1/2:
    /// with both shifts at most `s (1 - sqrt(1/2)) / 2` the overlap ratio
    /// stays above ((1 + sqrt(1/2)) / 2)^2 > 2/3.
    pub fn jitter_bound(&self, w: f64, h: f64) -> f64 {
        let cap = w.min(h) * (1.0 - std::f64::consts::FRAC_1_SQRT_2) / 2.0 * 0.999;
        self.localization_jitter.min(cap)
    }
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
}

fn noisy(rng: &mut ChaCha8Rng, mean: f64, half_width: f64) -> f64 {
    let v = if half_width > 0.0 { mean + rng.random_range(-half_width..=half_width) } else { mean };
    v.clamp(0.0, 1.0)
}

/// A generated image plus, for each detection, the index of the ground
/// truth it was derived from (`None` for spurious detections).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedImage {
    pub record: ImageRecord,
    pub sources: Vec<Option<usize>>,
}

/// Generates `n_images` images deterministically from `spec.seed`.
pub fn generate_camera(spec: &SynthSpec, n_images: usize) -> Result<CameraDataset> {
    Ok(CameraDataset {
        camera_id: spec.camera_id.clone(),
        width: spec.width,
        height: spec.height,
        images: generate_images(spec, n_images)?.into_iter().map(|g| g.record).collect(),
    })
}

pub fn generate_images(spec: &SynthSpec, n_images: usize) -> Result<Vec<GeneratedImage>> {
    spec.validate()?;
    let road = spec.polyline()?;
    let road_len = road.length();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let width_digits = n_images.max(1).to_string().len().max(4);

    let mut out = Vec::with_capacity(n_images);
    for i in 0..n_images {
        let mut gt = Vec::new();
        let mut det = Vec::new();
        let mut sources = Vec::new();

        for _ in 0..poisson(&mut rng, spec.vehicles_per_image) {
            let along = rng.random_range(0.0..=road_len);
            let p = road.point_at(along);
            let size = spec.size_at(p.y);
            let offset = if spec.lateral_spread > 0.0 {
                let spread = spec.lateral_spread * size / spec.size_near;
                rng.random_range(-spread..=spread)
            } else {
                0.0
            };
            let cx = (p.x + offset).clamp(0.0, spec.width);
            let (w, h) = (size, size * spec.aspect);
            let b = BBox::gt(cx - w / 2.0, p.y - h / 2.0, w, h);
            let detect = rng.random_bool(spec.detect_prob.probability(size).clamp(0.0, 1.0));
            if detect {
                let j = spec.jitter_bound(w, h);
                let (dx, dy) = if j > 0.0 {
                    (rng.random_range(-j..=j), rng.random_range(-j..=j))
                } else {
                    (0.0, 0.0)
                };
                let score = noisy(&mut rng, spec.mean_score(size), spec.score.noise);
                det.push(BBox::det(b.x + dx, b.y + dy, w, h, score));
                sources.push(Some(gt.len()));
            }
            gt.push(b);
        }

        for _ in 0..poisson(&mut rng, spec.fp_rate) {
            let cy = rng.random_range(0.0..=spec.height);
            let w = spec.size_at(cy).min(spec.width);
            let h = (w * spec.aspect).min(spec.height);
            let x = rng.random_range(0.0..=(spec.width - w));
            let y = (cy - h / 2.0).clamp(0.0, spec.height - h);
            let score = noisy(&mut rng, spec.mean_score(w) * spec.score.false_positive, spec.score.noise);
            det.push(BBox::det(x, y, w, h, score));
            sources.push(None);
        }

        out.push(GeneratedImage {
            record: ImageRecord {
                image_id: format!("img{i:0width_digits$}"),
                ground_truth: gt,
                detections: det,
            },
            sources,
        });
    }
    Ok(out)
}

/// A camera whose lower half is detected perfectly and whose upper half is
/// never detected. Every image has one vehicle in each quadrant.
pub fn bottom_half_perfect(width: f64, height: f64, n_images: usize) -> CameraDataset {
    let (hw, hh) = (width / 2.0, height / 2.0);
    let size = (hw.min(hh) / 4.0).max(1.0);
    let images = (0..n_images)
        .map(|i| {
            let shift = (i % 5) as f64 * size / 4.0;
            let gt: Vec<BBox> = [(0.0, 0.0), (hw, 0.0), (0.0, hh), (hw, hh)]
                .iter()
                .map(|&(ox, oy)| BBox::gt(ox + size + shift, oy + size, size, size))
                .collect();
            let det = gt[2..]
                .iter()
                .enumerate()
                .map(|(k, b)| BBox::det(b.x, b.y, b.w, b.h, 0.9 - 0.1 * k as f64))
                .collect();
            ImageRecord { image_id: format!("img{i:04}"), ground_truth: gt, detections: det }
        })
        .collect();
    CameraDataset { camera_id: "bottom-half".into(), width, height, images }
}

// ---------------------------------------------------------------------------
// Brute-force oracle

struct OracleNode {
    path: Vec<usize>,
    rect: Rect,
}

fn enumerate_nodes(extent: Rect, d0: usize) -> Result<Vec<OracleNode>> {
    let mut all = vec![OracleNode { path: vec![], rect: extent }];
    let mut frontier = 0;
    for _ in 0..d0 {
        let end = all.len();
        for n in frontier..end {
            let children = split_quadrants(&all[n].rect).map_err(|_| Error::DepthTooLarge {
                depth: d0,
                w: extent.w,
                h: extent.h,
            })?;
            for (q, c) in children.into_iter().enumerate() {
                let mut path = all[n].path.clone();
                path.push(q);
                all.push(OracleNode { path, rect: c });
            }
        }
        frontier = end;
    }
    Ok(all)
}

/// Quadrant sequence a box follows when it always moves to the child of
/// largest overlap (first child on ties).
fn descent(b: &Rect, extent: Rect, d0: usize) -> Vec<usize> {
    let mut path = Vec::with_capacity(d0);
    let mut cur = extent;
    for _ in 0..d0 {
        let Ok(children) = split_quadrants(&cur) else { break };
        let areas = children.map(|c| intersection_area(b, &c));
        let mut best = 0;
        for k in 1..4 {
            if areas[k] > areas[best] {
                best = k;
            }
        }
        path.push(best);
        cur = children[best];
    }
    path
}

fn oracle_iou(a: &Rect, b: &Rect) -> f64 {
    let inter = intersection_area(a, b);
    if inter == 0.0 {
        0.0
    } else {
        inter / (a.area() + b.area() - inter)
    }
}

/// (score, image id, detection index, true positive)
type Hit<'a> = (f64, &'a str, usize, bool);

fn oracle_image_hits<'a>(image_id: &'a str, gt: &[&BBox], det: &[(usize, &BBox)], thr: f64) -> Vec<Hit<'a>> {
    let mut order: Vec<&(usize, &BBox)> = det.iter().collect();
    order.sort_by(|a, b| {
        let (sa, sb) = (a.1.score.unwrap_or(0.0), b.1.score.unwrap_or(0.0));
        sb.total_cmp(&sa).then(a.0.cmp(&b.0))
    });
    let mut used = vec![false; gt.len()];
    let mut hits = Vec::new();
    for (rank, (_, d)) in order.into_iter().enumerate() {
        let mut best: Option<usize> = None;
        let mut best_iou = f64::NEG_INFINITY;
        for (g, gb) in gt.iter().enumerate() {
            if used[g] {
                continue;
            }
            let v = oracle_iou(&d.rect(), &gb.rect());
            if v > best_iou {
                best_iou = v;
                best = Some(g);
            }
        }
        let tp = match best {
            Some(g) if best_iou > thr => {
                used[g] = true;
                true
            }
            _ => false,
        };
        // the local index keeps the within-image order stable
        hits.push((d.score.unwrap_or(0.0), image_id, rank, tp));
    }
    hits
}

fn oracle_rap(mut hits: Vec<Hit<'_>>, n_gt: usize, cfg: &RapConfig) -> Option<f64> {
    if n_gt == 0 {
        return if hits.is_empty() { None } else { Some(0.0) };
    }
    hits.sort_by(|a, b| match b.0.total_cmp(&a.0) {
        Ordering::Equal => a.1.cmp(b.1).then(a.2.cmp(&b.2)),
        o => o,
    });
    let mut pr = Vec::with_capacity(hits.len());
    let mut tp = 0usize;
    for (i, h) in hits.iter().enumerate() {
        tp += h.3 as usize;
        pr.push((tp as f64 / (i + 1) as f64, tp as f64 / n_gt as f64));
    }
    let mut sum = 0.0;
    for (li, &level) in cfg.recall_levels.iter().enumerate() {
        let mut best = 0.0_f64;
        for &(p, r) in &pr {
            if r >= level && p > best {
                best = p;
            }
        }
        if li == 0 && cfg.zero_recall_mode == ZeroRecallMode::Zeroed {
            best = 0.0;
        }
        sum += best;
    }
    Some(sum / cfg.recall_levels.len() as f64)
}

/// Exhaustive characterization of the HAIR: the nodes whose RAP passes the
/// threshold (or are empty under the include policy) and none of whose
/// ancestors were accepted or abandoned.
pub fn brute_force_hair(d: &CameraDataset, image_ids: &[String], cfg: &RapConfig, d0: usize) -> Result<Hair> {
    cfg.validate()?;
    if image_ids.is_empty() {
        return Err(Error::EmptySelection);
    }
    let extent = Rect::new(0.0, 0.0, d.width, d.height);
    let nodes = enumerate_nodes(extent, d0)?;
    let images = d.select(image_ids)?;

    // per image: (gt with paths, det with paths)
    struct Placed<'a> {
        id: &'a str,
        gt: Vec<(&'a BBox, Vec<usize>)>,
        det: Vec<(usize, &'a BBox, Vec<usize>)>,
    }
    let placed: Vec<Placed<'_>> = images
        .iter()
        .map(|im| Placed {
            id: &im.image_id,
            gt: im.ground_truth.iter().map(|b| (b, descent(&b.rect(), extent, d0))).collect(),
            det: im
                .detections
                .iter()
                .enumerate()
                .map(|(i, b)| (i, b, descent(&b.rect(), extent, d0)))
                .collect(),
        })
        .collect();

    let node_rap = |path: &[usize]| -> Option<f64> {
        let mut hits = Vec::new();
        let mut n_gt = 0;
        for im in &placed {
            let gt: Vec<&BBox> =
                im.gt.iter().filter(|(_, p)| p.starts_with(path)).map(|(b, _)| *b).collect();
            let det: Vec<(usize, &BBox)> = im
                .det
                .iter()
                .filter(|(_, _, p)| p.starts_with(path))
                .map(|(i, b, _)| (*i, *b))
                .collect();
            n_gt += gt.len();
            hits.extend(oracle_image_hits(im.id, &gt, &det, cfg.iou_threshold));
        }
        oracle_rap(hits, n_gt, cfg)
    };

    let raps: Vec<Option<f64>> = nodes.iter().map(|n| node_rap(&n.path)).collect();
    let passes = |v: Option<f64>| match v {
        Some(x) => x > cfg.a0,
        None => cfg.empty_region_policy == EmptyRegionPolicy::Include,
    };
    let continues = |v: Option<f64>| match v {
        Some(x) => x <= cfg.a0,
        None => cfg.empty_region_policy == EmptyRegionPolicy::Exclude,
    };

    let mut leaves: Vec<QuadrantNode> = Vec::new();
    for (i, node) in nodes.iter().enumerate() {
        if !passes(raps[i]) {
            continue;
        }
        let ancestors_ok = (0..node.path.len()).all(|k| {
            let prefix = &node.path[..k];
            let j = nodes.iter().position(|n| n.path == prefix).unwrap();
            continues(raps[j])
        });
        if ancestors_ok {
            leaves.push(QuadrantNode {
                path: QuadPath(node.path.iter().map(|&q| Quadrant::ALL[q]).collect()),
                rect: node.rect,
                depth: node.path.len(),
                rap: raps[i],
            });
        }
    }
    leaves.sort_by(|a, b| a.path.cmp(&b.path));

    Ok(Hair {
        camera_id: d.camera_id.clone(),
        extent,
        a0: cfg.a0,
        max_depth: d0,
        convention: cfg.clone(),
        identification_image_ids: image_ids.to_vec(),
        leaves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::iou;
    use crate::quadtree::identify_hair;

    #[test]
    fn perfect_spec_detections_equal_ground_truth() {
        let d = generate_camera(&SynthSpec::perfect_detector(), 20).unwrap();
        for im in &d.images {
            assert_eq!(im.ground_truth.len(), im.detections.len());
            for (g, det) in im.ground_truth.iter().zip(&im.detections) {
                assert_eq!((g.x, g.y, g.w, g.h), (det.x, det.y, det.w, det.h));
            }
        }
        assert!(crate::model::validate_dataset(d).is_ok());
    }

    #[test]
    fn zero_probability_yields_no_detections() {
        let spec = SynthSpec {
            detect_prob: DetectCurve::Constant { p: 0.0 },
            fp_rate: 0.0,
            ..SynthSpec::degraded_camera()
        };
        let d = generate_camera(&spec, 30).unwrap();
        assert!(d.images.iter().all(|im| im.detections.is_empty()));
        assert!(d.images.iter().map(|im| im.ground_truth.len()).sum::<usize>() > 0);
    }

    #[test]
    fn step_curve_splits_recall_by_half() {
        let mut spec = SynthSpec::degraded_camera();
        spec.fp_rate = 0.0;
        spec.detect_prob = DetectCurve::Step { size: spec.size_at(spec.height / 2.0), below: 0.0, above: 1.0 };
        let gen = generate_images(&spec, 100).unwrap();
        let (mut top, mut top_hit, mut bottom, mut bottom_hit) = (0, 0, 0, 0);
        for g in &gen {
            for (gi, b) in g.record.ground_truth.iter().enumerate() {
                let hit = g.sources.contains(&Some(gi));
                if b.y + b.h / 2.0 < spec.height / 2.0 {
                    top += 1;
                    top_hit += hit as usize;
                } else {
                    bottom += 1;
                    bottom_hit += hit as usize;
                }
            }
        }
        let top_recall = top_hit as f64 / top as f64;
        let bottom_recall = bottom_hit as f64 / bottom as f64;
        assert!(top_recall <= 0.05, "top recall {top_recall}");
        assert!(bottom_recall >= 0.95, "bottom recall {bottom_recall}");
    }

    #[test]
    fn jittered_detections_overlap_their_source() {
        let spec = SynthSpec { localization_jitter: 50.0, ..SynthSpec::degraded_camera() };
        for g in generate_images(&spec, 50).unwrap() {
            for (det, src) in g.record.detections.iter().zip(&g.sources) {
                if let Some(s) = src {
                    assert!(iou(det, &g.record.ground_truth[*s]).unwrap() > 0.5);
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SynthSpec::degraded_camera();
        assert_eq!(generate_camera(&spec, 10).unwrap(), generate_camera(&spec, 10).unwrap());
        let other = SynthSpec { seed: spec.seed + 1, ..spec.clone() };
        assert_ne!(generate_camera(&spec, 10).unwrap(), generate_camera(&other, 10).unwrap());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let s = SynthSpec { size_far: 100.0, ..SynthSpec::degraded_camera() };
        assert!(generate_camera(&s, 1).is_err());
        let s = SynthSpec { detect_prob: DetectCurve::Constant { p: 1.5 }, ..SynthSpec::degraded_camera() };
        assert!(generate_camera(&s, 1).is_err());
        let s = SynthSpec { road: vec![[0.0, 0.0], [1000.0, 0.0]], ..SynthSpec::degraded_camera() };
        assert!(generate_camera(&s, 1).is_err());
    }

    #[test]
    fn oracle_examples() {
        let d = bottom_half_perfect(200.0, 200.0, 6);
        let ids = d.image_ids();
        let h = brute_force_hair(&d, &ids, &RapConfig::default(), 1).unwrap();
        assert_eq!(h.leaf_paths(), vec!["SW", "SE"]);

        let mut all_good = d.clone();
        for im in &mut all_good.images {
            im.detections = im.ground_truth.iter().map(|b| BBox::det(b.x, b.y, b.w, b.h, 0.5)).collect();
        }
        let h = brute_force_hair(&all_good, &ids, &RapConfig::default(), 2).unwrap();
        assert_eq!(h.leaf_paths(), vec![""]);

        let mut all_fp = d.clone();
        for im in &mut all_fp.images {
            im.ground_truth.clear();
        }
        let h = brute_force_hair(&all_fp, &ids, &RapConfig::default(), 2).unwrap();
        assert!(h.leaves.is_empty());
    }

    #[test]
    fn oracle_matches_recursion_on_degraded_camera() {
        let d = generate_camera(&SynthSpec::degraded_camera(), 12).unwrap();
        let ids = d.image_ids();
        for d0 in 0..=4 {
            let cfg = RapConfig::default();
            let a = identify_hair(&d, &ids, &cfg, d0).unwrap();
            let b = brute_force_hair(&d, &ids, &cfg, d0).unwrap();
            assert_eq!(a, b, "d0 = {d0}");
        }
    }
}

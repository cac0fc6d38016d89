//! Recursive quadtree identification of the HAIR and the HAIR error measure.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{intersection_area, is_splittable, split_quadrants};
use crate::model::{BBox, CameraDataset, EmptyRegionPolicy, ImageRecord, RapConfig, Rect};
use crate::region_eval::{assign_box, compile_ranked, match_refs, rap, ImageOutcomes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quadrant {
    NW,
    NE,
    SW,
    SE,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::NW, Quadrant::NE, Quadrant::SW, Quadrant::SE];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Quadrant::NW => "NW",
            Quadrant::NE => "NE",
            Quadrant::SW => "SW",
            Quadrant::SE => "SE",
        }
    }
}

/// Address of a quadtree node; the root is the empty path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct QuadPath(pub Vec<Quadrant>);

impl QuadPath {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn child(&self, q: Quadrant) -> Self {
        let mut v = self.0.clone();
        v.push(q);
        Self(v)
    }

    /// True when `self` is a proper prefix of `other`.
    pub fn is_ancestor_of(&self, other: &QuadPath) -> bool {
        self.0.len() < other.0.len() && other.0.starts_with(&self.0)
    }

    /// Rectangle obtained by splitting `extent` along the path.
    pub fn rect_in(&self, extent: &Rect) -> Result<Rect> {
        self.0
            .iter()
            .try_fold(*extent, |r, q| Ok(split_quadrants(&r)?[q.index()]))
    }
}

impl fmt::Display for QuadPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.0.iter().map(|q| q.as_str()).collect();
        f.write_str(&parts.join("."))
    }
}

impl FromStr for QuadPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Ok(Self::root());
        }
        s.split('.')
            .map(|tok| match tok {
                "NW" => Ok(Quadrant::NW),
                "NE" => Ok(Quadrant::NE),
                "SW" => Ok(Quadrant::SW),
                "SE" => Ok(Quadrant::SE),
                other => Err(Error::Schema(format!("invalid quadrant `{other}` in path `{s}`"))),
            })
            .collect::<Result<_>>()
            .map(Self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadrantNode {
    pub path: QuadPath,
    pub rect: Rect,
    pub depth: usize,
    /// `None` for a region with neither ground truth nor detections.
    pub rap: Option<f64>,
}

/// The accepted quadtree leaves for one camera, plus the settings that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Hair {
    pub camera_id: String,
    pub extent: Rect,
    pub a0: f64,
    pub max_depth: usize,
    pub convention: RapConfig,
    pub identification_image_ids: Vec<String>,
    pub leaves: Vec<QuadrantNode>,
}

impl Hair {
    pub fn leaf_rects(&self) -> Vec<Rect> {
        self.leaves.iter().map(|l| l.rect).collect()
    }

    pub fn leaf_paths(&self) -> Vec<String> {
        self.leaves.iter().map(|l| l.path.to_string()).collect()
    }

    pub fn covered_area(&self) -> f64 {
        self.leaves.iter().map(|l| l.rect.area()).sum()
    }

    /// Area of `r` that falls inside the HAIR. Leaves are interior-disjoint,
    /// so the union area is the sum over leaves.
    pub fn overlap(&self, r: &Rect) -> f64 {
        self.leaves.iter().map(|l| intersection_area(r, &l.rect)).sum()
    }

    /// Majority-overlap membership: a box is inside when its area inside the
    /// HAIR is at least its area in the rest of the extent.
    pub fn contains_box(&self, b: &BBox) -> bool {
        let r = b.rect();
        let inside = self.overlap(&r);
        let in_extent = intersection_area(&r, &self.extent);
        inside >= in_extent - inside
    }

    /// Checks that every leaf rect matches its path, depths are within
    /// range and no leaf contains another.
    pub fn check_integrity(&self) -> Result<()> {
        for leaf in &self.leaves {
            let expected = leaf.path.rect_in(&self.extent).map_err(|_| {
                Error::Integrity(format!("leaf `{}` cannot be derived from the extent", leaf.path))
            })?;
            if expected != leaf.rect {
                return Err(Error::Integrity(format!(
                    "leaf `{}` has rect {:?}, expected {:?}",
                    leaf.path, leaf.rect, expected
                )));
            }
            if leaf.depth != leaf.path.depth() || leaf.depth > self.max_depth {
                return Err(Error::Integrity(format!("leaf `{}` has inconsistent depth", leaf.path)));
            }
        }
        let mut seen = HashSet::new();
        for (i, a) in self.leaves.iter().enumerate() {
            if !seen.insert(&a.path) {
                return Err(Error::Integrity(format!("duplicate leaf `{}`", a.path)));
            }
            for b in &self.leaves[i + 1..] {
                if a.path.is_ancestor_of(&b.path) || b.path.is_ancestor_of(&a.path) {
                    return Err(Error::Integrity(format!(
                        "leaves `{}` and `{}` are nested",
                        a.path, b.path
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Loss of RAP caused by counting only detections inside the HAIR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HairError {
    pub acc1: f64,
    pub acc2: f64,
    pub e: f64,
}

/// Boxes of one image that fall in the current node.
struct ImageScope<'a> {
    image_id: &'a str,
    gt: Vec<&'a BBox>,
    det: Vec<&'a BBox>,
}

/// Fails when some node above `d0` would be too small to split.
pub fn check_depth(extent: &Rect, d0: usize) -> Result<()> {
    // The NW child is the smallest at every level.
    let mut r = *extent;
    for _ in 0..d0 {
        if !is_splittable(&r) {
            return Err(Error::DepthTooLarge { depth: d0, w: extent.w, h: extent.h });
        }
        r = split_quadrants(&r)?[0];
    }
    Ok(())
}

fn scope_rap(scope: &[ImageScope<'_>], cfg: &RapConfig) -> Option<f64> {
    let outcomes: Vec<ImageOutcomes> =
        scope.iter().map(|s| match_refs(&s.gt, &s.det, cfg.iou_threshold)).collect();
    let ranked = compile_ranked(scope.iter().map(|s| s.image_id).zip(outcomes.iter()));
    rap(&ranked, cfg)
}

fn split_scope<'a>(scope: &[ImageScope<'a>], children: &[Rect; 4]) -> [Vec<ImageScope<'a>>; 4] {
    let mut out: [Vec<ImageScope<'a>>; 4] = Default::default();
    for s in scope {
        let mut parts: [ImageScope<'a>; 4] = std::array::from_fn(|_| ImageScope {
            image_id: s.image_id,
            gt: Vec::new(),
            det: Vec::new(),
        });
        for &b in &s.gt {
            let q = assign_box(&b.rect(), children).expect("box overlaps its parent node");
            parts[q].gt.push(b);
        }
        for &b in &s.det {
            let q = assign_box(&b.rect(), children).expect("box overlaps its parent node");
            parts[q].det.push(b);
        }
        for (slot, part) in out.iter_mut().zip(parts) {
            slot.push(part);
        }
    }
    out
}

struct Walk<'c> {
    cfg: &'c RapConfig,
    d0: usize,
    leaves: Vec<QuadrantNode>,
    visited: Option<Vec<QuadrantNode>>,
}

fn visit(rect: Rect, path: QuadPath, scope: &[ImageScope<'_>], walk: &mut Walk<'_>) -> Result<()> {
    let (cfg, d0) = (walk.cfg, walk.d0);
    let depth = path.depth();
    let value = scope_rap(scope, cfg);
    if let Some(v) = walk.visited.as_mut() {
        v.push(QuadrantNode { path: path.clone(), rect, depth, rap: value });
    }
    let leaves = &mut walk.leaves;
    match value {
        Some(v) if v > cfg.a0 => {
            leaves.push(QuadrantNode { path, rect, depth, rap: value });
            return Ok(());
        }
        None => {
            if cfg.empty_region_policy == EmptyRegionPolicy::Include {
                leaves.push(QuadrantNode { path, rect, depth, rap: None });
            }
            return Ok(());
        }
        Some(_) => {}
    }
    if depth >= d0 {
        return Ok(());
    }
    let children = split_quadrants(&rect)?;
    let scopes = split_scope(scope, &children);
    for ((q, child), child_scope) in Quadrant::ALL.into_iter().zip(children).zip(scopes) {
        visit(child, path.child(q), &child_scope, walk)?;
    }
    Ok(())
}

/// Partitions the camera extent until every kept quadrant has a RAP strictly
/// above `cfg.a0`, stopping at depth `d0`.
pub fn identify_hair(
    d: &CameraDataset,
    image_ids: &[String],
    cfg: &RapConfig,
    d0: usize,
) -> Result<Hair> {
    run_identification(d, image_ids, cfg, d0, false).map(|(h, _)| h)
}

/// Like [`identify_hair`], also returning every node that was evaluated, in
/// visiting order.
pub fn trace_hair(
    d: &CameraDataset,
    image_ids: &[String],
    cfg: &RapConfig,
    d0: usize,
) -> Result<(Hair, Vec<QuadrantNode>)> {
    run_identification(d, image_ids, cfg, d0, true).map(|(h, v)| (h, v.unwrap_or_default()))
}

fn run_identification(
    d: &CameraDataset,
    image_ids: &[String],
    cfg: &RapConfig,
    d0: usize,
    trace: bool,
) -> Result<(Hair, Option<Vec<QuadrantNode>>)> {
    cfg.validate()?;
    if image_ids.is_empty() {
        return Err(Error::EmptySelection);
    }
    let extent = d.extent();
    check_depth(&extent, d0)?;
    let images = d.select(image_ids)?;
    let scope: Vec<ImageScope<'_>> = images
        .iter()
        .map(|im| ImageScope {
            image_id: &im.image_id,
            gt: im.ground_truth.iter().collect(),
            det: im.detections.iter().collect(),
        })
        .collect();

    let mut walk = Walk { cfg, d0, leaves: Vec::new(), visited: trace.then(Vec::new) };
    visit(extent, QuadPath::root(), &scope, &mut walk)?;
    let hair = Hair {
        camera_id: d.camera_id.clone(),
        extent,
        a0: cfg.a0,
        max_depth: d0,
        convention: cfg.clone(),
        identification_image_ids: image_ids.to_vec(),
        leaves: walk.leaves,
    };
    Ok((hair, walk.visited))
}

fn images_rap<'a>(
    images: &[&'a ImageRecord],
    keep: impl Fn(&BBox) -> bool,
    cfg: &RapConfig,
) -> f64 {
    let outcomes: Vec<ImageOutcomes> = images
        .iter()
        .map(|im| {
            let gt: Vec<&BBox> = im.ground_truth.iter().collect();
            let det: Vec<&BBox> = im.detections.iter().filter(|b| keep(b)).collect();
            match_refs(&gt, &det, cfg.iou_threshold)
        })
        .collect();
    let ranked = compile_ranked(images.iter().map(|im| im.image_id.as_str()).zip(outcomes.iter()));
    rap(&ranked, cfg).unwrap_or(0.0)
}

/// `acc1` is the RAP of the whole extent, `acc2` the RAP when only
/// detections inside the HAIR are kept (ground truth stays complete).
/// The evaluation images must not include any identification image.
pub fn hair_error(h: &Hair, eval_images: &[&ImageRecord], cfg: &RapConfig) -> Result<HairError> {
    cfg.validate()?;
    let ident: HashSet<&str> = h.identification_image_ids.iter().map(String::as_str).collect();
    let overlap: Vec<String> = eval_images
        .iter()
        .filter(|im| ident.contains(im.image_id.as_str()))
        .map(|im| im.image_id.clone())
        .collect();
    if !overlap.is_empty() {
        return Err(Error::OverlappingImages(overlap));
    }
    let acc1 = images_rap(eval_images, |_| true, cfg);
    let acc2 = images_rap(eval_images, |b| h.contains_box(b), cfg);
    Ok(HairError { acc1, acc2, e: acc1 - acc2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ZeroRecallMode, EmptyRegionPolicy};

    #[test]
    fn path_display_and_parse() {
        let p: QuadPath = "SW.NE".parse().unwrap();
        assert_eq!(p.0, vec![Quadrant::SW, Quadrant::NE]);
        assert_eq!(p.to_string(), "SW.NE");
        assert_eq!("".parse::<QuadPath>().unwrap(), QuadPath::root());
        assert!("SW.XX".parse::<QuadPath>().is_err());
        assert!(QuadPath::root().is_ancestor_of(&p));
        assert!(!p.is_ancestor_of(&p));
        let r = p.rect_in(&Rect::new(0.0, 0.0, 100.0, 100.0)).unwrap();
        assert_eq!(r, Rect::new(25.0, 50.0, 25.0, 25.0));
    }

    /// 100x100 camera. Bottom half: detected perfectly. Top half: missed.
    fn bottom_half() -> CameraDataset {
        let images = (0..4)
            .map(|i| ImageRecord {
                image_id: format!("img{i}"),
                ground_truth: vec![
                    BBox::gt(10.0, 10.0, 10.0, 10.0),
                    BBox::gt(70.0, 20.0, 10.0, 10.0),
                    BBox::gt(10.0, 70.0, 10.0, 10.0),
                    BBox::gt(70.0, 80.0, 10.0, 10.0),
                ],
                detections: vec![
                    BBox::det(10.0, 70.0, 10.0, 10.0, 0.9),
                    BBox::det(70.0, 80.0, 10.0, 10.0, 0.8),
                ],
            })
            .collect();
        CameraDataset { camera_id: "c".into(), width: 100.0, height: 100.0, images }
    }

    #[test]
    fn bottom_half_perfect_gives_two_lower_quadrants() {
        let d = bottom_half();
        let h = identify_hair(&d, &d.image_ids(), &RapConfig::default(), 1).unwrap();
        assert_eq!(h.leaf_paths(), vec!["SW", "SE"]);
        assert!(h.leaves.iter().all(|l| l.rap == Some(1.0)));
        h.check_integrity().unwrap();
    }

    #[test]
    fn root_accepted_when_whole_extent_is_accurate() {
        let mut d = bottom_half();
        for im in &mut d.images {
            im.ground_truth.truncate(0);
            im.ground_truth.push(BBox::gt(10.0, 70.0, 10.0, 10.0));
            im.ground_truth.push(BBox::gt(70.0, 80.0, 10.0, 10.0));
        }
        let h = identify_hair(&d, &d.image_ids(), &RapConfig::default(), 3).unwrap();
        assert_eq!(h.leaf_paths(), vec![""]);
    }

    #[test]
    fn depth_zero_with_failing_root_is_empty() {
        let d = bottom_half();
        let h = identify_hair(&d, &d.image_ids(), &RapConfig::default(), 0).unwrap();
        assert!(h.leaves.is_empty());
    }

    #[test]
    fn empty_regions_follow_policy() {
        let d = bottom_half();
        // NE/NW hold only missed vehicles; split to depth 2 leaves empty cells
        let include = RapConfig::default().with_policy(EmptyRegionPolicy::Include);
        let h = identify_hair(&d, &d.image_ids(), &include, 2).unwrap();
        assert!(h.leaves.iter().any(|l| l.rap.is_none()));
        let h = identify_hair(&d, &d.image_ids(), &RapConfig::default(), 2).unwrap();
        assert!(h.leaves.iter().all(|l| l.rap.is_some()));
    }

    #[test]
    fn rap_equal_to_threshold_is_not_accepted() {
        // one TP, one FN -> counted RAP = (6 * 1) / 11 = 0.5454..., use a0 at that value
        let d = CameraDataset {
            camera_id: "c".into(),
            width: 100.0,
            height: 100.0,
            images: vec![ImageRecord {
                image_id: "a".into(),
                ground_truth: vec![BBox::gt(10.0, 10.0, 10.0, 10.0), BBox::gt(60.0, 60.0, 10.0, 10.0)],
                detections: vec![BBox::det(10.0, 10.0, 10.0, 10.0, 0.9)],
            }],
        };
        let cfg = RapConfig::default().with_a0(6.0 / 11.0);
        let h = identify_hair(&d, &d.image_ids(), &cfg, 0).unwrap();
        assert!(h.leaves.is_empty());
        let cfg = RapConfig::default().with_a0(6.0 / 11.0 - 1e-9);
        let h = identify_hair(&d, &d.image_ids(), &cfg, 0).unwrap();
        assert_eq!(h.leaf_paths(), vec![""]);
    }

    #[test]
    fn identify_rejects_bad_input() {
        let d = bottom_half();
        assert!(matches!(identify_hair(&d, &[], &RapConfig::default(), 1), Err(Error::EmptySelection)));
        assert!(matches!(
            identify_hair(&d, &d.image_ids(), &RapConfig::default(), 7),
            Err(Error::DepthTooLarge { .. })
        ));
        assert!(matches!(
            identify_hair(&d, &["nope".to_string()], &RapConfig::default(), 1),
            Err(Error::UnknownImage(_))
        ));
    }

    #[test]
    fn hair_error_is_zero_for_whole_extent() {
        let d = bottom_half();
        let h = Hair {
            camera_id: "c".into(),
            extent: d.extent(),
            a0: 0.75,
            max_depth: 0,
            convention: RapConfig::default(),
            identification_image_ids: vec![],
            leaves: vec![QuadrantNode { path: QuadPath::root(), rect: d.extent(), depth: 0, rap: Some(1.0) }],
        };
        let eval: Vec<&ImageRecord> = d.images.iter().collect();
        let err = hair_error(&h, &eval, &RapConfig::default()).unwrap();
        assert_eq!(err.e, 0.0);
        assert_eq!(err.acc1, err.acc2);

        let empty = Hair { leaves: vec![], ..h.clone() };
        let err = hair_error(&empty, &eval, &RapConfig::default().with_mode(ZeroRecallMode::Zeroed)).unwrap();
        assert_eq!(err.acc2, 0.0);
        assert_eq!(err.e, err.acc1);

        let overlapping = Hair { identification_image_ids: vec!["img0".into()], ..h };
        assert!(matches!(
            hair_error(&overlapping, &eval, &RapConfig::default()),
            Err(Error::OverlappingImages(_))
        ));
    }

    #[test]
    fn straddling_box_tie_counts_as_inside() {
        let extent = Rect::new(0.0, 0.0, 100.0, 100.0);
        let h = Hair {
            camera_id: "c".into(),
            extent,
            a0: 0.75,
            max_depth: 1,
            convention: RapConfig::default(),
            identification_image_ids: vec![],
            leaves: vec![QuadrantNode {
                path: "SW".parse().unwrap(),
                rect: Rect::new(0.0, 50.0, 50.0, 50.0),
                depth: 1,
                rap: Some(1.0),
            }],
        };
        assert!(h.contains_box(&BBox::gt(10.0, 45.0, 10.0, 10.0)));
        assert!(!h.contains_box(&BBox::gt(10.0, 44.0, 10.0, 10.0)));
        // the part hanging outside the frame does not count against it
        assert!(h.contains_box(&BBox::gt(-30.0, 80.0, 40.0, 10.0)));
    }

    #[test]
    fn integrity_check_catches_tampering() {
        let d = bottom_half();
        let mut h = identify_hair(&d, &d.image_ids(), &RapConfig::default(), 1).unwrap();
        h.check_integrity().unwrap();
        h.leaves[0].rect.x += 1.0;
        assert!(matches!(h.check_integrity(), Err(Error::Integrity(_))));
    }
}

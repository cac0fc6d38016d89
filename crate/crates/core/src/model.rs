//! Shared domain types and dataset validation.
//!
//! Coordinates are image pixels with the origin at the top-left corner, x to
//! the right and y downward. They are stored as `f64` so that geometry coming
//! out of a homography composes without quantization.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned rectangle. Empty extents only appear as clip results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.w <= 0.0 || self.h <= 0.0
    }

    pub fn contains_point(&self, px: f64, py: f64) -> bool {
        px >= self.x && px <= self.right() && py >= self.y && py <= self.bottom()
    }
}

/// A vehicle bounding box. Detections carry a confidence score, ground truth
/// does not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl BBox {
    pub const fn gt(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h, score: None }
    }

    pub const fn det(x: f64, y: f64, w: f64, h: f64, score: f64) -> Self {
        Self { x, y, w, h, score: Some(score) }
    }

    pub fn rect(&self) -> Rect {
        Rect::new(self.x, self.y, self.w, self.h)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.w > 0.0 && self.h > 0.0)
    }

    /// Confidence used for ranking; ground-truth boxes rank as 0.
    pub fn score_or_zero(&self) -> f64 {
        self.score.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub ground_truth: Vec<BBox>,
    pub detections: Vec<BBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraDataset {
    pub camera_id: String,
    pub width: f64,
    pub height: f64,
    pub images: Vec<ImageRecord>,
}

impl CameraDataset {
    pub fn extent(&self) -> Rect {
        Rect::new(0.0, 0.0, self.width, self.height)
    }

    pub fn image(&self, image_id: &str) -> Option<&ImageRecord> {
        self.images.iter().find(|im| im.image_id == image_id)
    }

    pub fn image_ids(&self) -> Vec<String> {
        self.images.iter().map(|im| im.image_id.clone()).collect()
    }

    /// Resolves a list of ids to records, preserving the requested order.
    pub fn select(&self, image_ids: &[String]) -> Result<Vec<&ImageRecord>> {
        image_ids
            .iter()
            .map(|id| self.image(id).ok_or_else(|| Error::UnknownImage(id.clone())))
            .collect()
    }
}

/// How the recall level r = 0 enters the interpolated average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroRecallMode {
    /// Standard interpolation: p(0) is the maximum precision over the list.
    #[default]
    Counted,
    /// p(0) is forced to zero.
    Zeroed,
}

/// What happens to a region that holds no boxes at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmptyRegionPolicy {
    /// Accept the region into the HAIR.
    Include,
    /// Reject the region and do not split it further.
    #[default]
    Exclude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RapConfig {
    pub recall_levels: Vec<f64>,
    pub a0: f64,
    pub iou_threshold: f64,
    pub zero_recall_mode: ZeroRecallMode,
    pub empty_region_policy: EmptyRegionPolicy,
}

impl Default for RapConfig {
    fn default() -> Self {
        Self {
            recall_levels: eleven_point_levels(),
            a0: 0.75,
            iou_threshold: 0.5,
            zero_recall_mode: ZeroRecallMode::Counted,
            empty_region_policy: EmptyRegionPolicy::Exclude,
        }
    }
}

/// {0, 0.1, ..., 1.0}, each level computed as k / 10.
pub fn eleven_point_levels() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

impl RapConfig {
    pub fn with_a0(mut self, a0: f64) -> Self {
        self.a0 = a0;
        self
    }

    pub fn with_mode(mut self, mode: ZeroRecallMode) -> Self {
        self.zero_recall_mode = mode;
        self
    }

    pub fn with_policy(mut self, policy: EmptyRegionPolicy) -> Self {
        self.empty_region_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let levels = &self.recall_levels;
        if levels.len() < 2 {
            return Err(Error::Config("at least two recall levels are required".into()));
        }
        if levels[0] != 0.0 || levels[levels.len() - 1] != 1.0 {
            return Err(Error::Config("recall levels must start at 0 and end at 1".into()));
        }
        if levels.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::Config("recall levels must be non-decreasing".into()));
        }
        if !(0.0..1.0).contains(&self.a0) {
            return Err(Error::Config(format!("a0 must lie in [0, 1), got {}", self.a0)));
        }
        if !(self.iou_threshold > 0.0 && self.iou_threshold < 1.0) {
            return Err(Error::Config(format!(
                "iou_threshold must lie in (0, 1), got {}",
                self.iou_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoxKind {
    Gt,
    Det,
}

impl fmt::Display for BoxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoxKind::Gt => "ground_truth",
            BoxKind::Det => "detections",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationRule {
    DegenerateBox,
    OutsideExtent,
    NonFinite,
    MissingScore,
    ScoreOnGroundTruth,
    ScoreOutOfRange,
    DuplicateImageId,
    DegenerateExtent,
}

impl fmt::Display for ViolationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationRule::DegenerateBox => "degenerate box",
            ViolationRule::OutsideExtent => "outside extent",
            ViolationRule::NonFinite => "non-finite coordinate or score",
            ViolationRule::MissingScore => "detection missing score",
            ViolationRule::ScoreOnGroundTruth => "ground truth carries a score",
            ViolationRule::ScoreOutOfRange => "score outside [0, 1]",
            ViolationRule::DuplicateImageId => "duplicate image_id",
            ViolationRule::DegenerateExtent => "degenerate camera extent",
        })
    }
}

/// One broken rule, located by image and box.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub image_id: Option<String>,
    pub kind: Option<BoxKind>,
    pub index: Option<usize>,
    pub rule: ViolationRule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.image_id, self.kind, self.index) {
            (Some(id), Some(kind), Some(i)) => write!(f, "image `{id}` {kind}[{i}]: {}", self.rule),
            (Some(id), _, _) => write!(f, "image `{id}`: {}", self.rule),
            _ => write!(f, "dataset: {}", self.rule),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn has(&self, rule: ViolationRule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  {v}")?;
        }
        Ok(())
    }
}

fn box_violations(b: &BBox, kind: BoxKind, extent: Option<Rect>) -> Vec<ViolationRule> {
    let mut rules = Vec::new();
    let finite = [b.x, b.y, b.w, b.h].iter().all(|v| v.is_finite())
        && b.score.map_or(true, f64::is_finite);
    if !finite {
        rules.push(ViolationRule::NonFinite);
        return rules;
    }
    if b.is_degenerate() {
        rules.push(ViolationRule::DegenerateBox);
    } else if let Some(extent) = extent {
        if crate::geometry::intersection_area(&b.rect(), &extent) <= 0.0 {
            rules.push(ViolationRule::OutsideExtent);
        }
    }
    match (kind, b.score) {
        (BoxKind::Det, None) => rules.push(ViolationRule::MissingScore),
        (BoxKind::Det, Some(s)) if !(0.0..=1.0).contains(&s) => {
            rules.push(ViolationRule::ScoreOutOfRange)
        }
        (BoxKind::Gt, Some(_)) => rules.push(ViolationRule::ScoreOnGroundTruth),
        _ => {}
    }
    rules
}

/// Checks every dataset invariant. Returns the dataset untouched when it is
/// well formed, otherwise the full list of violations.
pub fn validate_dataset(d: CameraDataset) -> std::result::Result<CameraDataset, ValidationReport> {
    let mut report = ValidationReport::default();
    let extent_ok = d.width.is_finite() && d.height.is_finite() && d.width > 0.0 && d.height > 0.0;
    if !extent_ok {
        report.violations.push(Violation {
            image_id: None,
            kind: None,
            index: None,
            rule: ViolationRule::DegenerateExtent,
        });
    }
    let extent = extent_ok.then(|| d.extent());

    let mut seen = HashSet::new();
    for image in &d.images {
        if !seen.insert(image.image_id.as_str()) {
            report.violations.push(Violation {
                image_id: Some(image.image_id.clone()),
                kind: None,
                index: None,
                rule: ViolationRule::DuplicateImageId,
            });
        }
        for (kind, boxes) in [(BoxKind::Gt, &image.ground_truth), (BoxKind::Det, &image.detections)] {
            for (index, b) in boxes.iter().enumerate() {
                for rule in box_violations(b, kind, extent) {
                    report.violations.push(Violation {
                        image_id: Some(image.image_id.clone()),
                        kind: Some(kind),
                        index: Some(index),
                        rule,
                    });
                }
            }
        }
    }

    if report.violations.is_empty() {
        Ok(d)
    } else {
        Err(report)
    }
}

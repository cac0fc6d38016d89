//! Traffic density over the full extent and over the HAIR.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{clip_polyline_length, estimate_homography, Gcp, Homography, Polyline};
use crate::model::{CameraDataset, Rect};
use crate::quadtree::Hair;
use crate::resampling::rmse;

/// Roads visible to one camera, optionally georeferenced.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadSet {
    pub roads: Vec<Polyline>,
    pub gcps: Option<Vec<Gcp>>,
    /// Label of the world unit (or "px" without control points).
    pub unit: String,
    /// Multiplier from the measured unit to the reporting unit.
    pub unit_scale: f64,
}

impl RoadSet {
    pub fn pixels(roads: Vec<Polyline>) -> Self {
        Self { roads, gcps: None, unit: "px".into(), unit_scale: 1.0 }
    }

    pub fn homography(&self) -> Result<Option<Homography>> {
        match &self.gcps {
            None => Ok(None),
            Some(g) => Ok(Some(estimate_homography(g, &self.unit)?.homography)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.unit_scale.is_finite() && self.unit_scale > 0.0) {
            return Err(Error::Config(format!("unit_scale must be positive, got {}", self.unit_scale)));
        }
        if let Some(g) = &self.gcps {
            if g.len() < 4 {
                return Err(Error::Config(format!("need at least 4 control points, got {}", g.len())));
            }
        }
        Ok(())
    }
}

/// Road length inside the union of `scope` (interior-disjoint rects), in
/// reporting units.
pub fn region_road_length(roads: &RoadSet, scope: &[Rect]) -> Result<f64> {
    let h = roads.homography()?;
    road_length_with(roads, scope, h.as_ref())
}

fn road_length_with(roads: &RoadSet, scope: &[Rect], h: Option<&Homography>) -> Result<f64> {
    let mut total = 0.0;
    for road in &roads.roads {
        for r in scope {
            total += clip_polyline_length(road, r, h)?;
        }
    }
    Ok(total * roads.unit_scale)
}

/// Vehicles per unit length.
pub fn estimate_density(vehicle_count: usize, road_length: f64) -> Result<f64> {
    if !(road_length > 0.0) {
        return Err(Error::NoRoad("scope".into()));
    }
    Ok(vehicle_count as f64 / road_length)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Full,
    Hair,
}

impl Scope {
    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Full => "full",
            Scope::Hair => "hair",
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityRow {
    pub image_id: String,
    pub scope: Scope,
    pub gt_count: usize,
    pub det_count: usize,
    pub observed: f64,
    pub predicted: f64,
    /// predicted - observed
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScopeSummary {
    pub scope: Scope,
    pub road_length: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityReport {
    pub unit: String,
    pub rows: Vec<DensityRow>,
    pub summaries: Vec<ScopeSummary>,
}

impl DensityReport {
    pub fn rmse(&self, scope: Scope) -> Option<f64> {
        self.summaries.iter().find(|s| s.scope == scope).map(|s| s.rmse)
    }
}

/// Observed density counts ground truth, predicted density counts
/// detections, both over the road length of the scope. Membership in the
/// HAIR scope uses [`Hair::contains_box`].
pub fn evaluate_density(
    d: &CameraDataset,
    eval_image_ids: &[String],
    hair: Option<&Hair>,
    roads: &RoadSet,
) -> Result<DensityReport> {
    roads.validate()?;
    if eval_image_ids.is_empty() {
        return Err(Error::EmptySelection);
    }
    let images = d.select(eval_image_ids)?;
    let h = roads.homography()?;

    let mut scopes: Vec<(Scope, f64)> = vec![(Scope::Full, road_length_with(roads, &[d.extent()], h.as_ref())?)];
    if let Some(hair) = hair {
        scopes.push((Scope::Hair, road_length_with(roads, &hair.leaf_rects(), h.as_ref())?));
    }

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (scope, length) in scopes {
        if !(length > 0.0) {
            return Err(Error::NoRoad(scope.to_string()));
        }
        let mut errors = Vec::with_capacity(images.len());
        for im in &images {
            let (gt_count, det_count) = match (scope, hair) {
                (Scope::Hair, Some(hair)) => (
                    im.ground_truth.iter().filter(|b| hair.contains_box(b)).count(),
                    im.detections.iter().filter(|b| hair.contains_box(b)).count(),
                ),
                _ => (im.ground_truth.len(), im.detections.len()),
            };
            let observed = estimate_density(gt_count, length)?;
            let predicted = estimate_density(det_count, length)?;
            let error = predicted - observed;
            errors.push(error);
            rows.push(DensityRow {
                image_id: im.image_id.clone(),
                scope,
                gt_count,
                det_count,
                observed,
                predicted,
                error,
            });
        }
        summaries.push(ScopeSummary { scope, road_length: length, rmse: rmse(&errors)? });
    }
    Ok(DensityReport { unit: roads.unit.clone(), rows, summaries })
}

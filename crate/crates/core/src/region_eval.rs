//! Region assignment, per-image detection matching and the regional average
//! precision (RAP).

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::{intersection_area, iou_unchecked};
use crate::model::{BBox, RapConfig, Rect, ZeroRecallMode};

/// Region index for every box, in input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionAssignment {
    pub region_of: Vec<usize>,
}

/// Region with the largest overlap; ties go to the lowest index. `None` when
/// the box overlaps no region.
pub fn assign_box(b: &Rect, regions: &[Rect]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in regions.iter().enumerate() {
        let a = intersection_area(b, r);
        if a > 0.0 && best.map_or(true, |(_, ba)| a > ba) {
            best = Some((i, a));
        }
    }
    best.map(|(i, _)| i)
}

pub fn assign_to_regions(boxes: &[BBox], regions: &[Rect]) -> Result<RegionAssignment> {
    let region_of = boxes
        .iter()
        .enumerate()
        .map(|(i, b)| assign_box(&b.rect(), regions).ok_or(Error::Unassigned(i)))
        .collect::<Result<_>>()?;
    Ok(RegionAssignment { region_of })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionOutcome {
    /// Index of the detection in the input slice.
    pub index: usize,
    pub score: f64,
    pub is_tp: bool,
    pub matched_gt: Option<usize>,
}

/// Matching result for one (region, image) pair. `detections` is in input
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageOutcomes {
    pub detections: Vec<DetectionOutcome>,
    pub n_gt: usize,
}

impl ImageOutcomes {
    pub fn n_tp(&self) -> usize {
        self.detections.iter().filter(|d| d.is_tp).count()
    }

    pub fn n_fp(&self) -> usize {
        self.detections.len() - self.n_tp()
    }

    pub fn n_fn(&self) -> usize {
        self.n_gt - self.n_tp()
    }
}

fn by_score_desc(a: f64, b: f64) -> Ordering {
    b.total_cmp(&a)
}

/// Greedy one-to-one matching. Detections are visited by descending score
/// (input index breaks ties); each takes the still-unmatched ground truth of
/// highest IoU (lowest index on ties) and is a true positive iff that IoU
/// strictly exceeds the threshold.
pub fn match_region_image(gt: &[BBox], det: &[BBox], cfg: &RapConfig) -> ImageOutcomes {
    let gt: Vec<&BBox> = gt.iter().collect();
    let det: Vec<&BBox> = det.iter().collect();
    match_refs(&gt, &det, cfg.iou_threshold)
}

pub(crate) fn match_refs(gt: &[&BBox], det: &[&BBox], iou_threshold: f64) -> ImageOutcomes {
    let mut order: Vec<usize> = (0..det.len()).collect();
    order.sort_by(|&a, &b| {
        by_score_desc(det[a].score_or_zero(), det[b].score_or_zero()).then(a.cmp(&b))
    });

    let gt_rects: Vec<Rect> = gt.iter().map(|g| g.rect()).collect();
    let mut taken = vec![false; gt.len()];
    let mut outcomes: Vec<DetectionOutcome> = det
        .iter()
        .enumerate()
        .map(|(index, d)| DetectionOutcome {
            index,
            score: d.score_or_zero(),
            is_tp: false,
            matched_gt: None,
        })
        .collect();

    for di in order {
        let dr = det[di].rect();
        let mut best: Option<(usize, f64)> = None;
        for (gi, gr) in gt_rects.iter().enumerate() {
            if taken[gi] {
                continue;
            }
            let v = iou_unchecked(&dr, gr);
            if best.map_or(true, |(_, bv)| v > bv) {
                best = Some((gi, v));
            }
        }
        if let Some((gi, v)) = best {
            if v > iou_threshold {
                taken[gi] = true;
                outcomes[di].is_tp = true;
                outcomes[di].matched_gt = Some(gi);
            }
        }
    }
    ImageOutcomes { detections: outcomes, n_gt: gt.len() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedOutcome {
    pub score: f64,
    pub is_tp: bool,
}

/// Confidence-ranked outcomes of a compiled region plus its ground-truth
/// count.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedOutcomes {
    pub outcomes: Vec<RankedOutcome>,
    pub n_gt: usize,
}

impl RankedOutcomes {
    /// Builds a list directly from flags already in rank order.
    pub fn from_flags(flags: &[bool], n_gt: usize) -> Self {
        let n = flags.len().max(1) as f64;
        let outcomes = flags
            .iter()
            .enumerate()
            .map(|(i, &is_tp)| RankedOutcome { score: 1.0 - i as f64 / n, is_tp })
            .collect();
        Self { outcomes, n_gt }
    }

    pub fn n_tp(&self) -> usize {
        self.outcomes.iter().filter(|o| o.is_tp).count()
    }
}

/// Pools per-image outcomes of one region into a single ranked list ordered
/// by (score desc, image id asc, detection index asc).
pub fn compile_ranked<'a, I>(images: I) -> RankedOutcomes
where
    I: IntoIterator<Item = (&'a str, &'a ImageOutcomes)>,
{
    let mut keyed: Vec<(&str, DetectionOutcome)> = Vec::new();
    let mut n_gt = 0;
    for (id, im) in images {
        n_gt += im.n_gt;
        keyed.extend(im.detections.iter().map(|d| (id, *d)));
    }
    keyed.sort_by(|(ia, a), (ib, b)| {
        by_score_desc(a.score, b.score).then_with(|| ia.cmp(ib)).then(a.index.cmp(&b.index))
    });
    RankedOutcomes {
        outcomes: keyed
            .into_iter()
            .map(|(_, d)| RankedOutcome { score: d.score, is_tp: d.is_tp })
            .collect(),
        n_gt,
    }
}

/// Interpolated precision at every configured recall level:
/// max precision over positions whose recall reaches the level, 0 if none.
pub fn interpolated_precisions(ranked: &RankedOutcomes, levels: &[f64]) -> Vec<f64> {
    let n = ranked.outcomes.len();
    let mut precision = Vec::with_capacity(n);
    let mut recall = Vec::with_capacity(n);
    let mut tp = 0usize;
    for (i, o) in ranked.outcomes.iter().enumerate() {
        tp += o.is_tp as usize;
        precision.push(tp as f64 / (i + 1) as f64);
        recall.push(if ranked.n_gt == 0 { 0.0 } else { tp as f64 / ranked.n_gt as f64 });
    }
    let mut suffix_max = precision.clone();
    for i in (0..n.saturating_sub(1)).rev() {
        suffix_max[i] = suffix_max[i].max(suffix_max[i + 1]);
    }
    levels
        .iter()
        .map(|&r| {
            if ranked.n_gt == 0 {
                return 0.0;
            }
            // recall is non-decreasing, so every later position also reaches r
            let first = recall.partition_point(|&ri| ri < r);
            if first < n {
                suffix_max[first]
            } else {
                0.0
            }
        })
        .collect()
}

/// Regional average precision. `None` when the region holds neither ground
/// truth nor detections.
pub fn rap(ranked: &RankedOutcomes, cfg: &RapConfig) -> Option<f64> {
    if ranked.n_gt == 0 {
        return if ranked.outcomes.is_empty() { None } else { Some(0.0) };
    }
    let mut p = interpolated_precisions(ranked, &cfg.recall_levels);
    if cfg.zero_recall_mode == ZeroRecallMode::Zeroed {
        p[0] = 0.0;
    }
    Some(p.iter().sum::<f64>() / p.len() as f64)
}

/// Precision and recall over the whole list; `None` where the denominator is
/// zero.
pub fn precision_recall(ranked: &RankedOutcomes) -> (Option<f64>, Option<f64>) {
    let tp = ranked.n_tp() as f64;
    let n_det = ranked.outcomes.len();
    let precision = (n_det > 0).then(|| tp / n_det as f64);
    let recall = (ranked.n_gt > 0).then(|| tp / ranked.n_gt as f64);
    (precision, recall)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quadrants() -> Vec<Rect> {
        crate::geometry::split_quadrants(&Rect::new(0.0, 0.0, 100.0, 100.0)).unwrap().to_vec()
    }

    #[test]
    fn assignment_examples() {
        let q = quadrants();
        assert_eq!(assign_box(&Rect::new(5.0, 5.0, 10.0, 10.0), &q), Some(0));
        // equal quarter overlaps: lowest index wins
        assert_eq!(assign_box(&Rect::new(45.0, 45.0, 10.0, 10.0), &q), Some(0));
        // overlaps: NW 10x2 = 20, NE 0, SW 10x8 = 80, SE 0
        let b = Rect::new(40.0, 48.0, 10.0, 10.0);
        let areas: Vec<f64> = q.iter().map(|r| intersection_area(&b, r)).collect();
        assert_eq!(areas, vec![20.0, 0.0, 80.0, 0.0]);
        assert_eq!(assign_box(&b, &q), Some(2));

        let boxes = [BBox::gt(200.0, 200.0, 5.0, 5.0)];
        assert!(matches!(assign_to_regions(&boxes, &q), Err(Error::Unassigned(0))));
    }

    #[test]
    fn matching_examples() {
        let cfg = RapConfig::default();
        let gt = [BBox::gt(0.0, 0.0, 10.0, 10.0)];
        let m = match_region_image(&gt, &[BBox::det(1.0, 1.0, 10.0, 10.0, 0.9)], &cfg);
        assert!(m.detections[0].is_tp);
        assert_abs_diff_eq!(
            iou_unchecked(&gt[0].rect(), &Rect::new(1.0, 1.0, 10.0, 10.0)),
            81.0 / 119.0,
            epsilon = 1e-15
        );

        let m = match_region_image(&gt, &[BBox::det(8.0, 8.0, 10.0, 10.0, 0.9)], &cfg);
        assert!(!m.detections[0].is_tp);
        assert_eq!((m.n_tp(), m.n_fp(), m.n_fn()), (0, 1, 1));

        let gt3 = [gt[0], BBox::gt(20.0, 0.0, 5.0, 5.0), BBox::gt(40.0, 0.0, 5.0, 5.0)];
        let m = match_region_image(&gt3, &[], &cfg);
        assert_eq!((m.n_tp(), m.n_fp(), m.n_fn()), (0, 0, 3));
    }

    #[test]
    fn iou_of_exactly_half_is_a_false_positive() {
        // intersection 10x10 = 100, union 100 + 200 - 100 = 200
        let gt = [BBox::gt(0.0, 0.0, 10.0, 20.0)];
        let det = [BBox::det(0.0, 0.0, 10.0, 10.0, 0.5)];
        let m = match_region_image(&gt, &det, &RapConfig::default());
        assert!(!m.detections[0].is_tp);
    }

    #[test]
    fn higher_score_claims_the_ground_truth_first() {
        let gt = [BBox::gt(0.0, 0.0, 10.0, 10.0)];
        let det = [BBox::det(0.0, 0.0, 10.0, 10.0, 0.4), BBox::det(1.0, 0.0, 10.0, 10.0, 0.8)];
        let m = match_region_image(&gt, &det, &RapConfig::default());
        assert!(!m.detections[0].is_tp);
        assert!(m.detections[1].is_tp);
        // equal scores: input order decides
        let det = [BBox::det(1.0, 0.0, 10.0, 10.0, 0.5), BBox::det(0.0, 0.0, 10.0, 10.0, 0.5)];
        let m = match_region_image(&gt, &det, &RapConfig::default());
        assert!(m.detections[0].is_tp && !m.detections[1].is_tp);
    }

    fn outcomes(scores: &[f64]) -> ImageOutcomes {
        ImageOutcomes {
            detections: scores
                .iter()
                .enumerate()
                .map(|(index, &score)| DetectionOutcome { index, score, is_tp: true, matched_gt: None })
                .collect(),
            n_gt: scores.len(),
        }
    }

    #[test]
    fn compile_orders_by_score_then_image() {
        let one = outcomes(&[0.9, 0.8]);
        let r = compile_ranked([("a", &one)]);
        assert_eq!(r.outcomes.iter().map(|o| o.score).collect::<Vec<_>>(), vec![0.9, 0.8]);
        assert_eq!(r.n_gt, 2);

        let a = outcomes(&[0.9]);
        let b = outcomes(&[0.95]);
        let r = compile_ranked([("a", &a), ("b", &b)]);
        assert_eq!(r.outcomes.iter().map(|o| o.score).collect::<Vec<_>>(), vec![0.95, 0.9]);

        let mut a = outcomes(&[0.8]);
        a.detections[0].is_tp = false;
        let b = outcomes(&[0.8]);
        let r = compile_ranked([("b", &b), ("a", &a)]);
        assert!(!r.outcomes[0].is_tp, "image `a` ranks first on a tie");
    }

    fn figure3() -> RankedOutcomes {
        RankedOutcomes::from_flags(&[true, true, true, true, true, true, false], 10)
    }

    #[test]
    fn rap_examples() {
        let zeroed = RapConfig::default().with_mode(ZeroRecallMode::Zeroed);
        let counted = RapConfig::default();
        assert_abs_diff_eq!(rap(&figure3(), &zeroed).unwrap(), 6.0 / 11.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rap(&figure3(), &counted).unwrap(), 7.0 / 11.0, epsilon = 1e-15);

        let perfect = RankedOutcomes::from_flags(&[true; 4], 4);
        assert_eq!(rap(&perfect, &counted), Some(1.0));
        assert_eq!(rap(&RankedOutcomes { outcomes: vec![], n_gt: 3 }, &counted), Some(0.0));
        assert_eq!(rap(&RankedOutcomes::default(), &counted), None);
        assert_eq!(rap(&RankedOutcomes::from_flags(&[false], 0), &counted), Some(0.0));
    }

    #[test]
    fn precision_recall_examples() {
        let (p, r) = precision_recall(&figure3());
        assert_abs_diff_eq!(p.unwrap(), 6.0 / 7.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.unwrap(), 0.6, epsilon = 1e-15);
        assert_eq!(precision_recall(&RankedOutcomes::from_flags(&[true; 3], 3)), (Some(1.0), Some(1.0)));
        assert_eq!(precision_recall(&RankedOutcomes { outcomes: vec![], n_gt: 5 }), (None, Some(0.0)));
    }
}

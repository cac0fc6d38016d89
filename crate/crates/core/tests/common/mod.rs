#![allow(dead_code)]

use hair_core::geometry::{intersection_area, split_quadrants};
use hair_core::synth::{DetectCurve, ScoreModel, SynthSpec};
use hair_core::{BBox, CameraDataset, ImageRecord, RapConfig, Rect, ZeroRecallMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Ten vehicles over three 704x480 frames. Ranked detections: six true
/// positives, then one false positive. All but the sixth true positive and
/// the false positive sit in the lower half of the frame.
pub fn ten_vehicle_dataset() -> CameraDataset {
    let hit = |x: f64, y: f64, s: f64| (BBox::gt(x, y, 60.0, 45.0), Some(BBox::det(x, y, 60.0, 45.0, s)));
    let miss = |x: f64, y: f64| (BBox::gt(x, y, 20.0, 15.0), None);
    let image = |id: &str, items: Vec<(BBox, Option<BBox>)>, extra: Vec<BBox>| {
        let mut det: Vec<BBox> = items.iter().filter_map(|(_, d)| *d).collect();
        det.extend(extra);
        ImageRecord {
            image_id: id.into(),
            ground_truth: items.into_iter().map(|(g, _)| g).collect(),
            detections: det,
        }
    };
    CameraDataset {
        camera_id: "ten".into(),
        width: 704.0,
        height: 480.0,
        images: vec![
            image(
                "a",
                vec![hit(100.0, 300.0, 0.95), hit(500.0, 320.0, 0.85), miss(200.0, 60.0)],
                vec![BBox::det(400.0, 400.0, 40.0, 30.0, 0.60)],
            ),
            image(
                "b",
                vec![hit(300.0, 350.0, 0.90), hit(150.0, 100.0, 0.70), miss(600.0, 50.0)],
                vec![],
            ),
            image(
                "c",
                vec![hit(50.0, 380.0, 0.80), hit(450.0, 280.0, 0.75), miss(300.0, 30.0), miss(500.0, 120.0)],
                vec![],
            ),
        ],
    }
}

/// Random small camera for equivalence and invariant checks.
pub fn random_spec(rng: &mut ChaCha8Rng) -> SynthSpec {
    let width = rng.random_range(48..=320) as f64;
    let height = rng.random_range(48..=320) as f64;
    let pt = |rng: &mut ChaCha8Rng| [rng.random_range(0.0..width), rng.random_range(0.0..height)];
    let mut road = vec![pt(rng), pt(rng)];
    while road[0] == road[1] {
        road[1] = pt(rng);
    }
    let size_far = rng.random_range(3.0..15.0);
    let size_near = size_far + rng.random_range(0.0..30.0);
    let detect_prob = match rng.random_range(0..3) {
        0 => DetectCurve::Constant { p: rng.random_range(0.0..=1.0) },
        1 => DetectCurve::Step {
            size: rng.random_range(size_far..=size_near),
            below: rng.random_range(0.0..=1.0),
            above: rng.random_range(0.0..=1.0),
        },
        _ => DetectCurve::Piecewise {
            points: vec![[size_far, rng.random_range(0.0..=1.0)], [size_near + 1.0, rng.random_range(0.0..=1.0)]],
        },
    };
    SynthSpec {
        camera_id: "random".into(),
        width,
        height,
        road,
        lateral_spread: rng.random_range(0.0..width / 2.0),
        vehicles_per_image: rng.random_range(0.0..8.0),
        size_near,
        size_far,
        aspect: rng.random_range(0.5..1.5),
        detect_prob,
        fp_rate: rng.random_range(0.0..2.0),
        localization_jitter: rng.random_range(0.0..4.0),
        score: ScoreModel {
            far: rng.random_range(0.0..=1.0),
            near: rng.random_range(0.0..=1.0),
            noise: rng.random_range(0.0..0.3),
            false_positive: rng.random_range(0.0..=1.0),
        },
        seed: rng.random(),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// Straightforward reference implementations, written without reusing the
// library's matching or ranking code.

/// Quadrant indices a box follows down to `depth`.
pub fn descend(b: &Rect, extent: Rect, depth: usize) -> Vec<usize> {
    let mut cur = extent;
    let mut path = Vec::new();
    for _ in 0..depth {
        let children = split_quadrants(&cur).unwrap();
        let mut best = 0;
        for k in 1..4 {
            if intersection_area(b, &children[k]) > intersection_area(b, &children[best]) {
                best = k;
            }
        }
        path.push(best);
        cur = children[best];
    }
    path
}

pub fn reference_rap(images: &[(String, Vec<BBox>, Vec<BBox>)], cfg: &RapConfig) -> Option<f64> {
    let n_gt: usize = images.iter().map(|i| i.1.len()).sum();
    let mut hits: Vec<(f64, String, usize, bool)> = Vec::new();
    for (id, gt, det) in images {
        let mut order: Vec<usize> = (0..det.len()).collect();
        order.sort_by(|&a, &b| det[b].score_or_zero().total_cmp(&det[a].score_or_zero()).then(a.cmp(&b)));
        let mut used = vec![false; gt.len()];
        for &k in &order {
            let r = det[k].rect();
            let mut best: Option<(usize, f64)> = None;
            for (g, gb) in gt.iter().enumerate() {
                if used[g] {
                    continue;
                }
                let inter = intersection_area(&r, &gb.rect());
                let v = inter / (r.area() + gb.area() - inter);
                if best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((g, v));
                }
            }
            let tp = matches!(best, Some((_, v)) if v > cfg.iou_threshold);
            if tp {
                used[best.unwrap().0] = true;
            }
            hits.push((det[k].score_or_zero(), id.clone(), k, tp));
        }
    }
    if n_gt == 0 {
        return if hits.is_empty() { None } else { Some(0.0) };
    }
    hits.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut tp = 0;
    let pr: Vec<(f64, f64)> = hits
        .iter()
        .enumerate()
        .map(|(i, h)| {
            tp += h.3 as usize;
            (tp as f64 / (i + 1) as f64, tp as f64 / n_gt as f64)
        })
        .collect();
    let mut total = 0.0;
    for (li, &level) in cfg.recall_levels.iter().enumerate() {
        let mut best = pr.iter().filter(|p| p.1 >= level).map(|p| p.0).fold(0.0, f64::max);
        if li == 0 && cfg.zero_recall_mode == ZeroRecallMode::Zeroed {
            best = 0.0;
        }
        total += best;
    }
    Some(total / cfg.recall_levels.len() as f64)
}

/// Per-image boxes whose descent starts with `path`.
pub fn node_scope(d: &CameraDataset, ids: &[String], path: &[usize]) -> Vec<(String, Vec<BBox>, Vec<BBox>)> {
    let inside = |b: &BBox| descend(&b.rect(), d.extent(), path.len()) == path;
    ids.iter()
        .map(|id| {
            let im = d.image(id).unwrap();
            (
                id.clone(),
                im.ground_truth.iter().copied().filter(|b| inside(b)).collect(),
                im.detections.iter().copied().filter(|b| inside(b)).collect(),
            )
        })
        .collect()
}

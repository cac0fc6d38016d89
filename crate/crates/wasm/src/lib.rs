//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export takes plain numbers or strings and returns a JSON string, so
//! the page needs no generated TypeScript types. The same functions are
//! available natively (without the `js_` prefix) for tests.

use std::fmt::Write;

use hair_core::density::{evaluate_density, RoadSet, Scope};
use hair_core::region_eval::{interpolated_precisions, rap, RankedOutcomes};
use hair_core::render::{render_svg, RenderOptions};
use hair_core::synth::{generate_camera, SynthSpec};
use hair_core::{hair_error, trace_hair, RapConfig, ZeroRecallMode};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn cfg(a0: f64, zeroed: bool) -> RapConfig {
    let mode = if zeroed { ZeroRecallMode::Zeroed } else { ZeroRecallMode::Counted };
    RapConfig::default().with_a0(a0).with_mode(mode)
}

fn spec(seed: u64, perfect: bool) -> SynthSpec {
    let base = if perfect { SynthSpec::perfect_detector() } else { SynthSpec::degraded_camera() };
    SynthSpec { seed, ..base }
}

/// Generates `n_ident + 1` images of the degraded camera, identifies the
/// HAIR on the first `n_ident` and draws it over the last one.
pub fn identify_demo(n_ident: usize, a0: f64, max_depth: usize, zeroed: bool, seed: u64) -> Result<String, String> {
    let s = spec(seed, false);
    let d = generate_camera(&s, n_ident + 1).map_err(|e| e.to_string())?;
    let ids = d.image_ids();
    let (ident, shown) = ids.split_at(n_ident);
    let c = cfg(a0, zeroed);
    let (hair, visited) = trace_hair(&d, ident, &c, max_depth).map_err(|e| e.to_string())?;
    let roads = RoadSet::pixels(vec![s.polyline().map_err(|e| e.to_string())?]);
    let opts = RenderOptions { hair: Some(&hair), roads: Some(&roads), background_href: None };
    let svg = render_svg(&d, &shown[0], &c, &opts).map_err(|e| e.to_string())?;
    let leaves: Vec<_> = hair
        .leaves
        .iter()
        .map(|l| json!({ "path": l.path.to_string(), "depth": l.depth, "rap": l.rap, "rect": l.rect }))
        .collect();
    Ok(json!({
        "svg": svg,
        "leaves": leaves,
        "visited": visited.len(),
        "coverage": hair.covered_area() / d.extent().area(),
    })
    .to_string())
}

/// RAP of a ranked list written as `T`/`F` characters (other characters are
/// ignored), with `n_gt` ground truths in the region.
pub fn rap_calculator(sequence: &str, n_gt: usize) -> Result<String, String> {
    let flags: Vec<bool> = sequence
        .chars()
        .filter_map(|c| match c.to_ascii_uppercase() {
            'T' => Some(true),
            'F' => Some(false),
            _ => None,
        })
        .collect();
    let n_tp = flags.iter().filter(|f| **f).count();
    if n_gt < n_tp {
        return Err(format!("{n_tp} true positives but only {n_gt} ground truths"));
    }
    let ranked = RankedOutcomes::from_flags(&flags, n_gt);
    let counted = rap(&ranked, &cfg(0.75, false));
    let zeroed = rap(&ranked, &cfg(0.75, true));
    let levels = RapConfig::default().recall_levels;
    let interpolated = interpolated_precisions(&ranked, &levels);

    let mut tp = 0;
    let points: Vec<(f64, f64)> = flags
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            tp += f as usize;
            let recall = if n_gt == 0 { 0.0 } else { tp as f64 / n_gt as f64 };
            (recall, tp as f64 / (i + 1) as f64)
        })
        .collect();
    Ok(json!({
        "counted": counted,
        "zeroed": zeroed,
        "interpolated": interpolated,
        "points": points,
        "svg": pr_curve_svg(&points, &levels, &interpolated),
    })
    .to_string())
}

fn pr_curve_svg(points: &[(f64, f64)], levels: &[f64], interpolated: &[f64]) -> String {
    const S: f64 = 260.0;
    const M: f64 = 30.0;
    let px = |r: f64| M + r * S;
    let py = |p: f64| M + (1.0 - p) * S;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {w}" width="{w}" height="{w}" font-size="10">"##,
        w = S + 2.0 * M
    );
    let _ = writeln!(out, r##"  <rect x="{M}" y="{M}" width="{S}" height="{S}" fill="none" stroke="#333"/>"##);
    for k in 0..=10 {
        let v = k as f64 / 10.0;
        let _ = writeln!(out, r##"  <text x="{}" y="{}" text-anchor="middle">{v}</text>"##, px(v), M + S + 14.0);
        let _ = writeln!(out, r##"  <text x="{}" y="{}" text-anchor="end">{v}</text>"##, M - 4.0, py(v) + 3.0);
    }
    let _ = writeln!(out, r##"  <text x="{}" y="{}" text-anchor="middle">recall</text>"##, px(0.5), M + S + 28.0);
    let _ = writeln!(out, r##"  <text x="10" y="{}" transform="rotate(-90 10 {})" text-anchor="middle">precision</text>"##, py(0.5), py(0.5));
    if !points.is_empty() {
        let path: Vec<String> = points.iter().map(|&(r, p)| format!("{:.2},{:.2}", px(r), py(p))).collect();
        let _ = writeln!(out, r##"  <polyline points="{}" fill="none" stroke="#1f5fbf" stroke-width="1.5"/>"##, path.join(" "));
        for &(r, p) in points {
            let _ = writeln!(out, r##"  <circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#1f5fbf"/>"##, px(r), py(p));
        }
    }
    for (&r, &p) in levels.iter().zip(interpolated) {
        let _ = writeln!(
            out,
            r##"  <rect x="{:.2}" y="{:.2}" width="6" height="6" fill="#d62728"><title>r={r}: {p:.3}</title></rect>"##,
            px(r) - 3.0,
            py(p) - 3.0
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Identifies a HAIR on `n_ident` images and compares density errors on the
/// next `n_eval` images for the degraded and the perfect detector.
pub fn density_compare(n_ident: usize, n_eval: usize, a0: f64, max_depth: usize, seed: u64) -> Result<String, String> {
    let mut rows = Vec::new();
    for perfect in [false, true] {
        let s = spec(seed, perfect);
        let d = generate_camera(&s, n_ident + n_eval).map_err(|e| e.to_string())?;
        let ids = d.image_ids();
        let (ident, eval) = ids.split_at(n_ident);
        let c = cfg(a0, false);
        let (hair, _) = trace_hair(&d, ident, &c, max_depth).map_err(|e| e.to_string())?;
        let roads = RoadSet::pixels(vec![s.polyline().map_err(|e| e.to_string())?]);
        let report = evaluate_density(&d, eval, Some(&hair), &roads).map_err(|e| e.to_string())?;
        let holdout = d.select(eval).map_err(|e| e.to_string())?;
        let err = hair_error(&hair, &holdout, &c).map_err(|e| e.to_string())?;
        let length = |scope| report.summaries.iter().find(|x| x.scope == scope).map(|x| x.road_length);
        rows.push(json!({
            "detector": if perfect { "perfect" } else { "degraded" },
            "full_rmse": report.rmse(Scope::Full),
            "hair_rmse": report.rmse(Scope::Hair),
            "full_road_length": length(Scope::Full),
            "hair_road_length": length(Scope::Hair),
            "acc1": err.acc1,
            "acc2": err.acc2,
            "e": err.e,
            "unit": report.unit,
        }));
    }
    Ok(json!({ "rows": rows }).to_string())
}

fn js<T>(r: Result<T, String>) -> Result<T, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = identifyDemo)]
pub fn js_identify_demo(n_ident: u32, a0: f64, max_depth: u32, zeroed: bool, seed: u32) -> Result<String, JsValue> {
    js(identify_demo(n_ident as usize, a0, max_depth as usize, zeroed, seed as u64))
}

#[wasm_bindgen(js_name = rapCalculator)]
pub fn js_rap_calculator(sequence: &str, n_gt: u32) -> Result<String, JsValue> {
    js(rap_calculator(sequence, n_gt as usize))
}

#[wasm_bindgen(js_name = densityCompare)]
pub fn js_density_compare(n_ident: u32, n_eval: u32, a0: f64, max_depth: u32, seed: u32) -> Result<String, JsValue> {
    js(density_compare(n_ident as usize, n_eval as usize, a0, max_depth as usize, seed as u64))
}

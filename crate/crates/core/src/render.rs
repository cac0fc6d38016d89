//! Static SVG overlays: HAIR leaves shaded, true positives filled, missed
//! vehicles outlined, false positives dashed.

use std::fmt::Write;

use crate::density::RoadSet;
use crate::error::{Error, Result};
use crate::model::{CameraDataset, RapConfig};
use crate::quadtree::Hair;
use crate::region_eval::match_region_image;

const HAIR_FILL: &str = "#d62728";
const GT_COLOR: &str = "#1f5fbf";
const FP_COLOR: &str = "#2ca02c";
const ROAD_COLOR: &str = "#7f7f7f";

#[derive(Debug, Clone, Default)]
pub struct RenderOptions<'a> {
    pub hair: Option<&'a Hair>,
    pub roads: Option<&'a RoadSet>,
    /// Optional link to the camera frame, drawn underneath everything.
    pub background_href: Option<&'a str>,
}

fn rect_el(out: &mut String, x: f64, y: f64, w: f64, h: f64, style: &str) {
    let _ = writeln!(out, r#"  <rect x="{x}" y="{y}" width="{w}" height="{h}" {style}/>"#);
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders one image of the dataset. Detections are classified by matching
/// against the image's full ground truth.
pub fn render_svg(d: &CameraDataset, image_id: &str, cfg: &RapConfig, opts: &RenderOptions<'_>) -> Result<String> {
    let im = d.image(image_id).ok_or_else(|| Error::UnknownImage(image_id.to_string()))?;
    let outcomes = match_region_image(&im.ground_truth, &im.detections, cfg);
    let mut matched = vec![false; im.ground_truth.len()];
    for o in &outcomes.detections {
        if let Some(g) = o.matched_gt {
            matched[g] = true;
        }
    }

    let (w, h) = (d.width, d.height);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" xmlns:xlink="http://www.w3.org/1999/xlink" viewBox="0 0 {w} {h}" width="{w}" height="{h}">"#
    );
    let _ = writeln!(out, "  <title>{} / {}</title>", escape(&d.camera_id), escape(image_id));
    if let Some(href) = opts.background_href {
        let _ = writeln!(
            out,
            r#"  <image xlink:href="{}" x="0" y="0" width="{w}" height="{h}"/>"#,
            escape(href)
        );
    } else {
        rect_el(&mut out, 0.0, 0.0, w, h, r##"fill="#f4f4f4" stroke="#333" stroke-width="1""##);
    }

    if let Some(hair) = opts.hair {
        let _ = writeln!(out, r#"  <g id="hair" fill="{HAIR_FILL}" fill-opacity="0.25" stroke="{HAIR_FILL}" stroke-width="1">"#);
        for leaf in &hair.leaves {
            let r = leaf.rect;
            let _ = writeln!(
                out,
                r#"    <rect x="{}" y="{}" width="{}" height="{}"><title>{} RAP {}</title></rect>"#,
                r.x,
                r.y,
                r.w,
                r.h,
                if leaf.path.depth() == 0 { "root".to_string() } else { leaf.path.to_string() },
                leaf.rap.map_or("n/a".to_string(), |v| format!("{v:.3}")),
            );
        }
        out.push_str("  </g>\n");
    }

    if let Some(roads) = opts.roads {
        let _ = writeln!(out, r#"  <g id="roads" fill="none" stroke="{ROAD_COLOR}" stroke-width="2">"#);
        for road in &roads.roads {
            let pts: Vec<String> = road.vertices().iter().map(|p| format!("{},{}", p.x, p.y)).collect();
            let _ = writeln!(out, r#"    <polyline points="{}"/>"#, pts.join(" "));
        }
        out.push_str("  </g>\n");
    }

    out.push_str("  <g id=\"ground-truth\">\n");
    for (b, hit) in im.ground_truth.iter().zip(&matched) {
        let style = if *hit {
            format!(r#"class="tp" fill="{GT_COLOR}" fill-opacity="0.8" stroke="{GT_COLOR}" stroke-width="1.5""#)
        } else {
            format!(r#"class="fn" fill="none" stroke="{GT_COLOR}" stroke-width="1.5""#)
        };
        rect_el(&mut out, b.x, b.y, b.w, b.h, &style);
    }
    out.push_str("  </g>\n  <g id=\"false-positives\">\n");
    for o in outcomes.detections.iter().filter(|o| !o.is_tp) {
        let b = &im.detections[o.index];
        let style = format!(
            r#"class="fp" fill="none" stroke="{FP_COLOR}" stroke-width="1.5" stroke-dasharray="4 3""#
        );
        rect_el(&mut out, b.x, b.y, b.w, b.h, &style);
    }
    out.push_str("  </g>\n</svg>\n");
    Ok(out)
}

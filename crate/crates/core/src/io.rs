//! JSON interchange files and tab-separated exports.
//!
//! Every JSON file starts with `format_version` (currently `"1"`) and a
//! `kind` tag; readers reject other versions and mismatched kinds.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::density::{DensityReport, RoadSet};
use crate::error::{Error, Result};
use crate::geometry::{Gcp, Point, Polyline};
use crate::model::{validate_dataset, BBox, CameraDataset, ImageRecord, RapConfig, Rect};
use crate::quadtree::{Hair, QuadPath, QuadrantNode};
use crate::resampling::{SweepCell, SweepConfig, SweepGrid};
use crate::synth::SynthSpec;

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileKind {
    Dataset,
    Roads,
    Hair,
    Sweep,
    DensityReport,
}

impl FileKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FileKind::Dataset => "dataset",
            FileKind::Roads => "roads",
            FileKind::Hair => "hair",
            FileKind::Sweep => "sweep",
            FileKind::DensityReport => "density_report",
        }
    }
}

impl fmt::Display for FileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Deserialize)]
struct Header {
    format_version: Option<String>,
    kind: Option<String>,
}

fn json_error(e: serde_json::Error) -> Error {
    use serde_json::error::Category;
    match e.classify() {
        Category::Data => Error::Schema(e.to_string()),
        Category::Io => Error::Io(e.into()),
        Category::Syntax | Category::Eof => {
            Error::Parse { line: e.line(), column: e.column(), msg: e.to_string() }
        }
    }
}

/// Parses `text` as a file of the given kind after checking its header.
fn parse_kind<T: DeserializeOwned>(text: &str, kind: FileKind) -> Result<T> {
    let header: Header = serde_json::from_str(text).map_err(json_error)?;
    match header.format_version.as_deref() {
        Some(FORMAT_VERSION) => {}
        Some(v) => return Err(Error::Version(v.to_string())),
        None => return Err(Error::Schema("missing field `format_version`".into())),
    }
    match header.kind.as_deref() {
        Some(k) if k == kind.as_str() => {}
        Some(k) => return Err(Error::Kind { expected: kind.as_str(), found: k.to_string() }),
        None => return Err(Error::Schema("missing field `kind`".into())),
    }
    serde_json::from_str(text).map_err(json_error)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("file types always serialize");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// Dataset

/// Either `{x, y, w, h}` or the `[x, y, width, height]` array under `bbox`
/// used by common labeling-tool exports.
#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct BoxFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bbox: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

impl BoxFile {
    fn from_bbox(b: &BBox) -> Self {
        Self { x: Some(b.x), y: Some(b.y), w: Some(b.w), h: Some(b.h), bbox: None, score: b.score }
    }

    fn into_bbox(self, at: impl Fn() -> String, detection: bool) -> Result<BBox> {
        let missing = |f: &str| Error::Schema(format!("{}: missing field `{f}`", at()));
        let has_fields = [self.x, self.y, self.w, self.h].iter().any(Option::is_some);
        let (x, y, w, h) = match self.bbox {
            Some(_) if has_fields => {
                return Err(Error::Schema(format!("{}: give either `bbox` or `x`/`y`/`w`/`h`", at())))
            }
            Some([x, y, w, h]) => (x, y, w, h),
            None => (
                self.x.ok_or_else(|| missing("x"))?,
                self.y.ok_or_else(|| missing("y"))?,
                self.w.ok_or_else(|| missing("w"))?,
                self.h.ok_or_else(|| missing("h"))?,
            ),
        };
        match (detection, self.score) {
            (true, None) => Err(missing("score")),
            (false, Some(_)) => Err(Error::Schema(format!("{}: unknown field `score`", at()))),
            (_, score) => Ok(BBox { x, y, w, h, score }),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImageFile {
    image_id: String,
    ground_truth: Vec<BoxFile>,
    detections: Vec<BoxFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetFile {
    format_version: String,
    kind: FileKind,
    camera_id: String,
    width: f64,
    height: f64,
    images: Vec<ImageFile>,
}

pub fn dataset_to_string(d: &CameraDataset) -> String {
    to_json(&DatasetFile {
        format_version: FORMAT_VERSION.into(),
        kind: FileKind::Dataset,
        camera_id: d.camera_id.clone(),
        width: d.width,
        height: d.height,
        images: d
            .images
            .iter()
            .map(|im| ImageFile {
                image_id: im.image_id.clone(),
                ground_truth: im.ground_truth.iter().map(BoxFile::from_bbox).collect(),
                detections: im.detections.iter().map(BoxFile::from_bbox).collect(),
            })
            .collect(),
    })
}

/// Parses and validates a dataset file.
pub fn dataset_from_str(text: &str) -> Result<CameraDataset> {
    let file: DatasetFile = parse_kind(text, FileKind::Dataset)?;
    let mut images = Vec::with_capacity(file.images.len());
    for im in file.images {
        let id = im.image_id;
        let convert = |boxes: Vec<BoxFile>, field: &str, det: bool| -> Result<Vec<BBox>> {
            boxes
                .into_iter()
                .enumerate()
                .map(|(i, b)| b.into_bbox(|| format!("image `{id}` {field}[{i}]"), det))
                .collect()
        };
        let ground_truth = convert(im.ground_truth, "ground_truth", false)?;
        let detections = convert(im.detections, "detections", true)?;
        images.push(ImageRecord { image_id: id, ground_truth, detections });
    }
    let d = CameraDataset { camera_id: file.camera_id, width: file.width, height: file.height, images };
    validate_dataset(d).map_err(Error::Validation)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<CameraDataset> {
    dataset_from_str(&fs::read_to_string(path)?)
}

pub fn save_dataset(d: &CameraDataset, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, dataset_to_string(d))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Roads

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoadFile {
    road_id: String,
    points: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GcpFile {
    px: [f64; 2],
    world: [f64; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoadsFile {
    format_version: String,
    kind: FileKind,
    unit: String,
    #[serde(default = "one")]
    unit_scale: f64,
    roads: Vec<RoadFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gcps: Option<Vec<GcpFile>>,
}

fn one() -> f64 {
    1.0
}

pub fn roads_to_string(r: &RoadSet) -> String {
    to_json(&RoadsFile {
        format_version: FORMAT_VERSION.into(),
        kind: FileKind::Roads,
        unit: r.unit.clone(),
        unit_scale: r.unit_scale,
        roads: r
            .roads
            .iter()
            .map(|p| RoadFile {
                road_id: p.road_id.clone(),
                points: p.vertices().iter().map(|v| [v.x, v.y]).collect(),
            })
            .collect(),
        gcps: r.gcps.as_ref().map(|g| {
            g.iter()
                .map(|g| GcpFile { px: [g.px.x, g.px.y], world: [g.world.x, g.world.y] })
                .collect()
        }),
    })
}

pub fn roads_from_str(text: &str) -> Result<RoadSet> {
    let file: RoadsFile = parse_kind(text, FileKind::Roads)?;
    let roads = file
        .roads
        .into_iter()
        .map(|r| Polyline::new(r.road_id, r.points.into_iter().map(Point::from).collect()))
        .collect::<Result<_>>()?;
    let set = RoadSet {
        roads,
        gcps: file.gcps.map(|g| {
            g.into_iter().map(|g| Gcp { px: g.px.into(), world: g.world.into() }).collect()
        }),
        unit: file.unit,
        unit_scale: file.unit_scale,
    };
    set.validate()?;
    Ok(set)
}

pub fn load_roads(path: impl AsRef<Path>) -> Result<RoadSet> {
    roads_from_str(&fs::read_to_string(path)?)
}

pub fn save_roads(r: &RoadSet, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, roads_to_string(r))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Hair

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LeafFile {
    path: String,
    rect: Rect,
    rap: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HairFile {
    format_version: String,
    kind: FileKind,
    camera_id: String,
    width: f64,
    height: f64,
    a0: f64,
    max_depth: usize,
    convention: RapConfig,
    identification_image_ids: Vec<String>,
    leaves: Vec<LeafFile>,
}

pub fn hair_to_string(h: &Hair) -> String {
    to_json(&HairFile {
        format_version: FORMAT_VERSION.into(),
        kind: FileKind::Hair,
        camera_id: h.camera_id.clone(),
        width: h.extent.w,
        height: h.extent.h,
        a0: h.a0,
        max_depth: h.max_depth,
        convention: h.convention.clone(),
        identification_image_ids: h.identification_image_ids.clone(),
        leaves: h
            .leaves
            .iter()
            .map(|l| LeafFile { path: l.path.to_string(), rect: l.rect, rap: l.rap })
            .collect(),
    })
}

/// Parses a HAIR file and checks every leaf rect against its path.
pub fn hair_from_str(text: &str) -> Result<Hair> {
    let file: HairFile = parse_kind(text, FileKind::Hair)?;
    let leaves = file
        .leaves
        .into_iter()
        .map(|l| {
            let path: QuadPath = l.path.parse()?;
            Ok(QuadrantNode { depth: path.depth(), path, rect: l.rect, rap: l.rap })
        })
        .collect::<Result<_>>()?;
    let h = Hair {
        camera_id: file.camera_id,
        extent: Rect::new(0.0, 0.0, file.width, file.height),
        a0: file.a0,
        max_depth: file.max_depth,
        convention: file.convention,
        identification_image_ids: file.identification_image_ids,
        leaves,
    };
    h.check_integrity()?;
    Ok(h)
}

pub fn load_hair(path: impl AsRef<Path>) -> Result<Hair> {
    hair_from_str(&fs::read_to_string(path)?)
}

pub fn save_hair(h: &Hair, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, hair_to_string(h))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Sweep

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepRow {
    #[serde(rename = "N")]
    n: usize,
    d0: usize,
    rmse: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    errors: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    format_version: String,
    kind: FileKind,
    seed: u64,
    config: SweepConfig,
    rows: Vec<SweepRow>,
}

pub fn sweep_to_string(g: &SweepGrid) -> String {
    to_json(&SweepFile {
        format_version: FORMAT_VERSION.into(),
        kind: FileKind::Sweep,
        seed: g.config.seed,
        config: g.config.clone(),
        rows: g
            .cells
            .values()
            .map(|c| SweepRow { n: c.n, d0: c.d0, rmse: c.rmse, errors: c.errors.clone() })
            .collect(),
    })
}

pub fn sweep_from_str(text: &str) -> Result<SweepGrid> {
    let file: SweepFile = parse_kind(text, FileKind::Sweep)?;
    if file.seed != file.config.seed {
        return Err(Error::Schema(format!(
            "seed {} disagrees with config seed {}",
            file.seed, file.config.seed
        )));
    }
    let mut cells = BTreeMap::new();
    for row in file.rows {
        if !file.config.n_values.contains(&row.n) || !file.config.d0_values.contains(&row.d0) {
            return Err(Error::Schema(format!("row N={}, d0={} is not in the configured grid", row.n, row.d0)));
        }
        if !(row.rmse.is_finite() && row.rmse >= 0.0) {
            return Err(Error::Schema(format!("row N={}, d0={} has invalid rmse", row.n, row.d0)));
        }
        let cell = SweepCell { n: row.n, d0: row.d0, rmse: row.rmse, errors: row.errors };
        if cells.insert((row.n, row.d0), cell).is_some() {
            return Err(Error::Schema(format!("duplicate row N={}, d0={}", row.n, row.d0)));
        }
    }
    let g = SweepGrid { config: file.config, cells };
    g.check_complete()?;
    Ok(g)
}

pub fn load_sweep(path: impl AsRef<Path>) -> Result<SweepGrid> {
    sweep_from_str(&fs::read_to_string(path)?)
}

pub fn save_sweep(g: &SweepGrid, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, sweep_to_string(g))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Plain configuration files

pub fn load_sweep_config(path: impl AsRef<Path>) -> Result<SweepConfig> {
    serde_json::from_str(&fs::read_to_string(path)?).map_err(json_error)
}

pub fn load_synth_spec(path: impl AsRef<Path>) -> Result<SynthSpec> {
    let spec: SynthSpec = serde_json::from_str(&fs::read_to_string(path)?).map_err(json_error)?;
    spec.validate()?;
    Ok(spec)
}

// ---------------------------------------------------------------------------
// Density report

pub const REPORT_HEADER: &str = "image_id\tscope\tobserved\tpredicted\terror";

/// One row per (image, scope), then one `RMSE` row per scope with the value
/// in the `error` column.
pub fn report_to_tsv(r: &DensityReport) -> String {
    let mut out = String::new();
    out.push_str(REPORT_HEADER);
    out.push('\n');
    for row in &r.rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            row.image_id, row.scope, row.observed, row.predicted, row.error
        ));
    }
    for s in &r.summaries {
        out.push_str(&format!("RMSE\t{}\t\t\t{}\n", s.scope, s.rmse));
    }
    out
}

pub fn save_report(r: &DensityReport, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, report_to_tsv(r))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ViolationRule;

    const MINIMAL: &str = r#"{
        "format_version": "1", "kind": "dataset", "camera_id": "c", "width": 100, "height": 80,
        "images": [ { "image_id": "a",
            "ground_truth": [ {"x": 1, "y": 2, "w": 10, "h": 12} ],
            "detections": [ {"x": 1.5, "y": 2, "w": 10, "h": 12, "score": 0.8} ] } ] }"#;

    #[test]
    fn minimal_dataset_loads() {
        let d = dataset_from_str(MINIMAL).unwrap();
        assert_eq!(d.images.len(), 1);
        assert_eq!(d.images[0].ground_truth, vec![BBox::gt(1.0, 2.0, 10.0, 12.0)]);
        assert_eq!(d.images[0].detections, vec![BBox::det(1.5, 2.0, 10.0, 12.0, 0.8)]);
    }

    #[test]
    fn missing_score_is_a_schema_violation() {
        let text = MINIMAL.replace(r#", "score": 0.8"#, "");
        let err = dataset_from_str(&text).unwrap_err();
        assert!(matches!(&err, Error::Schema(m) if m.contains("`score`")), "{err}");
    }

    #[test]
    fn negative_width_fails_validation() {
        let text = MINIMAL.replace(r#""w": 10, "h": 12} ]"#, r#""w": -10, "h": 12} ]"#);
        match dataset_from_str(&text).unwrap_err() {
            Error::Validation(r) => assert!(r.has(ViolationRule::DegenerateBox)),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = dataset_from_str("{\n  \"format_version\": \"1\",\n  oops }").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn version_and_kind_are_checked() {
        let text = MINIMAL.replace(r#""format_version": "1""#, r#""format_version": "2""#);
        assert!(matches!(dataset_from_str(&text), Err(Error::Version(v)) if v == "2"));
        let text = MINIMAL.replace(r#""kind": "dataset""#, r#""kind": "hair""#);
        assert!(matches!(dataset_from_str(&text), Err(Error::Kind { .. })));
    }

    #[test]
    fn bbox_arrays_are_accepted() {
        let text = MINIMAL
            .replace(r#"{"x": 1, "y": 2, "w": 10, "h": 12}"#, r#"{"bbox": [1, 2, 10, 12]}"#);
        let d = dataset_from_str(&text).unwrap();
        assert_eq!(d.images[0].ground_truth[0], BBox::gt(1.0, 2.0, 10.0, 12.0));
    }

    #[test]
    fn tampered_hair_leaf_is_rejected() {
        let d = crate::synth::bottom_half_perfect(100.0, 100.0, 3);
        let h = crate::quadtree::identify_hair(&d, &d.image_ids(), &RapConfig::default(), 1).unwrap();
        let text = hair_to_string(&h);
        assert_eq!(hair_from_str(&text).unwrap(), h);
        let tampered = text.replacen("\"path\": \"SW\"", "\"path\": \"NW\"", 1);
        assert!(matches!(hair_from_str(&tampered), Err(Error::Integrity(_))));
    }

    #[test]
    fn empty_hair_round_trips() {
        let h = Hair {
            camera_id: "c".into(),
            extent: Rect::new(0.0, 0.0, 64.0, 48.0),
            a0: 0.75,
            max_depth: 2,
            convention: RapConfig::default(),
            identification_image_ids: vec!["a".into()],
            leaves: vec![],
        };
        assert_eq!(hair_from_str(&hair_to_string(&h)).unwrap(), h);
    }

    #[test]
    fn sweep_round_trip_and_completeness() {
        let g = SweepGrid::from_values(&[10], &[1], |_, _| 0.123);
        assert_eq!(sweep_from_str(&sweep_to_string(&g)).unwrap(), g);

        let g = SweepGrid::from_values(&[10, 20], &[1], |_, _| 0.1);
        let mut partial = g.clone();
        partial.cells.remove(&(20, 1));
        assert!(matches!(
            sweep_from_str(&sweep_to_string(&partial)),
            Err(Error::IncompleteGrid { n: 20, d0: 1 })
        ));
    }

    #[test]
    fn report_columns() {
        use crate::density::{DensityRow, Scope, ScopeSummary};
        let r = DensityReport {
            unit: "px".into(),
            rows: vec![DensityRow {
                image_id: "a".into(),
                scope: Scope::Full,
                gt_count: 8,
                det_count: 6,
                observed: 4.0,
                predicted: 3.0,
                error: -1.0,
            }],
            summaries: vec![ScopeSummary { scope: Scope::Full, road_length: 2.0, rmse: 1.0 }],
        };
        let tsv = report_to_tsv(&r);
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines, vec![REPORT_HEADER, "a\tfull\t4\t3\t-1", "RMSE\tfull\t\t\t1"]);
        assert!(lines.iter().all(|l| l.split('\t').count() == 5));
    }

    #[test]
    fn roads_round_trip() {
        let r = RoadSet {
            roads: vec![Polyline::new("main", vec![Point::new(0.0, 1.0), Point::new(5.5, 9.0)]).unwrap()],
            gcps: Some(
                [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
                    .iter()
                    .map(|&p| Gcp { px: p.into(), world: [p[0] * 3.0, p[1]].into() })
                    .collect(),
            ),
            unit: "ft".into(),
            unit_scale: 1.0 / 5280.0,
        };
        assert_eq!(roads_from_str(&roads_to_string(&r)).unwrap(), r);
    }
}

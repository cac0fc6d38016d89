//! Quadtree identification of high-accuracy identification regions (HAIR)
//! in fixed traffic-camera image extents.
//!
//! The crate works purely on bounding-box geometry. Given ground-truth and
//! detected vehicle boxes for a set of images from one camera it
//!
//! - evaluates the regional average precision (RAP) of any image region,
//! - recursively partitions the image extent into quadrants until only
//!   regions whose RAP exceeds a threshold remain ([`quadtree::identify_hair`]),
//! - measures the accuracy lost by restricting detections to that region
//!   ([`quadtree::hair_error`]),
//! - picks the number of identification images and the maximal depth by a
//!   resampling sweep ([`resampling`]),
//! - and estimates traffic density inside the full extent and inside the
//!   HAIR ([`density`]).
//!
//! [`synth`] generates synthetic cameras with distance-degraded detection and
//! carries an independent brute-force HAIR oracle used by the test suites.

pub mod density;
pub mod error;
pub mod geometry;
pub mod io;
pub mod model;
pub mod quadtree;
pub mod region_eval;
pub mod render;
pub mod resampling;
pub mod synth;

pub use error::{Error, Result};
pub use model::{
    validate_dataset, BBox, BoxKind, CameraDataset, EmptyRegionPolicy, ImageRecord, RapConfig,
    Rect, ValidationReport, Violation, ViolationRule, ZeroRecallMode,
};
pub use quadtree::{hair_error, identify_hair, trace_hair, Hair, HairError, QuadPath, Quadrant, QuadrantNode};

use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset validation failed:\n{0}")]
    Validation(ValidationReport),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate box: width and height must be positive (got {w} x {h})")]
    DegenerateBox { w: f64, h: f64 },

    #[error("unsplittable node: {w} x {h} cannot be split into four non-empty quadrants")]
    Unsplittable { w: f64, h: f64 },

    #[error("invalid polyline: {0}")]
    Polyline(String),

    #[error("homography: {0}")]
    Homography(String),

    #[error("box {0} does not overlap any region")]
    Unassigned(usize),

    #[error("unknown image id `{0}`")]
    UnknownImage(String),

    #[error("empty image selection")]
    EmptySelection,

    #[error("maximal depth {depth} exceeds what a {w} x {h} extent can be split to")]
    DepthTooLarge { depth: usize, w: f64, h: f64 },

    #[error("evaluation images overlap identification images: {0:?}")]
    OverlappingImages(Vec<String>),

    #[error("not enough images: need {needed}, dataset has {available}")]
    PoolTooSmall { needed: usize, available: usize },

    #[error("rmse of an empty error list")]
    EmptyErrors,

    #[error("no convergence: {0}")]
    NoConvergence(&'static str),

    #[error("no road in scope `{0}`")]
    NoRoad(String),

    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("unsupported format_version `{0}`")]
    Version(String),

    #[error("expected file kind `{expected}`, found `{found}`")]
    Kind { expected: &'static str, found: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("incomplete sweep grid: missing cell N={n}, d0={d0}")]
    IncompleteGrid { n: usize, d0: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by bad input files or arguments, as opposed to failures
    /// of a computation on valid input.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Validation(_)
                | Error::Config(_)
                | Error::Polyline(_)
                | Error::UnknownImage(_)
                | Error::EmptySelection
                | Error::OverlappingImages(_)
                | Error::Parse { .. }
                | Error::Schema(_)
                | Error::Version(_)
                | Error::Kind { .. }
                | Error::Integrity(_)
                | Error::IncompleteGrid { .. }
                | Error::Io(_)
        )
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular homography (|det| = {det:e} after normalization)")]
    SingularHomography { det: f64 },

    /// The point lies on (or too close to) the horizon line of the projective map.
    #[error("degenerate warp at ({x}, {y}): homogeneous w = {w:e}")]
    DegenerateWarp { x: f64, y: f64, w: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: invalid detections on lines {lines:?}")]
    InvalidDetections { path: PathBuf, lines: Vec<usize> },

    #[error("manifest validation failed: {0}")]
    Manifest(String),

    #[error("missing {} detection file(s): {}", .0.len(), display_paths(.0))]
    MissingDetections(Vec<PathBuf>),

    #[error("incomplete record grid, missing cells: {}", .0.join(", "))]
    IncompleteGrid(Vec<String>),

    #[error("no records to aggregate")]
    EmptyInput,

    #[error("detector `{detector}` lacks tasks covered by `{reference}`: {}", .missing.join(", "))]
    MismatchedCoverage {
        detector: String,
        reference: String,
        missing: Vec<String>,
    },

    #[error("sampler rejected {0} consecutive draws; image domain too small for the scale distribution")]
    TooManyRejections(usize),

    #[error("download failed for {url}: {message}")]
    Download { url: String, message: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code for the command line front end: 1 for validation
    /// problems detected before any work is done, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidRegion(_)
            | Error::InvalidParameter(_)
            | Error::SingularHomography { .. }
            | Error::Parse { .. }
            | Error::InvalidDetections { .. }
            | Error::Manifest(_)
            | Error::MissingDetections(_)
            | Error::IncompleteGrid(_)
            | Error::MismatchedCoverage { .. } => 1,
            _ => 2,
        }
    }
}

fn display_paths(paths: &[PathBuf]) -> String {
    paths
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

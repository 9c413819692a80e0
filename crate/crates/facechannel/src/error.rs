//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest {path}: missing required column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("manifest {path} row {row}: {column} = {value} outside [-1, 1]")]
    LabelRange {
        path: PathBuf,
        row: usize,
        column: String,
        value: f64,
    },

    #[error("manifest {path} row {row}: {message}")]
    ManifestRow {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("manifest {path}: duplicate image path `{image}`")]
    DuplicateImagePath { path: PathBuf, image: PathBuf },

    #[error("cannot decode image {path}: {message}")]
    ImageDecode { path: PathBuf, message: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("need at least 3 matched correspondences, found {found}")]
    InsufficientCorrespondences { found: usize },

    #[error("degenerate correspondence geometry (collinear or coincident points)")]
    DegenerateGeometry,

    #[error("mask template invalid: {0}")]
    InvalidTemplate(String),

    #[error("sample {path} has no keypoints for anchors {missing:?}")]
    MissingKeypoints { path: PathBuf, missing: Vec<String> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("scheme `{scheme}` requires pretrained weights to be loaded first")]
    MissingPretrained { scheme: String },

    #[error("fine-tuning with scheme `scratch` is invalid; use train instead")]
    InvalidScheme,

    #[error("training diverged (non-finite loss) at epoch {epoch}, batch {batch}")]
    DivergedTraining { epoch: usize, batch: usize },

    #[error("need at least {needed} data points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("no trial finished successfully")]
    NoSuccessfulTrial,

    #[error("weights archive {path}: {message}")]
    WeightsArchive { path: PathBuf, message: String },

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("points coincide: {0}")]
    CoincidentPoints(&'static str),

    #[error("{what} lies behind the RIS panel (panel-local azimuth {azimuth_deg:.2} deg)")]
    BehindPanel { what: &'static str, azimuth_deg: f64 },

    #[error("receiver lies in the RIS panel plane")]
    InPanelPlane,

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("correlation matrix is not positive semi-definite after repair")]
    NonPsdCorrelation,

    #[error("unsupported rays per cluster {0}; supported values are 1 and 20")]
    UnsupportedRayCount(usize),

    #[error("grid search supports at most 4 elements, got {0}")]
    TooManyElements(usize),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("latitude {0}° outside the Mercator guard band (|lat| < 85.06°)")]
    LatitudeOutOfRange(f64),
    #[error("longitude {0}° outside [-180, 180]")]
    LongitudeOutOfRange(f64),
    #[error("projected point ({x}, {y}) outside the Mercator square")]
    OutsideMercatorSquare { x: f64, y: f64 },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("grid dimension mismatch: expected {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid heightmap: {0}")]
    InvalidHeightmap(String),
    #[error("point ({x:.3}, {y:.3}) outside heightmap extent")]
    OutOfExtent { x: f64, y: f64 },
    #[error("nodata cell near ({x:.3}, {y:.3})")]
    NoData { x: f64, y: f64 },
    #[error("degenerate tiling: {0}")]
    DegenerateExtent(String),

    #[error("time step must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("time {time} s outside tidal series span [{start}, {end}]")]
    TideOutOfSpan { time: f64, start: f64, end: f64 },
    #[error("invalid current model: {0}")]
    InvalidCurrents(String),

    #[error("rank-deficient beam geometry ({valid} usable beams)")]
    RankDeficient { valid: usize },
    #[error("invalid sensor configuration: {0}")]
    InvalidConfig(String),

    #[error("constrained pose requested while the plug is free")]
    PlugIsFree,

    #[error("mesh vertex index {index} out of range ({len} vertices)")]
    InvalidIndex { index: usize, len: usize },
    #[error("degenerate triangle {0:?}")]
    DegenerateTriangle([usize; 3]),
    #[error("distortion extent {0} outside [0, 1]")]
    ExtentOutOfRange(f64),

    #[error("unknown vehicle '{0}'")]
    UnknownVehicle(String),
    #[error("unknown station '{0}'")]
    UnknownStation(String),
    #[error("scenario configuration invalid:\n  {}", .0.join("\n  "))]
    InvalidScenario(Vec<String>),
    #[error("yaml: {0}")]
    Yaml(#[from] serde_yaml::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}

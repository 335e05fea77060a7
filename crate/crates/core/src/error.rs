use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("mesh has no valid faces")]
    EmptyMesh,
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("face {face} has out-of-range vertex index (vertex count {vertex_count})")]
    FaceOutOfRange { face: usize, vertex_count: usize },
    #[error("face {0} is degenerate")]
    DegenerateFace(usize),
    #[error("invalid barycentric weights {0:?}")]
    InvalidWeights([f64; 3]),
    #[error("invalid vertex normals: {0}")]
    InvalidNormals(String),
    #[error("target count {target} is smaller than vertex count {vertices}")]
    TargetTooSmall { target: usize, vertices: usize },
    #[error("expected {expected} views, got {got}")]
    WrongViewCount { expected: usize, got: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("expected {expected} channels, got {got}")]
    WrongChannelCount { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("image of {height}x{width} is smaller than the {window}x{window} window")]
    TooSmall { height: usize, width: usize, window: usize },
    #[error("isosurface is empty")]
    EmptySurface,
    #[error("non-finite update at step {0}")]
    NonFiniteUpdate(usize),
    #[error("refiner contract violated: {0}")]
    RefinerContract(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error comes from reading or decoding an input.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse(_)
                | Error::EmptyMesh
                | Error::FaceOutOfRange { .. }
                | Error::InvalidNormals(_)
        )
    }

    /// Whether the error is a numerical failure (divergence, empty output).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteUpdate(_) | Error::EmptySurface | Error::DegenerateFace(_)
        )
    }
}

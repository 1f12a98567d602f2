use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("contour needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("non-finite coordinate at vertex {0}")]
    NonFiniteVertex(usize),
    #[error("contour has zero perimeter")]
    ZeroPerimeter,
    #[error("degenerate contour: {0}")]
    DegenerateContour(&'static str),
    #[error("Fourier degree {degree} needs at least {} samples, got {samples}", 2 * degree + 1)]
    DegreeTooLarge { degree: usize, samples: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("expected {expected} regression channels, found {found}")]
    ChannelCountMismatch { expected: usize, found: usize },
    #[error("misaligned inputs: {0}")]
    AlignmentMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: invalid polygon: {msg}")]
    InvalidPolygon { line: usize, msg: String },
    #[error("tensor file: {0}")]
    Tensor(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

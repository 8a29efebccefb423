use thiserror::Error;

pub type Result<T, E = WitError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum WitError {
    #[error("distance matrix is not square: row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("distance matrix must describe at least one point")]
    EmptySpace,
    #[error("non-finite distance at ({a}, {b})")]
    NonFinite { a: usize, b: usize },
    #[error("negative distance {value} at ({a}, {b})")]
    NegativeDistance { a: usize, b: usize, value: f64 },
    #[error("asymmetric distances: d({a},{b}) = {ab} but d({b},{a}) = {ba}")]
    Asymmetry { a: usize, b: usize, ab: f64, ba: f64 },
    #[error("nonzero self distance d({a},{a}) = {value}")]
    NonzeroDiagonal { a: usize, value: f64 },
    #[error("triangle inequality violated: d({a},{c}) > d({a},{b}) + d({b},{c})")]
    TriangleViolation { a: usize, b: usize, c: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("distributions live on different spaces")]
    SpaceMismatch,
    #[error("balls around centers {a} and {b} intersect")]
    OverlappingBalls { a: usize, b: usize },
    #[error("epsilon {epsilon} out of range for diameter {diameter}")]
    EpsilonOutOfRange { epsilon: f64, diameter: f64 },
    #[error("level {level} outside hierarchy range [{lo}, {hi}]")]
    LevelOutOfRange { level: i32, lo: i32, hi: i32 },
    #[error("exhaustive search limited to {max} points, got {n}")]
    TooLargeForExact { n: usize, max: usize },
    #[error("need at least {required} samples, got {got}")]
    InsufficientSamples { required: u64, got: u64 },
    #[error("sample oracle exhausted after {drawn} of {requested} draws")]
    SamplerExhausted { drawn: u64, requested: u64 },
    #[error("grid resolution incompatible: {0}")]
    ResolutionIncompatible(String),
    #[error("support size {0} must be even")]
    OddSupport(usize),
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("every point lies inside some ball B(x_j, {radius})")]
    NoAnchorPoint { radius: f64 },
    #[error("cluster {center} has zero mass but the base distribution charges it")]
    ZeroClusterMass { center: usize },
    #[error("refusing to label an instance far: W = {w} < epsilon = {epsilon}")]
    NotCertifiedFar { w: f64, epsilon: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

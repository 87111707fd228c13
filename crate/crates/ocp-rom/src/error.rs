use thiserror::Error;

/// Error type shared across the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown case id `{0}`")]
    UnknownCase(String),
    #[error("mesh resolution ({nx}, {ny}) cannot align interface at {axis} = {coord}")]
    InterfaceMisaligned { nx: usize, ny: usize, axis: char, coord: f64 },
    #[error("parameter {0:?} outside the parameter box")]
    ParameterOutsideBox(Vec<f64>),
    #[error("unknown subdomain tag {0}")]
    UnknownSubdomain(u32),
    #[error("unknown boundary tag `{0}`")]
    UnknownBoundaryTag(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("metric is not symmetric positive definite")]
    NonSpdMetric,
    #[error("conflicting Dirichlet values at dof {dof} between tags `{a}` and `{b}` with no priority order")]
    ConflictingDirichlet { dof: usize, a: String, b: String },
    #[error("regularization weight must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("singular factorization: {0}")]
    SingularFactorization(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("empty basis for role `{0}`")]
    EmptyBasis(String),
    #[error("requested basis size {requested} exceeds available {available}")]
    BasisTooLarge { requested: usize, available: usize },
    #[error("artifact mismatch: {0}")]
    ArtifactMismatch(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

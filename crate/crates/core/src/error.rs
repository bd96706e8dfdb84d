use thiserror::Error;

/// Failures raised across geometry, linear algebra and the multiscale pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("could not place {placed} of {requested} perforations within {attempts} attempts")]
    PlacementFailure {
        requested: usize,
        placed: usize,
        attempts: usize,
    },
    #[error("invalid perforation #{index}: {reason}")]
    InvalidPerforation { index: usize, reason: String },
    #[error("no triangle survives perforation removal")]
    DomainEmpty,
    #[error("perforated domain is disconnected ({components} components)")]
    DomainDisconnected { components: usize },
    #[error("boundary node {node} at ({x}, {y}) is neither on the outer square nor next to a perforation")]
    InconsistentGeometry { node: usize, x: f64, y: f64 },
    #[error("msh parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported msh version {0} (only 2.2 ASCII is read)")]
    UnsupportedVersion(String),
    #[error("boundary line element {element} carries no physical tag")]
    MissingTags { element: usize },
    #[error("triangle {triangle} is degenerate (area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },
    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("mesh has no Dirichlet node; the pure Neumann problem is singular")]
    NoDirichlet,
    #[error("reference field has zero norm")]
    ZeroReference,
    #[error("{blocks_per_side} coarse blocks per side do not nest in a fine grid of {fine_n}")]
    NonNested { blocks_per_side: usize, fine_n: usize },
    #[error("constraint block for basis (block {block}, eigenfunction {eig}) is singular")]
    SingularConstraintBlock { block: usize, eig: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::PlacementFailure { .. } => "PlacementFailure",
            Error::InvalidPerforation { .. } => "InvalidPerforation",
            Error::DomainEmpty => "DomainEmpty",
            Error::DomainDisconnected { .. } => "DomainDisconnected",
            Error::InconsistentGeometry { .. } => "InconsistentGeometry",
            Error::Parse { .. } => "ParseError",
            Error::UnsupportedVersion(_) => "UnsupportedVersion",
            Error::MissingTags { .. } => "MissingTags",
            Error::DegenerateTriangle { .. } => "DegenerateTriangle",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::NoDirichlet => "NoDirichlet",
            Error::ZeroReference => "ZeroReference",
            Error::NonNested { .. } => "NonNested",
            Error::SingularConstraintBlock { .. } => "SingularConstraintBlock",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }

    /// True for failures of the numerical pipeline, as opposed to input/config problems.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::NoConvergence { .. }
                | Error::SingularConstraintBlock { .. }
                | Error::ZeroReference
                | Error::DegenerateTriangle { .. }
                | Error::PlacementFailure { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

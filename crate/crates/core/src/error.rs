use std::path::PathBuf;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("OBJ line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("non-triangle face at OBJ line {line} ({count} vertices)")]
    NonTriangleFace { line: usize, count: usize },
    #[error("vertex index {index} out of range in triangle {triangle}")]
    IndexOutOfRange { triangle: usize, index: i64 },
    #[error("degenerate triangle {triangle} (area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },
    #[error("non-manifold edge ({0}, {1}) has more than two incident triangles")]
    NonManifoldEdge(usize, usize),
    #[error("zero accumulated normal at vertex {0}")]
    ZeroNormal(usize),
    #[error("unmatched periodic boundary vertices: {0:?}")]
    UnmatchedBoundary(Vec<usize>),
    #[error("ambiguous periodic match for vertex {vertex}: candidates {candidates:?}")]
    AmbiguousMatch { vertex: usize, candidates: Vec<usize> },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error("pin vertex {0} has vanishing phase, choose another k")]
    VanishingPin(usize),
    #[error("vanishing phase at vertex {0}")]
    VanishingPhase(usize),
    #[error("inverted prism at element {0}")]
    InvertedPrism(usize),
    #[error("element inversion{}", .element.map(|e| format!(" in element {e}")).unwrap_or_default())]
    ElementInversion { element: Option<usize> },
    #[error("frequency too high for mesh resolution (element {0} holds more than one interface)")]
    ResolutionTooLow(usize),
    #[error("Newton solver exceeded {iterations} iterations (gradient norm {grad_norm:e})")]
    MaxIterations { iterations: usize, grad_norm: f64 },
    #[error("line search failed after {halvings} halvings")]
    LineSearch { halvings: usize },
    #[error("Hessian regularization exhausted (last shift {shift:e})")]
    RegularizationExhausted { shift: f64 },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),
    #[error("solve at angle {theta} rad failed: {source}")]
    AtAngle {
        theta: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("equilibrium not converged")]
    NotConverged,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures of a numerical solver (as opposed to bad input).
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::Eigen(_)
            | Error::ElementInversion { .. }
            | Error::MaxIterations { .. }
            | Error::LineSearch { .. }
            | Error::RegularizationExhausted { .. }
            | Error::Singular(_)
            | Error::LinearAlgebra(_)
            | Error::NotConverged
            | Error::VanishingPhase(_)
            | Error::VanishingPin(_)
            | Error::ResolutionTooLow(_) => true,
            Error::AtAngle { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}

use thiserror::Error;

/// Errors emitted by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh parse error at line {line}: {message}")]
    MeshParse { line: usize, message: String },

    #[error("obtuse cell {cell}: worst interior angle {angle_deg:.3} deg exceeds 90 deg")]
    ObtuseCell { cell: usize, angle_deg: f64 },

    #[error("degenerate cell {cell}: vertices are collinear")]
    DegenerateCell { cell: usize },

    #[error("dangling boundary face {face}: not an edge of exactly one cell")]
    DanglingBoundaryFace { face: usize },

    #[error("boundary does not cover all boundary edges of the mesh: edge ({0}, {1}) is missing")]
    UncoveredBoundaryEdge(usize, usize),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("vector length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("linear solver failed: {0}")]
    LinearSolve(String),

    #[error(
        "Newton did not converge within {iters} iterations (best residual {best_residual:.3e})"
    )]
    MaxItersExceeded {
        iters: usize,
        best_residual: f64,
        history: Vec<f64>,
    },

    #[error("energy increased by {violation:.3e} beyond slack after an accepted step")]
    EnergyViolation { violation: f64 },

    #[error("dense oracle guard exceeded: system size {size} > {guard}")]
    DenseGuard { size: usize, guard: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

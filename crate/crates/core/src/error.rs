use thiserror::Error;

pub type Result<T, E = TubeError> = std::result::Result<T, E>;

/// Everything that can go wrong between a curve description and a spectral report.
#[derive(Debug, Error)]
pub enum TubeError {
    #[error("degenerate curve: |Γ'(t)| = {speed:e} at t = {t}")]
    DegenerateCurve { t: f64, speed: f64 },

    #[error("tolerance not met: {0}")]
    ToleranceNotMet(String),

    #[error("Frenet frame degenerates at s = {s}: derivative of order {order} is dependent on lower orders")]
    FrameDegeneracy { s: f64, order: usize },

    #[error("frame vector e{index} flips between s = {s0} and s = {s1}; use a finer sampling grid")]
    FrameContinuity { index: usize, s0: f64, s1: f64 },

    #[error("arity mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("rotation integrator drift {drift:e} exceeds 1e-10 at s = {s}")]
    IntegratorFailure { s: f64, drift: f64 },

    #[error("s = {s} outside table range [{lo}, {hi}]")]
    OutOfRange { s: f64, lo: f64, hi: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("cross-section topology: {0}")]
    Topology(String),

    #[error("assumption violated: a·‖κ₁‖∞ = {product} ≥ 1 (a = {a}, ‖κ₁‖∞ = {kappa_sup})")]
    AssumptionViolation { a: f64, kappa_sup: f64, product: f64 },

    #[error("geometry is an abstract profile without an embedded curve")]
    NotEmbeddable,

    #[error("smoothness: {0}")]
    Smoothness(String),

    #[error("eigensolver: {0}")]
    Solver(String),

    #[error("reference curve is straight (κ₁ ≡ 0); nothing to certify")]
    StraightTube,

    #[error("no sign-constant interval of κ₁ found at scan step {0}")]
    ScanResolution(f64),

    #[error("curvature does not decay at infinity (|κ₁| = {tail:e} far out); the essential-spectrum threshold does not apply")]
    NonDecaying { tail: f64 },

    #[error("config error at line {line}, column {column}: {message}")]
    Config {
        message: String,
        line: usize,
        column: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

use thiserror::Error;

/// Errors raised anywhere in the pipeline. Variants map one-to-one onto the
/// failure modes the operations document.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("evaluation at a sphere pole (s = {s}); use a pole-safe path")]
    PoleEvaluation { s: f64 },

    #[error("empty fiber: V(A) = {potential} >= E = {energy}")]
    EmptyFiber { potential: f64, energy: f64 },

    #[error("degenerate fiber: dH restricted to the fiber vanishes at omega = {omega}")]
    DegenerateFiber { omega: f64 },

    #[error("phase state carries no tangent vector")]
    MissingTangent,

    #[error("integration step failure at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("trajectory crossed a pole chart singularity at t = {t}")]
    PoleCrossing { t: f64 },

    #[error("front refinement budget exceeded ({samples} samples) near omega in [{omega_lo}, {omega_hi}]")]
    RefinementBudgetExceeded {
        samples: usize,
        omega_lo: f64,
        omega_hi: f64,
    },

    #[error("slope tail window has {points} points, need at least {required}")]
    InsufficientTail { points: usize, required: usize },

    #[error("Morse violation: degenerate critical point at s = {s} (second derivative {second})")]
    MorseViolation { s: f64, second: f64 },

    #[error("turning point bracketing failed for clairaut value {clairaut}")]
    TurningPointFailure { clairaut: f64 },

    #[error("frequency routes disagree at p1 = {p1}: relative gap {gap:e}")]
    RouteMismatch { p1: f64, gap: f64 },

    #[error("A lies within tolerance of a turning point of the torus at clairaut value {clairaut}")]
    BoundaryAmbiguity { clairaut: f64 },

    #[error("endpoint tail does not decrease near clairaut value {clairaut}")]
    EndpointDivergence { clairaut: f64 },

    #[error("type-(L) least-squares fit is degenerate: {0}")]
    FitDegenerate(String),

    #[error("chart endpoint has the wrong boundary type: {0}")]
    WrongBoundaryType(String),

    #[error("assumption {assumption} fails: {detail}")]
    AssumptionFailure { assumption: String, detail: String },

    #[error("degenerate critical point of the phase at x = {x}")]
    DegenerateCritical { x: f64 },

    #[error("evaluation budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    #[error("hypothesis of the ergodic lemma fails: {0}")]
    HypothesisFailure(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

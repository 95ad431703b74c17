use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {}", .0.join("; "))]
    InvalidModel(Vec<String>),

    #[error("strip ({lo}, {hi}) must be finite with lo < hi")]
    InvalidStrip { lo: f64, hi: f64 },

    /// A root sits so close to a strip line that double precision cannot classify it.
    #[error("indicial root of mode {mode_k} at Im σ = {im_sigma} is numerically on the line Im σ = {line}")]
    WeightOnSpectrum { mode_k: i64, im_sigma: f64, line: f64 },

    #[error("scaling parameter must be positive, got {0}")]
    NonpositiveRho(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("extension domain basis is rank deficient")]
    RankDeficient,

    #[error("limit set did not settle: {clusters} clusters in the schedule tail")]
    NonConvergent { clusters: usize },

    #[error("spectral parameter {0} lies on the cut [0, ∞)")]
    LambdaOnSpectrumCut(Complex64),

    #[error("outside supported scope: {0}")]
    ScopeViolation(String),

    #[error("enrichment exponent {0} is not square integrable at the tip")]
    EnrichmentNotWeighted(f64),

    #[error("unsupported smoothness {0}; only s ∈ {{0, 1}} is implemented")]
    UnsupportedSmoothness(f64),

    #[error("mass matrix condition number {condition:e} exceeds 1e12")]
    IllConditionedMass { condition: f64 },

    #[error("probe radius {radius} exceeds the discretization trust limit {limit}")]
    TrustLimitExceeded { radius: f64, limit: f64 },

    #[error("secular-equation root finder failed: {0}")]
    RootFinder(String),

    #[error("degenerate fit window: {0}")]
    DegenerateRange(String),

    #[error("need at least {needed} eigenvalues, found {found}")]
    TooFewEigenvalues { needed: usize, found: usize },

    #[error("requested {requested} eigenvectors but only {retained} are retained")]
    NotEnoughRetained { requested: usize, retained: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("malformed pencil container: {0}")]
    Container(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unconstructible ensemble: {0}")]
    Unconstructible(String),

    #[error("eigensolver failed to converge for {rows}x{cols} {kind} matrix")]
    Convergence {
        rows: usize,
        cols: usize,
        kind: &'static str,
    },

    #[error("symmetry violation: eigenvalue {value} has no conjugate partner (|Im| = {im:.3e}, tolerance {tolerance:.3e})")]
    SymmetryViolation {
        value: String,
        im: f64,
        tolerance: f64,
    },

    #[error("empty window: no eigenvalues with real part in [{lo}, {hi}]")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("singular map: eigenvalue with zero modulus")]
    SingularMap,

    #[error("too few levels ({0}) to form spacings")]
    TooFewLevels(usize),

    #[error("singular matrix in Pastur residual")]
    SingularInversion,

    #[error("Newton iteration did not converge (residual {residual:.3e} after {iterations} iterations)")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("continuation broke down at {stage} (step floor reached at {at})")]
    ContinuationBreakdown { stage: &'static str, at: String },

    #[error("negative density {value:.3e} at z = {z} exceeds clipping threshold")]
    NegativeDensity { value: f64, z: String },

    #[error("curve never crosses f_c = 0.5 (range {lo:.3}..{hi:.3})")]
    OutOfRange { lo: f64, hi: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("insufficient real eigenvalues at M = {0}")]
    InsufficientReal(usize),
}

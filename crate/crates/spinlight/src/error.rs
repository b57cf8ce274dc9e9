use thiserror::Error;

/// Errors surfaced by state constructors, propagators, and entanglement
/// measures.
#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    /// A parameter or argument was rejected before any computation ran.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A covariance matrix failed the symmetry check; the payload is the
    /// largest asymmetry |g_ij − g_ji| found.
    #[error("covariance matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),

    /// A covariance matrix violates the uncertainty relation; the payload is
    /// the most negative eigenvalue of the physicality witness.
    #[error("covariance matrix violates the uncertainty bound (witness eigenvalue {0:.3e})")]
    Unphysical(f64),

    /// A detector outcome was NaN or infinite.
    #[error("homodyne outcome is not finite")]
    NonFiniteOutcome,

    /// Numerical integration produced runaway or non-finite entries.
    #[error("integration diverged at t = {t:.6} (entry magnitude exceeded {guard:.1e})")]
    Diverged { t: f64, guard: f64 },

    /// The linearized propagator of the doubling method became singular,
    /// signalling a finite escape time of the underlying flow.
    #[error("linearized propagator is singular at t = {t:.6} (finite escape time)")]
    SingularPropagator { t: f64 },

    /// Input lies outside the domain of a closed-form expression.
    #[error("domain error: {0}")]
    Domain(String),

    /// An eigenvalue computation failed to converge.
    #[error("eigenvalue computation failed to converge")]
    EigenFailure,
}

pub type Result<T> = std::result::Result<T, Error>;

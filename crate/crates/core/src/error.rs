//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by special-function evaluation, flows, transforms and
/// integration.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Input left the admissible domain (e.g. Im(tau) below the floor).
    #[error("domain error: {0}")]
    Domain(String),

    /// A modulus hit the singular set {0, +1, -1} of the Legendre integrals.
    #[error("singular modulus: {0}")]
    SingularModulus(String),

    /// A square-root (or other multivalued) branch was required but not
    /// specified, or the AGM branch rule became ambiguous.
    #[error("branch error: {0}")]
    Branch(String),

    /// Hypergeometric parameters outside the admissible set
    /// (c a non-positive integer, degenerate Legendre indices, ...).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Argument sits on a branch cut with no side selected.
    #[error("cut error: {0}")]
    Cut(String),

    /// A series or transformation ladder failed to reach the target accuracy.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// State hit a singular set of an invariant, bracket or transform
    /// (x = 0, y^2 = z^2, theta product vanishing, ...).
    #[error("singular state: {0}")]
    SingularState(String),

    /// A point transformation is singular at the given state.
    #[error("singular transform: {0}")]
    SingularTransform(String),

    /// Lie-derivative request for a system without polynomial right-hand side.
    #[error("unsupported system: {0}")]
    UnsupportedSystem(String),

    /// Adaptive step size collapsed (movable singularity / natural boundary).
    #[error("step underflow at t = {t_re}+{t_im}i")]
    StepUnderflow { t_re: f64, t_im: f64 },

    /// Trajectory left the admissible region of its system.
    #[error("domain escape at t = {t_re}+{t_im}i: {what}")]
    DomainEscape { t_re: f64, t_im: f64, what: String },

    /// Not enough samples (or too irregular a grid) to resample a trajectory.
    #[error("resampling error: {0}")]
    Resampling(String),
}

pub type Result<T> = std::result::Result<T, Error>;

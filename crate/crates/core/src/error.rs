use thiserror::Error;

/// Errors produced by the billiard toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("boundary is not strictly convex: curvature {curvature:.3e} at native parameter {phi:.6}")]
    ConvexityViolation { phi: f64, curvature: f64 },

    #[error("chord is tangent to the boundary (u = {u:.16})")]
    TangentChord { u: f64 },

    #[error("Larmor circle is tangent to the boundary near s = {s:.9} (crossing sine {crossing_sine:.3e})")]
    TangencyDiscontinuity { s: f64, crossing_sine: f64 },

    #[error("adaptive quadrature did not reach tolerance {tolerance:.1e} (estimate {estimate:.3e})")]
    QuadratureFailure { tolerance: f64, estimate: f64 },

    #[error("boundary pair ({s0:.9}, {s2:.9}) is not realizable by a single return")]
    NotRealizable { s0: f64, s2: f64 },

    #[error("return map is not a twist map in the {0} regime")]
    NotTwist(String),

    #[error("operation requires the strong-field regime, found {0}")]
    RegimeUnsupported(String),

    #[error("normal form case does not match the curvature regime: {0}")]
    RegimeMismatch(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular Newton system near a parabolic orbit (multiplier trace {trace:.12})")]
    SingularNewton { trace: f64 },

    #[error("Taylor coefficient denominator 1 - mu*kappa = {value:.3e} is singular")]
    DenominatorSingular { value: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the numerical layers of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite integrand sample {value} at node {index} (x = {x})")]
    NonFiniteSample { index: usize, x: f64, value: f64 },

    #[error(
        "adaptive quadrature on [{a}, {b}] exceeded {max_subdivisions} subdivisions \
         (estimate {value}, remaining error bound {error_bound})"
    )]
    QuadratureDiverged {
        a: f64,
        b: f64,
        max_subdivisions: usize,
        value: f64,
        error_bound: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular interpolation system for {0} knots")]
    SingularSpline(usize),

    #[error("point {0} lies outside [-pi/2, pi/2]")]
    OutOfDomain(f64),

    #[error("inner average over (z = {z}, y = {y}) failed: {source}")]
    InnerAverage {
        z: f64,
        y: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("non-finite residual integrand at z = {z}, y = {y}")]
    NonFiniteIntegrand { z: f64, y: f64 },

    #[error("non-finite residual at perturbed coordinate {0}")]
    NonFiniteJacobianColumn(usize),

    #[error("damped normal equations stayed singular after {0} damping increases")]
    SingularDampedSystem(usize),

    #[error("difference does not decay at infinity: |f(pi/2)| = {0}")]
    ReferenceMismatch(f64),

    #[error("slope {0} is not present in the branch")]
    MissingSlope(f64),

    #[error("malformed data: {0}")]
    DataFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;

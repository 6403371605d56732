use std::fmt;

/// Errors shared across the solver stack.
///
/// Validation failures carry enough context to point at the offending
/// input; numerical failures carry the quantity that refused to converge.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Weight profile evaluated to a non-positive value inside the collar.
    NonPositiveWeight { t: f64, value: f64 },
    /// Exponent bookkeeping violated (p out of (1, N), s too small, chain broken).
    InvalidExponents(String),
    /// A collar coordinate outside [0, rho0] was requested.
    OutOfCollar { t: f64, rho0: f64 },
    /// Coefficient b leaves the two-sided collar envelope.
    EnvelopeViolated { t: f64, ratio: f64 },
    /// Point outside the domain closure.
    OutsideDomain { x: f64 },
    /// Collar Jacobian hit zero or below (collar too deep for the geometry).
    DegenerateJacobian { y: f64, value: f64 },
    /// Geometry kind not supported by the requested operation.
    UnsupportedGeometry(String),
    /// Adaptive refinement did not converge, or the integral grows without bound.
    Divergent { detail: String },
    /// Integrand returned NaN.
    NaNEncountered { t: f64 },
    /// Shooting bracket never produced a sign change.
    BracketFailure { lo: f64, hi: f64 },
    /// Nonlinearity violates a standing hypothesis (sign, ordering,
    /// monotonicity of the comparison envelope).
    InvalidNonlinearity(String),
    /// Finite-difference flux check of a solve exceeded its gate.
    FluxMismatch { residual: f64, tol: f64 },
    /// Amplitude margin for the distance barrier must be positive and
    /// leave the flux bracket positive up to the collar depth.
    MarginTooSmall { margin: f64 },
    /// (p-1)-sublinear crossover not found below the scan ceiling.
    SublinearityUnverifiable { ceiling: f64 },
    /// Collar curvature constant is negative; the subsolution gate refuses.
    GeometryInadmissible { lambda_min: f64 },
    /// Requested lambda sits below the subsolution threshold.
    BelowLambdaHatOne { lambda: f64, lambda_hat_one: f64 },
    /// Requested lambda sits below the certified threshold lambda*.
    BelowLambdaStar { lambda: f64, lambda_star: f64 },
    /// Sampled growth envelope for the comparison nonlinearity failed.
    EnvelopeFailure { lambda: f64, detail: String },
    /// Could not order the barrier pair within the multiplier budget.
    OrderingFailure { node: f64, gap: f64 },
    /// Lower barrier exceeds the upper barrier somewhere.
    UnorderedPair { node: f64, gap: f64 },
    /// Iteration hit the step cap before the increment dropped below tol.
    NoConvergence { iterations: usize, last_increment: f64 },
    /// Converged iterate escaped the barrier sandwich.
    SandwichViolated { node: f64, gap: f64 },
    /// Monotone iteration produced a decreasing step.
    MonotonicityViolated { step: usize, node: f64, drop: f64 },
    /// Config file missing, unreadable, or inconsistent.
    Config(String),
    /// Filesystem failure while writing reports.
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonPositiveWeight { t, value } => {
                write!(f, "weight a({t:.6e}) = {value:.6e} is not positive")
            }
            Error::InvalidExponents(msg) => write!(f, "invalid exponents: {msg}"),
            Error::OutOfCollar { t, rho0 } => {
                write!(f, "coordinate {t:.6e} outside collar [0, {rho0:.6e}]")
            }
            Error::EnvelopeViolated { t, ratio } => write!(
                f,
                "coefficient envelope violated at t = {t:.6e}: a^(1/(p-1)) b = {ratio:.6e}"
            ),
            Error::OutsideDomain { x } => write!(f, "point {x:.6e} outside domain"),
            Error::DegenerateJacobian { y, value } => {
                write!(f, "collar Jacobian at depth {y:.6e} is {value:.6e}")
            }
            Error::UnsupportedGeometry(msg) => write!(f, "unsupported geometry: {msg}"),
            Error::Divergent { detail } => write!(f, "integral diverges: {detail}"),
            Error::NaNEncountered { t } => write!(f, "integrand NaN at t = {t:.6e}"),
            Error::BracketFailure { lo, hi } => {
                write!(f, "no sign change in flux bracket [{lo:.6e}, {hi:.6e}]")
            }
            Error::InvalidNonlinearity(msg) => write!(f, "invalid nonlinearity: {msg}"),
            Error::FluxMismatch { residual, tol } => {
                write!(f, "flux check residual {residual:.6e} exceeds {tol:.6e}")
            }
            Error::MarginTooSmall { margin } => {
                write!(f, "amplitude margin {margin:.6e} too small")
            }
            Error::SublinearityUnverifiable { ceiling } => write!(
                f,
                "sublinear crossover not found below zeta = {ceiling:.3e}"
            ),
            Error::GeometryInadmissible { lambda_min } => write!(
                f,
                "collar curvature constant {lambda_min:.6e} is negative; subsolution unavailable"
            ),
            Error::BelowLambdaHatOne { lambda, lambda_hat_one } => write!(
                f,
                "lambda = {lambda:.6e} below threshold lambda_hat_1 = {lambda_hat_one:.6e}"
            ),
            Error::BelowLambdaStar { lambda, lambda_star } => write!(
                f,
                "lambda = {lambda:.6e} below certified lambda* = {lambda_star:.6e}"
            ),
            Error::EnvelopeFailure { lambda, detail } => {
                write!(f, "growth envelope failed at lambda = {lambda:.6e}: {detail}")
            }
            Error::OrderingFailure { node, gap } => write!(
                f,
                "barrier ordering failed at node {node:.6e} (gap {gap:.6e})"
            ),
            Error::UnorderedPair { node, gap } => write!(
                f,
                "lower barrier exceeds upper at node {node:.6e} by {gap:.6e}"
            ),
            Error::NoConvergence { iterations, last_increment } => write!(
                f,
                "no convergence after {iterations} steps (last increment {last_increment:.6e})"
            ),
            Error::SandwichViolated { node, gap } => write!(
                f,
                "iterate escapes barrier sandwich at node {node:.6e} by {gap:.6e}"
            ),
            Error::MonotonicityViolated { step, node, drop } => write!(
                f,
                "monotone iteration decreased at step {step}, node {node:.6e}, by {drop:.6e}"
            ),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

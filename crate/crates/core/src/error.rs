use thiserror::Error;

/// Errors raised by the analysis pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("polynomial of degree 0 has no roots")]
    NoRoots,
    #[error("root finding failed: {0}")]
    RootFindingFailed(String),
    #[error("denominator vanishes on the imaginary axis at omega = {omega}")]
    PoleOnAxis { omega: f64 },
    #[error("transfer function is improper (numerator degree {num} > denominator degree {den})")]
    ImproperSystem { num: usize, den: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("perturbation produces a degenerate plant: {0}")]
    DegeneratePlant(String),
    #[error("1 + G(jw) vanishes at omega = {omega}: loop is marginally stable")]
    MarginallyStableLoop { omega: f64 },
    #[error("all-pass factor needs roots with positive real part, got {re} + {im}j")]
    InvalidBlaschkeFactor { re: f64, im: f64 },
    #[error("compensator pole coincides with a zero of 1 + G at {re} + {im}j")]
    DegenerateCompensation { re: f64, im: f64 },
    #[error(
        "closed-loop RHP pole count unresolved: Pade surrogate finds {pade}, winding number gives {winding}"
    )]
    UnresolvedClosedLoopPoles { pade: usize, winding: i64 },
    #[error("singular point must lie in the open right half plane (sigma = {sigma})")]
    InvalidSingularPoint { sigma: f64 },
    #[error("singular point coincides with a zero or pole of the sensitivity function")]
    SingularCoincidence,
    #[error("log|g| is singular on the axis near omega = {omega}")]
    AxisZeroDetected { omega: f64 },
    #[error("integral does not converge: {0}")]
    NonconvergentIntegral(String),
    #[error("sensitivity never crosses unity in the sweep window")]
    NoCrossover,
    #[error("|g| = {mag} >= 1 at the lowest swept frequency")]
    LowFrequencyAmplification { mag: f64 },
    #[error("truncation frequency omega_l = {omega_l} must exceed omega_c = {omega_c}")]
    InvalidTruncation { omega_l: f64, omega_c: f64 },
    #[error("bound condition not met: {description} (value {value})")]
    ConditionNotMet { description: String, value: f64 },
    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error("unknown controller `{controller}` for case `{case}`")]
    UnknownController { case: String, controller: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps the error with a short description of where it happened.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Strips context layers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

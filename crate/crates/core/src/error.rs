use alloc::string::String;

/// Unified error type for every fallible operation in the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Gram matrix numerically singular: smallest eigenvalue of the
    /// normalized gram below tolerance relative to the largest.
    SingularDesign,
    /// Incompatible shapes or an out-of-range index.
    DimensionMismatch(String),
    /// A restricted fit was requested on an empty support. Callers that want
    /// the all-zero model handle this variant explicitly.
    EmptySupport,
    /// Column `.0` has zero variance and cannot be standardized.
    ConstantColumn(usize),
    /// Input data contains non-finite entries or violates a documented
    /// precondition.
    InvalidData(String),
    /// Configuration value outside its documented domain.
    InvalidConfig(String),
    /// Coordinate descent did not reach `tol` within `max_iter` sweeps.
    NoConvergence { iterations: usize, last_delta: f64 },
    /// More than 20% of ensemble replicates were singular.
    AllReplicatesFailed { failed: usize, total: usize },
    /// A metric was asked to compare empty sample sets.
    EmptySamples,
    /// ODE state magnitude exceeded 1e12 during integration.
    BlowUp { time: f64 },
    /// Two consecutive sample times coincide; finite differences undefined.
    DegenerateSpacing { index: usize },
    /// Factorization failure inside the Gibbs sampler.
    NumericalBreakdown(String),
}

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Error::SingularDesign => write!(f, "design matrix is numerically singular"),
            Error::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::EmptySupport => write!(f, "empty support"),
            Error::ConstantColumn(j) => write!(f, "column {j} is constant and cannot be standardized"),
            Error::InvalidData(msg) => write!(f, "invalid data: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::NoConvergence { iterations, last_delta } => write!(
                f,
                "coordinate descent failed to converge after {iterations} sweeps (last delta {last_delta:e})"
            ),
            Error::AllReplicatesFailed { failed, total } => {
                write!(f, "{failed} of {total} replicates failed; ensemble aborted")
            }
            Error::EmptySamples => write!(f, "empty sample set"),
            Error::BlowUp { time } => write!(f, "state blew up at t = {time}"),
            Error::DegenerateSpacing { index } => {
                write!(f, "coincident sample times at index {index}")
            }
            Error::NumericalBreakdown(msg) => write!(f, "numerical breakdown: {msg}"),
        }
    }
}

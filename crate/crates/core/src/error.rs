use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum HmfmError {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Shapes or lengths of inputs disagree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A numerical integral could not be brought within tolerance.
    #[error("quadrature did not converge: estimated relative error {rel_error:e} exceeds {tolerance:e}")]
    Quadrature { rel_error: f64, tolerance: f64 },

    /// A series did not reach its truncation criterion within the term cap.
    #[error("series truncation not reached within {cap} terms")]
    SeriesCap { cap: usize },

    /// A non-finite value appeared where a finite one is required.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Malformed input data, with the offending line when known.
    #[error("data error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Data { line: Option<usize>, msg: String },

    /// Invalid run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A post-processing routine received an empty chain.
    #[error("chain contains no retained iterations")]
    EmptyChain,

    /// A sampler step failed at the given iteration.
    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<HmfmError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HmfmError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        HmfmError::Domain(msg.into())
    }

    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        HmfmError::Dimension(msg.into())
    }

    pub(crate) fn data(line: Option<usize>, msg: impl Into<String>) -> Self {
        HmfmError::Data {
            line,
            msg: msg.into(),
        }
    }

    /// Whether the error stems from a numerical routine rather than from input.
    pub fn is_numerical(&self) -> bool {
        match self {
            HmfmError::Quadrature { .. } | HmfmError::SeriesCap { .. } | HmfmError::Numerical(_) => {
                true
            }
            HmfmError::Iteration { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    /// Process exit status for the command-line tool: 2 for bad arguments or
    /// configuration, 3 for bad data, 4 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            _ if self.is_numerical() => 4,
            HmfmError::Iteration { source, .. } => source.exit_code(),
            HmfmError::Domain(_) | HmfmError::Config(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HmfmError>;

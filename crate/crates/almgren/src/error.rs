use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("chart too large: {0}")]
    ChartTooLarge(String),
    #[error("point outside chart: {0}")]
    OutsideChart(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("[{module}] scenario `{scenario}`: {source}")]
    Context {
        module: &'static str,
        scenario: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn context(self, module: &'static str, scenario: &str) -> Error {
        Error::Context {
            module,
            scenario: scenario.to_string(),
            source: Box::new(self),
        }
    }

    /// Process exit code for this error: 3 for numeric failures, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Numeric(_) => 3,
            _ => 2,
        }
    }

    /// The innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }
}

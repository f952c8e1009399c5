use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for state dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("drift term of degree {degree} cannot be embedded at order two")]
    DegreeTooHigh { degree: u32 },

    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },

    #[error("path state became non-finite at step {step}")]
    NonFiniteStep { step: usize },

    #[error("path {path} failed")]
    PathFailed {
        path: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("time {t} is not a grid point (dt = {dt})")]
    OffGrid { t: f64, dt: f64 },

    #[error("inconsistent initialization: {0}")]
    Inconsistent(String),

    #[error("method `{method}` failed")]
    Method {
        method: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse scenario file {path}")]
    Scenario {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// The message followed by every source, joined with `": "`.
    pub fn chain(&self) -> String {
        let mut out = self.to_string();
        let mut cur = std::error::Error::source(self);
        while let Some(e) = cur {
            out.push_str(": ");
            out.push_str(&e.to_string());
            cur = e.source();
        }
        out
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_method(method: &'static str, source: Error) -> Self {
        Error::Method {
            method,
            source: Box::new(source),
        }
    }
}

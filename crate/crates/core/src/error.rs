use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Missing or malformed configuration; `field` names the offending key.
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },

    /// The Thomas–Fermi support does not fit inside the grid.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid under-resolved: spacing {spacing_m:.3e} m along axis {axis} exceeds required {required_m:.3e} m")]
    Resolution {
        axis: usize,
        spacing_m: f64,
        required_m: f64,
    },

    #[error("eigensolver did not converge after {iterations} iterations (worst residual {residual:.3e})")]
    SolverNotConverged { iterations: usize, residual: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("{source} (at q = {q_hz} Hz)")]
    AtQ {
        q_hz: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification used by the command-line front end for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numeric,
    Io,
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn at_q(self, q_hz: f64) -> Self {
        Error::AtQ {
            q_hz,
            source: Box::new(self),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config { .. } | Error::Validation { .. } | Error::Domain(_) | Error::Resolution { .. } => {
                ErrorKind::Config
            }
            Error::Io { .. } => ErrorKind::Io,
            Error::AtQ { source, .. } => source.kind(),
            _ => ErrorKind::Numeric,
        }
    }

    /// Short machine-readable tag.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::Config { .. } => "config",
            Error::Validation { .. } => "validation",
            Error::Domain(_) => "domain",
            Error::Resolution { .. } => "resolution",
            Error::SolverNotConverged { .. } => "solver",
            Error::Numeric(_) => "numeric",
            Error::Fit(_) => "fit",
            Error::AtQ { source, .. } => source.tag(),
            Error::Io { .. } => "io",
        }
    }
}

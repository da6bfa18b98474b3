use std::path::PathBuf;

use crate::sgmca::OverPruned;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("svd did not converge on a {rows}x{cols} matrix")]
    SvdNoConvergence { rows: usize, cols: usize },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("ALM iteration {iteration} failed: {source}")]
    AlmIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(
        "over-pruned: observation density {:.4} fell below {:.4} after outer iteration {}",
        .0.density, .0.min_density, .0.outer
    )]
    OverPruned(Box<OverPruned>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics (as opposed to bad input or I/O).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::SvdNoConvergence { .. }
                | Error::NonFinite(_)
                | Error::AlmIteration { .. }
                | Error::OverPruned(_)
        )
    }
}

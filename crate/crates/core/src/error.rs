use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size mismatch in {what}: expected {expected}, got {actual}")]
    Size {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("index {index} out of range for length {len}")]
    Bounds { index: usize, len: usize },

    #[error("parse error at line {line}, field `{field}`: {msg}")]
    Parse {
        line: usize,
        field: String,
        msg: String,
    },

    #[error("unsupported format version {found} (this build reads version {expected})")]
    Version { found: u32, expected: u32 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Size {
            what,
            expected,
            actual,
        })
    }
}

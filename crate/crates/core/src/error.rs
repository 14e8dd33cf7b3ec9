use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value {value} at coordinate {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("backward called before forward on {0}")]
    BackwardBeforeForward(&'static str),
    #[error("zero-norm signal cannot be power normalized")]
    ZeroNorm,
    #[error("bad magic {found} (expected {expected}) at byte offset {offset}")]
    BadMagic { found: u32, expected: u32, offset: u64 },
    #[error("truncated file at byte offset {offset}: {what}")]
    Truncated { offset: u64, what: String },
    #[error("count mismatch: {images} images vs {labels} labels (label header at byte offset {offset})")]
    CountMismatch { images: u32, labels: u32, offset: u64 },
    #[error("malformed file: {0}")]
    Format(String),
    #[error("training diverged: non-finite loss at epoch {epoch}, step {step}")]
    Diverged { epoch: usize, step: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        })
    }
}

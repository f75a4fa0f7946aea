use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad category of an [`Error`], used by front-ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Io,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed manifest: {0}")]
    MalformedManifest(String),

    #[error("unknown format kind `{0}` (expected folio, quarto or octavo)")]
    UnknownFormat(String),

    #[error("page indices are not contiguous: expected {expected}, found {found}")]
    NonContiguousPages { expected: usize, found: usize },

    #[error("gathering size mismatch: gathering `{gathering}` has {pages} pages, expected {expected}")]
    GatheringSizeMismatch {
        gathering: String,
        pages: usize,
        expected: usize,
    },

    #[error("no imposition table for {format} with {leaves} leaves per gathering")]
    UnsupportedImposition { format: String, leaves: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("slot count mismatch between units `{left}` and `{right}`")]
    SlotMismatch { left: String, right: String },

    #[error("titles were quantized with different binning configurations")]
    BinningMismatch,

    #[error("image for page {page_index} at {path}: {message}")]
    PageImage {
        page_index: usize,
        path: PathBuf,
        message: String,
    },

    #[error("image {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("csv: {0}")]
    Csv(String),

    #[error("eigensolver did not converge on a {0}x{0} matrix")]
    EigenNonConvergence(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::PageImage { .. } | Error::Image { .. } | Error::Io(_) => ErrorClass::Io,
            Error::EigenNonConvergence(_) => ErrorClass::Numerical,
            _ => ErrorClass::Config,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ground set size {0} out of range (1..={max})", max = crate::subsets::MAX_N)]
    GroundSet(usize),

    #[error("bit vector {bits:#x} has bits outside the ground set of size {n}")]
    SubsetBits { bits: u32, n: usize },

    #[error("element {element} is not in 1..={n}")]
    Element { element: usize, n: usize },

    #[error("invalid chain: {0}")]
    Chain(String),

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("{what} is limited to n <= {max} (got n = {n})")]
    Capability { what: &'static str, n: usize, max: usize },

    #[error("expansion produced a non-integral coefficient {numer}/2 on term {term}")]
    NonIntegral { term: String, numer: String },

    #[error("cache file {path}:{line}: {msg}")]
    CacheCorrupt { path: PathBuf, line: usize, msg: String },

    #[error("term dump line {line}: {msg}")]
    TermDump { line: usize, msg: String },

    #[error("euler characteristic route gave {euler}, direct evaluation gave {direct}")]
    EulerMismatch { euler: String, direct: String },

    #[error("invalid test-function parameters: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

use thiserror::Error;

use crate::address::Address;

#[derive(Debug, Error)]
pub enum Error {
    #[error("tree prefix must have at least one line")]
    ZeroDepth,

    #[error("depth {depth} exceeds the cap of {max}")]
    DepthTooLarge { depth: u32, max: u32 },

    #[error("address {address} (length {}) does not fit in a prefix of depth {depth}", address.len())]
    AddressTooDeep { address: Address, depth: u32 },

    #[error("line {level} out of range for a prefix of depth {depth}")]
    LineOutOfRange { level: u32, depth: u32 },

    #[error("depth mismatch: {left} vs {right}")]
    DepthMismatch { left: u32, right: u32 },

    #[error("color {color} is not fixed by the substitution's marking")]
    NonFixedRoot { color: u8 },

    #[error("invalid substitution: {0}")]
    InvalidSubstitution(String),

    #[error("word length {0} is not a power of two (>= 2)")]
    NotPowerOfTwo(usize),

    #[error("pair {pair:?} at offset {offset} is outside the chi base cases {{00, 10}}")]
    ChiBasePair { offset: usize, pair: String },

    #[error("prefix is not the image of a tree under the substitution (first mismatch at {witness})")]
    NotAnImage { witness: Address },

    #[error("prefix depth {0} is not even")]
    OddDepth(u32),

    #[error("address {0} has odd length")]
    OddLength(Address),

    #[error("the empty address is not allowed here")]
    EmptyAddress,

    #[error("patch depth {n} is out of range for generation depth {depth}")]
    PatchDepth { n: u32, depth: u32 },

    #[error("patch census for depth {n} did not stabilize")]
    NotStabilized { n: u32 },

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("malformed tree file: {0}")]
    Format(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

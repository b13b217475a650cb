//! Crate-wide error type.

use std::fmt;

/// Errors from transform, quantizer, codec, and simulator operations.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Input vector contains NaN or infinity.
    NonFiniteInput,
    /// Input vector is empty.
    EmptyInput,
    /// Dense rotation oracle called beyond its size limit.
    DimensionTooLarge { dim: usize, max: usize },
    /// Transform dimension is not a power of two.
    NotPowerOfTwo { dim: usize },
    /// Level count must be at least 1.
    InvalidLevelCount,
    /// Lloyd iteration did not reach the movement tolerance.
    NonConvergence { residual: f64 },
    /// Level list is not strictly increasing.
    LevelsNotSorted,
    /// No lattice spacing in the bracket attains the requested entropy.
    EntropyOutOfRange { bits: f64 },
    /// Bit budget is not representable (negative, non-finite, or too large).
    InvalidBits { bits: f64 },
    /// Quantization requires a nonzero input norm.
    ZeroNorm,
    /// Scale denominator vanished; caller should emit a zero estimate.
    DegenerateScale,
    /// Scheme and vector dimensions disagree.
    DimensionMismatch { expected: usize, found: usize },
    /// Fixed-width packing needs power-of-two (or singleton) level sets.
    FixedWidthUnsupported { set_len: usize },
    /// Payload ran out before the given coordinate could be decoded.
    PayloadTooShort { coordinate: usize },
    /// Entropy-coded byte stream failed to decode.
    CorruptStream { detail: &'static str },
    /// Symbol index exceeds the level-set size.
    SymbolOutOfRange { symbol: u32, alphabet: usize },
    /// Serialized data does not start with the expected magic bytes.
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    /// Unsupported wire-format version.
    BadVersion { version: u8 },
    /// Byte buffer is shorter than its declared contents.
    TruncatedMessage,
    /// Message header names a scheme other than the one supplied.
    SchemeMismatch { expected: u16, found: u16 },
    /// Entropy-coded payloads cannot be split across lossy packets.
    EntropyModeUnpacketizable,
    /// Experiment or packetizer configuration is inconsistent.
    InvalidConfig(String),
    /// Denominator of an error metric is zero (all-zero inputs).
    ZeroDenominator,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonFiniteInput => write!(f, "input vector has non-finite coordinates"),
            Self::EmptyInput => write!(f, "input vector is empty"),
            Self::DimensionTooLarge { dim, max } => {
                write!(f, "dimension {dim} exceeds oracle limit {max}")
            }
            Self::NotPowerOfTwo { dim } => write!(f, "dimension {dim} is not a power of two"),
            Self::InvalidLevelCount => write!(f, "level count must be at least 1"),
            Self::NonConvergence { residual } => {
                write!(f, "Lloyd iteration stalled with residual {residual:e}")
            }
            Self::LevelsNotSorted => write!(f, "levels must be strictly increasing"),
            Self::EntropyOutOfRange { bits } => {
                write!(f, "no lattice spacing in bracket reaches entropy {bits}")
            }
            Self::InvalidBits { bits } => write!(f, "invalid bit budget {bits}"),
            Self::ZeroNorm => write!(f, "input norm is zero"),
            Self::DegenerateScale => write!(f, "scale denominator vanished"),
            Self::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Self::FixedWidthUnsupported { set_len } => {
                write!(f, "level set of size {set_len} has no fixed-width encoding")
            }
            Self::PayloadTooShort { coordinate } => {
                write!(f, "payload exhausted at coordinate {coordinate}")
            }
            Self::CorruptStream { detail } => write!(f, "corrupt entropy stream: {detail}"),
            Self::SymbolOutOfRange { symbol, alphabet } => {
                write!(f, "symbol {symbol} outside alphabet of size {alphabet}")
            }
            Self::BadMagic { expected, found } => write!(
                f,
                "bad magic: expected {:?}, found {:?}",
                String::from_utf8_lossy(expected),
                String::from_utf8_lossy(found)
            ),
            Self::BadVersion { version } => write!(f, "unsupported format version {version}"),
            Self::TruncatedMessage => write!(f, "byte buffer shorter than declared contents"),
            Self::SchemeMismatch { expected, found } => {
                write!(f, "scheme id mismatch: header {found}, supplied {expected}")
            }
            Self::EntropyModeUnpacketizable => {
                write!(f, "entropy-coded messages cannot be packetized for lossy transport")
            }
            Self::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Self::ZeroDenominator => write!(f, "error metric denominator is zero"),
        }
    }
}

impl std::error::Error for Error {}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Error {
    /// A refinable real hit its precision cap before the answer was certain.
    PrecisionExhausted,
    /// Two quantities could not be separated at the precision cap and are not
    /// symbolically equal. Usually an undeclared relation between symbols.
    UndecidableAtCap(String),
    /// An exact audit found a counterexample.
    AuditFailure {
        audit: &'static str,
        n: i64,
        k: i64,
        detail: String,
    },
    EmptyPartition,
    InvalidPartition(String),
    /// A value vector entry is a product of two irrational forms.
    NonlinearProduct,
    UnknownSymbol(String),
    Precondition(String),
    SubsequenceExhausted,
    AtomSearchFailed(String),
    /// Fixed-width fast path overflowed; the input is out of the supported range.
    Overflow(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::PrecisionExhausted => f.write_str("precision cap reached before the result was certain"),
            Error::UndecidableAtCap(what) => write!(f, "undecidable at precision cap: {what}"),
            Error::AuditFailure { audit, n, k, detail } => {
                write!(f, "audit `{audit}` failed at n={n}, k={k}: {detail}")
            }
            Error::EmptyPartition => f.write_str("empty partition"),
            Error::InvalidPartition(msg) => write!(f, "invalid partition: {msg}"),
            Error::NonlinearProduct => f.write_str("product of two irrational linear forms"),
            Error::UnknownSymbol(name) => write!(f, "unknown symbol `{name}`"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::SubsequenceExhausted => f.write_str("no admissible subsequence in range"),
            Error::AtomSearchFailed(msg) => write!(f, "atom search failed: {msg}"),
            Error::Overflow(what) => write!(f, "fixed-point range exceeded in {what}"),
        }
    }
}

impl core::error::Error for Error {}

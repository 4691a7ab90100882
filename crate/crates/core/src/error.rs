use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("p-adic valuation of zero is undefined")]
    ValuationOfZero,

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("LTE precondition violated for a={a}, b={b}, p={p}: {reason}")]
    LtePrecondition { a: i64, b: i64, p: u64, reason: &'static str },

    #[error("a^k - b^k vanishes; valuation undefined")]
    DegenerateDifference,

    #[error("valuation of {base}^({p}-1) - 1 at {p} reaches the cap {cap}")]
    ValuationCapExceeded { base: u64, p: u64, cap: u32 },

    #[error("could not decide {what} within {cap_bits} bits of precision")]
    PrecisionExhausted { what: String, cap_bits: u32 },

    #[error("computation disagrees with the published claim: {0}")]
    ClaimMismatch(String),

    #[error("checkpoint does not match the current run: {0}")]
    CheckpointMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

/// Crate-wide error type. Every fallible public operation returns this.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a prime number")]
    NotPrime(u64),
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u64, u64),
    #[error("working precision {got} is below the minimum {min}")]
    PrecisionTooLow { got: usize, min: usize },
    #[error("result is indistinguishable from zero at precision {0}; increase the working precision")]
    PrecisionExhausted(usize),
    #[error("division by zero")]
    DivisionByZero,
    #[error("zero input where a nonzero p-adic number is required")]
    ZeroInput,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("residue budget exceeded: needed {needed}, limit {limit}")]
    BudgetExceeded { needed: u128, limit: u128 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("representative set for p={prime}, q={exponent} does not cover the unit class of {unit_class} mod {modulus}")]
    IncompleteSet {
        prime: u64,
        exponent: u64,
        unit_class: u64,
        modulus: u64,
    },
    #[error("basis change is degenerate: generated vectors do not form a basis")]
    DegenerateChange,
    #[error("rank computation is ambiguous at the working precision")]
    RankAmbiguous,
}

pub type Result<T> = std::result::Result<T, Error>;

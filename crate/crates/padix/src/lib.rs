//! Exact p-adic arithmetic with a toolkit for deciding and solving x^q = a
//! over Q_p: solvability criteria, digit-by-digit root extraction,
//! carry-polynomial criteria generation, representative-set decomposition,
//! and a verifier/normalizer for 6-dimensional filiform Leibniz algebras.

pub mod carry;
pub mod error;
pub mod leibniz;
pub mod padic;
pub mod reps;
pub mod roots;

pub use error::{Error, Result};
pub use padic::{PadicNumber, PrecisionContext};

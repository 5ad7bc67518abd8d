//! Borrowable fractional ownership: a checker, interpreters and a
//! prophecy-based translation for a small imperative language.

pub mod check;
pub mod corpus;
pub mod crosscheck;
pub mod fraction;
pub mod interp;
pub mod lifetime;
pub mod metrics;
pub mod source;
pub mod target;
pub mod translate;
pub mod types;

/// Ownership amounts used throughout the checker and interpreters.
pub type Own = num_rational::BigRational;
pub type OwnType = types::Type<Own>;
pub type TypeEnv = types::TypeEnv<Own>;

//! Truncated weighted power series in `x`, `φ`, `μ` and relative derivations.

mod coeff;
mod derivation;
mod exponent;
mod ring;
mod series;

pub use coeff::Coeff;
pub use derivation::{exp_adjoint, pushforward_function, Derivation, Direction};
pub use exponent::{Exponent, Var, MU_WEIGHT, PHI_WEIGHT};
pub use ring::{Ring, DEFAULT_PRECISION};
pub use series::fmt_monomial;
pub use series::Series;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormalError {
    #[error("truncation orders differ: {0} vs {1}")]
    TruncationMismatch(u32, u32),
    #[error("generator has order {0}, which does not raise the filtration")]
    NonPositiveOrder(i64),
    #[error("adjoint series did not terminate after {0} terms")]
    NotNilpotent(usize),
    #[error("series has no invertible constant term")]
    NotAUnit,
}

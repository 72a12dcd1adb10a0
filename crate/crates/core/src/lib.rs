//! Normal forms of vector fields at a singular point with semi-simple linear part.
//!
//! The pipeline runs from exact resonance analysis of the frequency vector,
//! through the degree-doubling Lie iteration, to the versal data `g(u, μ)` and
//! the ideal of invariant varieties.

pub mod formal;
pub mod normalform;
pub mod resonance;
pub mod smalldivisor;
pub mod versal;

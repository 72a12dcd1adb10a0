//! Homological solver, approximate inverse and the Lie iteration.

mod homological;
mod iteration;

use std::sync::Arc;

use thiserror::Error;

use crate::formal::{Coeff, Derivation, Direction, Exponent, FormalError, Ring};
use crate::resonance::{FrequencyVector, ResonanceBasis};

pub use homological::{approximate_inverse_jv, homological_l, homological_split};
pub use iteration::{lie_iteration, normal_form_defect, poincare_dulac, verify_conjugacy};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Resonant terms are absorbed by `∂_φ` generators; the linear part is `S_v`.
    Versal,
    /// Resonant terms are kept; the linear part is `S`.
    PoincareDulac,
}

/// Which field and accumulated normal form feed the next generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IterationVariant {
    /// `v_{n+1} = j_{A_n}([X_n])`.
    Printed,
    /// `v_{n+1} = j_{A_{n+1}}([X_{n+1}])`.
    Updated,
}

impl std::str::FromStr for IterationVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "printed" => Ok(IterationVariant::Printed),
            "updated" => Ok(IterationVariant::Updated),
            other => Err(format!(
                "unknown iteration variant `{other}` (expected printed or updated)"
            )),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalFormError {
    #[error("positivity conditions P1/P2 do not hold; versal mode is unavailable")]
    PositivityRequired,
    #[error("resonant term x^{k:?} d/dx{} has no unique decomposition over the generators", .direction + 1)]
    NoDecomposition { k: Vec<u32>, direction: usize },
    #[error("small divisor |λ_(K,i)| = {modulus:e} at K={k:?}, i={}", .direction + 1)]
    SmallDivisor {
        k: Vec<u32>,
        direction: usize,
        modulus: f64,
    },
    #[error("coefficient magnitude {0:e} exceeds the overflow guard")]
    Overflow(f64),
    #[error("invalid input field: {0}")]
    BadInput(String),
    #[error("no normal form after {0} steps")]
    NoConvergence(usize),
    #[error(transparent)]
    Formal(#[from] FormalError),
}

/// Immutable solver configuration shared by every step of a run.
#[derive(Clone, Debug)]
pub struct SolverContext {
    ring: Arc<Ring>,
    basis: ResonanceBasis,
    trunc: u32,
    mode: Mode,
    variant: IterationVariant,
    eps_div_exp: i32,
    overflow_exp: i32,
}

impl SolverContext {
    pub fn new(
        ring: &Arc<Ring>,
        basis: ResonanceBasis,
        trunc: u32,
        mode: Mode,
    ) -> Result<Self, NormalFormError> {
        if basis.d() != ring.d {
            return Err(NormalFormError::BadInput(format!(
                "ring has {} variables, frequency vector has {}",
                ring.d,
                basis.d()
            )));
        }
        if mode == Mode::Versal && !basis.positivity_holds() {
            return Err(NormalFormError::PositivityRequired);
        }
        let quarter = (ring.prec / 4) as i32;
        Ok(SolverContext {
            ring: ring.clone(),
            basis,
            trunc,
            mode,
            variant: IterationVariant::Printed,
            eps_div_exp: -quarter,
            overflow_exp: quarter,
        })
    }

    pub fn with_variant(mut self, variant: IterationVariant) -> Self {
        self.variant = variant;
        self
    }

    /// Divisors with modulus below `2^exp` are rejected.
    pub fn with_divisor_guard(mut self, exp: i32) -> Self {
        self.eps_div_exp = exp;
        self
    }

    pub fn ring(&self) -> &Arc<Ring> {
        &self.ring
    }

    pub fn basis(&self) -> &ResonanceBasis {
        &self.basis
    }

    pub fn frequencies(&self) -> &FrequencyVector {
        self.basis.frequencies()
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn variant(&self) -> IterationVariant {
        self.variant
    }

    pub fn overflow_guard(&self) -> f64 {
        2f64.powi(self.overflow_exp)
    }

    /// `S_v = Σ (λ_i + φ_i) x_i ∂_{x_i}` in versal mode, `S` otherwise.
    pub fn linear_field(&self) -> Derivation {
        linear_field(
            &self.ring,
            self.frequencies(),
            self.trunc,
            self.mode == Mode::Versal,
        )
    }

    /// Whether a term lies in the centralizer of `S`: resonant `∂_x` terms and
    /// every `∂_φ` term.
    pub fn is_normal(&self, dir: Direction, e: &Exponent) -> bool {
        match dir {
            Direction::X(i) => self.frequencies().is_resonant(&e.x_vec(), i),
            Direction::Phi(_) => true,
        }
    }

    /// Whether the iteration must eliminate the term.
    pub fn is_removable(&self, dir: Direction, e: &Exponent) -> bool {
        match (self.mode, dir) {
            (_, Direction::Phi(_)) => false,
            (Mode::Versal, Direction::X(_)) => true,
            (Mode::PoincareDulac, _) => !self.is_normal(dir, e),
        }
    }
}

/// `Σ λ_i x_i ∂_{x_i}`, plus `Σ φ_i x_i ∂_{x_i}` when `detuned`.
pub fn linear_field(
    ring: &Arc<Ring>,
    fv: &FrequencyVector,
    trunc: u32,
    detuned: bool,
) -> Derivation {
    let d = ring.d;
    let mut terms = Vec::new();
    for i in 0..d {
        let mut x = vec![0u32; d];
        x[i] = 1;
        let mut lam = fv.lambda(i).clone();
        lam.re.set_prec(ring.prec);
        lam.im.set_prec(ring.prec);
        terms.push((Direction::X(i), ring.x_exponent(&x), lam));
        if detuned {
            let mut phi = vec![0u32; d];
            phi[i] = 1;
            terms.push((
                Direction::X(i),
                ring.exponent(&x, &phi, &vec![0; ring.l]),
                Coeff::from_f64(ring.prec, 1.0, 0.0),
            ));
        }
    }
    Derivation::from_terms(ring, trunc, terms)
}

/// Output of a normalization run.
#[derive(Clone, Debug)]
pub struct NormalFormResult {
    /// The linear field plus the resonant part of the conjugated input.
    pub a: Derivation,
    /// `v_0, v_1, …` in the order they are applied.
    pub generators: Vec<Derivation>,
    /// Largest non-resonant `∂_x` coefficient of the conjugated input below the truncation.
    pub residual: f64,
    /// Total number of conjugation steps.
    pub steps: usize,
    /// Steps of the degree-doubling schedule; later steps are clean-up.
    pub scheduled_steps: usize,
    /// Frequencies defining the resonance test used by the residual.
    pub frequencies: FrequencyVector,
}

use std::sync::Arc;

use super::coeff::Coeff;
use super::exponent::Exponent;

/// Default mantissa precision in bits.
pub const DEFAULT_PRECISION: u32 = 256;

/// Shape and numeric policy shared by all series of one computation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ring {
    /// Number of `x` (and `φ`) variables.
    pub d: usize,
    /// Number of `μ` variables.
    pub l: usize,
    /// Mantissa precision of every coefficient.
    pub prec: u32,
    /// A coefficient is treated as zero when both parts are `≤ 2^eps_exp`.
    pub eps_exp: i32,
}

impl Ring {
    pub fn new(d: usize, l: usize, prec: u32) -> Arc<Ring> {
        Arc::new(Ring {
            d,
            l,
            prec,
            eps_exp: -(prec as i32 / 2),
        })
    }

    pub fn with_epsilon(d: usize, l: usize, prec: u32, eps_exp: i32) -> Arc<Ring> {
        Arc::new(Ring {
            d,
            l,
            prec,
            eps_exp,
        })
    }

    pub fn epsilon(&self) -> f64 {
        2f64.powi(self.eps_exp)
    }

    pub fn zero_coeff(&self) -> Coeff {
        Coeff::zero(self.prec)
    }

    pub fn coeff(&self, re: f64, im: f64) -> Coeff {
        Coeff::from_f64(self.prec, re, im)
    }

    pub fn unit_exponent(&self) -> Exponent {
        Exponent::zero(self.d, self.l)
    }

    pub fn exponent(&self, x: &[u32], phi: &[u32], mu: &[u32]) -> Exponent {
        assert_eq!(x.len(), self.d);
        assert_eq!(phi.len(), self.d);
        assert_eq!(mu.len(), self.l);
        Exponent::new(x, phi, mu)
    }

    pub fn x_exponent(&self, x: &[u32]) -> Exponent {
        assert_eq!(x.len(), self.d);
        Exponent::from_x(x, self.l)
    }
}

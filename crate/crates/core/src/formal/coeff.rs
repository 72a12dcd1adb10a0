use std::fmt;

use rug::ops::NegAssign;
use rug::Float;

/// Complex coefficient with arbitrary-precision real and imaginary parts.
#[derive(Clone, Debug, PartialEq)]
pub struct Coeff {
    pub re: Float,
    pub im: Float,
}

impl Coeff {
    pub fn zero(prec: u32) -> Self {
        Coeff {
            re: Float::new(prec),
            im: Float::new(prec),
        }
    }

    pub fn from_f64(prec: u32, re: f64, im: f64) -> Self {
        Coeff {
            re: Float::with_val(prec, re),
            im: Float::with_val(prec, im),
        }
    }

    pub fn real(re: Float) -> Self {
        let prec = re.prec();
        Coeff {
            re,
            im: Float::new(prec),
        }
    }

    pub fn from_ratio(prec: u32, num: i64, den: i64) -> Self {
        let mut re = Float::with_val(prec, num);
        re /= den;
        Coeff::real(re)
    }

    /// Parses decimal strings such as `"-1.25e-3"` at precision `prec`.
    pub fn parse_decimal(prec: u32, re: &str, im: &str) -> Option<Coeff> {
        let re = Float::parse(re.trim()).ok()?;
        let im = Float::parse(im.trim()).ok()?;
        Some(Coeff {
            re: Float::with_val(prec, re),
            im: Float::with_val(prec, im),
        })
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn is_exact_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    /// True when both parts are at most `2^eps_exp` in magnitude.
    pub fn is_negligible(&self, eps_exp: i32) -> bool {
        small(&self.re, eps_exp) && small(&self.im, eps_exp)
    }

    /// Magnitude bounded by `2^exp`, as an exponent test on both parts.
    pub fn exceeds(&self, exp: i32) -> bool {
        large(&self.re, exp) || large(&self.im, exp)
    }

    pub fn abs_f64(&self) -> f64 {
        let re = self.re.to_f64();
        let im = self.im.to_f64();
        re.hypot(im)
    }

    pub fn add_assign(&mut self, other: &Coeff) {
        self.re += &other.re;
        self.im += &other.im;
    }

    pub fn sub_assign(&mut self, other: &Coeff) {
        self.re -= &other.re;
        self.im -= &other.im;
    }

    pub fn neg(&self) -> Coeff {
        let mut out = self.clone();
        out.re.neg_assign();
        out.im.neg_assign();
        out
    }

    pub fn neg_assign(&mut self) {
        self.re.neg_assign();
        self.im.neg_assign();
    }

    pub fn mul(&self, other: &Coeff) -> Coeff {
        let mut out = Coeff::zero(self.prec());
        out.add_mul(self, other);
        out
    }

    /// `self += a * b`.
    pub fn add_mul(&mut self, a: &Coeff, b: &Coeff) {
        if a.im.is_zero() && b.im.is_zero() {
            self.re += &a.re * &b.re;
            return;
        }
        self.re += &a.re * &b.re;
        self.re -= &a.im * &b.im;
        self.im += &a.re * &b.im;
        self.im += &a.im * &b.re;
    }

    pub fn mul_assign(&mut self, other: &Coeff) {
        *self = self.mul(other);
    }

    pub fn scale_u64(&mut self, k: u64) {
        self.re *= k;
        self.im *= k;
    }

    pub fn div_u64(&mut self, k: u64) {
        self.re /= k;
        self.im /= k;
    }

    pub fn recip(&self) -> Option<Coeff> {
        if self.is_exact_zero() {
            return None;
        }
        let prec = self.prec();
        let mut norm = Float::with_val(prec, &self.re * &self.re);
        norm += &self.im * &self.im;
        let mut re = self.re.clone();
        re /= &norm;
        let mut im = self.im.clone();
        im /= &norm;
        im.neg_assign();
        Some(Coeff { re, im })
    }

    pub fn div(&self, other: &Coeff) -> Option<Coeff> {
        other.recip().map(|r| self.mul(&r))
    }

    /// Fixed-digit decimal rendering, stable for a given precision.
    pub fn to_decimal_parts(&self) -> (String, String) {
        let digits = decimal_digits(self.prec());
        (
            self.re.to_string_radix(10, Some(digits)),
            self.im.to_string_radix(10, Some(digits)),
        )
    }
}

pub(crate) fn decimal_digits(prec: u32) -> usize {
    (prec as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2
}

fn small(x: &Float, eps_exp: i32) -> bool {
    match x.get_exp() {
        None => true,
        // |x| < 2^exp
        Some(e) => e <= eps_exp,
    }
}

fn large(x: &Float, exp: i32) -> bool {
    match x.get_exp() {
        None => false,
        Some(e) => e > exp,
    }
}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let re = self.re.to_f64();
        let im = self.im.to_f64();
        if self.im.is_zero() {
            write!(f, "{re}")
        } else if self.re.is_zero() {
            write!(f, "{im}i")
        } else if im < 0.0 {
            write!(f, "({re}-{}i)", -im)
        } else {
            write!(f, "({re}+{im}i)")
        }
    }
}

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use super::ResonanceError;
use crate::formal::Coeff;

/// Frequency vector `Λ` with `λ_i = Σ_j L[i][j] ω_j` over ℚ-independent `ω_j`.
///
/// Resonance questions are decided on the rational matrix only; the numeric
/// values are used for divisors and diagnostics.
#[derive(Clone, Debug)]
pub struct FrequencyVector {
    exact: Vec<Vec<BigRational>>,
    /// `exact` with every column scaled to integers; same kernel.
    int_rows: Vec<Vec<i128>>,
    omega: Vec<Coeff>,
    numeric: Vec<Coeff>,
}

impl FrequencyVector {
    /// Builds `Λ` from rational pairs `(num, den)` and numeric basis values.
    pub fn new(exact: Vec<Vec<(i64, i64)>>, omega: Vec<Coeff>) -> Result<Self, ResonanceError> {
        let m = omega.len();
        let prec = omega
            .first()
            .map_or(crate::formal::DEFAULT_PRECISION, Coeff::prec);
        let mut rows = Vec::with_capacity(exact.len());
        for row in &exact {
            if row.len() != m {
                return Err(ResonanceError::Shape(format!(
                    "frequency row has {} entries, basis has {m}",
                    row.len()
                )));
            }
            let mut r = Vec::with_capacity(m);
            for &(num, den) in row {
                if den == 0 {
                    return Err(ResonanceError::ZeroDenominator);
                }
                r.push(BigRational::new(BigInt::from(num), BigInt::from(den)));
            }
            rows.push(r);
        }
        let int_rows = scale_columns(&rows, m)?;
        let numeric = rows
            .iter()
            .map(|r| {
                let mut acc = Coeff::zero(prec);
                for (q, w) in r.iter().zip(&omega) {
                    acc.add_mul(&rational_coeff(q, prec), w);
                }
                acc
            })
            .collect();
        Ok(FrequencyVector {
            exact: rows,
            int_rows,
            omega,
            numeric,
        })
    }

    /// Like [`FrequencyVector::new`], also checking user-supplied numeric `λ_i`
    /// against the exact representation to `1e-12` relative tolerance.
    pub fn with_numeric(
        exact: Vec<Vec<(i64, i64)>>,
        omega: Vec<Coeff>,
        numeric: &[(f64, f64)],
    ) -> Result<Self, ResonanceError> {
        let fv = FrequencyVector::new(exact, omega)?;
        if numeric.len() != fv.d() {
            return Err(ResonanceError::Shape("numeric frequency length".into()));
        }
        for (i, &(re, im)) in numeric.iter().enumerate() {
            let (ere, eim) = fv.lambda_c64(i);
            let diff = (re - ere).hypot(im - eim);
            let scale = ere.hypot(eim).max(1.0);
            if diff > 1e-12 * scale {
                return Err(ResonanceError::InconsistentNumeric(i));
            }
        }
        Ok(fv)
    }

    /// Integer frequencies over the single basis value `ω = 1`.
    pub fn integers(lams: &[i64], prec: u32) -> Self {
        let exact = lams.iter().map(|&l| vec![(l, 1)]).collect();
        FrequencyVector::new(exact, vec![Coeff::from_f64(prec, 1.0, 0.0)])
            .expect("valid integer frequencies")
    }

    pub fn d(&self) -> usize {
        self.exact.len()
    }

    pub fn m(&self) -> usize {
        self.omega.len()
    }

    pub fn exact(&self) -> &[Vec<BigRational>] {
        &self.exact
    }

    /// Column-scaled integer matrix with the same integer kernel as `exact`.
    pub fn int_rows(&self) -> &[Vec<i128>] {
        &self.int_rows
    }

    pub fn omega(&self) -> &[Coeff] {
        &self.omega
    }

    pub fn lambda(&self, i: usize) -> &Coeff {
        &self.numeric[i]
    }

    pub fn lambdas(&self) -> &[Coeff] {
        &self.numeric
    }

    pub fn lambda_c64(&self, i: usize) -> (f64, f64) {
        (self.numeric[i].re.to_f64(), self.numeric[i].im.to_f64())
    }

    pub fn precision(&self) -> u32 {
        self.numeric
            .first()
            .map_or(crate::formal::DEFAULT_PRECISION, Coeff::prec)
    }

    /// Exact test of `(Λ, v) = 0` for an integer vector `v`.
    pub fn pairing_is_zero(&self, v: &[i64]) -> bool {
        debug_assert_eq!(v.len(), self.d());
        (0..self.m()).all(|j| {
            self.int_rows
                .iter()
                .zip(v)
                .map(|(row, &k)| row[j] * k as i128)
                .sum::<i128>()
                == 0
        })
    }

    /// `(Λ, K) = 0`: the monomial `x^K` is invariant.
    pub fn is_invariant(&self, k: &[u32]) -> bool {
        let v: Vec<i64> = k.iter().map(|&a| a as i64).collect();
        self.pairing_is_zero(&v)
    }

    /// `(Λ, K) = λ_i`: the monomial field `x^K ∂_{x_i}` is resonant.
    pub fn is_resonant(&self, k: &[u32], i: usize) -> bool {
        let mut v: Vec<i64> = k.iter().map(|&a| a as i64).collect();
        v[i] -= 1;
        self.pairing_is_zero(&v)
    }

    /// Numeric `(Λ, K)`.
    pub fn pairing(&self, k: &[u32]) -> Coeff {
        let mut acc = Coeff::zero(self.precision());
        for (lam, &a) in self.numeric.iter().zip(k) {
            if a != 0 {
                let mut t = lam.clone();
                t.scale_u64(a as u64);
                acc.add_assign(&t);
            }
        }
        acc
    }

    /// Numeric divisor `λ_i − (Λ, K)`.
    pub fn divisor(&self, k: &[u32], i: usize) -> Coeff {
        let mut c = self.numeric[i].clone();
        c.sub_assign(&self.pairing(k));
        c
    }
}

/// Checks the test `(Λ, K) − λ_i = 0` exactly; `None` asks for invariance.
pub fn resonant_monomial_test(fv: &FrequencyVector, k: &[u32], direction: Option<usize>) -> bool {
    match direction {
        None => fv.is_invariant(k),
        Some(i) => fv.is_resonant(k, i),
    }
}

fn rational_coeff(q: &BigRational, prec: u32) -> Coeff {
    let big = |b: &BigInt| {
        rug::Integer::from_str_radix(&b.to_str_radix(10), 10).expect("decimal integer")
    };
    let mut re = rug::Float::with_val(prec, big(q.numer()));
    re /= big(q.denom());
    Coeff::real(re)
}

fn scale_columns(rows: &[Vec<BigRational>], m: usize) -> Result<Vec<Vec<i128>>, ResonanceError> {
    let mut out = vec![vec![0i128; m]; rows.len()];
    for j in 0..m {
        let mut lcm = BigInt::one();
        for r in rows {
            lcm = lcm.lcm(r[j].denom());
        }
        let lcm = BigRational::from_integer(lcm);
        for (i, r) in rows.iter().enumerate() {
            let v = (&r[j] * &lcm).to_integer();
            out[i][j] = v
                .to_i128()
                .filter(|x| x.abs() < (1i128 << 80))
                .ok_or(ResonanceError::Overflow)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha_beta(prec: u32) -> FrequencyVector {
        // (α+β, α, β)
        FrequencyVector::new(
            vec![
                vec![(1, 1), (1, 1)],
                vec![(1, 1), (0, 1)],
                vec![(0, 1), (1, 1)],
            ],
            vec![
                Coeff::from_f64(prec, 1.0, 0.0),
                Coeff::from_f64(prec, 2f64.sqrt(), 0.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn hopf_invariant_and_resonant_field() {
        let fv = FrequencyVector::integers(&[1, -1], 128);
        assert!(resonant_monomial_test(&fv, &[1, 1], None));
        assert!(resonant_monomial_test(&fv, &[2, 1], Some(0)));
        assert!(!resonant_monomial_test(&fv, &[2, 0], Some(0)));
    }

    #[test]
    fn sum_of_independent_frequencies() {
        let fv = alpha_beta(128);
        assert!(resonant_monomial_test(&fv, &[0, 1, 1], Some(0)));
        assert!(!resonant_monomial_test(&fv, &[0, 1, 1], None));
    }

    #[test]
    fn fractional_entries_scale_exactly() {
        let fv = FrequencyVector::new(
            vec![vec![(1, 2)], vec![(-1, 3)]],
            vec![Coeff::from_f64(128, 1.0, 0.0)],
        )
        .unwrap();
        assert!(fv.is_invariant(&[2, 3]));
        assert!(!fv.is_invariant(&[1, 1]));
    }

    #[test]
    fn numeric_consistency_is_checked() {
        let ex = vec![vec![(1, 1)], vec![(-1, 1)]];
        let om = vec![Coeff::from_f64(128, 0.5, 0.0)];
        assert!(
            FrequencyVector::with_numeric(ex.clone(), om.clone(), &[(0.5, 0.0), (-0.5, 0.0)])
                .is_ok()
        );
        assert_eq!(
            FrequencyVector::with_numeric(ex, om, &[(0.5, 0.0), (-0.6, 0.0)]).unwrap_err(),
            ResonanceError::InconsistentNumeric(1)
        );
    }
}

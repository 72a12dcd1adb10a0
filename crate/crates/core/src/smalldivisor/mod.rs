//! Small-divisor diagnostics: `σ(Λ)_k`, Bruno sums and the parameter sets `Z_{n,s}`.

use thiserror::Error;

use crate::resonance::FrequencyVector;

/// Largest supported `kmax`; enumeration covers `‖J‖ ≤ 2^kmax`.
///
/// The number of exponents visited grows like `2^(kmax·d) / d!`.
pub const KMAX_CAP: u32 = 14;

/// Divisors with modulus at or below this are re-checked exactly.
const FLOAT_ZERO: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmallDivisorError {
    #[error("kmax = {0} exceeds the cap {KMAX_CAP}")]
    KmaxTooLarge(u32),
    #[error("sequence entry a_{0} = {1} is not positive")]
    NonPositive(usize, f64),
    #[error("need 0 < s <= s0, got s = {s}, s0 = {s0}")]
    RadiusOutOfRange { s: f64, s0: f64 },
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
}

/// Norm used for `‖J‖`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Norm {
    #[default]
    L1,
    LInf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BrunoVerdict {
    /// Partial sums level off up to the last computed index.
    BrunoUpToKmax,
    DivergingTrend,
    /// Some `σ_k` has no non-zero divisor at all.
    ContainsExactZero,
}

impl BrunoVerdict {
    pub fn label(self) -> &'static str {
        match self {
            BrunoVerdict::BrunoUpToKmax => "bruno_up_to_kmax",
            BrunoVerdict::DivergingTrend => "diverging_trend",
            BrunoVerdict::ContainsExactZero => "contains_exact_zero",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BrunoReport {
    /// `σ_0 … σ_kmax`; `None` when every divisor in range vanishes.
    pub sigma: Vec<Option<f64>>,
    /// `Σ_{k≤K} |log σ_k| / 2^k`.
    pub partial_sums: Vec<f64>,
    pub verdict: BrunoVerdict,
}

/// Partial sums of `Σ |log a_k| / 2^k` with a tail-ratio verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct BrunoSum {
    pub partial_sums: Vec<f64>,
    pub verdict: BrunoVerdict,
}

pub fn bruno_sum(a: &[f64]) -> Result<BrunoSum, SmallDivisorError> {
    if let Some((k, &v)) = a.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(SmallDivisorError::NonPositive(k, v));
    }
    let terms: Vec<f64> = a
        .iter()
        .enumerate()
        .map(|(k, v)| v.ln().abs() / 2f64.powi(k as i32))
        .collect();
    let partial_sums = terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    Ok(BrunoSum {
        partial_sums,
        verdict: tail_verdict(&terms),
    })
}

/// Converging when the last few term ratios average below 3/4.
fn tail_verdict(terms: &[f64]) -> BrunoVerdict {
    if terms.iter().all(|&t| t == 0.0) {
        return BrunoVerdict::BrunoUpToKmax;
    }
    let ratios: Vec<f64> = terms
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    let tail = &ratios[ratios.len().saturating_sub(4)..];
    if tail.is_empty() {
        return BrunoVerdict::DivergingTrend;
    }
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    if mean < 0.75 {
        BrunoVerdict::BrunoUpToKmax
    } else {
        BrunoVerdict::DivergingTrend
    }
}

/// Running minima of non-zero `|(ν, J) − ν_i|` over shells of growing `‖J‖`.
///
/// `is_zero(J, i)` decides divisors whose float modulus is tiny.
fn scan<Z>(nu: &[(f64, f64)], kmax: u32, norm: Norm, is_zero: Z) -> Vec<Option<f64>>
where
    Z: Fn(&[u32], usize) -> bool,
{
    struct Walk<'a, Z> {
        nu: &'a [(f64, f64)],
        is_zero: Z,
        j: Vec<u32>,
        best: Option<f64>,
        scale: f64,
    }

    impl<Z: Fn(&[u32], usize) -> bool> Walk<'_, Z> {
        fn visit(&mut self, re: f64, im: f64) {
            if self.j.iter().all(|&v| v == 0) {
                return;
            }
            for (i, &(lr, li)) in self.nu.iter().enumerate() {
                let m = (re - lr).hypot(im - li);
                if m <= FLOAT_ZERO * self.scale && (self.is_zero)(&self.j, i) {
                    continue;
                }
                if self.best.is_none_or(|b| m < b) {
                    self.best = Some(m);
                }
            }
        }

        /// Exponents with `Σ j = n` from coordinate `c` on.
        fn simplex(&mut self, c: usize, n: u32, re: f64, im: f64) {
            let d = self.nu.len();
            if c + 1 == d {
                self.j[c] = n;
                let (lr, li) = self.nu[c];
                self.visit(re + n as f64 * lr, im + n as f64 * li);
                self.j[c] = 0;
                return;
            }
            let (lr, li) = self.nu[c];
            for k in 0..=n {
                self.j[c] = k;
                self.simplex(c + 1, n - k, re + k as f64 * lr, im + k as f64 * li);
            }
            self.j[c] = 0;
        }

        /// Exponents with `max j = n` from coordinate `c` on.
        fn cube(&mut self, c: usize, n: u32, hit: bool, re: f64, im: f64) {
            let d = self.nu.len();
            if c == d {
                if hit {
                    self.visit(re, im);
                }
                return;
            }
            let (lr, li) = self.nu[c];
            for k in 0..=n {
                self.j[c] = k;
                self.cube(
                    c + 1,
                    n,
                    hit || k == n,
                    re + k as f64 * lr,
                    im + k as f64 * li,
                );
            }
            self.j[c] = 0;
        }
    }

    let d = nu.len();
    let scale = nu.iter().map(|&(r, i)| r.hypot(i)).fold(1.0, f64::max);
    let mut walk = Walk {
        nu,
        is_zero,
        j: vec![0; d],
        best: None,
        scale,
    };
    let mut out = Vec::with_capacity(kmax as usize + 1);
    let mut shell = 1u32;
    for k in 0..=kmax {
        let bound = 1u32 << k;
        while shell <= bound && d > 0 {
            match norm {
                Norm::L1 => walk.simplex(0, shell, 0.0, 0.0),
                Norm::LInf => walk.cube(0, shell, false, 0.0, 0.0),
            }
            shell += 1;
        }
        out.push(walk.best);
    }
    out
}

/// `σ(Λ)_k = min_i { |(Λ, J − E_i)| ≠ 0 : J ∈ ℕ^d \ 0, ‖J‖ ≤ 2^k }` for `k ≤ kmax`.
pub fn sigma_sequence(
    fv: &FrequencyVector,
    kmax: u32,
    norm: Norm,
) -> Result<BrunoReport, SmallDivisorError> {
    if kmax > KMAX_CAP {
        return Err(SmallDivisorError::KmaxTooLarge(kmax));
    }
    let nu: Vec<(f64, f64)> = (0..fv.d()).map(|i| fv.lambda_c64(i)).collect();
    let sigma = scan(&nu, kmax, norm, |j, i| fv.is_resonant(j, i));
    Ok(report(sigma))
}

fn report(sigma: Vec<Option<f64>>) -> BrunoReport {
    if sigma.iter().any(Option::is_none) {
        let mut sums = Vec::new();
        let mut acc = 0.0;
        for (k, s) in sigma.iter().enumerate() {
            if let Some(s) = s {
                acc += s.ln().abs() / 2f64.powi(k as i32);
            }
            sums.push(acc);
        }
        return BrunoReport {
            sigma,
            partial_sums: sums,
            verdict: BrunoVerdict::ContainsExactZero,
        };
    }
    let values: Vec<f64> = sigma.iter().map(|s| s.unwrap()).collect();
    let sum = bruno_sum(&values).expect("σ values are positive");
    BrunoReport {
        sigma,
        partial_sums: sum.partial_sums,
        verdict: sum.verdict,
    }
}

/// Whether `φ ∈ Z_{n,s}`: `|φ_i| < s` and `σ(Λ+φ)_k ≥ a_k (s0 − s)` for `k ≤ n`.
///
/// A shifted divisor counts as zero only if it is an exact resonance of `Λ`
/// and its `φ` contribution is exactly zero.
pub fn cantor_membership(
    fv: &FrequencyVector,
    phi: &[(f64, f64)],
    n: u32,
    s: f64,
    s0: f64,
    a: &[f64],
) -> Result<bool, SmallDivisorError> {
    if !(s > 0.0 && s <= s0) {
        return Err(SmallDivisorError::RadiusOutOfRange { s, s0 });
    }
    if n > KMAX_CAP {
        return Err(SmallDivisorError::KmaxTooLarge(n));
    }
    if phi.len() != fv.d() {
        return Err(SmallDivisorError::Length {
            expected: fv.d(),
            got: phi.len(),
        });
    }
    if a.len() <= n as usize {
        return Err(SmallDivisorError::Length {
            expected: n as usize + 1,
            got: a.len(),
        });
    }
    if phi.iter().any(|&(r, i)| r.hypot(i) >= s) {
        return Ok(false);
    }
    let nu: Vec<(f64, f64)> = (0..fv.d())
        .map(|i| {
            let (lr, li) = fv.lambda_c64(i);
            (lr + phi[i].0, li + phi[i].1)
        })
        .collect();
    let phi_part_zero = |j: &[u32], i: usize| {
        let mut re = -phi[i].0;
        let mut im = -phi[i].1;
        for (&jk, p) in j.iter().zip(phi) {
            re += jk as f64 * p.0;
            im += jk as f64 * p.1;
        }
        re == 0.0 && im == 0.0
    };
    let sigma = scan(&nu, n, Norm::L1, |j, i| {
        fv.is_resonant(j, i) && phi_part_zero(j, i)
    });
    Ok(sigma
        .iter()
        .zip(a)
        .all(|(sk, ak)| sk.is_none_or(|v| v >= ak * (s0 - s))))
}

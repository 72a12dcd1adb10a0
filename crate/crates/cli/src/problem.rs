//! Problem files: a frequency vector, a vector field and run settings, in TOML.

use std::sync::Arc;

use resonant_forms::formal::{Coeff, Derivation, Direction, Ring, DEFAULT_PRECISION};
use resonant_forms::normalform::{linear_field, Mode};
use resonant_forms::resonance::FrequencyVector;
use serde::Deserialize;

use crate::CliError;

/// An exact rational `[num, den]`, an integer, or a decimal string.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Ratio([i64; 2]),
    Int(i64),
    Decimal(String),
}

impl Number {
    fn to_coeff(&self, prec: u32, what: &str) -> Result<Coeff, CliError> {
        match self {
            Number::Ratio([_, 0]) => Err(CliError::Parse(format!("{what}: zero denominator"))),
            Number::Ratio([n, d]) => Ok(Coeff::from_ratio(prec, *n, *d)),
            Number::Int(n) => Ok(Coeff::from_ratio(prec, *n, 1)),
            Number::Decimal(s) => Coeff::parse_decimal(prec, s, "0")
                .ok_or_else(|| CliError::Parse(format!("{what}: cannot parse {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldTerm {
    /// 1-based index of the `∂_{x_i}` direction.
    pub target: usize,
    /// Exponent of `x`.
    pub exponent: Vec<u32>,
    /// Exponent of `μ`; empty means zero.
    #[serde(default)]
    pub mu: Vec<u32>,
    pub coefficient: Number,
    /// Imaginary part of the coefficient.
    #[serde(default)]
    pub imag: Option<Number>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    #[default]
    Versal,
    PoincareDulac,
}

/// Optional `Z_{n,s}` membership query for the `bruno` command.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CantorQuery {
    /// `φ_i` as `[re, im]`.
    pub phi: Vec<[f64; 2]>,
    pub n: u32,
    pub s: f64,
    pub s0: f64,
    pub a: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dim: usize,
    /// Numeric values of the ℚ-independent basis `ω_1, …, ω_m`.
    pub trans_basis: Vec<Number>,
    /// `λ_i = Σ_j lambda_exact[i][j] ω_j` with rational entries `[num, den]`.
    pub lambda_exact: Vec<Vec<[i64; 2]>>,
    /// Optional numeric `λ_i` as `[re, im]`, checked against the exact data.
    #[serde(default)]
    pub lambda_numeric: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub mu_count: usize,
    #[serde(default)]
    pub field_terms: Vec<FieldTerm>,
    #[serde(default)]
    pub truncation: Option<u32>,
    #[serde(default)]
    pub precision: Option<u32>,
    #[serde(default)]
    pub mode: ModeName,
    #[serde(default)]
    pub cantor: Option<CantorQuery>,
}

/// Command-line overrides applied on top of a problem file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub truncation: Option<u32>,
    pub precision: Option<u32>,
    /// Fallback precision when neither the flag nor the file sets one.
    pub default_precision: Option<u32>,
}

pub const DEFAULT_TRUNCATION: u32 = 8;

/// A validated problem ready for the pipeline.
#[derive(Clone, Debug)]
pub struct Problem {
    pub file: ProblemFile,
    pub fv: FrequencyVector,
    pub ring: Arc<Ring>,
    pub trunc: u32,
    pub prec: u32,
    pub mode: Mode,
    /// The input field; detuned (`S_v + …`) in versal mode.
    pub field: Derivation,
}

impl Problem {
    pub fn parse(text: &str, ov: &Overrides) -> Result<Problem, CliError> {
        let file: ProblemFile = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        Problem::from_file(file, ov)
    }

    pub fn from_file(file: ProblemFile, ov: &Overrides) -> Result<Problem, CliError> {
        let prec = ov
            .precision
            .or(file.precision)
            .or(ov.default_precision)
            .unwrap_or(DEFAULT_PRECISION);
        if !(64..=16384).contains(&prec) {
            return Err(CliError::Parse(format!(
                "precision {prec} outside 64..=16384"
            )));
        }
        let trunc = ov
            .truncation
            .or(file.truncation)
            .unwrap_or(DEFAULT_TRUNCATION);
        if !(2..=64).contains(&trunc) {
            return Err(CliError::Parse(format!(
                "truncation {trunc} outside 2..=64"
            )));
        }
        let d = file.dim;
        if d == 0 || file.lambda_exact.len() != d {
            return Err(CliError::Parse(format!(
                "dim is {d} but lambda_exact has {} rows",
                file.lambda_exact.len()
            )));
        }
        if file.trans_basis.is_empty() {
            return Err(CliError::Parse("trans_basis is empty".into()));
        }
        let omega = file
            .trans_basis
            .iter()
            .enumerate()
            .map(|(j, w)| w.to_coeff(prec, &format!("trans_basis[{j}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let exact = file
            .lambda_exact
            .iter()
            .map(|row| row.iter().map(|&[n, q]| (n, q)).collect())
            .collect();
        let fv = match &file.lambda_numeric {
            Some(num) => {
                let pairs: Vec<(f64, f64)> = num.iter().map(|&[re, im]| (re, im)).collect();
                FrequencyVector::with_numeric(exact, omega, &pairs)
            }
            None => FrequencyVector::new(exact, omega),
        }
        .map_err(|e| CliError::Parse(e.to_string()))?;

        let mode = match file.mode {
            ModeName::Versal => Mode::Versal,
            ModeName::PoincareDulac => Mode::PoincareDulac,
        };
        let ring = Ring::new(d, file.mu_count, prec);
        let field = build_field(&file, &fv, &ring, trunc, mode)?;
        Ok(Problem {
            file,
            fv,
            ring,
            trunc,
            prec,
            mode,
            field,
        })
    }
}

fn build_field(
    file: &ProblemFile,
    fv: &FrequencyVector,
    ring: &Arc<Ring>,
    trunc: u32,
    mode: Mode,
) -> Result<Derivation, CliError> {
    let d = file.dim;
    let l = file.mu_count;
    let prec = ring.prec;
    let mut diag = vec![Coeff::zero(prec); d];
    let mut rest = Vec::new();
    for (n, t) in file.field_terms.iter().enumerate() {
        let what = format!("field_terms[{n}]");
        if t.target == 0 || t.target > d {
            return Err(CliError::Parse(format!(
                "{what}: target {} outside 1..={d}",
                t.target
            )));
        }
        if t.exponent.len() != d {
            return Err(CliError::Parse(format!(
                "{what}: exponent needs {d} entries"
            )));
        }
        let mu = if t.mu.is_empty() {
            vec![0; l]
        } else {
            t.mu.clone()
        };
        if mu.len() != l {
            return Err(CliError::Parse(format!("{what}: mu needs {l} entries")));
        }
        let mut c = t.coefficient.to_coeff(prec, &what)?;
        if let Some(im) = &t.imag {
            c.im = im.to_coeff(prec, &what)?.re;
        }
        if c.is_exact_zero() {
            continue;
        }
        let x_deg: u32 = t.exponent.iter().sum();
        let mu_deg: u32 = mu.iter().sum();
        let i = t.target - 1;
        if x_deg == 0 {
            return Err(CliError::Parse(format!(
                "{what}: constant term, the origin must be a singular point"
            )));
        }
        if x_deg == 1 && mu_deg == 0 {
            let j = t.exponent.iter().position(|&k| k == 1).expect("degree one");
            if j != i {
                return Err(CliError::Parse(format!(
                    "{what}: linear part is not diagonal (x{} in direction {})",
                    j + 1,
                    t.target
                )));
            }
            diag[i].add_assign(&c);
            continue;
        }
        rest.push((
            Direction::X(i),
            ring.exponent(&t.exponent, &vec![0; d], &mu),
            c,
        ));
    }
    for (i, c) in diag.iter().enumerate() {
        let mut diff = c.clone();
        diff.sub_assign(fv.lambda(i));
        let scale = fv.lambda(i).abs_f64().max(1.0);
        if diff.abs_f64() > 1e-12 * scale {
            let (re, im) = fv.lambda_c64(i);
            return Err(CliError::Parse(format!(
                "linear coefficient of x{0} d/dx{0} does not match lambda_{0} = {re}{im:+}i",
                i + 1
            )));
        }
    }
    let base = linear_field(ring, fv, trunc, mode == Mode::Versal);
    base.add(&Derivation::from_terms(ring, trunc, rest))
        .map_err(|e| CliError::Parse(e.to_string()))
}

//! JSON encoding of series, fields and verdicts, and decoding for `verify`.

use std::sync::Arc;

use resonant_forms::formal::{fmt_monomial, Coeff, Derivation, Direction, Exponent, Ring, Series};
use resonant_forms::resonance::{Decomposition, ResonanceBasis, Verdict, Witness};
use resonant_forms::versal::{fmt_u_monomial, USeries};
use serde_json::{json, Value};

use crate::CliError;

fn dir_name(dir: Direction) -> String {
    match dir {
        Direction::X(i) => format!("x{}", i + 1),
        Direction::Phi(i) => format!("phi{}", i + 1),
    }
}

fn parse_dir(s: &str, d: usize) -> Option<Direction> {
    let (ctor, idx): (fn(usize) -> Direction, &str) = if let Some(r) = s.strip_prefix("phi") {
        (Direction::Phi, r)
    } else {
        (Direction::X, s.strip_prefix('x')?)
    };
    let i: usize = idx.parse().ok()?;
    (1..=d).contains(&i).then(|| ctor(i - 1))
}

pub fn coeff_json(c: &Coeff) -> Value {
    let (re, im) = c.to_decimal_parts();
    json!([re, im])
}

pub fn field_json(x: &Derivation) -> Value {
    Value::Array(
        x.terms()
            .map(|(dir, e, c)| {
                json!({
                    "dir": dir_name(dir),
                    "x": e.x_vec(),
                    "phi": e.phi_vec(),
                    "mu": e.mu_vec(),
                    "c": coeff_json(c),
                })
            })
            .collect(),
    )
}

pub fn series_json(f: &Series) -> Value {
    Value::Array(
        f.terms()
            .map(|(e, c)| json!({"x": e.x_vec(), "phi": e.phi_vec(), "mu": e.mu_vec(), "c": coeff_json(c)}))
            .collect(),
    )
}

pub fn useries_json(f: &USeries) -> Value {
    json!({
        "terms": f.terms.iter().map(|t| json!({"u": t.u, "mu": t.mu, "c": coeff_json(&t.coeff)})).collect::<Vec<_>>(),
        "display": f.to_string(),
    })
}

pub fn verdict_json(v: &Verdict) -> Value {
    let witness = match v {
        Verdict::Fails(Witness::Relation { j, first, second }) => json!({
            "kind": "relation",
            "j": j,
            "first": first,
            "second": second,
        }),
        Verdict::Fails(Witness::Field {
            k,
            direction,
            representations,
        }) => json!({
            "kind": "field",
            "k": k,
            "direction": direction + 1,
            "representations": representations,
        }),
        Verdict::Unknown(why) => json!({"kind": "unknown", "reason": why}),
        Verdict::Holds => Value::Null,
    };
    json!({"verdict": v.label(), "witness": witness, "display": v.to_string()})
}

pub fn basis_json(b: &ResonanceBasis) -> Value {
    json!({
        "generators": b.generators,
        "deg_bound": b.deg_bound,
        "complete": b.complete,
        "extreme_rays": b.extreme_rays,
        "p1": verdict_json(&b.p1),
        "p2": verdict_json(&b.p2),
    })
}

/// One line per term, with resonant `x^K ∂_{x_i}` written as `u^m x_i ∂_{x_i}`.
pub fn display_with_u(x: &Derivation, basis: &ResonanceBasis) -> Vec<String> {
    x.terms()
        .map(|(dir, e, c)| {
            let plain = || format!("{c}*{}*d/d{}", fmt_monomial(e), dir_name(dir));
            let Direction::X(i) = dir else { return plain() };
            let mut k = e.x_vec();
            if k[i] == 0 {
                return plain();
            }
            k[i] -= 1;
            let Decomposition::Unique(m) = basis.decompose(&k) else {
                return plain();
            };
            let rest = Exponent::new(&vec![0; e.dim()], &e.phi_vec(), &vec![0; e.mu_count()]);
            let mut parts = vec![c.to_string()];
            for s in [fmt_u_monomial(&m, &e.mu_vec()), fmt_monomial(&rest)] {
                if s != "1" {
                    parts.push(s);
                }
            }
            parts.push(format!("x{}*d/dx{}", i + 1, i + 1));
            parts.join("*")
        })
        .collect()
}

fn bad(what: &str) -> CliError {
    CliError::Parse(format!("result file: malformed {what}"))
}

fn u32_vec(v: &Value, len: usize, what: &str) -> Result<Vec<u32>, CliError> {
    let arr = v.as_array().ok_or_else(|| bad(what))?;
    if arr.len() != len {
        return Err(bad(what));
    }
    arr.iter()
        .map(|x| {
            x.as_u64()
                .and_then(|n| u32::try_from(n).ok())
                .ok_or_else(|| bad(what))
        })
        .collect()
}

fn parse_coeff(v: &Value, prec: u32) -> Result<Coeff, CliError> {
    let pair = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| bad("coefficient"))?;
    let re = pair[0].as_str().ok_or_else(|| bad("coefficient"))?;
    let im = pair[1].as_str().ok_or_else(|| bad("coefficient"))?;
    Coeff::parse_decimal(prec, re, im).ok_or_else(|| bad("coefficient"))
}

/// Inverse of [`field_json`].
pub fn parse_field(v: &Value, ring: &Arc<Ring>, trunc: u32) -> Result<Derivation, CliError> {
    let arr = v.as_array().ok_or_else(|| bad("field"))?;
    let mut terms = Vec::with_capacity(arr.len());
    for t in arr {
        let dir = t["dir"]
            .as_str()
            .and_then(|s| parse_dir(s, ring.d))
            .ok_or_else(|| bad("direction"))?;
        let x = u32_vec(&t["x"], ring.d, "x exponent")?;
        let phi = u32_vec(&t["phi"], ring.d, "phi exponent")?;
        let mu = u32_vec(&t["mu"], ring.l, "mu exponent")?;
        terms.push((
            dir,
            ring.exponent(&x, &phi, &mu),
            parse_coeff(&t["c"], ring.prec)?,
        ));
    }
    Ok(Derivation::from_terms(ring, trunc, terms))
}

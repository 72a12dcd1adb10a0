use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use super::coeff::Coeff;
use super::exponent::{Exponent, Var};
use super::ring::Ring;
use super::FormalError;

/// Sparse truncated power series: every stored term has weight `< trunc`
/// and a coefficient above the ring's zero threshold.
#[derive(Clone, Debug)]
pub struct Series {
    ring: Arc<Ring>,
    trunc: u32,
    terms: BTreeMap<Exponent, Coeff>,
}

/// Accumulator for building a series term by term.
pub(crate) struct Acc {
    map: HashMap<Exponent, Coeff>,
}

impl Acc {
    pub(crate) fn new() -> Self {
        Acc {
            map: HashMap::new(),
        }
    }

    pub(crate) fn add(&mut self, e: Exponent, c: &Coeff) {
        match self.map.get_mut(&e) {
            Some(v) => v.add_assign(c),
            None => {
                self.map.insert(e, c.clone());
            }
        }
    }

    pub(crate) fn add_mul(&mut self, e: Exponent, a: &Coeff, b: &Coeff) {
        match self.map.get_mut(&e) {
            Some(v) => v.add_mul(a, b),
            None => {
                self.map.insert(e, a.mul(b));
            }
        }
    }

    pub(crate) fn finish(self, ring: &Arc<Ring>, trunc: u32) -> Series {
        let eps = ring.eps_exp;
        let terms = self
            .map
            .into_iter()
            .filter(|(e, c)| e.weight() < trunc && !c.is_negligible(eps))
            .collect();
        Series {
            ring: ring.clone(),
            trunc,
            terms,
        }
    }
}

impl Series {
    pub fn zero(ring: &Arc<Ring>, trunc: u32) -> Self {
        Series {
            ring: ring.clone(),
            trunc,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(ring: &Arc<Ring>, trunc: u32, e: Exponent, c: Coeff) -> Self {
        let mut s = Series::zero(ring, trunc);
        if e.weight() < trunc && !c.is_negligible(ring.eps_exp) {
            s.terms.insert(e, c);
        }
        s
    }

    pub fn constant(ring: &Arc<Ring>, trunc: u32, c: Coeff) -> Self {
        Series::monomial(ring, trunc, ring.unit_exponent(), c)
    }

    pub fn one(ring: &Arc<Ring>, trunc: u32) -> Self {
        Series::constant(ring, trunc, ring.coeff(1.0, 0.0))
    }

    pub fn var(ring: &Arc<Ring>, trunc: u32, v: Var) -> Self {
        let e = ring.unit_exponent().raise(v, 1);
        Series::monomial(ring, trunc, e, ring.coeff(1.0, 0.0))
    }

    pub fn from_terms<I>(ring: &Arc<Ring>, trunc: u32, terms: I) -> Self
    where
        I: IntoIterator<Item = (Exponent, Coeff)>,
    {
        let mut acc = Acc::new();
        for (e, c) in terms {
            acc.add(e, &c);
        }
        acc.finish(ring, trunc)
    }

    pub fn ring(&self) -> &Arc<Ring> {
        &self.ring
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Coeff)> {
        self.terms.iter()
    }

    pub fn coeff(&self, e: &Exponent) -> Option<&Coeff> {
        self.terms.get(e)
    }

    pub fn min_weight(&self) -> Option<u32> {
        self.terms.keys().next().map(Exponent::weight)
    }

    /// Largest coefficient modulus, `0` for the zero series.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(Coeff::abs_f64).fold(0.0, f64::max)
    }

    /// Changes the truncation order, dropping terms that no longer fit.
    pub fn with_trunc(&self, trunc: u32) -> Series {
        Series {
            ring: self.ring.clone(),
            trunc,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.weight() < trunc)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Keeps exactly the terms with `lo ≤ weight < hi`.
    pub fn truncate_range(&self, lo: u32, hi: u32) -> Series {
        self.filter(|e, _| e.weight() >= lo && e.weight() < hi)
    }

    pub fn filter<F: Fn(&Exponent, &Coeff) -> bool>(&self, keep: F) -> Series {
        Series {
            ring: self.ring.clone(),
            trunc: self.trunc,
            terms: self
                .terms
                .iter()
                .filter(|(e, c)| keep(e, c))
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    fn check_trunc(&self, other: &Series) -> Result<(), FormalError> {
        if self.trunc != other.trunc {
            return Err(FormalError::TruncationMismatch(self.trunc, other.trunc));
        }
        Ok(())
    }

    pub fn add(&self, other: &Series) -> Result<Series, FormalError> {
        self.check_trunc(other)?;
        Ok(self.add_unchecked(other))
    }

    pub fn sub(&self, other: &Series) -> Result<Series, FormalError> {
        self.check_trunc(other)?;
        Ok(self.add_unchecked(&other.neg()))
    }

    /// Sum truncated at `self.trunc`, regardless of `other.trunc`.
    pub(crate) fn add_unchecked(&self, other: &Series) -> Series {
        let mut terms = self.terms.clone();
        let eps = self.ring.eps_exp;
        for (e, c) in &other.terms {
            if e.weight() >= self.trunc {
                continue;
            }
            match terms.get_mut(e) {
                Some(v) => {
                    v.add_assign(c);
                    if v.is_negligible(eps) {
                        terms.remove(e);
                    }
                }
                None => {
                    terms.insert(e.clone(), c.clone());
                }
            }
        }
        Series {
            ring: self.ring.clone(),
            trunc: self.trunc,
            terms,
        }
    }

    pub(crate) fn sub_unchecked(&self, other: &Series) -> Series {
        self.add_unchecked(&other.neg())
    }

    pub fn neg(&self) -> Series {
        Series {
            ring: self.ring.clone(),
            trunc: self.trunc,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn scale(&self, k: &Coeff) -> Series {
        let eps = self.ring.eps_exp;
        Series {
            ring: self.ring.clone(),
            trunc: self.trunc,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c.mul(k)))
                .filter(|(_, c)| !c.is_negligible(eps))
                .collect(),
        }
    }

    /// Product of two series with the same truncation order.
    pub fn mul(&self, other: &Series) -> Result<Series, FormalError> {
        self.check_trunc(other)?;
        Ok(self.mul_bounded(other, self.trunc))
    }

    /// Product keeping terms of weight `< bound`; inputs may be truncated differently.
    pub(crate) fn mul_bounded(&self, other: &Series, bound: u32) -> Series {
        let mut acc = Acc::new();
        self.mul_into(other, bound, &mut acc);
        acc.finish(&self.ring, bound)
    }

    pub(crate) fn mul_into(&self, other: &Series, bound: u32, acc: &mut Acc) {
        for (ea, ca) in &self.terms {
            if ea.weight() >= bound {
                break;
            }
            let room = bound - ea.weight();
            for (eb, cb) in &other.terms {
                if eb.weight() >= room {
                    break;
                }
                acc.add_mul(ea.add(eb), ca, cb);
            }
        }
    }

    /// Partial derivative with respect to one variable.
    pub fn partial(&self, v: Var) -> Series {
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            if let Some((lowered, k)) = e.lower(v) {
                let mut c = c.clone();
                c.scale_u64(k as u64);
                terms.insert(lowered, c);
            }
        }
        Series {
            ring: self.ring.clone(),
            trunc: self.trunc,
            terms,
        }
    }

    /// Multiplicative inverse of a unit by the truncated geometric series.
    pub fn inverse(&self) -> Result<Series, FormalError> {
        let unit = self.ring.unit_exponent();
        let c0 = self.terms.get(&unit).ok_or(FormalError::NotAUnit)?;
        let inv0 = c0.recip().ok_or(FormalError::NotAUnit)?;
        // self = c0 (1 + h), 1/self = inv0 Σ (-h)^k
        let mut h = self.scale(&inv0);
        h.terms.remove(&unit);
        let minus_h = h.neg();
        let mut out = Series::one(&self.ring, self.trunc);
        let mut power = Series::one(&self.ring, self.trunc);
        loop {
            power = power.mul_bounded(&minus_h, self.trunc);
            if power.is_zero() {
                break;
            }
            out = out.add_unchecked(&power);
        }
        Ok(out.scale(&inv0))
    }

    /// Replaces each `φ_j` by `g[j]`, truncating at `self.trunc`.
    pub fn substitute_phi(&self, g: &[Series]) -> Series {
        assert_eq!(g.len(), self.ring.d);
        let trunc = self.trunc;
        let mut powers: Vec<Vec<Series>> = g
            .iter()
            .map(|gj| vec![Series::one(&self.ring, trunc), gj.with_trunc(trunc)])
            .collect();
        let mut acc = Acc::new();
        for (e, c) in &self.terms {
            let mut term = Series::monomial(&self.ring, trunc, e.without_phi(), c.clone());
            for (j, &a) in e.phi().iter().enumerate() {
                let a = a as usize;
                if a == 0 {
                    continue;
                }
                while powers[j].len() <= a {
                    let next = powers[j].last().unwrap().mul_bounded(&powers[j][1], trunc);
                    powers[j].push(next);
                }
                term = term.mul_bounded(&powers[j][a], trunc);
                if term.is_zero() {
                    break;
                }
            }
            for (e, c) in term.terms {
                acc.add(e, &c);
            }
        }
        acc.finish(&self.ring, trunc)
    }

    /// Largest coefficient modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Series) -> f64 {
        self.sub_unchecked(&other.with_trunc(self.trunc)).max_abs()
    }

    pub(crate) fn insert_raw(&mut self, e: Exponent, c: Coeff) {
        if e.weight() < self.trunc && !c.is_negligible(self.ring.eps_exp) {
            self.terms.insert(e, c);
        }
    }
}

pub fn fmt_monomial(e: &Exponent) -> String {
    let mut parts = Vec::new();
    let mut push = |name: &str, i: usize, k: u16| {
        if k == 1 {
            parts.push(format!("{name}{}", i + 1));
        } else if k > 1 {
            parts.push(format!("{name}{}^{k}", i + 1));
        }
    };
    for (i, &k) in e.x().iter().enumerate() {
        push("x", i, k);
    }
    for (i, &k) in e.phi().iter().enumerate() {
        push("phi", i, k);
    }
    for (i, &k) in e.mu().iter().enumerate() {
        push("mu", i, k);
    }
    if parts.is_empty() {
        "1".to_string()
    } else {
        parts.join("*")
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}*{}", fmt_monomial(e))?;
        }
        Ok(())
    }
}

use std::fmt;
use std::sync::Arc;

use super::coeff::Coeff;
use super::exponent::{Exponent, Var, PHI_WEIGHT};
use super::ring::Ring;
use super::series::{fmt_monomial, Acc, Series};
use super::FormalError;

/// Direction of a monomial vector field term.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// `∂/∂x_i`
    X(usize),
    /// `∂/∂φ_i`
    Phi(usize),
}

impl Direction {
    /// Weight removed by differentiating along this direction.
    pub fn weight(self) -> u32 {
        match self {
            Direction::X(_) => 1,
            Direction::Phi(_) => PHI_WEIGHT,
        }
    }

    pub fn var(self) -> Var {
        match self {
            Direction::X(i) => Var::X(i),
            Direction::Phi(i) => Var::Phi(i),
        }
    }

    /// Order of the term `x^K φ^A μ^B ∂` with the given exponent.
    pub fn term_order(self, e: &Exponent) -> i64 {
        e.weight() as i64 - self.weight() as i64
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::X(i) => write!(f, "d/dx{}", i + 1),
            Direction::Phi(i) => write!(f, "d/dphi{}", i + 1),
        }
    }
}

/// Relative vector field `Σ a_i ∂_{x_i} + Σ b_i ∂_{φ_i}` keeping terms of order `< trunc`.
///
/// A term `c x^K φ^A μ^B ∂_{x_i}` has order `wt − 1`; along `∂_{φ_i}` it has
/// order `wt − 2`. There are never `∂_μ` components.
#[derive(Clone, Debug)]
pub struct Derivation {
    ring: Arc<Ring>,
    trunc: u32,
    x: Vec<Series>,
    phi: Vec<Series>,
}

impl Derivation {
    pub fn zero(ring: &Arc<Ring>, trunc: u32) -> Self {
        let x = (0..ring.d)
            .map(|_| Series::zero(ring, trunc + Direction::X(0).weight()))
            .collect();
        let phi = (0..ring.d)
            .map(|_| Series::zero(ring, trunc + Direction::Phi(0).weight()))
            .collect();
        Derivation {
            ring: ring.clone(),
            trunc,
            x,
            phi,
        }
    }

    pub fn monomial(ring: &Arc<Ring>, trunc: u32, dir: Direction, e: Exponent, c: Coeff) -> Self {
        let mut out = Derivation::zero(ring, trunc);
        let comp = out.component_mut(dir);
        comp.insert_raw(e, c);
        out
    }

    pub fn from_terms<I>(ring: &Arc<Ring>, trunc: u32, terms: I) -> Self
    where
        I: IntoIterator<Item = (Direction, Exponent, Coeff)>,
    {
        let d = ring.d;
        let mut accs: Vec<Acc> = (0..2 * d).map(|_| Acc::new()).collect();
        for (dir, e, c) in terms {
            let k = match dir {
                Direction::X(i) => i,
                Direction::Phi(i) => d + i,
            };
            accs[k].add(e, &c);
        }
        let mut accs = accs.into_iter();
        let x = (0..d)
            .map(|_| accs.next().unwrap().finish(ring, trunc + 1))
            .collect();
        let phi = (0..d)
            .map(|_| accs.next().unwrap().finish(ring, trunc + PHI_WEIGHT))
            .collect();
        Derivation {
            ring: ring.clone(),
            trunc,
            x,
            phi,
        }
    }

    /// Builds a field from its components; series are re-truncated to fit.
    pub fn from_components(ring: &Arc<Ring>, trunc: u32, x: Vec<Series>, phi: Vec<Series>) -> Self {
        assert_eq!(x.len(), ring.d);
        assert_eq!(phi.len(), ring.d);
        Derivation {
            ring: ring.clone(),
            trunc,
            x: x.iter().map(|s| s.with_trunc(trunc + 1)).collect(),
            phi: phi
                .iter()
                .map(|s| s.with_trunc(trunc + PHI_WEIGHT))
                .collect(),
        }
    }

    pub fn ring(&self) -> &Arc<Ring> {
        &self.ring
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn x_comp(&self, i: usize) -> &Series {
        &self.x[i]
    }

    pub fn phi_comp(&self, i: usize) -> &Series {
        &self.phi[i]
    }

    pub fn component(&self, dir: Direction) -> &Series {
        match dir {
            Direction::X(i) => &self.x[i],
            Direction::Phi(i) => &self.phi[i],
        }
    }

    fn component_mut(&mut self, dir: Direction) -> &mut Series {
        match dir {
            Direction::X(i) => &mut self.x[i],
            Direction::Phi(i) => &mut self.phi[i],
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (Direction, &Exponent, &Coeff)> {
        let xs = self
            .x
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.terms().map(move |(e, c)| (Direction::X(i), e, c)));
        let ps = self
            .phi
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.terms().map(move |(e, c)| (Direction::Phi(i), e, c)));
        xs.chain(ps)
    }

    pub fn len(&self) -> usize {
        self.x.iter().chain(&self.phi).map(Series::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_zero(&self) -> bool {
        self.is_empty()
    }

    /// Minimal term order, `None` for the zero field.
    pub fn order(&self) -> Option<i64> {
        self.terms().map(|(dir, e, _)| dir.term_order(e)).min()
    }

    pub fn max_abs(&self) -> f64 {
        self.x
            .iter()
            .chain(&self.phi)
            .map(Series::max_abs)
            .fold(0.0, f64::max)
    }

    /// Keeps exactly the terms whose order lies in `[lo, hi)`.
    pub fn truncate_range(&self, lo: i64, hi: i64) -> Derivation {
        self.filter(|dir, e, _| {
            let o = dir.term_order(e);
            o >= lo && o < hi
        })
    }

    pub fn filter<F: Fn(Direction, &Exponent, &Coeff) -> bool>(&self, keep: F) -> Derivation {
        Derivation {
            ring: self.ring.clone(),
            trunc: self.trunc,
            x: self
                .x
                .iter()
                .enumerate()
                .map(|(i, s)| s.filter(|e, c| keep(Direction::X(i), e, c)))
                .collect(),
            phi: self
                .phi
                .iter()
                .enumerate()
                .map(|(i, s)| s.filter(|e, c| keep(Direction::Phi(i), e, c)))
                .collect(),
        }
    }

    /// The `∂_x` part only.
    pub fn x_part(&self) -> Derivation {
        self.filter(|dir, _, _| matches!(dir, Direction::X(_)))
    }

    /// The `∂_φ` part only.
    pub fn phi_part(&self) -> Derivation {
        self.filter(|dir, _, _| matches!(dir, Direction::Phi(_)))
    }

    pub fn with_trunc(&self, trunc: u32) -> Derivation {
        Derivation::from_components(&self.ring, trunc, self.x.clone(), self.phi.clone())
    }

    fn check_trunc(&self, other: &Derivation) -> Result<(), FormalError> {
        if self.trunc != other.trunc {
            return Err(FormalError::TruncationMismatch(self.trunc, other.trunc));
        }
        Ok(())
    }

    fn zip_with<F: Fn(&Series, &Series) -> Series>(&self, other: &Derivation, f: F) -> Derivation {
        Derivation {
            ring: self.ring.clone(),
            trunc: self.trunc,
            x: self.x.iter().zip(&other.x).map(|(a, b)| f(a, b)).collect(),
            phi: self
                .phi
                .iter()
                .zip(&other.phi)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Derivation) -> Result<Derivation, FormalError> {
        self.check_trunc(other)?;
        Ok(self.zip_with(other, Series::add_unchecked))
    }

    pub fn sub(&self, other: &Derivation) -> Result<Derivation, FormalError> {
        self.check_trunc(other)?;
        Ok(self.zip_with(other, Series::sub_unchecked))
    }

    pub fn neg(&self) -> Derivation {
        self.map(Series::neg)
    }

    pub fn scale(&self, k: &Coeff) -> Derivation {
        self.map(|s| s.scale(k))
    }

    fn map<F: Fn(&Series) -> Series>(&self, f: F) -> Derivation {
        Derivation {
            ring: self.ring.clone(),
            trunc: self.trunc,
            x: self.x.iter().map(&f).collect(),
            phi: self.phi.iter().map(&f).collect(),
        }
    }

    /// Applies the field to a function, keeping terms of weight `< bound`.
    pub fn apply_bounded(&self, f: &Series, bound: u32) -> Series {
        let mut acc = Acc::new();
        self.apply_into(f, bound, &mut acc);
        acc.finish(&self.ring, bound)
    }

    fn apply_into(&self, f: &Series, bound: u32, acc: &mut Acc) {
        for (i, a) in self.x.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let df = f.partial(Var::X(i));
            if !df.is_zero() {
                a.mul_into(&df, bound, acc);
            }
        }
        for (i, b) in self.phi.iter().enumerate() {
            if b.is_zero() {
                continue;
            }
            let df = f.partial(Var::Phi(i));
            if !df.is_zero() {
                b.mul_into(&df, bound, acc);
            }
        }
    }

    /// Applies the field to a function at the function's own truncation.
    pub fn apply(&self, f: &Series) -> Series {
        self.apply_bounded(f, f.trunc())
    }

    /// Lie bracket `[self, other]`, componentwise `self(other_k) − other(self_k)`.
    pub fn bracket(&self, other: &Derivation) -> Result<Derivation, FormalError> {
        self.check_trunc(other)?;
        let comp = |mine: &Series, theirs: &Series| {
            let bound = mine.trunc();
            let mut acc = Acc::new();
            self.apply_into(theirs, bound, &mut acc);
            let neg = other.apply_bounded(mine, bound).neg();
            for (e, c) in neg.terms() {
                acc.add(e.clone(), c);
            }
            acc.finish(&self.ring, bound)
        };
        Ok(Derivation {
            ring: self.ring.clone(),
            trunc: self.trunc,
            x: self
                .x
                .iter()
                .zip(&other.x)
                .map(|(m, t)| comp(m, t))
                .collect(),
            phi: self
                .phi
                .iter()
                .zip(&other.phi)
                .map(|(m, t)| comp(m, t))
                .collect(),
        })
    }

    /// Largest coefficient modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Derivation) -> f64 {
        self.zip_with(other, Series::sub_unchecked).max_abs()
    }

    /// Replaces each `φ_j` by `g[j]` in every component and drops the `∂_φ` part.
    pub fn substitute_phi_x_part(&self, g: &[Series]) -> Derivation {
        let x = self.x.iter().map(|s| s.substitute_phi(g)).collect();
        let phi = (0..self.ring.d)
            .map(|_| Series::zero(&self.ring, self.trunc + PHI_WEIGHT))
            .collect();
        Derivation {
            ring: self.ring.clone(),
            trunc: self.trunc,
            x,
            phi,
        }
    }
}

/// Upper bound on the number of non-zero adjoint terms at truncation `trunc`.
///
/// Each step either raises the order or lowers the φ-degree of every term.
fn term_cap(trunc: u32) -> usize {
    let t = trunc as usize + 2;
    t * (t / PHI_WEIGHT as usize + 2) + 4
}

/// `Σ_k ad_{−v}^k(X)/k!` with `ad_{−v}(X) = [X, v]`, i.e. `e^{−ad v} X`.
///
/// `v` may contain order-0 terms only along `∂_φ`; those lower the φ-degree
/// and the series still terminates.
pub fn exp_adjoint(v: &Derivation, x: &Derivation) -> Result<Derivation, FormalError> {
    let Some(order) = v.order() else {
        return Ok(x.clone());
    };
    if order < 0 {
        return Err(FormalError::NonPositiveOrder(order));
    }
    let cap = term_cap(x.trunc());
    let mut out = x.clone();
    let mut term = x.clone();
    for k in 1..=cap {
        term = term.bracket(v)?;
        if term.is_zero() {
            return Ok(out);
        }
        let mut kc = v.ring.zero_coeff();
        kc.re += 1u32;
        kc.div_u64(k as u64);
        term = term.scale(&kc);
        out = out.add(&term)?;
    }
    Err(FormalError::NotNilpotent(cap))
}

/// Applies `exp(v_K) ∘ … ∘ exp(v_0)` to `f`, with `exp(v)(f) = Σ v^k(f)/k!`.
pub fn pushforward_function(vs: &[Derivation], f: &Series) -> Result<Series, FormalError> {
    let mut f = f.clone();
    for v in vs {
        let Some(order) = v.order() else { continue };
        if order < 0 {
            return Err(FormalError::NonPositiveOrder(order));
        }
        let cap = term_cap(f.trunc());
        let mut out = f.clone();
        let mut term = f.clone();
        let mut done = false;
        for k in 1..=cap {
            term = v.apply(&term);
            if term.is_zero() {
                done = true;
                break;
            }
            let mut kc = v.ring.zero_coeff();
            kc.re += 1u32;
            kc.div_u64(k as u64);
            term = term.scale(&kc);
            out = out.add_unchecked(&term);
        }
        if !done {
            return Err(FormalError::NotNilpotent(cap));
        }
        f = out;
    }
    Ok(f)
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (dir, e, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}*{}*{dir}", fmt_monomial(e))?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> Arc<Ring> {
        Ring::new(2, 1, 256)
    }

    fn xterm(r: &Arc<Ring>, n: u32, i: usize, x: [u32; 2], c: f64) -> Derivation {
        Derivation::monomial(r, n, Direction::X(i), r.x_exponent(&x), r.coeff(c, 0.0))
    }

    /// `Σ (λ_i + φ_i) x_i ∂_{x_i}` for `Λ = (1, −1)`.
    fn s_v(r: &Arc<Ring>, n: u32) -> Derivation {
        let mut terms = Vec::new();
        for (i, lam) in [1.0, -1.0].into_iter().enumerate() {
            let mut x = [0u32; 2];
            x[i] = 1;
            let mut phi = [0u32; 2];
            terms.push((
                Direction::X(i),
                r.exponent(&x, &phi, &[0]),
                r.coeff(lam, 0.0),
            ));
            phi[i] = 1;
            terms.push((
                Direction::X(i),
                r.exponent(&x, &phi, &[0]),
                r.coeff(1.0, 0.0),
            ));
        }
        Derivation::from_terms(r, n, terms)
    }

    #[test]
    fn commuting_euler_fields() {
        let r = ring();
        let a = xterm(&r, 5, 0, [1, 0], 1.0);
        let b = xterm(&r, 5, 1, [0, 1], 1.0);
        assert!(a.bracket(&b).unwrap().is_zero());
    }

    #[test]
    fn resonant_monomial_commutes_with_linear_part() {
        let r = ring();
        let v = xterm(&r, 5, 0, [2, 1], 1.0);
        let s = xterm(&r, 5, 0, [1, 0], 1.0)
            .sub(&xterm(&r, 5, 1, [0, 1], 1.0))
            .unwrap();
        assert!(v.bracket(&s).unwrap().is_zero());
    }

    #[test]
    fn phi_direction_against_detuning() {
        let r = ring();
        let dphi = Derivation::monomial(
            &r,
            5,
            Direction::Phi(0),
            r.unit_exponent(),
            r.coeff(1.0, 0.0),
        );
        let out = dphi.bracket(&s_v(&r, 5)).unwrap();
        assert_eq!(out.max_abs_diff(&xterm(&r, 5, 0, [1, 0], 1.0)), 0.0);
    }

    #[test]
    fn bracket_is_antisymmetric() {
        let r = ring();
        let a = xterm(&r, 6, 0, [2, 1], 0.5).add(&s_v(&r, 6)).unwrap();
        let b = xterm(&r, 6, 1, [0, 3], -2.0)
            .add(&xterm(&r, 6, 0, [1, 1], 1.0))
            .unwrap();
        let ab = a.bracket(&b).unwrap();
        let ba = b.bracket(&a).unwrap();
        assert!(ab.add(&ba).unwrap().is_zero());
    }

    #[test]
    fn order_adjusts_by_direction() {
        let r = ring();
        let t = xterm(&r, 5, 0, [2, 0], 1.0);
        assert_eq!(t.order(), Some(1));
        let p = Derivation::monomial(
            &r,
            5,
            Direction::Phi(0),
            r.x_exponent(&[1, 1]),
            r.coeff(1.0, 0.0),
        );
        assert_eq!(p.order(), Some(0));
    }

    #[test]
    fn truncate_range_by_order() {
        let r = ring();
        let a = xterm(&r, 6, 0, [2, 0], 1.0)
            .add(&xterm(&r, 6, 0, [3, 0], 1.0))
            .unwrap();
        let kept = a.truncate_range(2, 4);
        assert_eq!(kept.max_abs_diff(&xterm(&r, 6, 0, [3, 0], 1.0)), 0.0);
        let sv = s_v(&r, 6);
        assert_eq!(sv.truncate_range(0, i64::MAX).max_abs_diff(&sv), 0.0);
    }

    #[test]
    fn exp_adjoint_of_zero_is_identity() {
        let r = ring();
        let x = s_v(&r, 5);
        let out = exp_adjoint(&Derivation::zero(&r, 5), &x).unwrap();
        assert_eq!(out.max_abs_diff(&x), 0.0);
    }

    #[test]
    fn exp_adjoint_of_commuting_field_is_identity() {
        let r = ring();
        let x = xterm(&r, 6, 0, [1, 0], 1.0)
            .sub(&xterm(&r, 6, 1, [0, 1], 1.0))
            .unwrap();
        let v = xterm(&r, 6, 0, [2, 1], 1.0);
        assert_eq!(exp_adjoint(&v, &x).unwrap().max_abs_diff(&x), 0.0);
    }

    /// One-variable oracle: `a(x)∂ ↦ [a∂, b∂] = (a b' − b a')∂` on dense coefficient vectors.
    fn dense_bracket(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
        let deriv = |p: &[f64]| -> Vec<f64> { (1..p.len()).map(|k| k as f64 * p[k]).collect() };
        let mul = |p: &[f64], q: &[f64]| {
            let mut out = vec![0.0; n];
            for (i, pi) in p.iter().enumerate() {
                for (j, qj) in q.iter().enumerate() {
                    if i + j < n {
                        out[i + j] += pi * qj;
                    }
                }
            }
            out
        };
        let ab = mul(a, &deriv(b));
        let ba = mul(b, &deriv(a));
        ab.iter().zip(&ba).map(|(x, y)| x - y).collect()
    }

    #[test]
    fn exp_adjoint_matches_dense_bracket_oracle() {
        // N = 4 keeps ∂_x terms with x-degree ≤ 4.
        let n = 5;
        let v = [0.0, 0.0, 1.0, 0.0, 0.0];
        let mut total = vec![0.0, 1.0, 0.0, 0.0, 0.0];
        let mut term = total.clone();
        for k in 1..8 {
            term = dense_bracket(&term, &v, n)
                .iter()
                .map(|c| c / k as f64)
                .collect();
            for (t, c) in total.iter_mut().zip(&term) {
                *t += c;
            }
        }
        assert_eq!(total, vec![0.0, 1.0, 1.0, 0.0, 0.0]);

        let r = Ring::new(1, 0, 256);
        let xd = |k: u32, c: f64| {
            Derivation::monomial(&r, 4, Direction::X(0), r.x_exponent(&[k]), r.coeff(c, 0.0))
        };
        let out = exp_adjoint(&xd(2, 1.0), &xd(1, 1.0)).unwrap();
        let mut expected = Derivation::zero(&r, 4);
        for (k, c) in total.iter().enumerate() {
            if *c != 0.0 {
                expected = expected.add(&xd(k as u32, *c)).unwrap();
            }
        }
        assert_eq!(out.max_abs_diff(&expected), 0.0);
    }

    #[test]
    fn exp_adjoint_rejects_negative_order() {
        let r = ring();
        let v = Derivation::monomial(
            &r,
            5,
            Direction::Phi(0),
            r.unit_exponent(),
            r.coeff(1.0, 0.0),
        );
        assert_eq!(
            exp_adjoint(&v, &s_v(&r, 5)).unwrap_err(),
            FormalError::NonPositiveOrder(-2)
        );
    }

    #[test]
    fn pushforward_examples() {
        let r = ring();
        let n = 6;
        let one = Series::one(&r, n);
        let v = Derivation::monomial(
            &r,
            n,
            Direction::Phi(0),
            r.x_exponent(&[1, 1]),
            r.coeff(-1.0, 0.0),
        );
        assert_eq!(
            pushforward_function(&[v.clone()], &one)
                .unwrap()
                .max_abs_diff(&one),
            0.0
        );

        let phi1 = Series::var(&r, n, Var::Phi(0));
        let out = pushforward_function(&[v], &phi1).unwrap();
        let u = Series::monomial(&r, n, r.x_exponent(&[1, 1]), r.coeff(1.0, 0.0));
        assert_eq!(out.max_abs_diff(&phi1.sub(&u).unwrap()), 0.0);

        let w = xterm(&r, n, 0, [2, 0], 1.0);
        assert_eq!(
            pushforward_function(&[w], &phi1)
                .unwrap()
                .max_abs_diff(&phi1),
            0.0
        );
    }
}

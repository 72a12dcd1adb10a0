//! Versal data: detuning, the implicit solve `exp(φ) = 0` and the
//! Bruno-Stolovitch ideal.

mod division;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::formal::{
    fmt_monomial, pushforward_function, Coeff, Derivation, Direction, FormalError, Ring, Series,
    Var,
};
use crate::normalform::NormalFormResult;
use crate::resonance::{Decomposition, ResonanceBasis};

pub use division::{ideal_residual, reduce};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VersalError {
    #[error("linear part is not diagonal: {0}")]
    NotDiagonal(String),
    #[error("exp(phi_{}) has no identity linear part in phi", .0 + 1)]
    NotInvertible(usize),
    #[error("implicit solve did not stabilize after {0} rounds")]
    NoFixedPoint(usize),
    #[error("term {0} of g is not a function of the invariant monomials")]
    NonInvariant(String),
    #[error(transparent)]
    Formal(#[from] FormalError),
}

/// `S ↦ S + Σ φ_i x_i ∂_{x_i}` for a diagonal linear `S`.
pub fn detune(s: &Derivation) -> Result<Derivation, VersalError> {
    let ring = s.ring();
    let d = ring.d;
    for (dir, e, c) in s.terms() {
        let diagonal = match dir {
            Direction::X(i) => {
                e.phi_degree() == 0
                    && e.mu().iter().all(|&m| m == 0)
                    && e.x_degree() == 1
                    && e.x()[i] == 1
            }
            Direction::Phi(_) => false,
        };
        if !diagonal {
            return Err(VersalError::NotDiagonal(format!(
                "{c} {} {dir}",
                fmt_monomial(e)
            )));
        }
    }
    let mut terms = Vec::new();
    for i in 0..d {
        let mut x = vec![0u32; d];
        x[i] = 1;
        let mut phi = vec![0u32; d];
        phi[i] = 1;
        terms.push((
            Direction::X(i),
            ring.exponent(&x, &phi, &vec![0; ring.l]),
            ring.coeff(1.0, 0.0),
        ));
    }
    Ok(s.add(&Derivation::from_terms(ring, s.trunc(), terms))?)
}

/// `exp(φ_j)` for every `j`, truncated below weight `trunc`.
pub fn exp_phi(
    ring: &Arc<Ring>,
    result: &NormalFormResult,
    trunc: u32,
) -> Result<Vec<Series>, VersalError> {
    let inverses: Vec<Derivation> = result.generators.iter().map(Derivation::neg).collect();
    (0..ring.d)
        .map(|j| {
            Ok(pushforward_function(
                &inverses,
                &Series::var(ring, trunc, Var::Phi(j)),
            )?)
        })
        .collect()
}

/// Solves `exp_phi[j](φ) = 0` for `φ = g(x, μ)` by fixed-point substitution.
pub fn implicit_solve_phi(exp_phi: &[Series]) -> Result<Vec<Series>, VersalError> {
    let Some(first) = exp_phi.first() else {
        return Ok(Vec::new());
    };
    let ring = first.ring().clone();
    let trunc = first.trunc();
    let d = ring.d;
    let unit = ring.unit_exponent();
    let eps = ring.epsilon();
    for (j, f) in exp_phi.iter().enumerate() {
        if f.coeff(&unit).is_some_and(|c| c.abs_f64() > eps) {
            return Err(VersalError::NotInvertible(j));
        }
        for k in 0..d {
            let mut phi = vec![0u32; d];
            phi[k] = 1;
            let e = ring.exponent(&vec![0; d], &phi, &vec![0; ring.l]);
            let c = f.coeff(&e).map_or(0.0, |c| {
                let target = if k == j { 1.0 } else { 0.0 };
                (c.re.to_f64() - target).hypot(c.im.to_f64())
            });
            let expected_missing = k == j && f.coeff(&e).is_none();
            if c > eps || expected_missing {
                return Err(VersalError::NotInvertible(j));
            }
        }
    }
    let h: Vec<Series> = exp_phi
        .iter()
        .enumerate()
        .map(|(j, f)| f.sub_unchecked(&Series::var(&ring, f.trunc(), Var::Phi(j))))
        .collect();
    let cap = 2 * trunc as usize + 4;
    let mut g: Vec<Series> = (0..d).map(|_| Series::zero(&ring, trunc)).collect();
    for _ in 0..cap {
        let next: Vec<Series> = h.iter().map(|hj| hj.substitute_phi(&g).neg()).collect();
        let change = next
            .iter()
            .zip(&g)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max);
        g = next;
        if change == 0.0 {
            return Ok(g);
        }
    }
    Err(VersalError::NoFixedPoint(cap))
}

/// A term `c · u^m μ^b` in Bruno's variables.
#[derive(Clone, Debug, PartialEq)]
pub struct UTerm {
    pub u: Vec<u32>,
    pub mu: Vec<u32>,
    pub coeff: Coeff,
}

/// A series in `u` and `μ`, sorted by weight with `u_j` of weight `|R_j|`.
#[derive(Clone, Debug, PartialEq)]
pub struct USeries {
    pub terms: Vec<UTerm>,
}

impl USeries {
    /// Rewrites a series in invariant x-monomials and μ in terms of `u_j = x^{R_j}`.
    pub fn from_series(f: &Series, basis: &ResonanceBasis) -> Result<USeries, VersalError> {
        let mut terms = Vec::new();
        for (e, c) in f.terms() {
            if e.phi_degree() > 0 {
                return Err(VersalError::NonInvariant(fmt_monomial(e)));
            }
            let m = match basis.decompose(&e.x_vec()) {
                Decomposition::Unique(m) => m,
                _ => return Err(VersalError::NonInvariant(fmt_monomial(e))),
            };
            terms.push(UTerm {
                u: m,
                mu: e.mu_vec(),
                coeff: c.clone(),
            });
        }
        Ok(USeries { terms })
    }

    /// Coefficient of `u^m μ^b`, zero when absent.
    pub fn coeff(&self, u: &[u32], mu: &[u32]) -> Option<&Coeff> {
        self.terms
            .iter()
            .find(|t| t.u == u && t.mu == mu)
            .map(|t| &t.coeff)
    }
}

impl fmt::Display for USeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, t) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}*{}", t.coeff, fmt_u_monomial(&t.u, &t.mu))?;
        }
        Ok(())
    }
}

pub fn fmt_u_monomial(u: &[u32], mu: &[u32]) -> String {
    let mut parts = Vec::new();
    for (name, vals) in [("u", u), ("mu", mu)] {
        for (i, &k) in vals.iter().enumerate() {
            match k {
                0 => {}
                1 => parts.push(format!("{name}{}", i + 1)),
                _ => parts.push(format!("{name}{}^{k}", i + 1)),
            }
        }
    }
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

/// Linear part of one Bruno-Stolovitch generator.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearReport {
    /// Coefficient of each `u_k`.
    pub u: Vec<Coeff>,
    /// Coefficient of each `μ_k`.
    pub mu: Vec<Coeff>,
}

impl LinearReport {
    pub fn is_zero(&self) -> bool {
        self.u.iter().chain(&self.mu).all(|c| c.abs_f64() == 0.0)
    }
}

/// The ideal `I_μ = J + ((g, R_1), …, (g, R_p))` and its ingredients.
#[derive(Clone, Debug)]
pub struct VersalOutput {
    /// `g_i` in invariant x-monomials and μ.
    pub g: Vec<Series>,
    pub g_u: Vec<USeries>,
    /// `(g, R_j) = Σ_i R_{j,i} g_i` in invariant x-monomials and μ.
    pub bs_generators: Vec<Series>,
    pub bs_u: Vec<USeries>,
    /// `u_j − x^{R_j}`, stored as the exponent `R_j`.
    pub graph_generators: Vec<Vec<u32>>,
    pub linear: Vec<LinearReport>,
    /// Whether the `(u, μ)`-linear parts have full rank.
    pub nondegenerate: bool,
}

/// Assembles the Bruno-Stolovitch generators from `g`.
pub fn bruno_stolovitch_ideal(
    g: &[Series],
    basis: &ResonanceBasis,
) -> Result<VersalOutput, VersalError> {
    let p = basis.p();
    let mut bs = Vec::with_capacity(p);
    for r in &basis.generators {
        let mut acc: Option<Series> = None;
        for (gi, &ri) in g.iter().zip(r) {
            if ri == 0 {
                continue;
            }
            let term = gi.scale(&Coeff::from_ratio(gi.ring().prec, ri as i64, 1));
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term)?,
            });
        }
        let zero = || Series::zero(g[0].ring(), g[0].trunc());
        bs.push(acc.unwrap_or_else(zero));
    }
    let g_u = g
        .iter()
        .map(|s| USeries::from_series(s, basis))
        .collect::<Result<Vec<_>, _>>()?;
    let bs_u = bs
        .iter()
        .map(|s| USeries::from_series(s, basis))
        .collect::<Result<Vec<_>, _>>()?;
    let l = g.first().map_or(0, |s| s.ring().l);
    let prec = g.first().map_or(64, |s| s.ring().prec);
    let linear: Vec<LinearReport> = bs_u
        .iter()
        .map(|f| {
            let get = |u: Vec<u32>, mu: Vec<u32>| {
                f.coeff(&u, &mu)
                    .cloned()
                    .unwrap_or_else(|| Coeff::zero(prec))
            };
            LinearReport {
                u: (0..p).map(|k| get(unit(p, k), vec![0; l])).collect(),
                mu: (0..l).map(|k| get(vec![0; p], unit(l, k))).collect(),
            }
        })
        .collect();
    let rows: Vec<Vec<(f64, f64)>> = linear
        .iter()
        .map(|r| {
            r.u.iter()
                .chain(&r.mu)
                .map(|c| (c.re.to_f64(), c.im.to_f64()))
                .collect()
        })
        .collect();
    let nondegenerate = complex_rank(rows, 1e-12) == p;
    Ok(VersalOutput {
        g: g.to_vec(),
        g_u,
        bs_generators: bs,
        bs_u,
        graph_generators: basis.generators.clone(),
        linear,
        nondegenerate,
    })
}

fn unit(n: usize, k: usize) -> Vec<u32> {
    let mut v = vec![0; n];
    v[k] = 1;
    v
}

/// Numerical rank by Gaussian elimination with partial pivoting.
fn complex_rank(mut rows: Vec<Vec<(f64, f64)>>, tol: f64) -> usize {
    let abs = |z: (f64, f64)| z.0.hypot(z.1);
    let cols = rows.first().map_or(0, Vec::len);
    let scale = rows.iter().flatten().map(|&z| abs(z)).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) =
            (rank..rows.len()).max_by(|&a, &b| abs(rows[a][c]).total_cmp(&abs(rows[b][c])))
        else {
            break;
        };
        if abs(rows[piv][c]) <= tol * scale {
            continue;
        }
        rows.swap(rank, piv);
        let p = rows[rank][c];
        let pn = p.0 * p.0 + p.1 * p.1;
        for r in rank + 1..rows.len() {
            let a = rows[r][c];
            // f = a / p
            let f = ((a.0 * p.0 + a.1 * p.1) / pn, (a.1 * p.0 - a.0 * p.1) / pn);
            for k in c..cols {
                let b = rows[rank][k];
                rows[r][k].0 -= f.0 * b.0 - f.1 * b.1;
                rows[r][k].1 -= f.0 * b.1 + f.1 * b.0;
            }
        }
        rank += 1;
    }
    rank
}

/// Largest coefficient left after reducing `Y((g, R_j))` modulo the generators.
pub fn check_ideal_invariance(y: &Derivation, out: &VersalOutput, trunc: u32) -> f64 {
    let gens: Vec<Series> = out
        .bs_generators
        .iter()
        .map(|s| s.with_trunc(trunc))
        .collect();
    ideal_residual(y, &gens, &gens, trunc)
}

/// `Y(x^{R_j})` reduced modulo `(x^{R_1}, …, x^{R_p})`.
pub fn cone_invariance(y: &Derivation, basis: &ResonanceBasis, trunc: u32) -> f64 {
    let ring = y.ring();
    let monomials: Vec<Series> = basis
        .generators
        .iter()
        .map(|r| Series::monomial(ring, trunc, ring.x_exponent(r), ring.coeff(1.0, 0.0)))
        .collect();
    ideal_residual(y, &monomials, &monomials, trunc)
}

/// Everything the versal pipeline derives from one normalization run.
#[derive(Clone, Debug)]
pub struct VersalRun {
    pub exp_phi: Vec<Series>,
    pub output: VersalOutput,
    /// The normal form with `φ = g` substituted.
    pub normal_form: Derivation,
    /// Largest coefficient of `exp(φ_j)` at `φ = g`.
    pub resubstitution: f64,
    pub invariance: f64,
}

/// From a versal-mode normalization to `g`, the ideal and its invariance check.
pub fn versal_data(
    result: &NormalFormResult,
    basis: &ResonanceBasis,
) -> Result<VersalRun, VersalError> {
    let ring = result.a.ring().clone();
    let trunc = result.a.trunc();
    let exp_phi = exp_phi(&ring, result, trunc)?;
    let g = implicit_solve_phi(&exp_phi)?;
    let resubstitution = exp_phi
        .iter()
        .map(|f| f.substitute_phi(&g).max_abs())
        .fold(0.0, f64::max);
    let output = bruno_stolovitch_ideal(&g, basis)?;
    let normal_form = result.a.substitute_phi_x_part(&g);
    let invariance = check_ideal_invariance(&normal_form, &output, trunc);
    Ok(VersalRun {
        exp_phi,
        output,
        normal_form,
        resubstitution,
        invariance,
    })
}

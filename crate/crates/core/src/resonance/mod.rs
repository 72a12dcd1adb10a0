//! Exact resonance analysis: invariant monomials, the resonance monoid and the
//! positivity conditions P1/P2.

mod frequency;
mod linalg;

use std::collections::HashMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use thiserror::Error;

pub use frequency::{resonant_monomial_test, FrequencyVector};

/// Default degree bound for lattice enumeration.
pub const DEFAULT_DEG_BOUND: u32 = 12;

/// Largest dimension for which extreme rays are enumerated by support.
const MAX_RAY_DIM: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResonanceError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("zero denominator in frequency entry")]
    ZeroDenominator,
    #[error("numeric value of λ_{} disagrees with its exact representation", .0 + 1)]
    InconsistentNumeric(usize),
    #[error("frequency entries too large for exact integer arithmetic")]
    Overflow,
}

/// Evidence that a positivity condition fails.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// `j` has two distinct ℕ-combinations of the generators.
    Relation {
        j: Vec<u32>,
        first: Vec<u32>,
        second: Vec<u32>,
    },
    /// `x^k ∂_{x_i}` is resonant but `k − E_i` has `representations` ≠ 1
    /// decompositions over the generators.
    Field {
        k: Vec<u32>,
        direction: usize,
        representations: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails(Witness),
    Unknown(String),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails(_) => "fails",
            Verdict::Unknown(_) => "unknown",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Holds => write!(f, "holds"),
            Verdict::Unknown(why) => write!(f, "unknown ({why})"),
            Verdict::Fails(Witness::Relation { j, first, second }) => {
                write!(f, "fails: J={j:?} = {first:?}·R = {second:?}·R")
            }
            Verdict::Fails(Witness::Field {
                k,
                direction,
                representations,
            }) => write!(
                f,
                "fails: x^{k:?} d/dx{} resonant with {representations} decompositions",
                direction + 1
            ),
        }
    }
}

/// Outcome of decomposing an invariant exponent over the generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decomposition {
    Unique(Vec<u32>),
    Missing,
    Ambiguous,
}

/// Minimal generators `R_1..R_p` of the resonance monoid found up to a degree bound.
#[derive(Clone, Debug)]
pub struct ResonanceBasis {
    pub generators: Vec<Vec<u32>>,
    pub deg_bound: u32,
    /// Set when the bound provably covers every minimal generator.
    pub complete: bool,
    pub p1: Verdict,
    pub p2: Verdict,
    /// Primitive generators of the extreme rays of the resonance cone.
    pub extreme_rays: Vec<Vec<u32>>,
    frequencies: FrequencyVector,
}

impl ResonanceBasis {
    pub fn frequencies(&self) -> &FrequencyVector {
        &self.frequencies
    }

    pub fn d(&self) -> usize {
        self.frequencies.d()
    }

    pub fn p(&self) -> usize {
        self.generators.len()
    }

    pub fn positivity_holds(&self) -> bool {
        self.p1.holds() && self.p2.holds()
    }

    /// Decomposes an invariant exponent as `Σ m_j R_j`.
    pub fn decompose(&self, j: &[u32]) -> Decomposition {
        let mut found = Vec::new();
        let mut m = vec![0u32; self.generators.len()];
        search_reps(&self.generators, j.to_vec(), 0, &mut m, &mut found, 2);
        match found.len() {
            0 => Decomposition::Missing,
            1 => Decomposition::Unique(found.pop().unwrap()),
            _ => Decomposition::Ambiguous,
        }
    }

    /// `Σ m_j R_j`.
    pub fn compose(&self, m: &[u32]) -> Vec<u32> {
        let mut out = vec![0u32; self.d()];
        for (mj, r) in m.iter().zip(&self.generators) {
            for (o, &ri) in out.iter_mut().zip(r) {
                *o += mj * ri;
            }
        }
        out
    }
}

fn search_reps(
    gens: &[Vec<u32>],
    rest: Vec<u32>,
    idx: usize,
    m: &mut Vec<u32>,
    found: &mut Vec<Vec<u32>>,
    limit: usize,
) {
    if found.len() >= limit {
        return;
    }
    if rest.iter().all(|&v| v == 0) {
        found.push(m.clone());
        return;
    }
    if idx == gens.len() {
        return;
    }
    let g = &gens[idx];
    // largest multiple of g fitting in rest
    let max = g
        .iter()
        .zip(&rest)
        .filter(|(gi, _)| **gi > 0)
        .map(|(gi, ri)| ri / gi)
        .min()
        .unwrap_or(0);
    for k in (0..=max).rev() {
        let next: Vec<u32> = rest.iter().zip(g).map(|(r, gi)| r - k * gi).collect();
        m[idx] = k;
        search_reps(gens, next, idx + 1, m, found, limit);
        m[idx] = 0;
        if found.len() >= limit {
            return;
        }
    }
}

/// All `K ∈ ℕ^d` with `|K| = n`, lexicographically descending.
pub(crate) fn compositions(d: usize, n: u32) -> Vec<Vec<u32>> {
    fn rec(d: usize, n: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if d == 1 {
            prefix.push(n);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=n).rev() {
            prefix.push(k);
            rec(d - 1, n - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if d == 0 {
        if n == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(d, n, &mut Vec::with_capacity(d), &mut out);
    out
}

/// Enumerates the resonance monoid up to `deg_bound` and keeps its minimal elements.
pub fn hilbert_basis(fv: &FrequencyVector, deg_bound: u32) -> ResonanceBasis {
    let d = fv.d();
    let mut generators: Vec<Vec<u32>> = Vec::new();
    for n in 1..=deg_bound {
        for k in compositions(d, n) {
            if !fv.is_invariant(&k) {
                continue;
            }
            let reducible = generators
                .iter()
                .any(|g| g.iter().zip(&k).all(|(a, b)| a <= b));
            if !reducible {
                generators.push(k);
            }
        }
    }
    let (extreme_rays, complete) = completeness(fv, deg_bound);
    ResonanceBasis {
        generators,
        deg_bound,
        complete,
        p1: Verdict::Unknown("not checked".into()),
        p2: Verdict::Unknown("not checked".into()),
        extreme_rays,
        frequencies: fv.clone(),
    }
}

/// Extreme rays of `ker ∩ ℝ₊^d` and whether `deg_bound` covers every minimal generator.
///
/// Every minimal generator is either an extreme ray or lies in the half-open
/// parallelepiped spanned by at most `rank` independent rays, so its degree is
/// below the sum of the `rank` largest ray degrees.
fn completeness(fv: &FrequencyVector, deg_bound: u32) -> (Vec<Vec<u32>>, bool) {
    let d = fv.d();
    if d > MAX_RAY_DIM {
        return (Vec::new(), false);
    }
    let rows: Vec<Vec<i128>> = fv.int_rows().to_vec();
    let m = fv.m();
    let lattice_rank = d - linalg::rank(&linalg::from_ints(&rows));
    let mut rays = Vec::new();
    for mask in 1u32..(1u32 << d) {
        let support: Vec<usize> = (0..d).filter(|i| mask & (1 << i) != 0).collect();
        // columns = support variables, rows = basis coordinates
        let sub: Vec<Vec<i128>> = (0..m)
            .map(|j| support.iter().map(|&i| rows[i][j]).collect())
            .collect();
        let a = linalg::from_ints(&sub);
        let null = if m == 0 {
            (0..support.len())
                .map(|c| {
                    let mut v = vec![BigRational::from_integer(0.into()); support.len()];
                    v[c] = BigRational::from_integer(1.into());
                    v
                })
                .collect()
        } else {
            linalg::nullspace(&a, support.len())
        };
        if null.len() != 1 {
            continue;
        }
        let v = linalg::primitive(&null[0]);
        let Some(positive) = linalg::all_same_sign_nonzero(&v) else {
            continue;
        };
        let mut ray = vec![0u32; d];
        for (&i, x) in support.iter().zip(&v) {
            let x = if positive { x.clone() } else { -x.clone() };
            match x.to_u32() {
                Some(val) => ray[i] = val,
                None => return (Vec::new(), false),
            }
        }
        rays.push(ray);
    }
    rays.sort_by(|a, b| {
        let da: u32 = a.iter().sum();
        let db: u32 = b.iter().sum();
        da.cmp(&db).then(b.cmp(a))
    });
    let mut degrees: Vec<u64> = rays
        .iter()
        .map(|r| r.iter().map(|&v| v as u64).sum())
        .collect();
    degrees.sort_unstable_by(|a, b| b.cmp(a));
    let needed: u64 = degrees.iter().take(lattice_rank).sum();
    (rays, needed <= deg_bound as u64)
}

/// All ℕ-combinations of the generators of degree `≤ bound`, with up to two
/// representations recorded per exponent.
fn representation_table(
    gens: &[Vec<u32>],
    d: usize,
    bound: u32,
) -> HashMap<Vec<u32>, Vec<Vec<u32>>> {
    fn rec(
        gens: &[Vec<u32>],
        idx: usize,
        acc: &mut Vec<u32>,
        m: &mut Vec<u32>,
        bound: u32,
        table: &mut HashMap<Vec<u32>, Vec<Vec<u32>>>,
    ) {
        if idx == gens.len() {
            let reps = table.entry(acc.clone()).or_default();
            if reps.len() < 2 {
                reps.push(m.clone());
            }
            return;
        }
        let g = &gens[idx];
        let gdeg: u32 = g.iter().sum();
        let deg: u32 = acc.iter().sum();
        let mut k = 0;
        loop {
            rec(gens, idx + 1, acc, m, bound, table);
            if gdeg == 0 || deg + (k + 1) * gdeg > bound {
                break;
            }
            k += 1;
            m[idx] = k;
            for (a, gi) in acc.iter_mut().zip(g) {
                *a += gi;
            }
        }
        for (a, gi) in acc.iter_mut().zip(g) {
            *a -= k * gi;
        }
        m[idx] = 0;
    }
    let mut table = HashMap::new();
    rec(
        gens,
        0,
        &mut vec![0; d],
        &mut vec![0; gens.len()],
        bound,
        &mut table,
    );
    table
}

fn generators_independent(gens: &[Vec<u32>]) -> bool {
    if gens.is_empty() {
        return true;
    }
    let rows: Vec<Vec<i128>> = gens
        .iter()
        .map(|g| g.iter().map(|&v| v as i128).collect())
        .collect();
    linalg::rank(&linalg::from_ints(&rows)) == gens.len()
}

/// P1: every invariant exponent has a unique ℕ-decomposition over the generators.
pub fn check_p1(basis: &ResonanceBasis, deg_bound: u32) -> Verdict {
    let table = representation_table(&basis.generators, basis.d(), deg_bound);
    let witness = table
        .iter()
        .filter(|(_, reps)| reps.len() > 1)
        .min_by(|(a, _), (b, _)| {
            let da: u32 = a.iter().sum();
            let db: u32 = b.iter().sum();
            da.cmp(&db).then(a.cmp(b))
        });
    if let Some((j, reps)) = witness {
        let mut reps = reps.clone();
        reps.sort_unstable_by(|a, b| b.cmp(a));
        return Verdict::Fails(Witness::Relation {
            j: j.clone(),
            first: reps[0].clone(),
            second: reps[1].clone(),
        });
    }
    if !basis.complete {
        return Verdict::Unknown(format!(
            "generator set not certified complete at degree {}",
            basis.deg_bound
        ));
    }
    if !generators_independent(&basis.generators) {
        return Verdict::Unknown(format!(
            "generators are dependent but no collision below degree {deg_bound}"
        ));
    }
    Verdict::Holds
}

/// P2: every resonant field `x^K ∂_{x_i}` has `K = Σ m_j R_j + E_i` uniquely.
pub fn check_p2(basis: &ResonanceBasis, deg_bound: u32) -> Verdict {
    let fv = &basis.frequencies;
    let d = fv.d();
    let table = representation_table(&basis.generators, d, deg_bound);
    for n in 1..=deg_bound {
        let ks = compositions(d, n);
        for i in 0..d {
            for k in &ks {
                if !fv.is_resonant(k, i) {
                    continue;
                }
                let representations = if k[i] == 0 {
                    0
                } else {
                    let mut j = k.clone();
                    j[i] -= 1;
                    table.get(&j).map_or(0, Vec::len)
                };
                if representations != 1 {
                    return Verdict::Fails(Witness::Field {
                        k: k.clone(),
                        direction: i,
                        representations,
                    });
                }
            }
        }
    }
    if !basis.complete {
        return Verdict::Unknown(format!(
            "generator set not certified complete at degree {}",
            basis.deg_bound
        ));
    }
    match check_p1(basis, deg_bound) {
        Verdict::Holds => Verdict::Holds,
        _ => Verdict::Unknown("uniqueness depends on P1, which does not hold".into()),
    }
}

/// Generators plus both positivity verdicts at one degree bound.
pub fn analyze(fv: &FrequencyVector, deg_bound: u32) -> ResonanceBasis {
    let mut basis = hilbert_basis(fv, deg_bound);
    basis.p1 = check_p1(&basis, deg_bound);
    basis.p2 = check_p2(&basis, deg_bound);
    basis
}

use std::cmp::Reverse;
use std::collections::BTreeMap;

use crate::formal::{Coeff, Derivation, Exponent, Series};

/// Sort key of a local monomial order: lowest weight first, then higher
/// x-degree, then lexicographically larger exponents.
fn lead_key(e: &Exponent) -> (u32, Reverse<u32>, Reverse<Exponent>) {
    (e.weight(), Reverse(e.x_degree()), Reverse(e.clone()))
}

fn leading(f: &Series) -> Option<(Exponent, Coeff)> {
    f.terms()
        .min_by_key(|(e, _)| lead_key(e))
        .map(|(e, c)| (e.clone(), c.clone()))
}

/// Remainder of `f` after truncated division by `divisors` in the local order.
///
/// Terms of weight `≥ bound` are discarded throughout.
pub fn reduce(f: &Series, divisors: &[Series], bound: u32) -> Series {
    let ring = f.ring().clone();
    let leads: Vec<(Exponent, Coeff, &Series)> = divisors
        .iter()
        .filter_map(|g| leading(g).map(|(e, c)| (e, c, g)))
        .collect();
    let mut work: BTreeMap<(u32, Reverse<u32>, Reverse<Exponent>), Coeff> = f
        .terms()
        .filter(|(e, _)| e.weight() < bound)
        .map(|(e, c)| (lead_key(e), c.clone()))
        .collect();
    let mut remainder = Vec::new();
    while let Some((key, c)) = work.pop_first() {
        if c.is_negligible(ring.eps_exp) {
            continue;
        }
        let e = key.2 .0.clone();
        let hit = leads
            .iter()
            .find_map(|(le, lc, g)| e.checked_sub(le).map(|m| (m, lc, g)));
        let Some((m, lc, g)) = hit else {
            remainder.push((e, c));
            continue;
        };
        let q = c.div(lc).expect("leading coefficient is non-zero");
        for (ge, gc) in g.terms() {
            let te = ge.add(&m);
            if te.weight() >= bound {
                continue;
            }
            let mut t = gc.mul(&q);
            t.neg_assign();
            work.entry(lead_key(&te))
                .and_modify(|acc| acc.add_assign(&t))
                .or_insert(t);
        }
        // exact cancellation of the leading term
        work.remove(&key);
    }
    Series::from_terms(&ring, bound, remainder)
}

/// Largest coefficient left after reducing `Y(f)` by `divisors`, for each `f`.
pub fn ideal_residual(y: &Derivation, fs: &[Series], divisors: &[Series], bound: u32) -> f64 {
    fs.iter()
        .map(|f| reduce(&y.apply_bounded(f, bound), divisors, bound).max_abs())
        .fold(0.0, f64::max)
}

use std::collections::BTreeMap;

use crate::formal::{Coeff, Derivation, Direction, Exponent, Series};
use crate::resonance::Decomposition;

use super::{Mode, NormalFormError, SolverContext};

/// `L(Y)`; resonant terms are dropped in Poincaré-Dulac mode.
pub fn homological_l(ctx: &SolverContext, y: &Derivation) -> Result<Derivation, NormalFormError> {
    homological_split(ctx, y).map(|(solution, _)| solution)
}

/// `L(Y)` together with the resonant remainder that `L` does not invert.
///
/// Only the `∂_x` part of `Y` is read. In versal mode the remainder is always zero.
pub fn homological_split(
    ctx: &SolverContext,
    y: &Derivation,
) -> Result<(Derivation, Derivation), NormalFormError> {
    let ring = ctx.ring();
    let fv = ctx.frequencies();
    let trunc = y.trunc();
    let d = ring.d;

    // group by (direction, x-exponent); the rest of each term is a (φ, μ) series
    let mut groups: BTreeMap<(usize, Vec<u32>), Vec<(Exponent, Coeff)>> = BTreeMap::new();
    for (dir, e, c) in y.terms() {
        if let Direction::X(i) = dir {
            let k = e.x_vec();
            let rest = Exponent::new(&vec![0; d], &e.phi_vec(), &e.mu_vec());
            groups.entry((i, k)).or_default().push((rest, c.clone()));
        }
    }

    let mut solution = Vec::new();
    let mut remainder = Vec::new();
    for ((i, k), rest) in groups {
        let xk = ring.x_exponent(&k);
        let deg: u32 = k.iter().sum();
        if fv.is_resonant(&k, i) {
            match ctx.mode() {
                Mode::PoincareDulac => {
                    for (r, c) in rest {
                        remainder.push((Direction::X(i), r.add(&xk), c));
                    }
                }
                Mode::Versal => {
                    let invariant = (k[i] > 0)
                        .then(|| {
                            let mut j = k.clone();
                            j[i] -= 1;
                            j
                        })
                        .filter(|j| matches!(ctx.basis().decompose(j), Decomposition::Unique(_)))
                        .ok_or(NormalFormError::NoDecomposition {
                            k: k.clone(),
                            direction: i,
                        })?;
                    let xj = ring.x_exponent(&invariant);
                    for (r, c) in rest {
                        solution.push((Direction::Phi(i), r.add(&xj), c));
                    }
                }
            }
            continue;
        }
        let c0 = fv.divisor(&k, i);
        if c0.is_negligible(ctx.eps_div_exp) {
            return Err(NormalFormError::SmallDivisor {
                k,
                direction: i,
                modulus: c0.abs_f64(),
            });
        }
        // budget left for the (φ, μ) factor of this x-monomial
        let room = (trunc + 1).saturating_sub(deg);
        if room == 0 {
            continue;
        }
        let inv = divisor_inverse(ctx, &k, i, c0, room)?;
        let coeffs = Series::from_terms(ring, room, rest);
        for (r, c) in coeffs.mul(&inv)?.terms() {
            solution.push((Direction::X(i), r.add(&xk), c.clone()));
        }
    }
    Ok((
        Derivation::from_terms(ring, trunc, solution),
        Derivation::from_terms(ring, trunc, remainder),
    ))
}

/// Truncated expansion of `1/λ_{K,i}(φ)` with `λ_{K,i} = c + φ_i − (φ, K)`.
fn divisor_inverse(
    ctx: &SolverContext,
    k: &[u32],
    i: usize,
    c0: Coeff,
    room: u32,
) -> Result<Series, NormalFormError> {
    let ring = ctx.ring();
    let d = ring.d;
    let zero_x = vec![0u32; d];
    let zero_mu = vec![0u32; ring.l];
    let mut terms = vec![(ring.unit_exponent(), c0)];
    if ctx.mode() == Mode::Versal {
        for j in 0..d {
            let slope = (j == i) as i64 - k[j] as i64;
            if slope == 0 {
                continue;
            }
            let mut phi = vec![0u32; d];
            phi[j] = 1;
            terms.push((
                ring.exponent(&zero_x, &phi, &zero_mu),
                Coeff::from_ratio(ring.prec, slope, 1),
            ));
        }
    }
    Ok(Series::from_terms(ring, room, terms).inverse()?)
}

/// `j_V(Y) = L(Y) − L([L(Y), T])` with `T = V − S_v`.
pub fn approximate_inverse_jv(
    ctx: &SolverContext,
    t: &Derivation,
    y: &Derivation,
) -> Result<Derivation, NormalFormError> {
    let ly = homological_l(ctx, y)?;
    if t.is_zero() || ly.is_zero() {
        return Ok(ly);
    }
    let correction = homological_l(ctx, &ly.bracket(t)?)?;
    Ok(ly.sub(&correction)?)
}

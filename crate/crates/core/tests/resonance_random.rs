use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resonant_forms::resonance::{analyze, FrequencyVector, Verdict, Witness};

/// All invariant exponents of degree `1..=bound`, by exhaustive enumeration.
fn invariants(lams: &[i64], bound: u32) -> Vec<Vec<u32>> {
    let d = lams.len();
    let mut out = Vec::new();
    let mut j = vec![0u32; d];
    loop {
        let mut c = 0;
        while c < d {
            j[c] += 1;
            if j[c] <= bound {
                break;
            }
            j[c] = 0;
            c += 1;
        }
        if c == d {
            break;
        }
        let deg: u32 = j.iter().sum();
        let pairing: i64 = j.iter().zip(lams).map(|(&a, &l)| a as i64 * l).sum();
        if deg <= bound && pairing == 0 {
            out.push(j.clone());
        }
    }
    out
}

/// Irreducible invariants: not a sum of two non-zero invariants.
fn oracle_basis(lams: &[i64], bound: u32) -> Vec<Vec<u32>> {
    let inv = invariants(lams, bound);
    let set: std::collections::HashSet<Vec<u32>> = inv.iter().cloned().collect();
    let mut out: Vec<Vec<u32>> = inv
        .iter()
        .filter(|k| {
            !inv.iter().any(|a| {
                a != *k
                    && a.iter().zip(k.iter()).all(|(x, y)| x <= y)
                    && set.contains(&k.iter().zip(a).map(|(y, x)| y - x).collect::<Vec<_>>())
            })
        })
        .cloned()
        .collect();
    out.sort();
    out
}

/// Number of ℕ-combinations of `gens` summing to `target`.
fn count_reps(gens: &[Vec<u32>], target: &[u32]) -> usize {
    fn rec(gens: &[Vec<u32>], rest: Vec<u32>) -> usize {
        if rest.iter().all(|&v| v == 0) {
            return 1;
        }
        let Some((g, tail)) = gens.split_first() else {
            return 0;
        };
        let mut total = 0;
        let mut cur = rest;
        loop {
            total += rec(tail, cur.clone());
            if g.iter().zip(&cur).any(|(a, b)| a > b) || g.iter().all(|&a| a == 0) {
                break;
            }
            cur = cur.iter().zip(g).map(|(b, a)| b - a).collect();
        }
        total
    }
    rec(gens, target.to_vec())
}

#[test]
fn random_integer_frequencies_match_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let bound = 6;
    for _ in 0..1000 {
        let d = rng.gen_range(1..=3);
        let lams: Vec<i64> = (0..d).map(|_| rng.gen_range(-3..=3)).collect();
        let fv = FrequencyVector::integers(&lams, 64);
        let basis = analyze(&fv, bound);
        let mut got = basis.generators.clone();
        got.sort();
        assert_eq!(got, oracle_basis(&lams, bound), "Λ = {lams:?}");

        match &basis.p1 {
            Verdict::Fails(Witness::Relation { j, first, second }) => {
                assert_ne!(first, second);
                assert_eq!(basis.compose(first), *j);
                assert_eq!(basis.compose(second), *j);
            }
            Verdict::Holds => {
                assert!(basis.complete);
                for k in invariants(&lams, bound) {
                    assert_eq!(
                        count_reps(&basis.generators, &k),
                        1,
                        "Λ = {lams:?}, K = {k:?}"
                    );
                }
            }
            Verdict::Unknown(_) => {}
            other => panic!("unexpected P1 verdict {other:?}"),
        }

        if let Verdict::Fails(Witness::Field {
            k,
            direction,
            representations,
        }) = &basis.p2
        {
            assert!(fv.is_resonant(k, *direction));
            let reps = if k[*direction] == 0 {
                0
            } else {
                let mut j = k.clone();
                j[*direction] -= 1;
                count_reps(&basis.generators, &j)
            };
            assert_eq!(reps.min(2), (*representations).min(2), "Λ = {lams:?}");
            assert_ne!(reps, 1);
        }
    }
}

#[test]
fn certified_bases_are_stable_under_larger_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let d = rng.gen_range(2..=3);
        let lams: Vec<i64> = (0..d).map(|_| rng.gen_range(-3..=3)).collect();
        let fv = FrequencyVector::integers(&lams, 64);
        let small = analyze(&fv, 6);
        if small.complete {
            let large = analyze(&fv, 10);
            assert_eq!(small.generators, large.generators, "Λ = {lams:?}");
        }
    }
}

use crate::formal::{exp_adjoint, Derivation, Direction, Exponent};

use super::homological::homological_l;
use super::{IterationVariant, Mode, NormalFormError, NormalFormResult, SolverContext};

/// Conjugates `X_v = S_v + …` to `S_v` modulo the centralizer of `S`.
pub fn lie_iteration(
    ctx: &SolverContext,
    xv: &Derivation,
) -> Result<NormalFormResult, NormalFormError> {
    if ctx.mode() != Mode::Versal {
        return Err(NormalFormError::BadInput(
            "lie_iteration needs a versal-mode context".into(),
        ));
    }
    run(ctx, xv)
}

/// Classical normal form: non-resonant terms are removed, resonant ones kept.
pub fn poincare_dulac(
    ctx: &SolverContext,
    x: &Derivation,
) -> Result<NormalFormResult, NormalFormError> {
    if ctx.mode() != Mode::PoincareDulac {
        return Err(NormalFormError::BadInput(
            "poincare_dulac needs a Poincaré-Dulac context".into(),
        ));
    }
    run(ctx, x)
}

fn replay(x: &Derivation, result: &NormalFormResult) -> Result<Derivation, NormalFormError> {
    let mut cur = x.clone();
    for v in &result.generators {
        cur = exp_adjoint(v, &cur)?;
    }
    Ok(cur)
}

/// Replays the generators on `x` and measures what is left outside the
/// centralizer of `S` after subtracting `result.a`, below `trunc`.
pub fn verify_conjugacy(
    x: &Derivation,
    result: &NormalFormResult,
    trunc: u32,
) -> Result<f64, NormalFormError> {
    let cur = replay(x, result)?;
    let fv = &result.frequencies;
    Ok(cur
        .sub(&result.a.with_trunc(cur.trunc()))?
        .x_part()
        .truncate_range(i64::MIN, trunc as i64)
        .filter(|dir, e, _| match dir {
            Direction::X(i) => !fv.is_resonant(&e.x_vec(), i),
            Direction::Phi(_) => false,
        })
        .max_abs())
}

/// Like [`verify_conjugacy`] but compares every `∂_x` term, resonant ones included.
pub fn normal_form_defect(
    x: &Derivation,
    result: &NormalFormResult,
    trunc: u32,
) -> Result<f64, NormalFormError> {
    let cur = replay(x, result)?;
    Ok(cur
        .sub(&result.a.with_trunc(cur.trunc()))?
        .x_part()
        .truncate_range(i64::MIN, trunc as i64)
        .max_abs())
}

/// Scheduled doubling steps for truncation `n`: `⌈log₂ n⌉`.
fn schedule(n: u32) -> usize {
    if n <= 1 {
        0
    } else {
        (32 - (n - 1).leading_zeros()) as usize
    }
}

/// Terms eliminated in one phase of the iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    /// Non-resonant `∂_x` terms, by `∂_x` generators.
    NonResonant,
    /// Resonant `∂_x` terms, by `∂_φ` generators with invariant coefficients.
    Resonant,
}

fn in_phase(ctx: &SolverContext, phase: Phase, dir: Direction, e: &Exponent) -> bool {
    match dir {
        Direction::Phi(_) => false,
        Direction::X(i) => {
            ctx.frequencies().is_resonant(&e.x_vec(), i) == (phase == Phase::Resonant)
        }
    }
}

fn removable(
    ctx: &SolverContext,
    phase: Phase,
    x: &Derivation,
    base: &Derivation,
    lo: i64,
    hi: i64,
) -> Result<Derivation, NormalFormError> {
    Ok(x.sub(base)?
        .truncate_range(lo, hi)
        .filter(|dir, e, _| in_phase(ctx, phase, dir, e)))
}

/// `j_V` with `L` restricted to the terms of one phase.
fn jv(
    ctx: &SolverContext,
    phase: Phase,
    t: &Derivation,
    y: &Derivation,
) -> Result<Derivation, NormalFormError> {
    let l =
        |y: &Derivation| homological_l(ctx, &y.filter(|dir, e, _| in_phase(ctx, phase, dir, e)));
    let ly = l(y)?;
    if t.is_zero() || ly.is_zero() {
        return Ok(ly);
    }
    Ok(ly.sub(&l(&ly.bracket(t)?)?)?)
}

/// `base` plus the normal `∂_x` part of `x − base` below order `hi`.
fn normal_part(
    ctx: &SolverContext,
    x: &Derivation,
    base: &Derivation,
    hi: i64,
) -> Result<Derivation, NormalFormError> {
    let resonant = x
        .sub(base)?
        .x_part()
        .truncate_range(i64::MIN, hi)
        .filter(|dir, e, _| !ctx.is_removable(dir, e));
    Ok(base.add(&resonant)?)
}

fn check_overflow(ctx: &SolverContext, x: &Derivation) -> Result<(), NormalFormError> {
    let m = x.max_abs();
    if !(m <= ctx.overflow_guard()) {
        return Err(NormalFormError::Overflow(m));
    }
    Ok(())
}

struct Progress {
    cur: Derivation,
    gens: Vec<Derivation>,
    steps: usize,
    scheduled: usize,
}

/// Degree-doubling schedule followed by Newton clean-up steps for one phase.
fn run_phase(
    ctx: &SolverContext,
    phase: Phase,
    base: &Derivation,
    p: &mut Progress,
) -> Result<(), NormalFormError> {
    let n = ctx.trunc();
    let hi_all = n as i64;
    if removable(ctx, phase, &p.cur, base, 1, hi_all)?.is_zero() {
        return Ok(());
    }
    let zero = Derivation::zero(ctx.ring(), n);
    let scheduled = schedule(n);
    // (X_{n-1}, A_{n-1}) for the printed variant
    let mut prev: Option<(Derivation, Derivation)> = None;
    let mut a = base.clone();
    for step in 0..scheduled {
        let lo = 1i64 << step;
        let hi = (1i64 << (step + 1)).min(hi_all);
        let (src, acc) = match (ctx.variant(), &prev) {
            (IterationVariant::Printed, Some((px, pa))) => (px, pa),
            _ => (&p.cur, &a),
        };
        let t = if step == 0 {
            zero.clone()
        } else {
            acc.sub(base)?
        };
        let window = removable(ctx, phase, src, base, lo, hi)?;
        let v = jv(ctx, phase, &t, &window)?;
        let next = exp_adjoint(&v, &p.cur)?;
        check_overflow(ctx, &next)?;
        // S_{n+1}: window of X_n − A_n + [A_n, v_n]
        let s_next = p.cur.sub(&a)?.add(&a.bracket(&v)?)?.truncate_range(lo, hi);
        let a_next = a.add(&s_next)?;
        prev = Some((
            std::mem::replace(&mut p.cur, next),
            std::mem::replace(&mut a, a_next),
        ));
        p.gens.push(v);
    }
    p.steps += scheduled;
    p.scheduled += scheduled;

    let cap = p.steps + 4 * n as usize + 8;
    loop {
        let rest = removable(ctx, phase, &p.cur, base, 1, hi_all)?;
        if rest.is_zero() {
            return Ok(());
        }
        if p.steps >= cap {
            return Err(NormalFormError::NoConvergence(p.steps));
        }
        let t = p.cur.sub(base)?.truncate_range(i64::MIN, hi_all);
        let v = jv(ctx, phase, &t, &rest)?;
        p.cur = exp_adjoint(&v, &p.cur)?;
        check_overflow(ctx, &p.cur)?;
        p.gens.push(v);
        p.steps += 1;
    }
}

fn run(ctx: &SolverContext, x: &Derivation) -> Result<NormalFormResult, NormalFormError> {
    let n = ctx.trunc();
    if x.trunc() != n {
        return Err(NormalFormError::BadInput(format!(
            "field truncated at {}, context at {n}",
            x.trunc()
        )));
    }
    if !x.phi_part().is_zero() {
        return Err(NormalFormError::BadInput(
            "input has d/dphi components".into(),
        ));
    }
    let base = ctx.linear_field();
    if let Some(o) = x.sub(&base)?.order() {
        if o < 1 {
            return Err(NormalFormError::BadInput(format!(
                "input differs from the linear part at order {o}"
            )));
        }
    }
    let mut p = Progress {
        cur: x.clone(),
        gens: Vec::new(),
        steps: 0,
        scheduled: 0,
    };
    run_phase(ctx, Phase::NonResonant, &base, &mut p)?;
    if ctx.mode() == Mode::Versal {
        run_phase(ctx, Phase::Resonant, &base, &mut p)?;
    }

    let hi_all = n as i64;
    let Progress {
        cur,
        mut gens,
        steps,
        scheduled,
    } = p;
    gens.retain(|v| !v.is_zero());
    let a = normal_part(ctx, &cur, &base, hi_all)?;
    let residual = cur
        .sub(&a)?
        .x_part()
        .truncate_range(i64::MIN, hi_all)
        .filter(|dir, e, _| !ctx.is_normal(dir, e))
        .max_abs();
    Ok(NormalFormResult {
        a,
        generators: gens,
        residual,
        steps,
        scheduled_steps: scheduled,
        frequencies: ctx.frequencies().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formal::{Coeff, Ring};
    use crate::normalform::linear_field;
    use crate::resonance::{analyze, FrequencyVector};
    use std::sync::Arc;

    fn ctx(lams: &[i64], l: usize, trunc: u32, mode: Mode) -> (Arc<Ring>, SolverContext) {
        let ring = Ring::new(lams.len(), l, 256);
        let basis = analyze(&FrequencyVector::integers(lams, 256), 8);
        (
            ring.clone(),
            SolverContext::new(&ring, basis, trunc, mode).unwrap(),
        )
    }

    fn c(ring: &Arc<Ring>, re: f64) -> Coeff {
        ring.coeff(re, 0.0)
    }

    fn pyartli(ring: &Arc<Ring>, base: &Derivation) -> Derivation {
        let extra = Derivation::from_terms(
            ring,
            base.trunc(),
            [
                (
                    Direction::X(0),
                    ring.exponent(&[1, 0], &[0, 0], &[1]),
                    c(ring, 1.0),
                ),
                (
                    Direction::X(0),
                    ring.exponent(&[2, 1], &[0, 0], &[0]),
                    c(ring, 1.0),
                ),
                (
                    Direction::X(1),
                    ring.exponent(&[0, 1], &[0, 0], &[1]),
                    c(ring, 1.0),
                ),
                (
                    Direction::X(1),
                    ring.exponent(&[1, 2], &[0, 0], &[0]),
                    c(ring, 1.0),
                ),
            ],
        );
        base.add(&extra).unwrap()
    }

    #[test]
    fn schedule_is_ceil_log2() {
        assert_eq!(schedule(1), 0);
        assert_eq!(schedule(2), 1);
        assert_eq!(schedule(8), 3);
        assert_eq!(schedule(9), 4);
    }

    #[test]
    fn linear_field_is_fixed_point() {
        let (_, ctx) = ctx(&[1, -1], 0, 8, Mode::Versal);
        let s = ctx.linear_field();
        let r = lie_iteration(&ctx, &s).unwrap();
        assert!(r.generators.is_empty());
        assert_eq!(r.a.max_abs_diff(&s), 0.0);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn pd_removes_non_resonant_term() {
        let (ring, ctx) = ctx(&[1, -1], 0, 8, Mode::PoincareDulac);
        let s = ctx.linear_field();
        let x = s
            .add(&Derivation::monomial(
                &ring,
                8,
                Direction::X(0),
                ring.x_exponent(&[2, 0]),
                c(&ring, 1.0),
            ))
            .unwrap();
        let r = poincare_dulac(&ctx, &x).unwrap();
        assert_eq!(r.a.max_abs_diff(&s), 0.0, "{}", r.a);
        assert!(r.residual <= 1e-30);
        assert!(verify_conjugacy(&x, &r, 8).unwrap() <= 1e-30);
    }

    #[test]
    fn pd_keeps_resonant_term() {
        let (ring, ctx) = ctx(&[1, -1], 0, 8, Mode::PoincareDulac);
        let x = ctx
            .linear_field()
            .add(&Derivation::monomial(
                &ring,
                8,
                Direction::X(0),
                ring.x_exponent(&[2, 1]),
                c(&ring, 1.0),
            ))
            .unwrap();
        let r = poincare_dulac(&ctx, &x).unwrap();
        assert!(r.generators.is_empty());
        assert_eq!(r.a.max_abs_diff(&x), 0.0);
    }

    #[test]
    fn pyartli_converges_in_both_variants() {
        for variant in [IterationVariant::Printed, IterationVariant::Updated] {
            let (ring, ctx) = ctx(&[1, -1], 1, 8, Mode::Versal);
            let ctx = ctx.with_variant(variant);
            let x = pyartli(&ring, &ctx.linear_field());
            let r = lie_iteration(&ctx, &x).unwrap();
            assert!(r.residual <= 1e-30);
            assert!(verify_conjugacy(&x, &r, 8).unwrap() <= 1e-30);
            assert_eq!(r.a.max_abs_diff(&ctx.linear_field()), 0.0, "{}", r.a);
        }
    }

    #[test]
    fn flipped_generator_is_detected() {
        let (ring, ctx) = ctx(&[1, -1], 0, 8, Mode::PoincareDulac);
        let s = ctx.linear_field();
        let x = s
            .add(&Derivation::monomial(
                &ring,
                8,
                Direction::X(0),
                ring.x_exponent(&[2, 0]),
                c(&ring, 1.0),
            ))
            .unwrap();
        let mut r = poincare_dulac(&ctx, &x).unwrap();
        r.generators[0] = r.generators[0].neg();
        assert!(verify_conjugacy(&x, &r, 8).unwrap() > 1e-3);
    }

    #[test]
    fn flipped_phi_generator_shows_in_defect_only() {
        let (ring, ctx) = ctx(&[1, -1], 0, 8, Mode::Versal);
        let x = ctx
            .linear_field()
            .add(&Derivation::monomial(
                &ring,
                8,
                Direction::X(0),
                ring.x_exponent(&[2, 1]),
                c(&ring, 1.0),
            ))
            .unwrap();
        let mut r = lie_iteration(&ctx, &x).unwrap();
        assert!(normal_form_defect(&x, &r, 8).unwrap() < 1e-60);
        let flipped = r
            .generators
            .iter()
            .position(|v| !v.phi_part().is_zero())
            .unwrap();
        r.generators[flipped] = r.generators[flipped].neg();
        assert!(verify_conjugacy(&x, &r, 8).unwrap() < 1e-60);
        assert!(normal_form_defect(&x, &r, 8).unwrap() > 0.5);
    }

    #[test]
    fn rejects_mode_mismatch_and_bad_linear_part() {
        let (ring, ctx) = ctx(&[1, -1], 0, 8, Mode::PoincareDulac);
        assert!(lie_iteration(&ctx, &ctx.linear_field()).is_err());
        let wrong = linear_field(&ring, ctx.frequencies(), 8, false).scale(&c(&ring, 2.0));
        assert!(matches!(
            poincare_dulac(&ctx, &wrong),
            Err(NormalFormError::BadInput(_))
        ));
    }
}

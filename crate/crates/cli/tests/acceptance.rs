//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resonant_forms::formal::{Coeff, Derivation, Direction, Ring};
use resonant_forms::normalform::{
    lie_iteration, poincare_dulac, verify_conjugacy, IterationVariant, Mode, NormalFormResult,
    SolverContext,
};
use resonant_forms::resonance::{analyze, FrequencyVector, Verdict, Witness};
use resonant_forms::smalldivisor::{bruno_sum, sigma_sequence, BrunoVerdict, Norm};
use resonant_forms::versal::{cone_invariance, versal_data};
use resonant_forms_cli::{Overrides, Problem};
use serde_json::Value;

const N: u32 = 8;
const PREC: u32 = 256;
const DEG_BOUND: u32 = 12;
const CORPUS: usize = 50;

const TOL_CONJUGACY: f64 = 1e-30;
const TOL_CONE: f64 = 1e-28;
const TOL_PYARTLI: f64 = 1e-20;
const TOL_IDEAL: f64 = 1e-26;
const TOL_VARIANTS: f64 = 1e-26;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, limit: u64) -> Result<Duration, String> {
    let el = t.elapsed();
    ensure(el <= Duration::from_secs(limit), || {
        format!("took {el:.2?}, limit {limit} s")
    })?;
    Ok(el)
}

fn sqrt2() -> Coeff {
    let mut c = Coeff::from_f64(PREC, 2.0, 0.0);
    c.re.sqrt_mut();
    c
}

fn problem_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("problems")
        .join(name)
}

fn load(name: &str) -> Problem {
    let text = std::fs::read_to_string(problem_path(name)).expect("problem file");
    Problem::parse(&text, &Overrides::default()).expect("valid problem")
}

fn criterion_1() -> Outcome {
    let one = Coeff::from_f64(PREC, 1.0, 0.0);

    let t = Instant::now();
    let hopf = analyze(&FrequencyVector::integers(&[1, -1], PREC), DEG_BOUND);
    ensure(hopf.generators == vec![vec![1, 1]], || {
        format!("Hopf basis {:?}", hopf.generators)
    })?;
    ensure(hopf.p1.holds() && hopf.p2.holds(), || {
        "Hopf positivity".into()
    })?;
    within(t, 5)?;

    let t = Instant::now();
    let b = analyze(&FrequencyVector::integers(&[1, 1, -2], PREC), DEG_BOUND);
    let mut gens = b.generators.clone();
    gens.sort();
    ensure(
        gens == vec![vec![0, 2, 1], vec![1, 1, 1], vec![2, 0, 1]],
        || format!("(1,1,-2) basis {gens:?}"),
    )?;
    match &b.p1 {
        // uv = w²: (2,0,1) + (0,2,1) = 2·(1,1,1)
        Verdict::Fails(Witness::Relation { j, first, second }) => {
            ensure(j == &vec![2, 2, 2] && first != second, || {
                format!("P1 witness {:?}", b.p1)
            })?;
            ensure(b.compose(first) == *j && b.compose(second) == *j, || {
                "P1 witness does not compose".into()
            })?;
        }
        other => return Err(format!("(1,1,-2) P1 verdict {other:?}")),
    }
    match &b.p2 {
        Verdict::Fails(Witness::Field { k, direction, .. })
            if (k == &vec![0, 1, 0] && *direction == 0)
                || (k == &vec![1, 0, 0] && *direction == 1) => {}
        other => return Err(format!("(1,1,-2) P2 verdict {other:?}")),
    }
    within(t, 5)?;

    let t = Instant::now();
    let fv = FrequencyVector::new(
        vec![
            vec![(1, 1), (1, 1)],
            vec![(1, 1), (0, 1)],
            vec![(0, 1), (1, 1)],
        ],
        vec![one, sqrt2()],
    )
    .map_err(|e| e.to_string())?;
    let b = analyze(&fv, DEG_BOUND);
    ensure(b.p1.holds(), || format!("(a+b,a,b) P1 {}", b.p1))?;
    match &b.p2 {
        Verdict::Fails(Witness::Field {
            k, direction: 0, ..
        }) if k == &vec![0, 1, 1] => {}
        other => return Err(format!("(a+b,a,b) P2 verdict {other:?}")),
    }
    within(t, 5)?;
    Ok("Hopf, (1,1,-2) with uv=w^2 and y d/dx, (a+b,a,b) with yz d/dx".into())
}

struct Case {
    fv: FrequencyVector,
    input_versal: Derivation,
    input_pd: Derivation,
    ctx_versal: SolverContext,
    ctx_pd: SolverContext,
    /// (mode, variant) → result
    runs: Vec<(Mode, IterationVariant, NormalFormResult)>,
}

fn double_hopf() -> FrequencyVector {
    let one = Coeff::from_f64(PREC, 1.0, 0.0);
    FrequencyVector::new(
        vec![
            vec![(1, 1), (0, 1)],
            vec![(-1, 1), (0, 1)],
            vec![(0, 1), (1, 1)],
            vec![(0, 1), (-1, 1)],
        ],
        vec![one, sqrt2()],
    )
    .unwrap()
}

/// Random terms of order 1..=4 with real coefficients in [−1, 1].
fn perturbation(rng: &mut ChaCha8Rng, ring: &Arc<Ring>) -> Derivation {
    let d = ring.d;
    let mut terms = Vec::new();
    for _ in 0..rng.gen_range(3..=8) {
        let order = rng.gen_range(1..=4u32);
        let mut mu = vec![0u32; ring.l];
        let mut x_deg = order + 1;
        if order >= 3 && rng.gen_bool(0.3) {
            mu[0] = 1;
            x_deg -= 2;
        }
        let mut x = vec![0u32; d];
        for _ in 0..x_deg {
            x[rng.gen_range(0..d)] += 1;
        }
        let c = ring.coeff(rng.gen_range(-1.0..=1.0), 0.0);
        terms.push((
            Direction::X(rng.gen_range(0..d)),
            ring.exponent(&x, &vec![0; d], &mu),
            c,
        ));
    }
    Derivation::from_terms(ring, N, terms)
}

fn build_corpus() -> Result<Vec<Case>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut cases = Vec::with_capacity(CORPUS);
    for n in 0..CORPUS {
        let fv = if n % 2 == 0 {
            FrequencyVector::integers(&[1, -1], PREC)
        } else {
            double_hopf()
        };
        let ring = Ring::new(fv.d(), 1, PREC);
        let basis = analyze(&fv, DEG_BOUND);
        let ctx_versal =
            SolverContext::new(&ring, basis.clone(), N, Mode::Versal).map_err(|e| e.to_string())?;
        let ctx_pd =
            SolverContext::new(&ring, basis, N, Mode::PoincareDulac).map_err(|e| e.to_string())?;
        let p = perturbation(&mut rng, &ring);
        let input_versal = ctx_versal.linear_field().add(&p).unwrap();
        let input_pd = ctx_pd.linear_field().add(&p).unwrap();
        let mut runs = Vec::new();
        for variant in [IterationVariant::Printed, IterationVariant::Updated] {
            let cv = ctx_versal.clone().with_variant(variant);
            let r =
                lie_iteration(&cv, &input_versal).map_err(|e| format!("case {n} versal: {e}"))?;
            runs.push((Mode::Versal, variant, r));
            let cp = ctx_pd.clone().with_variant(variant);
            let r = poincare_dulac(&cp, &input_pd)
                .map_err(|e| format!("case {n} Poincare-Dulac: {e}"))?;
            runs.push((Mode::PoincareDulac, variant, r));
        }
        cases.push(Case {
            fv,
            input_versal,
            input_pd,
            ctx_versal,
            ctx_pd,
            runs,
        });
    }
    Ok(cases)
}

impl Case {
    fn input(&self, mode: Mode) -> &Derivation {
        match mode {
            Mode::Versal => &self.input_versal,
            Mode::PoincareDulac => &self.input_pd,
        }
    }

    fn ctx(&self, mode: Mode) -> &SolverContext {
        match mode {
            Mode::Versal => &self.ctx_versal,
            Mode::PoincareDulac => &self.ctx_pd,
        }
    }
}

fn criterion_2(corpus: &Result<Vec<Case>, String>, el: Duration) -> Outcome {
    let cases = corpus.as_ref().map_err(Clone::clone)?;
    ensure(el <= Duration::from_secs(60), || {
        format!("corpus took {el:.2?}, limit 60 s")
    })?;
    let mut worst = 0f64;
    for (n, c) in cases.iter().enumerate() {
        for (mode, _, r) in &c.runs {
            let res = verify_conjugacy(c.input(*mode), r, N).map_err(|e| e.to_string())?;
            ensure(res <= TOL_CONJUGACY, || {
                format!("case {n} {mode:?}: residual {res:e}")
            })?;
            worst = worst.max(res);
        }
    }
    Ok(format!(
        "{} runs, worst residual {worst:e}, {el:.2?}",
        cases.len() * 4
    ))
}

fn criterion_3(corpus: &Result<Vec<Case>, String>) -> Outcome {
    let cases = corpus.as_ref().map_err(Clone::clone)?;
    let mut terms = 0;
    for (n, c) in cases.iter().enumerate() {
        for (mode, _, r) in &c.runs {
            let extra = r.a.sub(&c.ctx(*mode).linear_field()).unwrap();
            for (dir, e, _) in extra.terms() {
                let Direction::X(i) = dir else {
                    return Err(format!("case {n}: d/dphi term in A"));
                };
                ensure(c.fv.is_resonant(&e.x_vec(), i), || {
                    format!("case {n}: non-resonant term in A")
                })?;
                terms += 1;
            }
        }
    }
    Ok(format!("{terms} normal-form terms, all resonant"))
}

fn criterion_4(corpus: &Result<Vec<Case>, String>) -> Outcome {
    let cases = corpus.as_ref().map_err(Clone::clone)?;
    let mut worst = 0f64;
    for (n, c) in cases.iter().enumerate() {
        for (mode, _, r) in &c.runs {
            let res = cone_invariance(&r.a, c.ctx(*mode).basis(), N);
            ensure(res <= TOL_CONE, || {
                format!("case {n} {mode:?}: cone residual {res:e}")
            })?;
            worst = worst.max(res);
        }
    }
    Ok(format!("worst cone residual {worst:e}"))
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let p = load("hopf.example");
    let basis = analyze(&p.fv, DEG_BOUND);
    let ctx =
        SolverContext::new(&p.ring, basis.clone(), N, Mode::Versal).map_err(|e| e.to_string())?;
    let r = lie_iteration(&ctx, &p.field).map_err(|e| e.to_string())?;
    let run = versal_data(&r, &basis).map_err(|e| e.to_string())?;
    let lin = &run.output.linear[0];
    let u = lin.u[0].re.to_f64();
    let mu = lin.mu[0].re.to_f64();
    let mut du = lin.u[0].clone();
    du.sub_assign(&Coeff::from_f64(PREC, 2.0, 0.0));
    ensure(du.abs_f64() <= TOL_PYARTLI, || {
        format!("u-linear coefficient {u}")
    })?;
    let near = |target: f64| {
        let mut d = lin.mu[0].clone();
        d.sub_assign(&Coeff::from_f64(PREC, target, 0.0));
        d.abs_f64() <= TOL_PYARTLI
    };
    ensure(near(1.0) || near(2.0), || {
        format!("mu-linear coefficient {mu}")
    })?;
    ensure(run.output.nondegenerate, || {
        "nondegeneracy flag not set".into()
    })?;
    let el = within(t, 20)?;
    Ok(format!(
        "(g,R) = {}; u-coefficient {u}, mu-coefficient {mu}, {el:.2?}",
        run.output.bs_u[0]
    ))
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let p = load("multihopf.example");
    let basis = analyze(&p.fv, DEG_BOUND);
    let ctx =
        SolverContext::new(&p.ring, basis.clone(), N, Mode::Versal).map_err(|e| e.to_string())?;
    let r = lie_iteration(&ctx, &p.field).map_err(|e| e.to_string())?;
    let run = versal_data(&r, &basis).map_err(|e| e.to_string())?;
    let out = &run.output;
    ensure(out.bs_generators.len() == 2, || {
        format!("{} generators", out.bs_generators.len())
    })?;
    ensure(
        out.graph_generators == vec![vec![1, 0, 1, 0], vec![0, 1, 0, 1]],
        || format!("graph generators {:?}", out.graph_generators),
    )?;
    for i in 0..2 {
        let sum = out.g[i].add(&out.g[i + 2]).unwrap();
        ensure(
            sum.max_abs_diff(&out.bs_generators[i]) <= p.ring.epsilon(),
            || format!("generator {i} is not g{} + g{}", i + 1, i + 3),
        )?;
        ensure(!out.linear[i].is_zero(), || {
            format!("generator {i} has zero linear part")
        })?;
    }
    ensure(run.invariance <= TOL_IDEAL, || {
        format!("ideal residual {:e}", run.invariance)
    })?;
    let el = within(t, 120)?;
    Ok(format!(
        "2 generators paired with u1 - x1 x3, u2 - x2 x4; ideal residual {:e}, {el:.2?}",
        run.invariance
    ))
}

fn criterion_7(corpus: &Result<Vec<Case>, String>) -> Outcome {
    let cases = corpus.as_ref().map_err(Clone::clone)?;
    let mut worst = 0f64;
    for (n, c) in cases.iter().enumerate() {
        for mode in [Mode::Versal, Mode::PoincareDulac] {
            let a: Vec<&NormalFormResult> = c
                .runs
                .iter()
                .filter(|(m, _, _)| *m == mode)
                .map(|(_, _, r)| r)
                .collect();
            let diff = a[0].a.max_abs_diff(&a[1].a);
            ensure(diff <= TOL_VARIANTS, || {
                format!("case {n} {mode:?}: variants differ by {diff:e}")
            })?;
            worst = worst.max(diff);
        }
    }
    Ok(format!("worst difference {worst:e}"))
}

/// Brute-force `σ_k` for integer frequencies.
fn sigma_brute(lams: &[i64], k: u32, linf: bool) -> Option<f64> {
    let bound = 1i64 << k;
    let d = lams.len();
    let mut best: Option<i64> = None;
    let mut j = vec![0i64; d];
    loop {
        let mut carry = 0;
        while carry < d {
            j[carry] += 1;
            if j[carry] <= bound {
                break;
            }
            j[carry] = 0;
            carry += 1;
        }
        if carry == d {
            break;
        }
        let norm = if linf {
            *j.iter().max().unwrap()
        } else {
            j.iter().sum()
        };
        if norm > bound {
            continue;
        }
        let pair: i64 = j.iter().zip(lams).map(|(a, l)| a * l).sum();
        for l in lams {
            let div = (pair - l).abs();
            if div != 0 {
                best = Some(best.map_or(div, |b| b.min(div)));
            }
        }
    }
    best.map(|b| b as f64)
}

fn criterion_8() -> Outcome {
    let t = Instant::now();
    let hopf = FrequencyVector::integers(&[1, -1], PREC);
    let linf = sigma_sequence(&hopf, 6, Norm::LInf).map_err(|e| e.to_string())?;
    let l1 = sigma_sequence(&hopf, 6, Norm::L1).map_err(|e| e.to_string())?;
    for k in 0..=6u32 {
        let (a, b) = (linf.sigma[k as usize], l1.sigma[k as usize]);
        ensure(
            a == Some(1.0) && a == sigma_brute(&[1, -1], k, true),
            || format!("linf sigma_{k} = {a:?}"),
        )?;
        ensure(b == sigma_brute(&[1, -1], k, false), || {
            format!("l1 sigma_{k} = {b:?}")
        })?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n in 0..20 {
        let d = rng.gen_range(1..=3usize);
        let kmax = if d == 3 {
            rng.gen_range(2..=6)
        } else {
            rng.gen_range(2..=8)
        };
        let omega: Vec<Coeff> = (0..d)
            .map(|_| Coeff::from_f64(PREC, rng.gen_range(-3.0..3.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let exact = (0..d)
            .map(|i| (0..d).map(|j| ((i == j) as i64, 1)).collect())
            .collect();
        let fv = FrequencyVector::new(exact, omega).map_err(|e| e.to_string())?;
        let r = sigma_sequence(&fv, kmax, Norm::L1).map_err(|e| e.to_string())?;
        let s: Vec<f64> = r.sigma.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
        ensure(s.windows(2).all(|w| w[0] >= w[1]), || {
            format!("random case {n}: sigma not monotone {s:?}")
        })?;
    }

    let half = bruno_sum(&[0.5; 30]).map_err(|e| e.to_string())?;
    ensure(half.verdict == BrunoVerdict::BrunoUpToKmax, || {
        "a_k = 1/2 verdict".into()
    })?;
    ensure(
        (half.partial_sums[29] - 2.0 * 2f64.ln()).abs() < 1e-8,
        || "a_k = 1/2 sum".into(),
    )?;
    let fast: Vec<f64> = (0..8).map(|k| 2f64.powi(-(1 << k))).collect();
    ensure(
        bruno_sum(&fast).map_err(|e| e.to_string())?.verdict == BrunoVerdict::DivergingTrend,
        || "a_k = 2^(-2^k) verdict".into(),
    )?;
    let harmonic: Vec<f64> = (0..=40).map(|k| 1.0 / (k as f64 + 1.0)).collect();
    ensure(
        bruno_sum(&harmonic).map_err(|e| e.to_string())?.verdict == BrunoVerdict::BrunoUpToKmax,
        || "a_k = 1/(k+1) verdict".into(),
    )?;
    let el = within(t, 60)?;
    Ok(format!(
        "Hopf sigma = 1 for k <= 6 under the l-infinity norm; l1 gives sigma_0 = {:?} (brute force agrees); {el:.2?}",
        l1.sigma[0]
    ))
}

fn flip_first_generator(v: &mut Value) {
    let c = &mut v["normal_form"]["generators"][0][0]["c"][0];
    let s = c.as_str().expect("decimal string").to_string();
    *c = Value::String(match s.strip_prefix('-') {
        Some(rest) => rest.to_string(),
        None => format!("-{s}"),
    });
}

fn criterion_9(corpus: &Result<Vec<Case>, String>) -> Outcome {
    let cases = corpus.as_ref().map_err(Clone::clone)?;
    for (n, c) in cases.iter().enumerate().take(10) {
        for (mode, variant, r) in &c.runs {
            let ctx = c.ctx(*mode).clone().with_variant(*variant);
            let again = match mode {
                Mode::Versal => lie_iteration(&ctx, &r.a),
                Mode::PoincareDulac => poincare_dulac(&ctx, &r.a),
            }
            .map_err(|e| format!("case {n}: {e}"))?;
            ensure(again.generators.is_empty(), || {
                format!("case {n} {mode:?}: re-normalizing produced generators")
            })?;
            let diff = again.a.max_abs_diff(&r.a);
            ensure(diff <= ctx.ring().epsilon(), || {
                format!("case {n} {mode:?}: A moved by {diff:e}")
            })?;
        }
    }

    let bin = env!("CARGO_BIN_EXE_resonant-forms");
    let dir =
        std::env::temp_dir().join(format!("resonant-forms-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut codes = Vec::new();
    for (cmd, name) in [
        ("versal", "hopf.example"),
        ("normalize", "resonance112.example"),
    ] {
        let problem = problem_path(name);
        let good = dir.join(format!("{name}.json"));
        let st = Command::new(bin)
            .args([
                cmd,
                "--out",
                good.to_str().unwrap(),
                problem.to_str().unwrap(),
            ])
            .env_remove("RESONANT_FORMS_PRECISION")
            .output()
            .map_err(|e| e.to_string())?;
        ensure(st.status.code() == Some(0), || {
            format!("{cmd} {name}: exit {:?}", st.status.code())
        })?;
        let verify = |path: &Path| {
            Command::new(bin)
                .args(["verify", problem.to_str().unwrap(), path.to_str().unwrap()])
                .env_remove("RESONANT_FORMS_PRECISION")
                .output()
                .map(|o| o.status.code())
                .map_err(|e| e.to_string())
        };
        ensure(verify(&good)? == Some(0), || {
            format!("verify of untouched {name} result failed")
        })?;
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&good).unwrap()).unwrap();
        flip_first_generator(&mut v);
        let bad = dir.join(format!("{name}.tampered.json"));
        std::fs::write(&bad, serde_json::to_string(&v).unwrap()).unwrap();
        let code = verify(&bad)?;
        ensure(code == Some(3), || {
            format!("tampered {name}: exit {code:?}")
        })?;
        codes.push(code.unwrap());
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!(
        "re-normalization is a fixed point on 40 runs; tampered results exit {codes:?}"
    ))
}

fn main() {
    let t = Instant::now();
    let corpus = build_corpus();
    let corpus_time = t.elapsed();
    let results: Vec<(&str, Outcome)> = vec![
        ("worked resonance examples", criterion_1()),
        ("conjugacy oracle", criterion_2(&corpus, corpus_time)),
        ("normal-form purity", criterion_3(&corpus)),
        ("resonant-cone invariance", criterion_4(&corpus)),
        ("Pyartli pipeline", criterion_5()),
        ("multi-Hopf ideal", criterion_6()),
        ("iteration-variant agreement", criterion_7(&corpus)),
        ("small-divisor suite", criterion_8()),
        ("idempotence and negative control", criterion_9(&corpus)),
    ];
    let mut failed = 0;
    for (n, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", n + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", n + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

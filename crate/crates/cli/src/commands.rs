//! The subcommands, each producing a JSON result and a plain-text report.

use std::fmt::Write as _;

use resonant_forms::normalform::{
    lie_iteration, normal_form_defect, poincare_dulac, verify_conjugacy, IterationVariant, Mode,
    NormalFormError, NormalFormResult, SolverContext,
};
use resonant_forms::resonance::{analyze, ResonanceBasis, DEFAULT_DEG_BOUND};
use resonant_forms::smalldivisor::{cantor_membership, sigma_sequence, Norm};
use resonant_forms::versal::{
    check_ideal_invariance, cone_invariance, versal_data, VersalError, VersalRun,
};
use serde_json::{json, Value};

use crate::problem::Problem;
use crate::report::{
    basis_json, coeff_json, display_with_u, field_json, parse_field, series_json, useries_json,
};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Resonance,
    CheckPositivity,
    Normalize,
    Versal,
    Bruno,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Resonance => "resonance",
            Command::CheckPositivity => "check-positivity",
            Command::Normalize => "normalize",
            Command::Versal => "versal",
            Command::Bruno => "bruno",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Settings {
    pub deg_bound: u32,
    pub require_positivity: bool,
    pub variant: IterationVariant,
    pub kmax: u32,
    pub norm: Norm,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            deg_bound: DEFAULT_DEG_BOUND,
            require_positivity: false,
            variant: IterationVariant::Updated,
            kmax: 6,
            norm: Norm::L1,
        }
    }
}

/// A finished command: JSON result, text report and process exit code.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub json: Value,
    pub text: String,
    pub exit: i32,
}

fn header(cmd: &str, p: &Problem) -> Value {
    json!({
        "command": cmd,
        "version": env!("CARGO_PKG_VERSION"),
        "problem": {
            "dim": p.fv.d(),
            "mu_count": p.ring.l,
            "truncation": p.trunc,
            "precision": p.prec,
            "mode": mode_name(p.mode),
        },
    })
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Versal => "versal",
        Mode::PoincareDulac => "poincare-dulac",
    }
}

fn variant_name(v: IterationVariant) -> &'static str {
    match v {
        IterationVariant::Printed => "printed",
        IterationVariant::Updated => "updated",
    }
}

fn nf_error(e: NormalFormError) -> CliError {
    match e {
        NormalFormError::PositivityRequired => CliError::Positivity(e.to_string()),
        NormalFormError::NoDecomposition { .. } => CliError::Positivity(e.to_string()),
        NormalFormError::BadInput(_) => CliError::Parse(e.to_string()),
        _ => CliError::Numeric(e.to_string()),
    }
}

fn versal_error(e: VersalError) -> CliError {
    CliError::Numeric(e.to_string())
}

fn resonance_text(out: &mut String, b: &ResonanceBasis) {
    let _ = writeln!(out, "resonance generators: {:?}", b.generators);
    let _ = writeln!(
        out,
        "basis complete: {} (deg_bound {})",
        b.complete, b.deg_bound
    );
    let _ = writeln!(out, "P1: {}", b.p1);
    let _ = writeln!(out, "P2: {}", b.p2);
}

pub fn run(cmd: Command, p: &Problem, s: &Settings) -> Result<Outcome, CliError> {
    match cmd {
        Command::Resonance | Command::CheckPositivity => resonance(cmd, p, s),
        Command::Normalize => normalize(p, s),
        Command::Versal => versal(p, s),
        Command::Bruno => bruno(p, s),
    }
}

fn resonance(cmd: Command, p: &Problem, s: &Settings) -> Result<Outcome, CliError> {
    let basis = analyze(&p.fv, s.deg_bound);
    let mut json = header(cmd.name(), p);
    json["resonance"] = basis_json(&basis);
    json["positivity"] = json!(basis.positivity_holds());
    let mut text = String::new();
    resonance_text(&mut text, &basis);
    let strict = s.require_positivity || cmd == Command::CheckPositivity;
    let exit = if strict && !basis.positivity_holds() {
        2
    } else {
        0
    };
    Ok(Outcome { json, text, exit })
}

struct Normalized {
    basis: ResonanceBasis,
    result: NormalFormResult,
    conjugacy: f64,
    defect: f64,
    cone: f64,
}

fn normalized(p: &Problem, s: &Settings) -> Result<Normalized, CliError> {
    let basis = analyze(&p.fv, s.deg_bound);
    if s.require_positivity && !basis.positivity_holds() {
        return Err(CliError::Positivity(format!(
            "P1: {}; P2: {}",
            basis.p1, basis.p2
        )));
    }
    let ctx = SolverContext::new(&p.ring, basis.clone(), p.trunc, p.mode)
        .map_err(nf_error)?
        .with_variant(s.variant);
    let result = match p.mode {
        Mode::Versal => lie_iteration(&ctx, &p.field),
        Mode::PoincareDulac => poincare_dulac(&ctx, &p.field),
    }
    .map_err(nf_error)?;
    let conjugacy = verify_conjugacy(&p.field, &result, p.trunc).map_err(nf_error)?;
    let defect = normal_form_defect(&p.field, &result, p.trunc).map_err(nf_error)?;
    let cone = cone_invariance(&result.a, &basis, p.trunc);
    Ok(Normalized {
        basis,
        result,
        conjugacy,
        defect,
        cone,
    })
}

fn normal_form_json(n: &Normalized, s: &Settings) -> Value {
    json!({
        "a": field_json(&n.result.a),
        "display": display_with_u(&n.result.a, &n.basis),
        "generators": n.result.generators.iter().map(field_json).collect::<Vec<_>>(),
        "steps": n.result.steps,
        "scheduled_steps": n.result.scheduled_steps,
        "variant": variant_name(s.variant),
    })
}

fn normal_form_text(out: &mut String, n: &Normalized) {
    let _ = writeln!(out, "normal form:");
    for line in display_with_u(&n.result.a, &n.basis) {
        let _ = writeln!(out, "  {line}");
    }
    let _ = writeln!(
        out,
        "generators: {} ({} steps, {} scheduled)",
        n.result.generators.len(),
        n.result.steps,
        n.result.scheduled_steps
    );
    let _ = writeln!(out, "iteration residual: {:e}", n.result.residual);
    let _ = writeln!(out, "conjugacy residual: {:e}", n.conjugacy);
    let _ = writeln!(out, "normal form defect: {:e}", n.defect);
    let _ = writeln!(out, "cone invariance residual: {:e}", n.cone);
}

fn normalize(p: &Problem, s: &Settings) -> Result<Outcome, CliError> {
    let n = normalized(p, s)?;
    let mut json = header("normalize", p);
    json["resonance"] = basis_json(&n.basis);
    json["normal_form"] = normal_form_json(&n, s);
    json["residuals"] = json!({
        "iteration": n.result.residual,
        "conjugacy": n.conjugacy,
        "normal_form_defect": n.defect,
        "cone_invariance": n.cone,
    });
    let mut text = String::new();
    resonance_text(&mut text, &n.basis);
    normal_form_text(&mut text, &n);
    Ok(Outcome {
        json,
        text,
        exit: 0,
    })
}

fn versal_json(run: &VersalRun) -> Value {
    let out = &run.output;
    json!({
        "g": out.g_u.iter().map(useries_json).collect::<Vec<_>>(),
        "g_series": out.g.iter().map(series_json).collect::<Vec<_>>(),
        "bs_generators": out.bs_u.iter().map(useries_json).collect::<Vec<_>>(),
        "graph_generators": out.graph_generators,
        "linear": out.linear.iter().map(|l| json!({
            "u": l.u.iter().map(coeff_json).collect::<Vec<_>>(),
            "mu": l.mu.iter().map(coeff_json).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "nondegenerate": out.nondegenerate,
        "normal_form_at_g": field_json(&run.normal_form),
    })
}

fn versal(p: &Problem, s: &Settings) -> Result<Outcome, CliError> {
    if p.mode != Mode::Versal {
        return Err(CliError::Parse(
            "the versal command needs mode = \"versal\"".into(),
        ));
    }
    let n = normalized(p, s)?;
    let run = versal_data(&n.result, &n.basis).map_err(versal_error)?;
    let mut json = header("versal", p);
    json["resonance"] = basis_json(&n.basis);
    json["normal_form"] = normal_form_json(&n, s);
    json["versal"] = versal_json(&run);
    json["residuals"] = json!({
        "iteration": n.result.residual,
        "conjugacy": n.conjugacy,
        "normal_form_defect": n.defect,
        "cone_invariance": n.cone,
        "ideal_invariance": run.invariance,
        "resubstitution": run.resubstitution,
    });
    let mut text = String::new();
    resonance_text(&mut text, &n.basis);
    normal_form_text(&mut text, &n);
    for (j, g) in run.output.g_u.iter().enumerate() {
        let _ = writeln!(text, "g{} = {g}", j + 1);
    }
    for (j, (f, r)) in run
        .output
        .bs_u
        .iter()
        .zip(&run.output.graph_generators)
        .enumerate()
    {
        let lin = &run.output.linear[j];
        let u: Vec<String> = lin.u.iter().map(|c| c.to_string()).collect();
        let mu: Vec<String> = lin.mu.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(
            text,
            "(g, R{}) = {f}   [graph u{} - x^{r:?}; linear u: {u:?}, mu: {mu:?}]",
            j + 1,
            j + 1
        );
    }
    let _ = writeln!(text, "nondegenerate: {}", run.output.nondegenerate);
    let _ = writeln!(text, "ideal invariance residual: {:e}", run.invariance);
    let _ = writeln!(text, "resubstitution residual: {:e}", run.resubstitution);
    Ok(Outcome {
        json,
        text,
        exit: 0,
    })
}

fn bruno(p: &Problem, s: &Settings) -> Result<Outcome, CliError> {
    let report =
        sigma_sequence(&p.fv, s.kmax, s.norm).map_err(|e| CliError::Parse(e.to_string()))?;
    let mut json = header("bruno", p);
    json["bruno"] = json!({
        "kmax": s.kmax,
        "norm": match s.norm { Norm::L1 => "l1", Norm::LInf => "linf" },
        "sigma": report.sigma,
        "partial_sums": report.partial_sums,
        "verdict": report.verdict.label(),
    });
    let mut text = String::new();
    for (k, sk) in report.sigma.iter().enumerate() {
        match sk {
            Some(v) => {
                let _ = writeln!(text, "sigma_{k} = {v:e}");
            }
            None => {
                let _ = writeln!(text, "sigma_{k} = (no nonzero divisor)");
            }
        }
    }
    let _ = writeln!(text, "partial sums: {:?}", report.partial_sums);
    let _ = writeln!(text, "verdict: {}", report.verdict.label());
    if let Some(q) = &p.file.cantor {
        let phi: Vec<(f64, f64)> = q.phi.iter().map(|&[re, im]| (re, im)).collect();
        let member = cantor_membership(&p.fv, &phi, q.n, q.s, q.s0, &q.a)
            .map_err(|e| CliError::Parse(e.to_string()))?;
        json["cantor"] = json!({"n": q.n, "s": q.s, "s0": q.s0, "member": member});
        let _ = writeln!(text, "phi in Z_(n={}, s={}): {member}", q.n, q.s);
    }
    Ok(Outcome {
        json,
        text,
        exit: 0,
    })
}

fn stored_f64(v: &Value, key: &str) -> Result<f64, CliError> {
    v["residuals"][key]
        .as_f64()
        .ok_or_else(|| CliError::Parse(format!("result file: missing residuals.{key}")))
}

/// Replays a stored normalization against the problem and compares residuals.
///
/// A recomputed residual passes when it is at most twice the stored value, or
/// below `2^{-p/2}` to absorb decimal round-off of the stored coefficients.
pub fn verify(p: &Problem, result_text: &str) -> Result<Outcome, CliError> {
    let stored: Value = serde_json::from_str(result_text)
        .map_err(|e| CliError::Parse(format!("result file: {e}")))?;
    let cmd = stored["command"].as_str().unwrap_or_default();
    if cmd != "normalize" && cmd != "versal" {
        return Err(CliError::Parse(format!(
            "result file: cannot verify a {cmd:?} result"
        )));
    }
    let sp = &stored["problem"];
    let same = sp["dim"].as_u64() == Some(p.fv.d() as u64)
        && sp["mu_count"].as_u64() == Some(p.ring.l as u64)
        && sp["truncation"].as_u64() == Some(p.trunc as u64)
        && sp["mode"].as_str() == Some(mode_name(p.mode));
    if !same {
        return Err(CliError::Parse(
            "result file does not match the problem settings".into(),
        ));
    }
    let deg_bound = stored["resonance"]["deg_bound"]
        .as_u64()
        .unwrap_or(DEFAULT_DEG_BOUND as u64) as u32;
    let basis = analyze(&p.fv, deg_bound);
    let nf = &stored["normal_form"];
    let a = parse_field(&nf["a"], &p.ring, p.trunc)?;
    let generators = nf["generators"]
        .as_array()
        .ok_or_else(|| CliError::Parse("result file: missing generators".into()))?
        .iter()
        .map(|g| parse_field(g, &p.ring, p.trunc))
        .collect::<Result<Vec<_>, _>>()?;
    let result = NormalFormResult {
        a,
        generators,
        residual: stored_f64(&stored, "iteration")?,
        steps: nf["steps"].as_u64().unwrap_or(0) as usize,
        scheduled_steps: nf["scheduled_steps"].as_u64().unwrap_or(0) as usize,
        frequencies: p.fv.clone(),
    };

    let floor = (-(p.prec as f64) / 2.0).exp2();
    let mut checks = vec![
        (
            "conjugacy",
            verify_conjugacy(&p.field, &result, p.trunc).map_err(nf_error)?,
        ),
        (
            "normal_form_defect",
            normal_form_defect(&p.field, &result, p.trunc).map_err(nf_error)?,
        ),
        (
            "cone_invariance",
            cone_invariance(&result.a, &basis, p.trunc),
        ),
    ];
    if cmd == "versal" {
        let ideal = match versal_data(&result, &basis) {
            Ok(run) => check_ideal_invariance(&run.normal_form, &run.output, p.trunc),
            Err(_) => f64::INFINITY,
        };
        checks.push(("ideal_invariance", ideal));
    }

    let mut text = String::new();
    let mut rows = Vec::new();
    let mut ok = true;
    for (name, recomputed) in checks {
        let before = stored_f64(&stored, name)?;
        let tol = (2.0 * before).max(floor);
        let pass = recomputed <= tol;
        ok &= pass;
        let _ = writeln!(
            text,
            "{name}: stored {before:e}, recomputed {recomputed:e}, tolerance {tol:e} -> {}",
            if pass { "ok" } else { "FAILED" }
        );
        rows.push(json!({"name": name, "stored": before, "recomputed": recomputed, "tolerance": tol, "pass": pass}));
    }
    let mut json = header("verify", p);
    json["checks"] = Value::Array(rows);
    json["verified"] = json!(ok);
    Ok(Outcome {
        json,
        text,
        exit: if ok { 0 } else { 3 },
    })
}

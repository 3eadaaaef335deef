//! Subcommand implementations.  Each run writes deterministic JSON (sorted
//! keys) and reports the invariants that failed.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use quadflow::catalog::{self, HomogeneousModel};
use quadflow::estimates::{self, f64_to_hex, CorpusSpec, Inequality};
use quadflow::flow::{self, Energy, FamilyKind, FlowControls, ReducedFamily};
use quadflow::functionals;
use quadflow::jet::{verify_first_variations, verify_identities, IdentityReport};
use quadflow::symbol::{classify_with_tolerance, symbol, threshold};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{
    resolve, BlowupArgs, Cli, Command, EstimatesArgs, FlowArgs, FlowSpec, FunctionalsArgs,
    IdentitiesArgs, SweepArgs, SymbolArgs,
};
use crate::error::CliError;

const PI2: f64 = PI * PI;

/// Result of a completed run.
#[derive(Debug, Default)]
pub struct Outcome {
    /// Human-readable descriptions of failed invariants.
    pub failures: Vec<String>,
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let config = cli.config.as_deref();
    let name = cli.command.name();
    match cli.command {
        Command::Identities(a) => identities(resolve(a, config, name)?),
        Command::Symbol(a) => symbol_table(resolve(a, config, name)?),
        Command::Functionals(a) => functionals_report(resolve(a, config, name)?),
        Command::Flow(a) => flow_run(resolve(a, config, name)?),
        Command::Blowup(a) => blowup(resolve(a, config, name)?),
        Command::Sweep(a) => sweep(resolve(a, config, name)?),
        Command::Estimates(a) => estimates_run(resolve(a, config, name)?),
    }
}

fn to_json_string(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("JSON values always serialize") + "\n"
}

/// Prints the document, or writes it to `out` when given.
fn emit(value: &Value, out: Option<&Path>) -> Result<(), CliError> {
    let text = to_json_string(value);
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn write_in_dir(dir: &Path, file: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(file);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn check(name: &str, passed: bool, value: f64, tolerance: f64, failures: &mut Vec<String>) -> Value {
    if !passed {
        failures.push(format!("{name}: value {value:e} exceeds tolerance {tolerance:e}"));
    }
    json!({ "name": name, "passed": passed, "value": value, "tolerance": tolerance })
}

// ---------------------------------------------------------------- identities

fn identities(args: IdentitiesArgs) -> Result<Outcome, CliError> {
    let seeds = args.seeds.unwrap_or(10);
    let dims = args.dims.clone().unwrap_or_else(|| vec![3, 4]);
    let degree = args.degree.unwrap_or(quadflow::jet::MIN_SUITE_DEGREE);
    let tol = args.tol.unwrap_or(1e-8);
    let jobs: Vec<(usize, u64)> = dims
        .iter()
        .flat_map(|&n| (0..seeds).map(move |s| (n, s)))
        .collect();
    let runs: Vec<Vec<IdentityReport>> = jobs
        .par_iter()
        .map(|&(n, seed)| {
            let mut r = verify_identities(seed, n, degree)?;
            r.extend(verify_first_variations(seed, n, degree)?);
            Ok(r)
        })
        .collect::<Result<_, quadflow::jet::JetError>>()
        .map_err(CliError::usage)?;

    let mut summary: BTreeMap<String, Value> = BTreeMap::new();
    let mut failures = Vec::new();
    let mut failed_reports = Vec::new();
    let mut max_residual = 0.0f64;
    let mut count = 0usize;
    for r in runs.iter().flatten() {
        count += 1;
        max_residual = max_residual.max(r.max_abs_residual);
        let entry = summary.entry(r.name.clone()).or_insert_with(|| {
            json!({ "kind": r.kind, "count": 0, "max_residual": 0.0, "worst_seed": r.seed, "worst_n": r.n })
        });
        entry["count"] = json!(entry["count"].as_u64().unwrap_or(0) + 1);
        if r.max_abs_residual > entry["max_residual"].as_f64().unwrap_or(0.0) {
            entry["max_residual"] = json!(r.max_abs_residual);
            entry["worst_seed"] = json!(r.seed);
            entry["worst_n"] = json!(r.n);
        }
        if !r.passed(tol) {
            failures.push(format!("{} (n = {}, seed = {}): residual {:e}", r.name, r.n, r.seed, r.max_abs_residual));
            failed_reports.push(to_value(r));
        }
    }
    let doc = json!({
        "seeds": seeds,
        "dims": dims,
        "degree": degree,
        "tol": tol,
        "count": count,
        "max_residual": max_residual,
        "identities": summary,
        "failed": failed_reports,
        "passed": failures.is_empty(),
    });
    emit(&doc, args.out.as_deref())?;
    Ok(Outcome { failures })
}

// -------------------------------------------------------------------- symbol

/// Tolerance implied by a typed coefficient: when `a` has at least three
/// decimals and equals the threshold rounded to that many decimals, it is
/// read as the threshold itself (half a unit in the last place).
pub fn decimal_tolerance(n: usize, a: f64) -> f64 {
    let text = format!("{a}");
    let decimals = text.split_once('.').map_or(0, |(_, frac)| frac.len());
    if decimals >= 3 && format!("{:.*}", decimals, threshold(n)) == text {
        0.5 * 10f64.powi(-(decimals as i32))
    } else {
        0.0
    }
}

fn symbol_row(n: usize, a: f64, tol: f64, failures: &mut Vec<String>) -> Result<Value, CliError> {
    let verdict = classify_with_tolerance(n, a, tol).map_err(CliError::usage)?;
    // A generic covector; the spectrum is checked against the closed form.
    let xi: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 / n as f64).collect();
    let op = symbol(n, a, &xi).map_err(CliError::usage)?;
    let (bulk, special) = op.closed_form_eigenvalues();
    let mut expected = vec![bulk; n * (n + 1) / 2 - 1];
    expected.push(special);
    expected.sort_by(f64::total_cmp);
    let residual = op
        .eigenvalues()
        .iter()
        .zip(&expected)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let scale = 1.0 + bulk.abs() + special.abs();
    if residual > 1e-12 * scale {
        failures.push(format!("symbol spectrum n = {n}, a = {a}: residual {residual:e}"));
    }
    Ok(json!({
        "n": n,
        "a": a,
        "class": verdict.class,
        "threshold": verdict.threshold,
        "margin": verdict.margin,
        "tolerance": tol,
        "xi": xi,
        "bulk_eigenvalue": bulk,
        "special_eigenvalue": special,
        "eigen_residual": residual,
    }))
}

fn symbol_table(args: SymbolArgs) -> Result<Outcome, CliError> {
    let mut failures = Vec::new();
    let rows = match args.a {
        Some(a) => {
            let n = args.n.unwrap_or(4);
            let tol = args.tol.unwrap_or_else(|| decimal_tolerance(n, a));
            vec![symbol_row(n, a, tol, &mut failures)?]
        }
        None => {
            let dims = args.dims.clone().unwrap_or_else(|| (3..=8).collect());
            let mut rows = Vec::new();
            for n in dims {
                let t = threshold(n);
                for a in [t - 0.05, t, t + 0.05] {
                    rows.push(symbol_row(n, a, args.tol.unwrap_or(0.0), &mut failures)?);
                }
            }
            rows
        }
    };
    emit(&json!({ "verdicts": rows }), args.out.as_deref())?;
    Ok(Outcome { failures })
}

// --------------------------------------------------------------- functionals

fn build_model(args: &FunctionalsArgs) -> Result<HomogeneousModel, CliError> {
    let name = args.model.as_deref().unwrap_or("s4");
    let params = args.params.clone();
    let expect = |k: usize, default: Vec<f64>| -> Result<Vec<f64>, CliError> {
        let p = params.clone().unwrap_or(default);
        if p.len() == k {
            Ok(p)
        } else {
            Err(CliError::Usage(format!("model {name} takes {k} parameters, got {}", p.len())))
        }
    };
    let model = match name {
        "s3" | "s4" => {
            if params.is_some() {
                return Err(CliError::Usage(format!("model {name} takes --radius, not --params")));
            }
            catalog::round_sphere(if name == "s3" { 3 } else { 4 }, args.radius.unwrap_or(1.0))
        }
        "s2xs2" => {
            let p = expect(2, vec![1.0, 1.0])?;
            catalog::sphere_product(p[0], p[1])
        }
        "t3" => catalog::flat_torus(&expect(3, vec![1.0; 3])?),
        "t4" => catalog::flat_torus(&expect(4, vec![1.0; 4])?),
        "milnor" => {
            let p = expect(3, vec![1.0; 3])?;
            catalog::su2_milnor(p[0], p[1], p[2])
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown model {other:?} (expected s3, s4, s2xs2, t3, t4, milnor)"
            )))
        }
    };
    if args.radius.is_some() && !matches!(name, "s3" | "s4") {
        return Err(CliError::Usage(format!("model {name} does not take --radius")));
    }
    model.map_err(CliError::usage)
}

fn functionals_report(args: FunctionalsArgs) -> Result<Outcome, CliError> {
    let model = build_model(&args)?;
    let alpha = args.alpha.unwrap_or(0.0);
    let report = functionals::evaluate(&model, alpha);
    let pi2_units: BTreeMap<&str, f64> = report.in_pi2_units().into_iter().collect();
    let mut failures = Vec::new();
    let mut checks = Vec::new();
    if let (Some(gb), Some(chi)) = (report.gb_residual, model.euler_char()) {
        let tol = 1e-10 * 8.0 * PI2 * (chi.abs() as f64 + 1.0);
        checks.push(check("gauss_bonnet", gb.abs() <= tol, gb.abs(), tol, &mut failures));
    }
    let four_dim = model.n() == 4 && model.euler_char().is_some();
    let (gursky, pinching) = if four_dim {
        let pv = functionals::pinching_verdicts(&model, alpha).map_err(CliError::usage)?;
        let tol = 1e-9 * (1.0 + report.f_r);
        let r = pv.singularity_hypothesis.equivalence_residual;
        checks.push(check("singularity_hypothesis_equivalence", r <= tol, r, tol, &mut failures));
        let tr = functionals::trace_gradient_check(&model, alpha).map_err(CliError::usage)?;
        let cp = model.curvature();
        let tol = 1e-12 * (1.0 + cp.scal().abs() + cp.rm_norm_sq());
        checks.push(check("gradient_trace", tr.abs() <= tol, tr.abs(), tol, &mut failures));
        let g = functionals::gursky_bound(&model, alpha).map_err(CliError::usage)?;
        (Some(g), Some(to_value(&pv)))
    } else {
        (None, None)
    };
    let params: BTreeMap<&str, f64> = model.params().iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let doc = json!({
        "model": model.name(),
        "n": model.n(),
        "params": params,
        "alpha": alpha,
        "euler_characteristic": model.euler_char(),
        "report": to_value(&report),
        "pi2_units": pi2_units,
        "gursky_Y2_lower": gursky,
        "gursky_Y2_lower_pi2": gursky.map(|g| g / PI2),
        "yamabe": to_value(&catalog::yamabe_bracket(&model, alpha)),
        "pinching": pinching,
        "checks": checks,
    });
    emit(&doc, args.out.as_deref())?;
    Ok(Outcome { failures })
}

// ---------------------------------------------------------------------- flow

struct FlowSetup {
    family: ReducedFamily,
    theta0: Vec<f64>,
    controls: FlowControls,
}

fn flow_setup(spec: &FlowSpec, default_family: &str, default_alpha: f64) -> Result<FlowSetup, CliError> {
    let kind: FamilyKind = spec
        .family
        .as_deref()
        .unwrap_or(default_family)
        .parse()
        .map_err(CliError::usage)?;
    let energy = match spec.energy.as_deref() {
        Some(e) => e.parse::<Energy>().map_err(CliError::usage)?,
        None => Energy::default_for(kind.dim()),
    };
    let alpha = spec.alpha.unwrap_or(default_alpha);
    let theta0 = spec.theta.clone().unwrap_or_else(|| vec![1.0; kind.param_count()]);
    let d = FlowControls::default();
    let controls = FlowControls {
        horizon: spec.horizon.unwrap_or(d.horizon),
        atol: spec.atol.unwrap_or(d.atol),
        rtol: spec.rtol.unwrap_or(d.rtol),
        blowup_threshold: spec.blowup_threshold.unwrap_or(d.blowup_threshold),
        collapse_threshold: spec.collapse_threshold.unwrap_or(d.collapse_threshold),
        curvature_bound: spec.curvature_bound.unwrap_or(d.curvature_bound),
        conv_tol: spec.conv_tol.unwrap_or(d.conv_tol),
        stop_on_converged: spec.stop_on_converged.unwrap_or(d.stop_on_converged),
        max_steps: spec.max_steps.unwrap_or(d.max_steps),
    };
    Ok(FlowSetup {
        family: ReducedFamily::new(kind, energy, alpha),
        theta0,
        controls,
    })
}

fn flow_summary(traj: &flow::Trajectory, theta0: &[f64]) -> Value {
    let first = traj.first();
    let last = traj.last();
    json!({
        "family": traj.family,
        "energy": traj.energy,
        "alpha": traj.alpha,
        "alpha_in_range": traj.alpha_in_range,
        "theta0": theta0,
        "controls": to_value(&traj.controls),
        "event": traj.event,
        "event_data": to_value(&traj.event_data),
        "initial": to_value(first),
        "final": to_value(last),
        "F_pi2": { "initial": first.f / PI2, "final": last.f / PI2 },
        "dissipation": traj.dissipation,
        "max_step_increase": traj.max_step_increase,
        "local_error_sum": traj.local_error_sum,
        "steps_accepted": traj.steps_accepted,
        "steps_rejected": traj.steps_rejected,
        "quasi_converged": traj.quasi_converged,
        "states": traj.states.len(),
    })
}

fn flow_run(args: FlowArgs) -> Result<Outcome, CliError> {
    let setup = flow_setup(&args.spec, "s3-round", 0.1)?;
    let traj = flow::integrate(&setup.family, &setup.theta0, &setup.controls).map_err(CliError::usage)?;
    let report = flow::monitors(&traj);
    let failures: Vec<String> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}: {}", c.name, c.detail))
        .collect();
    let mut doc = flow_summary(&traj, &setup.theta0);
    doc["monitors"] = to_value(&report);
    if let Some(dir) = args.out.as_deref() {
        write_in_dir(dir, "trajectory.csv", &traj.to_csv())?;
        write_in_dir(dir, "flow.json", &to_json_string(&doc))?;
    }
    emit(&doc, None)?;
    Ok(Outcome { failures })
}

// -------------------------------------------------------------------- blowup

fn blowup(args: BlowupArgs) -> Result<Outcome, CliError> {
    let mut spec = args.spec.clone();
    spec.energy = spec.energy.or(Some("g_alpha".into()));
    let setup = flow_setup(&spec, "s3-round", -0.1)?;
    let traj = flow::integrate(&setup.family, &setup.theta0, &setup.controls).map_err(CliError::usage)?;
    let count = args.count.unwrap_or(10);
    let mut failures = Vec::new();
    let mut rescaled = Vec::new();
    let mut checks = Vec::new();
    match flow::blowup_rescale(&setup.family, &traj, count) {
        Ok(seq) => {
            let (mut worst_norm, mut worst_yamabe) = (0.0f64, 0.0f64);
            for r in &seq {
                let y0 = flow::yamabe_upper(&r.original);
                let y1 = flow::yamabe_upper(&r.rescaled);
                let norm_err = (r.rescaled.rm_sup() - 1.0).abs();
                let y_err = (y1 - y0).abs() / (1.0 + y0.abs());
                worst_norm = worst_norm.max(norm_err);
                worst_yamabe = worst_yamabe.max(y_err);
                let params: BTreeMap<&str, f64> =
                    r.rescaled.params().iter().map(|(k, v)| (k.as_str(), *v)).collect();
                rescaled.push(json!({
                    "t": r.t,
                    "scale": r.scale,
                    "rm_sup": r.rescaled.rm_sup(),
                    "volume_original": r.original.volume(),
                    "volume_rescaled": r.rescaled.volume(),
                    "yamabe_upper_original": y0,
                    "yamabe_upper_rescaled": y1,
                    "params_rescaled": params,
                }));
            }
            checks.push(check("unit_curvature", worst_norm <= 1e-12, worst_norm, 1e-12, &mut failures));
            checks.push(check("yamabe_scale_invariance", worst_yamabe <= 1e-12, worst_yamabe, 1e-12, &mut failures));
            if seq.len() < count {
                failures.push(format!("only {} of {count} curvature doublings before the singularity", seq.len()));
            }
        }
        Err(e) => failures.push(e.to_string()),
    }
    let mut doc = flow_summary(&traj, &setup.theta0);
    doc["count"] = json!(count);
    doc["rescaled"] = Value::Array(rescaled);
    doc["checks"] = Value::Array(checks);
    emit(&doc, args.out.as_deref())?;
    Ok(Outcome { failures })
}

// --------------------------------------------------------------------- sweep

fn sweep(args: SweepArgs) -> Result<Outcome, CliError> {
    let family = args.family.clone().unwrap_or_else(|| "milnor".into());
    let kind: FamilyKind = family.parse().map_err(CliError::usage)?;
    let alphas = args.alphas.clone().unwrap_or_else(|| vec![0.1]);
    let thetas = args
        .thetas
        .clone()
        .map(|t| t.0)
        .unwrap_or_else(|| vec![vec![1.0; kind.param_count()]]);
    let jobs: Vec<(f64, Vec<f64>)> = alphas
        .iter()
        .flat_map(|&a| thetas.iter().map(move |t| (a, t.clone())))
        .collect();
    let results = jobs
        .par_iter()
        .map(|(alpha, theta)| {
            let spec = FlowSpec {
                family: Some(family.clone()),
                energy: args.energy.clone(),
                alpha: Some(*alpha),
                theta: Some(theta.clone()),
                horizon: Some(args.horizon.unwrap_or(10.0)),
                atol: args.atol,
                rtol: args.rtol,
                ..FlowSpec::default()
            };
            let setup = flow_setup(&spec, &family, *alpha)?;
            let traj = flow::integrate(&setup.family, &setup.theta0, &setup.controls)
                .map_err(CliError::usage)?;
            let report = flow::monitors(&traj);
            let theta_key: Vec<String> = theta.iter().map(|x| format!("{x}")).collect();
            let key = format!(
                "{}/{}/alpha={alpha}/theta={}",
                kind.name(),
                setup.family.energy.name(),
                theta_key.join(",")
            );
            let last = traj.last();
            let value = json!({
                "event": traj.event,
                "t_final": last.t,
                "theta_final": last.theta,
                "F_initial": traj.first().f,
                "F_final": last.f,
                "F_final_pi2": last.f / PI2,
                "grad_norm_final": last.grad_norm,
                "rm_sup_final": last.rm_sup,
                "collapse_ratio_final": last.collapse_ratio(),
                "steps_accepted": traj.steps_accepted,
                "monitors_passed": report.all_passed,
            });
            Ok((key, value, report.all_passed))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut failures = Vec::new();
    let mut outcomes = BTreeMap::new();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for (key, value, passed) in results {
        if !passed {
            failures.push(format!("monitors failed for {key}"));
        }
        *counts.entry(value["event"].as_str().unwrap_or("").to_string()).or_default() += 1;
        outcomes.insert(key, value);
    }
    let doc = json!({ "runs": outcomes.len(), "event_counts": counts, "outcomes": outcomes });
    emit(&doc, args.out.as_deref())?;
    Ok(Outcome { failures })
}

// ----------------------------------------------------------------- estimates

/// Corpus maxima above this bound fail the interpolation invariant.
const INTERPOLATION_BOUND: f64 = 10.0;

fn estimates_run(args: EstimatesArgs) -> Result<Outcome, CliError> {
    let mut specs: Vec<CorpusSpec> = estimates::standard_corpora();
    if let Some(name) = &args.corpus {
        specs.retain(|s| &s.name == name);
        if specs.is_empty() {
            let names: Vec<String> = estimates::standard_corpora().into_iter().map(|s| s.name).collect();
            return Err(CliError::Usage(format!("unknown corpus {name:?} (available: {})", names.join(", "))));
        }
    }
    for s in &mut specs {
        s.seeds = args.seeds.unwrap_or(s.seeds);
        s.size = args.size.unwrap_or(s.size);
    }
    let refine = args.refine.unwrap_or(false);
    let results = specs
        .par_iter()
        .map(|spec| {
            let base = estimates::run_corpus(spec).map_err(CliError::usage)?;
            let fine = if refine {
                [2, 4]
                    .iter()
                    .map(|m| estimates::run_corpus_at(spec, spec.size * m).map_err(CliError::usage))
                    .collect::<Result<Vec<_>, _>>()?
            } else {
                Vec::new()
            };
            Ok((spec.clone(), base, fine))
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut failures = Vec::new();
    let mut corpora = Vec::new();
    for (spec, base, fine) in results {
        if !base.max.is_finite() {
            failures.push(format!("{}: non-finite corpus maximum", spec.name));
        }
        let bound = matches!(spec.inequality, Inequality::Interpolation { .. }).then_some(INTERPOLATION_BOUND);
        if let Some(b) = bound {
            if base.max > b {
                failures.push(format!("{}: maximum {} exceeds {b}", spec.name, base.max));
            }
        }
        let mut prev = base.max;
        let mut refinement = Vec::new();
        for r in &fine {
            let ratio = r.max / prev;
            if !(0.5..=2.0).contains(&ratio) {
                failures.push(format!("{}: maximum changed by ×{ratio} at size {}", spec.name, r.size));
            }
            refinement.push(json!({ "size": r.size, "max": r.max, "ratio_to_previous": ratio }));
            prev = r.max;
        }
        if let Some(dir) = args.out.as_deref() {
            write_in_dir(dir, &format!("{}.csv", spec.name), &base.to_csv())?;
        }
        corpora.push(json!({
            "name": spec.name,
            "n": spec.n,
            "size": spec.size,
            "band_limit": spec.band_limit,
            "seeds": spec.seeds,
            "inequality": to_value(&spec.inequality),
            "max": base.max,
            "max_hex": f64_to_hex(base.max),
            "argmax": base.argmax,
            "calibrated_b": base.calibrated_b,
            "bound": bound,
            "refinement": refinement,
        }));
    }
    let doc = json!({ "corpora": corpora });
    if let Some(dir) = args.out.as_deref() {
        write_in_dir(dir, "estimates.json", &to_json_string(&doc))?;
    }
    emit(&doc, None)?;
    Ok(Outcome { failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_tolerance_recognises_rounded_thresholds() {
        assert_eq!(decimal_tolerance(4, 0.1667), 0.5e-4);
        assert_eq!(decimal_tolerance(4, 0.167), 0.5e-3);
        assert_eq!(decimal_tolerance(4, 0.2), 0.0);
        assert_eq!(decimal_tolerance(4, 0.0), 0.0);
        assert_eq!(decimal_tolerance(4, 0.166), 0.0);
        assert_eq!(decimal_tolerance(3, 0.25), 0.0);
        assert_eq!(decimal_tolerance(5, 0.125), 0.5e-3);
    }
}

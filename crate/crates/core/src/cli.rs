//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a verdict failed, 2 usage or input error,
//! 3 the requested number of steps is not representable in double precision.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::audit::{probe_path, Model, ModelObjective, PathSpec};
use crate::export::{audit_to_csv, audit_to_json, format_float, trace_to_csv, trace_to_json};
use crate::objective::{solve_interpolation, InterpTargets};
use crate::scenarios::{build_scenario, catalog, Scenario, ScenarioError, ScenarioKind, DEFAULT_LANDING_TOL};
use crate::verify::{verify_scenario, ScenarioReport};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

/// Steps used when `--steps` is omitted, capped at the scenario's limit.
pub const DEFAULT_STEPS: usize = 15;

#[derive(Debug, Parser)]
#[command(
    name = "grad-adversary",
    version,
    about = "Adversarial objectives that make gradient methods diverge or stall"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List scenarios with their parameters.
    List,
    /// Run a scenario and write its trace.
    Run(RunArgs),
    /// Run scenarios and check their claims.
    Verify(VerifyArgs),
    /// Sample the smoothness ratio of a statistical model along a path.
    Audit(AuditArgs),
    /// Solve the degree-9 interpolation with zero boundary targets.
    Interp(InterpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[arg(long)]
    scenario: Option<String>,
    /// Parameter override, repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse_kv)]
    params: Vec<(String, f64)>,
    /// Number of steps J [default: 15, or the scenario's max feasible J if smaller].
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Debug, Args)]
struct Output {
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Positional alternative to --scenario.
    #[arg(value_name = "SCENARIO", conflicts_with = "scenario")]
    name: Option<String>,
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Verify every scenario in parallel with default parameters.
    #[arg(long, conflicts_with_all = ["scenario", "name", "params"])]
    all: bool,
    /// Relative landing tolerance.
    #[arg(long, env = "GRAD_ADVERSARY_TOL", default_value_t = DEFAULT_LANDING_TOL)]
    tol: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct AuditArgs {
    /// factor_analysis, ffnn, gee or inv_gaussian.
    #[arg(long)]
    objective: String,
    #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse_kv)]
    params: Vec<(String, f64)>,
    /// geometric:start,ratio,K or linear:start,step,K.
    #[arg(long)]
    path: String,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct InterpArgs {
    #[arg(long)]
    halfwidth: f64,
    /// Value, slope and curvature at the center: f,fp,fpp.
    #[arg(long, allow_hyphen_values = true)]
    center: String,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn parse_kv(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("'{v}' is not a number"))?;
    if k.trim().is_empty() {
        return Err(format!("empty key in '{s}'"));
    }
    Ok((k.trim().to_string(), v))
}

/// A failure with its exit code.
#[derive(Debug)]
struct Exit(i32, String);

impl From<ScenarioError> for Exit {
    fn from(e: ScenarioError) -> Self {
        let code = if matches!(e, ScenarioError::Infeasible { .. }) { EXIT_INFEASIBLE } else { EXIT_USAGE };
        Exit(code, e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Exit {
    Exit(EXIT_USAGE, msg.into())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::List => list(out),
        Command::Run(a) => run(a, out),
        Command::Verify(a) => verify(a, out, err),
        Command::Audit(a) => audit(a, out, err),
        Command::Interp(a) => interp(a, out),
    };
    match result {
        Ok(code) => code,
        Err(Exit(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn emit(text: &str, dest: &Option<PathBuf>, out: &mut dyn Write) -> Result<(), Exit> {
    match dest {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("cannot write {}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| usage(e.to_string())),
    }
}

fn list(out: &mut dyn Write) -> Result<i32, Exit> {
    let mut text = String::new();
    for name in catalog() {
        let kind = ScenarioKind::parse(name)?;
        let defaults: Vec<String> = kind.defaults().iter().map(|(k, v)| format!("{k}={v}")).collect();
        text.push_str(&format!("{name:<13} [{}] {}\n", defaults.join(", "), kind.summary()));
    }
    emit(&text, &None, out)?;
    Ok(EXIT_PASS)
}

fn bind(name: &str, params: &[(String, f64)]) -> Result<Scenario, Exit> {
    let mut map = BTreeMap::new();
    for (k, v) in params {
        if map.insert(k.clone(), *v).is_some() {
            return Err(usage(format!("parameter '{k}' given twice")));
        }
    }
    Ok(build_scenario(name, &map)?)
}

fn steps_for(s: &Scenario, steps: Option<usize>) -> usize {
    steps.unwrap_or_else(|| if s.check_feasible(DEFAULT_STEPS).is_ok() { DEFAULT_STEPS } else { s.max_feasible_j() })
}

fn run(a: RunArgs, out: &mut dyn Write) -> Result<i32, Exit> {
    let name = a.scenario.scenario.as_deref().ok_or_else(|| usage("--scenario is required"))?;
    let s = bind(name, &a.scenario.params)?;
    let trace = s.run(steps_for(&s, a.scenario.steps))?;
    let text = match a.output.format {
        Format::Json => trace_to_json(&trace).map(|t| t + "\n"),
        Format::Csv => trace_to_csv(&trace),
    }
    .map_err(|e| usage(e.to_string()))?;
    emit(&text, &a.output.out, out)?;
    Ok(EXIT_PASS)
}

fn verify(a: VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Exit> {
    if !(a.tol >= 0.0 && a.tol.is_finite()) {
        return Err(usage(format!("--tol {} must be finite and non-negative", a.tol)));
    }
    let results: Vec<Result<ScenarioReport, Exit>> = if a.all {
        let steps = a.scenario.steps;
        let tol = a.tol;
        std::thread::scope(|scope| {
            let handles: Vec<_> = catalog()
                .into_iter()
                .map(|name| {
                    scope.spawn(move || {
                        let s = bind(name, &[])?;
                        Ok(verify_scenario(&s, steps_for(&s, steps), tol)?)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(Exit(EXIT_FAIL, "worker panicked".into()))))
                .collect()
        })
    } else {
        let name = a
            .name
            .as_deref()
            .or(a.scenario.scenario.as_deref())
            .ok_or_else(|| usage("--scenario or --all is required"))?;
        let s = bind(name, &a.scenario.params)?;
        vec![verify_scenario(&s, steps_for(&s, a.scenario.steps), a.tol).map_err(Exit::from)]
    };

    let mut code = EXIT_PASS;
    let mut reports = Vec::new();
    for r in results {
        match r {
            Ok(rep) => {
                for v in &rep.verdicts {
                    let _ = writeln!(err, "{} {}", rep.scenario, v.summary());
                }
                if !rep.pass {
                    code = code.max(EXIT_FAIL);
                }
                reports.push(rep);
            }
            Err(Exit(c, msg)) => {
                let _ = writeln!(err, "error: {msg}");
                code = code.max(c);
            }
        }
    }
    let text = match a.output.format {
        Format::Json if a.all => serde_json::to_string_pretty(&reports).map_err(|e| usage(e.to_string()))? + "\n",
        Format::Json => match reports.first() {
            Some(r) => serde_json::to_string_pretty(r).map_err(|e| usage(e.to_string()))? + "\n",
            None => String::new(),
        },
        Format::Csv => verdicts_csv(&reports).map_err(|e| usage(e.to_string()))?,
    };
    emit(&text, &a.output.out, out)?;
    Ok(code)
}

fn verdicts_csv(reports: &[ScenarioReport]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "scenario",
        "steps",
        "claim",
        "pass",
        "k",
        "quantity",
        "observed",
        "expected",
        "tolerance",
        "error",
    ])?;
    for r in reports {
        for v in &r.verdicts {
            let head = [r.scenario.clone(), r.steps.to_string(), v.claim.clone(), v.pass.to_string()];
            let err = v.error.clone().unwrap_or_default();
            match v.first_failure() {
                Some(d) => w.write_record(head.into_iter().chain([
                    d.k.to_string(),
                    d.quantity.clone(),
                    format_float(d.observed),
                    format_float(d.expected),
                    format_float(d.tolerance),
                    err,
                ]))?,
                None => w.write_record(head.into_iter().chain([
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    err,
                ]))?,
            }
        }
    }
    let buf = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8_lossy(&buf).into_owned())
}

fn audit(a: AuditArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Exit> {
    let model = Model::from_name(&a.objective, &a.params).map_err(|e| usage(e.to_string()))?;
    let path: PathSpec = a.path.parse().map_err(|e: crate::audit::AuditError| usage(e.to_string()))?;
    let report = probe_path(&ModelObjective::new(model), &path);
    for s in &report.samples {
        if let Some(e) = &s.error {
            let _ = writeln!(err, "skipped theta={}: {e}", format_float(s.s));
        }
    }
    let text = match a.output.format {
        Format::Json => audit_to_json(&report).map(|t| t + "\n"),
        Format::Csv => audit_to_csv(&report),
    }
    .map_err(|e| usage(e.to_string()))?;
    emit(&text, &a.output.out, out)?;
    Ok(EXIT_PASS)
}

fn interp(a: InterpArgs, out: &mut dyn Write) -> Result<i32, Exit> {
    let m = a.halfwidth;
    if !(m > 0.0 && m.is_finite()) {
        return Err(usage(format!("--halfwidth {m} must be positive and finite")));
    }
    let parts: Vec<f64> = a
        .center
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("--center '{}' must be three numbers f,fp,fpp", a.center)))?;
    let [f, fp, fpp] = parts[..] else {
        return Err(usage(format!("--center '{}' must be three numbers f,fp,fpp", a.center)));
    };
    if parts.iter().any(|x| !x.is_finite()) {
        return Err(usage("--center values must be finite"));
    }
    let targets = InterpTargets::centered(f, fp, fpp);
    let poly = solve_interpolation(m, &targets).map_err(|e| usage(e.to_string()))?;
    let residual = poly.max_residual(m, &targets);
    let text = match a.format {
        Some(Format::Json) => {
            let c: Vec<crate::export::Num> = poly.c.iter().copied().map(crate::export::Num).collect();
            let doc =
                serde_json::json!({ "halfwidth": m, "coefficients": c, "max_residual": crate::export::Num(residual) });
            serde_json::to_string_pretty(&doc).map_err(|e| usage(e.to_string()))? + "\n"
        }
        Some(Format::Csv) => {
            let mut s = String::from("name,value\n");
            for (i, c) in poly.c.iter().enumerate() {
                s.push_str(&format!("c{i},{}\n", format_float(*c)));
            }
            s + &format!("max_residual,{}\n", format_float(residual))
        }
        None => {
            let mut s = String::new();
            for (i, c) in poly.c.iter().enumerate() {
                s.push_str(&format!("c{i} = {}\n", format_float(*c)));
            }
            s + &format!("max_residual = {}\n", format_float(residual))
        }
    };
    emit(&text, &None, out)?;
    Ok(EXIT_PASS)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run_cli(std::iter::once("grad-adversary").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn kv_parsing() {
        assert_eq!(parse_kv("m0=1").unwrap(), ("m0".to_string(), 1.0));
        assert_eq!(parse_kv(" a = -2e-3").unwrap(), ("a".to_string(), -2e-3));
        assert!(parse_kv("m0").is_err());
        assert!(parse_kv("=1").is_err());
        assert!(parse_kv("m=x").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(call(&["run", "--scenario", "sgd"]).0, EXIT_USAGE);
        assert_eq!(call(&["run", "--scenario", "bb", "--param", "zz=1"]).0, EXIT_USAGE);
        assert_eq!(call(&["run", "--scenario", "bb", "--param", "m0=1", "--param", "m0=2"]).0, EXIT_USAGE);
        assert_eq!(call(&["verify"]).0, EXIT_USAGE);
        assert_eq!(call(&["verify", "--all", "--scenario", "bb"]).0, EXIT_USAGE);
        assert_eq!(call(&["verify", "bb", "--tol", "-1"]).0, EXIT_USAGE);
        assert_eq!(call(&["--help"]).0, EXIT_PASS);
    }

    #[test]
    fn default_steps_respect_limits() {
        let s = bind("armijo", &[]).unwrap();
        assert_eq!(steps_for(&s, None), 7);
        assert_eq!(steps_for(&bind("bb", &[]).unwrap(), None), DEFAULT_STEPS);
        assert_eq!(steps_for(&s, Some(3)), 3);
    }

    #[test]
    fn interp_prints_ten_coefficients() {
        let (code, out, _) = call(&["interp", "--halfwidth", "0.5", "--center", "-1,2,-3"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 11);
        assert!(out.starts_with("c0 = -1.0000000000000000e0"));
        let r: f64 = out.lines().last().unwrap().split(" = ").nth(1).unwrap().parse().unwrap();
        assert!(r <= 1e-8);
        assert_eq!(call(&["interp", "--halfwidth", "0.5", "--center", "1,2"]).0, EXIT_USAGE);
        assert_eq!(call(&["interp", "--halfwidth", "0", "--center", "1,2,3"]).0, EXIT_USAGE);
    }
}

//! Checks that turn a trace into pass/fail verdicts.
//!
//! Every check is a pure function of its inputs. A verdict lists each failing
//! step with the observed value, the expected value and the tolerance used.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::export::float;
use crate::optimizers::{ProbeKind, Trace};
use crate::scenarios::{landing_tolerance, Scenario, ScenarioError, ScenarioKind, Targets};

/// Slack on the gradient floor.
pub const FLOOR_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub k: usize,
    /// What was compared, e.g. `theta`, `nag_y`, `f`, `cum_obj_evals`.
    pub quantity: String,
    #[serde(with = "float")]
    pub observed: f64,
    #[serde(with = "float")]
    pub expected: f64,
    #[serde(with = "float")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub claim: String,
    pub pass: bool,
    pub steps_checked: usize,
    /// Failing steps in order of `k`.
    pub failures: Vec<Diagnostic>,
    /// Set when the trace could not be checked at all.
    pub error: Option<String>,
}

impl Verdict {
    fn from_failures(claim: &str, steps_checked: usize, mut failures: Vec<Diagnostic>) -> Self {
        failures.sort_by_key(|d| d.k);
        Verdict { claim: claim.into(), pass: failures.is_empty(), steps_checked, failures, error: None }
    }

    fn error(claim: &str, msg: impl Into<String>) -> Self {
        Verdict { claim: claim.into(), pass: false, steps_checked: 0, failures: Vec::new(), error: Some(msg.into()) }
    }

    pub fn first_failure(&self) -> Option<&Diagnostic> {
        self.failures.first()
    }

    /// One line: claim, status and the first failure if any.
    pub fn summary(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        match (&self.error, self.first_failure()) {
            (Some(e), _) => format!("{status} {}: {e}", self.claim),
            (None, Some(d)) => format!(
                "{status} {}: k={} {} = {:e}, expected {:e} (tol {:e})",
                self.claim, d.k, d.quantity, d.observed, d.expected, d.tolerance
            ),
            (None, None) => format!("{status} {} ({} steps)", self.claim, self.steps_checked),
        }
    }
}

fn diag(k: usize, quantity: &str, observed: f64, expected: f64, tolerance: f64) -> Diagnostic {
    Diagnostic { k, quantity: quantity.into(), observed, expected, tolerance }
}

const EMPTY: &str = "trace has no iterations";

/// Iterates and NAG probe points against their targets, each within
/// `tol·max(1, |target|)`.
pub fn check_anchor_tracking(trace: &Trace, targets: &Targets, tol: f64) -> Verdict {
    const CLAIM: &str = "anchor_tracking";
    if trace.iterations.is_empty() {
        return Verdict::error(CLAIM, EMPTY);
    }
    let mut failures = Vec::new();
    let tracked = |quantity: &str, k: usize, got: f64, want: f64, out: &mut Vec<Diagnostic>| {
        let t = landing_tolerance(tol, want);
        if !((got - want).abs() <= t) {
            out.push(diag(k, quantity, got, want, t));
        }
    };
    for (it, want) in trace.iterations.iter().zip(&targets.iterates) {
        tracked("theta", it.k, it.theta, *want, &mut failures);
        for (kind, target) in targets.probes.get(it.k).into_iter().flatten() {
            let q = kind.as_str();
            match it.probes.iter().find(|p| p.kind == *kind) {
                Some(p) => tracked(q, it.k, p.theta, *target, &mut failures),
                None => failures.push(diag(it.k, q, f64::NAN, *target, 0.0)),
            }
        }
    }
    let (got, want) = (trace.iterations.len(), targets.iterates.len());
    if got != want {
        failures.push(diag(got.min(want), "iterations", got as f64, want as f64, 0.0));
    }
    Verdict::from_failures(CLAIM, got.min(want), failures)
}

/// `F` never decreases along the iterates and the total ascent is at least
/// `7/16` of the distance travelled.
pub fn check_divergence(trace: &Trace, tol: f64) -> Verdict {
    const CLAIM: &str = "divergence";
    let its = &trace.iterations;
    if its.is_empty() {
        return Verdict::error(CLAIM, EMPTY);
    }
    let values: Vec<f64> = its.iter().map(|it| it.value().unwrap_or(f64::NAN)).collect();
    let mut failures = Vec::new();
    if !values[0].is_finite() {
        failures.push(diag(0, "f", values[0], f64::NAN, 0.0));
    }
    for j in 1..its.len() {
        let t = tol * values[j - 1].abs().max(1.0);
        if !(values[j] >= values[j - 1] - t) {
            failures.push(diag(its[j].k, "f", values[j], values[j - 1], t));
        }
    }
    let last = its.len() - 1;
    let need = 7.0 / 16.0 * (its[last].theta - its[0].theta);
    let gained = values[last] - values[0];
    let t = tol * need.abs().max(1.0);
    if !(gained >= need - t) {
        failures.push(diag(its[last].k, "f - f0", gained, need, t));
    }
    Verdict::from_failures(CLAIM, its.len(), failures)
}

/// `|Ḟ| ≥ bound` at every iterate and every NAG extrapolation point.
pub fn check_gradient_floor(trace: &Trace, bound: f64) -> Verdict {
    const CLAIM: &str = "gradient_floor";
    if trace.iterations.is_empty() {
        return Verdict::error(CLAIM, EMPTY);
    }
    let mut failures = Vec::new();
    let mut check = |k: usize, q: &str, g: Option<f64>| {
        let g = g.map(f64::abs).unwrap_or(f64::NAN);
        if !(g >= bound - FLOOR_SLACK) {
            failures.push(diag(k, q, g, bound, FLOOR_SLACK));
        }
    };
    for it in &trace.iterations {
        check(it.k, "|grad|", it.gradient());
        for p in it.probes.iter().filter(|p| p.kind == ProbeKind::NagY) {
            check(it.k, "|grad| at nag_y", p.grad);
        }
    }
    Verdict::from_failures(CLAIM, trace.iterations.len(), failures)
}

/// Cumulative objective evaluations at `θ_j` equal `base^j` exactly for `j ≥ 1`.
pub fn check_eval_growth(trace: &Trace, base: u64) -> Verdict {
    const CLAIM: &str = "eval_growth";
    if trace.iterations.is_empty() {
        return Verdict::error(CLAIM, EMPTY);
    }
    let mut failures = Vec::new();
    for it in &trace.iterations[1..] {
        let want = u32::try_from(it.k).ok().and_then(|k| base.checked_pow(k));
        if want != Some(it.cum_obj_evals) {
            let want = want.map(|w| w as f64).unwrap_or(f64::INFINITY);
            failures.push(diag(it.k, "cum_obj_evals", it.cum_obj_evals as f64, want, 0.0));
        }
    }
    Verdict::from_failures(CLAIM, trace.iterations.len() - 1, failures)
}

/// `|θ_k|`, `F(θ_k)` and `|Ḟ(θ_k)|` strictly increase over `steps` steps, all finite.
pub fn check_blowup(trace: &Trace, steps: usize) -> Verdict {
    const CLAIM: &str = "blowup";
    let its = &trace.iterations;
    if its.is_empty() {
        return Verdict::error(CLAIM, EMPTY);
    }
    let series = |it: &crate::optimizers::Iteration| {
        [
            ("|theta|", it.theta.abs()),
            ("f", it.value().unwrap_or(f64::NAN)),
            ("|grad|", it.gradient().map(f64::abs).unwrap_or(f64::NAN)),
        ]
    };
    let mut failures = Vec::new();
    for (q, v) in series(&its[0]) {
        if !v.is_finite() {
            failures.push(diag(0, q, v, f64::NAN, 0.0));
        }
    }
    for w in its.windows(2) {
        for ((q, prev), (_, cur)) in series(&w[0]).into_iter().zip(series(&w[1])) {
            if !(cur > prev && cur.is_finite()) {
                failures.push(diag(w[1].k, q, cur, prev, 0.0));
            }
        }
    }
    if its.len() != steps + 1 {
        failures.push(diag(its.len().min(steps + 1), "iterations", its.len() as f64, (steps + 1) as f64, 0.0));
    }
    Verdict::from_failures(CLAIM, its.len(), failures)
}

/// All verdicts bound to one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub steps: usize,
    #[serde(with = "float")]
    pub tol: f64,
    pub params: BTreeMap<String, f64>,
    pub flags: Vec<String>,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
}

/// The claims checked for a scenario: tracking for every construction with
/// targets, divergence for the chained ones, a gradient floor where the slopes
/// are bounded below, evaluation growth for the line-search constructions and
/// blow-up for the quartic.
pub fn verify_trace(s: &Scenario, trace: &Trace, steps: usize, tol: f64) -> Result<Vec<Verdict>, ScenarioError> {
    let mut v = Vec::new();
    if s.kind() == ScenarioKind::Constant {
        v.push(check_blowup(trace, steps));
        return Ok(v);
    }
    if let Some(t) = s.targets(steps)? {
        v.push(check_anchor_tracking(trace, &t, tol));
    }
    if !s.kind().is_bump() {
        v.push(check_divergence(trace, tol));
    }
    if let Some(bound) = s.grad_floor() {
        v.push(check_gradient_floor(trace, bound));
    }
    if let Some(base) = s.eval_growth() {
        v.push(check_eval_growth(trace, base));
    }
    Ok(v)
}

/// Runs the scenario for `steps` steps and checks every bound claim.
pub fn verify_scenario(s: &Scenario, steps: usize, tol: f64) -> Result<ScenarioReport, ScenarioError> {
    let trace = s.run(steps)?;
    let verdicts = verify_trace(s, &trace, steps, tol)?;
    Ok(ScenarioReport {
        scenario: s.name().into(),
        steps,
        tol,
        params: s.params().clone(),
        flags: trace.flags.iter().map(|f| f.to_string()).collect(),
        pass: verdicts.iter().all(|v| v.pass),
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{Objective, Quadratic};
    use crate::optimizers::{run_armijo, run_constant_gd, RunBudget};
    use crate::scenarios::{build_scenario, DEFAULT_LANDING_TOL};

    fn scenario(name: &str) -> Scenario {
        build_scenario(name, &BTreeMap::new()).unwrap()
    }

    fn quadratic_gd(steps: usize) -> Trace {
        let obj = Objective::new(Quadratic { curvature: 1.0 });
        let mut t = run_constant_gd(&obj, 3.0, 0.5, RunBudget::new(steps));
        t.annotate(&obj);
        t
    }

    #[test]
    fn tracking_catches_a_perturbed_iterate() {
        let s = scenario("bb");
        let mut t = s.run(10).unwrap();
        let targets = s.targets(10).unwrap().unwrap();
        assert!(check_anchor_tracking(&t, &targets, DEFAULT_LANDING_TOL).pass);
        t.iterations[3].theta += 1e-3;
        let v = check_anchor_tracking(&t, &targets, DEFAULT_LANDING_TOL);
        assert!(!v.pass);
        let d = v.first_failure().unwrap();
        assert_eq!((d.k, d.quantity.as_str(), d.expected), (3, "theta", 3.0));
        assert_eq!(v.failures.len(), 1);
    }

    #[test]
    fn tracking_length_and_empty() {
        let s = scenario("bb");
        let mut t = s.run(10).unwrap();
        let targets = s.targets(10).unwrap().unwrap();
        t.iterations.truncate(7);
        let v = check_anchor_tracking(&t, &targets, 1e-9);
        assert!(!v.pass && v.error.is_none());
        assert_eq!(v.first_failure().unwrap().quantity, "iterations");
        t.iterations.clear();
        let v = check_anchor_tracking(&t, &targets, 1e-9);
        assert!(!v.pass && v.error.is_some());
    }

    #[test]
    fn nag_probes_are_tracked() {
        let s = scenario("nag");
        let mut t = s.run(8).unwrap();
        let targets = s.targets(8).unwrap().unwrap();
        assert!(check_anchor_tracking(&t, &targets, 1e-12).pass);
        t.iterations[4].probes[0].theta += 1e-6;
        let v = check_anchor_tracking(&t, &targets, 1e-12);
        assert_eq!(v.first_failure().unwrap().quantity, "nag_y");
        assert!(check_gradient_floor(&t, 1.0).pass);
    }

    #[test]
    fn divergence_on_bb_and_not_on_a_bowl() {
        let t = scenario("bb").run(20).unwrap();
        assert!(check_divergence(&t, 1e-9).pass);
        assert!(t.iterations[20].value().unwrap() >= 8.75);
        let v = check_divergence(&quadratic_gd(10), 1e-9);
        assert!(!v.pass);
        assert_eq!(v.first_failure().unwrap().k, 1);
    }

    #[test]
    fn gradient_floor() {
        let t = scenario("bb").run(10).unwrap();
        let v = check_gradient_floor(&t, 1.0);
        assert!(!v.pass, "bb slopes shrink geometrically");
        assert!(check_gradient_floor(&scenario("polyak").run(12).unwrap(), 0.125).pass);
        assert!(check_gradient_floor(&scenario("wngrad").run(12).unwrap(), 1.0).pass);
    }

    #[test]
    fn eval_growth() {
        let t = scenario("armijo").run(6).unwrap();
        assert!(check_eval_growth(&t, 2).pass);
        assert!(!check_eval_growth(&t, 3).pass);
        let obj = Objective::new(Quadratic { curvature: 1.0 });
        let t = run_armijo(&obj, 3.0, 1.0, 0.5, 0.5, RunBudget::new(6));
        let v = check_eval_growth(&t, 2);
        assert!(!v.pass);
        assert_eq!(v.first_failure().unwrap().quantity, "cum_obj_evals");
    }

    #[test]
    fn blowup() {
        let s = scenario("constant");
        let j = s.max_feasible_j();
        assert!(check_blowup(&s.run(j).unwrap(), j).pass);
        assert!(!check_blowup(&quadratic_gd(5), 5).pass);
    }

    #[test]
    fn verdicts_round_trip_through_json() {
        let mut t = scenario("bb").run(10).unwrap();
        t.iterations[3].theta += 1e-3;
        let targets = scenario("bb").targets(10).unwrap().unwrap();
        for v in [
            check_anchor_tracking(&t, &targets, 1e-9),
            check_divergence(&quadratic_gd(4), 1e-9),
            check_gradient_floor(&t, 1.0),
            check_eval_growth(&t, 2),
        ] {
            let s = serde_json::to_string(&v).unwrap();
            assert_eq!(serde_json::from_str::<Verdict>(&s).unwrap(), v);
        }
        let r = verify_scenario(&scenario("polyak"), 10, 1e-9).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<ScenarioReport>(&s).unwrap(), r);
    }

    #[test]
    fn checks_are_pure() {
        let t = scenario("nag").run(6).unwrap();
        let targets = scenario("nag").targets(6).unwrap().unwrap();
        assert_eq!(check_anchor_tracking(&t, &targets, 1e-9), check_anchor_tracking(&t, &targets, 1e-9));
        assert_eq!(check_divergence(&t, 1e-9), check_divergence(&t, 1e-9));
    }

    #[test]
    fn every_scenario_verifies_at_moderate_length() {
        for name in crate::scenarios::catalog() {
            let s = scenario(name);
            let steps = s.max_feasible_j().min(15);
            let r = verify_scenario(&s, steps, DEFAULT_LANDING_TOL).unwrap();
            for v in &r.verdicts {
                assert!(v.pass, "{name}: {}", v.summary());
            }
        }
    }

    #[test]
    fn infeasible_requests_are_errors() {
        assert!(matches!(
            verify_scenario(&scenario("armijo"), 11, 1e-9),
            Err(ScenarioError::Infeasible { max: 7, .. })
        ));
    }
}

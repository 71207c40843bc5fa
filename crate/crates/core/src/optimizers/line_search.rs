//! Methods that search over a step size or penalty using objective values.
//!
//! All four evaluate `F(θ_0)` once and afterwards reuse the value of the
//! accepted trial, so each trial costs exactly one objective evaluation.

use serde::{Deserialize, Serialize};

use super::cubic::{cubic_model, cubic_subproblem_1d, CubicConvention};
use super::{finite, oracle, require, slack, Control, Flag, Probe, ProbeKind, Recorder, RunBudget, Step, Trace};
use crate::objective::Objective;

fn trial(theta: f64, f: f64) -> Probe {
    Probe { kind: ProbeKind::Trial, theta, f: Some(f), grad: None }
}

/// Evaluates `F`, `Ḟ` and (optionally) `F̈` at the starting point and records it.
fn start(rec: &mut Recorder<'_>, theta0: f64, hessian: bool) -> Step<(f64, f64, f64)> {
    let obj = rec.obj();
    let f = oracle(0, obj.eval(theta0))?;
    let g = oracle(0, obj.grad(theta0))?;
    let h = if hessian { oracle(0, obj.hess(theta0))? } else { 0.0 };
    rec.push(theta0, Some(f), Some(g), Vec::new(), Control::default());
    Ok((f, g, h))
}

/// Gradient (and `F̈`) at an accepted point, then the record.
fn accept(
    rec: &mut Recorder<'_>,
    k: usize,
    theta: f64,
    f: f64,
    hessian: bool,
    probes: Vec<Probe>,
    control: Control,
) -> Step<(f64, f64)> {
    let obj = rec.obj();
    let g = oracle(k, obj.grad(theta))?;
    let h = if hessian { oracle(k, obj.hess(theta))? } else { 0.0 };
    rec.push(theta, Some(f), Some(g), probes, control);
    Ok((g, h))
}

/// Backtracking until `F(θ - αδ^j Ḟ) ≤ F(θ) - ραδ^j Ḟ²`.
pub fn run_armijo(obj: &Objective, theta0: f64, alpha: f64, delta: f64, rho: f64, budget: RunBudget) -> Trace {
    let params = [("alpha", alpha), ("delta", delta), ("rho", rho), ("theta0", theta0)];
    let mut rec = Recorder::new(obj, budget, "armijo", &params);
    let out = (|| -> Step<()> {
        require(alpha > 0.0 && alpha.is_finite(), || format!("alpha = {alpha} must be positive"))?;
        require(delta > 0.0 && delta < 1.0, || format!("delta = {delta} must lie in (0, 1)"))?;
        require(rho > 0.0 && rho < 1.0, || format!("rho = {rho} must lie in (0, 1)"))?;
        let (mut f, mut g, _) = start(&mut rec, theta0, false)?;
        let mut theta = theta0;
        for k in 1..=budget.max_iterations {
            let mut probes = Vec::new();
            let mut step = alpha;
            let accepted = loop {
                if probes.len() == budget.max_inner_trials {
                    return Err(Flag::InnerCapExceeded { k, trials: probes.len() });
                }
                let psi = rec.iterate(k, theta - step * g, "trial point")?;
                let fpsi = oracle(k, rec.obj().eval(psi))?;
                probes.push(trial(psi, fpsi));
                if fpsi <= f - rho * step * g * g + slack(f) {
                    break (psi, fpsi);
                }
                step *= delta;
            };
            theta = accepted.0;
            f = accepted.1;
            g = accept(&mut rec, k, theta, f, false, probes, Control { step_size: Some(step), ..Control::default() })?
                .0;
        }
        Ok(())
    })();
    rec.finish(out)
}

/// Cubic-regularized Newton with penalty line search `M ← δ1 M` from `L0`,
/// accepting when `F(ψ) ≤ F(θ) + U(ψ; M)`.
pub fn run_cubic_newton(obj: &Objective, theta0: f64, l0: f64, delta1: f64, budget: RunBudget) -> Trace {
    let mut rec = Recorder::new(obj, budget, "cubic_newton", &[("L0", l0), ("delta1", delta1), ("theta0", theta0)]);
    let out = (|| -> Step<()> {
        require(l0 > 0.0 && l0.is_finite(), || format!("L0 = {l0} must be positive"))?;
        require(delta1 > 1.0 && delta1.is_finite(), || format!("delta1 = {delta1} must exceed 1"))?;
        require(rec.obj().has_hessian(), || "this method needs a second-derivative oracle".into())?;
        let (mut f, mut g, mut h) = start(&mut rec, theta0, true)?;
        let mut theta = theta0;
        for k in 1..=budget.max_iterations {
            let mut probes = Vec::new();
            let mut penalty = l0;
            let (psi, fpsi, s) = loop {
                if probes.len() == budget.max_inner_trials {
                    return Err(Flag::InnerCapExceeded { k, trials: probes.len() });
                }
                let s = cubic_subproblem_1d(g, h, penalty, CubicConvention::Sixth);
                let psi = rec.iterate(k, theta + s, "trial point")?;
                let fpsi = oracle(k, rec.obj().eval(psi))?;
                probes.push(trial(psi, fpsi));
                if fpsi <= f + cubic_model(s, g, h, penalty, CubicConvention::Sixth) + slack(f) {
                    break (psi, fpsi, s);
                }
                penalty = finite(k, penalty * delta1, "penalty")?;
            };
            theta = psi;
            f = fpsi;
            let control = Control { step_size: Some(s), penalty: Some(penalty), ..Control::default() };
            (g, h) = accept(&mut rec, k, theta, f, true, probes, control)?;
            if s == 0.0 {
                return Err(Flag::Terminated { k });
            }
        }
        Ok(())
    })();
    rec.finish(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcrParams {
    pub sigma0: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub eta1: f64,
    pub eta2: f64,
}

impl Default for AcrParams {
    fn default() -> Self {
        AcrParams { sigma0: 1.0, delta1: 2.0, delta2: 4.0, eta1: 0.25, eta2: 0.5 }
    }
}

/// Adaptive cubic regularization with the true second derivative as `B_k`.
///
/// Trial steps minimize the cubic model globally, so they satisfy the Cauchy
/// decrease condition. Rejection sets `σ ← δ2 σ`; a very successful step
/// (`ρ > η2`) resets `σ` to `σ0`, a successful one keeps it.
pub fn run_acr(obj: &Objective, theta0: f64, p: AcrParams, budget: RunBudget) -> Trace {
    let params = [
        ("delta1", p.delta1),
        ("delta2", p.delta2),
        ("eta1", p.eta1),
        ("eta2", p.eta2),
        ("sigma0", p.sigma0),
        ("theta0", theta0),
    ];
    let mut rec = Recorder::new(obj, budget, "acr", &params);
    let out = (|| -> Step<()> {
        require(p.sigma0 > 0.0 && p.sigma0.is_finite(), || format!("sigma0 = {} must be positive", p.sigma0))?;
        require(p.delta2 >= p.delta1 && p.delta1 > 1.0, || "need delta2 >= delta1 > 1".into())?;
        require(1.0 > p.eta2 && p.eta2 >= p.eta1 && p.eta1 > 0.0, || "need 1 > eta2 >= eta1 > 0".into())?;
        require(rec.obj().has_hessian(), || "this method needs a second-derivative oracle".into())?;
        let (mut f, mut g, mut b) = start(&mut rec, theta0, true)?;
        let mut theta = theta0;
        let mut sigma_k = p.sigma0;
        for k in 1..=budget.max_iterations {
            let mut probes = Vec::new();
            let mut sigma = sigma_k;
            let (psi, fpsi, rho, gamma) = loop {
                if probes.len() == budget.max_inner_trials {
                    return Err(Flag::InnerCapExceeded { k, trials: probes.len() });
                }
                let gamma = cubic_subproblem_1d(g, b, sigma, CubicConvention::Third);
                let predicted = -cubic_model(gamma, g, b, sigma, CubicConvention::Third);
                let psi = rec.iterate(k, theta + gamma, "trial point")?;
                let fpsi = oracle(k, rec.obj().eval(psi))?;
                probes.push(trial(psi, fpsi));
                if predicted <= 0.0 {
                    // no model decrease is possible: θ is stationary for the model
                    break (psi, fpsi, f64::INFINITY, gamma);
                }
                let rho = (f - fpsi) / predicted;
                if rho >= p.eta1 {
                    break (psi, fpsi, rho, gamma);
                }
                sigma = finite(k, sigma * p.delta2, "penalty")?;
            };
            sigma_k = if rho > p.eta2 { p.sigma0 } else { sigma };
            theta = psi;
            f = fpsi;
            let control = Control { step_size: Some(gamma), penalty: Some(sigma), ..Control::default() };
            (g, b) = accept(&mut rec, k, theta, f, true, probes, control)?;
            if gamma == 0.0 {
                return Err(Flag::Terminated { k });
            }
        }
        Ok(())
    })();
    rec.finish(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicParams {
    pub l0: f64,
    pub sigma0: f64,
    pub delta1: f64,
}

/// Dynamic method: compares a first-order model along `-Ḟ` with a cubic model
/// along a negative-curvature direction and inflates the constant of the
/// chosen model until its value check passes. `L` and `σ` restart from
/// `L0`, `σ0` at every outer iteration.
pub fn run_dynamic(obj: &Objective, theta0: f64, p: DynamicParams, budget: RunBudget) -> Trace {
    let params = [("L0", p.l0), ("delta1", p.delta1), ("sigma0", p.sigma0), ("theta0", theta0)];
    let mut rec = Recorder::new(obj, budget, "dynamic", &params);
    let out = (|| -> Step<()> {
        require(p.l0 > 0.0 && p.sigma0 > 0.0, || "L0 and sigma0 must be positive".into())?;
        require(p.delta1 > 1.0 && p.delta1.is_finite(), || format!("delta1 = {} must exceed 1", p.delta1))?;
        require(rec.obj().has_hessian(), || "this method needs a second-derivative oracle".into())?;
        let (mut f, mut g, mut h) = start(&mut rec, theta0, true)?;
        let mut theta = theta0;
        for k in 1..=budget.max_iterations {
            let s = -g;
            let s_neg = if h >= 0.0 {
                0.0
            } else if g > 0.0 {
                -1.0
            } else {
                1.0
            };
            let c = s_neg * h * s_neg;
            let grad_step = |l: f64| if s == 0.0 { 0.0 } else { -g * s / (l * s * s) };
            let curv_step = |sigma: f64| {
                if s_neg == 0.0 {
                    0.0
                } else {
                    let n3 = s_neg.abs().powi(3);
                    (-c + (c * c - 2.0 * sigma * n3 * g * s_neg).sqrt()) / (sigma * n3)
                }
            };
            let u_grad = |m: f64, l: f64| m * g * s + 0.5 * l * m * m * s * s;
            let u_curv =
                |m: f64, sigma: f64| m * g * s_neg + 0.5 * m * m * c + sigma / 6.0 * m.powi(3) * s_neg.abs().powi(3);

            let mut probes = Vec::new();
            let (mut l, mut sigma) = (p.l0, p.sigma0);
            let (psi, fpsi, control) = loop {
                if probes.len() == budget.max_inner_trials {
                    return Err(Flag::InnerCapExceeded { k, trials: probes.len() });
                }
                let (mg, ms) = (grad_step(l), curv_step(sigma));
                let (ug, us) = (u_grad(mg, l), u_curv(ms, sigma));
                let gradient_branch = ug <= us;
                let (psi, bound) = if gradient_branch { (theta + mg * s, ug) } else { (theta + ms * s_neg, us) };
                let psi = rec.iterate(k, psi, "trial point")?;
                let fpsi = oracle(k, rec.obj().eval(psi))?;
                probes.push(trial(psi, fpsi));
                if fpsi <= f + bound + slack(f) {
                    let control = if gradient_branch {
                        Control { step_size: Some(mg), penalty: Some(l), ..Control::default() }
                    } else {
                        Control { step_size: Some(ms), penalty: Some(sigma), ..Control::default() }
                    };
                    break (psi, fpsi, control);
                }
                if gradient_branch {
                    l = finite(k, l * p.delta1, "Lipschitz estimate")?;
                } else {
                    sigma = finite(k, sigma * p.delta1, "penalty")?;
                }
            };
            let moved = psi != theta;
            theta = psi;
            f = fpsi;
            (g, h) = accept(&mut rec, k, theta, f, true, probes, control)?;
            if !moved {
                return Err(Flag::Terminated { k });
            }
        }
        Ok(())
    })();
    rec.finish(out)
}

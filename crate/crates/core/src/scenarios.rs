//! The thirteen constructions: an objective, a method configuration and the
//! points the method is forced to visit.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::objective::ScalarFunction;
use crate::objective::{
    nag_sequences, AnchorSpec, BlockParams, BumpObjective, BumpSpec, ChainedObjective, Objective, ObjectiveError,
    Quartic, SlopeRule, MAX_ANCHORS,
};
use crate::optimizers::slack;
use crate::optimizers::{
    run_acr, run_adagrad_like, run_armijo, run_bb, run_bregman, run_constant_gd, run_cubic_newton, run_dynamic,
    run_lipschitz_approx, run_nag, run_negative_curvature, run_polyak, run_wngrad, AcrParams, DynamicParams, ProbeKind,
    RunBudget, SeedRule, Trace,
};

/// Lower bound handed to Polyak's method; the infimum of its objective.
pub const POLYAK_LOWER_BOUND: f64 = -31.0 / 2048.0;

/// Largest `J` the bump constructions ever try.
const BUMP_SEARCH_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("unknown scenario '{0}' (try `list`)")]
    UnknownScenario(String),
    #[error("scenario '{scenario}' has no parameter '{key}' (known: {known})")]
    UnknownParameter { scenario: &'static str, key: String, known: String },
    #[error("{param} = {value} is out of range: {reason}")]
    OutOfRange { param: String, value: f64, reason: String },
    #[error("J = {requested} exceeds max feasible J = {max} for {params}")]
    Infeasible { requested: usize, max: usize, params: String },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Constant,
    Bb,
    Nag,
    Bregman,
    Negcurve,
    Lipapprox,
    Wngrad,
    Adagrad,
    Polyak,
    Armijo,
    CubicNewton,
    Acr,
    Dynamic,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 13] = [
        ScenarioKind::Constant,
        ScenarioKind::Bb,
        ScenarioKind::Nag,
        ScenarioKind::Bregman,
        ScenarioKind::Negcurve,
        ScenarioKind::Lipapprox,
        ScenarioKind::Wngrad,
        ScenarioKind::Adagrad,
        ScenarioKind::Polyak,
        ScenarioKind::Armijo,
        ScenarioKind::CubicNewton,
        ScenarioKind::Acr,
        ScenarioKind::Dynamic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Constant => "constant",
            ScenarioKind::Bb => "bb",
            ScenarioKind::Nag => "nag",
            ScenarioKind::Bregman => "bregman",
            ScenarioKind::Negcurve => "negcurve",
            ScenarioKind::Lipapprox => "lipapprox",
            ScenarioKind::Wngrad => "wngrad",
            ScenarioKind::Adagrad => "adagrad",
            ScenarioKind::Polyak => "polyak",
            ScenarioKind::Armijo => "armijo",
            ScenarioKind::CubicNewton => "cubic_newton",
            ScenarioKind::Acr => "acr",
            ScenarioKind::Dynamic => "dynamic",
        }
    }

    pub fn parse(name: &str) -> Result<Self, ScenarioError> {
        Self::ALL.into_iter().find(|k| k.name() == name).ok_or_else(|| ScenarioError::UnknownScenario(name.to_string()))
    }

    pub fn summary(self) -> &'static str {
        match self {
            ScenarioKind::Constant => "constant-step gradient descent on θ⁴/4 blows up when θ0² > 2/m",
            ScenarioKind::Bb => "Barzilai-Borwein steps land on S_j = m0·j while F grows linearly",
            ScenarioKind::Nag => "Nesterov's iterates and extrapolations interleave along unit-slope anchors",
            ScenarioKind::Bregman => "proximal-point steps walk S_j = m·j with unit gradients",
            ScenarioKind::Negcurve => "gradient plus negative-curvature steps walk S_j = m·j",
            ScenarioKind::Lipapprox => "local Lipschitz estimates produce geometric increments (√5/2)^j",
            ScenarioKind::Wngrad => "weighted gradient-norm damping follows the harmonic-like b_j recursion",
            ScenarioKind::Adagrad => "adagrad-style damping with increments (ζ+j)^(-μ)",
            ScenarioKind::Polyak => "Polyak steps with the exact lower bound -31/2048 and gradients -1/8",
            ScenarioKind::Armijo => "backtracking needs 2^j evaluations to accept θ_j",
            ScenarioKind::CubicNewton => "cubic-regularized Newton penalty search needs 2^j evaluations",
            ScenarioKind::Acr => "adaptive cubic regularization needs 2^j evaluations",
            ScenarioKind::Dynamic => "the dynamic Lipschitz/curvature search needs 2^j evaluations",
        }
    }

    /// Parameter names with their defaults. `theta0` of `constant` defaults
    /// to `ceil(√(2/m)) + 1` and is filled in by [`Scenario::build`].
    pub fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            ScenarioKind::Constant => &[("m", 0.1), ("theta0", f64::NAN)],
            ScenarioKind::Bb => &[("m0", 1.0)],
            ScenarioKind::Nag => &[("m", 1.0)],
            ScenarioKind::Bregman => &[("m", 1.0)],
            ScenarioKind::Negcurve => &[("m", 1.0), ("m_prime", 1.0)],
            ScenarioKind::Lipapprox => &[("m0", 1.0)],
            ScenarioKind::Wngrad => &[("b0", 1.0)],
            ScenarioKind::Adagrad => &[("zeta", 1.0), ("mu", 0.5)],
            ScenarioKind::Polyak => &[],
            ScenarioKind::Armijo => &[("delta", 0.5), ("alpha", 1.0), ("rho", 0.5)],
            ScenarioKind::CubicNewton => &[("L0", 1.0), ("delta1", 2.0)],
            ScenarioKind::Acr => &[("sigma0", 1.0), ("delta1", 2.0), ("delta2", 4.0), ("eta1", 0.25), ("eta2", 0.5)],
            ScenarioKind::Dynamic => &[("L0", 1.0), ("sigma0", 1.0), ("delta1", 1.25), ("d2", 0.0)],
        }
    }

    pub fn is_bump(self) -> bool {
        matches!(self, ScenarioKind::Armijo | ScenarioKind::CubicNewton | ScenarioKind::Acr | ScenarioKind::Dynamic)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BumpMethod {
    Armijo { delta: f64, alpha: f64, rho: f64 },
    Cubic { l0: f64, delta1: f64 },
    Acr(AcrParams),
    Dynamic { p: DynamicParams, d2: f64 },
}

impl BumpMethod {
    /// `δ^{-n}`, computed so that the method's own trial arithmetic lands on
    /// the anchors bit-for-bit whenever the base is a power of two.
    fn unit(&self, n: i64) -> f64 {
        match *self {
            BumpMethod::Armijo { delta, .. } => ipow(delta, -n),
            BumpMethod::Cubic { delta1, .. } => ipow(delta1, n).sqrt(),
            BumpMethod::Acr(p) => ipow(p.delta2, n).sqrt(),
            BumpMethod::Dynamic { p, .. } => ipow(p.delta1, n),
        }
    }

    /// `δ^{-2n}`.
    fn unit_sq(&self, n: i64) -> f64 {
        match *self {
            BumpMethod::Cubic { delta1, .. } => ipow(delta1, n),
            BumpMethod::Acr(p) => ipow(p.delta2, n),
            _ => {
                let u = self.unit(n);
                u * u
            }
        }
    }

    fn delta(&self) -> f64 {
        match *self {
            BumpMethod::Armijo { delta, .. } => delta,
            BumpMethod::Cubic { delta1, .. } => 1.0 / delta1.sqrt(),
            BumpMethod::Acr(p) => 1.0 / p.delta2.sqrt(),
            BumpMethod::Dynamic { p, .. } => 1.0 / p.delta1,
        }
    }

    /// Summand of `f_j` for index `k` (exponent `n = 2^{k+1} - k - 2`).
    fn value_term(&self, n: i64) -> f64 {
        match *self {
            BumpMethod::Armijo { alpha, rho, .. } => rho / alpha * self.unit_sq(n),
            BumpMethod::Cubic { l0, .. } => {
                let u = self.unit(n);
                l0 / 3.0 * u * u * u
            }
            BumpMethod::Acr(p) => {
                let u = self.unit(n);
                2.0 * (p.eta2 + 1.0) * p.sigma0 / 3.0 * u * u * u
            }
            BumpMethod::Dynamic { p, .. } => p.l0 / 2.0 * self.unit_sq(n),
        }
    }

    fn slope(&self, n: i64) -> f64 {
        match *self {
            BumpMethod::Armijo { alpha, .. } => -self.unit(n) / alpha,
            BumpMethod::Cubic { l0, .. } => -l0 / 2.0 * self.unit_sq(n),
            BumpMethod::Acr(p) => -p.sigma0 * self.unit_sq(n),
            BumpMethod::Dynamic { p, .. } => -p.l0 * self.unit(n),
        }
    }

    fn curvature(&self) -> f64 {
        match *self {
            BumpMethod::Dynamic { d2, .. } => d2,
            _ => 0.0,
        }
    }

    /// Trial `ℓ` from an anchor with slope `g`, mirroring each method's arithmetic,
    /// together with the size of the model decrease it is tested against.
    fn trial(&self, s: f64, g: f64, ell: usize) -> (f64, f64) {
        match *self {
            BumpMethod::Armijo { delta, alpha, rho } => {
                let step = alpha * ipow(delta, ell as i64);
                (s - step * g, rho * step * g * g)
            }
            BumpMethod::Cubic { l0, delta1 } => {
                let pen = l0 * ipow(delta1, ell as i64);
                let st = (-2.0 * g / pen).sqrt();
                (s + st, g * st + pen / 6.0 * st * st * st)
            }
            BumpMethod::Acr(p) => {
                let sigma = p.sigma0 * ipow(p.delta2, ell as i64);
                let st = (-g / sigma).sqrt();
                (s + st, g * st + sigma / 3.0 * st * st * st)
            }
            BumpMethod::Dynamic { p, .. } => {
                let l = p.l0 * ipow(p.delta1, ell as i64);
                let dir = -g;
                let m = -g * dir / (l * dir * dir);
                (s + m * dir, m * g * dir + 0.5 * l * m * m * dir * dir)
            }
        }
    }
}

impl BumpMethod {
    /// The method's acceptance test for a trial with value `fpsi`.
    fn accepts(&self, f: f64, fpsi: f64, model: f64) -> bool {
        match *self {
            BumpMethod::Armijo { .. } => fpsi <= f - model + slack(f),
            BumpMethod::Cubic { .. } | BumpMethod::Dynamic { .. } => fpsi <= f + model + slack(f),
            BumpMethod::Acr(p) => -model <= 0.0 || (f - fpsi) / -model >= p.eta1,
        }
    }
}

fn ipow(b: f64, n: i64) -> f64 {
    match i32::try_from(n) {
        Ok(n) => b.powi(n),
        Err(_) => b.powf(n as f64),
    }
}

/// `2^{j+1} - j - 2`, the exponent of the slope at anchor `j`.
fn slope_exponent(j: usize) -> i64 {
    (1i64 << (j + 1)) - j as i64 - 2
}

#[derive(Debug, Clone)]
enum Construction {
    Quartic,
    Chained(AnchorSpec),
    Bump(BumpMethod),
}

/// Per-iteration positions a faithful run must reproduce.
#[derive(Debug, Clone, PartialEq)]
pub struct Targets {
    pub iterates: Vec<f64>,
    /// Probe targets per iteration, matched by kind.
    pub probes: Vec<Vec<(ProbeKind, f64)>>,
}

/// A fully bound construction.
#[derive(Debug, Clone)]
pub struct Scenario {
    kind: ScenarioKind,
    params: BTreeMap<String, f64>,
    theta0: f64,
    construction: Construction,
}

/// Landing tolerance `max(1e-9, 1e-9·|S|)` used by default for tracking checks.
pub const DEFAULT_LANDING_TOL: f64 = 1e-9;

pub fn landing_tolerance(tol: f64, target: f64) -> f64 {
    tol * target.abs().max(1.0)
}

/// Names of every scenario, in catalog order.
pub fn catalog() -> Vec<&'static str> {
    ScenarioKind::ALL.iter().map(|k| k.name()).collect()
}

/// [`Scenario::build`] by name.
pub fn build_scenario(name: &str, params: &BTreeMap<String, f64>) -> Result<Scenario, ScenarioError> {
    Scenario::build(ScenarioKind::parse(name)?, params)
}

fn out_of_range(param: &str, value: f64, reason: &str) -> ScenarioError {
    ScenarioError::OutOfRange { param: param.to_string(), value, reason: reason.to_string() }
}

fn check(ok: bool, param: &str, value: f64, reason: &str) -> Result<(), ScenarioError> {
    if ok {
        Ok(())
    } else {
        Err(out_of_range(param, value, reason))
    }
}

fn positive(param: &str, v: f64) -> Result<(), ScenarioError> {
    check(v > 0.0 && v.is_finite(), param, v, "must be positive and finite")
}

impl Scenario {
    pub fn build(kind: ScenarioKind, overrides: &BTreeMap<String, f64>) -> Result<Self, ScenarioError> {
        let defaults = kind.defaults();
        let mut p: BTreeMap<String, f64> = defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (key, v) in overrides {
            if !p.contains_key(key) {
                let known = defaults.iter().map(|(k, _)| *k).collect::<Vec<_>>().join(", ");
                return Err(ScenarioError::UnknownParameter { scenario: kind.name(), key: key.clone(), known });
            }
            p.insert(key.clone(), *v);
        }
        let g = |k: &str| p[k];
        let mut theta0 = 0.0;
        let construction = match kind {
            ScenarioKind::Constant => {
                let m = g("m");
                positive("m", m)?;
                theta0 = if g("theta0").is_nan() { (2.0 / m).sqrt().ceil() + 1.0 } else { g("theta0") };
                check(theta0.is_finite() && theta0 * theta0 > 2.0 / m, "theta0", theta0, "need theta0² > 2/m")?;
                p.insert("theta0".into(), theta0);
                Construction::Quartic
            }
            ScenarioKind::Bb => {
                positive("m0", g("m0"))?;
                Construction::Chained(AnchorSpec::Arithmetic {
                    start: 0.0,
                    step: g("m0"),
                    slopes: SlopeRule::Geometric(0.5),
                })
            }
            ScenarioKind::Nag => {
                positive("m", g("m"))?;
                Construction::Chained(AnchorSpec::Nag { m: g("m") })
            }
            ScenarioKind::Bregman => {
                positive("m", g("m"))?;
                Construction::Chained(AnchorSpec::Arithmetic {
                    start: 0.0,
                    step: g("m"),
                    slopes: SlopeRule::Constant(1.0),
                })
            }
            ScenarioKind::Negcurve => {
                positive("m", g("m"))?;
                positive("m_prime", g("m_prime"))?;
                Construction::Chained(AnchorSpec::Arithmetic {
                    start: 0.0,
                    step: g("m"),
                    slopes: SlopeRule::Constant(1.0),
                })
            }
            ScenarioKind::Lipapprox => {
                positive("m0", g("m0"))?;
                let r = 5f64.sqrt();
                Construction::Chained(AnchorSpec::GeometricIncrement {
                    scale: g("m0"),
                    ratio: r / 2.0,
                    slopes: SlopeRule::Geometric(r / (r + 1.0)),
                })
            }
            ScenarioKind::Wngrad => {
                positive("b0", g("b0"))?;
                Construction::Chained(AnchorSpec::Wngrad { b0: g("b0") })
            }
            ScenarioKind::Adagrad => {
                let (zeta, mu) = (g("zeta"), g("mu"));
                check(zeta > 0.0 && zeta <= 1.0, "zeta", zeta, "must lie in (0, 1]")?;
                check(mu > 0.0 && mu < 1.0, "mu", mu, "must lie in (0, 1)")?;
                Construction::Chained(AnchorSpec::Adagrad { zeta, mu })
            }
            ScenarioKind::Polyak => {
                theta0 = 1.0;
                p.insert("f_lb".into(), POLYAK_LOWER_BOUND);
                Construction::Chained(AnchorSpec::Polyak)
            }
            ScenarioKind::Armijo => {
                let (delta, alpha, rho) = (g("delta"), g("alpha"), g("rho"));
                check(delta > 0.0 && delta < 1.0, "delta", delta, "must lie in (0, 1)")?;
                positive("alpha", alpha)?;
                check(rho > 0.0 && rho < 1.0, "rho", rho, "must lie in (0, 1)")?;
                Construction::Bump(BumpMethod::Armijo { delta, alpha, rho })
            }
            ScenarioKind::CubicNewton => {
                positive("L0", g("L0"))?;
                check(g("delta1") > 1.0 && g("delta1").is_finite(), "delta1", g("delta1"), "must exceed 1")?;
                Construction::Bump(BumpMethod::Cubic { l0: g("L0"), delta1: g("delta1") })
            }
            ScenarioKind::Acr => {
                let a = AcrParams {
                    sigma0: g("sigma0"),
                    delta1: g("delta1"),
                    delta2: g("delta2"),
                    eta1: g("eta1"),
                    eta2: g("eta2"),
                };
                positive("sigma0", a.sigma0)?;
                check(a.delta1 > 1.0, "delta1", a.delta1, "must exceed 1")?;
                check(a.delta2 >= a.delta1 && a.delta2.is_finite(), "delta2", a.delta2, "need delta2 >= delta1")?;
                check(a.eta1 > 0.0, "eta1", a.eta1, "must be positive")?;
                check(a.eta2 >= a.eta1 && a.eta2 < 1.0, "eta2", a.eta2, "need eta1 <= eta2 < 1")?;
                Construction::Bump(BumpMethod::Acr(a))
            }
            ScenarioKind::Dynamic => {
                let d = DynamicParams { l0: g("L0"), sigma0: g("sigma0"), delta1: g("delta1") };
                positive("L0", d.l0)?;
                positive("sigma0", d.sigma0)?;
                check(d.delta1 > 1.0 && d.delta1.is_finite(), "delta1", d.delta1, "must exceed 1")?;
                check(g("d2") >= 0.0 && g("d2").is_finite(), "d2", g("d2"), "must be non-negative")?;
                Construction::Bump(BumpMethod::Dynamic { p: d, d2: g("d2") })
            }
        };
        Ok(Scenario { kind, params: p, theta0, construction })
    }

    pub fn kind(&self) -> ScenarioKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn summary(&self) -> &'static str {
        self.kind.summary()
    }

    /// The anchor rule of a chained construction.
    pub fn anchor_spec(&self) -> Option<&AnchorSpec> {
        match &self.construction {
            Construction::Chained(s) => Some(s),
            _ => None,
        }
    }

    /// `|Ḟ|` is bounded below by this along the iterates (and NAG's extrapolations).
    pub fn grad_floor(&self) -> Option<f64> {
        match self.kind {
            ScenarioKind::Nag
            | ScenarioKind::Bregman
            | ScenarioKind::Negcurve
            | ScenarioKind::Wngrad
            | ScenarioKind::Adagrad => Some(1.0),
            ScenarioKind::Polyak => Some(0.125),
            _ => None,
        }
    }

    /// Cumulative objective evaluations at `θ_j` equal `base^j`.
    pub fn eval_growth(&self) -> Option<u64> {
        self.kind.is_bump().then_some(2)
    }

    /// The bump half-width `Δ = (1 - δ)/2`.
    pub fn half_width(&self) -> Option<f64> {
        match &self.construction {
            Construction::Bump(b) => Some((1.0 - b.delta()) / 2.0),
            _ => None,
        }
    }

    fn params_label(&self) -> String {
        let shown: Vec<String> = self
            .params
            .iter()
            .filter(|(k, _)| self.kind.defaults().iter().any(|(d, _)| d == k))
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        if shown.is_empty() {
            self.name().to_string()
        } else {
            shown.join(", ")
        }
    }

    fn infeasible(&self, requested: usize) -> ScenarioError {
        ScenarioError::Infeasible { requested, max: self.max_feasible_j(), params: self.params_label() }
    }

    /// Highest anchor index a `J`-step run visits.
    fn last_anchor(&self, steps: usize) -> usize {
        match self.kind {
            ScenarioKind::Nag => (2 * steps).saturating_sub(1),
            ScenarioKind::Polyak => steps + 1,
            _ => steps,
        }
    }

    /// Largest `J` for which every quantity of a `J`-step run is a finite
    /// double and the forced trial points stay resolvable.
    pub fn max_feasible_j(&self) -> usize {
        match &self.construction {
            Construction::Quartic => self.quartic_walk(usize::MAX),
            Construction::Chained(spec) => self.chained_walk(spec, usize::MAX),
            Construction::Bump(b) => {
                let mut best = 0;
                for j in 1..=BUMP_SEARCH_LIMIT {
                    if self.bump_feasible(b, j).is_err() {
                        break;
                    }
                    best = j;
                }
                while best > 0 && !self.dry_run_lands(best) {
                    best -= 1;
                }
                best
            }
        }
    }

    /// Plays a bump construction and checks that rounding kept every
    /// acceptance on its anchor with the predicted evaluation count.
    fn dry_run_lands(&self, steps: usize) -> bool {
        let Construction::Bump(b) = &self.construction else { return true };
        let Ok(spec) = self.bump_spec(b, steps) else { return false };
        let Ok(f) = BumpObjective::new(spec.clone()) else { return false };
        let t = self.play(&Objective::new(f), steps);
        !t.failed()
            && t.iterations.len() == steps + 1
            && t.iterations.iter().zip(&spec.anchors).all(|(it, s)| {
                (it.theta - s).abs() <= landing_tolerance(DEFAULT_LANDING_TOL, *s) && it.cum_obj_evals == 1u64 << it.k
            })
    }

    /// `Ok` iff a `steps`-step run is feasible.
    pub fn check_feasible(&self, steps: usize) -> Result<(), ScenarioError> {
        let ok = match &self.construction {
            Construction::Quartic => self.quartic_walk(steps) >= steps,
            Construction::Chained(spec) => self.chained_walk(spec, steps) >= steps,
            Construction::Bump(b) => steps == 0 || (self.bump_feasible(b, steps).is_ok() && self.dry_run_lands(steps)),
        };
        if ok {
            Ok(())
        } else {
            Err(self.infeasible(steps))
        }
    }

    fn quartic_walk(&self, limit: usize) -> usize {
        let m = self.params["m"];
        let mut theta = self.theta0;
        for k in 0..limit {
            let next = theta - m * theta.powi(3);
            if !(next.is_finite() && (next.powi(4) / 4.0).is_finite()) {
                return k;
            }
            theta = next;
        }
        limit
    }

    /// Walks anchors, `F(S_j)` and the method's own step quantities until
    /// something leaves the double range or `limit` steps are covered.
    fn chained_walk(&self, spec: &AnchorSpec, limit: usize) -> usize {
        let mut anchors: Vec<(f64, f64)> = Vec::new();
        let mut value = 0.0f64;
        // the run needs one anchor beyond the last one it visits
        let mut gen = spec.generator();
        let mut best = 0usize;
        for step in 0..=limit {
            let need = self.last_anchor(step) + 1;
            while anchors.len() <= need {
                match gen.next() {
                    Some(Ok(a)) => {
                        if let Some(&(s, d)) = anchors.last() {
                            match BlockParams::new(a.0 - s, d, a.1) {
                                Ok(b) => value += b.rise(),
                                Err(_) => return best,
                            }
                            if !value.is_finite() {
                                return best;
                            }
                        }
                        anchors.push(a);
                    }
                    _ => return best,
                }
            }
            if step > 0 && !self.chained_step_ok(&anchors, step - 1) {
                return best;
            }
            best = step;
            if self.kind == ScenarioKind::Nag && need >= MAX_ANCHORS {
                return best;
            }
        }
        best
    }

    /// Method-specific quantities computed at iteration `k` on the way to `k + 1`.
    fn chained_step_ok(&self, a: &[(f64, f64)], k: usize) -> bool {
        match self.kind {
            ScenarioKind::Bb if k > 0 => {
                let dg = a[k - 1].1 - a[k].1;
                let m = (a[k].0 - a[k - 1].0) / dg;
                dg != 0.0 && m.is_finite() && (a[k].0 + m * a[k].1).is_finite()
            }
            ScenarioKind::Lipapprox if k > 0 => {
                let dg = (a[k - 1].1 - a[k].1).abs();
                let m = (a[k].0 - a[k - 1].0) / (2.0 * dg);
                dg != 0.0 && m.is_finite() && (a[k].0 + m * a[k].1).is_finite()
            }
            _ => true,
        }
    }

    fn bump_spec(&self, b: &BumpMethod, steps: usize) -> Result<BumpSpec, ScenarioError> {
        let mut anchors = vec![0.0];
        let mut triples = Vec::with_capacity(steps + 1);
        let mut sum = 0.0;
        for j in 0..=steps {
            if j > 0 {
                let n = (1i64 << (j - 1)) - j as i64;
                anchors.push(anchors[j - 1] + b.unit(n));
                sum += b.value_term(slope_exponent(j - 1));
            }
            triples.push((-sum, b.slope(slope_exponent(j)), b.curvature()));
        }
        let half_width = (1.0 - b.delta()) / 2.0;
        Ok(BumpSpec { anchors, triples, half_width })
    }

    /// `Err` names the first obstruction.
    fn bump_feasible(&self, b: &BumpMethod, steps: usize) -> Result<(), String> {
        if steps >= 62 {
            return Err("index too large".into());
        }
        let spec = self.bump_spec(b, steps).map_err(|e| e.to_string())?;
        let obj = BumpObjective::new(spec.clone()).map_err(|e| e.to_string())?;
        let value = |x: f64| obj.value(x).unwrap_or(f64::NAN);
        let (s, dw) = (&spec.anchors, spec.half_width);
        for j in 0..steps {
            let (f, g, _) = spec.triples[j];
            if !(g * g).is_finite() {
                return Err("squared slope overflows".into());
            }
            let accept = (1usize << j) - 1;
            let (psi, model) = b.trial(s[j], g, accept);
            if !(model.is_finite() && (psi - s[j + 1]).abs() <= landing_tolerance(DEFAULT_LANDING_TOL, s[j + 1])) {
                return Err(format!("accepted trial {j} misses its anchor"));
            }
            if !b.accepts(f, value(psi), model) {
                return Err(format!("trial landing on anchor {} is rejected", j + 1));
            }
            if accept > 0 {
                let (hi, m_hi) = b.trial(s[j], g, 0);
                let (lo, m_lo) = b.trial(s[j], g, accept - 1);
                // differences are exact near the anchors, sums with Δ are not
                if !(lo - s[j + 1] > dw) {
                    return Err(format!("a rejected trial falls on bump {}", j + 1));
                }
                if j + 2 <= steps && !(s[j + 2] - hi > dw) {
                    return Err(format!("the first trial falls on bump {}", j + 2));
                }
                if !hi.is_finite() || b.accepts(f, value(hi), m_hi) || b.accepts(f, value(lo), m_lo) {
                    return Err(format!("an early trial is accepted after anchor {j}"));
                }
            }
        }
        Ok(())
    }

    /// The objective a `steps`-step run is played on.
    pub fn objective(&self, steps: usize) -> Result<Objective, ScenarioError> {
        self.check_feasible(steps)?;
        Ok(match &self.construction {
            Construction::Quartic => Objective::new(Quartic),
            Construction::Chained(spec) => Objective::new(ChainedObjective::new(spec.clone())?),
            Construction::Bump(b) => Objective::new(BumpObjective::new(self.bump_spec(b, steps)?)?),
        })
    }

    /// `S_0, ..., S_J`; empty for the quartic construction.
    pub fn expected_anchors(&self, steps: usize) -> Result<Vec<f64>, ScenarioError> {
        self.check_feasible(steps)?;
        match &self.construction {
            Construction::Quartic => Ok(Vec::new()),
            Construction::Chained(spec) => Ok(spec.take(steps + 1)?.into_iter().map(|a| a.0).collect()),
            Construction::Bump(b) => Ok(self.bump_spec(b, steps)?.anchors),
        }
    }

    /// What iteration `k` of a `steps`-step run must land on.
    pub fn targets(&self, steps: usize) -> Result<Option<Targets>, ScenarioError> {
        self.check_feasible(steps)?;
        let t = match self.kind {
            ScenarioKind::Constant => return Ok(None),
            ScenarioKind::Nag => {
                let (th, y, z) = nag_sequences(self.params["m"], steps);
                let probes = (0..=steps).map(|k| vec![(ProbeKind::NagY, y[k]), (ProbeKind::NagZ, z[k])]).collect();
                Targets { iterates: th, probes }
            }
            ScenarioKind::Polyak => {
                let s = self.expected_anchors(steps + 1)?;
                Targets { iterates: s[1..].to_vec(), probes: vec![Vec::new(); steps + 1] }
            }
            _ => Targets { iterates: self.expected_anchors(steps)?, probes: vec![Vec::new(); steps + 1] },
        };
        Ok(Some(t))
    }

    /// Plays the bound method for `steps` iterations and annotates the trace
    /// with uncounted values at the iterates.
    pub fn run(&self, steps: usize) -> Result<Trace, ScenarioError> {
        let obj = self.objective(steps)?;
        let mut trace = self.play(&obj, steps);
        trace.annotate(&obj);
        Ok(trace)
    }

    fn play(&self, obj: &Objective, steps: usize) -> Trace {
        let inner = RunBudget::DEFAULT_INNER_TRIALS.max(1usize.checked_shl(steps as u32).unwrap_or(usize::MAX));
        let budget = RunBudget::new(steps).with_inner_trials(inner);
        let p = |k: &str| self.params[k];
        let th = self.theta0;
        let mut trace = match (&self.construction, self.kind) {
            (_, ScenarioKind::Constant) => run_constant_gd(obj, th, p("m"), budget),
            (_, ScenarioKind::Bb) => run_bb(obj, th, p("m0"), budget),
            (_, ScenarioKind::Nag) => run_nag(obj, th, p("m"), budget),
            (_, ScenarioKind::Bregman) => run_bregman(obj, th, p("m"), budget, SeedRule::GradientStep),
            (_, ScenarioKind::Negcurve) => run_negative_curvature(obj, th, p("m"), p("m_prime"), budget),
            (_, ScenarioKind::Lipapprox) => run_lipschitz_approx(obj, th, p("m0"), budget),
            (_, ScenarioKind::Wngrad) => run_wngrad(obj, th, p("b0"), budget),
            (_, ScenarioKind::Adagrad) => run_adagrad_like(obj, th, p("zeta"), p("mu"), budget),
            (_, ScenarioKind::Polyak) => run_polyak(obj, th, POLYAK_LOWER_BOUND, budget),
            (_, ScenarioKind::Armijo) => run_armijo(obj, th, p("alpha"), p("delta"), p("rho"), budget),
            (_, ScenarioKind::CubicNewton) => run_cubic_newton(obj, th, p("L0"), p("delta1"), budget),
            (Construction::Bump(BumpMethod::Acr(a)), _) => run_acr(obj, th, *a, budget),
            (Construction::Bump(BumpMethod::Dynamic { p: d, .. }), _) => run_dynamic(obj, th, *d, budget),
            _ => unreachable!("construction matches kind"),
        };
        trace.scenario = self.name().to_string();
        for (k, v) in &self.params {
            trace.params.entry(k.clone()).or_insert(*v);
        }
        trace
    }
}

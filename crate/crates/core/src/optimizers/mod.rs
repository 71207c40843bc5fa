//! Instrumented gradient methods.
//!
//! Every runner returns a [`Trace`]. Oracle failures, overflow and other
//! breakdowns end the run and are reported as [`Flag`]s rather than errors.

mod cubic;
mod first_order;
mod line_search;
mod nag;
mod proximal;

pub use cubic::{cubic_model, cubic_subproblem_1d, CubicConvention};
pub use first_order::{run_adagrad_like, run_bb, run_constant_gd, run_lipschitz_approx, run_polyak, run_wngrad};
pub use line_search::{run_acr, run_armijo, run_cubic_newton, run_dynamic, AcrParams, DynamicParams};
pub use nag::run_nag;
pub use proximal::{run_bregman, run_negative_curvature, SeedRule};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::objective::{Objective, ObjectiveError};

/// What a probe point is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    /// A line-search or penalty trial; `f` is the counted evaluation.
    Trial,
    /// Nesterov's extrapolated point; `grad` is the counted evaluation.
    NagY,
    NagZ,
    /// Starting point of the proximal inner solve.
    BregmanSeed,
}

impl ProbeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProbeKind::Trial => "trial",
            ProbeKind::NagY => "nag_y",
            ProbeKind::NagZ => "nag_z",
            ProbeKind::BregmanSeed => "bregman_seed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "trial" => ProbeKind::Trial,
            "nag_y" => ProbeKind::NagY,
            "nag_z" => ProbeKind::NagZ,
            "bregman_seed" => ProbeKind::BregmanSeed,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub kind: ProbeKind,
    pub theta: f64,
    pub f: Option<f64>,
    pub grad: Option<f64>,
}

impl Probe {
    pub fn point(kind: ProbeKind, theta: f64) -> Self {
        Probe { kind, theta, f: None, grad: None }
    }
}

/// Method state attached to an iterate.
///
/// For step-size rules `step_size` is the step taken from this iterate. For
/// line searches `step_size`/`penalty` hold the accepted values that produced it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub step_size: Option<f64>,
    pub penalty: Option<f64>,
    pub b_k: Option<f64>,
    pub w_k: Option<f64>,
}

/// Values filled in after the run by an uncounted oracle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Observed {
    pub f: Option<f64>,
    pub grad: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iteration {
    pub k: usize,
    pub theta: f64,
    /// Objective value, present only if the method evaluated it.
    pub f: Option<f64>,
    /// Gradient, present only if the method evaluated it at `theta`.
    pub grad: Option<f64>,
    pub probes: Vec<Probe>,
    pub cum_obj_evals: u64,
    pub cum_grad_evals: u64,
    pub cum_hess_evals: u64,
    pub control: Control,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<Observed>,
}

impl Iteration {
    /// Counted value, else the annotated one.
    pub fn value(&self) -> Option<f64> {
        self.f.or(self.observed.and_then(|o| o.f))
    }

    pub fn gradient(&self) -> Option<f64> {
        self.grad.or(self.observed.and_then(|o| o.grad))
    }
}

/// Why a run ended early or something noteworthy happened along the way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Flag {
    /// An iterate or internal quantity left the double range.
    Overflow {
        k: usize,
        what: String,
    },
    DivisionByZero {
        k: usize,
        what: String,
    },
    InnerCapExceeded {
        k: usize,
        trials: usize,
    },
    InnerSolveFailed {
        k: usize,
        reason: String,
    },
    /// The objective refused to evaluate.
    Oracle {
        k: usize,
        message: String,
    },
    ZeroGradient {
        k: usize,
    },
    /// The method's own stopping rule fired.
    Terminated {
        k: usize,
    },
    /// Parameters outside the method's admissible range.
    Invalid {
        message: String,
    },
}

impl Flag {
    pub fn k(&self) -> usize {
        match self {
            Flag::Overflow { k, .. }
            | Flag::DivisionByZero { k, .. }
            | Flag::InnerCapExceeded { k, .. }
            | Flag::InnerSolveFailed { k, .. }
            | Flag::Oracle { k, .. }
            | Flag::ZeroGradient { k }
            | Flag::Terminated { k } => *k,
            Flag::Invalid { .. } => 0,
        }
    }

    /// True for flags that mean the run broke down.
    pub fn is_failure(&self) -> bool {
        !matches!(self, Flag::Terminated { .. })
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flag::Overflow { k, what } => write!(f, "overflow at k={k}: {what}"),
            Flag::DivisionByZero { k, what } => write!(f, "division by zero at k={k}: {what}"),
            Flag::InnerCapExceeded { k, trials } => write!(f, "inner loop exceeded {trials} trials at k={k}"),
            Flag::InnerSolveFailed { k, reason } => write!(f, "inner solve failed at k={k}: {reason}"),
            Flag::Oracle { k, message } => write!(f, "oracle error at k={k}: {message}"),
            Flag::ZeroGradient { k } => write!(f, "zero gradient at k={k}"),
            Flag::Terminated { k } => write!(f, "stopping rule fired at k={k}"),
            Flag::Invalid { message } => write!(f, "invalid parameters: {message}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub method: String,
    pub scenario: String,
    pub params: BTreeMap<String, f64>,
    pub iterations: Vec<Iteration>,
    pub flags: Vec<Flag>,
}

impl Trace {
    pub fn new(method: &str) -> Self {
        Trace {
            method: method.to_string(),
            scenario: String::new(),
            params: BTreeMap::new(),
            iterations: Vec::new(),
            flags: Vec::new(),
        }
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.iterations.iter().map(|it| it.theta).collect()
    }

    pub fn last(&self) -> Option<&Iteration> {
        self.iterations.last()
    }

    pub fn failed(&self) -> bool {
        self.flags.iter().any(Flag::is_failure)
    }

    /// Fills missing values and gradients at the iterates without
    /// touching the counters. Points the oracle rejects are left empty.
    pub fn annotate(&mut self, obj: &Objective) {
        for it in &mut self.iterations {
            let f = it.f.or_else(|| obj.shadow_eval(it.theta).ok());
            let grad = it.grad.or_else(|| obj.shadow_grad(it.theta).ok());
            it.observed = Some(Observed { f, grad });
        }
    }
}

/// What to do when an iterate stops being finite.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverflowPolicy {
    /// Flag and stop.
    #[default]
    Flag,
    /// Record the non-finite iterate, flag, and stop at the next oracle failure.
    Continue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunBudget {
    /// Outer iterations; the trace holds iterates `0..=max_iterations`.
    pub max_iterations: usize,
    pub max_inner_trials: usize,
    pub overflow: OverflowPolicy,
}

impl RunBudget {
    pub const DEFAULT_INNER_TRIALS: usize = 64;

    pub fn new(max_iterations: usize) -> Self {
        RunBudget { max_iterations, max_inner_trials: Self::DEFAULT_INNER_TRIALS, overflow: OverflowPolicy::Flag }
    }

    pub fn with_inner_trials(mut self, n: usize) -> Self {
        self.max_inner_trials = n;
        self
    }

    pub fn with_overflow(mut self, p: OverflowPolicy) -> Self {
        self.overflow = p;
        self
    }
}

impl Default for RunBudget {
    fn default() -> Self {
        RunBudget::new(100)
    }
}

/// Accumulates iterations, stamping each with the objective's counters.
pub(crate) struct Recorder<'a> {
    obj: &'a Objective,
    budget: RunBudget,
    trace: Trace,
}

pub(crate) type Step<T> = Result<T, Flag>;

impl<'a> Recorder<'a> {
    pub fn new(obj: &'a Objective, budget: RunBudget, method: &str, params: &[(&str, f64)]) -> Self {
        let mut trace = Trace::new(method);
        trace.params = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        Recorder { obj, budget, trace }
    }

    pub fn obj(&self) -> &Objective {
        self.obj
    }

    pub fn budget(&self) -> RunBudget {
        self.budget
    }

    pub fn push(&mut self, theta: f64, f: Option<f64>, grad: Option<f64>, probes: Vec<Probe>, control: Control) {
        let c = self.obj.counts();
        let k = self.trace.iterations.len();
        self.trace.iterations.push(Iteration {
            k,
            theta,
            f,
            grad,
            probes,
            cum_obj_evals: c.obj,
            cum_grad_evals: c.grad,
            cum_hess_evals: c.hess,
            control,
            observed: None,
        });
    }

    /// Checks a freshly computed iterate. Under [`OverflowPolicy::Continue`]
    /// a non-finite iterate is recorded before the run stops.
    pub fn iterate(&mut self, k: usize, theta: f64, what: &str) -> Step<f64> {
        if theta.is_finite() {
            return Ok(theta);
        }
        if self.budget.overflow == OverflowPolicy::Continue {
            self.push(theta, None, None, Vec::new(), Control::default());
        }
        Err(Flag::Overflow { k, what: what.to_string() })
    }

    pub fn finish(mut self, outcome: Step<()>) -> Trace {
        if let Err(flag) = outcome {
            self.trace.flags.push(flag);
        }
        self.trace
    }
}

pub(crate) fn oracle<T>(k: usize, r: Result<T, ObjectiveError>) -> Step<T> {
    r.map_err(|e| match e {
        ObjectiveError::Overflow { what, .. } => Flag::Overflow { k, what: what.to_string() },
        other => Flag::Oracle { k, message: other.to_string() },
    })
}

/// `Err(Flag::Invalid)` unless `ok`.
pub(crate) fn require(ok: bool, message: impl FnOnce() -> String) -> Step<()> {
    if ok {
        Ok(())
    } else {
        Err(Flag::Invalid { message: message() })
    }
}

pub(crate) fn finite(k: usize, x: f64, what: &str) -> Step<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Flag::Overflow { k, what: what.to_string() })
    }
}

/// Rounding allowance for sufficient-decrease tests.
pub(crate) fn slack(f: f64) -> f64 {
    1e-12 * f.abs().max(1.0)
}

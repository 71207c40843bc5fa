//! Adversarial objectives and the counted oracle wrapper every optimizer talks to.

mod anchors;
mod block;
mod bump;
mod chained;
mod interp;

pub use anchors::{nag_sequences, AnchorGenerator, AnchorSpec, NagSchedule, NagState, SlopeRule, MAX_ANCHORS};
pub use block::{eval_block, grad_block, hess_block, BlockParams};
pub use bump::{BumpObjective, BumpSpec};
pub use chained::ChainedObjective;
pub use interp::{poly_eval, solve_interpolation, InterpTargets, PolyCoefficients, ScaledPoly};

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("theta = {theta} is outside the domain [{lo}, {hi}]")]
    Domain { theta: f64, lo: f64, hi: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{what} left the double range at index {index}")]
    Overflow { what: &'static str, index: usize },
    #[error("slope difference underflowed at index {index}")]
    Underflow { index: usize },
    #[error("anchors stopped increasing at index {index}")]
    NotIncreasing { index: usize },
    #[error("theta = {theta} lies beyond the last available anchor ({last})")]
    BeyondAnchors { theta: f64, last: f64 },
    #[error("intervals around anchors {index} and {next} overlap")]
    Overlap { index: usize, next: usize },
    #[error("interpolation system is singular")]
    Singular,
    #[error("this objective has no Hessian oracle")]
    NoHessian,
}

/// A scalar function of one real variable with first and (optionally) second
/// derivatives. Implementations must be pure.
pub trait ScalarFunction: Send + Sync {
    fn value(&self, theta: f64) -> Result<f64, ObjectiveError>;
    fn gradient(&self, theta: f64) -> Result<f64, ObjectiveError>;
    fn hessian(&self, _theta: f64) -> Result<f64, ObjectiveError> {
        Err(ObjectiveError::NoHessian)
    }
    fn has_hessian(&self) -> bool {
        false
    }
}

/// Snapshot of the three oracle counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounts {
    pub obj: u64,
    pub grad: u64,
    pub hess: u64,
}

/// Counted oracle access to a [`ScalarFunction`].
///
/// Cloning shares the function but not the counters; use
/// [`Objective::fresh`] to start a new count on the same function.
pub struct Objective {
    function: Arc<dyn ScalarFunction>,
    obj_evals: AtomicU64,
    grad_evals: AtomicU64,
    hess_evals: AtomicU64,
}

impl std::fmt::Debug for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Objective").field("counts", &self.counts()).finish()
    }
}

impl Objective {
    pub fn new<F: ScalarFunction + 'static>(function: F) -> Self {
        Self::from_arc(Arc::new(function))
    }

    pub fn from_arc(function: Arc<dyn ScalarFunction>) -> Self {
        Objective {
            function,
            obj_evals: AtomicU64::new(0),
            grad_evals: AtomicU64::new(0),
            hess_evals: AtomicU64::new(0),
        }
    }

    /// Same function, counters at zero.
    pub fn fresh(&self) -> Self {
        Self::from_arc(Arc::clone(&self.function))
    }

    pub fn eval(&self, theta: f64) -> Result<f64, ObjectiveError> {
        self.obj_evals.fetch_add(1, Ordering::SeqCst);
        self.function.value(theta)
    }

    pub fn grad(&self, theta: f64) -> Result<f64, ObjectiveError> {
        self.grad_evals.fetch_add(1, Ordering::SeqCst);
        self.function.gradient(theta)
    }

    pub fn hess(&self, theta: f64) -> Result<f64, ObjectiveError> {
        self.hess_evals.fetch_add(1, Ordering::SeqCst);
        self.function.hessian(theta)
    }

    pub fn has_hessian(&self) -> bool {
        self.function.has_hessian()
    }

    /// Uncounted value, used for out-of-band annotation of traces.
    pub fn shadow_eval(&self, theta: f64) -> Result<f64, ObjectiveError> {
        self.function.value(theta)
    }

    /// Uncounted gradient.
    pub fn shadow_grad(&self, theta: f64) -> Result<f64, ObjectiveError> {
        self.function.gradient(theta)
    }

    /// Uncounted second derivative.
    pub fn shadow_hess(&self, theta: f64) -> Result<f64, ObjectiveError> {
        self.function.hessian(theta)
    }

    pub fn counts(&self) -> EvalCounts {
        EvalCounts {
            obj: self.obj_evals.load(Ordering::SeqCst),
            grad: self.grad_evals.load(Ordering::SeqCst),
            hess: self.hess_evals.load(Ordering::SeqCst),
        }
    }

    pub fn function(&self) -> &Arc<dyn ScalarFunction> {
        &self.function
    }
}

/// `F(θ) = θ⁴/4`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Quartic;

impl ScalarFunction for Quartic {
    fn value(&self, theta: f64) -> Result<f64, ObjectiveError> {
        finite(theta.powi(4) / 4.0, "quartic value")
    }
    fn gradient(&self, theta: f64) -> Result<f64, ObjectiveError> {
        finite(theta.powi(3), "quartic gradient")
    }
    fn hessian(&self, theta: f64) -> Result<f64, ObjectiveError> {
        finite(3.0 * theta * theta, "quartic hessian")
    }
    fn has_hessian(&self) -> bool {
        true
    }
}

/// `F(θ) = c·θ²/2`.
#[derive(Debug, Clone, Copy)]
pub struct Quadratic {
    pub curvature: f64,
}

impl Default for Quadratic {
    fn default() -> Self {
        Quadratic { curvature: 1.0 }
    }
}

impl ScalarFunction for Quadratic {
    fn value(&self, theta: f64) -> Result<f64, ObjectiveError> {
        finite(0.5 * self.curvature * theta * theta, "quadratic value")
    }
    fn gradient(&self, theta: f64) -> Result<f64, ObjectiveError> {
        finite(self.curvature * theta, "quadratic gradient")
    }
    fn hessian(&self, _theta: f64) -> Result<f64, ObjectiveError> {
        Ok(self.curvature)
    }
    fn has_hessian(&self) -> bool {
        true
    }
}

/// A constant function; every derivative is zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct Flat {
    pub level: f64,
}

impl ScalarFunction for Flat {
    fn value(&self, _theta: f64) -> Result<f64, ObjectiveError> {
        Ok(self.level)
    }
    fn gradient(&self, _theta: f64) -> Result<f64, ObjectiveError> {
        Ok(0.0)
    }
    fn hessian(&self, _theta: f64) -> Result<f64, ObjectiveError> {
        Ok(0.0)
    }
    fn has_hessian(&self) -> bool {
        true
    }
}

pub(crate) fn finite(x: f64, what: &'static str) -> Result<f64, ObjectiveError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ObjectiveError::Overflow { what, index: 0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counters_track_each_oracle() {
        let obj = Objective::new(Quartic);
        obj.eval(1.0).unwrap();
        obj.grad(1.0).unwrap();
        obj.grad(2.0).unwrap();
        obj.hess(2.0).unwrap();
        obj.shadow_eval(3.0).unwrap();
        obj.shadow_grad(3.0).unwrap();
        assert_eq!(obj.counts(), EvalCounts { obj: 1, grad: 2, hess: 1 });
    }

    #[test]
    fn fresh_resets_counts() {
        let obj = Objective::new(Quadratic::default());
        obj.eval(1.0).unwrap();
        let again = obj.fresh();
        assert_eq!(again.counts(), EvalCounts::default());
        assert_eq!(again.eval(2.0).unwrap(), 2.0);
    }

    #[test]
    fn counters_are_exact_under_threads() {
        let obj = Arc::new(Objective::new(Quartic));
        std::thread::scope(|s| {
            for t in 0..4 {
                let obj = Arc::clone(&obj);
                s.spawn(move || {
                    for i in 0..250 {
                        obj.eval(i as f64).unwrap();
                        if t % 2 == 0 {
                            obj.grad(i as f64).unwrap();
                        }
                    }
                });
            }
        });
        assert_eq!(obj.counts(), EvalCounts { obj: 1000, grad: 500, hess: 0 });
    }

    #[test]
    fn quartic_overflow_is_reported() {
        assert!(matches!(Quartic.value(1e100), Err(ObjectiveError::Overflow { .. })));
    }
}

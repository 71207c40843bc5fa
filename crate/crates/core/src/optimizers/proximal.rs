//! Proximal-point and negative-curvature steps.

use serde::{Deserialize, Serialize};

use super::{finite, oracle, require, Control, Flag, Probe, ProbeKind, Recorder, RunBudget, Step, Trace};
use crate::objective::Objective;

/// Where the inner Newton solve of the proximal step starts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedRule {
    /// `θ_k - m Ḟ(θ_k)`, the stationary point when `Ḟ` is locally constant.
    #[default]
    GradientStep,
    /// `θ_k` itself.
    Current,
}

/// `θ_{k+1}` is a local minimizer of `F(θ) + (θ - θ_k)² / (2m)`, found by
/// guarded Newton iterations from the seed. Each accepted point satisfies
/// `|φ'| ≤ tol` and `φ'' > 0` for the proximal objective `φ`.
pub fn run_bregman(obj: &Objective, theta0: f64, m: f64, budget: RunBudget, seed_rule: SeedRule) -> Trace {
    let mut rec = Recorder::new(obj, budget, "bregman", &[("m", m), ("theta0", theta0)]);
    let out = (|| -> Step<()> {
        require(m > 0.0 && m.is_finite(), || format!("proximal weight m = {m} must be positive"))?;
        require(rec.obj().has_hessian(), || "the proximal solve needs a second-derivative oracle".into())?;
        let mut theta = theta0;
        let mut probes = Vec::new();
        for k in 0..=budget.max_iterations {
            rec.push(
                theta,
                None,
                None,
                std::mem::take(&mut probes),
                Control { step_size: Some(m), ..Control::default() },
            );
            if k == budget.max_iterations {
                break;
            }
            let seed = match seed_rule {
                SeedRule::GradientStep => {
                    let g = oracle(k, rec.obj().grad(theta))?;
                    rec.iterate(k + 1, theta - m * g, "proximal seed")?
                }
                SeedRule::Current => theta,
            };
            probes.push(Probe::point(ProbeKind::BregmanSeed, seed));
            theta = prox_newton(&rec, k + 1, theta, seed, m)?;
        }
        Ok(())
    })();
    rec.finish(out)
}

fn prox_newton(rec: &Recorder<'_>, k: usize, center: f64, seed: f64, m: f64) -> Step<f64> {
    let obj = rec.obj();
    let mut x = seed;
    for _ in 0..=rec.budget().max_inner_trials {
        let g = oracle(k, obj.grad(x))?;
        let h = oracle(k, obj.hess(x))?;
        let dphi = g + (x - center) / m;
        let d2phi = h + 1.0 / m;
        let tol = 1e-12 * g.abs().max((x - center).abs() / m).max(1.0);
        if dphi.abs() <= tol {
            if d2phi > 0.0 {
                return Ok(x);
            }
            return Err(Flag::InnerSolveFailed { k, reason: format!("stationary point {x} is not a local minimizer") });
        }
        if d2phi <= 0.0 {
            return Err(Flag::InnerSolveFailed { k, reason: format!("nonpositive proximal curvature at {x}") });
        }
        x = finite(k, x - dphi / d2phi, "proximal Newton iterate")?;
    }
    Err(Flag::InnerSolveFailed { k, reason: "Newton iterations did not converge".into() })
}

/// Two-step method: `θ_{k+1} = θ_k + m s_k + m' s'_k` with `s_k = -Ḟ(θ_k)` and
/// `s'_k` a unit descent direction when `F̈(θ_k) < 0` (else 0). Stops when
/// both directions vanish.
pub fn run_negative_curvature(obj: &Objective, theta0: f64, m: f64, m_prime: f64, budget: RunBudget) -> Trace {
    let mut rec = Recorder::new(obj, budget, "negcurve", &[("m", m), ("m_prime", m_prime), ("theta0", theta0)]);
    let out = (|| -> Step<()> {
        require(m > 0.0 && m_prime > 0.0, || format!("steps m = {m}, m' = {m_prime} must be positive"))?;
        require(rec.obj().has_hessian(), || "this method needs a second-derivative oracle".into())?;
        let mut theta = theta0;
        for k in 0..=budget.max_iterations {
            let g = oracle(k, rec.obj().grad(theta))?;
            let h = oracle(k, rec.obj().hess(theta))?;
            let s_neg = if h >= 0.0 {
                0.0
            } else if g > 0.0 {
                -1.0
            } else {
                1.0
            };
            let s = -g;
            rec.push(theta, None, Some(g), Vec::new(), Control { step_size: Some(m), ..Control::default() });
            if s == 0.0 && s_neg == 0.0 {
                return Err(Flag::Terminated { k });
            }
            if k == budget.max_iterations {
                break;
            }
            theta = rec.iterate(k + 1, theta + m * s + m_prime * s_neg, "iterate")?;
        }
        Ok(())
    })();
    rec.finish(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{AnchorSpec, ChainedObjective, Quadratic, ScalarFunction, SlopeRule};

    fn steps(m: f64) -> Objective {
        Objective::new(
            ChainedObjective::new(AnchorSpec::Arithmetic { start: 0.0, step: m, slopes: SlopeRule::Constant(1.0) })
                .unwrap(),
        )
    }

    #[test]
    fn bregman_tracks_anchors() {
        for m in [1.0, 2.0, 0.7] {
            let obj = steps(m);
            let t = run_bregman(&obj, 0.0, m, RunBudget::new(12), SeedRule::GradientStep);
            assert!(t.flags.is_empty(), "{:?}", t.flags);
            for it in &t.iterations {
                assert!((it.theta - m * it.k as f64).abs() <= 1e-12 * it.theta.max(1.0));
                let g = obj.shadow_grad(it.theta).unwrap();
                if it.k > 0 {
                    let prev = t.iterations[it.k - 1].theta;
                    assert!((g + (it.theta - prev) / m).abs() < 1e-9);
                    assert!(obj.shadow_hess(it.theta).unwrap() + 1.0 / m > 0.0);
                }
            }
            if m == 2.0 {
                assert_eq!(t.iterations[3].theta, 6.0);
            }
            assert_eq!(obj.counts().obj, 0);
        }
    }

    #[test]
    fn bregman_on_quadratic() {
        let obj = Objective::new(Quadratic::default());
        let t = run_bregman(&obj, 1.0, 1.0, RunBudget::new(1), SeedRule::GradientStep);
        assert!((t.iterations[1].theta - 0.5).abs() < 1e-15);
        let t = run_bregman(&obj.fresh(), 1.0, 1.0, RunBudget::new(1), SeedRule::Current);
        assert!((t.iterations[1].theta - 0.5).abs() < 1e-15);
    }

    #[test]
    fn negative_curvature_tracks_anchors() {
        let obj = steps(1.5);
        let t = run_negative_curvature(&obj, 0.0, 1.5, 0.4, RunBudget::new(15));
        for it in &t.iterations {
            assert_eq!(it.theta, 1.5 * it.k as f64);
        }
        assert_eq!(obj.counts().obj, 0);
    }

    #[test]
    fn negative_curvature_stops_at_minimum() {
        let obj = Objective::new(Quadratic::default());
        let t = run_negative_curvature(&obj, 0.0, 1.0, 1.0, RunBudget::new(5));
        assert_eq!(t.iterations.len(), 1);
        assert_eq!(t.flags, vec![Flag::Terminated { k: 0 }]);
        let t = run_negative_curvature(&obj.fresh(), 1.0, 1.0, 1.0, RunBudget::new(1));
        assert_eq!(t.iterations[1].theta, 0.0);
    }

    struct Cap;
    impl ScalarFunction for Cap {
        fn value(&self, t: f64) -> Result<f64, crate::objective::ObjectiveError> {
            Ok(-t * t / 2.0)
        }
        fn gradient(&self, t: f64) -> Result<f64, crate::objective::ObjectiveError> {
            Ok(-t)
        }
        fn hessian(&self, _: f64) -> Result<f64, crate::objective::ObjectiveError> {
            Ok(-1.0)
        }
        fn has_hessian(&self) -> bool {
            true
        }
    }

    #[test]
    fn negative_curvature_escapes_maximum() {
        let obj = Objective::new(Cap);
        let t = run_negative_curvature(&obj, 0.0, 0.5, 0.25, RunBudget::new(1));
        assert_eq!(t.iterations[1].theta, 0.25);
    }
}

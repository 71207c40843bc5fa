//! Gradient methods with explicit step-size rules.

use super::{finite, oracle, require, Control, Flag, Recorder, RunBudget, Step, Trace};
use crate::objective::Objective;

/// `θ_k = θ_{k-1} - m Ḟ(θ_{k-1})`.
pub fn run_constant_gd(obj: &Objective, theta0: f64, m: f64, budget: RunBudget) -> Trace {
    let mut rec = Recorder::new(obj, budget, "constant", &[("m", m), ("theta0", theta0)]);
    let out = (|| -> Step<()> {
        require(m > 0.0 && m.is_finite(), || format!("step m = {m} must be positive"))?;
        let mut theta = theta0;
        for k in 0..=budget.max_iterations {
            let g = oracle(k, rec.obj().grad(theta))?;
            rec.push(theta, None, Some(g), Vec::new(), Control { step_size: Some(m), ..Control::default() });
            if k == budget.max_iterations {
                break;
            }
            theta = rec.iterate(k + 1, theta - m * g, "iterate")?;
        }
        Ok(())
    })();
    rec.finish(out)
}

/// Barzilai-Borwein: `θ_1 = θ_0 - m_0 Ḟ(θ_0)`, then `m_k = Δθ / ΔḞ`.
pub fn run_bb(obj: &Objective, theta0: f64, m0: f64, budget: RunBudget) -> Trace {
    let mut rec = Recorder::new(obj, budget, "bb", &[("m0", m0), ("theta0", theta0)]);
    let out = (|| -> Step<()> {
        require(m0 > 0.0 && m0.is_finite(), || format!("initial step m0 = {m0} must be positive"))?;
        let mut theta = theta0;
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..=budget.max_iterations {
            let g = oracle(k, rec.obj().grad(theta))?;
            let m = match prev {
                None => m0,
                Some((tp, gp)) => {
                    let dg = g - gp;
                    if dg == 0.0 {
                        rec.push(theta, None, Some(g), Vec::new(), Control::default());
                        return Err(Flag::DivisionByZero { k, what: "consecutive gradients are equal".into() });
                    }
                    finite(k, (theta - tp) / dg, "step size")?
                }
            };
            rec.push(theta, None, Some(g), Vec::new(), Control { step_size: Some(m), ..Control::default() });
            if k == budget.max_iterations {
                break;
            }
            prev = Some((theta, g));
            theta = rec.iterate(k + 1, theta - m * g, "iterate")?;
        }
        Ok(())
    })();
    rec.finish(out)
}

/// Adaptive step from local gradient differences:
/// `m_k = min{√(1 + w_{k-1}) m_{k-1}, |Δθ| / (2|ΔḞ|)}`, `w_k = m_k / m_{k-1}`, `w_0 = ∞`.
pub fn run_lipschitz_approx(obj: &Objective, theta0: f64, m0: f64, budget: RunBudget) -> Trace {
    let mut rec = Recorder::new(obj, budget, "lipapprox", &[("m0", m0), ("theta0", theta0)]);
    let out = (|| -> Step<()> {
        require(m0 > 0.0 && m0.is_finite(), || format!("initial step m0 = {m0} must be positive"))?;
        let mut theta = theta0;
        let mut m = m0;
        let mut w = f64::INFINITY;
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..=budget.max_iterations {
            let g = oracle(k, rec.obj().grad(theta))?;
            if let Some((tp, gp)) = prev {
                let dg = (g - gp).abs();
                if dg == 0.0 {
                    rec.push(theta, None, Some(g), Vec::new(), Control::default());
                    return Err(Flag::DivisionByZero { k, what: "gradient difference is zero".into() });
                }
                let growth = (1.0 + w).sqrt() * m;
                let local = (theta - tp).abs() / (2.0 * dg);
                let next = finite(k, growth.min(local), "step size")?;
                w = next / m;
                m = next;
            }
            let control = Control { step_size: Some(m), w_k: (k > 0).then_some(w), ..Control::default() };
            rec.push(theta, None, Some(g), Vec::new(), control);
            if k == budget.max_iterations {
                break;
            }
            prev = Some((theta, g));
            theta = rec.iterate(k + 1, theta - m * g, "iterate")?;
        }
        Ok(())
    })();
    rec.finish(out)
}

/// WNGrad: `θ_k = θ_{k-1} - Ḟ(θ_{k-1}) / b_{k-1}`, `b_k = b_{k-1} + Ḟ(θ_k)² / b_{k-1}`.
pub fn run_wngrad(obj: &Objective, theta0: f64, b0: f64, budget: RunBudget) -> Trace {
    let mut rec = Recorder::new(obj, budget, "wngrad", &[("b0", b0), ("theta0", theta0)]);
    let out = (|| -> Step<()> {
        require(b0 > 0.0 && b0.is_finite(), || format!("b0 = {b0} must be positive"))?;
        let mut theta = theta0;
        let mut b = b0;
        for k in 0..=budget.max_iterations {
            let g = oracle(k, rec.obj().grad(theta))?;
            if k > 0 {
                b = finite(k, b + g * g / b, "b_k")?;
            }
            rec.push(
                theta,
                None,
                Some(g),
                Vec::new(),
                Control { step_size: Some(1.0 / b), b_k: Some(b), ..Control::default() },
            );
            if k == budget.max_iterations {
                break;
            }
            theta = rec.iterate(k + 1, theta - g / b, "iterate")?;
        }
        Ok(())
    })();
    rec.finish(out)
}

/// `w_k = (ζ + Σ_{j≤k} Ḟ(θ_j)²)^μ`, `θ_{k+1} = θ_k - Ḟ(θ_k) / w_k`.
pub fn run_adagrad_like(obj: &Objective, theta0: f64, zeta: f64, mu: f64, budget: RunBudget) -> Trace {
    let mut rec = Recorder::new(obj, budget, "adagrad", &[("mu", mu), ("theta0", theta0), ("zeta", zeta)]);
    let out = (|| -> Step<()> {
        require(zeta > 0.0 && zeta <= 1.0, || format!("zeta = {zeta} must lie in (0, 1]"))?;
        require(mu > 0.0 && mu < 1.0, || format!("mu = {mu} must lie in (0, 1)"))?;
        let mut theta = theta0;
        let mut sum = 0.0;
        for k in 0..=budget.max_iterations {
            let g = oracle(k, rec.obj().grad(theta))?;
            sum = finite(k, sum + g * g, "squared-gradient sum")?;
            let w = (zeta + sum).powf(mu);
            rec.push(
                theta,
                None,
                Some(g),
                Vec::new(),
                Control { step_size: Some(1.0 / w), w_k: Some(w), ..Control::default() },
            );
            if k == budget.max_iterations {
                break;
            }
            theta = rec.iterate(k + 1, theta - g / w, "iterate")?;
        }
        Ok(())
    })();
    rec.finish(out)
}

/// Polyak step: `m_k = (F(θ_k) - F_lb) / Ḟ(θ_k)²`.
pub fn run_polyak(obj: &Objective, theta0: f64, f_lower_bound: f64, budget: RunBudget) -> Trace {
    let mut rec = Recorder::new(obj, budget, "polyak", &[("f_lb", f_lower_bound), ("theta0", theta0)]);
    let out = (|| -> Step<()> {
        require(f_lower_bound.is_finite(), || "lower bound must be finite".into())?;
        let mut theta = theta0;
        for k in 0..=budget.max_iterations {
            let f = oracle(k, rec.obj().eval(theta))?;
            let g = oracle(k, rec.obj().grad(theta))?;
            if g == 0.0 {
                rec.push(theta, Some(f), Some(g), Vec::new(), Control::default());
                return Err(if f <= f_lower_bound { Flag::Terminated { k } } else { Flag::ZeroGradient { k } });
            }
            let m = finite(k, (f - f_lower_bound) / (g * g), "step size")?;
            rec.push(theta, Some(f), Some(g), Vec::new(), Control { step_size: Some(m), ..Control::default() });
            if k == budget.max_iterations {
                break;
            }
            theta = rec.iterate(k + 1, theta - m * g, "iterate")?;
        }
        Ok(())
    })();
    rec.finish(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{AnchorSpec, ChainedObjective, Flat, Quadratic, Quartic, SlopeRule};
    use crate::optimizers::testutil::assert_monotone_counters;
    use proptest::prelude::*;

    fn chained(spec: AnchorSpec) -> Objective {
        Objective::new(ChainedObjective::new(spec).unwrap())
    }

    #[test]
    fn constant_on_quartic() {
        let obj = Objective::new(Quartic);
        let t = run_constant_gd(&obj, 0.0, 0.1, RunBudget::new(5));
        assert!(t.thetas().iter().all(|&x| x == 0.0));
        let t = run_constant_gd(&obj.fresh(), 5.0, 0.1, RunBudget::new(1));
        assert_eq!(t.iterations[1].theta, -7.5);
        assert_eq!(t.last().unwrap().cum_obj_evals, 0);
    }

    #[test]
    fn constant_overflow_is_flagged() {
        let obj = Objective::new(Quartic);
        let t = run_constant_gd(&obj, 6.0, 0.1, RunBudget::new(50));
        assert!(matches!(t.flags.last(), Some(Flag::Overflow { .. })), "{:?}", t.flags);
        assert!(t.iterations.len() < 51);
        let abs: Vec<f64> = t.thetas().iter().map(|x| x.abs()).collect();
        assert!(abs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn bb_tracks_arithmetic_anchors() {
        for m0 in [1.0, 0.5] {
            let obj = chained(AnchorSpec::Arithmetic { start: 0.0, step: m0, slopes: SlopeRule::Geometric(0.5) });
            let t = run_bb(&obj, 0.0, m0, RunBudget::new(10));
            for (j, th) in t.thetas().iter().enumerate() {
                assert_eq!(*th, m0 * j as f64);
            }
            assert_eq!(obj.counts().obj, 0);
        }
    }

    #[test]
    fn bb_on_quadratic() {
        let obj = Objective::new(Quadratic::default());
        let t = run_bb(&obj, 1.0, 1.0, RunBudget::new(3));
        assert_eq!(t.iterations[1].theta, 0.0);
    }

    #[test]
    fn bb_flags_equal_gradients() {
        let obj = Objective::new(Flat { level: 1.0 });
        let t = run_bb(&obj, 1.0, 1.0, RunBudget::new(3));
        assert!(matches!(t.flags[0], Flag::DivisionByZero { k: 1, .. }));
    }

    #[test]
    fn lipschitz_approx_scenario() {
        let r = 5f64.sqrt();
        let obj = chained(AnchorSpec::GeometricIncrement {
            scale: 1.0,
            ratio: r / 2.0,
            slopes: SlopeRule::Geometric(r / (r + 1.0)),
        });
        let t = run_lipschitz_approx(&obj, 0.0, 1.0, RunBudget::new(12));
        assert_eq!(t.iterations[1].theta, 1.0);
        assert!((t.iterations[1].control.step_size.unwrap() - (r + 1.0) / 2.0).abs() < 1e-12);
        assert!((t.iterations[2].theta - (1.0 + r / 2.0)).abs() < 1e-12);
        assert!(t.flags.is_empty(), "{:?}", t.flags);
    }

    #[test]
    fn wngrad_scenario() {
        let obj = chained(AnchorSpec::Wngrad { b0: 1.0 });
        let t = run_wngrad(&obj, 0.0, 1.0, RunBudget::new(40));
        assert_eq!(t.iterations[1].theta, 1.0);
        assert_eq!(t.iterations[1].control.b_k, Some(2.0));
        assert_eq!(t.iterations[2].theta, 1.5);
        let b1 = 2.0;
        for it in &t.iterations[1..] {
            let b = it.control.b_k.unwrap();
            assert!((1.0..=it.k as f64 * b1).contains(&b));
        }
        let anchors = AnchorSpec::Wngrad { b0: 1.0 }.take(41).unwrap();
        for (it, (s, _)) in t.iterations.iter().zip(anchors) {
            assert_eq!(it.theta, s);
        }
    }

    #[test]
    fn flat_objective_is_fixed_point() {
        let obj = Objective::new(Flat::default());
        let t = run_wngrad(&obj, 3.0, 2.0, RunBudget::new(5));
        assert!(t.iterations.iter().all(|it| it.theta == 3.0 && it.control.b_k == Some(2.0)));
        let t = run_adagrad_like(&obj, 3.0, 1.0, 0.5, RunBudget::new(5));
        assert!(t.thetas().iter().all(|&x| x == 3.0));
    }

    #[test]
    fn adagrad_scenario() {
        let obj = chained(AnchorSpec::Adagrad { zeta: 1.0, mu: 0.5 });
        let t = run_adagrad_like(&obj, 0.0, 1.0, 0.5, RunBudget::new(30));
        assert_eq!(t.iterations[0].control.w_k, Some(2f64.sqrt()));
        assert!((t.iterations[1].theta - 0.5f64.sqrt()).abs() < 1e-15);
        for w in t.iterations.windows(2) {
            let j = w[0].k as f64;
            assert!((w[1].theta - w[0].theta - (2.0 + j).powf(-0.5)).abs() < 1e-12);
        }
        let anchors = AnchorSpec::Adagrad { zeta: 1.0, mu: 0.5 }.take(31).unwrap();
        for (it, (s, _)) in t.iterations.iter().zip(anchors) {
            assert_eq!(it.theta, s);
        }
    }

    #[test]
    fn polyak_scenario_and_quadratic() {
        let obj = chained(AnchorSpec::Polyak);
        let t = run_polyak(&obj, 1.0, -31.0 / 2048.0, RunBudget::new(8));
        assert!((t.iterations[1].theta - 6.37890625).abs() < 1e-12);
        for w in t.iterations.windows(2) {
            assert!(w[1].theta - w[0].theta >= 1.0);
        }
        assert_eq!(t.last().unwrap().cum_obj_evals, 9);

        let q = Objective::new(Quadratic::default());
        let t = run_polyak(&q, 2.0, 0.0, RunBudget::new(1));
        assert_eq!(t.iterations[1].theta, 1.0);
    }

    #[test]
    fn polyak_stops_at_minimizer() {
        let q = Objective::new(Quadratic::default());
        let t = run_polyak(&q, 0.0, 0.0, RunBudget::new(3));
        assert_eq!(t.flags, vec![Flag::Terminated { k: 0 }]);
    }

    #[test]
    fn invalid_parameters_are_flagged() {
        let obj = Objective::new(Quadratic::default());
        let t = run_constant_gd(&obj, 1.0, -1.0, RunBudget::new(3));
        assert!(t.iterations.is_empty());
        assert!(matches!(t.flags[0], Flag::Invalid { .. }));
        assert!(run_adagrad_like(&obj, 0.0, 2.0, 0.5, RunBudget::new(1)).failed());
    }

    proptest! {
        #[test]
        fn objective_free_methods_never_evaluate(theta0 in -3.0f64..3.0, m in 0.01f64..2.0) {
            let obj = Objective::new(Quadratic { curvature: 1.5 });
            let traces = [
                run_constant_gd(&obj, theta0, m, RunBudget::new(10)),
                run_bb(&obj, theta0, m, RunBudget::new(10)),
                run_lipschitz_approx(&obj, theta0, m, RunBudget::new(10)),
                run_wngrad(&obj, theta0, m, RunBudget::new(10)),
                run_adagrad_like(&obj, theta0, 0.5, 0.5, RunBudget::new(10)),
            ];
            prop_assert_eq!(obj.counts().obj, 0);
            for t in &traces {
                assert_monotone_counters(t);
                prop_assert!(t.iterations.iter().all(|it| it.cum_obj_evals == 0));
            }
        }

        #[test]
        fn quartic_divergence(m in 0.01f64..1.0, extra in 0.01f64..1.0) {
            let theta0 = ((2.0 / m) + extra).sqrt();
            let obj = Objective::new(Quartic);
            let t = run_constant_gd(&obj, theta0, m, RunBudget::new(8));
            let abs: Vec<f64> = t.thetas().iter().map(|x| x.abs()).collect();
            prop_assert!(abs.windows(2).all(|w| w[1] > w[0]));
        }

        #[test]
        fn runs_are_deterministic(theta0 in -2.0f64..2.0) {
            let a = run_bb(&Objective::new(Quartic), theta0, 0.3, RunBudget::new(20));
            let b = run_bb(&Objective::new(Quartic), theta0, 0.3, RunBudget::new(20));
            prop_assert_eq!(a, b);
        }
    }
}

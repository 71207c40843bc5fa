//! Nesterov's accelerated gradient method.

use super::{oracle, require, Control, Probe, ProbeKind, Recorder, RunBudget, Step, Trace};
use crate::objective::{NagState, Objective};

/// `y_t = θ_t + (1 - A_t/A_{t+1})(z_t - θ_t)`, `θ_{t+1} = y_t - m Ḟ(y_t)`,
/// `z_{t+1} = z_t - m(A_{t+1} - A_t) Ḟ(y_t)`.
///
/// Iteration `t` records `θ_t` with probes `y_t` (carrying the counted
/// gradient) and `z_t`; the gradient is never taken at `θ_t` itself.
pub fn run_nag(obj: &Objective, theta0: f64, m: f64, budget: RunBudget) -> Trace {
    let mut rec = Recorder::new(obj, budget, "nag", &[("m", m), ("theta0", theta0)]);
    let out = (|| -> Step<()> {
        require(m > 0.0 && m.is_finite(), || format!("step m = {m} must be positive"))?;
        let mut st = NagState::new(m, theta0);
        for t in 0..=budget.max_iterations {
            let y = rec.iterate(t, st.y, "y_t")?;
            let z = rec.iterate(t, st.z, "z_t")?;
            let g = oracle(t, rec.obj().grad(y))?;
            let probes = vec![
                Probe { kind: ProbeKind::NagY, theta: y, f: None, grad: Some(g) },
                Probe::point(ProbeKind::NagZ, z),
            ];
            rec.push(
                st.theta,
                None,
                None,
                probes,
                Control { step_size: Some(m), b_k: Some(st.sched.b), ..Control::default() },
            );
            if t == budget.max_iterations {
                break;
            }
            st.step(g);
            rec.iterate(t + 1, st.theta, "iterate")?;
        }
        Ok(())
    })();
    rec.finish(out)
}

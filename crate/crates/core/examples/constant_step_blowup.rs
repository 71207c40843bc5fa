//! Constant-step descent on θ⁴/4 from θ0² > 2/m: |θ|, F and |F'| all explode
//! until the iterate leaves the double range.

use grad_adversary::objective::{Objective, Quartic};
use grad_adversary::optimizers::{run_constant_gd, RunBudget};

fn main() {
    for m in [0.01, 0.1, 1.0] {
        let theta0 = (2.0f64 / m).sqrt().ceil() + 1.0;
        let obj = Objective::new(Quartic);
        let mut trace = run_constant_gd(&obj, theta0, m, RunBudget::new(30));
        trace.annotate(&obj);
        println!("m = {m}, theta0 = {theta0}");
        for it in &trace.iterations {
            println!("  k={:>2} theta={:>12.4e} F={:>12.4e}", it.k, it.theta, it.value().unwrap_or(f64::NAN));
        }
        for f in &trace.flags {
            println!("  stopped: {f}");
        }
    }
}

//! Backtracking line search needs 2^j objective evaluations to reach θ_j.

use std::collections::BTreeMap;

use grad_adversary::scenarios::build_scenario;

fn main() {
    let s = build_scenario("armijo", &BTreeMap::new()).unwrap();
    let j = s.max_feasible_j();
    println!("max feasible J in double precision: {j}");
    let trace = s.run(j).unwrap();
    for it in &trace.iterations {
        println!("k={} theta={:<24} evals={:>4} step={:?}", it.k, it.theta, it.cum_obj_evals, it.control.step_size);
    }
    match s.run(j + 1) {
        Err(e) => println!("J = {}: {e}", j + 1),
        Ok(_) => println!("J = {} unexpectedly feasible", j + 1),
    }
}

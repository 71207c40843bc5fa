//! Cubic-regularized Newton, adaptive cubic regularization and the dynamic
//! method each spend 2^j evaluations on their penalty searches.

use std::collections::BTreeMap;

use grad_adversary::scenarios::build_scenario;
use grad_adversary::verify::{check_eval_growth, verify_scenario};

fn main() {
    for (name, kv) in [("cubic_newton", vec![]), ("acr", vec![("delta2", 2.0)]), ("dynamic", vec![])] {
        let params: BTreeMap<String, f64> = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let s = build_scenario(name, &params).unwrap();
        let j = s.max_feasible_j().min(8);
        let trace = s.run(j).unwrap();
        let counts: Vec<u64> = trace.iterations.iter().map(|it| it.cum_obj_evals).collect();
        println!("{name} {:?}: evals {counts:?}", s.params());
        println!("  {}", check_eval_growth(&trace, 2).summary());
        let report = verify_scenario(&s, j, 1e-9).unwrap();
        println!("  all claims hold: {}", report.pass);
    }
}

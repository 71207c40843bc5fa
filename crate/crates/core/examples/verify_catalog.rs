//! Verifies every scenario at its default length and prints one line per claim.

use std::collections::BTreeMap;

use grad_adversary::scenarios::{build_scenario, catalog, DEFAULT_LANDING_TOL};
use grad_adversary::verify::verify_scenario;

fn main() {
    for name in catalog() {
        let s = build_scenario(name, &BTreeMap::new()).unwrap();
        let steps = s.max_feasible_j().min(15);
        let report = verify_scenario(&s, steps, DEFAULT_LANDING_TOL).unwrap();
        for v in &report.verdicts {
            println!("{name:<13} J={steps:<2} {}", v.summary());
        }
    }
}

//! The first-order and proximal methods driven along their chained objectives.

use std::collections::BTreeMap;

use grad_adversary::scenarios::build_scenario;

fn main() {
    for name in ["bregman", "negcurve", "lipapprox", "wngrad", "adagrad", "polyak"] {
        let s = build_scenario(name, &BTreeMap::new()).unwrap();
        let trace = s.run(15).unwrap();
        let last = trace.last().unwrap();
        let min_grad = trace.iterations.iter().map(|it| it.gradient().unwrap().abs()).fold(f64::INFINITY, f64::min);
        println!(
            "{name:<10} theta_15 = {:<12.6} F = {:<10.6} min|F'| = {min_grad:.4}  ({})",
            last.theta,
            last.value().unwrap(),
            s.summary()
        );
    }
}

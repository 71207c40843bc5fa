//! Barzilai-Borwein steps walk the anchors θ_j = j while F keeps climbing.

use std::collections::BTreeMap;

use grad_adversary::scenarios::build_scenario;

fn main() {
    let s = build_scenario("bb", &BTreeMap::new()).expect("default bb parameters");
    let trace = s.run(20).expect("20 steps are feasible");
    println!("{:>3} {:>8} {:>12} {:>12}", "k", "theta", "F", "F'");
    for it in &trace.iterations {
        println!("{:>3} {:>8.3} {:>12.6} {:>12.3e}", it.k, it.theta, it.value().unwrap(), it.gradient().unwrap());
    }
    let last = trace.last().unwrap();
    println!("F(theta_20) = {:.6} >= 7*20/16 = {}", last.value().unwrap(), 7.0 * 20.0 / 16.0);
}

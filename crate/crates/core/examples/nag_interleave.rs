//! Nesterov's iterates and extrapolation points land on alternating anchors,
//! and the gradient has unit magnitude at all of them.

use std::collections::BTreeMap;

use grad_adversary::optimizers::ProbeKind;
use grad_adversary::scenarios::build_scenario;

fn main() {
    let s = build_scenario("nag", &BTreeMap::new()).unwrap();
    let trace = s.run(12).unwrap();
    let anchors = s.expected_anchors(2 * 12).unwrap();
    println!("anchors S_0..S_6: {:?}", &anchors[..7]);
    for it in &trace.iterations {
        let y = it.probes.iter().find(|p| p.kind == ProbeKind::NagY).unwrap();
        println!(
            "k={:>2} theta={:<22} y={:<22} |F'(theta)|={} |F'(y)|={}",
            it.k,
            it.theta,
            y.theta,
            it.gradient().unwrap().abs(),
            y.grad.unwrap().abs()
        );
    }
}

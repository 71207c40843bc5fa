//! Writes a Polyak trace as JSON and CSV and reads the JSON back.

use std::collections::BTreeMap;

use grad_adversary::export::{trace_from_json, trace_to_csv, trace_to_json};
use grad_adversary::scenarios::build_scenario;

fn main() {
    let trace = build_scenario("polyak", &BTreeMap::new()).unwrap().run(4).unwrap();
    let json = trace_to_json(&trace).unwrap();
    println!("{json}");
    println!("{}", trace_to_csv(&trace).unwrap());
    let back = trace_from_json(&json).unwrap();
    assert_eq!(back.thetas(), trace.thetas());
    println!("round trip preserved {} iterates", back.iterations.len());
}

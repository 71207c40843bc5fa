//! The ratio ‖F̈‖/‖Ḟ‖² for four statistical models along paths where the
//! gradient grows without bound.

use grad_adversary::audit::{probe_path, Model, ModelObjective, PathSpec};

fn main() {
    let cases = [
        (Model::FactorAnalysis { x: 1.0 }, "geometric:1e-1,0.1,8"),
        (Model::Gee { y: 2.0 }, "geometric:1e-2,0.1,8"),
        (Model::InvGaussian { y: 1.0 }, "geometric:-1e-1,0.25,20"),
        (Model::Ffnn, "linear:10,10,10"),
    ];
    for (model, path) in cases {
        let path: PathSpec = path.parse().unwrap();
        let obj = ModelObjective::new(model);
        let report = probe_path(&obj, &path);
        println!("{model} along {path}");
        for s in &report.samples {
            match (s.grad_norm, s.ratio) {
                (Some(g), Some(r)) => println!("  s={:>10.3e} |F'|={:>10.3e} ratio={:>10.4e}", s.s, g, r),
                _ => println!("  s={:>10.3e} skipped: {}", s.s, s.error.as_deref().unwrap_or("")),
            }
        }
        if let Some(t) = &report.trend {
            println!("  trend: slope {:.3}, last ratio {:.4e}, {:?}", t.slope, t.last_ratio, t.monotone);
        }
        let c = obj.counts();
        println!("  oracle calls: grad {} hess {}", c.grad, c.hess);
    }
}

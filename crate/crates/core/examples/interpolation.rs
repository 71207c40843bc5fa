//! Degree-9 polynomial with prescribed value, slope and curvature at the
//! center and zero targets at ±m.

use grad_adversary::objective::{solve_interpolation, InterpTargets};

fn main() {
    let m = 0.75;
    let targets = InterpTargets::centered(-2.0, -1.0, 0.5);
    let p = solve_interpolation(m, &targets).unwrap();
    for (i, c) in p.c.iter().enumerate() {
        println!("c{i} = {c:+.12e}");
    }
    for x in [-m, 0.0, m] {
        println!("x={x:+}: P={:+.3e} P'={:+.3e} P''={:+.3e}", p.eval(x, 0), p.eval(x, 1), p.eval(x, 2));
    }
    println!("max residual {:.3e}", p.max_residual(m, &targets));
}

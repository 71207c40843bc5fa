//! Global minimization of the one-dimensional cubic-regularized model.

use serde::{Deserialize, Serialize};

/// Scaling of the cubic term: `penalty·|s|³/6` or `penalty·|s|³/3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CubicConvention {
    Sixth,
    Third,
}

impl CubicConvention {
    fn divisor(self) -> f64 {
        match self {
            CubicConvention::Sixth => 6.0,
            CubicConvention::Third => 3.0,
        }
    }
}

/// `g·s + h·s²/2 + penalty·|s|³/(6 or 3)`.
pub fn cubic_model(s: f64, g: f64, h: f64, penalty: f64, conv: CubicConvention) -> f64 {
    g * s + 0.5 * h * s * s + penalty / conv.divisor() * s.abs().powi(3)
}

/// Global minimizer of [`cubic_model`] over the real line.
///
/// With `h = 0` the closed forms `√(-2g/M)` and `√(-g/σ)` (and their mirror
/// images for `g > 0`) are returned directly.
pub fn cubic_subproblem_1d(g: f64, h: f64, penalty: f64, conv: CubicConvention) -> f64 {
    assert!(penalty > 0.0, "cubic penalty must be positive, got {penalty}");
    if g == 0.0 && h >= 0.0 {
        return 0.0;
    }
    if h == 0.0 {
        return match conv {
            CubicConvention::Sixth if g < 0.0 => (-2.0 * g / penalty).sqrt(),
            CubicConvention::Sixth => -(2.0 * g / penalty).sqrt(),
            CubicConvention::Third if g < 0.0 => (-g / penalty).sqrt(),
            CubicConvention::Third => -(g / penalty).sqrt(),
        };
    }
    // stationarity: a s² + h s + g = 0 for s ≥ 0, and a r² + h r - g = 0 for s = -r ≤ 0
    let a = 3.0 * penalty / conv.divisor();
    let mut candidates = vec![0.0];
    for r in quadratic_roots(a, h, g) {
        if r >= 0.0 {
            candidates.push(r);
        }
    }
    for r in quadratic_roots(a, h, -g) {
        if r >= 0.0 {
            candidates.push(-r);
        }
    }
    let model = |s: f64| cubic_model(s, g, h, penalty, conv);
    candidates
        .into_iter()
        .filter(|s| s.is_finite())
        .min_by(|x, y| model(*x).total_cmp(&model(*y)).then(x.abs().total_cmp(&y.abs())))
        .unwrap_or(0.0)
}

/// Real roots of `a x² + b x + c` with `a > 0`, avoiding cancellation.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 || !disc.is_finite() {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut out = vec![q / a];
    if q != 0.0 {
        out.push(c / q);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn documented_values() {
        assert_eq!(cubic_subproblem_1d(-2.0, 0.0, 2.0, CubicConvention::Third), 1.0);
        assert_eq!(cubic_subproblem_1d(-2.0, 0.0, 4.0, CubicConvention::Sixth), 1.0);
        assert_eq!(cubic_subproblem_1d(0.0, 1.0, 3.0, CubicConvention::Sixth), 0.0);
        assert_eq!(cubic_subproblem_1d(2.0, 0.0, 2.0, CubicConvention::Third), -1.0);
    }

    #[test]
    fn negative_curvature_without_slope_moves() {
        let s = cubic_subproblem_1d(0.0, -2.0, 1.0, CubicConvention::Third);
        assert!((s.abs() - 2.0).abs() < 1e-12, "{s}");
        assert!(cubic_model(s, 0.0, -2.0, 1.0, CubicConvention::Third) < 0.0);
    }

    #[test]
    fn beats_dense_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let g: f64 = rng.gen_range(-10.0..10.0);
            let h: f64 = rng.gen_range(-10.0..10.0);
            let p: f64 = rng.gen_range(0.01..10.0);
            let conv = if rng.gen_bool(0.5) { CubicConvention::Sixth } else { CubicConvention::Third };
            let s = cubic_subproblem_1d(g, h, p, conv);
            let best = cubic_model(s, g, h, p, conv);
            let r = 10.0 * s.abs() + 1.0;
            for i in 0..=10_000 {
                let x = -r + 2.0 * r * i as f64 / 10_000.0;
                let v = cubic_model(x, g, h, p, conv);
                assert!(best <= v + 1e-9 * v.abs().max(1.0), "g={g} h={h} p={p}: s={s} ({best}) vs x={x} ({v})");
            }
        }
    }

    proptest! {
        #[test]
        fn stationary_at_nonzero_minimizer(g in -5.0f64..5.0, h in -5.0f64..5.0, p in 0.1f64..5.0) {
            let s = cubic_subproblem_1d(g, h, p, CubicConvention::Sixth);
            if s != 0.0 {
                let d = g + h * s + p / 2.0 * s * s.abs();
                prop_assert!(d.abs() <= 1e-9 * (g.abs() + h.abs() * s.abs() + p * s * s).max(1.0));
            }
        }
    }
}

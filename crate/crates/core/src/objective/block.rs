//! The seven-branch building block on `[0, m]`.
//!
//! Entry slope is `-d`, exit slope is `-δ`, and the net ascent over the block is at
//! least `7m/16`. Every branch is jointly degree-1 homogeneous in `(θ, m)`.

use super::ObjectiveError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockParams {
    pub m: f64,
    pub d: f64,
    pub delta: f64,
}

impl BlockParams {
    pub fn new(m: f64, d: f64, delta: f64) -> Result<Self, ObjectiveError> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(ObjectiveError::InvalidParameter(format!("block length m = {m} must be positive and finite")));
        }
        for (name, v) in [("d", d), ("delta", delta)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(ObjectiveError::InvalidParameter(format!("{name} = {v} must lie in (0, 1]")));
            }
        }
        Ok(BlockParams { m, d, delta })
    }

    /// Branch boundaries, left to right.
    pub fn knots(&self) -> [f64; 5] {
        let m = self.m;
        [(2.0 - self.d) * m / 16.0, 3.0 * m / 16.0, m / 2.0, 13.0 * m / 16.0, (self.delta + 14.0) * m / 16.0]
    }

    /// Value at `θ = m`.
    pub fn rise(&self) -> f64 {
        let (m, d, e) = (self.m, self.d, self.delta);
        -e * m + m * (22.0 + d * d + e * e - 4.0 * d + 28.0 * e) / 32.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    Descent,
    Valley,
    RiseLeft,
    Plateau,
    RiseRight,
    Crest,
    Exit,
}

fn branch(theta: f64, p: &BlockParams) -> Result<Branch, ObjectiveError> {
    if !(theta >= 0.0 && theta <= p.m) {
        return Err(ObjectiveError::Domain { theta, lo: 0.0, hi: p.m });
    }
    let [k1, k2, k3, k4, k5] = p.knots();
    Ok(if theta < k1 {
        Branch::Descent
    } else if theta < k2 {
        Branch::Valley
    } else if theta < k3 {
        Branch::RiseLeft
    } else if theta == k3 {
        Branch::Plateau
    } else if theta < k4 {
        Branch::RiseRight
    } else if theta < k5 {
        Branch::Crest
    } else {
        Branch::Exit
    })
}

fn mid_level(p: &BlockParams) -> f64 {
    p.m * (11.0 + p.d * p.d - 4.0 * p.d) / 32.0
}

/// `u = θ/m − 1/2` and `exp(±(5/16)/u + 1)` for the two exponential branches.
fn exp_part(theta: f64, p: &BlockParams, sign: f64) -> (f64, f64) {
    let u = theta / p.m - 0.5;
    (u, (sign * (5.0 / 16.0) / u + 1.0).exp())
}

pub fn eval_block(theta: f64, p: &BlockParams) -> Result<f64, ObjectiveError> {
    let (m, d, e) = (p.m, p.d, p.delta);
    Ok(match branch(theta, p)? {
        Branch::Descent => -d * theta,
        Branch::Valley => {
            let s = theta - m / 8.0;
            8.0 / m * s * s - m * (4.0 * d - d * d) / 32.0
        }
        Branch::RiseLeft => {
            let (_, ex) = exp_part(theta, p, 1.0);
            -5.0 * m / 16.0 * ex + mid_level(p)
        }
        Branch::Plateau => mid_level(p),
        Branch::RiseRight => {
            let (_, ex) = exp_part(theta, p, -1.0);
            5.0 * m / 16.0 * ex + mid_level(p)
        }
        Branch::Crest => {
            let s = theta - 7.0 * m / 8.0;
            -8.0 / m * s * s + m * (22.0 + d * d - 4.0 * d) / 32.0
        }
        Branch::Exit => -e * theta + m * (22.0 + d * d + e * e - 4.0 * d + 28.0 * e) / 32.0,
    })
}

/// One-sided at the ends: `-d` at 0 and `-δ` at `m`.
pub fn grad_block(theta: f64, p: &BlockParams) -> Result<f64, ObjectiveError> {
    let m = p.m;
    Ok(match branch(theta, p)? {
        Branch::Descent => -p.d,
        Branch::Valley => 16.0 / m * (theta - m / 8.0),
        Branch::RiseLeft => {
            let (u, ex) = exp_part(theta, p, 1.0);
            25.0 / 256.0 * ex / (u * u)
        }
        Branch::Plateau => 0.0,
        Branch::RiseRight => {
            let (u, ex) = exp_part(theta, p, -1.0);
            25.0 / 256.0 * ex / (u * u)
        }
        Branch::Crest => -16.0 / m * (theta - 7.0 * m / 8.0),
        Branch::Exit => -p.delta,
    })
}

/// Second derivative, taking the right limit at knots.
pub fn hess_block(theta: f64, p: &BlockParams) -> Result<f64, ObjectiveError> {
    let m = p.m;
    Ok(match branch(theta, p)? {
        Branch::Descent | Branch::Exit | Branch::Plateau => 0.0,
        Branch::Valley => 16.0 / m,
        Branch::RiseLeft => {
            let (u, ex) = exp_part(theta, p, 1.0);
            let u3 = u * u * u;
            if ex == 0.0 {
                0.0
            } else {
                25.0 / 256.0 * ex / m * (-(5.0 / 16.0) / (u3 * u) - 2.0 / u3)
            }
        }
        Branch::RiseRight => {
            let (u, ex) = exp_part(theta, p, -1.0);
            let u3 = u * u * u;
            if ex == 0.0 {
                0.0
            } else {
                25.0 / 256.0 * ex / m * ((5.0 / 16.0) / (u3 * u) - 2.0 / u3)
            }
        }
        Branch::Crest => -16.0 / m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit() -> BlockParams {
        BlockParams::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn documented_values() {
        let p = unit();
        assert_eq!(eval_block(0.05, &p).unwrap(), -0.05);
        assert_eq!(eval_block(0.5, &p).unwrap(), 0.25);
        assert!((eval_block(1.0, &p).unwrap() - 0.5).abs() < 1e-15);
        assert!(eval_block(1.0, &p).unwrap() >= 7.0 / 16.0);
        assert_eq!(grad_block(0.05, &p).unwrap(), -1.0);
        assert_eq!(grad_block(0.5, &p).unwrap(), 0.0);
        assert!((grad_block(13.0 / 16.0, &p).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn one_sided_slopes_at_ends() {
        let p = BlockParams::new(3.0, 0.4, 0.7).unwrap();
        assert_eq!(grad_block(0.0, &p).unwrap(), -0.4);
        assert_eq!(grad_block(3.0, &p).unwrap(), -0.7);
        assert_eq!(hess_block(0.0, &p).unwrap(), 0.0);
        assert_eq!(hess_block(3.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(BlockParams::new(0.0, 1.0, 1.0).is_err());
        assert!(BlockParams::new(1.0, 0.0, 1.0).is_err());
        assert!(BlockParams::new(1.0, 1.0, 1.5).is_err());
        assert!(matches!(eval_block(1.5, &unit()), Err(ObjectiveError::Domain { .. })));
        assert!(grad_block(-0.1, &unit()).is_err());
    }

    #[test]
    fn rise_matches_value_at_end() {
        let p = BlockParams::new(2.5, 0.3, 0.9).unwrap();
        assert_eq!(p.rise(), eval_block(2.5, &p).unwrap());
    }

    fn limits_agree(p: &BlockParams) {
        for (i, k) in p.knots().into_iter().enumerate() {
            let (lo, hi) = (k.next_down(), k);
            let left = eval_block(lo, p).unwrap();
            let right = eval_block(hi, p).unwrap();
            assert!((left - right).abs() <= 1e-10 * p.m.max(1.0), "knot {i} at {k}: {left} vs {right}");
            let gl = grad_block(lo, p).unwrap();
            let gr = grad_block(hi, p).unwrap();
            assert!((gl - gr).abs() <= 1e-9 * p.m.max(1.0), "slope jump at knot {i}: {gl} vs {gr}");
        }
    }

    #[test]
    fn continuous_at_knots() {
        limits_agree(&unit());
        limits_agree(&BlockParams::new(0.01, 0.2, 0.05).unwrap());
        limits_agree(&BlockParams::new(1e4, 0.999, 0.5).unwrap());
    }

    fn near_knot(theta: f64, p: &BlockParams) -> bool {
        let r = 1e-6 * p.m;
        theta < r || theta > p.m - r || p.knots().iter().any(|k| (theta - k).abs() < r)
    }

    #[test]
    fn gradient_matches_central_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let p = BlockParams::new(rng.gen_range(0.1..10.0), rng.gen_range(0.01..=1.0), rng.gen_range(0.01..=1.0))
                .unwrap();
            let h = 1e-6 * p.m;
            let mut checked = 0;
            while checked < 1000 {
                let theta = rng.gen_range(0.0..p.m);
                if near_knot(theta, &p) {
                    continue;
                }
                let fd = (eval_block(theta + h, &p).unwrap() - eval_block(theta - h, &p).unwrap()) / (2.0 * h);
                let g = grad_block(theta, &p).unwrap();
                assert!((g - fd).abs() <= 1e-4 * g.abs().max(1.0), "theta {theta}: {g} vs {fd} for {p:?}");
                let hfd = (grad_block(theta + h, &p).unwrap() - grad_block(theta - h, &p).unwrap()) / (2.0 * h);
                let hs = hess_block(theta, &p).unwrap();
                assert!(
                    (hs - hfd).abs() <= 1e-4 * hs.abs().max(1.0) * p.m.recip().max(1.0),
                    "hessian at {theta}: {hs} vs {hfd}"
                );
                checked += 1;
            }
        }
    }

    #[test]
    fn lower_bound_on_dense_grid() {
        for &(m, d, e) in &[(1.0, 1.0, 1.0), (0.3, 0.1, 0.9), (50.0, 0.5, 0.01)] {
            let p = BlockParams::new(m, d, e).unwrap();
            for i in 0..=100_000 {
                let theta = m * i as f64 / 100_000.0;
                assert!(eval_block(theta, &p).unwrap() >= -m / 8.0 - 1e-15 * m);
            }
            assert!(p.rise() >= 7.0 * m / 16.0);
        }
    }

    proptest! {
        #[test]
        fn homogeneous_of_degree_one(
            m in 0.01f64..100.0,
            d in 0.001f64..=1.0,
            e in 0.001f64..=1.0,
            frac in 0.0f64..=1.0,
            c in 0.01f64..100.0,
        ) {
            let p = BlockParams::new(m, d, e).unwrap();
            let q = BlockParams::new(c * m, d, e).unwrap();
            let theta = frac * m;
            // cθ can leave [0, cm] by one ulp
            let scaled = (c * theta).min(q.m);
            prop_assume!(branch(theta, &p).unwrap() == branch(scaled, &q).unwrap());
            let lhs = eval_block(scaled, &q).unwrap();
            let rhs = c * eval_block(theta, &p).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(c * m), "{} vs {}", lhs, rhs);
        }

        #[test]
        fn bounded_below_and_ascends(
            m in 0.01f64..100.0,
            d in 0.001f64..=1.0,
            e in 0.001f64..=1.0,
            frac in 0.0f64..=1.0,
        ) {
            let p = BlockParams::new(m, d, e).unwrap();
            prop_assert!(eval_block(frac * m, &p).unwrap() >= -m / 8.0 * (1.0 + 1e-14));
            prop_assert!(eval_block(m, &p).unwrap() >= 7.0 * m / 16.0 * (1.0 - 1e-14));
        }
    }
}

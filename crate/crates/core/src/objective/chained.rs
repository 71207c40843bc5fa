//! Staircase objective assembled from building blocks between consecutive anchors.

use std::sync::Mutex;

use super::anchors::{AnchorGenerator, AnchorSpec};
use super::block::{eval_block, grad_block, hess_block, BlockParams};
use super::{ObjectiveError, ScalarFunction};

#[derive(Debug)]
struct Cache {
    gen: AnchorGenerator,
    s: Vec<f64>,
    d: Vec<f64>,
    /// `F(S_j)`
    f: Vec<f64>,
    stop: Option<ObjectiveError>,
}

impl Cache {
    fn extend(&mut self) -> Result<(), ObjectiveError> {
        if let Some(e) = &self.stop {
            return Err(e.clone());
        }
        let last = *self.s.last().expect("at least one anchor");
        let next = match self.gen.next() {
            Some(Ok(p)) => p,
            Some(Err(e)) => {
                self.stop = Some(e.clone());
                return Err(e);
            }
            None => {
                let e = ObjectiveError::BeyondAnchors { theta: f64::INFINITY, last };
                self.stop = Some(e.clone());
                return Err(e);
            }
        };
        let j = self.s.len() - 1;
        let p = BlockParams::new(next.0 - last, self.d[j], next.1)?;
        let value = self.f[j] + eval_block(p.m, &p)?;
        if !value.is_finite() {
            let e = ObjectiveError::Overflow { what: "F(S_j)", index: j + 1 };
            self.stop = Some(e.clone());
            return Err(e);
        }
        self.s.push(next.0);
        self.d.push(next.1);
        self.f.push(value);
        Ok(())
    }

    fn cover(&mut self, theta: f64) -> Result<(), ObjectiveError> {
        while *self.s.last().unwrap() < theta {
            self.extend().map_err(|e| match e {
                ObjectiveError::BeyondAnchors { last, .. } => ObjectiveError::BeyondAnchors { theta, last },
                other => other,
            })?;
        }
        Ok(())
    }

    fn ensure_len(&mut self, n: usize) -> Result<(), ObjectiveError> {
        while self.s.len() < n {
            self.extend()?;
        }
        Ok(())
    }
}

enum Piece {
    Left { s0: f64, d0: f64 },
    Block { t: f64, params: BlockParams, base: f64 },
}

/// `F(θ) = -d_0(θ - S_0)` left of `S_0`, and
/// `F(θ) = f(θ - S_j; S_{j+1} - S_j, d_j, d_{j+1}) + F(S_j)` on `(S_j, S_{j+1}]`.
///
/// Anchors and `F(S_j)` are produced on demand and cached.
#[derive(Debug)]
pub struct ChainedObjective {
    spec: AnchorSpec,
    cache: Mutex<Cache>,
}

impl ChainedObjective {
    pub fn new(spec: AnchorSpec) -> Result<Self, ObjectiveError> {
        spec.validate()?;
        let mut gen = spec.generator();
        let (s0, d0) =
            gen.next().ok_or_else(|| ObjectiveError::InvalidParameter("anchor rule produced no anchors".into()))??;
        let cache = Cache { gen, s: vec![s0], d: vec![d0], f: vec![0.0], stop: None };
        Ok(ChainedObjective { spec, cache: Mutex::new(cache) })
    }

    pub fn spec(&self) -> &AnchorSpec {
        &self.spec
    }

    /// `(S_j, d_j, F(S_j))`.
    pub fn anchor(&self, j: usize) -> Result<(f64, f64, f64), ObjectiveError> {
        let mut c = self.cache.lock().unwrap();
        c.ensure_len(j + 1)?;
        Ok((c.s[j], c.d[j], c.f[j]))
    }

    /// `S_0, ..., S_{n-1}`.
    pub fn anchors(&self, n: usize) -> Result<Vec<f64>, ObjectiveError> {
        let mut c = self.cache.lock().unwrap();
        c.ensure_len(n)?;
        Ok(c.s[..n].to_vec())
    }

    /// Number of anchors generated so far.
    pub fn generated(&self) -> usize {
        self.cache.lock().unwrap().s.len()
    }

    fn piece(&self, theta: f64) -> Result<Piece, ObjectiveError> {
        if theta.is_nan() {
            return Err(ObjectiveError::Domain { theta, lo: f64::NEG_INFINITY, hi: f64::INFINITY });
        }
        let mut c = self.cache.lock().unwrap();
        if theta <= c.s[0] {
            return Ok(Piece::Left { s0: c.s[0], d0: c.d[0] });
        }
        c.cover(theta)?;
        // first index with S >= θ is j + 1
        let j = c.s.partition_point(|&s| s < theta) - 1;
        let m = c.s[j + 1] - c.s[j];
        let params = BlockParams::new(m, c.d[j], c.d[j + 1])?;
        let t = (theta - c.s[j]).clamp(0.0, m);
        Ok(Piece::Block { t, params, base: c.f[j] })
    }
}

impl ScalarFunction for ChainedObjective {
    fn value(&self, theta: f64) -> Result<f64, ObjectiveError> {
        let v = match self.piece(theta)? {
            Piece::Left { s0, d0 } => -d0 * (theta - s0),
            Piece::Block { t, params, base } => eval_block(t, &params)? + base,
        };
        super::finite(v, "objective value")
    }

    fn gradient(&self, theta: f64) -> Result<f64, ObjectiveError> {
        match self.piece(theta)? {
            Piece::Left { d0, .. } => Ok(-d0),
            Piece::Block { t, params, .. } => grad_block(t, &params),
        }
    }

    /// Right limit at knots, so 0 at every anchor.
    fn hessian(&self, theta: f64) -> Result<f64, ObjectiveError> {
        match self.piece(theta)? {
            Piece::Left { .. } => Ok(0.0),
            Piece::Block { t, params, .. } => {
                if t == params.m {
                    Ok(0.0)
                } else {
                    hess_block(t, &params)
                }
            }
        }
    }

    fn has_hessian(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::SlopeRule;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_steps() -> ChainedObjective {
        ChainedObjective::new(AnchorSpec::Arithmetic { start: 0.0, step: 1.0, slopes: SlopeRule::Constant(1.0) })
            .unwrap()
    }

    #[test]
    fn documented_values() {
        let f = unit_steps();
        assert_eq!(f.value(0.0).unwrap(), 0.0);
        assert_eq!(f.gradient(0.0).unwrap(), -1.0);
        assert!((f.value(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(f.value(-2.0).unwrap(), 2.0);
        assert_eq!(f.hessian(3.0).unwrap(), 0.0);
    }

    #[test]
    fn slopes_are_exact_at_anchors() {
        let specs = [
            AnchorSpec::Arithmetic { start: 0.0, step: 1.0, slopes: SlopeRule::Geometric(0.5) },
            AnchorSpec::Nag { m: 0.3 },
            AnchorSpec::Wngrad { b0: 0.5 },
            AnchorSpec::Adagrad { zeta: 0.5, mu: 0.3 },
            AnchorSpec::Polyak,
            AnchorSpec::GeometricIncrement {
                scale: 2.0,
                ratio: 5f64.sqrt() / 2.0,
                slopes: SlopeRule::Geometric(5f64.sqrt() / (5f64.sqrt() + 1.0)),
            },
        ];
        for spec in specs {
            let f = ChainedObjective::new(spec.clone()).unwrap();
            for j in 0..25 {
                let (s, d, fs) = f.anchor(j).unwrap();
                assert_eq!(f.gradient(s).unwrap(), -d, "{spec:?} j={j}");
                assert_eq!(f.hessian(s).unwrap(), 0.0);
                assert_eq!(f.value(s).unwrap(), fs);
                let s0 = f.anchor(0).unwrap().0;
                assert!(fs >= 7.0 * (s - s0) / 16.0 * (1.0 - 1e-12), "{spec:?} j={j}");
            }
        }
    }

    #[test]
    fn chained_lower_bound_on_grids() {
        let f = ChainedObjective::new(AnchorSpec::Wngrad { b0: 1.0 }).unwrap();
        for j in 0..30 {
            let (s, _, _) = f.anchor(j).unwrap();
            let (s1, _, _) = f.anchor(j + 1).unwrap();
            let floor = 7.0 * s / 16.0 - (s1 - s) / 8.0;
            for i in 1..=400 {
                let theta = s + (s1 - s) * i as f64 / 400.0;
                assert!(f.value(theta).unwrap() >= floor - 1e-12);
            }
        }
    }

    #[test]
    fn continuous_across_anchors() {
        let f = ChainedObjective::new(AnchorSpec::Nag { m: 1.0 }).unwrap();
        for j in 1..15 {
            let (s, d, _) = f.anchor(j).unwrap();
            let left = f.value(s.next_down()).unwrap();
            let right = f.value(s.next_up()).unwrap();
            assert!((left - right).abs() < 1e-9 * s.max(1.0));
            assert!((f.gradient(s.next_up()).unwrap() + d).abs() < 1e-12);
        }
    }

    #[test]
    fn finite_differences_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = ChainedObjective::new(AnchorSpec::GeometricIncrement {
            scale: 1.0,
            ratio: 5f64.sqrt() / 2.0,
            slopes: SlopeRule::Geometric(5f64.sqrt() / (5f64.sqrt() + 1.0)),
        })
        .unwrap();
        let top = f.anchor(12).unwrap().0;
        let mut n = 0;
        while n < 1000 {
            let theta = rng.gen_range(-1.0..top);
            let h = 1e-6 * theta.abs().max(1.0);
            // skip points whose stencil crosses a knot
            let j = (0..12).find(|&j| f.anchor(j + 1).unwrap().0 >= theta).unwrap_or(0);
            let (s, d, _) = f.anchor(j).unwrap();
            let (s1, d1, _) = f.anchor(j + 1).unwrap();
            let p = BlockParams::new(s1 - s, d, d1).unwrap();
            let knots: Vec<f64> = p.knots().iter().map(|k| s + k).chain([s, s1]).collect();
            if knots.iter().any(|k| (theta - k).abs() < 2.0 * h) || theta < h {
                continue;
            }
            let g = f.gradient(theta).unwrap();
            let fd = (f.value(theta + h).unwrap() - f.value(theta - h).unwrap()) / (2.0 * h);
            assert!((g - fd).abs() <= 1e-4 * g.abs().max(1.0), "{theta}: {g} vs {fd}");
            let hs = f.hessian(theta).unwrap();
            let hfd = (f.gradient(theta + h).unwrap() - f.gradient(theta - h).unwrap()) / (2.0 * h);
            assert!((hs - hfd).abs() <= 1e-4 * hs.abs().max(1.0), "{theta}: {hs} vs {hfd}");
            n += 1;
        }
    }

    #[test]
    fn explicit_anchors_run_out() {
        let f =
            ChainedObjective::new(AnchorSpec::Explicit { anchors: vec![0.0, 1.0, 3.0], slopes: vec![1.0; 3] }).unwrap();
        assert!(f.value(2.0).is_ok());
        assert!(matches!(f.value(3.5), Err(ObjectiveError::BeyondAnchors { .. })));
        assert!(matches!(f.value(f64::NAN), Err(ObjectiveError::Domain { .. })));
    }

    #[test]
    fn anchor_overflow_is_typed() {
        let f = ChainedObjective::new(AnchorSpec::GeometricIncrement {
            scale: 1.0,
            ratio: 1e10,
            slopes: SlopeRule::Constant(1.0),
        })
        .unwrap();
        let err = f.value(f64::MAX).unwrap_err();
        assert!(matches!(err, ObjectiveError::Overflow { .. }), "{err:?}");
        // the error sticks
        assert!(f.value(f64::MAX).is_err());
    }
}

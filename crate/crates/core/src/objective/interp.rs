//! Degree-9 polynomials matching value, slope and curvature at `-m`, `0`, `m`.
//!
//! `c_0, c_1, c_2` come straight from the center targets. The remaining six
//! conditions on `c_3..c_9` leave one free coefficient; `c_3` is fixed to 0 and
//! the system in `a_i = c_i m^i` (`i = 4..9`), whose matrix is a constant
//! integer matrix, is solved by partial-pivot elimination.

use serde::{Deserialize, Serialize};

use super::ObjectiveError;

/// Value, first and second derivative targets at `-m`, `0` and `m`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct InterpTargets {
    pub f_minus: f64,
    pub f0: f64,
    pub f_plus: f64,
    pub fp_minus: f64,
    pub fp0: f64,
    pub fp_plus: f64,
    pub fpp_minus: f64,
    pub fpp0: f64,
    pub fpp_plus: f64,
}

impl InterpTargets {
    /// Zero boundary targets with the given center triple.
    pub fn centered(f0: f64, fp0: f64, fpp0: f64) -> Self {
        InterpTargets { f0, fp0, fpp0, ..Default::default() }
    }

    /// `(point, order, target)` for all nine constraints, `point` in units of `m`.
    pub fn constraints(&self) -> [(f64, usize, f64); 9] {
        [
            (-1.0, 0, self.f_minus),
            (0.0, 0, self.f0),
            (1.0, 0, self.f_plus),
            (-1.0, 1, self.fp_minus),
            (0.0, 1, self.fp0),
            (1.0, 1, self.fp_plus),
            (-1.0, 2, self.fpp_minus),
            (0.0, 2, self.fpp0),
            (1.0, 2, self.fpp_plus),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyCoefficients {
    pub c: [f64; 10],
}

impl PolyCoefficients {
    pub fn eval(&self, theta: f64, order: usize) -> f64 {
        poly_eval(self, theta, order)
    }

    /// Largest `|P^(k)(x) - target| / max(1, |target|)` over the nine constraints.
    pub fn max_residual(&self, m: f64, targets: &InterpTargets) -> f64 {
        targets
            .constraints()
            .iter()
            .map(|&(x, k, t)| (self.eval(x * m, k) - t).abs() / t.abs().max(1.0))
            .fold(0.0, f64::max)
    }
}

/// Value (`order = 0`), first or second derivative of `Σ c_i θ^i`.
pub fn poly_eval(c: &PolyCoefficients, theta: f64, order: usize) -> f64 {
    let c = &c.c;
    match order {
        0 => c.iter().rev().fold(0.0, |acc, &ci| acc * theta + ci),
        1 => (1..10).rev().fold(0.0, |acc, i| acc * theta + i as f64 * c[i]),
        2 => (2..10).rev().fold(0.0, |acc, i| acc * theta + (i * (i - 1)) as f64 * c[i]),
        _ => panic!("poly_eval supports orders 0, 1 and 2, got {order}"),
    }
}

/// Interpolant in the scaled form
/// `P(t) = c0 + c1 t + c2 t² + Σ_{i=4}^{9} a_i (t/m)^i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledPoly {
    pub m: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// `a_4..a_9`
    pub a: [f64; 6],
}

impl ScaledPoly {
    pub fn solve(m: f64, t: &InterpTargets) -> Result<Self, ObjectiveError> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(ObjectiveError::Singular);
        }
        let (c0, c1, c2) = (t.f0, t.fp0, t.fpp0 / 2.0);
        let m2 = m * m;
        let rhs = [
            t.f_plus - c0 - c1 * m - c2 * m2,
            t.f_minus - c0 + c1 * m - c2 * m2,
            m * (t.fp_plus - c1 - t.fpp0 * m),
            m * (t.fp_minus - c1 + t.fpp0 * m),
            m2 * (t.fpp_plus - t.fpp0),
            m2 * (t.fpp_minus - t.fpp0),
        ];
        let mut mat = [[0.0f64; 6]; 6];
        for (col, i) in (4..10).enumerate() {
            let fi = i as f64;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            mat[0][col] = 1.0;
            mat[1][col] = sign;
            mat[2][col] = fi;
            mat[3][col] = -sign * fi;
            mat[4][col] = fi * (fi - 1.0);
            mat[5][col] = sign * fi * (fi - 1.0);
        }
        let a = solve6(mat, rhs)?;
        if a.iter().any(|x| !x.is_finite()) {
            return Err(ObjectiveError::Overflow { what: "interpolation coefficient", index: 0 });
        }
        Ok(ScaledPoly { m, c0, c1, c2, a })
    }

    pub fn eval(&self, t: f64, order: usize) -> f64 {
        let u = t / self.m;
        let a = &self.a;
        match order {
            0 => {
                let tail = a.iter().rev().fold(0.0, |acc, &ai| acc * u + ai) * u.powi(4);
                self.c0 + t * (self.c1 + self.c2 * t) + tail
            }
            1 => {
                let tail = (0..6).rev().fold(0.0, |acc, k| acc * u + (k + 4) as f64 * a[k]) * u.powi(3) / self.m;
                self.c1 + 2.0 * self.c2 * t + tail
            }
            2 => {
                let tail = (0..6).rev().fold(0.0, |acc, k| acc * u + ((k + 4) * (k + 3)) as f64 * a[k]) * u * u
                    / (self.m * self.m);
                2.0 * self.c2 + tail
            }
            _ => panic!("order must be 0, 1 or 2, got {order}"),
        }
    }

    pub fn unscaled(&self) -> PolyCoefficients {
        let mut c = [0.0; 10];
        c[0] = self.c0;
        c[1] = self.c1;
        c[2] = self.c2;
        for (k, ai) in self.a.iter().enumerate() {
            c[k + 4] = ai / self.m.powi(k as i32 + 4);
        }
        PolyCoefficients { c }
    }
}

pub fn solve_interpolation(m: f64, targets: &InterpTargets) -> Result<PolyCoefficients, ObjectiveError> {
    Ok(ScaledPoly::solve(m, targets)?.unscaled())
}

fn solve6(mut a: [[f64; 6]; 6], mut b: [f64; 6]) -> Result<[f64; 6], ObjectiveError> {
    for col in 0..6 {
        let piv = (col..6).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        if a[piv][col] == 0.0 {
            return Err(ObjectiveError::Singular);
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..6 {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..6 {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = [0.0; 6];
    for row in (0..6).rev() {
        let s: f64 = (row + 1..6).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// The unscaled 6×7 system in `(c_9, ..., c_3)`, reduced without pivoting.
    fn echelon(m: f64) -> [[f64; 7]; 6] {
        let mut rows = [[0.0f64; 7]; 6];
        for col in 0..7 {
            let i = 9 - col;
            let fi = i as f64;
            let odd = i % 2 == 1;
            rows[0][col] = m.powi(i as i32);
            rows[1][col] = if odd { -1.0 } else { 1.0 } * m.powi(i as i32);
            rows[2][col] = fi * m.powi(i as i32 - 1);
            rows[3][col] = if odd { 1.0 } else { -1.0 } * fi * m.powi(i as i32 - 1);
            rows[4][col] = fi * (fi - 1.0) * m.powi(i as i32 - 2);
            rows[5][col] = if odd { -1.0 } else { 1.0 } * fi * (fi - 1.0) * m.powi(i as i32 - 2);
        }
        reduce(rows).0
    }

    fn reduce(mut rows: [[f64; 7]; 6]) -> ([[f64; 7]; 6], [[f64; 6]; 6]) {
        // also return the multipliers so right-hand sides can be replayed
        let mut mult = [[0.0; 6]; 6];
        let mut r = 0;
        for col in 0..7 {
            if r == 6 {
                break;
            }
            if rows[r][col].abs() < 1e-12 {
                continue;
            }
            for k in r + 1..6 {
                let f = rows[k][col] / rows[r][col];
                mult[k][r] = f;
                for c in col..7 {
                    rows[k][c] -= f * rows[r][c];
                }
            }
            r += 1;
        }
        (rows, mult)
    }

    #[test]
    fn echelon_structure() {
        let m = 1.3f64;
        let e = echelon(m);
        let p = |k: i32| m.powi(k);
        let expected = [
            [p(9), p(8), p(7), p(6), p(5), p(4), p(3)],
            [0.0, 2.0 * p(8), 0.0, 2.0 * p(6), 0.0, 2.0 * p(4), 0.0],
            [0.0, 0.0, -2.0 * p(6), -2.0 * p(5), -4.0 * p(4), -4.0 * p(3), -6.0 * p(2)],
            [0.0, 0.0, 0.0, 4.0 * p(5), 0.0, 8.0 * p(3), 0.0],
            [0.0, 0.0, 0.0, 0.0, 8.0 * p(3), 8.0 * p(2), 24.0 * m],
            [0.0, 0.0, 0.0, 0.0, 0.0, 16.0 * p(2), 0.0],
        ];
        for (r, (got, want)) in e.iter().zip(&expected).enumerate() {
            for (c, (g, w)) in got.iter().zip(want).enumerate() {
                assert!((g - w).abs() <= 1e-9 * w.abs().max(1.0), "row {r} col {c}: {g} vs {w}");
            }
        }
    }

    /// Independent solve: eliminate the unscaled system, set c_3 = 0, back-substitute.
    fn oracle(m: f64, t: &InterpTargets) -> [f64; 10] {
        let mut rows = [[0.0f64; 7]; 6];
        for col in 0..7 {
            let i = 9 - col;
            let fi = i as f64;
            let s = |e: i32| if e % 2 == 0 { 1.0 } else { -1.0 };
            rows[0][col] = m.powi(i as i32);
            rows[1][col] = s(i as i32) * m.powi(i as i32);
            rows[2][col] = fi * m.powi(i as i32 - 1);
            rows[3][col] = s(i as i32 - 1) * fi * m.powi(i as i32 - 1);
            rows[4][col] = fi * (fi - 1.0) * m.powi(i as i32 - 2);
            rows[5][col] = s(i as i32) * fi * (fi - 1.0) * m.powi(i as i32 - 2);
        }
        let mut b = [
            t.f_plus - t.f0 - t.fp0 * m - t.fpp0 / 2.0 * m * m,
            t.f_minus - t.f0 + t.fp0 * m - t.fpp0 / 2.0 * m * m,
            t.fp_plus - t.fp0 - t.fpp0 * m,
            t.fp_minus - t.fp0 + t.fpp0 * m,
            t.fpp_plus - t.fpp0,
            t.fpp_minus - t.fpp0,
        ];
        let (e, mult) = reduce(rows);
        for r in 0..6 {
            for k in r + 1..6 {
                b[k] -= mult[k][r] * b[r];
            }
        }
        // pivots in columns 0..6 (c_9..c_4), c_3 free and zero
        let mut x = [0.0; 7];
        for r in (0..6).rev() {
            let s: f64 = (r + 1..7).map(|c| e[r][c] * x[c]).sum();
            x[r] = (b[r] - s) / e[r][r];
        }
        let mut c = [0.0; 10];
        c[0] = t.f0;
        c[1] = t.fp0;
        c[2] = t.fpp0 / 2.0;
        for col in 0..7 {
            c[9 - col] = x[col];
        }
        c
    }

    #[test]
    fn zero_targets_give_zero_polynomial() {
        let p = solve_interpolation(1.0, &InterpTargets::default()).unwrap();
        assert_eq!(p.c, [0.0; 10]);
    }

    #[test]
    fn unit_bump() {
        let t = InterpTargets::centered(1.0, 0.0, 0.0);
        let p = solve_interpolation(1.0, &t).unwrap();
        assert_eq!(p.eval(0.0, 0), 1.0);
        assert!(p.max_residual(1.0, &t) < 1e-10);
        assert_eq!(p.c[3], 0.0);
        let o = oracle(1.0, &t);
        for (a, b) in p.c.iter().zip(&o) {
            assert!((a - b).abs() < 1e-10, "{:?} vs {:?}", p.c, o);
        }
    }

    #[test]
    fn unit_slope() {
        let t = InterpTargets::centered(0.0, -1.0, 0.0);
        let p = solve_interpolation(1.0, &t).unwrap();
        assert_eq!(p.eval(0.0, 1), -1.0);
        assert_eq!(p.eval(0.0, 0), 0.0);
        assert!(p.max_residual(1.0, &t) < 1e-10);
    }

    #[test]
    fn small_half_width() {
        let t = InterpTargets::centered(-0.5, -1.0, 0.0);
        let p = solve_interpolation(0.25, &t).unwrap();
        assert!(p.max_residual(0.25, &t) < 1e-10);
    }

    #[test]
    fn singular_at_zero_width() {
        assert_eq!(solve_interpolation(0.0, &InterpTargets::default()), Err(ObjectiveError::Singular));
    }

    #[test]
    fn poly_eval_monomials() {
        let mut c = PolyCoefficients { c: [0.0; 10] };
        c.c[1] = 1.0;
        assert_eq!(poly_eval(&c, 3.0, 0), 3.0);
        let mut c = PolyCoefficients { c: [0.0; 10] };
        c.c[9] = 1.0;
        assert_eq!(poly_eval(&c, 1.0, 1), 9.0);
        let mut c = PolyCoefficients { c: [0.0; 10] };
        c.c[2] = 1.0;
        assert_eq!(poly_eval(&c, 2.0, 2), 2.0);
    }

    fn targets() -> impl Strategy<Value = InterpTargets> {
        proptest::array::uniform9(-10.0f64..10.0).prop_map(|v| InterpTargets {
            f_minus: v[0],
            f0: v[1],
            f_plus: v[2],
            fp_minus: v[3],
            fp0: v[4],
            fp_plus: v[5],
            fpp_minus: v[6],
            fpp0: v[7],
            fpp_plus: v[8],
        })
    }

    proptest! {
        #[test]
        fn constraints_hold(m in 0.1f64..10.0, t in targets()) {
            let p = solve_interpolation(m, &t).unwrap();
            prop_assert!(p.max_residual(m, &t) <= 1e-8);
            let o = oracle(m, &t);
            for (a, b) in p.c.iter().zip(&o) {
                prop_assert!((a - b).abs() <= 1e-7 * b.abs().max(1.0), "{:?} vs {:?}", p.c, o);
            }
        }

        #[test]
        fn scaled_form_agrees(m in 0.1f64..10.0, t in targets(), x in -1.0f64..1.0) {
            let s = ScaledPoly::solve(m, &t).unwrap();
            let p = s.unscaled();
            for k in 0..3 {
                let (a, b) = (s.eval(x * m, k), p.eval(x * m, k));
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0) * m.recip().powi(k as i32).max(1.0));
            }
        }
    }
}

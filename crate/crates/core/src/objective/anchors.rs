//! Rules that generate the anchor points `S_j` and slopes `d_j` of a chained objective.

use super::ObjectiveError;

/// Hard cap on lazily generated anchors.
pub const MAX_ANCHORS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub enum SlopeRule {
    /// `d_j = c`
    Constant(f64),
    /// `d_j = r^j`
    Geometric(f64),
}

impl SlopeRule {
    fn slope(&self, j: usize) -> f64 {
        match *self {
            SlopeRule::Constant(c) => c,
            SlopeRule::Geometric(r) => r.powi(j as i32),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnchorSpec {
    /// `S_j = start + step·j`
    Arithmetic { start: f64, step: f64, slopes: SlopeRule },
    /// `S_0 = 0`, `S_{j+1} = S_j + scale·ratio^j`
    GeometricIncrement { scale: f64, ratio: f64, slopes: SlopeRule },
    /// Interleaved `Θ_t`/`Y_t` points of Nesterov's method with step `m`; unit slopes.
    Nag { m: f64 },
    /// `S_j = S_{j-1} + 1/B_{j-1}` with `B_j = B_{j-1} + 1/B_{j-1}`, `B_0 = b0`; unit slopes.
    Wngrad { b0: f64 },
    /// `S_j = S_{j-1} + (ζ + j)^{-μ}`; unit slopes.
    Adagrad { zeta: f64, mu: f64 },
    /// Polyak recursion with `S_1 = 1` and slopes `1/8`.
    Polyak,
    /// A finite, user-supplied list.
    Explicit { anchors: Vec<f64>, slopes: Vec<f64> },
}

impl AnchorSpec {
    pub fn generator(&self) -> AnchorGenerator {
        AnchorGenerator { spec: self.clone(), j: 0, state: State::Start, last: None }
    }

    /// First `n` pairs `(S_j, d_j)`.
    pub fn take(&self, n: usize) -> Result<Vec<(f64, f64)>, ObjectiveError> {
        let mut gen = self.generator();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            match gen.next() {
                Some(r) => out.push(r?),
                None => break,
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), ObjectiveError> {
        let bad = |s: String| Err(ObjectiveError::InvalidParameter(s));
        let check_slopes = |s: &SlopeRule| match *s {
            SlopeRule::Constant(c) if !(c > 0.0 && c <= 1.0) => bad(format!("slope {c} outside (0, 1]")),
            SlopeRule::Geometric(r) if !(r > 0.0 && r <= 1.0) => bad(format!("slope ratio {r} outside (0, 1]")),
            _ => Ok(()),
        };
        match self {
            AnchorSpec::Arithmetic { start, step, slopes } => {
                if !start.is_finite() || !(*step > 0.0 && step.is_finite()) {
                    return bad(format!("arithmetic anchors need finite start and positive step, got {start}, {step}"));
                }
                check_slopes(slopes)
            }
            AnchorSpec::GeometricIncrement { scale, ratio, slopes } => {
                if !(*scale > 0.0 && *ratio > 0.0 && scale.is_finite() && ratio.is_finite()) {
                    return bad(format!("increments need positive scale and ratio, got {scale}, {ratio}"));
                }
                check_slopes(slopes)
            }
            AnchorSpec::Nag { m } if !(*m > 0.0 && m.is_finite()) => bad(format!("step m = {m} must be positive")),
            AnchorSpec::Wngrad { b0 } if !(*b0 > 0.0 && b0.is_finite()) => bad(format!("b0 = {b0} must be positive")),
            AnchorSpec::Adagrad { zeta, mu } => {
                if !(*zeta > 0.0 && *zeta <= 1.0) {
                    return bad(format!("zeta = {zeta} must lie in (0, 1]"));
                }
                if !(*mu > 0.0 && *mu < 1.0) {
                    return bad(format!("mu = {mu} must lie in (0, 1)"));
                }
                Ok(())
            }
            AnchorSpec::Explicit { anchors, slopes } => {
                if anchors.len() != slopes.len() || anchors.is_empty() {
                    return bad("explicit anchors and slopes must be non-empty and of equal length".into());
                }
                if let Some(d) = slopes.iter().find(|d| !(**d > 0.0 && **d <= 1.0)) {
                    return bad(format!("slope {d} outside (0, 1]"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// The `B_t`/`A_t` schedule of Nesterov's method, shared by the optimizer and
/// the anchor rule so both round identically.
#[derive(Debug, Clone, Copy)]
pub struct NagSchedule {
    pub m: f64,
    pub b: f64,
    pub a: f64,
}

impl NagSchedule {
    pub fn new(m: f64) -> Self {
        NagSchedule { m, b: 0.0, a: 1.0 / m }
    }

    /// Advances to `(B_{t+1}, A_{t+1})` and returns the previous `A_t`.
    pub fn advance(&mut self) -> f64 {
        let a_prev = self.a;
        self.b += 0.5 * (1.0 + (4.0 * self.b + 1.0).sqrt());
        self.a = self.b + 1.0 / self.m;
        a_prev
    }
}

/// One state `(θ_t, y_t, z_t)` of Nesterov's method.
#[derive(Debug, Clone, Copy)]
pub struct NagState {
    pub sched: NagSchedule,
    /// `A_t`; `sched.a` holds `A_{t+1}`.
    pub a_t: f64,
    pub theta: f64,
    pub y: f64,
    pub z: f64,
}

impl NagState {
    pub fn new(m: f64, theta0: f64) -> Self {
        let mut sched = NagSchedule::new(m);
        let a_t = sched.advance();
        let mut st = NagState { sched, a_t, theta: theta0, y: theta0, z: theta0 };
        st.y = st.extrapolate();
        st
    }

    fn extrapolate(&self) -> f64 {
        self.theta + (1.0 - self.a_t / self.sched.a) * (self.z - self.theta)
    }

    /// Moves to `t + 1` given the gradient at `y_t`.
    pub fn step(&mut self, grad_y: f64) {
        let m = self.sched.m;
        let theta = self.y - m * grad_y;
        let z = self.z - m * (self.sched.a - self.a_t) * grad_y;
        self.a_t = self.sched.advance();
        self.theta = theta;
        self.z = z;
        self.y = self.extrapolate();
    }
}

/// The sequences `Θ_t`, `Y_t`, `Z_t` for `t = 0..=t_max`: what Nesterov's method
/// produces from 0 when every gradient it sees equals `-1`.
pub fn nag_sequences(m: f64, t_max: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut st = NagState::new(m, 0.0);
    let (mut th, mut ys, mut zs) = (vec![st.theta], vec![st.y], vec![st.z]);
    for _ in 0..t_max {
        st.step(-1.0);
        th.push(st.theta);
        ys.push(st.y);
        zs.push(st.z);
    }
    (th, ys, zs)
}

#[derive(Debug, Clone)]
enum State {
    Start,
    Arith,
    Incr { s: f64 },
    Nag { st: NagState, pending: Option<f64> },
    Wngrad { s: f64, b: f64 },
    Adagrad { s: f64 },
    Polyak { s_prev: f64, s: f64, o: f64 },
}

/// Lazily yields `(S_j, d_j)` and checks finiteness and strict increase.
#[derive(Debug, Clone)]
pub struct AnchorGenerator {
    spec: AnchorSpec,
    j: usize,
    state: State,
    last: Option<(f64, f64)>,
}

impl AnchorGenerator {
    fn raw_next(&mut self) -> Option<(f64, f64)> {
        let j = self.j;
        let unit = 1.0;
        let out = match (&self.spec, &mut self.state) {
            (AnchorSpec::Explicit { anchors, slopes }, _) => {
                return anchors.get(j).map(|&s| (s, slopes[j]));
            }
            (AnchorSpec::Arithmetic { start, step, slopes }, st) => {
                *st = State::Arith;
                (start + step * j as f64, slopes.slope(j))
            }
            (AnchorSpec::GeometricIncrement { scale, ratio, slopes }, st) => {
                let s = match st {
                    State::Incr { s } => *s + scale * ratio.powi(j as i32 - 1),
                    _ => 0.0,
                };
                *st = State::Incr { s };
                (s, slopes.slope(j))
            }
            (AnchorSpec::Nag { m }, st) => match st {
                State::Nag { st: nag, pending } => match pending.take() {
                    Some(y) => (y, unit),
                    None => {
                        nag.step(-1.0);
                        *pending = Some(nag.y);
                        (nag.theta, unit)
                    }
                },
                _ => {
                    // S_0 = Θ_0; S_1 = Y_1 (= Θ_1); then Θ_2, Y_2, Θ_3, ...
                    let mut nag = NagState::new(*m, 0.0);
                    nag.step(-1.0);
                    *st = State::Nag { st: nag, pending: Some(nag.y) };
                    (0.0, unit)
                }
            },
            (AnchorSpec::Wngrad { b0 }, st) => match st {
                State::Wngrad { s, b } => {
                    *s += 1.0 / *b;
                    *b += 1.0 / *b;
                    (*s, unit)
                }
                _ => {
                    *st = State::Wngrad { s: 0.0, b: *b0 };
                    (0.0, unit)
                }
            },
            (AnchorSpec::Adagrad { zeta, mu }, st) => match st {
                State::Adagrad { s } => {
                    *s += 1.0 / (zeta + j as f64).powf(*mu);
                    (*s, unit)
                }
                _ => {
                    *st = State::Adagrad { s: 0.0 };
                    (0.0, unit)
                }
            },
            (AnchorSpec::Polyak, st) => {
                let slope = 0.125;
                match st {
                    State::Polyak { s_prev, s, o } => {
                        if j == 1 {
                            *s_prev = 0.0;
                            *s = 1.0;
                            *o = 0.0;
                        } else {
                            // O_{j-1} from O_{j-2}, then S_j
                            *o += 1346.0 / 2048.0 * (*s - *s_prev);
                            let next = *s + 8.0 * *o + 248.0 / 2048.0;
                            *s_prev = *s;
                            *s = next;
                        }
                        (*s, slope)
                    }
                    _ => {
                        *st = State::Polyak { s_prev: 0.0, s: 0.0, o: 0.0 };
                        (0.0, slope)
                    }
                }
            }
        };
        Some(out)
    }
}

impl Iterator for AnchorGenerator {
    type Item = Result<(f64, f64), ObjectiveError>;

    fn next(&mut self) -> Option<Self::Item> {
        let j = self.j;
        if j >= MAX_ANCHORS {
            return None;
        }
        let prev = self.last;
        let (s, d) = self.raw_next()?;
        self.j += 1;
        if !s.is_finite() {
            return Some(Err(ObjectiveError::Overflow { what: "anchor", index: j }));
        }
        if !(d > 0.0 && d <= 1.0) {
            return Some(Err(ObjectiveError::Underflow { index: j }));
        }
        if let Some((ps, _)) = prev {
            if !(s > ps) {
                return Some(Err(ObjectiveError::NotIncreasing { index: j }));
            }
        }
        self.last = Some((s, d));
        Some(Ok((s, d)))
    }
}

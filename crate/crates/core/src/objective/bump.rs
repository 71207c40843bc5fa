//! Objectives that are zero except on disjoint intervals around anchors, where a
//! degree-9 bump realizes a prescribed value, slope and curvature.

use serde::{Deserialize, Serialize};

use super::interp::{InterpTargets, ScaledPoly};
use super::{ObjectiveError, PolyCoefficients, ScalarFunction};

/// Centers `S_0 < ... < S_J`, triples `(f_j, f_j', f_j'')` and the half-width `Δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub anchors: Vec<f64>,
    pub triples: Vec<(f64, f64, f64)>,
    pub half_width: f64,
}

impl BumpSpec {
    pub fn validate(&self) -> Result<(), ObjectiveError> {
        let dw = self.half_width;
        if !(dw > 0.0 && dw.is_finite()) {
            return Err(ObjectiveError::InvalidParameter(format!("half-width must be positive and finite, got {dw}")));
        }
        if self.anchors.is_empty() || self.anchors.len() != self.triples.len() {
            return Err(ObjectiveError::InvalidParameter(format!(
                "{} anchors but {} value triples",
                self.anchors.len(),
                self.triples.len()
            )));
        }
        for (j, (s, t)) in self.anchors.iter().zip(&self.triples).enumerate() {
            if !s.is_finite() {
                return Err(ObjectiveError::Overflow { what: "anchor", index: j });
            }
            if !(t.0.is_finite() && t.1.is_finite() && t.2.is_finite()) {
                return Err(ObjectiveError::Overflow { what: "bump target", index: j });
            }
        }
        for (j, w) in self.anchors.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(ObjectiveError::NotIncreasing { index: j + 1 });
            }
            // closed intervals must not touch
            if w[0] + dw >= w[1] - dw {
                return Err(ObjectiveError::Overlap { index: j, next: j + 1 });
            }
        }
        Ok(())
    }
}

/// `F_J(θ) = P_j(θ - S_j)` for `|θ - S_j| ≤ Δ`, zero elsewhere.
#[derive(Debug, Clone)]
pub struct BumpObjective {
    spec: BumpSpec,
    polys: Vec<ScaledPoly>,
}

impl BumpObjective {
    pub fn new(spec: BumpSpec) -> Result<Self, ObjectiveError> {
        spec.validate()?;
        let polys = spec
            .triples
            .iter()
            .enumerate()
            .map(|(j, &(f, fp, fpp))| {
                ScaledPoly::solve(spec.half_width, &InterpTargets::centered(f, fp, fpp)).map_err(|e| match e {
                    ObjectiveError::Overflow { what, .. } => ObjectiveError::Overflow { what, index: j },
                    other => other,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(BumpObjective { spec, polys })
    }

    pub fn spec(&self) -> &BumpSpec {
        &self.spec
    }

    /// Number of intervals (`J + 1`).
    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    /// Coefficients of `P_j` in the local variable `θ - S_j`.
    pub fn poly(&self, j: usize) -> PolyCoefficients {
        self.polys[j].unscaled()
    }

    fn locate(&self, theta: f64) -> Result<Option<(usize, f64)>, ObjectiveError> {
        if theta.is_nan() {
            return Err(ObjectiveError::Domain { theta, lo: f64::NEG_INFINITY, hi: f64::INFINITY });
        }
        let s = &self.spec.anchors;
        let dw = self.spec.half_width;
        // nearest center at or below θ, or the first one
        let j = s.partition_point(|&x| x <= theta).saturating_sub(1);
        for k in [j, j + 1] {
            if let Some(&c) = s.get(k) {
                if theta >= c - dw && theta <= c + dw {
                    return Ok(Some((k, theta - c)));
                }
            }
        }
        Ok(None)
    }

    fn at(&self, theta: f64, order: usize) -> Result<f64, ObjectiveError> {
        let v = match self.locate(theta)? {
            Some((j, t)) => self.polys[j].eval(t, order),
            None => 0.0,
        };
        super::finite(v, "bump objective")
    }
}

impl ScalarFunction for BumpObjective {
    fn value(&self, theta: f64) -> Result<f64, ObjectiveError> {
        self.at(theta, 0)
    }
    fn gradient(&self, theta: f64) -> Result<f64, ObjectiveError> {
        self.at(theta, 1)
    }
    fn hessian(&self, theta: f64) -> Result<f64, ObjectiveError> {
        self.at(theta, 2)
    }
    fn has_hessian(&self) -> bool {
        true
    }
}

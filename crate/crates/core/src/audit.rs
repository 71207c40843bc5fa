//! Four single-observation statistical objectives and the smoothness ratio
//! `‖F̈‖ / ‖Ḟ‖²` sampled along paths where the gradient blows up.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;
use thiserror::Error;

use crate::objective::EvalCounts;

/// Factor analysis and GEE reject `θ` below this; inverse Gaussian rejects `θ` above its negative.
pub const DOMAIN_GUARD: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("{model}: {point:?} is outside the domain ({constraint})")]
    Domain { model: &'static str, point: Vec<f64>, constraint: &'static str },
    #[error("{model} takes {expected} coordinates, got {got}")]
    Dimension { model: &'static str, expected: usize, got: usize },
    #[error("gradient vanishes at {0:?}; the ratio is undefined")]
    ZeroGradient(Vec<f64>),
    #[error("non-finite {what} at {point:?}")]
    NonFinite { what: &'static str, point: Vec<f64> },
    #[error("unknown model '{0}' (expected factor_analysis, ffnn, gee or inv_gaussian)")]
    UnknownModel(String),
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid path '{0}': expected geometric:start,ratio,K or linear:start,step,K")]
    InvalidPath(String),
}

/// The four models with their data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Model {
    /// `F(θ) = ½log 2π - ½log θ² + ½θ²x²`, `θ > 0`.
    FactorAnalysis { x: f64 },
    /// `F(w) = log(1 + exp(-w4 w3 w2 w1))` on `ℝ⁴`.
    Ffnn,
    /// `F(θ) = -y log θ + 2√θ`, `θ > 0`.
    Gee { y: f64 },
    /// `F(θ) = -(θy + √(-2θ)) - 1/(2y) - ½log(2πy³)`, `θ < 0`.
    InvGaussian { y: f64 },
}

impl Model {
    pub const NAMES: [&'static str; 4] = ["factor_analysis", "ffnn", "gee", "inv_gaussian"];

    /// Builds a model from its name and `key=value` data, with `x = 1` and
    /// `y = 1` as defaults.
    pub fn from_name(name: &str, params: &[(String, f64)]) -> Result<Self, AuditError> {
        let get = |key: &str, default: f64| -> Result<f64, AuditError> {
            let mut v = default;
            for (k, val) in params {
                if k == key {
                    v = *val;
                } else {
                    return Err(AuditError::InvalidParameter(format!("{name} has no parameter '{k}'")));
                }
            }
            Ok(v)
        };
        let model = match name {
            "factor_analysis" => Model::FactorAnalysis { x: get("x", 1.0)? },
            "ffnn" => {
                if let Some((k, _)) = params.first() {
                    return Err(AuditError::InvalidParameter(format!("ffnn has no parameter '{k}'")));
                }
                Model::Ffnn
            }
            "gee" => Model::Gee { y: get("y", 1.0)? },
            "inv_gaussian" => Model::InvGaussian { y: get("y", 1.0)? },
            other => return Err(AuditError::UnknownModel(other.to_string())),
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<(), AuditError> {
        match *self {
            Model::FactorAnalysis { x } if !x.is_finite() => {
                Err(AuditError::InvalidParameter(format!("x = {x} must be finite")))
            }
            Model::Gee { y } | Model::InvGaussian { y } if !(y > 0.0 && y.is_finite()) => {
                Err(AuditError::InvalidParameter(format!("y = {y} must be positive")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::FactorAnalysis { .. } => "factor_analysis",
            Model::Ffnn => "ffnn",
            Model::Gee { .. } => "gee",
            Model::InvGaussian { .. } => "inv_gaussian",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::Ffnn => 4,
            _ => 1,
        }
    }

    /// Maps a path parameter to a point: `s ↦ s` for scalar models and
    /// `s ↦ (0, s, s, s)` for the network.
    pub fn embed(&self, s: f64) -> Vec<f64> {
        match self {
            Model::Ffnn => vec![0.0, s, s, s],
            _ => vec![s],
        }
    }

    fn check(&self, p: &[f64]) -> Result<(), AuditError> {
        if p.len() != self.dim() {
            return Err(AuditError::Dimension { model: self.name(), expected: self.dim(), got: p.len() });
        }
        let bad = |constraint| Err(AuditError::Domain { model: self.name(), point: p.to_vec(), constraint });
        match self {
            Model::FactorAnalysis { .. } | Model::Gee { .. } if !(p[0] >= DOMAIN_GUARD && p[0].is_finite()) => {
                bad("theta >= 1e-300")
            }
            Model::InvGaussian { .. } if !(p[0] <= -DOMAIN_GUARD && p[0].is_finite()) => bad("theta <= -1e-300"),
            Model::Ffnn if p.iter().any(|w| !w.is_finite()) => bad("finite weights"),
            _ => Ok(()),
        }
    }

    pub fn value(&self, p: &[f64]) -> Result<f64, AuditError> {
        self.check(p)?;
        let t = p[0];
        Ok(match *self {
            Model::FactorAnalysis { x } => {
                0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * (t * t).ln() + 0.5 * t * t * x * x
            }
            Model::Ffnn => softplus(-(p[3] * p[2] * p[1] * p[0])),
            Model::Gee { y } => -y * t.ln() + 2.0 * t.sqrt(),
            Model::InvGaussian { y } => {
                -(t * y + (-2.0 * t).sqrt()) - 1.0 / (2.0 * y) - 0.5 * (2.0 * std::f64::consts::PI * y.powi(3)).ln()
            }
        })
    }

    pub fn gradient(&self, p: &[f64]) -> Result<Vec<f64>, AuditError> {
        self.check(p)?;
        let t = p[0];
        Ok(match *self {
            Model::FactorAnalysis { x } => vec![-1.0 / t + t * x * x],
            Model::Ffnn => {
                let c = -sigmoid(-product(p));
                partials(p).iter().map(|v| c * v).collect()
            }
            Model::Gee { y } => vec![-(y - t.sqrt()) / t],
            Model::InvGaussian { y } => vec![-(y - (-2.0 * t).powf(-0.5))],
        })
    }

    /// Row-major Hessian.
    pub fn hessian(&self, p: &[f64]) -> Result<Vec<Vec<f64>>, AuditError> {
        self.check(p)?;
        let t = p[0];
        Ok(match *self {
            Model::FactorAnalysis { x } => vec![vec![1.0 / (t * t) + x * x]],
            Model::Ffnn => {
                let z = product(p);
                let c = -sigmoid(-z);
                // e^z / (e^z + 1)² without overflow
                let w = sigmoid(z) * sigmoid(-z);
                let v = partials(p);
                let mut h = vec![vec![0.0; 4]; 4];
                for i in 0..4 {
                    for j in 0..4 {
                        let cross =
                            if i == j { 0.0 } else { (0..4).filter(|&l| l != i && l != j).map(|l| p[l]).product() };
                        h[i][j] = c * cross + w * v[i] * v[j];
                    }
                }
                h
            }
            Model::Gee { y } => vec![vec![(y - 0.5 * t.sqrt()) / (t * t)]],
            Model::InvGaussian { .. } => vec![vec![(-2.0 * t).powf(-1.5)]],
        })
    }

    /// `|F̈|/Ḟ²` in closed form for the scalar models.
    pub fn closed_form_ratio(&self, t: f64) -> Option<f64> {
        match *self {
            Model::FactorAnalysis { x } => {
                let (t2, x2) = (t * t, x * x);
                Some((1.0 + t2 * x2) / (1.0 - 2.0 * x2 * t2 + t2 * t2 * x2 * x2))
            }
            Model::Gee { y } => Some((y - 0.5 * t.sqrt()).abs() / (y - t.sqrt()).powi(2)),
            Model::InvGaussian { y } => {
                let u = -2.0 * t;
                Some(1.0 / (y * y * u.powf(1.5) - 2.0 * y * u + u.sqrt()))
            }
            Model::Ffnn => None,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Model::FactorAnalysis { x } => write!(f, "factor_analysis(x={x})"),
            Model::Ffnn => write!(f, "ffnn"),
            Model::Gee { y } => write!(f, "gee(y={y})"),
            Model::InvGaussian { y } => write!(f, "inv_gaussian(y={y})"),
        }
    }
}

fn product(p: &[f64]) -> f64 {
    p.iter().product()
}

/// `∂(w1 w2 w3 w4)/∂w_i`.
fn partials(p: &[f64]) -> [f64; 4] {
    [p[1] * p[2] * p[3], p[0] * p[2] * p[3], p[0] * p[1] * p[3], p[0] * p[1] * p[2]]
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// A [`Model`] with oracle counters.
#[derive(Debug)]
pub struct ModelObjective {
    pub model: Model,
    obj: AtomicU64,
    grad: AtomicU64,
    hess: AtomicU64,
}

impl ModelObjective {
    pub fn new(model: Model) -> Self {
        ModelObjective { model, obj: AtomicU64::new(0), grad: AtomicU64::new(0), hess: AtomicU64::new(0) }
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64, AuditError> {
        self.obj.fetch_add(1, Ordering::SeqCst);
        self.model.value(p)
    }

    pub fn grad(&self, p: &[f64]) -> Result<Vec<f64>, AuditError> {
        self.grad.fetch_add(1, Ordering::SeqCst);
        self.model.gradient(p)
    }

    pub fn hess(&self, p: &[f64]) -> Result<Vec<Vec<f64>>, AuditError> {
        self.hess.fetch_add(1, Ordering::SeqCst);
        self.model.hessian(p)
    }

    pub fn counts(&self) -> EvalCounts {
        EvalCounts {
            obj: self.obj.load(Ordering::SeqCst),
            grad: self.grad.load(Ordering::SeqCst),
            hess: self.hess.load(Ordering::SeqCst),
        }
    }
}

pub fn euclidean(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn frobenius(m: &[Vec<f64>]) -> f64 {
    m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖F̈(θ)‖_F / ‖Ḟ(θ)‖₂²` together with both norms.
pub fn ratio_with_norms(obj: &ModelObjective, p: &[f64]) -> Result<(f64, f64, f64), AuditError> {
    let g = euclidean(&obj.grad(p)?);
    let h = frobenius(&obj.hess(p)?);
    if g == 0.0 {
        return Err(AuditError::ZeroGradient(p.to_vec()));
    }
    if !(g.is_finite() && h.is_finite()) {
        return Err(AuditError::NonFinite { what: "derivative", point: p.to_vec() });
    }
    let r = h / (g * g);
    if !r.is_finite() {
        return Err(AuditError::NonFinite { what: "ratio", point: p.to_vec() });
    }
    Ok((g, h, r))
}

pub fn ratio(obj: &ModelObjective, p: &[f64]) -> Result<f64, AuditError> {
    ratio_with_norms(obj, p).map(|r| r.2)
}

/// A one-parameter family of points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathSpec {
    /// `s_k = start·ratio^k`, `k = 0..count`.
    Geometric { start: f64, ratio: f64, count: usize },
    /// `s_k = start + k·step`, `k = 0..count`.
    Linear { start: f64, step: f64, count: usize },
}

impl PathSpec {
    pub fn points(&self) -> Vec<f64> {
        match *self {
            PathSpec::Geometric { start, ratio, count } => (0..count).map(|k| start * ratio.powi(k as i32)).collect(),
            PathSpec::Linear { start, step, count } => (0..count).map(|k| start + k as f64 * step).collect(),
        }
    }
}

impl FromStr for PathSpec {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AuditError::InvalidPath(s.to_string());
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let a: f64 = parts[0].parse().map_err(|_| bad())?;
        let b: f64 = parts[1].parse().map_err(|_| bad())?;
        let count: usize = parts[2].parse().map_err(|_| bad())?;
        if !(a.is_finite() && b.is_finite()) || count == 0 {
            return Err(bad());
        }
        match kind {
            "geometric" if b != 0.0 => Ok(PathSpec::Geometric { start: a, ratio: b, count }),
            "linear" => Ok(PathSpec::Linear { start: a, step: b, count }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for PathSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PathSpec::Geometric { start, ratio, count } => write!(f, "geometric:{start},{ratio},{count}"),
            PathSpec::Linear { start, step, count } => write!(f, "linear:{start},{step},{count}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    /// Path parameter.
    pub s: f64,
    pub point: Vec<f64>,
    pub grad_norm: Option<f64>,
    pub hess_norm: Option<f64>,
    pub ratio: Option<f64>,
    /// Why this row has no ratio.
    pub error: Option<String>,
}

/// Direction of the ratio along the valid samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotone {
    Increasing,
    Decreasing,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trend {
    /// Least-squares slope of `ln ratio` against `ln ‖Ḟ‖` over the last third of valid samples.
    pub slope: f64,
    pub last_ratio: f64,
    pub monotone: Monotone,
    pub valid_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub model: Model,
    pub path: PathSpec,
    pub samples: Vec<Sample>,
    pub trend: Option<Trend>,
}

/// Samples the ratio at every path point. Points where the ratio is
/// undefined are kept with an error and skipped by the trend.
pub fn probe_path(obj: &ModelObjective, path: &PathSpec) -> AuditReport {
    let samples: Vec<Sample> = path
        .points()
        .into_iter()
        .map(|s| {
            let point = obj.model.embed(s);
            match ratio_with_norms(obj, &point) {
                Ok((g, h, r)) => {
                    Sample { s, point, grad_norm: Some(g), hess_norm: Some(h), ratio: Some(r), error: None }
                }
                Err(e) => {
                    Sample { s, point, grad_norm: None, hess_norm: None, ratio: None, error: Some(e.to_string()) }
                }
            }
        })
        .collect();
    let trend = trend(&samples);
    AuditReport { model: obj.model, path: *path, samples, trend }
}

fn trend(samples: &[Sample]) -> Option<Trend> {
    let valid: Vec<(f64, f64)> = samples.iter().filter_map(|s| Some((s.grad_norm?, s.ratio?))).collect();
    let last_ratio = valid.last()?.1;
    let ratios: Vec<f64> = valid.iter().map(|v| v.1).collect();
    let monotone = if ratios.windows(2).all(|w| w[1] > w[0]) {
        Monotone::Increasing
    } else if ratios.windows(2).all(|w| w[1] < w[0]) {
        Monotone::Decreasing
    } else {
        Monotone::Neither
    };
    let tail = &valid[valid.len() - (valid.len() / 3).max(2).min(valid.len())..];
    let pts: Vec<(f64, f64)> =
        tail.iter().filter(|(g, r)| *g > 0.0 && *r > 0.0).map(|(g, r)| (g.ln(), r.ln())).collect();
    Some(Trend { slope: ls_slope(&pts), last_ratio, monotone, valid_samples: valid.len() })
}

fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        f64::NAN
    } else {
        sxy / sxx
    }
}

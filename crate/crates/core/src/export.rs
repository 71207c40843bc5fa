//! Trace serialization.
//!
//! JSON (schema version 1) and CSV carry the same numbers: every float is
//! written with 17 significant digits, and non-finite values become the
//! strings `"Infinity"`, `"-Infinity"` and `"NaN"`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::audit::AuditReport;
use crate::optimizers::{Control, Flag, Iteration, Probe, ProbeKind, Trace};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error("malformed trace: {0}")]
    Malformed(String),
}

/// `{:.16e}` for finite values, a quoted name otherwise.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "Infinity".into()
        } else {
            "-Infinity".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_float(s: &str) -> Option<f64> {
    match s {
        "NaN" => Some(f64::NAN),
        "Infinity" => Some(f64::INFINITY),
        "-Infinity" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

/// A float that serializes with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let text = format_float(self.0);
        let json = if self.0.is_finite() { text } else { format!("\"{text}\"") };
        RawValue::from_string(json).map_err(serde::ser::Error::custom)?.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            N(f64),
            S(String),
        }
        match Repr::deserialize(d)? {
            Repr::N(x) => Ok(Num(x)),
            Repr::S(s) => parse_float(&s).map(Num).ok_or_else(|| serde::de::Error::custom(format!("not a float: {s}"))),
        }
    }
}

/// `serialize_with`/`deserialize_with` helpers for plain `f64` fields that may be non-finite.
pub mod float {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        Num(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Num::deserialize(d).map(|n| n.0)
    }
}

#[derive(Serialize, Deserialize)]
struct TraceDoc {
    schema_version: u32,
    method: String,
    scenario: String,
    params: BTreeMap<String, Num>,
    iterations: Vec<IterDoc>,
    flags: Vec<Flag>,
}

#[derive(Serialize, Deserialize)]
struct IterDoc {
    k: usize,
    theta: Vec<Num>,
    f: Option<Num>,
    grad: Vec<Num>,
    probes: Vec<ProbeDoc>,
    cum_obj_evals: u64,
    cum_grad_evals: u64,
    cum_hess_evals: u64,
    control: ControlDoc,
}

#[derive(Serialize, Deserialize)]
struct ProbeDoc {
    kind: ProbeKind,
    theta: Vec<Num>,
    f: Option<Num>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    grad: Vec<Num>,
}

#[derive(Serialize, Deserialize)]
struct ControlDoc {
    step_size: Option<Num>,
    penalty: Option<Num>,
    b_k: Option<Num>,
    w_k: Option<Num>,
}

fn num(x: Option<f64>) -> Option<Num> {
    x.map(Num)
}

fn scalar(v: &[Num], what: &str, k: usize) -> Result<f64, ExportError> {
    match v {
        [x] => Ok(x.0),
        _ => Err(ExportError::Malformed(format!("{what} at k={k} must have one coordinate, got {}", v.len()))),
    }
}

impl TraceDoc {
    fn from_trace(t: &Trace) -> Self {
        TraceDoc {
            schema_version: SCHEMA_VERSION,
            method: t.method.clone(),
            scenario: t.scenario.clone(),
            params: t.params.iter().map(|(k, v)| (k.clone(), Num(*v))).collect(),
            iterations: t
                .iterations
                .iter()
                .map(|it| IterDoc {
                    k: it.k,
                    theta: vec![Num(it.theta)],
                    f: num(it.value()),
                    grad: it.gradient().map(Num).into_iter().collect(),
                    probes: it
                        .probes
                        .iter()
                        .map(|p| ProbeDoc {
                            kind: p.kind,
                            theta: vec![Num(p.theta)],
                            f: num(p.f),
                            grad: p.grad.map(Num).into_iter().collect(),
                        })
                        .collect(),
                    cum_obj_evals: it.cum_obj_evals,
                    cum_grad_evals: it.cum_grad_evals,
                    cum_hess_evals: it.cum_hess_evals,
                    control: ControlDoc {
                        step_size: num(it.control.step_size),
                        penalty: num(it.control.penalty),
                        b_k: num(it.control.b_k),
                        w_k: num(it.control.w_k),
                    },
                })
                .collect(),
            flags: t.flags.clone(),
        }
    }

    fn into_trace(self) -> Result<Trace, ExportError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ExportError::Schema(self.schema_version));
        }
        let mut iterations = Vec::with_capacity(self.iterations.len());
        for it in self.iterations {
            let k = it.k;
            let mut probes = Vec::with_capacity(it.probes.len());
            for p in it.probes {
                let grad = if p.grad.is_empty() { None } else { Some(scalar(&p.grad, "probe gradient", k)?) };
                probes.push(Probe {
                    kind: p.kind,
                    theta: scalar(&p.theta, "probe theta", k)?,
                    f: p.f.map(|n| n.0),
                    grad,
                });
            }
            iterations.push(Iteration {
                k,
                theta: scalar(&it.theta, "theta", k)?,
                f: it.f.map(|n| n.0),
                grad: if it.grad.is_empty() { None } else { Some(scalar(&it.grad, "gradient", k)?) },
                probes,
                cum_obj_evals: it.cum_obj_evals,
                cum_grad_evals: it.cum_grad_evals,
                cum_hess_evals: it.cum_hess_evals,
                control: Control {
                    step_size: it.control.step_size.map(|n| n.0),
                    penalty: it.control.penalty.map(|n| n.0),
                    b_k: it.control.b_k.map(|n| n.0),
                    w_k: it.control.w_k.map(|n| n.0),
                },
                observed: None,
            });
        }
        Ok(Trace {
            method: self.method,
            scenario: self.scenario,
            params: self.params.into_iter().map(|(k, v)| (k, v.0)).collect(),
            iterations,
            flags: self.flags,
        })
    }
}

/// Values and gradients are written whether they were counted or filled in
/// afterwards; reading back stores them as counted.
pub fn trace_to_json(t: &Trace) -> Result<String, ExportError> {
    Ok(serde_json::to_string_pretty(&TraceDoc::from_trace(t))?)
}

pub fn write_trace_json<W: Write>(t: &Trace, mut w: W) -> Result<(), ExportError> {
    w.write_all(trace_to_json(t)?.as_bytes())?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn trace_from_json(s: &str) -> Result<Trace, ExportError> {
    serde_json::from_str::<TraceDoc>(s)?.into_trace()
}

pub const TRACE_CSV_HEADER: [&str; 12] = [
    "k",
    "row",
    "theta",
    "f",
    "grad",
    "cum_obj_evals",
    "cum_grad_evals",
    "cum_hess_evals",
    "step_size",
    "penalty",
    "b_k",
    "w_k",
];

fn cell(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

/// One `iterate` row per iteration followed by one row per probe (`trial`,
/// `nag_y`, ...); probe rows leave the counter and control columns empty.
pub fn write_trace_csv<W: Write>(t: &Trace, w: W) -> Result<(), ExportError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_CSV_HEADER)?;
    for it in &t.iterations {
        let k = it.k.to_string();
        out.write_record([
            k.clone(),
            "iterate".into(),
            format_float(it.theta),
            cell(it.value()),
            cell(it.gradient()),
            it.cum_obj_evals.to_string(),
            it.cum_grad_evals.to_string(),
            it.cum_hess_evals.to_string(),
            cell(it.control.step_size),
            cell(it.control.penalty),
            cell(it.control.b_k),
            cell(it.control.w_k),
        ])?;
        for p in &it.probes {
            let mut row = vec![k.clone(), p.kind.as_str().into(), format_float(p.theta), cell(p.f), cell(p.grad)];
            row.resize(TRACE_CSV_HEADER.len(), String::new());
            out.write_record(row)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn trace_to_csv(t: &Trace) -> Result<String, ExportError> {
    let mut buf = Vec::new();
    write_trace_csv(t, &mut buf)?;
    String::from_utf8(buf).map_err(|e| ExportError::Malformed(e.to_string()))
}

/// `(k, row kind, theta, f, grad)`.
pub type CsvRow = (usize, String, f64, Option<f64>, Option<f64>);

pub fn read_trace_csv<R: Read>(r: R) -> Result<Vec<CsvRow>, ExportError> {
    let mut rd = csv::Reader::from_reader(r);
    let opt = |s: &str| -> Result<Option<f64>, ExportError> {
        if s.is_empty() {
            Ok(None)
        } else {
            parse_float(s).map(Some).ok_or_else(|| ExportError::Malformed(format!("bad float '{s}'")))
        }
    };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let k = rec[0].parse().map_err(|_| ExportError::Malformed(format!("bad k '{}'", &rec[0])))?;
        let theta = opt(&rec[2])?.ok_or_else(|| ExportError::Malformed("missing theta".into()))?;
        rows.push((k, rec[1].to_string(), theta, opt(&rec[3])?, opt(&rec[4])?));
    }
    Ok(rows)
}

#[derive(Serialize)]
struct AuditDoc<'a> {
    schema_version: u32,
    model: &'a crate::audit::Model,
    path: String,
    samples: Vec<AuditRow<'a>>,
    trend: Option<TrendDoc>,
}

#[derive(Serialize)]
struct AuditRow<'a> {
    theta: Num,
    point: Vec<Num>,
    grad_norm: Option<Num>,
    hess_norm: Option<Num>,
    ratio: Option<Num>,
    error: &'a Option<String>,
}

#[derive(Serialize)]
struct TrendDoc {
    slope: Num,
    last_ratio: Num,
    monotone: crate::audit::Monotone,
    valid_samples: usize,
}

pub fn audit_to_json(r: &AuditReport) -> Result<String, ExportError> {
    let doc = AuditDoc {
        schema_version: SCHEMA_VERSION,
        model: &r.model,
        path: r.path.to_string(),
        samples: r
            .samples
            .iter()
            .map(|s| AuditRow {
                theta: Num(s.s),
                point: s.point.iter().copied().map(Num).collect(),
                grad_norm: num(s.grad_norm),
                hess_norm: num(s.hess_norm),
                ratio: num(s.ratio),
                error: &s.error,
            })
            .collect(),
        trend: r.trend.as_ref().map(|t| TrendDoc {
            slope: Num(t.slope),
            last_ratio: Num(t.last_ratio),
            monotone: t.monotone,
            valid_samples: t.valid_samples,
        }),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Columns `theta, grad_norm, hess_norm, ratio`; rows outside the domain are omitted.
pub fn audit_to_csv(r: &AuditReport) -> Result<String, ExportError> {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["theta", "grad_norm", "hess_norm", "ratio"])?;
    for s in r.samples.iter().filter(|s| s.ratio.is_some()) {
        out.write_record([format_float(s.s), cell(s.grad_norm), cell(s.hess_norm), cell(s.ratio)])?;
    }
    let buf = out.into_inner().map_err(|e| ExportError::Io(e.into_error()))?;
    String::from_utf8(buf).map_err(|e| ExportError::Malformed(e.to_string()))
}

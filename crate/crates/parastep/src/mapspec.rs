//! The JSON map-spec file format and the run configuration the CLI echoes
//! into every output.
//!
//! Numeric fields accept either JSON numbers or constant-expression strings
//! ("pi/4"), so drifts like β = π/4 can be stated exactly enough to land in
//! the balanced-drift branch of the classifier. Parse errors carry the field
//! path.
//!
//! ```json
//! {
//!   "beta": "pi/4",
//!   "symmetric": false,
//!   "measure": [
//!     { "type": "atom",    "t": 0.5, "w": 1.0 },
//!     { "type": "train",   "t0": "pi/2", "step": "pi", "count": "inf",
//!       "weight": "1/(1+t^2)", "decay": 2, "mirrored": true },
//!     { "type": "density", "expr": "1/((1+t^2)*t)", "support": [1, "+inf"],
//!       "tail_pos": 3, "moment1": "pi/4" }
//!   ]
//! }
//! ```

use crate::expr::{self, Expr};
use crate::halfplane::HPoint;
use crate::herglotz::ParabolicMap;
use crate::measure::{Atom, AtomTrain, Component, DensityComponent, MeasureSpec, TrainCount};
use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {message}")]
    Field { path: String, message: String },
}

fn field_err(path: &str, message: impl Into<String>) -> SpecFileError {
    SpecFileError::Field {
        path: path.to_string(),
        message: message.into(),
    }
}

/// A parsed map-spec file: the drift and the measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MapSpecFile {
    pub beta: f64,
    pub measure: MeasureSpec,
}

impl MapSpecFile {
    pub fn load(path: &std::path::Path) -> Result<Self, SpecFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| SpecFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self, SpecFileError> {
        let root: Value = serde_json::from_str(text)?;
        let obj = root
            .as_object()
            .ok_or_else(|| field_err("$", "top level must be an object"))?;
        for key in obj.keys() {
            if !matches!(key.as_str(), "beta" | "symmetric" | "measure") {
                return Err(field_err(key, "unknown field"));
            }
        }
        let beta = match obj.get("beta") {
            Some(v) => number_field(v, "beta")?,
            None => return Err(field_err("beta", "missing")),
        };
        let symmetric = match obj.get("symmetric") {
            Some(Value::Bool(b)) => *b,
            Some(_) => return Err(field_err("symmetric", "expected a boolean")),
            None => false,
        };
        let comps_json = match obj.get("measure") {
            Some(Value::Array(a)) => a,
            Some(_) => return Err(field_err("measure", "expected an array")),
            None => return Err(field_err("measure", "missing")),
        };
        let mut components = Vec::with_capacity(comps_json.len());
        for (i, cj) in comps_json.iter().enumerate() {
            let path = format!("measure[{i}]");
            components.push(component_from_json(cj, &path)?);
        }
        let measure = MeasureSpec::new(components, symmetric)
            .map_err(|e| field_err("measure", e.to_string()))?;
        Ok(MapSpecFile { beta, measure })
    }

    /// Builds the map, with an optional drift override (a CLI flag wins over
    /// the file value).
    pub fn into_map(self, beta_override: Option<f64>) -> Result<ParabolicMap, SpecFileError> {
        let beta = beta_override.unwrap_or(self.beta);
        ParabolicMap::new(beta, self.measure).map_err(|e| field_err("beta", e.to_string()))
    }

    /// Serializes back to the file format. Expression-valued inputs come
    /// back as plain numbers or printed expressions; re-parsing yields an
    /// equal structure.
    pub fn to_json(&self) -> Value {
        let comps: Vec<Value> = self
            .measure
            .components()
            .iter()
            .map(component_to_json)
            .collect();
        json!({
            "beta": self.beta,
            "symmetric": self.measure.declared_symmetric(),
            "measure": comps,
        })
    }
}

/// Accepts a JSON number or a constant-expression string.
fn number_field(v: &Value, path: &str) -> Result<f64, SpecFileError> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| field_err(path, "number out of range")),
        Value::String(s) => expr::parse_constant(s).map_err(|e| field_err(path, e)),
        _ => Err(field_err(path, "expected a number or a constant expression string")),
    }
}

fn opt_number_field(
    obj: &Map<String, Value>,
    key: &str,
    path: &str,
) -> Result<Option<f64>, SpecFileError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => Ok(Some(number_field(v, &format!("{path}.{key}"))?)),
    }
}

fn require<'v>(
    obj: &'v Map<String, Value>,
    key: &str,
    path: &str,
) -> Result<&'v Value, SpecFileError> {
    obj.get(key)
        .ok_or_else(|| field_err(&format!("{path}.{key}"), "missing"))
}

/// A support endpoint: a number, or "-inf"/"+inf"/"inf".
fn endpoint_field(v: &Value, path: &str) -> Result<Option<f64>, SpecFileError> {
    match v {
        Value::String(s) if matches!(s.as_str(), "-inf" | "-infinity") => Ok(None),
        Value::String(s) if matches!(s.as_str(), "inf" | "+inf" | "+infinity" | "infinity") => {
            Ok(None)
        }
        other => number_field(other, path).map(Some),
    }
}

fn expr_field(v: &Value, path: &str) -> Result<Expr, SpecFileError> {
    match v {
        Value::String(s) => Expr::parse(s).map_err(|e| field_err(path, e.to_string())),
        _ => Err(field_err(path, "expected an expression string")),
    }
}

fn component_from_json(v: &Value, path: &str) -> Result<Component, SpecFileError> {
    let obj = v
        .as_object()
        .ok_or_else(|| field_err(path, "expected an object"))?;
    let tag = match require(obj, "type", path)? {
        Value::String(s) => s.as_str(),
        _ => return Err(field_err(&format!("{path}.type"), "expected a string")),
    };
    match tag {
        "atom" => {
            let t = number_field(require(obj, "t", path)?, &format!("{path}.t"))?;
            let w = number_field(require(obj, "w", path)?, &format!("{path}.w"))?;
            Atom::new(t, w)
                .map(Component::Atom)
                .map_err(|e| field_err(path, e.to_string()))
        }
        "train" => {
            let t0 = number_field(require(obj, "t0", path)?, &format!("{path}.t0"))?;
            let step = number_field(require(obj, "step", path)?, &format!("{path}.step"))?;
            let count = match require(obj, "count", path)? {
                Value::String(s) if s == "inf" => TrainCount::Infinite,
                Value::Number(n) => match n.as_u64() {
                    Some(k) => TrainCount::Finite(k),
                    None => {
                        return Err(field_err(
                            &format!("{path}.count"),
                            "expected a nonnegative integer or \"inf\"",
                        ))
                    }
                },
                _ => {
                    return Err(field_err(
                        &format!("{path}.count"),
                        "expected a nonnegative integer or \"inf\"",
                    ))
                }
            };
            let weight = expr_field(require(obj, "weight", path)?, &format!("{path}.weight"))?;
            let decay = match obj.get("decay") {
                Some(v) => number_field(v, &format!("{path}.decay"))?,
                None if matches!(count, TrainCount::Finite(_)) => 0.0,
                None => return Err(field_err(&format!("{path}.decay"), "missing (required for infinite trains)")),
            };
            let mirrored = match obj.get("mirrored") {
                Some(Value::Bool(b)) => *b,
                None => false,
                Some(_) => return Err(field_err(&format!("{path}.mirrored"), "expected a boolean")),
            };
            AtomTrain::new(t0, step, count, weight, decay, mirrored)
                .map(Component::Train)
                .map_err(|e| field_err(path, e.to_string()))
        }
        "density" => {
            let rho = expr_field(require(obj, "expr", path)?, &format!("{path}.expr"))?;
            let support = match require(obj, "support", path)? {
                Value::Array(a) if a.len() == 2 => a,
                _ => {
                    return Err(field_err(
                        &format!("{path}.support"),
                        "expected [lower, upper]",
                    ))
                }
            };
            let lower = endpoint_field(&support[0], &format!("{path}.support[0]"))?;
            let upper = endpoint_field(&support[1], &format!("{path}.support[1]"))?;
            let tail_neg = opt_number_field(obj, "tail_neg", path)?;
            let tail_pos = opt_number_field(obj, "tail_pos", path)?;
            let moment1 = opt_number_field(obj, "moment1", path)?;
            DensityComponent::new(rho, lower, upper, tail_neg, tail_pos, moment1)
                .map(Component::Density)
                .map_err(|e| field_err(path, e.to_string()))
        }
        other => Err(field_err(
            &format!("{path}.type"),
            format!("unknown component type '{other}' (expected atom, train, or density)"),
        )),
    }
}

fn component_to_json(c: &Component) -> Value {
    match c {
        Component::Atom(a) => json!({"type": "atom", "t": a.t(), "w": a.w()}),
        Component::Train(t) => {
            let count: Value = match t.count() {
                TrainCount::Infinite => json!("inf"),
                TrainCount::Finite(n) => json!(n),
            };
            let mut obj = json!({
                "type": "train",
                "t0": t.t0(),
                "step": t.step(),
                "count": count,
                "weight": t.effective_weight_expr().to_string(),
                "mirrored": t.mirrored(),
            });
            if matches!(t.count(), TrainCount::Infinite) {
                obj.as_object_mut()
                    .unwrap()
                    .insert("decay".into(), json!(t.decay()));
            }
            obj
        }
        Component::Density(d) => {
            let lo: Value = d.lower().map_or(json!("-inf"), |v| json!(v));
            let hi: Value = d.upper().map_or(json!("+inf"), |v| json!(v));
            let mut obj = json!({
                "type": "density",
                "expr": d.effective_rho_expr().to_string(),
                "support": [lo, hi],
            });
            let m = obj.as_object_mut().unwrap();
            if let Some(a) = d.tail_neg() {
                m.insert("tail_neg".into(), json!(a));
            }
            if let Some(a) = d.tail_pos() {
                m.insert("tail_pos".into(), json!(a));
            }
            if let Some(v) = d.declared_moment1() {
                m.insert("moment1".into(), json!(v));
            }
            obj
        }
    }
}

/// Fully resolved run parameters, echoed into every CLI output for
/// reproducibility.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub spec: String,
    pub beta: f64,
    pub z0: (f64, f64),
    pub n: usize,
    pub tol: f64,
    pub eps_beta: f64,
    pub zero_threshold: f64,
    pub output: Option<String>,
}

impl RunConfig {
    pub fn z0_point(&self) -> Result<HPoint, SpecFileError> {
        HPoint::new(self.z0.0, self.z0.1).map_err(|e| field_err("z0", e.to_string()))
    }
}

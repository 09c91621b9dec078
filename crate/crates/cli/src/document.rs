//! System documents: JSON descriptions of `(A, B, C)` with norm choices and
//! an optional time-varying block.
//!
//! ```json
//! {
//!   "A": [[[-1, 0], [1, 0]], [[-1, 0], [-1, 0]]],
//!   "norm_X": "l1", "norm_U": {"p": 3}, "norm_Y": "linf",
//!   "time_varying": {"kind": "hale", "a": 1.5, "step": 0.001}
//! }
//! ```
//!
//! Entries are `[re, im]` pairs; a bare number is read as a real entry.
//! `B` and `C` default to the identity, every norm defaults to `"l2"`.
//! Time-varying kinds: `constant` (uses `A`), `hale` (`a`), `rotating`
//! (`omega`, base `A`) and `tabulated` (`times` plus `matrices`, linear
//! interpolation, held constant outside the samples).

use serde_json::{json, Map, Value};
use stabradius::nonaut::{EvolutionFamily, MatrixPath, TimeVaryingSystem};
use stabradius::transfer::LtiSystem;
use stabradius::{ComplexMatrix, NormSpec, C64};

pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, thiserror::Error)]
#[error("{path}: {message}")]
pub struct DocumentError {
    pub path: String,
    pub message: String,
}

fn err(path: impl Into<String>, message: impl Into<String>) -> DocumentError {
    DocumentError {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TimeVarying {
    Constant { step: f64 },
    Hale { a: f64, step: f64 },
    Rotating { omega: f64, step: f64 },
    Tabulated { times: Vec<f64>, matrices: Vec<ComplexMatrix>, step: f64 },
}

impl TimeVarying {
    pub fn step(&self) -> f64 {
        match self {
            TimeVarying::Constant { step }
            | TimeVarying::Hale { step, .. }
            | TimeVarying::Rotating { step, .. }
            | TimeVarying::Tabulated { step, .. } => *step,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemDocument {
    pub a: ComplexMatrix,
    pub b: Option<ComplexMatrix>,
    pub c: Option<ComplexMatrix>,
    pub norm_x: NormSpec,
    pub norm_u: NormSpec,
    pub norm_y: NormSpec,
    pub time_varying: Option<TimeVarying>,
}

fn number(v: &Value, path: &str) -> Result<f64, DocumentError> {
    let x = v.as_f64().ok_or_else(|| err(path, format!("expected a number, got {v}")))?;
    if !x.is_finite() {
        return Err(err(path, "entry is not finite"));
    }
    Ok(x)
}

fn entry(v: &Value, path: &str) -> Result<C64, DocumentError> {
    match v {
        Value::Array(pair) if pair.len() == 2 => Ok(C64::new(
            number(&pair[0], &format!("{path}[0]"))?,
            number(&pair[1], &format!("{path}[1]"))?,
        )),
        Value::Number(_) => Ok(C64::new(number(v, path)?, 0.0)),
        _ => Err(err(path, format!("expected [re, im] or a number, got {v}"))),
    }
}

pub fn parse_matrix(v: &Value, path: &str) -> Result<ComplexMatrix, DocumentError> {
    let rows = v.as_array().ok_or_else(|| err(path, "expected an array of rows"))?;
    if rows.is_empty() {
        return Err(err(path, "matrix has no rows"));
    }
    let mut data = Vec::new();
    let mut cols = None;
    for (i, row) in rows.iter().enumerate() {
        let rp = format!("{path}[{i}]");
        let row = row.as_array().ok_or_else(|| err(&rp, "expected an array of entries"))?;
        match cols {
            None if row.is_empty() => return Err(err(&rp, "row is empty")),
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(err(&rp, format!("row has {} entries, row 0 has {c}", row.len())));
            }
            _ => {}
        }
        for (j, e) in row.iter().enumerate() {
            data.push(entry(e, &format!("{rp}[{j}]"))?);
        }
    }
    ComplexMatrix::new(rows.len(), cols.unwrap_or(0), data).map_err(|e| err(path, e.to_string()))
}

pub fn matrix_value(m: &ComplexMatrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array(m.row(i).iter().map(|z| json!([z.re, z.im])).collect()))
            .collect(),
    )
}

pub fn vector_value(v: &[C64]) -> Value {
    Value::Array(v.iter().map(|z| json!([z.re, z.im])).collect())
}

pub fn parse_norm(v: Option<&Value>, path: &str) -> Result<NormSpec, DocumentError> {
    match v {
        None => Ok(NormSpec::L2),
        Some(Value::String(s)) => match s.as_str() {
            "l1" => Ok(NormSpec::L1),
            "l2" => Ok(NormSpec::L2),
            "linf" => Ok(NormSpec::LINF),
            other => Err(err(path, format!("unknown norm \"{other}\" (use l1, l2, linf or {{\"p\": value}})"))),
        },
        Some(Value::Object(o)) => {
            let p = o.get("p").ok_or_else(|| err(path, "norm object needs a \"p\" field"))?;
            let p = match p {
                Value::String(s) if s == "inf" => f64::INFINITY,
                _ => number(p, &format!("{path}.p"))?,
            };
            NormSpec::new(p).map_err(|e| err(path, e.to_string()))
        }
        Some(other) => Err(err(path, format!("expected a norm name or {{\"p\": value}}, got {other}"))),
    }
}

pub fn norm_value(n: NormSpec) -> Value {
    if n.is_l1() {
        json!("l1")
    } else if n.is_l2() {
        json!("l2")
    } else if n.is_linf() {
        json!("linf")
    } else {
        json!({ "p": n.p() })
    }
}

fn field<'a>(o: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, DocumentError> {
    o.get(key).ok_or_else(|| err(path, format!("missing field \"{key}\"")))
}

fn parse_time_varying(v: &Value) -> Result<TimeVarying, DocumentError> {
    let path = "time_varying";
    let o = v.as_object().ok_or_else(|| err(path, "expected an object"))?;
    let step = match o.get("step") {
        Some(s) => number(s, "time_varying.step")?,
        None => DEFAULT_STEP,
    };
    if !(step > 0.0) {
        return Err(err("time_varying.step", "step must be positive"));
    }
    let kind = field(o, "kind", path)?
        .as_str()
        .ok_or_else(|| err("time_varying.kind", "expected a string"))?;
    match kind {
        "constant" => Ok(TimeVarying::Constant { step }),
        "hale" => Ok(TimeVarying::Hale {
            a: number(field(o, "a", path)?, "time_varying.a")?,
            step,
        }),
        "rotating" => Ok(TimeVarying::Rotating {
            omega: number(field(o, "omega", path)?, "time_varying.omega")?,
            step,
        }),
        "tabulated" => {
            let times = field(o, "times", path)?
                .as_array()
                .ok_or_else(|| err("time_varying.times", "expected an array"))?
                .iter()
                .enumerate()
                .map(|(i, t)| number(t, &format!("time_varying.times[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let matrices = field(o, "matrices", path)?
                .as_array()
                .ok_or_else(|| err("time_varying.matrices", "expected an array"))?
                .iter()
                .enumerate()
                .map(|(i, m)| parse_matrix(m, &format!("time_varying.matrices[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            MatrixPath::tabulated(times.clone(), matrices.clone()).map_err(|e| err(path, e.to_string()))?;
            Ok(TimeVarying::Tabulated { times, matrices, step })
        }
        other => Err(err(
            "time_varying.kind",
            format!("unknown kind \"{other}\" (use constant, hale, rotating or tabulated)"),
        )),
    }
}

impl SystemDocument {
    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        let v: Value = serde_json::from_str(text).map_err(|e| err("document", e.to_string()))?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self, DocumentError> {
        let o = v.as_object().ok_or_else(|| err("document", "expected a JSON object"))?;
        for key in o.keys() {
            if !["A", "B", "C", "norm_X", "norm_U", "norm_Y", "time_varying"].contains(&key.as_str()) {
                return Err(err(key.as_str(), "unknown field"));
            }
        }
        let doc = SystemDocument {
            a: parse_matrix(field(o, "A", "document")?, "A")?,
            b: o.get("B").map(|m| parse_matrix(m, "B")).transpose()?,
            c: o.get("C").map(|m| parse_matrix(m, "C")).transpose()?,
            norm_x: parse_norm(o.get("norm_X"), "norm_X")?,
            norm_u: parse_norm(o.get("norm_U"), "norm_U")?,
            norm_y: parse_norm(o.get("norm_Y"), "norm_Y")?,
            time_varying: o.get("time_varying").map(parse_time_varying).transpose()?,
        };
        doc.check_dimensions()?;
        Ok(doc)
    }

    fn check_dimensions(&self) -> Result<(), DocumentError> {
        let (r, c) = self.a.shape();
        if r != c {
            return Err(err("A", format!("A is {r}x{c}, expected a square matrix")));
        }
        if let Some(b) = &self.b {
            if b.rows() != r {
                return Err(err("B", format!("B has {} rows, A is {r}x{r}", b.rows())));
            }
        }
        if let Some(cm) = &self.c {
            if cm.cols() != r {
                return Err(err("C", format!("C has {} columns, A is {r}x{r}", cm.cols())));
            }
        }
        match &self.time_varying {
            Some(TimeVarying::Hale { .. }) if r != 2 => {
                Err(err("time_varying", format!("hale family is 2x2, A is {r}x{r}")))
            }
            Some(TimeVarying::Rotating { .. }) if r < 2 => {
                Err(err("time_varying", "rotating generator needs dimension at least 2"))
            }
            Some(TimeVarying::Tabulated { matrices, .. }) => {
                match matrices.iter().position(|m| m.shape() != (r, r)) {
                    Some(i) => Err(err(
                        format!("time_varying.matrices[{i}]"),
                        format!("sample is {}x{}, A is {r}x{r}", matrices[i].rows(), matrices[i].cols()),
                    )),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    pub fn to_value(&self) -> Value {
        let mut o = Map::new();
        o.insert("A".into(), matrix_value(&self.a));
        if let Some(b) = &self.b {
            o.insert("B".into(), matrix_value(b));
        }
        if let Some(c) = &self.c {
            o.insert("C".into(), matrix_value(c));
        }
        o.insert("norm_X".into(), norm_value(self.norm_x));
        o.insert("norm_U".into(), norm_value(self.norm_u));
        o.insert("norm_Y".into(), norm_value(self.norm_y));
        if let Some(tv) = &self.time_varying {
            let v = match tv {
                TimeVarying::Constant { step } => json!({"kind": "constant", "step": step}),
                TimeVarying::Hale { a, step } => json!({"kind": "hale", "a": a, "step": step}),
                TimeVarying::Rotating { omega, step } => json!({"kind": "rotating", "omega": omega, "step": step}),
                TimeVarying::Tabulated { times, matrices, step } => json!({
                    "kind": "tabulated",
                    "times": times,
                    "matrices": matrices.iter().map(matrix_value).collect::<Vec<_>>(),
                    "step": step,
                }),
            };
            o.insert("time_varying".into(), v);
        }
        Value::Object(o)
    }

    pub fn from_system(sys: &LtiSystem) -> Self {
        SystemDocument {
            a: sys.a().clone(),
            b: Some(sys.b().clone()),
            c: Some(sys.c().clone()),
            norm_x: sys.norm_x,
            norm_u: sys.norm_u,
            norm_y: sys.norm_y,
            time_varying: None,
        }
    }

    fn input_map(&self) -> ComplexMatrix {
        self.b.clone().unwrap_or_else(|| ComplexMatrix::identity(self.a.rows()))
    }

    fn output_map(&self) -> ComplexMatrix {
        self.c.clone().unwrap_or_else(|| ComplexMatrix::identity(self.a.rows()))
    }

    pub fn lti(&self) -> Result<LtiSystem, DocumentError> {
        LtiSystem::new(
            self.a.clone(),
            self.input_map(),
            self.output_map(),
            self.norm_x,
            self.norm_u,
            self.norm_y,
        )
        .map_err(|e| err("document", e.to_string()))
    }

    /// The time-varying system, or the constant embedding of `(A, B, C)`
    /// when the document has no time-varying block.
    pub fn time_varying_system(&self) -> Result<TimeVaryingSystem, DocumentError> {
        let tv = self.time_varying.clone().unwrap_or(TimeVarying::Constant { step: DEFAULT_STEP });
        let generator = match &tv {
            TimeVarying::Constant { .. } => MatrixPath::Constant(self.a.clone()),
            TimeVarying::Hale { a, .. } => MatrixPath::Hale { a: *a },
            TimeVarying::Rotating { omega, .. } => {
                MatrixPath::rotating(self.a.clone(), *omega).map_err(|e| err("time_varying", e.to_string()))?
            }
            TimeVarying::Tabulated { times, matrices, .. } => {
                MatrixPath::tabulated(times.clone(), matrices.clone()).map_err(|e| err("time_varying", e.to_string()))?
            }
        };
        let family = EvolutionFamily::new(generator, tv.step()).map_err(|e| err("time_varying", e.to_string()))?;
        TimeVaryingSystem::new(
            family,
            MatrixPath::Constant(self.input_map()),
            MatrixPath::Constant(self.output_map()),
            self.norm_x,
            self.norm_u,
            self.norm_y,
        )
        .map_err(|e| err("document", e.to_string()))
    }
}

//! One-document-per-file JSON formats with an explicit `kind` tag.
//!
//! Output is canonical: keys sorted, breakpoints ascending, numbers in
//! shortest round-trip decimal form, one trailing newline.

use std::sync::Arc;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::delta_plus::StepCdf;
use crate::prob_metric_space::ProbMetricSpace;
use crate::triangle_functions::TNorm;

pub const FORMAT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DocError {
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse {
        msg: String,
        line: usize,
        column: usize,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("validation error: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Meta {
    pub version: String,
    pub seed: Option<u64>,
}

impl Default for Meta {
    fn default() -> Self {
        Meta {
            version: FORMAT_VERSION.to_string(),
            seed: None,
        }
    }
}

impl Meta {
    pub fn seeded(seed: u64) -> Self {
        Meta {
            seed: Some(seed),
            ..Meta::default()
        }
    }
}

/// Result documents written by `extract`, `converse` and `net`.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub eps: f64,
    pub selected: Vec<usize>,
    pub residuals: Vec<f64>,
    pub pairwise_dinf: Option<f64>,
    pub lipschitz_ok: Option<bool>,
    pub cauchy_ok: Option<bool>,
    pub success: bool,
    pub limit: Option<Vec<StepCdf>>,
}

#[derive(Debug, Clone)]
pub enum Payload {
    Cdf(StepCdf),
    Space(ProbMetricSpace),
    /// Values at `domain[i]`; the domain lists point indices.
    Map {
        domain: Vec<usize>,
        values: Vec<StepCdf>,
    },
    MapSequence(Vec<Vec<StepCdf>>),
    Report(Report),
}

impl PartialEq for Payload {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Payload::Cdf(a), Payload::Cdf(b)) => a == b,
            (Payload::Space(a), Payload::Space(b)) => {
                a.labels() == b.labels()
                    && a.star().name() == b.star().name()
                    && a.matrix() == b.matrix()
            }
            (
                Payload::Map { domain: da, values: va },
                Payload::Map { domain: db, values: vb },
            ) => da == db && va == vb,
            (Payload::MapSequence(a), Payload::MapSequence(b)) => a == b,
            (Payload::Report(a), Payload::Report(b)) => a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub payload: Payload,
    pub meta: Meta,
}

impl Document {
    pub fn new(payload: Payload, meta: Meta) -> Self {
        Document { payload, meta }
    }

    pub fn kind(&self) -> &'static str {
        match self.payload {
            Payload::Cdf(_) => "cdf",
            Payload::Space(_) => "space",
            Payload::Map { .. } => "map",
            Payload::MapSequence(_) => "map_sequence",
            Payload::Report(_) => "report",
        }
    }
}

/// Parsing options. `tnorm` overrides the t-norm recorded in space documents.
#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    pub tnorm: Option<TNorm>,
}

fn cdf_to_value(f: &StepCdf) -> Value {
    Value::Array(f.breaks().iter().map(|&(t, v)| json!([t, v])).collect())
}

fn cdfs_to_value(fs: &[StepCdf]) -> Value {
    Value::Array(fs.iter().map(cdf_to_value).collect())
}

/// Canonical text of a document.
pub fn serialize_document(doc: &Document) -> String {
    let mut obj = Map::new();
    obj.insert("kind".into(), json!(doc.kind()));
    obj.insert(
        "meta".into(),
        json!({ "version": doc.meta.version, "seed": doc.meta.seed }),
    );
    match &doc.payload {
        Payload::Cdf(f) => {
            obj.insert("points".into(), cdf_to_value(f));
        }
        Payload::Space(s) => {
            obj.insert("labels".into(), json!(s.labels()));
            obj.insert("tnorm".into(), json!(s.star().name()));
            obj.insert(
                "matrix".into(),
                Value::Array(s.matrix().iter().map(|row| cdfs_to_value(row)).collect()),
            );
        }
        Payload::Map { domain, values } => {
            obj.insert("domain".into(), json!(domain));
            obj.insert("values".into(), cdfs_to_value(values));
        }
        Payload::MapSequence(maps) => {
            obj.insert(
                "maps".into(),
                Value::Array(maps.iter().map(|m| cdfs_to_value(m)).collect()),
            );
        }
        Payload::Report(r) => {
            obj.insert("command".into(), json!(r.command));
            obj.insert("eps".into(), json!(r.eps));
            obj.insert("selected".into(), json!(r.selected));
            obj.insert("residuals".into(), json!(r.residuals));
            obj.insert("pairwise_dinf".into(), json!(r.pairwise_dinf));
            obj.insert("lipschitz_ok".into(), json!(r.lipschitz_ok));
            obj.insert("cauchy_ok".into(), json!(r.cauchy_ok));
            obj.insert("success".into(), json!(r.success));
            obj.insert(
                "limit".into(),
                r.limit.as_deref().map_or(Value::Null, cdfs_to_value),
            );
        }
    }
    let mut text = Value::Object(obj).to_string();
    text.push('\n');
    text
}

fn schema(msg: impl Into<String>) -> DocError {
    DocError::Schema(msg.into())
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value, DocError> {
    obj.get(key).ok_or_else(|| schema(format!("missing field `{key}`")))
}

fn as_array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>, DocError> {
    v.as_array().ok_or_else(|| schema(format!("`{what}` must be an array")))
}

fn as_f64(v: &Value, what: &str) -> Result<f64, DocError> {
    v.as_f64().ok_or_else(|| schema(format!("`{what}` must be a number")))
}

fn as_index(v: &Value, what: &str) -> Result<usize, DocError> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| schema(format!("`{what}` must be a nonnegative integer")))
}

fn parse_cdf(v: &Value) -> Result<StepCdf, DocError> {
    let points = as_array(v, "points")?
        .iter()
        .map(|p| match p.as_array().map(Vec::as_slice) {
            Some([t, x]) => Ok((as_f64(t, "breakpoint")?, as_f64(x, "value")?)),
            _ => Err(schema("each point must be a [t, v] pair")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    StepCdf::new(&points).map_err(|e| DocError::Validation(e.to_string()))
}

fn parse_cdfs(v: &Value, what: &str) -> Result<Vec<StepCdf>, DocError> {
    as_array(v, what)?.iter().map(parse_cdf).collect()
}

fn parse_indices(v: &Value, what: &str) -> Result<Vec<usize>, DocError> {
    as_array(v, what)?.iter().map(|x| as_index(x, what)).collect()
}

fn opt<'a>(obj: &'a Map<String, Value>, key: &str) -> Option<&'a Value> {
    obj.get(key).filter(|v| !v.is_null())
}

/// Parses and validates a document. Every embedded element is
/// canonicalized; spaces are re-validated against their axioms.
pub fn parse_document(text: &str, opts: &ParseOptions) -> Result<Document, DocError> {
    let value: Value = serde_json::from_str(text).map_err(|e| DocError::Parse {
        msg: e.to_string(),
        line: e.line(),
        column: e.column(),
    })?;
    let obj = value
        .as_object()
        .ok_or_else(|| schema("document must be a JSON object"))?;
    let meta = match opt(obj, "meta") {
        None => Meta::default(),
        Some(m) => {
            let version = m
                .get("version")
                .and_then(Value::as_str)
                .ok_or_else(|| schema("`meta.version` must be a string"))?
                .to_string();
            let seed = match m.get("seed") {
                None | Some(Value::Null) => None,
                Some(s) => Some(
                    s.as_u64()
                        .ok_or_else(|| schema("`meta.seed` must be an integer or null"))?,
                ),
            };
            Meta { version, seed }
        }
    };
    let kind = field(obj, "kind")?
        .as_str()
        .ok_or_else(|| schema("`kind` must be a string"))?;
    let payload = match kind {
        "cdf" => Payload::Cdf(parse_cdf(field(obj, "points")?)?),
        "space" => {
            let labels = as_array(field(obj, "labels")?, "labels")?
                .iter()
                .map(|l| {
                    l.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| schema("labels must be strings"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let matrix = as_array(field(obj, "matrix")?, "matrix")?
                .iter()
                .map(|row| parse_cdfs(row, "matrix row"))
                .collect::<Result<Vec<_>, _>>()?;
            let tnorm = match (&opts.tnorm, opt(obj, "tnorm")) {
                (Some(t), _) => t.clone(),
                (None, Some(name)) => TNorm::from_name(
                    name.as_str().ok_or_else(|| schema("`tnorm` must be a string"))?,
                )
                .map_err(|e| schema(e.to_string()))?,
                (None, None) => TNorm::Minimum,
            };
            let space = ProbMetricSpace::new(labels, matrix, Arc::new(tnorm))
                .map_err(|e| DocError::Validation(e.to_string()))?;
            Payload::Space(space)
        }
        "map" => {
            let values = parse_cdfs(field(obj, "values")?, "values")?;
            let domain = match opt(obj, "domain") {
                Some(d) => parse_indices(d, "domain")?,
                None => (0..values.len()).collect(),
            };
            if domain.len() != values.len() {
                return Err(schema("`domain` and `values` differ in length"));
            }
            Payload::Map { domain, values }
        }
        "map_sequence" => Payload::MapSequence(
            as_array(field(obj, "maps")?, "maps")?
                .iter()
                .map(|m| parse_cdfs(m, "map"))
                .collect::<Result<_, _>>()?,
        ),
        "report" => {
            let bool_opt = |key: &str| -> Result<Option<bool>, DocError> {
                opt(obj, key)
                    .map(|v| v.as_bool().ok_or_else(|| schema(format!("`{key}` must be a boolean"))))
                    .transpose()
            };
            Payload::Report(Report {
                command: field(obj, "command")?
                    .as_str()
                    .ok_or_else(|| schema("`command` must be a string"))?
                    .to_string(),
                eps: as_f64(field(obj, "eps")?, "eps")?,
                selected: parse_indices(field(obj, "selected")?, "selected")?,
                residuals: as_array(field(obj, "residuals")?, "residuals")?
                    .iter()
                    .map(|x| as_f64(x, "residual"))
                    .collect::<Result<_, _>>()?,
                pairwise_dinf: opt(obj, "pairwise_dinf")
                    .map(|v| as_f64(v, "pairwise_dinf"))
                    .transpose()?,
                lipschitz_ok: bool_opt("lipschitz_ok")?,
                cauchy_ok: bool_opt("cauchy_ok")?,
                success: bool_opt("success")?.unwrap_or(false),
                limit: opt(obj, "limit").map(|v| parse_cdfs(v, "limit")).transpose()?,
            })
        }
        other => return Err(schema(format!("unknown kind `{other}`"))),
    };
    Ok(Document { payload, meta })
}

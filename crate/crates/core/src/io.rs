//! JSON files for groups, representations and networks.
//!
//! Rationals are written as normalized `"p/q"` strings. On input, strings
//! (`"p/q"`, integers, decimals) and JSON numbers are all accepted; a JSON
//! number is read through its decimal text, so `0.1` means exactly `1/10`.
//! Group elements are referred to by name or by index.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{json, Map, Value};

use crate::error::{malformed, Error, Result};
use crate::group::{verify_representation, FiniteGroup, RepViolation, Representation};
use crate::linalg::{format_rational, parse_rational, Matrix, Rational};
use crate::relu_net::{ExactNet, FloatNet, MultiLayerNet};

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| malformed(format!("{}: {e}", path.display())))
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn to_json_string(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("values serialize");
    s.push('\n');
    s
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    std::fs::write(path, to_json_string(value)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn rational_to_json(r: &Rational) -> Value {
    Value::String(format_rational(r))
}

pub fn vector_to_json(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(rational_to_json).collect())
}

pub fn matrix_to_json(m: &Matrix<Rational>) -> Value {
    Value::Array((0..m.rows()).map(|i| vector_to_json(m.row(i))).collect())
}

pub fn float_vector_to_json(v: &[f64]) -> Value {
    json!(v)
}

pub fn parse_rational_value(v: &Value) -> Result<Rational> {
    match v {
        Value::String(s) => parse_rational(s),
        Value::Number(n) => parse_rational(&n.to_string()),
        other => Err(malformed(format!("expected a rational, found {other}"))),
    }
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| malformed(format!("missing field {key:?}")))
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| malformed(format!("{what} must be an array")))
}

fn usize_field(v: &Value, key: &str) -> Result<usize> {
    field(v, key)?
        .as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| malformed(format!("{key:?} must be a non-negative integer")))
}

pub fn parse_vector(v: &Value) -> Result<Vec<Rational>> {
    array(v, "vector")?.iter().map(parse_rational_value).collect()
}

pub fn parse_matrix(v: &Value) -> Result<Matrix<Rational>> {
    let rows: Vec<Vec<Rational>> = array(v, "matrix")?.iter().map(parse_vector).collect::<Result<_>>()?;
    if rows.is_empty() {
        return Ok(Matrix::zeros(0, 0));
    }
    Matrix::from_rows(rows)
}

fn element_ref(v: &Value, elements: &[String]) -> Result<usize> {
    match v {
        Value::String(name) => elements
            .iter()
            .position(|e| e == name)
            .ok_or_else(|| malformed(format!("unknown group element {name:?}"))),
        // Out-of-range indices are kept so that closure can be reported.
        Value::Number(n) => n
            .as_u64()
            .map(|x| x as usize)
            .ok_or_else(|| malformed(format!("bad element index {n}"))),
        other => Err(malformed(format!("expected an element name or index, found {other}"))),
    }
}

/// A group table as read from disk, before the axioms are checked.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupData {
    pub elements: Vec<String>,
    pub table: Vec<Vec<usize>>,
    pub identity: usize,
}

impl GroupData {
    pub fn build(self) -> Result<FiniteGroup> {
        FiniteGroup::new(self.elements, self.table, self.identity)
    }
}

pub fn parse_group_data(v: &Value) -> Result<GroupData> {
    let elements: Vec<String> = array(field(v, "elements")?, "elements")?
        .iter()
        .map(|e| {
            e.as_str()
                .map(str::to_string)
                .ok_or_else(|| malformed("element names must be strings"))
        })
        .collect::<Result<_>>()?;
    let table = array(field(v, "table")?, "table")?
        .iter()
        .map(|row| {
            array(row, "table row")?
                .iter()
                .map(|x| element_ref(x, &elements))
                .collect()
        })
        .collect::<Result<Vec<Vec<usize>>>>()?;
    let identity = element_ref(field(v, "identity")?, &elements)?;
    Ok(GroupData {
        elements,
        table,
        identity,
    })
}

pub fn parse_group(v: &Value) -> Result<FiniteGroup> {
    parse_group_data(v)?.build()
}

pub fn load_group(path: &Path) -> Result<FiniteGroup> {
    parse_group(&read_json(path)?)
}

pub fn group_to_json(group: &FiniteGroup) -> Value {
    let names = group.elements();
    json!({
        "elements": names,
        "identity": names[group.identity()],
        "table": group
            .table()
            .iter()
            .map(|row| row.iter().map(|&k| names[k].clone()).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    })
}

/// Representation matrices as read from disk, before the homomorphism
/// property is checked.
#[derive(Debug, Clone)]
pub struct RepresentationData {
    pub group: Arc<FiniteGroup>,
    pub matrices: Vec<Matrix<Rational>>,
}

impl RepresentationData {
    pub fn verify(&self) -> Result<std::result::Result<(), RepViolation>> {
        verify_representation(&self.group, &self.matrices)
    }

    pub fn build(self) -> Result<Representation> {
        Representation::new(self.group, self.matrices)
    }
}

/// Parses a representation whose `"group"` is inline or a path relative to
/// `base`.
pub fn parse_representation_data(v: &Value, base: Option<&Path>) -> Result<RepresentationData> {
    let group = match field(v, "group")? {
        Value::String(p) => {
            let path = base.map_or_else(|| PathBuf::from(p), |b| b.join(p));
            load_group(&path)?
        }
        inline => parse_group(inline)?,
    };
    let dim = usize_field(v, "dim")?;
    let matrices = match field(v, "matrices")? {
        Value::Object(map) => {
            if let Some(unknown) = map.keys().find(|k| group.index_of(k).is_none()) {
                return Err(malformed(format!("matrix given for unknown element {unknown:?}")));
            }
            group
                .elements()
                .iter()
                .map(|name| {
                    map.get(name)
                        .ok_or_else(|| malformed(format!("no matrix for element {name:?}")))
                        .and_then(parse_matrix)
                })
                .collect::<Result<Vec<_>>>()?
        }
        Value::Array(list) => list.iter().map(parse_matrix).collect::<Result<Vec<_>>>()?,
        _ => return Err(malformed("\"matrices\" must be an object or an array")),
    };
    if matrices.len() != group.order() {
        return Err(malformed(format!(
            "expected {} matrices, got {}",
            group.order(),
            matrices.len()
        )));
    }
    let dim_matches = |m: &Matrix<Rational>| {
        // An empty JSON matrix stands for the 0 × 0 matrix.
        (m.rows() == dim && m.cols() == dim) || (dim == 0 && m.rows() == 0)
    };
    if !matrices.iter().all(dim_matches) {
        return Err(malformed(format!("matrices must be {dim} x {dim}")));
    }
    Ok(RepresentationData {
        group: Arc::new(group),
        matrices,
    })
}

pub fn load_representation_data(path: &Path) -> Result<RepresentationData> {
    parse_representation_data(&read_json(path)?, path.parent())
}

pub fn load_representation(path: &Path) -> Result<Representation> {
    load_representation_data(path)?.build()
}

/// Writes the group inline so the file stands alone.
pub fn representation_to_json(rep: &Representation) -> Value {
    let group = rep.group();
    let matrices: Map<String, Value> = (0..group.order())
        .map(|g| (group.name(g).to_string(), matrix_to_json(rep.matrix(g))))
        .collect();
    json!({
        "dim": rep.dim(),
        "group": group_to_json(group),
        "matrices": matrices,
    })
}

pub fn parse_net(v: &Value) -> Result<ExactNet> {
    let n = usize_field(v, "n")?;
    let d = usize_field(v, "d")?;
    let alphas = array(field(v, "alphas")?, "alphas")?
        .iter()
        .map(parse_vector)
        .collect::<Result<_>>()?;
    let betas = array(field(v, "betas")?, "betas")?
        .iter()
        .map(parse_vector)
        .collect::<Result<_>>()?;
    ExactNet::new(n, d, alphas, betas)
}

pub fn load_net(path: &Path) -> Result<ExactNet> {
    parse_net(&read_json(path)?)
}

pub fn net_to_json(net: &ExactNet) -> Value {
    json!({
        "n": net.input_dim(),
        "d": net.output_dim(),
        "alphas": net.alphas().iter().map(|a| vector_to_json(a)).collect::<Vec<_>>(),
        "betas": net.betas().iter().map(|b| vector_to_json(b)).collect::<Vec<_>>(),
    })
}

/// Float weights as JSON numbers in shortest round-trip form.
pub fn float_net_to_json(net: &FloatNet) -> Value {
    json!({
        "n": net.input_dim(),
        "d": net.output_dim(),
        "alphas": net.alphas(),
        "betas": net.betas(),
    })
}

pub fn parse_multilayer(v: &Value) -> Result<MultiLayerNet<Rational>> {
    let weights = array(field(v, "weights")?, "weights")?
        .iter()
        .map(parse_matrix)
        .collect::<Result<_>>()?;
    MultiLayerNet::new(weights)
}

pub fn load_multilayer(path: &Path) -> Result<MultiLayerNet<Rational>> {
    parse_multilayer(&read_json(path)?)
}

pub fn multilayer_to_json(net: &MultiLayerNet<Rational>) -> Value {
    json!({ "weights": net.weights().iter().map(matrix_to_json).collect::<Vec<_>>() })
}

//! JSON and CSV interchange formats.
//!
//! Reals are written with 17 significant digits so that files round-trip
//! exactly. A complex entry is `[re, im]` and a matrix is a list of rows.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde_json::{json, Map, Number, Value};

use crate::applications::cat::RankRow;
use crate::channel::{ChannelSpec, ChoiMatrix, KrausSet, Representation, SuperOperator};
use crate::cqed::{CqedCircuit, CqedRound, EntanglerAngles};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector};
use crate::sim::{DensityMatrix, TrajectoryRecord};
use crate::tree::{AdaptiveCircuit, BinaryLabel, TreeNode};

/// `x` as a JSON number with 17 significant digits; non-finite values become `null`.
pub fn number(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Value::Number(Number::from_str(&format!("{x:.16e}")).expect("formatted float is a JSON number"))
}

/// 17-significant-digit text used in CSV output.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(what: impl Into<String>) -> Error {
    Error::Parse(what.into())
}

fn as_f64(v: &Value, what: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| parse_err(format!("{what}: expected a number, found {v}")))
}

fn as_usize(v: &Value, what: &str) -> Result<usize> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| parse_err(format!("{what}: expected a non-negative integer")))
}

fn field<'a>(obj: &'a Value, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| parse_err(format!("missing field '{key}'")))
}

fn as_array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| parse_err(format!("{what}: expected an array")))
}

pub fn matrix_to_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json!([number(m[(i, j)].re), number(m[(i, j)].im)])).collect()))
            .collect(),
    )
}

pub fn matrix_from_json(v: &Value) -> Result<CMatrix> {
    let rows = as_array(v, "matrix")?;
    let ncols = rows.first().map(|r| as_array(r, "matrix row").map(Vec::len)).transpose()?.unwrap_or(0);
    let mut m = CMatrix::zeros(rows.len(), ncols);
    for (i, row) in rows.iter().enumerate() {
        let row = as_array(row, "matrix row")?;
        if row.len() != ncols {
            return Err(parse_err(format!("matrix row {i} has {} entries, expected {ncols}", row.len())));
        }
        for (j, entry) in row.iter().enumerate() {
            m[(i, j)] = complex_from_json(entry)?;
        }
    }
    Ok(m)
}

fn complex_from_json(v: &Value) -> Result<crate::linalg::C64> {
    match v {
        Value::Number(_) => Ok(c(as_f64(v, "entry")?, 0.0)),
        Value::Array(pair) if pair.len() == 2 => Ok(c(as_f64(&pair[0], "re")?, as_f64(&pair[1], "im")?)),
        other => Err(parse_err(format!("complex entry must be [re, im], found {other}"))),
    }
}

pub fn vector_to_json(v: &CVector) -> Value {
    Value::Array(v.iter().map(|z| json!([number(z.re), number(z.im)])).collect())
}

pub fn vector_from_json(v: &Value) -> Result<CVector> {
    let entries = as_array(v, "vector")?;
    let values = entries.iter().map(complex_from_json).collect::<Result<Vec<_>>>()?;
    Ok(CVector::from_vec(values))
}

fn reals(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| number(x)).collect())
}

pub fn channel_to_json(ch: &ChannelSpec) -> Value {
    let matrices: Vec<Value> = match &ch.repr {
        Representation::Kraus(k) => k.ops().iter().map(matrix_to_json).collect(),
        Representation::SuperOp(s) => vec![matrix_to_json(s.matrix())],
        Representation::Choi(m) => vec![matrix_to_json(m.matrix())],
    };
    let mut obj = Map::new();
    obj.insert("label".into(), json!(ch.label));
    obj.insert("dim".into(), json!(ch.dim()));
    obj.insert("repr".into(), json!(ch.repr.name()));
    if ch.pad > 0 {
        obj.insert("pad".into(), json!(ch.pad));
    }
    obj.insert("matrices".into(), Value::Array(matrices));
    Value::Object(obj)
}

/// Reads a channel file. Kraus operators may be rectangular, in which case
/// they are zero-padded to a common square dimension.
pub fn channel_from_json(v: &Value) -> Result<ChannelSpec> {
    let repr = field(v, "repr")?.as_str().ok_or_else(|| parse_err("'repr' must be a string"))?;
    let matrices = as_array(field(v, "matrices")?, "matrices")?
        .iter()
        .map(matrix_from_json)
        .collect::<Result<Vec<_>>>()?;
    let label = v.get("label").and_then(Value::as_str).unwrap_or("channel").to_string();
    let mut ch = match repr {
        "kraus" => {
            let square = matrices.iter().all(|m| m.is_square());
            if square {
                ChannelSpec::from_kraus(label, KrausSet::new(matrices)?)
            } else {
                let (k, pad) = KrausSet::from_rectangular(matrices)?;
                let mut ch = ChannelSpec::from_kraus(label, k);
                ch.pad = pad;
                ch
            }
        }
        "superop" | "choi" => {
            let [m]: [CMatrix; 1] =
                matrices.try_into().map_err(|_| parse_err(format!("'{repr}' expects exactly one matrix")))?;
            if repr == "superop" {
                ChannelSpec::from_superop(label, SuperOperator::new(m)?)
            } else {
                ChannelSpec::from_choi(label, ChoiMatrix::new(m)?)
            }
        }
        other => return Err(parse_err(format!("unknown representation '{other}'"))),
    };
    if let Some(pad) = v.get("pad") {
        ch.pad = as_usize(pad, "pad")?;
    }
    if let Some(dim) = v.get("dim") {
        let dim = as_usize(dim, "dim")?;
        if dim != ch.dim() {
            return Err(Error::DimensionMismatch { expected: dim, found: ch.dim(), context: "channel file 'dim'" });
        }
    }
    Ok(ch)
}

pub fn circuit_to_json(c: &AdaptiveCircuit) -> Value {
    let nodes: Vec<Value> = c
        .nodes()
        .values()
        .map(|n| {
            let mut obj = Map::new();
            obj.insert("label".into(), json!(n.label.to_string()));
            obj.insert("block0".into(), matrix_to_json(&n.block0));
            obj.insert("block1".into(), matrix_to_json(&n.block1));
            if let Some(u) = &n.full_unitary {
                obj.insert("unitary".into(), matrix_to_json(u));
            }
            Value::Object(obj)
        })
        .collect();
    let leaves: Vec<Value> = c
        .leaf_kraus()
        .iter()
        .map(|(l, k)| json!({"label": l.to_string(), "kraus": matrix_to_json(k)}))
        .collect();
    json!({"dim": c.dim(), "depth": c.depth(), "nodes": nodes, "leaves": leaves})
}

fn label_from_json(v: &Value) -> Result<BinaryLabel> {
    v.as_str().ok_or_else(|| parse_err("label must be a string"))?.parse()
}

/// Reads a circuit file; leaf operators are recomputed from the blocks.
pub fn circuit_from_json(v: &Value) -> Result<AdaptiveCircuit> {
    let dim = as_usize(field(v, "dim")?, "dim")?;
    let depth = as_usize(field(v, "depth")?, "depth")?;
    let nodes = as_array(field(v, "nodes")?, "nodes")?
        .iter()
        .map(|n| {
            let mut node = TreeNode::new(
                label_from_json(field(n, "label")?)?,
                matrix_from_json(field(n, "block0")?)?,
                matrix_from_json(field(n, "block1")?)?,
            );
            node.full_unitary = n.get("unitary").map(matrix_from_json).transpose()?;
            Ok(node)
        })
        .collect::<Result<Vec<_>>>()?;
    AdaptiveCircuit::from_nodes(dim, depth, nodes)
}

pub fn cqed_to_json(c: &CqedCircuit) -> Value {
    let rounds: Vec<Value> = c
        .rounds
        .iter()
        .map(|(l, r)| {
            json!({
                "label": l.to_string(),
                "V": matrix_to_json(&r.v),
                "theta": reals(&r.angles.theta),
                "W0": matrix_to_json(&r.w0),
                "W1": matrix_to_json(&r.w1),
                "degenerate": r.degenerate,
            })
        })
        .collect();
    json!({"dim": c.dim, "depth": c.depth, "rounds": rounds})
}

pub fn cqed_from_json(v: &Value) -> Result<CqedCircuit> {
    let dim = as_usize(field(v, "dim")?, "dim")?;
    let depth = as_usize(field(v, "depth")?, "depth")?;
    let mut rounds = BTreeMap::new();
    for r in as_array(field(v, "rounds")?, "rounds")? {
        let theta = as_array(field(r, "theta")?, "theta")?
            .iter()
            .map(|x| as_f64(x, "theta"))
            .collect::<Result<Vec<_>>>()?;
        let round = CqedRound {
            v: matrix_from_json(field(r, "V")?)?,
            angles: EntanglerAngles { theta },
            w0: matrix_from_json(field(r, "W0")?)?,
            w1: matrix_from_json(field(r, "W1")?)?,
            degenerate: r.get("degenerate").and_then(Value::as_bool).unwrap_or(false),
        };
        rounds.insert(label_from_json(field(r, "label")?)?, round);
    }
    Ok(CqedCircuit { dim, depth, rounds })
}

pub fn state_to_json(rho: &DensityMatrix) -> Value {
    json!({"dim": rho.dim(), "rho": matrix_to_json(rho.matrix())})
}

/// Reads `{"rho": matrix}` or `{"psi": vector}`.
pub fn state_from_json(v: &Value) -> Result<DensityMatrix> {
    let rho = if let Some(m) = v.get("rho") {
        DensityMatrix::new(matrix_from_json(m)?)?
    } else if let Some(psi) = v.get("psi") {
        let psi = vector_from_json(psi)?;
        if psi.norm() == 0.0 {
            return Err(parse_err("state vector is zero"));
        }
        DensityMatrix::pure(&psi)
    } else {
        return Err(parse_err("state file needs 'rho' or 'psi'"));
    };
    if let Some(dim) = v.get("dim") {
        let dim = as_usize(dim, "dim")?;
        if dim != rho.dim() {
            return Err(Error::DimensionMismatch { expected: dim, found: rho.dim(), context: "state file 'dim'" });
        }
    }
    Ok(rho)
}

/// One trajectory log record, without a trailing newline.
pub fn trajectory_line(rec: &TrajectoryRecord, target: Option<&CVector>) -> String {
    let mut obj = Map::new();
    obj.insert("bits".into(), json!(rec.outcome_bits.to_string()));
    obj.insert("p".into(), number(rec.probability));
    if let Some(psi) = target {
        obj.insert("fidelity_to".into(), number(rec.final_state.fidelity_to_pure(psi)));
    }
    Value::Object(obj).to_string()
}

/// `t,rank,λ1,…` with one row per time; short rows are left ragged.
pub fn rank_table_csv(rows: &[RankRow]) -> String {
    let width = rows.iter().map(|r| r.magnitudes.len()).max().unwrap_or(0);
    let mut out = String::from("t,rank");
    for k in 1..=width {
        out.push_str(&format!(",lambda{k}"));
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format!("{},{}", format_real(row.t), row.rank));
        for &m in &row.magnitudes {
            out.push(',');
            out.push_str(&format_real(m));
        }
        out.push('\n');
    }
    out
}

/// Pretty JSON text with a trailing newline.
pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values built here always serialize");
    s.push('\n');
    s
}

pub fn parse_text(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))
}

//! JSON family documents and named presets.
//!
//! Polynomial form:
//! `{"type":"polynomial","dim":n,"coefficients":[[row-major entries], …]}`
//! where an entry is a number or an `[re, im]` pair, plus an optional
//! `"radius"` (a positive number or `"unbounded"`).
//!
//! Structured form:
//! `{"type":"structured","dim":N,"diagonal":{…},"a1_diagonal":{…},
//! "rank_one":[{"vector":[…],"coupling":"t","sign":-1}]}` where a vector is
//! a dense entry list or `{"sparse":[[k, entry], …]}` with 1-based `k`.
//! Unknown fields are rejected everywhere.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::casebook::{example62_family, volterra_family};
use crate::linalg::{ComplexMatrix, HermitianMatrix};
use crate::model::{
    Coupling, DiagonalRule, DiagonalTail, Family, ModelError, PolynomialFamily, RankOneTerm, Sign,
    StructuredFamily, DEFAULT_TAIL_TOL,
};
use crate::secular::Example62Kind;

pub const PRESETS: [&str; 3] = ["example62a", "example62b", "volterra"];
pub const DEFAULT_EXAMPLE62_DIM: usize = 400;
pub const DEFAULT_VOLTERRA_DIM: usize = 256;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
enum EntryDoc {
    Real(f64),
    Complex([f64; 2]),
}

impl EntryDoc {
    fn value(&self) -> Complex64 {
        match *self {
            EntryDoc::Real(x) => Complex64::new(x, 0.0),
            EntryDoc::Complex([re, im]) => Complex64::new(re, im),
        }
    }

    fn from_value(z: Complex64) -> Self {
        if z.im == 0.0 {
            EntryDoc::Real(z.re)
        } else {
            EntryDoc::Complex([z.re, z.im])
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RadiusDoc {
    Value(f64),
    Named(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolynomialDoc {
    #[serde(rename = "type")]
    _kind: String,
    dim: usize,
    coefficients: Vec<Vec<EntryDoc>>,
    #[serde(default)]
    radius: Option<RadiusDoc>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TailDoc {
    rule: String,
    #[serde(default)]
    values: Option<Vec<f64>>,
    #[serde(default)]
    value: Option<f64>,
    #[serde(default)]
    slope: Option<f64>,
    #[serde(default)]
    scale: Option<f64>,
    #[serde(default)]
    ratio: Option<f64>,
    #[serde(default)]
    odd: Option<Box<TailDoc>>,
    #[serde(default)]
    even: Option<Box<TailDoc>>,
    #[serde(default)]
    head: Option<Vec<f64>>,
    #[serde(default)]
    limit_points: Option<Vec<f64>>,
    #[serde(default)]
    tail_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SparseDoc {
    sparse: Vec<(usize, EntryDoc)>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum VectorDoc {
    Dense(Vec<EntryDoc>),
    Sparse(SparseDoc),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CouplingDoc {
    Named(String),
    Coefficients(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RankOneDoc {
    vector: VectorDoc,
    coupling: CouplingDoc,
    sign: i64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StructuredDoc {
    #[serde(rename = "type")]
    _kind: String,
    dim: usize,
    diagonal: TailDoc,
    #[serde(default)]
    a1_diagonal: Option<TailDoc>,
    #[serde(default)]
    rank_one: Vec<RankOneDoc>,
}

fn parse_error(path: impl Into<String>, message: impl Into<String>) -> ModelError {
    ModelError::Parse {
        path: path.into(),
        message: message.into(),
    }
}

fn typed<T: serde::de::DeserializeOwned>(value: Value) -> Result<T, ModelError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        parse_error(path, e.into_inner().to_string())
    })
}

/// Parses a family document.
pub fn parse_family(text: &str) -> Result<Family, ModelError> {
    let value: Value = serde_json::from_str(text).map_err(|e| parse_error(".", e.to_string()))?;
    parse_family_value(value)
}

pub fn parse_family_value(value: Value) -> Result<Family, ModelError> {
    let kind = value
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| parse_error("type", "missing or non-string `type`"))?
        .to_string();
    match kind.as_str() {
        "polynomial" => Ok(polynomial_from_doc(typed(value)?)?.into()),
        "structured" => Ok(structured_from_doc(typed(value)?)?.into()),
        other => Err(parse_error(
            "type",
            format!("unknown family type `{other}` (expected polynomial or structured)"),
        )),
    }
}

fn polynomial_from_doc(doc: PolynomialDoc) -> Result<PolynomialFamily, ModelError> {
    if doc.dim == 0 {
        return Err(parse_error("dim", "dim must be positive"));
    }
    let mut coefficients = Vec::with_capacity(doc.coefficients.len());
    for (k, entries) in doc.coefficients.iter().enumerate() {
        if entries.len() != doc.dim * doc.dim {
            return Err(parse_error(
                format!("coefficients[{k}]"),
                format!("expected {} entries, got {}", doc.dim * doc.dim, entries.len()),
            ));
        }
        let m = ComplexMatrix::from_row_major(
            doc.dim,
            doc.dim,
            entries.iter().map(EntryDoc::value).collect(),
        )?;
        coefficients.push(HermitianMatrix::new(m)?);
    }
    let radius = match doc.radius {
        None => None,
        Some(RadiusDoc::Value(r)) => Some(r),
        Some(RadiusDoc::Named(s)) if s == "unbounded" => None,
        Some(RadiusDoc::Named(s)) => {
            return Err(parse_error("radius", format!("expected a number or \"unbounded\", got `{s}`")))
        }
    };
    PolynomialFamily::new(coefficients, radius)
}

fn rule_from_doc(doc: &TailDoc, path: &str) -> Result<DiagonalRule, ModelError> {
    let need = |field: &str, v: Option<f64>| {
        v.ok_or_else(|| parse_error(format!("{path}.{field}"), format!("rule `{}` needs `{field}`", doc.rule)))
    };
    let rule = match doc.rule.as_str() {
        "list" => DiagonalRule::List(
            doc.values
                .clone()
                .ok_or_else(|| parse_error(format!("{path}.values"), "rule `list` needs `values`"))?,
        ),
        "constant" => DiagonalRule::Constant(need("value", doc.value)?),
        "linear" => DiagonalRule::Linear {
            slope: need("slope", doc.slope)?,
        },
        "recip_k" => DiagonalRule::Reciprocal {
            scale: doc.scale.unwrap_or(1.0),
        },
        "geometric" => DiagonalRule::Geometric {
            scale: need("scale", doc.scale)?,
            ratio: need("ratio", doc.ratio)?,
        },
        "exp_neg_k" => DiagonalRule::ExpNegK,
        "interleave" => {
            let sub = |field: &str, d: &Option<Box<TailDoc>>| -> Result<DiagonalRule, ModelError> {
                let d = d.as_ref().ok_or_else(|| {
                    parse_error(format!("{path}.{field}"), "rule `interleave` needs `odd` and `even`")
                })?;
                let sub_path = format!("{path}.{field}");
                if d.head.is_some() || d.limit_points.is_some() || d.tail_tol.is_some() {
                    return Err(parse_error(
                        sub_path,
                        "nested rules take no head, limit_points or tail_tol",
                    ));
                }
                rule_from_doc(d, &sub_path)
            };
            DiagonalRule::Interleave {
                odd: Box::new(sub("odd", &doc.odd)?),
                even: Box::new(sub("even", &doc.even)?),
            }
        }
        other => {
            return Err(parse_error(
                format!("{path}.rule"),
                format!(
                    "unknown rule `{other}` (expected list, constant, linear, recip_k, geometric, exp_neg_k or interleave)"
                ),
            ))
        }
    };
    Ok(rule)
}

fn tail_from_doc(doc: &TailDoc, dim: usize, path: &str) -> Result<DiagonalTail, ModelError> {
    let rule = rule_from_doc(doc, path)?;
    DiagonalTail::new(
        rule,
        doc.head.clone().unwrap_or_default(),
        doc.limit_points.clone(),
        dim,
        doc.tail_tol.unwrap_or(DEFAULT_TAIL_TOL),
    )
}

fn coupling_from_doc(doc: &CouplingDoc, path: &str) -> Result<Coupling, ModelError> {
    match doc {
        CouplingDoc::Named(s) => match s.replace(' ', "").as_str() {
            "1" => Ok(Coupling::monomial(0)),
            "t" => Ok(Coupling::monomial(1)),
            other => other
                .strip_prefix("t^")
                .and_then(|k| k.parse::<usize>().ok())
                .map(Coupling::monomial)
                .ok_or_else(|| {
                    parse_error(path, format!("unknown coupling `{s}` (expected \"1\", \"t\", \"t^k\" or a coefficient list)"))
                }),
        },
        CouplingDoc::Coefficients(c) => Coupling::new(c.clone()),
    }
}

fn vector_from_doc(doc: &VectorDoc, dim: usize, path: &str) -> Result<Vec<Complex64>, ModelError> {
    match doc {
        VectorDoc::Dense(entries) => {
            if entries.len() != dim {
                return Err(parse_error(path, format!("expected {dim} entries, got {}", entries.len())));
            }
            Ok(entries.iter().map(EntryDoc::value).collect())
        }
        VectorDoc::Sparse(s) => {
            let mut v = vec![Complex64::new(0.0, 0.0); dim];
            for &(k, ref entry) in &s.sparse {
                if k == 0 || k > dim {
                    return Err(parse_error(
                        format!("{path}.sparse"),
                        format!("index {k} outside 1..={dim}"),
                    ));
                }
                v[k - 1] = entry.value();
            }
            Ok(v)
        }
    }
}

fn structured_from_doc(doc: StructuredDoc) -> Result<StructuredFamily, ModelError> {
    let base = tail_from_doc(&doc.diagonal, doc.dim, "diagonal")?;
    let a1 = doc
        .a1_diagonal
        .as_ref()
        .map(|d| tail_from_doc(d, doc.dim, "a1_diagonal"))
        .transpose()?;
    let mut terms = Vec::with_capacity(doc.rank_one.len());
    for (i, r) in doc.rank_one.iter().enumerate() {
        let path = format!("rank_one[{i}]");
        let sign = match r.sign {
            1 => Sign::Plus,
            -1 => Sign::Minus,
            s => return Err(parse_error(format!("{path}.sign"), format!("sign must be 1 or -1, got {s}"))),
        };
        terms.push(RankOneTerm {
            vector: vector_from_doc(&r.vector, doc.dim, &format!("{path}.vector"))?,
            coupling: coupling_from_doc(&r.coupling, &format!("{path}.coupling"))?,
            sign,
        });
    }
    StructuredFamily::new(base, a1, terms)
}

fn rule_to_value(rule: &DiagonalRule) -> serde_json::Map<String, Value> {
    let v = match rule {
        DiagonalRule::List(values) => json!({"rule": "list", "values": values}),
        DiagonalRule::Constant(c) => json!({"rule": "constant", "value": c}),
        DiagonalRule::Linear { slope } => json!({"rule": "linear", "slope": slope}),
        DiagonalRule::Reciprocal { scale } => json!({"rule": "recip_k", "scale": scale}),
        DiagonalRule::Geometric { scale, ratio } => {
            json!({"rule": "geometric", "scale": scale, "ratio": ratio})
        }
        DiagonalRule::ExpNegK => json!({"rule": "exp_neg_k"}),
        DiagonalRule::Interleave { odd, even } => json!({
            "rule": "interleave",
            "odd": Value::Object(rule_to_value(odd)),
            "even": Value::Object(rule_to_value(even)),
        }),
    };
    match v {
        Value::Object(m) => m,
        _ => unreachable!("json! object literal"),
    }
}

fn tail_to_value(tail: &DiagonalTail) -> Value {
    let mut m = rule_to_value(tail.rule());
    if !tail.head().is_empty() {
        m.insert("head".into(), json!(tail.head()));
    }
    m.insert("limit_points".into(), json!(tail.limit_points()));
    if tail.tail_tol() != DEFAULT_TAIL_TOL {
        m.insert("tail_tol".into(), json!(tail.tail_tol()));
    }
    Value::Object(m)
}

fn entry_value(z: Complex64) -> Value {
    serde_json::to_value(EntryDoc::from_value(z)).expect("entries serialize")
}

fn vector_to_value(v: &[Complex64]) -> Value {
    let nonzero: Vec<(usize, Complex64)> = v
        .iter()
        .enumerate()
        .filter(|(_, z)| **z != Complex64::new(0.0, 0.0))
        .map(|(i, z)| (i + 1, *z))
        .collect();
    if 2 * nonzero.len() <= v.len() {
        json!({"sparse": nonzero.iter().map(|&(k, z)| json!([k, entry_value(z)])).collect::<Vec<_>>()})
    } else {
        Value::Array(v.iter().map(|&z| entry_value(z)).collect())
    }
}

fn coupling_to_value(c: &Coupling) -> Value {
    match c.as_monomial() {
        Some(0) => json!("1"),
        Some(1) => json!("t"),
        Some(k) => json!(format!("t^{k}")),
        None => json!(c.coefficients()),
    }
}

/// Serializes a family to the document format; `parse_family` inverts it.
pub fn family_to_value(family: &Family) -> Value {
    match family {
        Family::Polynomial(p) => {
            let n = p.dim();
            let coefficients: Vec<Value> = p
                .coefficients()
                .iter()
                .map(|c| {
                    let mut entries = Vec::with_capacity(n * n);
                    for i in 0..n {
                        for j in 0..n {
                            entries.push(entry_value(c.entry(i, j)));
                        }
                    }
                    Value::Array(entries)
                })
                .collect();
            let mut doc = json!({"type": "polynomial", "dim": n, "coefficients": coefficients});
            if let Some(r) = p.radius() {
                doc["radius"] = json!(r);
            }
            doc
        }
        Family::Structured(s) => {
            let mut doc = json!({
                "type": "structured",
                "dim": s.dim(),
                "diagonal": tail_to_value(s.base()),
            });
            if let Some(e) = s.a1_diagonal() {
                doc["a1_diagonal"] = tail_to_value(e);
            }
            doc["rank_one"] = Value::Array(
                s.rank_one_terms()
                    .iter()
                    .map(|r| {
                        json!({
                            "vector": vector_to_value(&r.vector),
                            "coupling": coupling_to_value(&r.coupling),
                            "sign": if r.sign == Sign::Plus { 1 } else { -1 },
                        })
                    })
                    .collect(),
            );
            doc
        }
    }
}

pub fn serialize_family(family: &Family) -> String {
    serde_json::to_string_pretty(&family_to_value(family)).expect("values serialize")
}

/// Named families: `example62a`, `example62b` (`dim` default 400) and
/// `volterra` (`[Re V_N, Im V_N]`, `dim` default 256).
pub fn preset(name: &str, dim: Option<usize>) -> Result<Family, ModelError> {
    let casebook = |e: crate::casebook::CasebookError| ModelError::InvalidFamily(e.to_string());
    match name {
        "example62a" | "example62b" => {
            let kind = if name.ends_with('a') { Example62Kind::A } else { Example62Kind::B };
            Ok(example62_family(kind, dim.unwrap_or(DEFAULT_EXAMPLE62_DIM))
                .map_err(casebook)?
                .into())
        }
        "volterra" => Ok(volterra_family(dim.unwrap_or(DEFAULT_VOLTERRA_DIM))
            .map_err(casebook)?
            .into()),
        other => Err(ModelError::UnknownPreset(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::secular::{example62_sparse_weights, SecularModel};

    #[test]
    fn minimal_polynomial() {
        let f = parse_family(r#"{"type":"polynomial","dim":2,"coefficients":[[1,0,0,2]]}"#).unwrap();
        assert_eq!(f.dim(), 2);
        let a = f.evaluate(5.0).unwrap();
        assert_eq!(a.entry(1, 1), Complex64::new(2.0, 0.0));
    }

    #[test]
    fn non_hermitian_coefficient_rejected() {
        let err = parse_family(
            r#"{"type":"polynomial","dim":2,"coefficients":[[0,0,0,0],[0,1,2,0]]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::Linalg(_)), "{err}");
    }

    #[test]
    fn unknown_field_reports_path() {
        let err = parse_family(
            r#"{"type":"structured","dim":4,"diagonal":{"rule":"exp_neg_k","limit_points":[0],"colour":1}}"#,
        )
        .unwrap_err();
        match err {
            ModelError::Parse { path, message } => {
                assert_eq!(path, "diagonal.colour");
                assert!(message.contains("colour"), "{message}");
            }
            e => panic!("{e}"),
        }
        let err = parse_family(r#"{"type":"banana"}"#).unwrap_err();
        assert!(matches!(err, ModelError::Parse { .. }));
        let err = parse_family(r#"{"type":"polynomial","dim":"x","coefficients":[]}"#).unwrap_err();
        assert!(matches!(err, ModelError::Parse { ref path, .. } if path == "dim"), "{err}");
    }

    #[test]
    fn preset_weights() {
        let f = preset("example62a", Some(100)).unwrap();
        let s = f.as_structured().unwrap();
        let v = &s.rank_one_terms()[0].vector;
        let nonzero: Vec<(usize, f64)> = v
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() > 0.0)
            .map(|(i, z)| (i + 1, z.norm_sqr()))
            .collect();
        assert_eq!(nonzero.len(), 3);
        for ((k, w), (k2, w2)) in nonzero.iter().zip(example62_sparse_weights(Example62Kind::A, 100)) {
            assert_eq!(*k, k2);
            assert!((w - w2).abs() < 1e-15);
        }
        assert!(matches!(preset("nope", None), Err(ModelError::UnknownPreset(_))));
        assert_eq!(preset("volterra", Some(16)).unwrap().dim(), 16);
    }

    #[test]
    fn round_trips() {
        for name in PRESETS {
            let f = preset(name, Some(32)).unwrap();
            let back = parse_family(&serialize_family(&f)).unwrap();
            assert_eq!(back, f, "{name}");
        }
        let text = r#"{"type":"structured","dim":10,
            "diagonal":{"rule":"interleave","odd":{"rule":"recip_k"},"even":{"rule":"constant","value":1},
                        "head":[0],"limit_points":[0,1]},
            "a1_diagonal":{"rule":"list","values":[1,1,1,1,1,1,1,1,1,1],"limit_points":[1]},
            "rank_one":[{"vector":{"sparse":[[2,[0.5,0.5]]]},"coupling":[0,1,2],"sign":1},
                        {"vector":[1,0,0,0,0,0,0,0,0,1],"coupling":"t^2","sign":-1}]}"#;
        let f = parse_family(text).unwrap();
        let back = parse_family(&serialize_family(&f)).unwrap();
        assert_eq!(back, f);
        assert_eq!(f.as_structured().unwrap().essential_points().points, vec![(0.0, 1.0), (1.0, 1.0)]);
    }

    #[test]
    fn preset_round_trip_keeps_secular_model() {
        let f = preset("example62b", Some(120)).unwrap();
        let back = parse_family(&serialize_family(&f)).unwrap();
        let a = SecularModel::from_family(f.as_structured().unwrap()).unwrap();
        let b = SecularModel::from_family(back.as_structured().unwrap()).unwrap();
        assert_eq!(a.lambda_min(0.01).unwrap(), b.lambda_min(0.01).unwrap());
    }

    #[test]
    fn bad_sparse_index() {
        let err = parse_family(
            r#"{"type":"structured","dim":4,"diagonal":{"rule":"exp_neg_k","head":[0],"limit_points":[0]},
                "rank_one":[{"vector":{"sparse":[[5,1]]},"coupling":"t","sign":-1}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::Parse { ref path, .. } if path == "rank_one[0].vector.sparse"), "{err}");
    }
}

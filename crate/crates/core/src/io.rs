//! JSON formats.
//!
//! Kernel files look like
//! `{"labels": ["a", "b"], "mu": ["1/2", "1/2"], "w": [["2", "1"], ["1", "0"]], "symmetric": true}`
//! where every rational is a `"p/q"` string, a decimal string or a JSON
//! number. `labels` is optional and `symmetric` defaults to `true`. Types of
//! mass zero are dropped while reading. Graph files look like
//! `{"n": 4, "edges": [[0, 1], [1, 2]]}`.

use num_traits::{Signed, Zero};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernel::{StepAkernel, StepKernel};
use crate::rational::{self, Q};

/// Line (1-based) of the first occurrence of `"field"` as an object key.
fn line_of(text: &str, field: &str) -> Option<usize> {
    let needle = format!("\"{field}\"");
    let pos = text.find(&needle)?;
    Some(text[..pos].matches('\n').count() + 1)
}

fn located(text: &str, field: &str, path: &str, msg: &str) -> String {
    match line_of(text, field) {
        Some(line) => format!("line {line}, field {path}: {msg}"),
        None => format!("field {path}: {msg}"),
    }
}

fn parse_value(text: &str) -> Result<Map<String, Value>> {
    match serde_json::from_str::<Value>(text)? {
        Value::Object(map) => Ok(map),
        _ => Err(Error::InvalidKernel("top-level JSON value must be an object".into())),
    }
}

fn rational_value(v: &Value) -> Option<Q> {
    match v {
        Value::String(s) => rational::parse_rational(s),
        Value::Number(n) => rational::parse_rational(&n.to_string()),
        _ => None,
    }
}

fn read_akernel(text: &str) -> Result<(StepAkernel, bool)> {
    let map = parse_value(text)?;
    let bad = |field: &str, path: &str, msg: &str| Error::InvalidKernel(located(text, field, path, msg));

    let mu_json = map.get("mu").ok_or_else(|| bad("mu", "mu", "missing"))?;
    let mu_json = mu_json.as_array().ok_or_else(|| bad("mu", "mu", "expected an array"))?;
    let mut mu = Vec::with_capacity(mu_json.len());
    for (i, v) in mu_json.iter().enumerate() {
        let x = rational_value(v).ok_or_else(|| bad("mu", &format!("mu[{i}]"), "not a rational"))?;
        if x.is_negative() {
            return Err(bad("mu", &format!("mu[{i}]"), "negative mass"));
        }
        mu.push(x);
    }
    if mu.is_empty() {
        return Err(bad("mu", "mu", "no types"));
    }
    if rational::sum(&mu) != Q::from_integer(1.into()) {
        let total = rational::format_rational(&rational::sum(&mu));
        return Err(bad("mu", "mu", &format!("masses sum to {total}, expected 1")));
    }

    let n = mu.len();
    let w_json = map.get("w").ok_or_else(|| bad("w", "w", "missing"))?;
    let rows = w_json.as_array().ok_or_else(|| bad("w", "w", "expected an array of rows"))?;
    if rows.len() != n {
        return Err(bad("w", "w", &format!("{} rows for {n} types", rows.len())));
    }
    let mut w = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| bad("w", &format!("w[{i}]"), "expected an array"))?;
        if row.len() != n {
            return Err(bad("w", &format!("w[{i}]"), &format!("{} entries for {n} types", row.len())));
        }
        let mut parsed = Vec::with_capacity(n);
        for (j, v) in row.iter().enumerate() {
            let path = format!("w[{i}][{j}]");
            let x = rational_value(v).ok_or_else(|| bad("w", &path, "not a rational"))?;
            if x.is_negative() {
                return Err(bad("w", &path, "negative entry"));
            }
            parsed.push(x);
        }
        w.push(parsed);
    }

    let symmetric = match map.get("symmetric") {
        None => true,
        Some(Value::Bool(b)) => *b,
        Some(_) => return Err(bad("symmetric", "symmetric", "expected a boolean")),
    };
    if symmetric {
        for i in 0..n {
            for j in 0..i {
                if w[i][j] != w[j][i] {
                    return Err(bad("w", &format!("w[{i}][{j}]"), &format!("differs from w[{j}][{i}]")));
                }
            }
        }
    }

    let labels = match map.get("labels") {
        None | Some(Value::Null) => None,
        Some(Value::Array(ls)) => {
            if ls.len() != n {
                return Err(bad("labels", "labels", &format!("{} labels for {n} types", ls.len())));
            }
            let mut out = Vec::with_capacity(n);
            for (i, l) in ls.iter().enumerate() {
                match l {
                    Value::String(s) => out.push(s.clone()),
                    _ => return Err(bad("labels", &format!("labels[{i}]"), "expected a string")),
                }
            }
            Some(out)
        }
        Some(_) => return Err(bad("labels", "labels", "expected an array")),
    };

    let keep: Vec<usize> = (0..n).filter(|&i| !mu[i].is_zero()).collect();
    let mu: Vec<Q> = keep.iter().map(|&i| mu[i].clone()).collect();
    let w: Vec<Vec<Q>> = keep.iter().map(|&i| keep.iter().map(|&j| w[i][j].clone()).collect()).collect();
    let mut kernel = StepAkernel::new(mu, w)?;
    if let Some(labels) = labels {
        kernel = kernel.with_labels(keep.iter().map(|&i| labels[i].clone()).collect())?;
    }
    Ok((kernel, symmetric))
}

/// Reads an akernel; `symmetric` may be `true` or `false`.
pub fn parse_akernel(text: &str) -> Result<StepAkernel> {
    Ok(read_akernel(text)?.0)
}

/// Reads a symmetric kernel.
pub fn parse_kernel(text: &str) -> Result<StepKernel> {
    let (k, declared) = read_akernel(text)?;
    if !declared && !k.is_symmetric() {
        return Err(Error::InvalidKernel("a symmetric kernel is required here".into()));
    }
    StepKernel::try_from(k)
}

pub fn akernel_to_json(k: &StepAkernel) -> Value {
    let mut v = json!({
        "mu": k.mu().iter().map(rational::format_rational).collect::<Vec<_>>(),
        "w": k.w().iter().map(|r| r.iter().map(rational::format_rational).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "symmetric": k.is_symmetric(),
    });
    if let Some(labels) = k.labels() {
        v["labels"] = json!(labels);
    }
    v
}

pub fn parse_graph(text: &str) -> Result<Graph> {
    let map = match serde_json::from_str::<Value>(text)? {
        Value::Object(map) => map,
        _ => return Err(Error::InvalidGraph("top-level JSON value must be an object".into())),
    };
    let bad = |field: &str, path: &str, msg: &str| Error::InvalidGraph(located(text, field, path, msg));
    let n = map
        .get("n")
        .ok_or_else(|| bad("n", "n", "missing"))?
        .as_u64()
        .ok_or_else(|| bad("n", "n", "expected a nonnegative integer"))? as usize;
    let edges_json = match map.get("edges") {
        None => Vec::new(),
        Some(Value::Array(es)) => es.clone(),
        Some(_) => return Err(bad("edges", "edges", "expected an array")),
    };
    let mut edges = Vec::with_capacity(edges_json.len());
    for (idx, e) in edges_json.iter().enumerate() {
        let pair = e
            .as_array()
            .filter(|p| p.len() == 2)
            .and_then(|p| Some((p[0].as_u64()? as usize, p[1].as_u64()? as usize)))
            .ok_or_else(|| bad("edges", &format!("edges[{idx}]"), "expected a pair of vertex indices"))?;
        edges.push(pair);
    }
    Graph::new(n, edges).map_err(|e| match e {
        Error::InvalidGraph(msg) => Error::InvalidGraph(located(text, "edges", "edges", &msg)),
        other => other,
    })
}

pub fn graph_to_json(g: &Graph) -> Value {
    json!({ "n": g.n(), "edges": g.edges().map(|(u, v)| [u, v]).collect::<Vec<_>>() })
}

//! JSON inputs (maps, spans, parameter sequences and trees, grid structures)
//! and the canonical report format.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::Ratio;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::classify::{ParamSequence, ParamTree};
use crate::model::{tuples, FiniteStructure};
use crate::morphism::StructureMap;
use crate::syntax::SortId;
use crate::translate::{GridStructure, GridTable};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct JsonError(pub String);

fn err<T>(msg: impl Into<String>) -> Result<T, JsonError> {
    Err(JsonError(msg.into()))
}

fn object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>, JsonError> {
    v.as_object().ok_or_else(|| JsonError(format!("{what} must be a JSON object")))
}

fn string<'a>(v: &'a Value, what: &str) -> Result<&'a str, JsonError> {
    v.as_str().ok_or_else(|| JsonError(format!("{what} must be a string")))
}

fn field<'a>(o: &'a Map<String, Value>, key: &str) -> Result<&'a Value, JsonError> {
    o.get(key).ok_or_else(|| JsonError(format!("missing field `{key}`")))
}

fn usize_field(o: &Map<String, Value>, key: &str) -> Result<usize, JsonError> {
    field(o, key)?
        .as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| JsonError(format!("`{key}` must be a non-negative integer")))
}

/// `{sort: {elem: elem}}`, listing only the elements with an image.
pub fn map_to_json(f: &StructureMap, src: &FiniteStructure, dst: &FiniteStructure) -> Value {
    let sig = src.signature();
    let mut out = Map::new();
    for s in sig.sort_ids() {
        let mut m = Map::new();
        for e in 0..src.size(s) {
            if let Some(v) = f.get(s, e) {
                m.insert(src.elem_name(s, e).to_string(), Value::String(dst.elem_name(s, v).to_string()));
            }
        }
        out.insert(sig.sort_name(s).to_string(), Value::Object(m));
    }
    Value::Object(out)
}

pub fn map_from_json(v: &Value, src: &FiniteStructure, dst: &FiniteStructure) -> Result<StructureMap, JsonError> {
    let sig = src.signature();
    let mut f = StructureMap::empty(src);
    for (sort, entries) in object(v, "a map")? {
        let s = sig.sort_id(sort).ok_or_else(|| JsonError(format!("unknown sort `{sort}`")))?;
        for (a, b) in object(entries, "a sort's entries")? {
            let b = string(b, "an image")?;
            let ea = src
                .elem_index(s, a)
                .ok_or_else(|| JsonError(format!("`{a}` is not an element of sort `{sort}` in the source")))?;
            let eb = dst
                .elem_index(s, b)
                .ok_or_else(|| JsonError(format!("`{b}` is not an element of sort `{sort}` in the target")))?;
            f.set(s, ea, eb);
        }
    }
    Ok(f)
}

/// Two maps out of a common structure, as read from
/// `{"m0": path, "m1": path, "m2": path, "f": map, "g": map}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Span {
    pub m0: FiniteStructure,
    pub m1: FiniteStructure,
    pub m2: FiniteStructure,
    pub f: StructureMap,
    pub g: StructureMap,
}

/// `load` resolves a structure path (relative to the JSON file).
pub fn span_from_json(v: &Value, load: &mut dyn FnMut(&str) -> Result<FiniteStructure, String>) -> Result<Span, JsonError> {
    let o = object(v, "a span")?;
    let mut get = |k: &str| -> Result<FiniteStructure, JsonError> { load(string(field(o, k)?, k)?).map_err(JsonError) };
    let m0 = get("m0")?;
    let m1 = get("m1")?;
    let m2 = get("m2")?;
    let f = map_from_json(field(o, "f")?, &m0, &m1)?;
    let g = map_from_json(field(o, "g")?, &m0, &m2)?;
    Ok(Span { m0, m1, m2, f, g })
}

fn tuple_sorts(o: &Map<String, Value>, m: &FiniteStructure, sample: Option<&Vec<Value>>) -> Result<Vec<SortId>, JsonError> {
    let sig = m.signature();
    if let Some(v) = o.get("sorts") {
        let arr = v.as_array().ok_or_else(|| JsonError("`sorts` must be an array".into()))?;
        return arr
            .iter()
            .map(|s| {
                let s = string(s, "a sort")?;
                sig.sort_id(s).ok_or_else(|| JsonError(format!("unknown sort `{s}`")))
            })
            .collect();
    }
    let Some(sample) = sample else {
        return err("cannot infer tuple sorts without tuples; give `sorts`");
    };
    sample
        .iter()
        .map(|e| {
            let e = string(e, "an element")?;
            let owners: Vec<SortId> = sig.sort_ids().filter(|&s| m.elem_index(s, e).is_some()).collect();
            match owners.as_slice() {
                [s] => Ok(*s),
                [] => err(format!("unknown element `{e}`")),
                _ => err(format!("element `{e}` is in several sorts; give `sorts`")),
            }
        })
        .collect()
}

fn tuple_from(v: &Value, m: &FiniteStructure, sorts: &[SortId]) -> Result<Vec<usize>, JsonError> {
    let arr = v.as_array().ok_or_else(|| JsonError("a tuple must be an array of element names".into()))?;
    if arr.len() != sorts.len() {
        return err(format!("tuple of length {} where {} expected", arr.len(), sorts.len()));
    }
    arr.iter()
        .zip(sorts)
        .map(|(e, &s)| {
            let e = string(e, "an element")?;
            m.elem_index(s, e)
                .ok_or_else(|| JsonError(format!("`{e}` is not an element of sort `{}`", m.signature().sort_name(s))))
        })
        .collect()
}

fn tuple_to(m: &FiniteStructure, sorts: &[SortId], t: &[usize]) -> Value {
    Value::Array(sorts.iter().zip(t).map(|(&s, &e)| Value::String(m.elem_name(s, e).to_string())).collect())
}

fn sort_names(m: &FiniteStructure, sorts: &[SortId]) -> Value {
    Value::Array(sorts.iter().map(|&s| Value::String(m.signature().sort_name(s).to_string())).collect())
}

/// `{"ambient": path, "tuples": [[…], …]}`, with optional `"sorts"`
/// (inferred from element names when every name lies in a single sort).
pub fn sequence_from_json(v: &Value, load: &mut dyn FnMut(&str) -> Result<FiniteStructure, String>) -> Result<ParamSequence, JsonError> {
    let o = object(v, "a sequence")?;
    let m = load(string(field(o, "ambient")?, "ambient")?).map_err(JsonError)?;
    let rows = field(o, "tuples")?
        .as_array()
        .ok_or_else(|| JsonError("`tuples` must be an array".into()))?;
    let first = rows.first().and_then(|r| r.as_array());
    let sorts = tuple_sorts(o, &m, first)?;
    let ts = rows.iter().map(|r| tuple_from(r, &m, &sorts)).collect::<Result<Vec<_>, _>>()?;
    ParamSequence::new(m, sorts, ts).map_err(|e| JsonError(e.to_string()))
}

pub fn sequence_to_json(s: &ParamSequence, ambient: &str) -> Value {
    json!({
        "ambient": ambient,
        "sorts": sort_names(&s.ambient, &s.sorts),
        "tuples": s.tuples.iter().map(|t| tuple_to(&s.ambient, &s.sorts, t)).collect::<Vec<_>>(),
    })
}

fn node_key(k: &[usize]) -> String {
    k.iter().map(|i| i.to_string()).collect()
}

/// A sequence's fields plus `width`, `depth` and `nodes`, keyed by digit
/// strings (`""` for the root, `"01"` for the second child of the first).
pub fn tree_from_json(v: &Value, load: &mut dyn FnMut(&str) -> Result<FiniteStructure, String>) -> Result<ParamTree, JsonError> {
    let o = object(v, "a tree")?;
    let width = usize_field(o, "width")?;
    let depth = usize_field(o, "depth")?;
    if width == 0 || width > 10 {
        return err("`width` must be between 1 and 10");
    }
    if depth > 12 || width.checked_pow(depth as u32).is_none_or(|n| n > 100_000) {
        return err("tree too large");
    }
    let m = load(string(field(o, "ambient")?, "ambient")?).map_err(JsonError)?;
    let nodes = object(field(o, "nodes")?, "`nodes`")?;
    let first = nodes.get("").and_then(|r| r.as_array());
    let sorts = tuple_sorts(o, &m, first)?;
    let mut out = BTreeMap::new();
    for (k, t) in nodes {
        let mut key = Vec::new();
        for ch in k.chars() {
            match ch.to_digit(10) {
                Some(d) if (d as usize) < width => key.push(d as usize),
                _ => return err(format!("bad node key `{k}`")),
            }
        }
        if key.len() >= depth {
            return err(format!("node `{k}` is deeper than the tree"));
        }
        out.insert(key, tuple_from(t, &m, &sorts)?);
    }
    let tree = ParamTree {
        ambient: m,
        sorts,
        width,
        depth,
        nodes: out,
    };
    tree.check().map_err(|e| JsonError(e.to_string()))?;
    Ok(tree)
}

pub fn tree_to_json(t: &ParamTree, ambient: &str) -> Value {
    let nodes: Map<String, Value> = t.nodes.iter().map(|(k, v)| (node_key(k), tuple_to(&t.ambient, &t.sorts, v))).collect();
    json!({
        "ambient": ambient,
        "sorts": sort_names(&t.ambient, &t.sorts),
        "width": t.width,
        "depth": t.depth,
        "nodes": nodes,
    })
}

fn parse_value(v: &Value, grid: u32) -> Result<u32, JsonError> {
    let r: Ratio<u64> = match v {
        Value::Number(n) => match n.as_u64() {
            Some(k) => Ratio::from_integer(k),
            None => return err(format!("value {n} is not in [0, 1]")),
        },
        Value::String(s) => {
            let (a, b) = s.split_once('/').unwrap_or((s.as_str(), "1"));
            let a: u64 = a.trim().parse().map_err(|_| JsonError(format!("bad value `{s}`")))?;
            let b: u64 = b.trim().parse().map_err(|_| JsonError(format!("bad value `{s}`")))?;
            if b == 0 {
                return err(format!("bad value `{s}`"));
            }
            Ratio::new(a, b)
        }
        _ => return err("values must be strings `n/d` or the integers 0 and 1"),
    };
    if r > Ratio::from_integer(1) {
        return err(format!("value {r} is not in [0, 1]"));
    }
    let scaled = r * Ratio::from_integer(grid as u64);
    if !scaled.is_integer() {
        return err(format!("value {r} is not on the grid 1/{grid}"));
    }
    Ok(scaled.to_integer() as u32)
}

fn cell_key(carrier: &[String], t: &[usize]) -> String {
    let parts: Vec<&str> = t.iter().map(|&i| carrier[i].as_str()).collect();
    format!("({})", parts.join(","))
}

/// `{"carrier": […], "symbols": {"d": {"(a,b)": "3/8", …}, …}}`; every
/// cell must be present and on the grid `1/grid`.
pub fn grid_from_json(v: &Value, grid: u32) -> Result<GridStructure, JsonError> {
    let o = object(v, "a grid structure")?;
    let carrier: Vec<String> = field(o, "carrier")?
        .as_array()
        .ok_or_else(|| JsonError("`carrier` must be an array".into()))?
        .iter()
        .map(|e| string(e, "an element").map(str::to_string))
        .collect::<Result<_, _>>()?;
    if grid == 0 {
        return err("grid denominator must be positive");
    }
    let index: BTreeMap<&str, usize> = carrier.iter().enumerate().map(|(i, e)| (e.as_str(), i)).collect();
    let n = carrier.len();
    let mut symbols = BTreeMap::new();
    for (s, cells) in object(field(o, "symbols")?, "`symbols`")? {
        let cells = object(cells, "a symbol table")?;
        let mut arity = None;
        let mut parsed = BTreeMap::new();
        for (k, val) in cells {
            let inner = k
                .trim()
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .unwrap_or(k.as_str())
                .trim();
            let names: Vec<&str> = if inner.is_empty() { Vec::new() } else { inner.split(',').map(str::trim).collect() };
            let t = names
                .iter()
                .map(|e| index.get(e).copied().ok_or_else(|| JsonError(format!("{s}: unknown element `{e}`"))))
                .collect::<Result<Vec<usize>, _>>()?;
            match arity {
                None => arity = Some(t.len()),
                Some(a) if a != t.len() => return err(format!("{s}: cells of different arities")),
                _ => {}
            }
            if parsed.insert(t, parse_value(val, grid).map_err(|e| JsonError(format!("{s}{k}: {e}")))?).is_some() {
                return err(format!("{s}: cell {k} given twice"));
            }
        }
        let arity = arity.ok_or_else(|| JsonError(format!("{s}: no values")))?;
        if n.checked_pow(arity as u32).is_none_or(|c| c > 1_000_000) {
            return err(format!("{s}: table too large"));
        }
        let sizes = [n];
        let sorts = vec![SortId(0); arity];
        let mut values = Vec::new();
        for t in tuples(&sizes, &sorts) {
            match parsed.get(&t) {
                Some(&v) => values.push(v),
                None => return err(format!("{s}: missing value at {}", cell_key(&carrier, &t))),
            }
        }
        symbols.insert(s.clone(), GridTable { arity, values });
    }
    GridStructure::new(carrier, grid, symbols).map_err(|e| JsonError(e.to_string()))
}

pub fn grid_to_json(g: &GridStructure) -> Value {
    let n = g.carrier().len();
    let mut symbols = Map::new();
    for (s, t) in g.symbols() {
        let sizes = [n];
        let sorts = vec![SortId(0); t.arity];
        let cells: Map<String, Value> = tuples(&sizes, &sorts)
            .zip(&t.values)
            .map(|(tu, &v)| (cell_key(g.carrier(), &tu), Value::String(Ratio::new(v, g.grid()).to_string())))
            .collect();
        symbols.insert(s.clone(), Value::Object(cells));
    }
    json!({ "carrier": g.carrier(), "symbols": symbols })
}

/// What a command reports: the echoed command line, a status, the bound and
/// pool the answer is relative to, a witness and further named results.
/// Timings are left out so that reports are reproducible byte for byte.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub command: Vec<String>,
    pub status: String,
    pub bound: Option<Value>,
    pub pool: Option<String>,
    pub witness: Option<Value>,
    pub results: BTreeMap<String, Value>,
    pub notes: Vec<String>,
    /// Human-readable body, printed without `--json`.
    pub text: Vec<String>,
}

impl Report {
    pub fn new(command: Vec<String>, status: impl Into<String>) -> Self {
        Report {
            command,
            status: status.into(),
            ..Report::default()
        }
    }

    pub fn result(&mut self, key: &str, v: impl Into<Value>) -> &mut Self {
        self.results.insert(key.to_string(), v.into());
        self
    }

    pub fn line(&mut self, s: impl Into<String>) -> &mut Self {
        self.text.push(s.into());
        self
    }

    pub fn to_value(&self) -> Value {
        let mut o = Map::new();
        o.insert("command".into(), json!(self.command.join(" ")));
        o.insert("status".into(), json!(self.status));
        o.insert("bound".into(), self.bound.clone().unwrap_or(Value::Null));
        o.insert("pool".into(), self.pool.clone().map(Value::String).unwrap_or(Value::Null));
        o.insert("witness".into(), self.witness.clone().unwrap_or(Value::Null));
        o.insert("notes".into(), json!(self.notes));
        if !self.results.is_empty() {
            o.insert("result".into(), Value::Object(self.results.clone().into_iter().collect()));
        }
        Value::Object(o)
    }

    pub fn human(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "status: {}", self.status);
        if let Some(b) = &self.bound {
            let _ = writeln!(out, "bound: {}", compact(b));
        }
        if let Some(p) = &self.pool {
            let _ = writeln!(out, "pool: {p}");
        }
        for l in &self.text {
            let _ = writeln!(out, "{l}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }
}

fn compact(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        v => v.to_string(),
    }
}

/// Pretty-printed with sorted keys and a trailing newline.
pub fn report_json(r: &Report) -> String {
    let mut s = serde_json::to_string_pretty(&r.to_value()).expect("JSON values serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::syntax::Signature;

    fn structure(n: usize) -> FiniteStructure {
        FiniteStructure::with_sizes(Arc::new(Signature::single_sorted("elem")), &[n]).unwrap()
    }

    #[test]
    fn maps_round_trip() {
        let a = structure(3);
        let b = structure(2);
        let f = StructureMap::from_total(vec![vec![0, 1, 1]]);
        let v = map_to_json(&f, &a, &b);
        assert_eq!(v, json!({"elem": {"a0": "a0", "a1": "a1", "a2": "a1"}}));
        assert_eq!(map_from_json(&v, &a, &b).unwrap(), f);
        assert!(map_from_json(&json!({"elem": {"a0": "a5"}}), &a, &b).is_err());
        assert!(map_from_json(&json!({"other": {}}), &a, &b).is_err());
        assert!(map_from_json(&json!([1]), &a, &b).is_err());
    }

    #[test]
    fn sequences_and_trees() {
        let mut load = |_: &str| Ok::<_, String>(structure(3));
        let v = json!({"ambient": "M.pstruct", "tuples": [["a0"], ["a2"]]});
        let s = sequence_from_json(&v, &mut load).unwrap();
        assert_eq!(s.tuples, vec![vec![0], vec![2]]);
        let back = sequence_to_json(&s, "M.pstruct");
        assert_eq!(sequence_from_json(&back, &mut load).unwrap(), s);
        let t = json!({"ambient": "M", "width": 2, "depth": 2, "nodes": {"": ["a0"], "0": ["a1"], "1": ["a2"]}});
        let tree = tree_from_json(&t, &mut load).unwrap();
        assert_eq!(tree.nodes[&vec![1]], vec![2]);
        assert_eq!(tree_from_json(&tree_to_json(&tree, "M"), &mut load).unwrap(), tree);
        let missing = json!({"ambient": "M", "width": 2, "depth": 2, "nodes": {"": ["a0"], "0": ["a1"]}});
        assert!(tree_from_json(&missing, &mut load).is_err());
        let bad = json!({"ambient": "M", "width": 2, "depth": 2, "nodes": {"": ["a0"], "0": ["a1"], "2": ["a1"]}});
        assert!(tree_from_json(&bad, &mut load).is_err());
    }

    #[test]
    fn grids() {
        let v = json!({"carrier": ["a", "b"], "symbols": {
            "d": {"(a,a)": "0", "(a,b)": "3/8", "(b,a)": "3/8", "(b,b)": 0},
            "f": {"(a)": "1/2", "(b)": 1}
        }});
        let g = grid_from_json(&v, 8).unwrap();
        assert_eq!(g.symbols()["d"].values, vec![0, 3, 3, 0]);
        assert_eq!(g.symbols()["f"].values, vec![4, 8]);
        assert_eq!(grid_from_json(&grid_to_json(&g), 8).unwrap(), g);
        assert!(grid_from_json(&v, 4).is_err());
        let partial = json!({"carrier": ["a"], "symbols": {"d": {"(a,a)": "0"}, "f": {}}});
        assert!(grid_from_json(&partial, 8).is_err());
    }

    #[test]
    fn report_is_canonical() {
        let mut r = Report::new(vec!["pc-check".into(), "t.pth".into()], "Holds");
        r.bound = Some(json!(3));
        r.result("zeta", 1).result("alpha", "x");
        let s = report_json(&r);
        assert!(s.find("\"alpha\"").unwrap() < s.find("\"zeta\"").unwrap());
        assert!(s.find("\"bound\"").unwrap() < s.find("\"command\"").unwrap());
        assert_eq!(s, report_json(&r.clone()));
        assert!(r.human().starts_with("status: Holds\nbound: 3\n"));
    }
}

//! Grid-valued structures for a continuous signature and their positive
//! counterparts: `R_φ` holds where `φ` takes the value 0.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;

use crate::model::{tuple_index, FiniteStructure};
use crate::syntax::{Formula, Signature, SortId, Term, VarDecl};

use super::TranslateError;

/// The metric symbol; translated as equality.
pub const METRIC: &str = "d";

pub type Value = Ratio<u32>;

/// A continuous formula built from grid constants, declared symbols applied
/// to variables, `max`, `min`, truncated subtraction and `inf`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ContFormula {
    Const(Value),
    Sym(String, Vec<String>),
    Max(Box<ContFormula>, Box<ContFormula>),
    Min(Box<ContFormula>, Box<ContFormula>),
    /// `a ⊖ b = max(a − b, 0)`.
    Dot(Box<ContFormula>, Box<ContFormula>),
    Inf(String, Box<ContFormula>),
}

impl ContFormula {
    pub fn sym(name: &str, args: &[&str]) -> ContFormula {
        ContFormula::Sym(name.to_string(), args.iter().map(|a| a.to_string()).collect())
    }

    pub fn constant(n: u32, d: u32) -> ContFormula {
        ContFormula::Const(Ratio::new(n, d))
    }

    pub fn max(a: ContFormula, b: ContFormula) -> ContFormula {
        ContFormula::Max(Box::new(a), Box::new(b))
    }

    pub fn min(a: ContFormula, b: ContFormula) -> ContFormula {
        ContFormula::Min(Box::new(a), Box::new(b))
    }

    pub fn dot(a: ContFormula, b: ContFormula) -> ContFormula {
        ContFormula::Dot(Box::new(a), Box::new(b))
    }

    pub fn inf(y: &str, body: ContFormula) -> ContFormula {
        ContFormula::Inf(y.to_string(), Box::new(body))
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        fn go(f: &ContFormula, bound: &mut Vec<String>, out: &mut Vec<String>) {
            match f {
                ContFormula::Const(_) => {}
                ContFormula::Sym(_, args) => {
                    for a in args {
                        if !bound.contains(a) && !out.contains(a) {
                            out.push(a.clone());
                        }
                    }
                }
                ContFormula::Max(a, b) | ContFormula::Min(a, b) | ContFormula::Dot(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                ContFormula::Inf(y, body) => {
                    bound.push(y.clone());
                    go(body, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn depth(&self) -> usize {
        match self {
            ContFormula::Const(_) | ContFormula::Sym(..) => 0,
            ContFormula::Max(a, b) | ContFormula::Min(a, b) | ContFormula::Dot(a, b) => 1 + a.depth().max(b.depth()),
            ContFormula::Inf(_, body) => 1 + body.depth(),
        }
    }

    pub fn has_inf(&self) -> bool {
        match self {
            ContFormula::Const(_) | ContFormula::Sym(..) => false,
            ContFormula::Max(a, b) | ContFormula::Min(a, b) | ContFormula::Dot(a, b) => a.has_inf() || b.has_inf(),
            ContFormula::Inf(..) => true,
        }
    }
}

impl fmt::Display for ContFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContFormula::Const(r) => write!(f, "{r}"),
            ContFormula::Sym(s, args) => write!(f, "{s}({})", args.join(", ")),
            ContFormula::Max(a, b) => write!(f, "max({a}, {b})"),
            ContFormula::Min(a, b) => write!(f, "min({a}, {b})"),
            ContFormula::Dot(a, b) => write!(f, "dotminus({a}, {b})"),
            ContFormula::Inf(y, body) => write!(f, "inf {y}. {body}"),
        }
    }
}

/// Values of one symbol: numerators over the grid denominator, indexed by
/// argument tuples in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridTable {
    pub arity: usize,
    pub values: Vec<u32>,
}

/// A finite metric structure whose symbols take values in
/// `{0, 1/g, …, 1}`. The metric `d` is required.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridStructure {
    carrier: Vec<String>,
    grid: u32,
    symbols: BTreeMap<String, GridTable>,
}

impl GridStructure {
    pub fn new(carrier: Vec<String>, grid: u32, symbols: BTreeMap<String, GridTable>) -> Result<GridStructure, TranslateError> {
        if grid == 0 {
            return Err(TranslateError::BadGrid("grid denominator must be positive".into()));
        }
        let n = carrier.len();
        if n == 0 {
            return Err(TranslateError::BadGrid("empty carrier".into()));
        }
        if carrier.iter().collect::<BTreeSet<_>>().len() != n {
            return Err(TranslateError::BadGrid("repeated carrier element".into()));
        }
        for (s, t) in &symbols {
            if t.values.len() != n.pow(t.arity as u32) {
                return Err(TranslateError::BadGrid(format!("{s}: expected {} values, got {}", n.pow(t.arity as u32), t.values.len())));
            }
            if let Some(v) = t.values.iter().find(|&&v| v > grid) {
                return Err(TranslateError::BadGrid(format!("{s}: value {v}/{grid} exceeds 1")));
            }
        }
        let g = GridStructure { carrier, grid, symbols };
        g.check_metric()?;
        Ok(g)
    }

    fn check_metric(&self) -> Result<(), TranslateError> {
        let d = self
            .symbols
            .get(METRIC)
            .ok_or_else(|| TranslateError::BadGrid("the metric d is not declared".into()))?;
        if d.arity != 2 {
            return Err(TranslateError::BadGrid("the metric d must be binary".into()));
        }
        let n = self.carrier.len();
        let at = |a: usize, b: usize| d.values[a * n + b];
        let name = |a: usize| &self.carrier[a];
        for a in 0..n {
            for b in 0..n {
                if (at(a, b) == 0) != (a == b) {
                    return Err(TranslateError::BadGrid(format!("d({}, {}) = {}/{}", name(a), name(b), at(a, b), self.grid)));
                }
                if at(a, b) != at(b, a) {
                    return Err(TranslateError::BadGrid(format!("d is not symmetric at ({}, {})", name(a), name(b))));
                }
                for c in 0..n {
                    if at(a, c) > at(a, b) + at(b, c) {
                        return Err(TranslateError::BadGrid(format!(
                            "triangle inequality fails at ({}, {}, {})",
                            name(a),
                            name(b),
                            name(c)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn carrier(&self) -> &[String] {
        &self.carrier
    }

    pub fn grid(&self) -> u32 {
        self.grid
    }

    pub fn symbols(&self) -> &BTreeMap<String, GridTable> {
        &self.symbols
    }

    /// Symbol arities.
    pub fn vocabulary(&self) -> BTreeMap<String, usize> {
        self.symbols.iter().map(|(s, t)| (s.clone(), t.arity)).collect()
    }

    fn index(&self, args: &[usize]) -> usize {
        let n = self.carrier.len();
        args.iter().fold(0, |acc, &a| acc * n + a)
    }

    pub fn value(&self, sym: &str, args: &[usize]) -> Option<Value> {
        let t = self.symbols.get(sym)?;
        (t.arity == args.len()).then(|| Ratio::new(t.values[self.index(args)], self.grid))
    }

    /// Pointwise value of `f` under `env`, with `inf` as a minimum over the
    /// carrier.
    pub fn eval(&self, f: &ContFormula, env: &mut BTreeMap<String, usize>) -> Result<Value, TranslateError> {
        Ok(match f {
            ContFormula::Const(r) => *r,
            ContFormula::Sym(s, args) => {
                let xs = args
                    .iter()
                    .map(|a| env.get(a).copied().ok_or_else(|| TranslateError::BadInput(format!("unassigned variable {a}"))))
                    .collect::<Result<Vec<_>, _>>()?;
                self.value(s, &xs).ok_or_else(|| TranslateError::UndeclaredSymbol(format!("{s}/{}", xs.len())))?
            }
            ContFormula::Max(a, b) => self.eval(a, env)?.max(self.eval(b, env)?),
            ContFormula::Min(a, b) => self.eval(a, env)?.min(self.eval(b, env)?),
            ContFormula::Dot(a, b) => {
                let (x, y) = (self.eval(a, env)?, self.eval(b, env)?);
                if x > y {
                    x - y
                } else {
                    Ratio::from_integer(0)
                }
            }
            ContFormula::Inf(y, body) => {
                let saved = env.get(y).copied();
                let mut best = Ratio::from_integer(1);
                for e in 0..self.carrier.len() {
                    env.insert(y.clone(), e);
                    best = best.min(self.eval(body, env)?);
                }
                match saved {
                    Some(e) => env.insert(y.clone(), e),
                    None => env.remove(y),
                };
                best
            }
        })
    }
}

/// `R_<sym>`.
pub fn pos_name(sym: &str) -> String {
    format!("R_{sym}")
}

/// `R_<sym>_le_<n>_<d>` for `sym ≤ n/d`, `R_<sym>_ge_<n>_<d>` for `sym ≥ n/d`.
pub fn threshold_name(sym: &str, r: Value, le: bool) -> String {
    format!("R_{sym}_{}_{}_{}", if le { "le" } else { "ge" }, r.numer(), r.denom())
}

fn on_grid(r: Value, grid: u32) -> bool {
    *r.numer() <= *r.denom() && (u64::from(*r.numer()) * u64::from(grid)) % u64::from(*r.denom()) == 0
}

/// The positive structure over one sort `elem`: `R_s` is the zero set of
/// each symbol `s` (for the metric this is equality), and each threshold
/// `(s, r)` adds `R_{s≤r}` and `R_{s≥r}`.
pub fn cont_to_pos(g: &GridStructure, thresholds: &[(String, Value)]) -> Result<FiniteStructure, TranslateError> {
    let mut sig = Signature::single_sorted("elem");
    let mut cells: Vec<(String, Box<dyn Fn(Value) -> bool>)> = Vec::new();
    for (s, t) in &g.symbols {
        sig.add_relation(&pos_name(s), vec![SortId(0); t.arity])?;
        cells.push((s.clone(), Box::new(|v: Value| v == Ratio::from_integer(0))));
    }
    let mut seen = BTreeSet::new();
    for (s, r) in thresholds {
        let t = g.symbols.get(s).ok_or_else(|| TranslateError::UndeclaredSymbol(s.clone()))?;
        if !on_grid(*r, g.grid) {
            return Err(TranslateError::OffGridThreshold(format!("{s} at {r} (grid 1/{})", g.grid)));
        }
        if !seen.insert((s.clone(), *r)) {
            continue;
        }
        let r = *r;
        sig.add_relation(&threshold_name(s, r, true), vec![SortId(0); t.arity])?;
        cells.push((s.clone(), Box::new(move |v: Value| v <= r)));
        sig.add_relation(&threshold_name(s, r, false), vec![SortId(0); t.arity])?;
        cells.push((s.clone(), Box::new(move |v: Value| v >= r)));
    }
    let sig = Arc::new(sig);
    let mut m = FiniteStructure::new(sig.clone(), vec![g.carrier.clone()])?;
    let sizes = [g.carrier.len()];
    for (ri, (s, test)) in cells.iter().enumerate() {
        let t = &g.symbols[s];
        let args = vec![SortId(0); t.arity];
        for tuple in crate::model::tuples(&sizes, &args) {
            let v = Ratio::new(t.values[tuple_index(&sizes, &args, &tuple)], g.grid);
            if test(v) {
                m.set_relation(ri, &tuple, true);
            }
        }
    }
    Ok(m)
}

/// A positive formula over the vocabulary of [`cont_to_pos`] and the
/// thresholds it needs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Translation {
    pub formula: Formula,
    pub thresholds: Vec<(String, Value)>,
}

/// The positive formula defining the zero set of `f`: `max` becomes `∧`,
/// `min` becomes `∨`, `inf y` becomes `∃y`, a positive constant becomes `⊥`
/// and the metric becomes `=`. Truncated subtraction is handled when one
/// side is a constant, through threshold relations.
pub fn cont_translate(f: &ContFormula, vocabulary: &BTreeMap<String, usize>) -> Result<Translation, TranslateError> {
    let mut tr = Translator {
        vocabulary,
        thresholds: Vec::new(),
    };
    let formula = tr.le(f, Ratio::from_integer(0))?;
    Ok(Translation {
        formula,
        thresholds: tr.thresholds,
    })
}

struct Translator<'a> {
    vocabulary: &'a BTreeMap<String, usize>,
    thresholds: Vec<(String, Value)>,
}

impl Translator<'_> {
    fn atom(&mut self, s: &str, args: &[String], r: Value, le: bool) -> Result<Formula, TranslateError> {
        match self.vocabulary.get(s) {
            None => return Err(TranslateError::UndeclaredSymbol(s.to_string())),
            Some(&n) if n != args.len() => {
                return Err(TranslateError::BadInput(format!("{s} takes {n} arguments, got {}", args.len())))
            }
            _ => {}
        }
        let ts: Vec<Term> = args.iter().map(|a| Term::var(a)).collect();
        if le && r == Ratio::from_integer(0) {
            return Ok(if s == METRIC {
                Formula::eq(ts[0].clone(), ts[1].clone())
            } else {
                Formula::atom(&pos_name(s), ts)
            });
        }
        if !self.thresholds.contains(&(s.to_string(), r)) {
            self.thresholds.push((s.to_string(), r));
        }
        Ok(Formula::atom(&threshold_name(s, r, le), ts))
    }

    /// `{f ≤ r}`.
    fn le(&mut self, f: &ContFormula, r: Value) -> Result<Formula, TranslateError> {
        let one = Ratio::from_integer(1);
        if r >= one {
            return Ok(Formula::Top);
        }
        Ok(match f {
            ContFormula::Const(c) => {
                if *c <= r {
                    Formula::Top
                } else {
                    Formula::Bottom
                }
            }
            ContFormula::Sym(s, args) => self.atom(s, args, r, true)?,
            ContFormula::Max(a, b) => Formula::And(vec![self.le(a, r)?, self.le(b, r)?]),
            ContFormula::Min(a, b) => Formula::Or(vec![self.le(a, r)?, self.le(b, r)?]),
            ContFormula::Inf(y, body) => Formula::exists(vec![VarDecl::new(y, "elem")], self.le(body, r)?),
            ContFormula::Dot(a, b) => match (&**a, &**b) {
                (_, ContFormula::Const(c)) => self.le(a, (r + c).min(one))?,
                (ContFormula::Const(c), _) => {
                    if *c <= r {
                        Formula::Top
                    } else {
                        self.ge(b, c - r)?
                    }
                }
                _ => return Err(TranslateError::Untranslatable(f.to_string())),
            },
        })
    }

    /// `{f ≥ r}` for `r > 0`.
    fn ge(&mut self, f: &ContFormula, r: Value) -> Result<Formula, TranslateError> {
        let one = Ratio::from_integer(1);
        if r > one {
            return Ok(Formula::Bottom);
        }
        Ok(match f {
            ContFormula::Const(c) => {
                if *c >= r {
                    Formula::Top
                } else {
                    Formula::Bottom
                }
            }
            ContFormula::Sym(s, args) => self.atom(s, args, r, false)?,
            ContFormula::Max(a, b) => Formula::Or(vec![self.ge(a, r)?, self.ge(b, r)?]),
            ContFormula::Min(a, b) => Formula::And(vec![self.ge(a, r)?, self.ge(b, r)?]),
            ContFormula::Dot(a, b) => match (&**a, &**b) {
                (_, ContFormula::Const(c)) => self.ge(a, r + c)?,
                (ContFormula::Const(c), _) => {
                    if *c < r {
                        Formula::Bottom
                    } else {
                        self.le(b, c - r)?
                    }
                }
                _ => return Err(TranslateError::Untranslatable(f.to_string())),
            },
            // `inf_y φ ≥ r` says every `y` has `φ ≥ r`: not positive.
            ContFormula::Inf(..) => return Err(TranslateError::Untranslatable(format!("{f} bounded below"))),
        })
    }
}

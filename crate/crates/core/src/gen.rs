//! Seeded random generators for structures, formulas and grid structures,
//! used by the property tests, the acceptance suite and `poslog gen`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, RngExt};

use crate::model::{tuples, FiniteStructure};
use crate::syntax::{Formula, Signature, SortId, Term, VarDecl};
use crate::translate::{ContFormula, GridStructure, GridTable, METRIC};

/// A structure with the given sort sizes: each relation tuple holds with
/// probability `density`, constants and function values are uniform.
/// Sorts that are the result of a function or constant must be nonempty.
pub fn random_structure<R: Rng + ?Sized>(rng: &mut R, sig: Arc<Signature>, sizes: &[usize], density: f64) -> FiniteStructure {
    let mut m = FiniteStructure::with_sizes(sig.clone(), sizes).expect("sizes match the signature");
    for (k, c) in sig.constants().iter().enumerate() {
        let v = rng.random_range(0..sizes[c.sort.0]);
        m.set_constant(k, v);
    }
    for (k, f) in sig.functions().iter().enumerate() {
        for t in tuples(sizes, &f.args) {
            let v = rng.random_range(0..sizes[f.result.0]);
            m.set_function(k, &t, v);
        }
    }
    for (k, r) in sig.relations().iter().enumerate() {
        for t in tuples(sizes, &r.args) {
            if rng.random_bool(density) {
                m.set_relation(k, &t, true);
            }
        }
    }
    m
}

/// Random terms over the variables of `ctx` and the constants; function
/// symbols are applied at most `depth` deep.
pub fn random_term<R: Rng + ?Sized>(rng: &mut R, sig: &Signature, ctx: &[(String, SortId)], sort: SortId, depth: usize) -> Option<Term> {
    let vars: Vec<&String> = ctx.iter().filter(|(_, s)| *s == sort).map(|(v, _)| v).collect();
    let consts: Vec<&str> = sig.constants().iter().filter(|c| c.sort == sort).map(|c| c.name.as_str()).collect();
    let funcs: Vec<usize> = (0..sig.functions().len()).filter(|&k| sig.functions()[k].result == sort).collect();
    if depth > 0 && !funcs.is_empty() && rng.random_range(0..4) == 0 {
        let fd = &sig.functions()[funcs[rng.random_range(0..funcs.len())]];
        let args = fd
            .args
            .iter()
            .map(|&s| random_term(rng, sig, ctx, s, depth - 1))
            .collect::<Option<Vec<_>>>();
        if let Some(args) = args {
            return Some(Term::App(fd.name.clone(), args));
        }
    }
    let n = vars.len() + consts.len();
    if n == 0 {
        return None;
    }
    let i = rng.random_range(0..n);
    Some(if i < vars.len() {
        Term::Var(vars[i].clone())
    } else {
        Term::Const(consts[i - vars.len()].to_string())
    })
}

fn random_atom<R: Rng + ?Sized>(rng: &mut R, sig: &Signature, ctx: &[(String, SortId)], term_depth: usize) -> Formula {
    for _ in 0..8 {
        let rels = sig.relations().len();
        if rels > 0 && rng.random_range(0..3) > 0 {
            let r = &sig.relations()[rng.random_range(0..rels)];
            let args = r
                .args
                .iter()
                .map(|&s| random_term(rng, sig, ctx, s, term_depth))
                .collect::<Option<Vec<_>>>();
            if let Some(args) = args {
                return Formula::Atom(r.name.clone(), args);
            }
        } else if !sig.sorts().is_empty() {
            let s = SortId(rng.random_range(0..sig.sorts().len()));
            if let (Some(a), Some(b)) = (random_term(rng, sig, ctx, s, term_depth), random_term(rng, sig, ctx, s, term_depth)) {
                return Formula::Eq(a, b);
            }
        }
    }
    if rng.random_bool(0.5) {
        Formula::Top
    } else {
        Formula::Bottom
    }
}

/// Shape limits for [`random_formula`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FormulaShape {
    /// Nesting of connectives and quantifiers.
    pub depth: usize,
    pub max_width: usize,
    pub term_depth: usize,
    pub allow_or: bool,
    pub allow_exists: bool,
}

impl Default for FormulaShape {
    fn default() -> Self {
        FormulaShape {
            depth: 2,
            max_width: 3,
            term_depth: 1,
            allow_or: true,
            allow_exists: true,
        }
    }
}

/// A positive formula whose free variables are among `ctx`. Bound
/// variables are named `q0, q1, …` (fresh along each branch), and `And`/`Or`
/// nodes always have at least two children so that printing and parsing
/// reproduce the same tree.
pub fn random_formula<R: Rng + ?Sized>(rng: &mut R, sig: &Signature, ctx: &[(String, SortId)], shape: FormulaShape) -> Formula {
    fn go<R: Rng + ?Sized>(rng: &mut R, sig: &Signature, ctx: &mut Vec<(String, SortId)>, depth: usize, shape: &FormulaShape, next: &mut usize) -> Formula {
        if depth == 0 || rng.random_range(0..4) == 0 {
            return random_atom(rng, sig, ctx, shape.term_depth);
        }
        let mut choices = vec![0];
        if shape.allow_or {
            choices.push(1);
        }
        if shape.allow_exists && !sig.sorts().is_empty() {
            choices.push(2);
        }
        match choices[rng.random_range(0..choices.len())] {
            c @ (0 | 1) => {
                let w = rng.random_range(2..=shape.max_width.max(2));
                let parts = (0..w).map(|_| go(rng, sig, ctx, depth - 1, shape, next)).collect();
                if c == 1 {
                    Formula::Or(parts)
                } else {
                    Formula::And(parts)
                }
            }
            _ => {
                let s = SortId(rng.random_range(0..sig.sorts().len()));
                let v = format!("q{next}");
                *next += 1;
                ctx.push((v.clone(), s));
                let body = go(rng, sig, ctx, depth - 1, shape, next);
                ctx.pop();
                Formula::Exists(vec![VarDecl::new(&v, sig.sort_name(s))], Box::new(body))
            }
        }
    }
    let mut ctx = ctx.to_vec();
    let mut next = 0;
    go(rng, sig, &mut ctx, shape.depth, &shape, &mut next)
}

/// A grid structure on `n` points with values in `{0, 1/g, …, 1}`. The
/// metric takes values in `[⌈g/2⌉/g, 1]` off the diagonal, so the triangle
/// inequality holds automatically; `extra` lists further symbols and arities.
pub fn random_grid<R: Rng + ?Sized>(rng: &mut R, n: usize, g: u32, extra: &[(&str, usize)]) -> GridStructure {
    assert!(n > 0 && g >= 2);
    let carrier: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let lo = g.div_ceil(2);
    let mut d = vec![0; n * n];
    for a in 0..n {
        for b in a + 1..n {
            let v = rng.random_range(lo..=g);
            d[a * n + b] = v;
            d[b * n + a] = v;
        }
    }
    let mut symbols = BTreeMap::new();
    symbols.insert(METRIC.to_string(), GridTable { arity: 2, values: d });
    for &(s, arity) in extra {
        let values = (0..n.pow(arity as u32)).map(|_| rng.random_range(0..=g)).collect();
        symbols.insert(s.to_string(), GridTable { arity, values });
    }
    GridStructure::new(carrier, g, symbols).expect("generated grid is a metric structure")
}

/// A continuous formula over `vocabulary` (symbol → arity) with free
/// variables among `vars`; constants are multiples of `1/g`.
pub fn random_cont_formula<R: Rng + ?Sized>(rng: &mut R, vocabulary: &BTreeMap<String, usize>, vars: &[String], g: u32, depth: usize) -> ContFormula {
    fn go<R: Rng + ?Sized>(rng: &mut R, voc: &[(String, usize)], vars: &mut Vec<String>, g: u32, depth: usize, next: &mut usize) -> ContFormula {
        if depth == 0 || rng.random_range(0..4) == 0 {
            if vars.is_empty() || voc.is_empty() || rng.random_range(0..5) == 0 {
                return ContFormula::constant(rng.random_range(0..=g), g);
            }
            let (s, a) = &voc[rng.random_range(0..voc.len())];
            let args = (0..*a).map(|_| vars[rng.random_range(0..vars.len())].clone()).collect();
            return ContFormula::Sym(s.clone(), args);
        }
        match rng.random_range(0..4) {
            0 => ContFormula::max(go(rng, voc, vars, g, depth - 1, next), go(rng, voc, vars, g, depth - 1, next)),
            1 => ContFormula::min(go(rng, voc, vars, g, depth - 1, next), go(rng, voc, vars, g, depth - 1, next)),
            2 => ContFormula::dot(go(rng, voc, vars, g, depth - 1, next), go(rng, voc, vars, g, depth - 1, next)),
            _ => {
                let y = format!("w{next}");
                *next += 1;
                vars.push(y.clone());
                let body = go(rng, voc, vars, g, depth - 1, next);
                vars.pop();
                ContFormula::inf(&y, body)
            }
        }
    }
    let voc: Vec<(String, usize)> = vocabulary.iter().map(|(s, a)| (s.clone(), *a)).collect();
    let mut vs = vars.to_vec();
    let mut next = 0;
    go(rng, &voc, &mut vs, g, depth, &mut next)
}

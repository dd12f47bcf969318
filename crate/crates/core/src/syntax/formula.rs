use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::signature::{Signature, SortId};

/// A term: variable, constant, or function application.
///
/// Variables and constants are told apart at parse time by the signature and
/// the binders in scope; a bound name always wins over a constant.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    Const(String),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn constant(name: &str) -> Term {
        Term::Const(name.to_string())
    }

    pub fn app(name: &str, args: Vec<Term>) -> Term {
        Term::App(name.to_string(), args)
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Const(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn mentions_var(&self, v: &str) -> bool {
        match self {
            Term::Var(x) => x == v,
            Term::Const(_) => false,
            Term::App(_, args) => args.iter().any(|a| a.mentions_var(v)),
        }
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(x) => {
                if !out.contains(x) {
                    out.push(x.clone());
                }
            }
            Term::Const(_) => {}
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn substitute(&self, map: &BTreeMap<String, Term>) -> Term {
        match self {
            Term::Var(x) => map.get(x).cloned().unwrap_or_else(|| self.clone()),
            Term::Const(_) => self.clone(),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| a.substitute(map)).collect()),
        }
    }

    pub fn has_function(&self) -> bool {
        matches!(self, Term::App(..))
    }
}

/// A variable together with its sort, as it appears at a binder.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    pub sort: String,
}

impl VarDecl {
    pub fn new(name: &str, sort: &str) -> Self {
        VarDecl {
            name: name.to_string(),
            sort: sort.to_string(),
        }
    }
}

/// A positive formula: built from atoms and equalities with ⊤, ⊥, ∧, ∨ and ∃.
///
/// `And`/`Or` are n-ary; an empty `Exists` binder means the body itself.
/// The derived ordering is the fixed structural order used by canonicalization.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Formula {
    Top,
    Bottom,
    Atom(String, Vec<Term>),
    Eq(Term, Term),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(Vec<VarDecl>, Box<Formula>),
}

impl Formula {
    pub fn atom(rel: &str, args: Vec<Term>) -> Formula {
        Formula::Atom(rel.to_string(), args)
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Eq(a, b)
    }

    pub fn and(parts: Vec<Formula>) -> Formula {
        Formula::And(parts)
    }

    pub fn or(parts: Vec<Formula>) -> Formula {
        Formula::Or(parts)
    }

    pub fn exists(vars: Vec<VarDecl>, body: Formula) -> Formula {
        Formula::Exists(vars, Box::new(body))
    }

    /// Conjunction that collapses the zero- and one-element cases.
    pub fn conj(mut parts: Vec<Formula>) -> Formula {
        match parts.len() {
            0 => Formula::Top,
            1 => parts.pop().unwrap(),
            _ => Formula::And(parts),
        }
    }

    /// Disjunction that collapses the zero- and one-element cases.
    pub fn disj(mut parts: Vec<Formula>) -> Formula {
        match parts.len() {
            0 => Formula::Bottom,
            1 => parts.pop().unwrap(),
            _ => Formula::Or(parts),
        }
    }

    /// Existential that drops an empty binder.
    pub fn exists_opt(vars: Vec<VarDecl>, body: Formula) -> Formula {
        if vars.is_empty() {
            body
        } else {
            Formula::Exists(vars, Box::new(body))
        }
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut bound = Vec::new();
        self.collect_free(&mut bound, &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        let push_term = |t: &Term, bound: &Vec<String>, out: &mut Vec<String>| {
            for v in t.vars() {
                if !bound.contains(&v) && !out.contains(&v) {
                    out.push(v);
                }
            }
        };
        match self {
            Formula::Top | Formula::Bottom => {}
            Formula::Atom(_, args) => args.iter().for_each(|t| push_term(t, bound, out)),
            Formula::Eq(a, b) => {
                push_term(a, bound, out);
                push_term(b, bound, out);
            }
            Formula::And(ps) | Formula::Or(ps) => ps.iter().for_each(|p| p.collect_free(bound, out)),
            Formula::Exists(vs, body) => {
                let n = bound.len();
                bound.extend(vs.iter().map(|v| v.name.clone()));
                body.collect_free(bound, out);
                bound.truncate(n);
            }
        }
    }

    pub fn has_free_var(&self, v: &str) -> bool {
        self.free_vars().iter().any(|x| x == v)
    }

    /// Every variable name occurring anywhere, free or bound.
    pub fn all_var_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::Atom(_, args) => args.iter().for_each(|t| out.extend(t.vars())),
            Formula::Eq(a, b) => {
                out.extend(a.vars());
                out.extend(b.vars());
            }
            Formula::Exists(vs, _) => out.extend(vs.iter().map(|v| v.name.clone())),
            _ => {}
        });
        out
    }

    /// Pre-order traversal over subformulas.
    pub fn visit(&self, f: &mut dyn FnMut(&Formula)) {
        f(self);
        match self {
            Formula::And(ps) | Formula::Or(ps) => ps.iter().for_each(|p| p.visit(f)),
            Formula::Exists(_, body) => body.visit(f),
            _ => {}
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        let mut qf = true;
        self.visit(&mut |f| {
            if matches!(f, Formula::Exists(..)) {
                qf = false;
            }
        });
        qf
    }

    pub fn has_function(&self) -> bool {
        let mut found = false;
        self.visit(&mut |f| match f {
            Formula::Atom(_, args) => found |= args.iter().any(Term::has_function),
            Formula::Eq(a, b) => found |= a.has_function() || b.has_function(),
            _ => {}
        });
        found
    }

    /// Node count: one per connective, atom, bound variable and term node.
    pub fn size(&self) -> usize {
        match self {
            Formula::Top | Formula::Bottom => 1,
            Formula::Atom(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
            Formula::Eq(a, b) => 1 + a.size() + b.size(),
            Formula::And(ps) | Formula::Or(ps) => {
                ps.len().saturating_sub(1) + ps.iter().map(Formula::size).sum::<usize>()
            }
            Formula::Exists(vs, body) => vs.len() + body.size(),
        }
    }

    /// Maximum nesting of bound variables.
    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::And(ps) | Formula::Or(ps) => ps.iter().map(Formula::quantifier_depth).max().unwrap_or(0),
            Formula::Exists(vs, body) => vs.len() + body.quantifier_depth(),
            _ => 0,
        }
    }

    /// Connective nesting depth (atoms have depth 0).
    pub fn depth(&self) -> usize {
        match self {
            Formula::And(ps) | Formula::Or(ps) => 1 + ps.iter().map(Formula::depth).max().unwrap_or(0),
            Formula::Exists(vs, body) if !vs.is_empty() => 1 + body.depth(),
            Formula::Exists(_, body) => body.depth(),
            _ => 0,
        }
    }

    /// Capture-avoiding substitution of free variables.
    pub fn substitute(&self, map: &BTreeMap<String, Term>) -> Formula {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Formula::Top | Formula::Bottom => self.clone(),
            Formula::Atom(r, args) => Formula::Atom(r.clone(), args.iter().map(|t| t.substitute(map)).collect()),
            Formula::Eq(a, b) => Formula::Eq(a.substitute(map), b.substitute(map)),
            Formula::And(ps) => Formula::And(ps.iter().map(|p| p.substitute(map)).collect()),
            Formula::Or(ps) => Formula::Or(ps.iter().map(|p| p.substitute(map)).collect()),
            Formula::Exists(vs, body) => {
                let mut inner = map.clone();
                for v in vs {
                    inner.remove(&v.name);
                }
                let incoming: BTreeSet<String> = inner.values().flat_map(|t| t.vars()).collect();
                let mut taken: BTreeSet<String> = incoming.clone();
                taken.extend(body.all_var_names());
                let mut new_vs = Vec::with_capacity(vs.len());
                for v in vs {
                    if incoming.contains(&v.name) {
                        let fresh = fresh_var(&v.name, &taken);
                        taken.insert(fresh.clone());
                        inner.insert(v.name.clone(), Term::Var(fresh.clone()));
                        new_vs.push(VarDecl {
                            name: fresh,
                            sort: v.sort.clone(),
                        });
                    } else {
                        new_vs.push(v.clone());
                    }
                }
                Formula::Exists(new_vs, Box::new(body.substitute(&inner)))
            }
        }
    }

    /// Replace variable names by constant symbols of the same name.
    pub fn ground_vars(&self, vars: &BTreeMap<String, String>) -> Formula {
        let map = vars
            .iter()
            .map(|(v, c)| (v.clone(), Term::Const(c.clone())))
            .collect();
        self.substitute(&map)
    }

    pub fn relations_used(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Atom(r, _) = f {
                out.insert(r.clone());
            }
        });
        out
    }
}

/// A variable name derived from `base` that is not in `taken`.
pub fn fresh_var(base: &str, taken: &BTreeSet<String>) -> String {
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit() || c == '\'');
    let stem = if stem.is_empty() { "v" } else { stem };
    let mut i = 1;
    loop {
        let candidate = format!("{stem}{i}");
        if !taken.contains(&candidate) {
            return candidate;
        }
        i += 1;
    }
}

/// `∀x (premise → conclusion)`; h-universal when the conclusion is ⊥.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HInductiveSentence {
    pub universals: Vec<VarDecl>,
    pub premise: Formula,
    pub conclusion: Formula,
}

impl HInductiveSentence {
    pub fn new(universals: Vec<VarDecl>, premise: Formula, conclusion: Formula) -> Self {
        HInductiveSentence {
            universals,
            premise,
            conclusion,
        }
    }

    pub fn is_h_universal(&self) -> bool {
        matches!(self.conclusion, Formula::Bottom)
    }
}

impl fmt::Display for HInductiveSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.universals.is_empty() {
            write!(f, "forall ")?;
            write_binders(f, &self.universals)?;
            write!(f, ". ")?;
        }
        write_formula(f, &self.premise, Ctx::Top)?;
        write!(f, " -> ")?;
        write_formula(f, &self.conclusion, Ctx::Top)
    }
}

/// A positive theory: a signature and finitely many h-inductive axioms.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Theory {
    pub signature: Signature,
    pub axioms: Vec<HInductiveSentence>,
}

impl Theory {
    pub fn new(signature: Signature) -> Self {
        Theory {
            signature,
            axioms: Vec::new(),
        }
    }

    pub fn with_axioms(signature: Signature, axioms: Vec<HInductiveSentence>) -> Self {
        Theory { signature, axioms }
    }

    /// The same axioms over an extended signature.
    pub fn over(&self, signature: Signature) -> Theory {
        debug_assert!(signature.extends(&self.signature));
        Theory {
            signature,
            axioms: self.axioms.clone(),
        }
    }
}

impl fmt::Display for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sig = &self.signature;
        for s in sig.sorts() {
            writeln!(f, "sort {s}")?;
        }
        for c in sig.constants() {
            writeln!(f, "const {} : {}", c.name, sig.sort_name(c.sort))?;
        }
        for fd in sig.functions() {
            writeln!(
                f,
                "fun {}({}) : {}",
                fd.name,
                sort_list(sig, &fd.args),
                sig.sort_name(fd.result)
            )?;
        }
        for r in sig.relations() {
            writeln!(f, "rel {}({})", r.name, sort_list(sig, &r.args))?;
        }
        for ax in &self.axioms {
            writeln!(f, "axiom {ax}")?;
        }
        Ok(())
    }
}

fn sort_list(sig: &Signature, sorts: &[SortId]) -> String {
    sorts
        .iter()
        .map(|s| sig.sort_name(*s))
        .collect::<Vec<_>>()
        .join(", ")
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(x) | Term::Const(x) => write!(f, "{x}"),
            Term::App(g, args) => {
                write!(f, "{g}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Ctx {
    Top,
    OrArg,
    AndArg,
}

fn write_binders(f: &mut fmt::Formatter<'_>, vs: &[VarDecl]) -> fmt::Result {
    for (i, v) in vs.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{}:{}", v.name, v.sort)?;
    }
    Ok(())
}

fn write_formula(f: &mut fmt::Formatter<'_>, phi: &Formula, ctx: Ctx) -> fmt::Result {
    match phi {
        Formula::Top => write!(f, "true"),
        Formula::Bottom => write!(f, "false"),
        Formula::Atom(r, args) => {
            write!(f, "{r}(")?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")
        }
        Formula::Eq(a, b) => write!(f, "{a} = {b}"),
        Formula::And(ps) if ps.is_empty() => write!(f, "true"),
        Formula::Or(ps) if ps.is_empty() => write!(f, "false"),
        Formula::And(ps) if ps.len() == 1 => write_formula(f, &ps[0], ctx),
        Formula::Or(ps) if ps.len() == 1 => write_formula(f, &ps[0], ctx),
        Formula::And(ps) => {
            let paren = ctx == Ctx::AndArg;
            if paren {
                write!(f, "(")?;
            }
            for (i, p) in ps.iter().enumerate() {
                if i > 0 {
                    write!(f, " & ")?;
                }
                write_formula(f, p, Ctx::AndArg)?;
            }
            if paren {
                write!(f, ")")?;
            }
            Ok(())
        }
        Formula::Or(ps) => {
            let paren = ctx != Ctx::Top;
            if paren {
                write!(f, "(")?;
            }
            for (i, p) in ps.iter().enumerate() {
                if i > 0 {
                    write!(f, " | ")?;
                }
                write_formula(f, p, Ctx::OrArg)?;
            }
            if paren {
                write!(f, ")")?;
            }
            Ok(())
        }
        Formula::Exists(vs, body) if vs.is_empty() => write_formula(f, body, ctx),
        Formula::Exists(vs, body) => {
            let paren = ctx != Ctx::Top;
            if paren {
                write!(f, "(")?;
            }
            write!(f, "exists ")?;
            write_binders(f, vs)?;
            write!(f, ". ")?;
            write_formula(f, body, Ctx::Top)?;
            if paren {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self, Ctx::Top)
    }
}

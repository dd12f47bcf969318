use std::collections::BTreeMap;

use thiserror::Error;

use super::structure::{tuples, FiniteStructure};
use crate::syntax::{check_sentence, well_sorted_in, Formula, HInductiveSentence, Signature, SortError, SortId, Term, Theory};

/// Kleene truth value, ordered `False < Unknown < True`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum T3 {
    False,
    Unknown,
    True,
}

impl From<bool> for T3 {
    fn from(b: bool) -> T3 {
        if b {
            T3::True
        } else {
            T3::False
        }
    }
}

/// Read access to a possibly partial interpretation with fixed carriers.
/// Table indices follow [`super::structure::tuple_index`].
pub trait Interp {
    fn size(&self, s: SortId) -> usize;
    fn const_val(&self, c: usize) -> Option<usize>;
    fn func_val(&self, f: usize, idx: usize) -> Option<usize>;
    fn rel_val(&self, r: usize, idx: usize) -> Option<bool>;
}

impl Interp for FiniteStructure {
    fn size(&self, s: SortId) -> usize {
        FiniteStructure::size(self, s)
    }

    fn const_val(&self, c: usize) -> Option<usize> {
        Some(self.consts()[c])
    }

    fn func_val(&self, f: usize, idx: usize) -> Option<usize> {
        Some(self.func_table(f)[idx])
    }

    fn rel_val(&self, r: usize, idx: usize) -> Option<bool> {
        Some(self.rel_table(r)[idx])
    }
}

#[derive(Clone, Debug)]
enum CTerm {
    Slot(usize),
    Const(usize),
    App(usize, Vec<CTerm>, Vec<SortId>),
}

#[derive(Clone, Debug)]
enum CForm {
    Top,
    Bottom,
    Rel(usize, Vec<CTerm>, Vec<SortId>),
    Eq(CTerm, CTerm),
    And(Vec<CForm>),
    Or(Vec<CForm>),
    Exists(Vec<(usize, SortId)>, Box<CForm>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Sort(#[from] SortError),
    #[error("variable `{0}` has no value")]
    Unassigned(String),
    #[error("element {elem} is outside the carrier of sort `{sort}`")]
    OutOfRange { sort: String, elem: usize },
    #[error("structure and theory have different signatures")]
    SignatureMismatch,
}

/// A formula resolved against a signature, with free variables in fixed slots.
#[derive(Clone, Debug)]
pub struct Compiled {
    form: CForm,
    slots: usize,
    free: Vec<(String, SortId)>,
}

struct Compiler<'a> {
    sig: &'a Signature,
    scope: Vec<(String, usize)>,
    next: usize,
}

impl Compiler<'_> {
    fn slot(&self, v: &str) -> usize {
        self.scope
            .iter()
            .rev()
            .find(|(n, _)| n == v)
            .map(|(_, s)| *s)
            .expect("checked by well_sorted")
    }

    fn term(&self, t: &Term) -> CTerm {
        match t {
            Term::Var(v) => CTerm::Slot(self.slot(v)),
            Term::Const(c) => CTerm::Const(self.sig.constant_index(c).expect("checked")),
            Term::App(g, args) => {
                let f = self.sig.function_index(g).expect("checked");
                CTerm::App(
                    f,
                    args.iter().map(|a| self.term(a)).collect(),
                    self.sig.functions()[f].args.clone(),
                )
            }
        }
    }

    fn formula(&mut self, phi: &Formula) -> CForm {
        match phi {
            Formula::Top => CForm::Top,
            Formula::Bottom => CForm::Bottom,
            Formula::Atom(r, args) => {
                let ri = self.sig.relation_index(r).expect("checked");
                CForm::Rel(
                    ri,
                    args.iter().map(|a| self.term(a)).collect(),
                    self.sig.relations()[ri].args.clone(),
                )
            }
            Formula::Eq(a, b) => CForm::Eq(self.term(a), self.term(b)),
            Formula::And(ps) => CForm::And(ps.iter().map(|p| self.formula(p)).collect()),
            Formula::Or(ps) => CForm::Or(ps.iter().map(|p| self.formula(p)).collect()),
            Formula::Exists(vs, body) => {
                let n = self.scope.len();
                let mut binders = Vec::with_capacity(vs.len());
                for v in vs {
                    let s = self.sig.sort_id(&v.sort).expect("checked");
                    binders.push((self.next, s));
                    self.scope.push((v.name.clone(), self.next));
                    self.next += 1;
                }
                let b = self.formula(body);
                self.scope.truncate(n);
                if binders.is_empty() {
                    b
                } else {
                    CForm::Exists(binders, Box::new(b))
                }
            }
        }
    }
}

/// Compiles `phi` with the free variables `ctx` in slots `0..ctx.len()`.
/// Every free variable of `phi` must appear in `ctx`.
pub fn compile(phi: &Formula, sig: &Signature, ctx: &[(String, SortId)]) -> Result<Compiled, EvalError> {
    let got = well_sorted_in(phi, sig, &ctx.to_vec())?;
    for (v, _) in &got {
        if !ctx.iter().any(|(n, _)| n == v) {
            return Err(EvalError::Unassigned(v.clone()));
        }
    }
    let mut c = Compiler {
        sig,
        scope: ctx.iter().enumerate().map(|(i, (n, _))| (n.clone(), i)).collect(),
        next: ctx.len(),
    };
    let form = c.formula(phi);
    Ok(Compiled {
        form,
        slots: c.next,
        free: ctx.to_vec(),
    })
}

/// Compiles `phi` with its free variables in first-occurrence order.
pub fn compile_open(phi: &Formula, sig: &Signature) -> Result<Compiled, EvalError> {
    let ctx = well_sorted_in(phi, sig, &Vec::new())?;
    compile(phi, sig, &ctx)
}

fn term_val<I: Interp + ?Sized>(t: &CTerm, m: &I, env: &[usize]) -> Option<usize> {
    match t {
        CTerm::Slot(i) => Some(env[*i]),
        CTerm::Const(c) => m.const_val(*c),
        CTerm::App(f, args, sorts) => {
            let mut idx = 0;
            for (a, s) in args.iter().zip(sorts) {
                idx = idx * m.size(*s) + term_val(a, m, env)?;
            }
            m.func_val(*f, idx)
        }
    }
}

fn eval3<I: Interp + ?Sized>(phi: &CForm, m: &I, env: &mut [usize]) -> T3 {
    match phi {
        CForm::Top => T3::True,
        CForm::Bottom => T3::False,
        CForm::Rel(r, args, sorts) => {
            let mut idx = 0;
            for (a, s) in args.iter().zip(sorts) {
                match term_val(a, m, env) {
                    Some(v) => idx = idx * m.size(*s) + v,
                    None => return T3::Unknown,
                }
            }
            match m.rel_val(*r, idx) {
                Some(b) => b.into(),
                None => T3::Unknown,
            }
        }
        CForm::Eq(a, b) => match (term_val(a, m, env), term_val(b, m, env)) {
            (Some(x), Some(y)) => (x == y).into(),
            _ => T3::Unknown,
        },
        CForm::And(ps) => {
            let mut acc = T3::True;
            for p in ps {
                acc = acc.min(eval3(p, m, env));
                if acc == T3::False {
                    break;
                }
            }
            acc
        }
        CForm::Or(ps) => {
            let mut acc = T3::False;
            for p in ps {
                acc = acc.max(eval3(p, m, env));
                if acc == T3::True {
                    break;
                }
            }
            acc
        }
        CForm::Exists(binders, body) => exists3(binders, body, m, env),
    }
}

fn exists3<I: Interp + ?Sized>(binders: &[(usize, SortId)], body: &CForm, m: &I, env: &mut [usize]) -> T3 {
    let Some(((slot, sort), rest)) = binders.split_first() else {
        return eval3(body, m, env);
    };
    let mut acc = T3::False;
    for v in 0..m.size(*sort) {
        env[*slot] = v;
        acc = acc.max(exists3(rest, body, m, env));
        if acc == T3::True {
            break;
        }
    }
    acc
}

impl Compiled {
    pub fn free(&self) -> &[(String, SortId)] {
        &self.free
    }

    pub fn free_sorts(&self) -> Vec<SortId> {
        self.free.iter().map(|(_, s)| *s).collect()
    }

    fn env(&self, assignment: &[usize]) -> Vec<usize> {
        debug_assert_eq!(assignment.len(), self.free.len());
        let mut env = vec![0; self.slots];
        env[..assignment.len()].copy_from_slice(assignment);
        env
    }

    /// Three-valued truth under a (possibly partial) interpretation.
    pub fn eval3<I: Interp + ?Sized>(&self, m: &I, assignment: &[usize]) -> T3 {
        let mut env = self.env(assignment);
        eval3(&self.form, m, &mut env)
    }

    /// Truth in a total interpretation.
    pub fn eval<I: Interp + ?Sized>(&self, m: &I, assignment: &[usize]) -> bool {
        self.eval3(m, assignment) == T3::True
    }

    /// All satisfying assignments, in lexicographic order.
    pub fn satisfying(&self, m: &FiniteStructure) -> Vec<Vec<usize>> {
        let sizes = m.sizes();
        let sorts = self.free_sorts();
        tuples(&sizes, &sorts).filter(|a| self.eval(m, a)).collect()
    }
}

/// Variable name → element index (within the variable's sort).
pub type Assignment = BTreeMap<String, usize>;

/// Truth of `phi` in `m` under `a`.
pub fn eval(m: &FiniteStructure, phi: &Formula, a: &Assignment) -> Result<bool, EvalError> {
    let ctx = well_sorted_in(phi, m.signature(), &Vec::new())?;
    let mut values = Vec::with_capacity(ctx.len());
    for (v, s) in &ctx {
        let e = *a.get(v).ok_or_else(|| EvalError::Unassigned(v.clone()))?;
        if e >= m.size(*s) {
            return Err(EvalError::OutOfRange {
                sort: m.signature().sort_name(*s).to_string(),
                elem: e,
            });
        }
        values.push(e);
    }
    Ok(compile(phi, m.signature(), &ctx)?.eval(m, &values))
}

pub fn eval_sentence(m: &FiniteStructure, phi: &Formula) -> Result<bool, EvalError> {
    eval(m, phi, &Assignment::new())
}

/// A compiled axiom: premise and conclusion over the universal variables.
#[derive(Clone, Debug)]
pub struct CompiledAxiom {
    pub premise: Compiled,
    pub conclusion: Compiled,
    pub sorts: Vec<SortId>,
}

impl CompiledAxiom {
    pub fn new(ax: &HInductiveSentence, sig: &Signature) -> Result<Self, EvalError> {
        let ctx = check_sentence(ax, sig)?;
        Ok(CompiledAxiom {
            premise: compile(&ax.premise, sig, &ctx)?,
            conclusion: compile(&ax.conclusion, sig, &ctx)?,
            sorts: ctx.iter().map(|(_, s)| *s).collect(),
        })
    }

    /// First assignment (lexicographic) violating the axiom.
    pub fn first_violation(&self, m: &FiniteStructure) -> Option<Vec<usize>> {
        let sizes = m.sizes();
        let found = tuples(&sizes, &self.sorts).find(|a| self.premise.eval(m, a) && !self.conclusion.eval(m, a));
        found
    }
}

/// The canonically first axiom instance that fails.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub axiom: usize,
    pub assignment: Vec<(String, String)>,
}

/// `Ok(None)` when `m ⊨ t`.
pub fn check_model(m: &FiniteStructure, t: &Theory) -> Result<Option<Counterexample>, EvalError> {
    if *m.signature() != t.signature {
        return Err(EvalError::SignatureMismatch);
    }
    check_axioms(m, &t.axioms)
}

/// As [`check_model`] for axioms over `m`'s own signature (which may extend
/// the theory's).
pub fn check_axioms(m: &FiniteStructure, axioms: &[HInductiveSentence]) -> Result<Option<Counterexample>, EvalError> {
    for (i, ax) in axioms.iter().enumerate() {
        let c = CompiledAxiom::new(ax, m.signature())?;
        if let Some(a) = c.first_violation(m) {
            let assignment = ax
                .universals
                .iter()
                .zip(&a)
                .zip(&c.sorts)
                .map(|((v, &e), s)| (v.name.clone(), m.elem_name(*s, e).to_string()))
                .collect();
            return Ok(Some(Counterexample { axiom: i, assignment }));
        }
    }
    Ok(None)
}

pub fn is_model(m: &FiniteStructure, t: &Theory) -> bool {
    matches!(check_axioms(m, &t.axioms), Ok(None))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::syntax::VarDecl;

    fn pure(n: usize) -> FiniteStructure {
        FiniteStructure::with_sizes(Arc::new(Signature::single_sorted("elem")), &[n]).unwrap()
    }

    fn exists_xx() -> Formula {
        Formula::exists(vec![VarDecl::new("x", "elem")], Formula::eq(Term::var("x"), Term::var("x")))
    }

    #[test]
    fn existential_over_singleton_and_empty() {
        assert!(eval_sentence(&pure(1), &exists_xx()).unwrap());
        assert!(!eval_sentence(&pure(0), &exists_xx()).unwrap());
    }

    #[test]
    fn distinct_elements_are_unequal() {
        let a = Assignment::from([("x".into(), 0), ("y".into(), 1)]);
        assert!(!eval(&pure(2), &Formula::eq(Term::var("x"), Term::var("y")), &a).unwrap());
    }

    #[test]
    fn missing_assignment_is_reported() {
        let r = eval(&pure(2), &Formula::eq(Term::var("x"), Term::var("y")), &Assignment::new());
        assert!(matches!(r, Err(EvalError::Unassigned(_))));
    }

    fn distinct3() -> Theory {
        let mut sig = Signature::single_sorted("elem");
        for i in 0..3 {
            sig.add_constant(&format!("c{i}"), SortId(0)).unwrap();
        }
        let mut axioms = Vec::new();
        for i in 0..3 {
            for j in i + 1..3 {
                axioms.push(HInductiveSentence::new(
                    vec![],
                    Formula::eq(Term::constant(&format!("c{i}")), Term::constant(&format!("c{j}"))),
                    Formula::Bottom,
                ));
            }
        }
        Theory::with_axioms(sig, axioms)
    }

    #[test]
    fn distinct_constants_model_check() {
        let t = distinct3();
        let sig = Arc::new(t.signature.clone());
        let mut m = FiniteStructure::with_sizes(sig.clone(), &[3]).unwrap();
        for c in 0..3 {
            m.set_constant(c, c);
        }
        assert_eq!(check_model(&m, &t).unwrap(), None);
        m.set_constant(1, 0);
        let bad = check_model(&m, &t).unwrap().unwrap();
        assert_eq!(bad.axiom, 0);
        assert_eq!(check_model(&m, &Theory::new(t.signature.clone())).unwrap(), None);
    }

    #[test]
    fn kleene_unknown_propagates() {
        struct Blank;
        impl Interp for Blank {
            fn size(&self, _: SortId) -> usize {
                2
            }
            fn const_val(&self, _: usize) -> Option<usize> {
                None
            }
            fn func_val(&self, _: usize, _: usize) -> Option<usize> {
                None
            }
            fn rel_val(&self, _: usize, idx: usize) -> Option<bool> {
                (idx == 0).then_some(true)
            }
        }
        let mut sig = Signature::single_sorted("elem");
        sig.add_relation("P", vec![SortId(0)]).unwrap();
        let ex = Formula::exists(vec![VarDecl::new("y", "elem")], Formula::atom("P", vec![Term::var("y")]));
        let c = compile(&ex, &sig, &[]).unwrap();
        assert_eq!(c.eval3(&Blank, &[]), T3::True);
        let p1 = compile(&Formula::atom("P", vec![Term::var("x")]), &sig, &[("x".into(), SortId(0))]).unwrap();
        assert_eq!(p1.eval3(&Blank, &[1]), T3::Unknown);
    }
}

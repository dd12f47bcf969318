//! Full first-order formulas over ∨, ∧, ¬, ∃, used only as the input side of
//! Morleyisation. Nothing here evaluates them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::TranslateError;
use crate::syntax::{well_sorted_in, Formula, HInductiveSentence, Signature, SortContext, SortError, SortId, Term, Theory, VarDecl};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FoFormula {
    Top,
    Bottom,
    Atom(String, Vec<Term>),
    Eq(Term, Term),
    Not(Box<FoFormula>),
    And(Vec<FoFormula>),
    Or(Vec<FoFormula>),
    Exists(VarDecl, Box<FoFormula>),
}

impl FoFormula {
    pub fn not(f: FoFormula) -> FoFormula {
        FoFormula::Not(Box::new(f))
    }

    pub fn exists(v: VarDecl, body: FoFormula) -> FoFormula {
        FoFormula::Exists(v, Box::new(body))
    }

    /// The same formula read in full first-order logic. Multi-variable
    /// binders become nested single-variable ones.
    pub fn from_positive(f: &Formula) -> FoFormula {
        match f {
            Formula::Top => FoFormula::Top,
            Formula::Bottom => FoFormula::Bottom,
            Formula::Atom(r, args) => FoFormula::Atom(r.clone(), args.clone()),
            Formula::Eq(a, b) => FoFormula::Eq(a.clone(), b.clone()),
            Formula::And(ps) => FoFormula::And(ps.iter().map(FoFormula::from_positive).collect()),
            Formula::Or(ps) => FoFormula::Or(ps.iter().map(FoFormula::from_positive).collect()),
            Formula::Exists(vs, body) => vs
                .iter()
                .rev()
                .fold(FoFormula::from_positive(body), |acc, v| FoFormula::exists(v.clone(), acc)),
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, FoFormula::Top | FoFormula::Bottom | FoFormula::Atom(..) | FoFormula::Eq(..))
    }

    /// Immediate subformulas.
    pub fn children(&self) -> Vec<&FoFormula> {
        match self {
            FoFormula::Not(p) | FoFormula::Exists(_, p) => vec![p],
            FoFormula::And(ps) | FoFormula::Or(ps) => ps.iter().collect(),
            _ => vec![],
        }
    }

    /// The positive formula obtained by deleting every negation. It has the
    /// same variables in the same positions, so it serves for sort checking.
    pub(crate) fn skeleton(&self) -> Formula {
        match self {
            FoFormula::Top => Formula::Top,
            FoFormula::Bottom => Formula::Bottom,
            FoFormula::Atom(r, args) => Formula::Atom(r.clone(), args.clone()),
            FoFormula::Eq(a, b) => Formula::Eq(a.clone(), b.clone()),
            FoFormula::Not(p) => p.skeleton(),
            FoFormula::And(ps) => Formula::And(ps.iter().map(FoFormula::skeleton).collect()),
            FoFormula::Or(ps) => Formula::Or(ps.iter().map(FoFormula::skeleton).collect()),
            FoFormula::Exists(v, body) => Formula::exists(vec![v.clone()], body.skeleton()),
        }
    }

    /// Free variables with their sorts, ordered by name.
    pub fn free_sorted(&self, sig: &Signature, known: &SortContext) -> Result<SortContext, SortError> {
        let mut ctx = well_sorted_in(&self.skeleton(), sig, known)?;
        let free: BTreeSet<String> = self.skeleton().free_vars().into_iter().collect();
        ctx.retain(|(v, _)| free.contains(v));
        ctx.sort();
        ctx.dedup();
        Ok(ctx)
    }

    pub fn depth(&self) -> usize {
        self.children().into_iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }

    pub fn quantifier_depth(&self) -> usize {
        match self {
            FoFormula::Exists(_, p) => p.quantifier_depth() + 1,
            _ => self.children().into_iter().map(FoFormula::quantifier_depth).max().unwrap_or(0),
        }
    }

    /// All subformulas, children before parents, without repetition.
    pub fn subformulas(&self) -> Vec<FoFormula> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        fn go(f: &FoFormula, out: &mut Vec<FoFormula>, seen: &mut BTreeSet<FoFormula>) {
            for c in f.children() {
                go(c, out, seen);
            }
            if seen.insert(f.clone()) {
                out.push(f.clone());
            }
        }
        go(self, &mut out, &mut seen);
        out
    }
}

impl fmt::Display for FoFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args = |ts: &[Term]| ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ");
        let join = |f: &mut fmt::Formatter<'_>, ps: &[FoFormula], op: &str| -> fmt::Result {
            write!(f, "(")?;
            for (i, p) in ps.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{p}")?;
            }
            write!(f, ")")
        };
        match self {
            FoFormula::Top => write!(f, "true"),
            FoFormula::Bottom => write!(f, "false"),
            FoFormula::Atom(r, ts) => write!(f, "{r}({})", args(ts)),
            FoFormula::Eq(a, b) => write!(f, "{a} = {b}"),
            FoFormula::Not(p) if p.is_atomic() || matches!(**p, FoFormula::Exists(..) | FoFormula::Not(_)) => write!(f, "~{p}"),
            FoFormula::Not(p) => write!(f, "~({p})"),
            FoFormula::And(ps) if ps.is_empty() => write!(f, "true"),
            FoFormula::Or(ps) if ps.is_empty() => write!(f, "false"),
            FoFormula::And(ps) => join(f, ps, "&"),
            FoFormula::Or(ps) => join(f, ps, "|"),
            FoFormula::Exists(v, p) => write!(f, "(exists {}:{}. {p})", v.name, v.sort),
        }
    }
}

/// `forall universals. premise -> conclusion` in full first-order logic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoAxiom {
    pub universals: Vec<VarDecl>,
    pub premise: FoFormula,
    pub conclusion: FoFormula,
}

impl From<&HInductiveSentence> for FoAxiom {
    fn from(ax: &HInductiveSentence) -> Self {
        FoAxiom {
            universals: ax.universals.clone(),
            premise: FoFormula::from_positive(&ax.premise),
            conclusion: FoFormula::from_positive(&ax.conclusion),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FoTheory {
    pub signature: Signature,
    pub axioms: Vec<FoAxiom>,
}

impl From<&Theory> for FoTheory {
    fn from(t: &Theory) -> Self {
        FoTheory {
            signature: t.signature.clone(),
            axioms: t.axioms.iter().map(FoAxiom::from).collect(),
        }
    }
}

/// A finite, subformula-closed set of full first-order formulas, in an order
/// where every formula comes after its subformulas. `var_sorts` fixes the
/// sort of free variables whose sort the formulas leave open (as in `x1 = x2`).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Fragment {
    formulas: Vec<FoFormula>,
    pub var_sorts: BTreeMap<String, String>,
}

fn var_name(sig: &Signature, s: SortId, k: usize) -> String {
    if sig.sorts().len() == 1 {
        format!("x{k}")
    } else {
        format!("{}{k}", sig.sort_name(s))
    }
}

impl Fragment {
    /// Accepts `formulas` as they are, failing on the first missing subformula.
    pub fn new(formulas: Vec<FoFormula>) -> Result<Fragment, TranslateError> {
        let set: BTreeSet<&FoFormula> = formulas.iter().collect();
        for f in &formulas {
            for c in f.children() {
                if !set.contains(c) {
                    return Err(TranslateError::NotSubformulaClosed(c.to_string()));
                }
            }
        }
        Ok(Fragment::closure(formulas))
    }

    /// The least subformula-closed set containing `formulas`.
    pub fn closure(formulas: impl IntoIterator<Item = FoFormula>) -> Fragment {
        let mut out = Fragment::default();
        for f in formulas {
            out.extend(f);
        }
        out
    }

    pub fn extend(&mut self, f: FoFormula) {
        for g in f.subformulas() {
            if !self.formulas.contains(&g) {
                self.formulas.push(g);
            }
        }
    }

    /// Adds the premises and conclusions of the axioms of `t`.
    pub fn with_theory(mut self, t: &FoTheory) -> Fragment {
        for ax in &t.axioms {
            self.extend(ax.premise.clone());
            self.extend(ax.conclusion.clone());
        }
        self
    }

    pub fn formulas(&self) -> &[FoFormula] {
        &self.formulas
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn position(&self, f: &FoFormula) -> Option<usize> {
        self.formulas.iter().position(|g| g == f)
    }

    pub(crate) fn known_sorts(&self, sig: &Signature) -> SortContext {
        self.var_sorts
            .iter()
            .filter_map(|(v, s)| sig.sort_id(s).map(|id| (v.clone(), id)))
            .collect()
    }

    /// Free variables of `f` with sorts, ordered by name.
    pub fn free_of(&self, f: &FoFormula, sig: &Signature) -> Result<SortContext, SortError> {
        f.free_sorted(sig, &self.known_sorts(sig))
    }

    /// Atomic formulas in distinct variables: one instance per relation
    /// symbol and one equality per sort. Variables are `x1, x2, …` over a
    /// single sort and `<sort>1, <sort>2, …` otherwise.
    pub fn atomic(sig: &Signature) -> Fragment {
        let mut out = Fragment::default();
        for s in sig.sort_ids() {
            let (a, b) = (var_name(sig, s, 1), var_name(sig, s, 2));
            out.var_sorts.insert(a.clone(), sig.sort_name(s).to_string());
            out.var_sorts.insert(b.clone(), sig.sort_name(s).to_string());
            out.extend(FoFormula::Eq(Term::var(&a), Term::var(&b)));
        }
        for r in sig.relations() {
            let mut seen: BTreeMap<SortId, usize> = BTreeMap::new();
            let args = r
                .args
                .iter()
                .map(|&s| {
                    let k = seen.entry(s).or_insert(0);
                    *k += 1;
                    let v = var_name(sig, s, *k);
                    out.var_sorts.insert(v.clone(), sig.sort_name(s).to_string());
                    Term::var(&v)
                })
                .collect();
            out.extend(FoFormula::Atom(r.name.clone(), args));
        }
        out
    }

    /// The atomic fragment together with every negation.
    pub fn qf(sig: &Signature) -> Fragment {
        let mut out = Fragment::atomic(sig);
        for f in out.formulas.clone() {
            out.extend(FoFormula::not(f));
        }
        out
    }

    /// `qf` closed `d` times under `∃y` and `¬∃y` for each free variable `y`.
    pub fn depth(sig: &Signature, d: usize) -> Result<Fragment, SortError> {
        let mut out = Fragment::qf(sig);
        let mut layer = out.formulas.clone();
        for _ in 0..d {
            let mut next = Vec::new();
            for f in &layer {
                for (v, s) in out.free_of(f, sig)? {
                    let e = FoFormula::exists(VarDecl::new(&v, sig.sort_name(s)), f.clone());
                    next.push(e.clone());
                    next.push(FoFormula::not(e));
                }
            }
            for f in &next {
                out.extend(f.clone());
            }
            layer = next;
        }
        Ok(out)
    }
}

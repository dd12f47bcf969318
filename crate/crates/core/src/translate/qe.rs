//! Positive quantifier elimination driven by user-supplied rules for single
//! existentials over conjunctions of atoms.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::analysis::ground_context;
use crate::model::FiniteStructure;
use crate::search::{find_model, Bound, SearchProblem, Verdict};
use crate::syntax::{regular_disjuncts, well_sorted, Formula, RegularDisjunct, Term, Theory, VarDecl, DEFAULT_DISJUNCT_LIMIT};

use super::TranslateError;

/// `exists var. atoms => replacement`, read modulo a theory.
///
/// The pattern's other free variables match arbitrary terms not mentioning
/// the bound variable. A rule applies when its atoms, instantiated, are
/// exactly the conjuncts that mention the bound variable; a rule whose
/// replacement is `false` also applies when they are only some of them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternRule {
    pub var: VarDecl,
    pub atoms: Vec<Formula>,
    pub replacement: Formula,
}

impl PatternRule {
    pub fn new(var: VarDecl, atoms: Vec<Formula>, replacement: Formula) -> Result<PatternRule, TranslateError> {
        let r = PatternRule {
            var,
            atoms,
            replacement,
        };
        if !r.replacement.is_quantifier_free() {
            return Err(TranslateError::BadRule(format!("{r}: replacement has a quantifier")));
        }
        for a in &r.atoms {
            if !matches!(a, Formula::Atom(..) | Formula::Eq(..)) {
                return Err(TranslateError::BadRule(format!("{r}: {a} is not an atom")));
            }
            if !a.has_free_var(&r.var.name) {
                return Err(TranslateError::BadRule(format!("{r}: {a} does not mention {}", r.var.name)));
            }
        }
        let pattern_free: BTreeSet<String> = r.pattern().free_vars().into_iter().collect();
        for v in r.replacement.free_vars() {
            if !pattern_free.contains(&v) {
                return Err(TranslateError::BadRule(format!("{r}: {v} is not free in the pattern")));
            }
        }
        Ok(r)
    }

    pub fn pattern(&self) -> Formula {
        Formula::exists(vec![self.var.clone()], Formula::conj(self.atoms.clone()))
    }

    fn apply(&self, y: &VarDecl, dep: &[Formula]) -> Option<Formula> {
        if self.var.sort != y.sort {
            return None;
        }
        let subset = matches!(self.replacement, Formula::Bottom);
        let mut binding = BTreeMap::new();
        let mut used = vec![false; dep.len()];
        if self.search(0, y, dep, &mut binding, &mut used, subset) {
            Some(self.replacement.substitute(&binding))
        } else {
            None
        }
    }

    fn search(
        &self,
        i: usize,
        y: &VarDecl,
        dep: &[Formula],
        binding: &mut BTreeMap<String, Term>,
        used: &mut Vec<bool>,
        subset: bool,
    ) -> bool {
        if i == self.atoms.len() {
            return subset || used.iter().all(|&u| u);
        }
        for (j, target) in dep.iter().enumerate() {
            for pairs in atom_pairs(&self.atoms[i], target) {
                let saved = binding.clone();
                if pairs.iter().all(|(p, t)| unify(p, t, &self.var.name, &y.name, binding)) {
                    let was = used[j];
                    used[j] = true;
                    if self.search(i + 1, y, dep, binding, used, subset) {
                        return true;
                    }
                    used[j] = was;
                }
                *binding = saved;
            }
        }
        false
    }
}

/// Argument pairings under which `p` could match `t`; equalities match in
/// either orientation.
fn atom_pairs<'a>(p: &'a Formula, t: &'a Formula) -> Vec<Vec<(&'a Term, &'a Term)>> {
    match (p, t) {
        (Formula::Atom(r, xs), Formula::Atom(s, ys)) if r == s && xs.len() == ys.len() => vec![xs.iter().zip(ys).collect()],
        (Formula::Eq(a, b), Formula::Eq(c, d)) => vec![vec![(a, c), (b, d)], vec![(a, d), (b, c)]],
        _ => vec![],
    }
}

fn unify(p: &Term, t: &Term, py: &str, y: &str, binding: &mut BTreeMap<String, Term>) -> bool {
    match p {
        Term::Var(v) if v == py => matches!(t, Term::Var(w) if w == y),
        Term::Var(v) => {
            if t.mentions_var(y) {
                return false;
            }
            match binding.get(v) {
                Some(b) => b == t,
                None => {
                    binding.insert(v.clone(), t.clone());
                    true
                }
            }
        }
        Term::Const(c) => matches!(t, Term::Const(d) if c == d),
        Term::App(f, xs) => match t {
            Term::App(g, ys) if f == g && xs.len() == ys.len() => xs.iter().zip(ys).all(|(a, b)| unify(a, b, py, y, binding)),
            _ => false,
        },
    }
}

impl fmt::Display for PatternRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} => {}", self.pattern(), self.replacement)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QeRule {
    /// `exists y. (y = t & …)` becomes `…` with `t` for `y`, when `t` does
    /// not mention `y`. Sound in every theory.
    Substitute,
    Pattern(PatternRule),
}

impl QeRule {
    fn apply(&self, y: &VarDecl, dep: &[Formula]) -> Option<Formula> {
        match self {
            QeRule::Substitute => {
                let yv = Term::var(&y.name);
                dep.iter().enumerate().find_map(|(i, a)| {
                    let Formula::Eq(l, r) = a else { return None };
                    let t = if *l == yv && !r.mentions_var(&y.name) {
                        r
                    } else if *r == yv && !l.mentions_var(&y.name) {
                        l
                    } else {
                        return None;
                    };
                    let map = BTreeMap::from([(y.name.clone(), t.clone())]);
                    let rest: Vec<Formula> = dep
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, b)| b.substitute(&map))
                        .collect();
                    Some(Formula::conj(rest))
                })
            }
            QeRule::Pattern(p) => p.apply(y, dep),
        }
    }
}

impl fmt::Display for QeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QeRule::Substitute => write!(f, "subst"),
            QeRule::Pattern(p) => write!(f, "rule {p}"),
        }
    }
}

fn trivial(a: &Formula) -> bool {
    match a {
        Formula::Top => true,
        Formula::Eq(l, r) => l == r,
        Formula::And(ps) => ps.is_empty(),
        _ => false,
    }
}

/// Eliminates quantifiers from `f`: bring it to a disjunction of
/// `∃ys. ⋀atoms`, remove the innermost `y` of one disjunct with the first
/// rule that applies (conjuncts not mentioning `y` are set aside), spread the
/// result back into disjuncts, and repeat. Conjuncts `t = t` are dropped and
/// a `y` no atom mentions is dropped with them (sorts are nonempty).
pub fn qe_eliminate(rules: &[QeRule], f: &Formula) -> Result<Formula, TranslateError> {
    let mut work: VecDeque<RegularDisjunct> = regular_disjuncts(f, DEFAULT_DISJUNCT_LIMIT)?.into();
    let mut done: Vec<Vec<Formula>> = Vec::new();
    while let Some(mut d) = work.pop_front() {
        if d.atoms.iter().any(|a| matches!(a, Formula::Bottom)) {
            continue;
        }
        d.atoms.retain(|a| !trivial(a));
        let mut seen = BTreeSet::new();
        d.atoms.retain(|a| seen.insert(a.clone()));
        let Some(y) = d.vars.pop() else {
            done.push(d.atoms);
            continue;
        };
        let (dep, indep): (Vec<Formula>, Vec<Formula>) = d.atoms.into_iter().partition(|a| a.has_free_var(&y.name));
        if dep.is_empty() {
            work.push_front(RegularDisjunct { vars: d.vars, atoms: indep });
            continue;
        }
        let Some(repl) = rules.iter().find_map(|r| r.apply(&y, &dep)) else {
            return Err(TranslateError::NoRuleApplies(
                Formula::exists(vec![y], Formula::conj(dep)).to_string(),
            ));
        };
        let mut parts = vec![repl];
        parts.extend(indep);
        let next = Formula::exists_opt(d.vars, Formula::conj(parts));
        for (i, nd) in regular_disjuncts(&next, DEFAULT_DISJUNCT_LIMIT)?.into_iter().enumerate() {
            work.insert(i, nd);
        }
    }
    if done.iter().any(Vec::is_empty) {
        return Ok(Formula::Top);
    }
    let mut out: Vec<Formula> = Vec::new();
    for c in done {
        let g = Formula::conj(c);
        if !out.contains(&g) {
            out.push(g);
        }
    }
    Ok(Formula::disj(out))
}

/// A model of the theory and a tuple on which the two formulas disagree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Separation {
    pub model: FiniteStructure,
    pub assignment: Vec<(String, String)>,
    /// Whether the original formula is the one that holds.
    pub original_holds: bool,
}

/// Bounded equivalence of `original` and `result` modulo `t`: searches for
/// a model of size ≤ `bound` where one holds at some tuple and the other
/// does not.
pub fn qe_verify(t: &Theory, original: &Formula, result: &Formula, bound: impl Into<Bound>) -> Result<Verdict<Separation>, TranslateError> {
    let bound = bound.into();
    if !result.is_quantifier_free() {
        return Err(TranslateError::BadInput(format!("{result} is not quantifier-free")));
    }
    let both = Formula::And(vec![original.clone(), result.clone()]);
    let ctx = well_sorted(&both, &t.signature)?;
    let (fresh, map) = ground_context(&t.signature, &ctx);
    for (yes, no, original_holds) in [(original, result, true), (result, original, false)] {
        let mut p = SearchProblem::new(t.clone(), bound.clone());
        p.fresh = fresh.clone();
        p.required = vec![yes.substitute(&map)];
        p.forbidden = vec![no.substitute(&map)];
        if let Some(n) = find_model(&p)?.found() {
            let sig = n.expanded.signature();
            let assignment = ctx
                .iter()
                .zip(&fresh)
                .map(|((v, s), (c, _))| {
                    let e = n.expanded.constant(sig.constant_index(c).expect("fresh constant"));
                    (v.clone(), n.model.elem_name(*s, e).to_string())
                })
                .collect();
            return Ok(Verdict::fails(
                Separation {
                    model: n.model,
                    assignment,
                    original_holds,
                },
                bound,
            ));
        }
    }
    Ok(Verdict::holds(None, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{HInductiveSentence, Signature, SortId};

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    fn p(i: usize, t: Term) -> Formula {
        Formula::atom(&format!("P{i}"), vec![t])
    }

    /// Two disjoint predicates, each nonempty when `nonempty`.
    fn disjoint_with(nonempty: bool) -> Theory {
        let mut sig = Signature::single_sorted("elem");
        sig.add_relation("P0", vec![SortId(0)]).unwrap();
        sig.add_relation("P1", vec![SortId(0)]).unwrap();
        let x = vec![VarDecl::new("x", "elem")];
        let mut axioms = vec![HInductiveSentence::new(
            x,
            Formula::And(vec![p(0, v("x")), p(1, v("x"))]),
            Formula::Bottom,
        )];
        for i in 0..2 * usize::from(nonempty) {
            axioms.push(HInductiveSentence::new(
                vec![],
                Formula::Top,
                Formula::exists(vec![VarDecl::new("y", "elem")], p(i, v("y"))),
            ));
        }
        Theory::with_axioms(sig, axioms)
    }

    fn disjoint() -> Theory {
        disjoint_with(true)
    }

    fn rules() -> Vec<QeRule> {
        let y = VarDecl::new("y", "elem");
        let pr = |atoms, repl| QeRule::Pattern(PatternRule::new(y.clone(), atoms, repl).unwrap());
        vec![
            QeRule::Substitute,
            pr(vec![p(0, v("y")), p(1, v("y"))], Formula::Bottom),
            pr(vec![p(0, v("y"))], Formula::Top),
            pr(vec![p(1, v("y"))], Formula::Top),
        ]
    }

    fn ey(body: Formula) -> Formula {
        Formula::exists(vec![VarDecl::new("y", "elem")], body)
    }

    #[test]
    fn three_cases() {
        let t = disjoint();
        let cases = [
            (ey(Formula::And(vec![Formula::eq(v("x"), v("y")), p(0, v("x"))])), "P0(x)"),
            (ey(Formula::And(vec![p(0, v("y")), p(1, v("y"))])), "false"),
            (ey(p(0, v("y"))), "true"),
        ];
        for (f, want) in cases {
            let r = qe_eliminate(&rules(), &f).unwrap();
            assert_eq!(r.to_string(), want);
            assert!(qe_verify(&t, &f, &r, 4).unwrap().is_holds(), "{f}");
        }
    }

    #[test]
    fn wrong_result_is_separated() {
        let t = disjoint_with(false);
        let f = ey(Formula::And(vec![Formula::eq(v("x"), v("y")), p(0, v("x"))]));
        let bad = p(1, v("x"));
        let sep = qe_verify(&t, &f, &bad, 4).unwrap();
        assert!(sep.is_fails());
        let w = sep.witness.unwrap();
        assert!(w.original_holds);
        assert_eq!(w.model.total_size(), 1);
        assert_eq!(w.assignment, vec![("x".to_string(), "a0".to_string())]);
        // Without the nonemptiness axioms the drop rule is not sound.
        let drop = qe_verify(&t, &ey(p(0, v("y"))), &Formula::Top, 4).unwrap();
        assert!(!drop.witness.unwrap().original_holds);
        assert!(qe_verify(&t, &bad, &bad, 4).unwrap().is_holds());
    }

    #[test]
    fn nested_and_disjunctive() {
        let f = Formula::exists(
            vec![VarDecl::new("y", "elem"), VarDecl::new("z", "elem")],
            Formula::And(vec![
                Formula::Or(vec![p(0, v("y")), p(1, v("z"))]),
                Formula::eq(v("z"), v("x")),
                p(1, v("y")),
            ]),
        );
        let r = qe_eliminate(&rules(), &f).unwrap();
        assert!(r.is_quantifier_free());
        assert_eq!(r.to_string(), "P1(x)");
        assert!(qe_verify(&disjoint(), &f, &r, 4).unwrap().is_holds());
    }

    #[test]
    fn no_rule() {
        let f = ey(p(0, v("y")));
        match qe_eliminate(&[QeRule::Substitute], &f) {
            Err(TranslateError::NoRuleApplies(s)) => assert_eq!(s, "exists y:elem. P0(y)"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rule_validation() {
        let y = VarDecl::new("y", "elem");
        assert!(PatternRule::new(y.clone(), vec![p(0, v("y"))], p(1, v("z"))).is_err());
        assert!(PatternRule::new(y.clone(), vec![p(0, v("x"))], Formula::Top).is_err());
        assert!(PatternRule::new(y, vec![Formula::eq(v("y"), v("x"))], p(0, v("x"))).is_ok());
    }

    #[test]
    fn pattern_variables_match_terms() {
        let y = VarDecl::new("y", "elem");
        let rule = QeRule::Pattern(
            PatternRule::new(y, vec![Formula::atom("E", vec![v("a"), v("y")]), p(0, v("y"))], p(1, v("a"))).unwrap(),
        );
        let f = ey(Formula::And(vec![p(0, v("y")), Formula::atom("E", vec![Term::constant("c"), v("y")]), p(0, v("x"))]));
        let r = qe_eliminate(&[rule], &f).unwrap();
        assert_eq!(r.to_string(), "P1(c) & P0(x)");
    }
}

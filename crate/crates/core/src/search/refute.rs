//! Ground refutation fast path.
//!
//! The ground atomic facts among the required sentences generate a term model
//! on the constants (classes under the forced equalities). Axioms whose
//! premise is primitive positive and whose conclusion is a conjunction of
//! atoms are chased over it; an h-universal axiom whose premise becomes true
//! is a refutation valid in every structure, at every size.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::syntax::{regular_disjuncts, Formula, HInductiveSentence, Signature, SortId, Term, Theory};

/// The required sentences contradict an axiom instance outright.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroundRefutation {
    /// Index of the violated axiom.
    pub axiom: usize,
    /// The axiom as written.
    pub axiom_text: String,
    /// The premise instance forced by the required facts.
    pub forced: String,
}

impl fmt::Display for GroundRefutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ground refutation: the required facts force `{}`, contradicting axiom {} (`{}`)",
            self.forced, self.axiom, self.axiom_text
        )
    }
}

struct Uf(Vec<usize>);

impl Uf {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let n = self.0[y];
            self.0[y] = r;
            y = n;
        }
        r
    }

    /// Merges, keeping the smaller index as representative.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.0[hi] = lo;
        true
    }
}

#[derive(Clone)]
enum GAtom {
    Rel(String, Vec<Term>),
    Eq(Term, Term),
}

struct Rule {
    axiom: usize,
    vars: Vec<(String, SortId)>,
    premise: Vec<GAtom>,
    conclusion: Option<Vec<GAtom>>,
}

fn function_free(t: &Term) -> bool {
    !matches!(t, Term::App(..))
}

fn to_gatoms(atoms: &[Formula]) -> Option<Vec<GAtom>> {
    atoms
        .iter()
        .map(|a| match a {
            Formula::Atom(r, args) if args.iter().all(function_free) => Some(GAtom::Rel(r.clone(), args.clone())),
            Formula::Eq(x, y) if function_free(x) && function_free(y) => Some(GAtom::Eq(x.clone(), y.clone())),
            _ => None,
        })
        .collect()
}

fn rules(sig: &Signature, i: usize, ax: &HInductiveSentence) -> Vec<Rule> {
    let conclusion = match &ax.conclusion {
        Formula::Bottom => None,
        c => {
            let Ok(ds) = regular_disjuncts(c, 64) else {
                return Vec::new();
            };
            if ds.len() != 1 || !ds[0].vars.is_empty() {
                return Vec::new();
            }
            match to_gatoms(&ds[0].atoms) {
                Some(g) => Some(g),
                None => return Vec::new(),
            }
        }
    };
    let Ok(ds) = regular_disjuncts(&ax.premise, 64) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for d in ds {
        let Some(premise) = to_gatoms(&d.atoms) else {
            continue;
        };
        let mut vars = Vec::new();
        for v in ax.universals.iter().chain(&d.vars) {
            match sig.sort_id(&v.sort) {
                Some(s) => vars.push((v.name.clone(), s)),
                None => return Vec::new(),
            }
        }
        out.push(Rule {
            axiom: i,
            vars,
            premise,
            conclusion: conclusion.clone(),
        });
    }
    out
}

struct Chase {
    names: Vec<String>,
    sorts: Vec<SortId>,
    uf: Uf,
    facts: BTreeSet<(String, Vec<usize>)>,
}

impl Chase {
    fn normalize(&mut self) {
        let old = std::mem::take(&mut self.facts);
        for (r, args) in old {
            let a = args.iter().map(|&x| self.uf.find(x)).collect();
            self.facts.insert((r, a));
        }
    }

    fn classes(&mut self, s: SortId) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.names.len())
            .filter(|&c| self.sorts[c] == s)
            .map(|c| self.uf.find(c))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    fn term(&mut self, t: &Term, env: &BTreeMap<String, usize>, consts: &BTreeMap<String, usize>) -> Option<usize> {
        match t {
            Term::Var(v) => env.get(v).copied(),
            Term::Const(c) => consts.get(c).map(|&i| self.uf.find(i)),
            Term::App(..) => None,
        }
    }

    /// All extensions of `env` satisfying `atoms[k..]`.
    fn matches(
        &mut self,
        rule: &Rule,
        k: usize,
        env: &mut BTreeMap<String, usize>,
        consts: &BTreeMap<String, usize>,
        out: &mut Vec<BTreeMap<String, usize>>,
    ) {
        if k == rule.premise.len() {
            // Variables the premise leaves free range over the named classes of their sort.
            let free: Vec<(String, SortId)> = rule
                .vars
                .iter()
                .filter(|(v, _)| !env.contains_key(v))
                .cloned()
                .collect();
            self.spread(&free, 0, env, out);
            return;
        }
        match &rule.premise[k] {
            GAtom::Rel(r, args) => {
                let candidates: Vec<Vec<usize>> = self
                    .facts
                    .iter()
                    .filter(|(q, a)| q == r && a.len() == args.len())
                    .map(|(_, a)| a.clone())
                    .collect();
                for fact in candidates {
                    let mut bound = Vec::new();
                    let mut ok = true;
                    for (t, &v) in args.iter().zip(&fact) {
                        match self.term(t, env, consts) {
                            Some(x) if x == v => {}
                            Some(_) => {
                                ok = false;
                                break;
                            }
                            None => match t {
                                Term::Var(name) => {
                                    env.insert(name.clone(), v);
                                    bound.push(name.clone());
                                }
                                _ => {
                                    ok = false;
                                    break;
                                }
                            },
                        }
                    }
                    if ok {
                        self.matches(rule, k + 1, env, consts, out);
                    }
                    for b in bound {
                        env.remove(&b);
                    }
                }
            }
            GAtom::Eq(a, b) => {
                let va = self.term(a, env, consts);
                let vb = self.term(b, env, consts);
                match (va, vb, a, b) {
                    (Some(x), Some(y), _, _) => {
                        if x == y {
                            self.matches(rule, k + 1, env, consts, out);
                        }
                    }
                    (Some(x), None, _, Term::Var(v)) | (None, Some(x), Term::Var(v), _) => {
                        env.insert(v.clone(), x);
                        self.matches(rule, k + 1, env, consts, out);
                        env.remove(v);
                    }
                    (None, None, Term::Var(v), Term::Var(w)) => {
                        let s = rule.vars.iter().find(|(n, _)| n == v).map(|(_, s)| *s);
                        if let Some(s) = s {
                            for c in self.classes(s) {
                                env.insert(v.clone(), c);
                                env.insert(w.clone(), c);
                                self.matches(rule, k + 1, env, consts, out);
                                env.remove(v);
                                env.remove(w);
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
    }

    fn spread(
        &mut self,
        free: &[(String, SortId)],
        k: usize,
        env: &mut BTreeMap<String, usize>,
        out: &mut Vec<BTreeMap<String, usize>>,
    ) {
        if k == free.len() {
            out.push(env.clone());
            return;
        }
        let (v, s) = &free[k];
        for c in self.classes(*s) {
            env.insert(v.clone(), c);
            self.spread(free, k + 1, env, out);
        }
        env.remove(v);
    }
}

fn ground_facts(phi: &Formula, out: &mut Vec<GAtom>) {
    match phi {
        Formula::And(ps) => ps.iter().for_each(|p| ground_facts(p, out)),
        Formula::Atom(..) | Formula::Eq(..) => {
            if let Some(mut g) = to_gatoms(std::slice::from_ref(phi)) {
                out.append(&mut g);
            }
        }
        _ => {}
    }
}

fn render(t: &Term, env: &BTreeMap<String, usize>, names: &[String]) -> String {
    match t {
        Term::Var(v) => env.get(v).map(|&c| names[c].clone()).unwrap_or_else(|| v.clone()),
        _ => t.to_string(),
    }
}

/// Looks for an axiom instance that the ground atomic facts among `required`
/// (over the theory's signature plus `fresh`) refute in every structure.
pub fn ground_refutation(theory: &Theory, fresh: &[(String, SortId)], required: &[Formula]) -> Option<GroundRefutation> {
    let sig = theory.signature.with_constants(fresh).ok()?.0;
    let names: Vec<String> = sig.constants().iter().map(|c| c.name.clone()).collect();
    let consts: BTreeMap<String, usize> = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
    let mut chase = Chase {
        sorts: sig.constants().iter().map(|c| c.sort).collect(),
        uf: Uf((0..names.len()).collect()),
        names,
        facts: BTreeSet::new(),
    };
    let mut facts = Vec::new();
    for phi in required {
        ground_facts(phi, &mut facts);
    }
    let empty = BTreeMap::new();
    for g in &facts {
        match g {
            GAtom::Rel(r, args) => {
                let vals: Option<Vec<usize>> = args.iter().map(|t| chase.term(t, &empty, &consts)).collect();
                if let Some(v) = vals {
                    chase.facts.insert((r.clone(), v));
                }
            }
            GAtom::Eq(a, b) => {
                if let (Some(x), Some(y)) = (chase.term(a, &empty, &consts), chase.term(b, &empty, &consts)) {
                    chase.uf.union(x, y);
                }
            }
        }
    }
    chase.normalize();
    let all_rules: Vec<Rule> = theory
        .axioms
        .iter()
        .enumerate()
        .flat_map(|(i, ax)| rules(&sig, i, ax))
        .collect();
    // Each round either adds a fact or merges two classes, so this terminates.
    loop {
        let mut changed = false;
        for rule in &all_rules {
            let mut found = Vec::new();
            chase.matches(rule, 0, &mut BTreeMap::new(), &consts, &mut found);
            for env in found {
                match &rule.conclusion {
                    None => {
                        let parts: Vec<String> = rule
                            .premise
                            .iter()
                            .map(|g| match g {
                                GAtom::Rel(r, args) => format!(
                                    "{r}({})",
                                    args.iter().map(|t| render(t, &env, &chase.names)).collect::<Vec<_>>().join(", ")
                                ),
                                GAtom::Eq(a, b) => format!("{} = {}", render(a, &env, &chase.names), render(b, &env, &chase.names)),
                            })
                            .collect();
                        let forced = if parts.is_empty() { "true".to_string() } else { parts.join(" & ") };
                        return Some(GroundRefutation {
                            axiom: rule.axiom,
                            axiom_text: theory.axioms[rule.axiom].to_string(),
                            forced,
                        });
                    }
                    Some(concl) => {
                        for g in concl {
                            match g {
                                GAtom::Rel(r, args) => {
                                    let vals: Option<Vec<usize>> =
                                        args.iter().map(|t| chase.term(t, &env, &consts)).collect();
                                    if let Some(v) = vals {
                                        changed |= chase.facts.insert((r.clone(), v));
                                    }
                                }
                                GAtom::Eq(a, b) => {
                                    if let (Some(x), Some(y)) = (chase.term(a, &env, &consts), chase.term(b, &env, &consts)) {
                                        changed |= chase.uf.union(x, y);
                                    }
                                }
                            }
                        }
                    }
                }
            }
            if changed {
                chase.normalize();
            }
        }
        if !changed {
            return None;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::VarDecl;

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
    fn forced_equality_of_distinct_constants() {
        let t = distinct3();
        let fresh = vec![("m".to_string(), SortId(0)), ("n".to_string(), SortId(0))];
        let req = vec![
            Formula::eq(Term::constant("m"), Term::constant("c1")),
            Formula::eq(Term::constant("n"), Term::constant("c2")),
            Formula::eq(Term::constant("m"), Term::constant("n")),
        ];
        let r = ground_refutation(&t, &fresh, &req).unwrap();
        assert_eq!(r.axiom, 2);
        assert_eq!(r.forced, "c1 = c2");
        assert!(ground_refutation(&t, &fresh, &req[..2]).is_none());
    }

    #[test]
    fn chase_through_h_inductive_axiom() {
        let mut sig = Signature::single_sorted("elem");
        sig.add_relation("P", vec![SortId(0)]).unwrap();
        sig.add_relation("Q", vec![SortId(0)]).unwrap();
        let x = || Term::var("x");
        let t = Theory::with_axioms(
            sig,
            vec![
                HInductiveSentence::new(
                    vec![VarDecl::new("x", "elem")],
                    Formula::atom("P", vec![x()]),
                    Formula::atom("Q", vec![x()]),
                ),
                HInductiveSentence::new(
                    vec![VarDecl::new("x", "elem")],
                    Formula::and(vec![Formula::atom("P", vec![x()]), Formula::atom("Q", vec![x()])]),
                    Formula::Bottom,
                ),
            ],
        );
        let fresh = vec![("c".to_string(), SortId(0))];
        let r = ground_refutation(&t, &fresh, &[Formula::atom("P", vec![Term::constant("c")])]).unwrap();
        assert_eq!(r.axiom, 1);
        assert_eq!(r.forced, "P(c) & Q(c)");
    }
}

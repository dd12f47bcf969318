//! Bounded model search and the verdicts built on it.

pub mod finder;
pub mod refute;
pub mod verdict;

use std::collections::BTreeMap;

pub use finder::{all_models, enumerate_models, find_model, FindResult, FoundModel, SearchError, SearchProblem};
pub use refute::{ground_refutation, GroundRefutation};
pub use verdict::{Bound, Status, Verdict};

use crate::syntax::{fresh_var, Formula, HInductiveSentence, SortId, Term, Theory};

/// Holds with the first model of size ≤ `bound` satisfying `sigma` (over the
/// theory's signature plus `fresh`); otherwise `UnknownAtBound`, annotated
/// with a ground refutation when one exists.
pub fn consistent_bounded(
    theory: &Theory,
    fresh: &[(String, SortId)],
    sigma: &[Formula],
    bound: impl Into<Bound>,
) -> Result<Verdict<FoundModel>, SearchError> {
    let bound = bound.into();
    let mut p = SearchProblem::new(theory.clone(), bound.clone());
    p.fresh = fresh.to_vec();
    p.required = sigma.to_vec();
    Ok(match find_model(&p)? {
        FindResult::Found(m) => Verdict::holds(Some(*m), bound),
        FindResult::ExhaustedAtBound(b) => {
            let r = ground_refutation(theory, fresh, sigma);
            let v = Verdict::unknown(None, b);
            match r {
                Some(r) => {
                    let note = r.to_string();
                    v.with_refutation(Some(r)).with_note(note)
                }
                None => v.with_note("no model within the bound; this does not prove inconsistency"),
            }
        }
    })
}

/// A model of the theory violating a sentence, with the violating assignment
/// (universal variable → element name).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterModel {
    pub model: FoundModel,
    pub assignment: Vec<(String, String)>,
}

/// Universal variables replaced by fresh constants; returns the constants and
/// the grounded premise and conclusion.
pub fn skolem_ground(theory: &Theory, sigma: &HInductiveSentence) -> (Vec<(String, SortId)>, Formula, Formula) {
    let sig = &theory.signature;
    let mut taken: std::collections::BTreeSet<String> = sig.constants().iter().map(|c| c.name.clone()).collect();
    taken.extend(sig.functions().iter().map(|f| f.name.clone()));
    taken.extend(sig.relations().iter().map(|r| r.name.clone()));
    let mut fresh = Vec::new();
    let mut map = BTreeMap::new();
    for v in &sigma.universals {
        let base = format!("k_{}", v.name);
        let name = if taken.contains(&base) { fresh_var(&base, &taken) } else { base };
        taken.insert(name.clone());
        let s = sig.sort_id(&v.sort).unwrap_or(SortId(0));
        fresh.push((name.clone(), s));
        map.insert(v.name.clone(), Term::Const(name));
    }
    (fresh, sigma.premise.substitute(&map), sigma.conclusion.substitute(&map))
}

/// Fails with a counter-model of size ≤ `bound` if one exists, otherwise
/// Holds relative to the bound.
pub fn entails_bounded(
    theory: &Theory,
    sigma: &HInductiveSentence,
    bound: impl Into<Bound>,
) -> Result<Verdict<CounterModel>, SearchError> {
    let bound = bound.into();
    let (fresh, premise, conclusion) = skolem_ground(theory, sigma);
    let mut p = SearchProblem::new(theory.clone(), bound.clone());
    p.fresh = fresh.clone();
    p.required = vec![premise];
    p.forbidden = vec![conclusion];
    Ok(match find_model(&p)? {
        FindResult::Found(m) => {
            let base = theory.signature.constants().len();
            let assignment = sigma
                .universals
                .iter()
                .zip(&fresh)
                .enumerate()
                .map(|(i, (v, (_, s)))| (v.name.clone(), m.expanded.elem_name(*s, m.expanded.constant(base + i)).to_string()))
                .collect();
            Verdict::fails(CounterModel { model: *m, assignment }, bound)
        }
        FindResult::ExhaustedAtBound(b) => Verdict::holds(None, b).with_note("no counter-model within the bound"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{Signature, VarDecl};

    fn irreflexive() -> Theory {
        let mut sig = Signature::single_sorted("elem");
        sig.add_relation("D", vec![SortId(0), SortId(0)]).unwrap();
        Theory::with_axioms(
            sig,
            vec![HInductiveSentence::new(
                vec![VarDecl::new("x", "elem")],
                Formula::atom("D", vec![Term::var("x"), Term::var("x")]),
                Formula::Bottom,
            )],
        )
    }

    #[test]
    fn irreflexive_pair_needs_two_elements() {
        let t = irreflexive();
        let s = Formula::exists(
            vec![VarDecl::new("x", "elem"), VarDecl::new("y", "elem")],
            Formula::atom("D", vec![Term::var("x"), Term::var("y")]),
        );
        assert!(consistent_bounded(&t, &[], &[s.clone()], 1).unwrap().is_unknown());
        let v = consistent_bounded(&t, &[], &[s], 2).unwrap();
        assert!(v.is_holds());
        assert_eq!(v.witness.unwrap().model.sizes(), vec![2]);
    }

    #[test]
    fn entailment_counter_model() {
        let mut sig = Signature::single_sorted("elem");
        sig.add_relation("P0", vec![SortId(0)]).unwrap();
        sig.add_relation("P1", vec![SortId(0)]).unwrap();
        let t = Theory::new(sig);
        let x = || Term::var("x");
        let taut = HInductiveSentence::new(
            vec![VarDecl::new("x", "elem")],
            Formula::atom("P0", vec![x()]),
            Formula::atom("P0", vec![x()]),
        );
        assert!(entails_bounded(&t, &taut, 3).unwrap().is_holds());
        let sigma = HInductiveSentence::new(
            vec![VarDecl::new("x", "elem")],
            Formula::atom("P0", vec![x()]),
            Formula::atom("P1", vec![x()]),
        );
        let v = entails_bounded(&t, &sigma, 3).unwrap();
        assert!(v.is_fails());
        let cm = v.witness.unwrap();
        assert_eq!(cm.model.model.sizes(), vec![1]);
        assert!(cm.model.model.holds(0, &[0]));
        assert!(!cm.model.model.holds(1, &[0]));
    }
}

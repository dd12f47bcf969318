use thiserror::Error;

use crate::model::{compile, tuples, EvalError, FiniteStructure};
use crate::search::{Bound, Verdict};
use crate::syntax::{Formula, SortError};

use super::map::{verify_homomorphism, MapError, StructureMap};
use super::pool::FormulaPool;

/// A pool formula true of the image of `assignment` but false of it in the
/// source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImmersionFailure {
    pub formula: Formula,
    pub assignment: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImmersionError {
    #[error("not a homomorphism: {0}")]
    NotAHomomorphism(#[from] MapError),
    #[error(transparent)]
    Sort(#[from] SortError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Checks `M ⊨ φ(a) ⇔ N ⊨ φ(f a)` for every pool formula and tuple, formulas
/// in pool order and tuples in lexicographic order. The forward direction is
/// automatic for a homomorphism, so only reflection is searched. The verdict
/// is labelled with the pool and carries no size bound.
pub fn check_immersion(
    src: &FiniteStructure,
    dst: &FiniteStructure,
    f: &StructureMap,
    pool: &FormulaPool,
) -> Result<Verdict<ImmersionFailure>, ImmersionError> {
    verify_homomorphism(src, dst, f)?;
    let sig = src.signature();
    let formulas = pool.formulas(sig)?;
    let sizes = src.sizes();
    for p in &formulas {
        let c = compile(&p.formula, sig, &p.free)?;
        let sorts = p.free_sorts();
        for a in tuples(&sizes, &sorts) {
            let image = f.apply_tuple(&sorts, &a).expect("total");
            if c.eval(dst, &image) && !c.eval(src, &a) {
                let assignment = p
                    .free
                    .iter()
                    .zip(&a)
                    .map(|((v, s), &e)| (v.clone(), src.elem_name(*s, e).to_string()))
                    .collect();
                return Ok(Verdict::fails(
                    ImmersionFailure {
                        formula: p.formula.clone(),
                        assignment,
                    },
                    Bound::uniform(0),
                )
                .with_pool(pool.label()));
            }
        }
    }
    Ok(Verdict::holds(None, Bound::uniform(0))
        .with_pool(pool.label())
        .with_note("relative to the formula pool"))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::syntax::{Signature, SortId, Term, VarDecl};

    #[test]
    fn identity_is_an_immersion() {
        let mut sig = Signature::single_sorted("elem");
        sig.add_relation("R", vec![SortId(0), SortId(0)]).unwrap();
        let mut m = FiniteStructure::with_sizes(Arc::new(sig), &[2]).unwrap();
        m.set_relation(0, &[0, 1], true);
        let v = check_immersion(&m, &m, &StructureMap::identity(&m), &FormulaPool::default()).unwrap();
        assert!(v.is_holds());
    }

    #[test]
    fn collapse_fails_on_equality() {
        let sig = Arc::new(Signature::single_sorted("elem"));
        let m = FiniteStructure::with_sizes(sig.clone(), &[2]).unwrap();
        let n = FiniteStructure::with_sizes(sig, &[1]).unwrap();
        let f = StructureMap::from_total(vec![vec![0, 0]]);
        let v = check_immersion(&m, &n, &f, &FormulaPool::explicit(vec![Formula::eq(Term::var("x"), Term::var("y"))])).unwrap();
        assert!(v.is_fails());
        let w = v.witness.unwrap();
        assert_eq!(w.assignment, vec![("x".into(), "a0".into()), ("y".into(), "a1".into())]);
    }

    #[test]
    fn inclusion_fails_on_new_edge() {
        let mut sig = Signature::single_sorted("elem");
        sig.add_relation("D", vec![SortId(0), SortId(0)]).unwrap();
        let sig = Arc::new(sig);
        let m = FiniteStructure::with_sizes(sig.clone(), &[1]).unwrap();
        let mut n = FiniteStructure::with_sizes(sig, &[2]).unwrap();
        n.set_relation(0, &[0, 1], true);
        let phi = Formula::exists(vec![VarDecl::new("y", "elem")], Formula::atom("D", vec![Term::var("x"), Term::var("y")]));
        let f = StructureMap::from_total(vec![vec![0]]);
        let v = check_immersion(&m, &n, &f, &FormulaPool::explicit(vec![phi.clone()])).unwrap();
        assert_eq!(v.witness.unwrap().formula, phi);
        assert!(check_immersion(&m, &n, &f, &FormulaPool::default()).unwrap().is_fails());
    }
}

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::model::{compile, diagram_over, FiniteStructure};
use crate::morphism::pool::context_name;
use crate::morphism::FormulaPool;
use crate::search::{find_model, Bound, SearchProblem, Verdict};
use crate::syntax::{Formula, Signature, SortId, Term, Theory};

use super::{joint_model, require_model, AnalysisError};

/// The pool formulas true of a tuple, over the structure's signature plus
/// one constant per parameter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeSet {
    pub signature: Signature,
    /// Variables standing for the tuple, `x, y, z, …`.
    pub ctx: Vec<(String, SortId)>,
    /// Parameter constants with the elements they name.
    pub params: Vec<(String, SortId, usize)>,
    /// In pool order.
    pub formulas: Vec<Formula>,
    pub pool: FormulaPool,
}

impl TypeSet {
    pub fn contains(&self, phi: &Formula) -> bool {
        self.formulas.contains(phi)
    }
}

/// The type of `a` over the parameters `params` (both given as sort and
/// element index), restricted to the pool.
pub fn type_of(m: &FiniteStructure, a: &[(SortId, usize)], params: &[(SortId, usize)], pool: &FormulaPool) -> Result<TypeSet, AnalysisError> {
    for &(s, e) in a.iter().chain(params) {
        if s.0 >= m.sizes().len() || e >= m.size(s) {
            return Err(AnalysisError::BadInput(format!("no element {e} in sort {}", s.0)));
        }
    }
    let mut sig = m.signature().clone();
    let mut pnames = Vec::new();
    for &(s, e) in params {
        let name = sig.fresh_name(&format!("p_{}", m.elem_name(s, e)));
        sig.add_constant(&name, s).map_err(|err| AnalysisError::BadInput(err.to_string()))?;
        pnames.push((name, s, e));
    }
    let values: Vec<usize> = params.iter().map(|&(_, e)| e).collect();
    let expanded = m
        .expand_constants(Arc::new(sig.clone()), &values)
        .map_err(|err| AnalysisError::BadInput(err.to_string()))?;
    let ctx: Vec<(String, SortId)> = a.iter().enumerate().map(|(i, &(s, _))| (context_name(i), s)).collect();
    let at: BTreeMap<&str, usize> = ctx.iter().map(|(v, _)| v.as_str()).zip(a.iter().map(|&(_, e)| e)).collect();
    let mut formulas = Vec::new();
    for p in pool.formulas_in(&sig, &ctx)? {
        let Some(vals) = p.free.iter().map(|(v, _)| at.get(v.as_str()).copied()).collect::<Option<Vec<usize>>>() else {
            continue;
        };
        if compile(&p.formula, &sig, &p.free)?.eval(&expanded, &vals) {
            formulas.push(p.formula);
        }
    }
    Ok(TypeSet {
        signature: sig,
        ctx,
        params: pnames,
        formulas,
        pool: pool.clone(),
    })
}

/// A pool formula outside the type that no formula of the type refutes
/// within the bound, with a continuation of the structure realizing it when
/// one exists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeGap {
    pub formula: Formula,
    pub continuation: Option<FiniteStructure>,
}

/// Bounded maximality of the type of `a`: every pool formula outside it must
/// be refuted, within the bound, by some formula inside it. An unrefuted
/// formula gives Fails when a continuation of `M` realizes it at the image of
/// `a`, UnknownAtBound otherwise.
pub fn type_maximal_check(
    t: &Theory,
    m: &FiniteStructure,
    a: &[(SortId, usize)],
    pool: &FormulaPool,
    bound: impl Into<Bound>,
) -> Result<Verdict<TypeGap>, AnalysisError> {
    let bound = bound.into();
    require_model(m, t)?;
    let p = type_of(m, a, &[], pool)?;
    let inside: BTreeSet<&Formula> = p.formulas.iter().collect();
    for phi in pool.formulas_in(&t.signature, &p.ctx)? {
        if inside.contains(&phi.formula) {
            continue;
        }
        let mut closed = false;
        for psi in &p.formulas {
            if joint_model(t, &p.ctx, &[&phi.formula, psi], &bound)?.is_none() {
                closed = true;
                break;
            }
        }
        if closed {
            continue;
        }
        let diag = diagram_over(m, &t.signature, "e_");
        let names: BTreeMap<String, Term> = p
            .ctx
            .iter()
            .zip(a)
            .map(|((v, _), &(s, e))| (v.clone(), diag.name(s, e)))
            .collect();
        let mut prob = SearchProblem::new(t.clone(), bound.clone());
        prob.fresh = diag.fresh.clone();
        prob.required = diag.facts.clone();
        prob.required.push(phi.formula.substitute(&names));
        let n = find_model(&prob)?.found();
        let gap = TypeGap {
            formula: phi.formula,
            continuation: n.as_ref().map(|n| n.model.clone()),
        };
        let v = if n.is_some() {
            Verdict::fails(gap, bound)
        } else {
            Verdict::unknown(Some(gap), bound)
        };
        return Ok(v.with_pool(pool.label()));
    }
    Ok(Verdict::holds(None, bound).with_pool(pool.label()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportFailure {
    /// `None` when `phi` itself is not in the type.
    pub psi: Option<Formula>,
    pub model: Option<FiniteStructure>,
}

/// Bounded check that `phi` supports `p`: `phi ∈ p` and no pool formula
/// outside `p` is realized together with `phi` in a model of `T` of size
/// ≤ `bound`. Consistency is taken relative to `T` itself.
pub fn support_check(
    t: &Theory,
    phi: &Formula,
    p: &TypeSet,
    bound: impl Into<Bound>,
) -> Result<Verdict<SupportFailure>, AnalysisError> {
    let bound = bound.into();
    let label = p.pool.label();
    if !p.contains(phi) {
        return Ok(Verdict::fails(SupportFailure { psi: None, model: None }, bound)
            .with_pool(label)
            .with_note("the formula is not in the type"));
    }
    let tp = if p.signature == t.signature {
        t.clone()
    } else {
        t.over(p.signature.clone())
    };
    for psi in p.pool.formulas_in(&p.signature, &p.ctx)? {
        if p.contains(&psi.formula) {
            continue;
        }
        if let Some(n) = joint_model(&tp, &p.ctx, &[phi, &psi.formula], &bound)? {
            return Ok(Verdict::fails(
                SupportFailure {
                    psi: Some(psi.formula),
                    model: Some(n.model),
                },
                bound,
            )
            .with_pool(label));
        }
    }
    Ok(Verdict::holds(None, bound)
        .with_pool(label)
        .with_note("consistency is checked against the theory itself, not its p.c. consequences"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphism::automorphisms;
    use crate::syntax::HInductiveSentence;

    fn constants() -> (Theory, FiniteStructure) {
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
        let t = Theory::with_axioms(sig, axioms);
        let mut m = FiniteStructure::with_sizes(Arc::new(t.signature.clone()), &[3]).unwrap();
        for i in 0..3 {
            m.set_constant(i, i);
        }
        (t, m)
    }

    #[test]
    fn singleton_type() {
        let m = FiniteStructure::with_sizes(Arc::new(Signature::single_sorted("elem")), &[1]).unwrap();
        let p = type_of(&m, &[(SortId(0), 0)], &[], &FormulaPool::default()).unwrap();
        let s: Vec<String> = p.formulas.iter().map(|f| f.to_string()).collect();
        assert!(s.contains(&"x = x".to_string()));
        assert!(s.contains(&"exists b0:elem. b0 = b0".to_string()));
    }

    #[test]
    fn constant_type_and_support() {
        let (t, m) = constants();
        let p = type_of(&m, &[(SortId(0), 0)], &[], &FormulaPool::new(1, 8)).unwrap();
        let x_c = |i: usize| Formula::eq(Term::var("x"), Term::constant(&format!("c{i}")));
        assert!(p.contains(&x_c(0)));
        assert!(!p.contains(&x_c(1)));
        assert!(support_check(&t, &x_c(0), &p, 4).unwrap().is_holds());
        assert!(support_check(&t, &x_c(1), &p, 4).unwrap().is_fails());
        let weak = support_check(&t, &Formula::eq(Term::var("x"), Term::var("x")), &p, 4).unwrap();
        assert!(weak.witness.unwrap().psi.is_some());
        assert!(type_maximal_check(&t, &m, &[(SortId(0), 0)], &FormulaPool::new(1, 8), 4).unwrap().is_holds());
    }

    #[test]
    fn automorphic_elements_share_types() {
        let mut sig = Signature::single_sorted("elem");
        sig.add_relation("E", vec![SortId(0), SortId(0)]).unwrap();
        let mut m = FiniteStructure::with_sizes(Arc::new(sig), &[3]).unwrap();
        m.set_relation(0, &[0, 1], true);
        m.set_relation(0, &[1, 0], true);
        let pool = FormulaPool::default();
        for f in automorphisms(&m) {
            for e in 0..3 {
                let a = type_of(&m, &[(SortId(0), e)], &[], &pool).unwrap();
                let b = type_of(&m, &[(SortId(0), f.at(SortId(0), e))], &[], &pool).unwrap();
                assert_eq!(a.formulas, b.formulas);
            }
        }
    }
}

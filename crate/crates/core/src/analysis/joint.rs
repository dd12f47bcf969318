use crate::model::{diagram_over, FiniteStructure};
use crate::morphism::{verify_homomorphism, StructureMap};
use crate::search::{consistent_bounded, Bound, Verdict};
use crate::syntax::{Formula, Theory};

use super::{require_model, AnalysisError};

/// A common continuation `N` and the maps into it, in argument order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointContinuation {
    pub model: FiniteStructure,
    pub maps: Vec<StructureMap>,
}

/// Looks for a model of size ≤ `bound` receiving homomorphisms from both
/// structures: a model of both positive diagrams over disjoint constants
/// (`l_…` for the first, `r_…` for the second).
pub fn jcp_pair(t: &Theory, m1: &FiniteStructure, m2: &FiniteStructure, bound: impl Into<Bound>) -> Result<Verdict<JointContinuation>, AnalysisError> {
    require_model(m1, t)?;
    require_model(m2, t)?;
    joint(t, m1, m2, |_, _| Vec::new(), bound.into())
}

/// Amalgamates `f: M0 → M1` and `g: M0 → M2`: the diagrams of `M1` and `M2`
/// plus `l_{f(e)} = r_{g(e)}` for every element `e` of `M0`, so the maps
/// into the result agree on `M0`.
pub fn amalgamate(
    t: &Theory,
    m0: &FiniteStructure,
    m1: &FiniteStructure,
    f: &StructureMap,
    m2: &FiniteStructure,
    g: &StructureMap,
    bound: impl Into<Bound>,
) -> Result<Verdict<JointContinuation>, AnalysisError> {
    verify_homomorphism(m0, m1, f)?;
    verify_homomorphism(m0, m2, g)?;
    for m in [m0, m1, m2] {
        require_model(m, t)?;
    }
    let links = |d1: &crate::model::Diagram, d2: &crate::model::Diagram| {
        let mut out = Vec::new();
        for s in m0.signature().sort_ids() {
            for e in 0..m0.size(s) {
                out.push(Formula::eq(d1.name(s, f.at(s, e)), d2.name(s, g.at(s, e))));
            }
        }
        out
    };
    joint(t, m1, m2, links, bound.into())
}

fn joint<L>(t: &Theory, m1: &FiniteStructure, m2: &FiniteStructure, links: L, bound: Bound) -> Result<Verdict<JointContinuation>, AnalysisError>
where
    L: FnOnce(&crate::model::Diagram, &crate::model::Diagram) -> Vec<Formula>,
{
    let sig = &t.signature;
    if m1.signature() != sig || m2.signature() != sig {
        return Err(AnalysisError::BadInput("structures and theory have different signatures".into()));
    }
    let d1 = diagram_over(m1, sig, "l_");
    let d2 = diagram_over(m2, &d1.signature, "r_");
    let mut fresh = d1.fresh.clone();
    fresh.extend(d2.fresh.iter().cloned());
    let mut facts = d1.facts.clone();
    facts.extend(d2.facts.iter().cloned());
    facts.extend(links(&d1, &d2));
    let v = consistent_bounded(t, &fresh, &facts, bound)?;
    Ok(v.map(|n| JointContinuation {
        maps: vec![d1.induced_map(&n.expanded), d2.induced_map(&n.expanded)],
        model: n.model,
    }))
}

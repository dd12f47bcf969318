//! Bounded versions of the basic decision questions about positive theories:
//! obstructions, positive closedness, joint continuation and types.

pub mod joint;
pub mod obstruction;
pub mod pc;
pub mod types;

use std::collections::BTreeMap;

use thiserror::Error;

pub use joint::{amalgamate, jcp_pair, JointContinuation};
pub use obstruction::{find_obstruction, Obstruction};
pub use pc::{continue_to_pc, haykazyan_check, pc_check, Continued, HaykazyanFailure, PcCase, PcWitness};
pub use types::{support_check, type_maximal_check, type_of, SupportFailure, TypeGap, TypeSet};

use crate::model::{check_model, EvalError, FiniteStructure};
use crate::morphism::MapError;
use crate::search::{find_model, Bound, FoundModel, SearchError, SearchProblem};
use crate::syntax::{Formula, Signature, SortError, SortId, Term, Theory};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("not a model of the theory: axiom {axiom} fails at {assignment}")]
    NotAModel { axiom: usize, assignment: String },
    #[error("not a subset of the structure: {0}")]
    NotASubset(String),
    #[error("not a homomorphism: {0}")]
    NotAHomomorphism(#[from] MapError),
    #[error("{0}")]
    BadInput(String),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Sort(#[from] SortError),
}

pub(crate) fn require_model(m: &FiniteStructure, t: &Theory) -> Result<(), AnalysisError> {
    if let Some(cx) = check_model(m, t)? {
        let assignment = cx
            .assignment
            .iter()
            .map(|(v, e)| format!("{v}={e}"))
            .collect::<Vec<_>>()
            .join(", ");
        return Err(AnalysisError::NotAModel {
            axiom: cx.axiom,
            assignment: format!("({assignment})"),
        });
    }
    Ok(())
}

/// Fresh constants standing for the variables of `ctx`, and the substitution
/// replacing each variable by its constant.
pub(crate) fn ground_context(sig: &Signature, ctx: &[(String, SortId)]) -> (Vec<(String, SortId)>, BTreeMap<String, Term>) {
    let mut fresh = Vec::new();
    let mut map = BTreeMap::new();
    let mut taken = sig.clone();
    for (v, s) in ctx {
        let name = taken.fresh_name(&format!("c_{v}"));
        taken.add_constant(&name, *s).expect("fresh name");
        fresh.push((name.clone(), *s));
        map.insert(v.clone(), Term::Const(name));
    }
    (fresh, map)
}

/// A model of `T` of size ≤ `bound` realizing the conjunction of `formulas`
/// at a common tuple for the variables of `ctx`.
pub fn joint_model(
    t: &Theory,
    ctx: &[(String, SortId)],
    formulas: &[&Formula],
    bound: &Bound,
) -> Result<Option<FoundModel>, SearchError> {
    let (fresh, map) = ground_context(&t.signature, ctx);
    let mut p = SearchProblem::new(t.clone(), bound.clone());
    p.fresh = fresh;
    p.required = formulas.iter().map(|f| f.substitute(&map)).collect();
    Ok(find_model(&p)?.found())
}

pub(crate) fn show_assignment(m: &FiniteStructure, free: &[(String, SortId)], a: &[usize]) -> Vec<(String, String)> {
    free.iter()
        .zip(a)
        .map(|((v, s), &e)| (v.clone(), m.elem_name(*s, e).to_string()))
        .collect()
}

use crate::morphism::FormulaPool;
use crate::search::{Bound, Verdict};
use crate::syntax::{well_sorted, Formula, Theory};

use super::{joint_model, AnalysisError};

/// `psi` has no common realization with `phi` in any model of size ≤ `bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obstruction {
    pub psi: Formula,
    pub phi: Formula,
    pub bound: Bound,
}

/// Scans the pool (formulas in the free variables of `phi`) for the first
/// `psi` that is satisfiable on its own but not together with `phi`, both
/// within `bound`. Holds with the obstruction; UnknownAtBound when the pool
/// has none.
///
/// Self-inconsistent formulas such as `false` obstruct everything and are
/// skipped.
pub fn find_obstruction(
    t: &Theory,
    phi: &Formula,
    pool: &FormulaPool,
    bound: impl Into<Bound>,
) -> Result<Verdict<Obstruction>, AnalysisError> {
    let bound = bound.into();
    let ctx = well_sorted(phi, &t.signature)?;
    let candidates = pool.formulas_in(&t.signature, &ctx)?;
    for c in &candidates {
        if joint_model(t, &ctx, &[phi, &c.formula], &bound)?.is_some() {
            continue;
        }
        if joint_model(t, &ctx, &[&c.formula], &bound)?.is_none() {
            continue;
        }
        return Ok(Verdict::holds(
            Some(Obstruction {
                psi: c.formula.clone(),
                phi: phi.clone(),
                bound: bound.clone(),
            }),
            bound,
        )
        .with_pool(pool.label()));
    }
    Ok(Verdict::unknown(None, bound)
        .with_pool(pool.label())
        .with_note("no obstruction in the pool"))
}

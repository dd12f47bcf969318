//! Explicit witnesses for dividing, the tree property, the order property
//! and the binary-tree rank, checked inside a finite ambient structure.
//!
//! Consistency of a set of instances means realization in the ambient
//! structure, falling back to the bounded model finder (over the ambient's
//! diagram) when the ambient has no realizer. Indiscernibility of sequences
//! is only checked against a formula pool.

pub mod rank;

use std::collections::BTreeMap;

use thiserror::Error;

pub use rank::{rank, rank_via_tree, RankQuery};

use crate::analysis::{type_of, AnalysisError};
use crate::model::{compile, diagram_over, EvalError, FiniteStructure};
use crate::morphism::FormulaPool;
use crate::search::{find_model, Bound, SearchError, SearchProblem, Verdict};
use crate::syntax::{Formula, SortError, SortId, Term, Theory, VarDecl};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("expected {expected} variable(s) per slot, tuples have {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("sequences have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("tree is missing node `{0}`")]
    IncompleteTree(String),
    #[error("the formulas are jointly realized at x = ({x}), y = ({y})")]
    NotContradictory { x: String, y: String },
    #[error("{0}")]
    BadInput(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Sort(#[from] SortError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// A finite sequence of equal-length tuples in an ambient structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSequence {
    pub ambient: FiniteStructure,
    pub sorts: Vec<SortId>,
    pub tuples: Vec<Vec<usize>>,
}

impl ParamSequence {
    pub fn new(ambient: FiniteStructure, sorts: Vec<SortId>, tuples: Vec<Vec<usize>>) -> Result<Self, ClassifyError> {
        for t in &tuples {
            check_tuple(&ambient, &sorts, t)?;
        }
        Ok(ParamSequence { ambient, sorts, tuples })
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

fn check_tuple(m: &FiniteStructure, sorts: &[SortId], t: &[usize]) -> Result<(), ClassifyError> {
    if t.len() != sorts.len() {
        return Err(ClassifyError::ArityMismatch {
            expected: sorts.len(),
            found: t.len(),
        });
    }
    for (&s, &e) in sorts.iter().zip(t) {
        if s.0 >= m.sizes().len() || e >= m.size(s) {
            return Err(ClassifyError::BadInput(format!("element {e} is not in sort {}", s.0)));
        }
    }
    Ok(())
}

/// Parameters indexed by the nodes of the `width`-ary tree of depth
/// `depth`: every node (a sequence of child indices) of length < `depth`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamTree {
    pub ambient: FiniteStructure,
    pub sorts: Vec<SortId>,
    pub width: usize,
    pub depth: usize,
    pub nodes: BTreeMap<Vec<usize>, Vec<usize>>,
}

impl ParamTree {
    /// Node keys in breadth-first order.
    pub fn node_keys(width: usize, depth: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut level = vec![Vec::new()];
        for _ in 0..depth {
            let mut next = Vec::new();
            for n in &level {
                for i in 0..width {
                    let mut c: Vec<usize> = n.clone();
                    c.push(i);
                    next.push(c);
                }
            }
            out.extend(level);
            level = next;
        }
        out
    }

    pub fn check(&self) -> Result<(), ClassifyError> {
        for k in Self::node_keys(self.width, self.depth) {
            match self.nodes.get(&k) {
                Some(t) => check_tuple(&self.ambient, &self.sorts, t)?,
                None => return Err(ClassifyError::IncompleteTree(node_name(&k))),
            }
        }
        Ok(())
    }
}

pub fn node_name(k: &[usize]) -> String {
    k.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
}

/// A formula whose free variables are grouped into `slots` of equal length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotFormula {
    pub formula: Formula,
    pub slots: Vec<Vec<String>>,
}

impl SlotFormula {
    pub fn new(formula: Formula, slots: Vec<Vec<String>>) -> Self {
        SlotFormula { formula, slots }
    }

    fn ctx(&self, sorts: &[SortId]) -> Result<Vec<(String, SortId)>, ClassifyError> {
        let mut ctx = Vec::new();
        for slot in &self.slots {
            if slot.len() != sorts.len() {
                return Err(ClassifyError::ArityMismatch {
                    expected: slot.len(),
                    found: sorts.len(),
                });
            }
            ctx.extend(slot.iter().cloned().zip(sorts.iter().copied()));
        }
        Ok(ctx)
    }
}

/// Increasing selections `i1 < … < in` of `0..len`, lexicographically.
pub fn selections(len: usize, n: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, len: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for i in start..len {
            cur.push(i);
            go(i + 1, len, n, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, len, n, &mut Vec::new(), &mut out);
    out
}

/// The first increasing selection at which `phi` fails, if any.
pub fn first_failure_along(s: &ParamSequence, phi: &SlotFormula) -> Result<Option<Vec<usize>>, ClassifyError> {
    let ctx = phi.ctx(&s.sorts)?;
    let c = compile(&phi.formula, s.ambient.signature(), &ctx)?;
    for sel in selections(s.len(), phi.slots.len()) {
        let a: Vec<usize> = sel.iter().flat_map(|&i| s.tuples[i].iter().copied()).collect();
        if !c.eval(&s.ambient, &a) {
            return Ok(Some(sel));
        }
    }
    Ok(None)
}

/// `phi` holds of every increasing selection from the sequence.
pub fn holds_along(s: &ParamSequence, phi: &SlotFormula) -> Result<bool, ClassifyError> {
    Ok(first_failure_along(s, phi)?.is_none())
}

/// `phi(x, y)` with `x` the object variables and `y` the parameter slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partitioned {
    pub formula: Formula,
    pub x: Vec<(String, SortId)>,
    pub y: Vec<String>,
}

/// `exists x. phi(x, y1) & … & phi(x, yk)` with the `yi` taken from the slots
/// of `psi`.
fn conjoined(t: &Theory, phi: &Partitioned, psi: &SlotFormula) -> Formula {
    let parts = psi
        .slots
        .iter()
        .map(|slot| {
            let map = phi.y.iter().cloned().zip(slot.iter().map(|v| Term::var(v))).collect();
            phi.formula.substitute(&map)
        })
        .collect();
    let decls = phi
        .x
        .iter()
        .map(|(v, s)| VarDecl::new(v, t.signature.sort_name(*s)))
        .collect();
    Formula::exists_opt(decls, Formula::and(parts))
}

/// Which part of a witness failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WitnessFailure {
    /// `psi` is realized together with the conjunction in this model.
    NotAnObstruction(FiniteStructure),
    /// `psi` fails at this selection of sequence indices or sibling indices
    /// (under `node` for trees).
    NotAlong { node: Option<String>, selection: Vec<usize> },
    /// The tuple at this index has a different pool type from the first.
    TypeMismatch { index: usize, formula: Formula },
    /// No realization of the instances along this branch (leaf node).
    BranchInconsistent(String),
    /// The order-property cell `(i, j)` fails.
    Cell(usize, usize),
}

fn obstruction_model(t: &Theory, phi: &Partitioned, psi: &SlotFormula, sorts: &[SortId], bound: &Bound) -> Result<Option<FiniteStructure>, ClassifyError> {
    let ctx = psi.ctx(sorts)?;
    let conj = conjoined(t, phi, psi);
    Ok(crate::analysis::joint_model(t, &ctx, &[&conj, &psi.formula], bound)?.map(|n| n.model))
}

/// Checks an explicit `psi`-dividing witness: `psi` must obstruct
/// `exists x. phi(x, y1) & … & phi(x, yk)` within `bound`, hold along the
/// sequence, and all tuples must share one pool type over `base`.
pub fn check_psi_dividing(
    t: &Theory,
    phi: &Partitioned,
    psi: &SlotFormula,
    s: &ParamSequence,
    base: &[(SortId, usize)],
    pool: &FormulaPool,
    bound: impl Into<Bound>,
) -> Result<Verdict<WitnessFailure>, ClassifyError> {
    let bound = bound.into();
    if phi.y.len() != s.sorts.len() {
        return Err(ClassifyError::ArityMismatch {
            expected: phi.y.len(),
            found: s.sorts.len(),
        });
    }
    if let Some(m) = obstruction_model(t, phi, psi, &s.sorts, &bound)? {
        return Ok(Verdict::fails(WitnessFailure::NotAnObstruction(m), bound));
    }
    if let Some(sel) = first_failure_along(s, psi)? {
        return Ok(Verdict::fails(WitnessFailure::NotAlong { node: None, selection: sel }, bound));
    }
    if let Some(first) = s.tuples.first() {
        let at = |t: &[usize]| -> Vec<(SortId, usize)> { s.sorts.iter().copied().zip(t.iter().copied()).collect() };
        let p0 = type_of(&s.ambient, &at(first), base, pool)?;
        for (i, tup) in s.tuples.iter().enumerate().skip(1) {
            let pi = type_of(&s.ambient, &at(tup), base, pool)?;
            if pi.formulas != p0.formulas {
                let formula = p0
                    .formulas
                    .iter()
                    .find(|f| !pi.formulas.contains(f))
                    .or_else(|| pi.formulas.iter().find(|f| !p0.formulas.contains(f)))
                    .cloned()
                    .expect("types differ");
                return Ok(Verdict::fails(WitnessFailure::TypeMismatch { index: i, formula }, bound).with_pool(pool.label()));
            }
        }
    }
    Ok(Verdict::holds(None, bound)
        .with_pool(pool.label())
        .with_note("explicit witness only; indiscernibility is checked against the pool"))
}

/// The instances `phi(x, a)` for the given tuples are realized in the
/// ambient, or failing that in a model of size ≤ `bound` of `T` plus the
/// ambient's diagram.
fn instances_consistent(t: &Theory, m: &FiniteStructure, phi: &Partitioned, sorts: &[SortId], params: &[&Vec<usize>], bound: &Bound) -> Result<bool, ClassifyError> {
    let sig = m.signature();
    let mut ctx: Vec<(String, SortId)> = phi.x.clone();
    ctx.extend(phi.y.iter().cloned().zip(sorts.iter().copied()));
    let c = compile(&phi.formula, sig, &ctx)?;
    let xs: Vec<SortId> = phi.x.iter().map(|(_, s)| *s).collect();
    let sizes = m.sizes();
    for x in crate::model::tuples(&sizes, &xs) {
        if params.iter().all(|b| {
            let mut a = x.clone();
            a.extend(b.iter().copied());
            c.eval(m, &a)
        }) {
            return Ok(true);
        }
    }
    let diag = diagram_over(m, sig, "e_");
    let parts = params
        .iter()
        .map(|b| {
            let map = phi
                .y
                .iter()
                .cloned()
                .zip(b.iter().zip(sorts).map(|(&e, &s)| diag.name(s, e)))
                .collect();
            phi.formula.substitute(&map)
        })
        .collect();
    let decls = phi.x.iter().map(|(v, s)| VarDecl::new(v, sig.sort_name(*s))).collect();
    let mut p = SearchProblem::new(t.clone(), bound.clone());
    p.fresh = diag.fresh.clone();
    p.required = diag.facts.clone();
    p.required.push(Formula::exists_opt(decls, Formula::and(parts)));
    Ok(find_model(&p)?.found().is_some())
}

/// Checks an explicit finite k-TP witness tree.
pub fn check_tp_witness(
    t: &Theory,
    phi: &Partitioned,
    psi: &SlotFormula,
    tree: &ParamTree,
    bound: impl Into<Bound>,
) -> Result<Verdict<WitnessFailure>, ClassifyError> {
    let bound = bound.into();
    tree.check()?;
    if let Some(m) = obstruction_model(t, phi, psi, &tree.sorts, &bound)? {
        return Ok(Verdict::fails(WitnessFailure::NotAnObstruction(m), bound));
    }
    let keys = ParamTree::node_keys(tree.width, tree.depth);
    for leaf in keys.iter().filter(|k| k.len() + 1 == tree.depth) {
        let params: Vec<&Vec<usize>> = (0..=leaf.len()).map(|n| &tree.nodes[&leaf[..n].to_vec()]).collect();
        if !instances_consistent(t, &tree.ambient, phi, &tree.sorts, &params, &bound)? {
            return Ok(Verdict::fails(WitnessFailure::BranchInconsistent(node_name(leaf)), bound));
        }
    }
    for node in keys.iter().filter(|k| k.len() + 1 < tree.depth) {
        let children = ParamSequence {
            ambient: tree.ambient.clone(),
            sorts: tree.sorts.clone(),
            tuples: (0..tree.width)
                .map(|i| {
                    let mut c = node.clone();
                    c.push(i);
                    tree.nodes[&c].clone()
                })
                .collect(),
        };
        if let Some(sel) = first_failure_along(&children, psi)? {
            return Ok(Verdict::fails(
                WitnessFailure::NotAlong {
                    node: Some(node_name(node)),
                    selection: sel,
                },
                bound,
            ));
        }
    }
    Ok(Verdict::holds(None, bound).with_note("finite tree; branches are checked up to the given depth only"))
}

/// Checks an order-property staircase: `phi(a_i, b_j)` for `i < j` and
/// `psi(a_i, b_j)` for `i ≥ j`, with `psi` obstructing `phi` within `bound`.
pub fn check_op_witness(
    t: &Theory,
    phi: &Partitioned,
    psi: &Formula,
    a: &ParamSequence,
    b: &ParamSequence,
    bound: impl Into<Bound>,
) -> Result<Verdict<WitnessFailure>, ClassifyError> {
    let bound = bound.into();
    if a.len() != b.len() {
        return Err(ClassifyError::LengthMismatch(a.len(), b.len()));
    }
    if phi.x.len() != a.sorts.len() || phi.y.len() != b.sorts.len() {
        return Err(ClassifyError::ArityMismatch {
            expected: phi.x.len() + phi.y.len(),
            found: a.sorts.len() + b.sorts.len(),
        });
    }
    let mut ctx: Vec<(String, SortId)> = phi.x.clone();
    ctx.extend(phi.y.iter().cloned().zip(b.sorts.iter().copied()));
    if let Some(n) = crate::analysis::joint_model(t, &ctx, &[&phi.formula, psi], &bound)? {
        return Ok(Verdict::fails(WitnessFailure::NotAnObstruction(n.model), bound));
    }
    let sig = a.ambient.signature();
    let cphi = compile(&phi.formula, sig, &ctx)?;
    let cpsi = compile(psi, sig, &ctx)?;
    for i in 0..a.len() {
        for j in 0..b.len() {
            let mut v = a.tuples[i].clone();
            v.extend(b.tuples[j].iter().copied());
            let ok = if i < j { cphi.eval(&a.ambient, &v) } else { cpsi.eval(&a.ambient, &v) };
            if !ok {
                return Ok(Verdict::fails(WitnessFailure::Cell(i, j), bound));
            }
        }
    }
    Ok(Verdict::holds(None, bound))
}

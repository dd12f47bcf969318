//! Bounded finite-model finder.
//!
//! For each size vector (smallest total first, then lexicographic) the
//! interpretation is filled in cell by cell: constants, then function cells,
//! then relation cells, each group ordered by the largest element among the
//! cell's arguments. Every ground instance of every axiom (and of the required
//! and forbidden sentences) is evaluated three-valuedly after each step; an
//! instance whose premise is true and whose conclusion is false prunes the
//! branch, and instances that are already decided in their favour are
//! retired until backtracking restores them.
//!
//! Symmetry breaking: when a constant or function cell is filled, elements
//! of the result sort that no filled cell mentions (as argument or value) and
//! that are not arguments of the current cell are interchangeable, so only
//! the least of them is tried. The pruned branches are isomorphic copies of
//! explored ones that come later in the lexicographic cell order, so the
//! first model found is the same with or without the pruning.

use std::sync::Arc;

use thiserror::Error;

use crate::model::eval::{compile, Compiled, EvalError, Interp, T3};
use crate::model::structure::{index_tuple, table_len, FiniteStructure};
use crate::syntax::{check_sentence, Formula, Signature, SignatureError, SortId, Theory};

use super::verdict::Bound;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Signature(#[from] SignatureError),
}

/// A bounded satisfiability question: models of `theory` over the signature
/// extended by `fresh` constants, making every `required` sentence true and
/// every `forbidden` sentence false, with carrier sizes within bounds.
#[derive(Clone, Debug)]
pub struct SearchProblem {
    pub theory: Theory,
    pub fresh: Vec<(String, SortId)>,
    pub required: Vec<Formula>,
    pub forbidden: Vec<Formula>,
    pub min_sizes: Vec<usize>,
    pub bound: Bound,
    pub symmetry_breaking: bool,
}

impl SearchProblem {
    pub fn new(theory: Theory, bound: impl Into<Bound>) -> Self {
        let n = theory.signature.sorts().len();
        SearchProblem {
            theory,
            fresh: Vec::new(),
            required: Vec::new(),
            forbidden: Vec::new(),
            min_sizes: vec![0; n],
            bound: bound.into(),
            symmetry_breaking: true,
        }
    }

    pub fn fresh_constant(mut self, name: &str, sort: SortId) -> Self {
        self.fresh.push((name.to_string(), sort));
        self
    }

    pub fn require(mut self, phi: Formula) -> Self {
        self.required.push(phi);
        self
    }

    pub fn forbid(mut self, phi: Formula) -> Self {
        self.forbidden.push(phi);
        self
    }

    pub fn without_symmetry_breaking(mut self) -> Self {
        self.symmetry_breaking = false;
        self
    }

    /// The theory's signature plus the fresh constants.
    pub fn extended_signature(&self) -> Result<Signature, SignatureError> {
        Ok(self.theory.signature.with_constants(&self.fresh)?.0)
    }
}

/// A model found by the search: over the extended signature and its reduct
/// to the theory's signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoundModel {
    pub expanded: FiniteStructure,
    pub model: FiniteStructure,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FindResult {
    Found(Box<FoundModel>),
    ExhaustedAtBound(Bound),
}

impl FindResult {
    pub fn found(self) -> Option<FoundModel> {
        match self {
            FindResult::Found(m) => Some(*m),
            FindResult::ExhaustedAtBound(_) => None,
        }
    }
}

struct Constraint {
    premise: Compiled,
    conclusion: Compiled,
    sorts: Vec<SortId>,
}

struct Prepared {
    base: Arc<Signature>,
    sig: Arc<Signature>,
    constraints: Vec<Constraint>,
}

fn prepare(p: &SearchProblem) -> Result<Prepared, SearchError> {
    let sig = p.extended_signature()?;
    let mut constraints = Vec::new();
    for ax in &p.theory.axioms {
        let ctx = check_sentence(ax, &sig).map_err(EvalError::from)?;
        constraints.push(Constraint {
            premise: compile(&ax.premise, &sig, &ctx)?,
            conclusion: compile(&ax.conclusion, &sig, &ctx)?,
            sorts: ctx.iter().map(|(_, s)| *s).collect(),
        });
    }
    for phi in &p.required {
        constraints.push(Constraint {
            premise: compile(&Formula::Top, &sig, &[])?,
            conclusion: compile(phi, &sig, &[])?,
            sorts: Vec::new(),
        });
    }
    for phi in &p.forbidden {
        constraints.push(Constraint {
            premise: compile(phi, &sig, &[])?,
            conclusion: compile(&Formula::Bottom, &sig, &[])?,
            sorts: Vec::new(),
        });
    }
    Ok(Prepared {
        base: Arc::new(p.theory.signature.clone()),
        sig: Arc::new(sig),
        constraints,
    })
}

#[derive(Clone, Copy)]
enum CellKind {
    Const(usize),
    Func(usize, usize),
    Rel(usize, usize),
}

struct Cell {
    kind: CellKind,
    /// Arguments as (sort, element).
    args: Vec<(SortId, usize)>,
    result: Option<SortId>,
}

struct Partial {
    sizes: Vec<usize>,
    consts: Vec<Option<usize>>,
    funcs: Vec<Vec<Option<usize>>>,
    rels: Vec<Vec<Option<bool>>>,
}

impl Interp for Partial {
    fn size(&self, s: SortId) -> usize {
        self.sizes[s.0]
    }

    fn const_val(&self, c: usize) -> Option<usize> {
        self.consts[c]
    }

    fn func_val(&self, f: usize, idx: usize) -> Option<usize> {
        self.funcs[f][idx]
    }

    fn rel_val(&self, r: usize, idx: usize) -> Option<bool> {
        self.rels[r][idx]
    }
}

enum InstanceState {
    Open,
    Satisfied,
    Violated,
}

struct Run<'a, F: FnMut(FoundModel) -> bool> {
    prep: &'a Prepared,
    sizes: Vec<usize>,
    cells: Vec<Cell>,
    partial: Partial,
    instances: Vec<(usize, Vec<usize>)>,
    open: Vec<usize>,
    distinguished: Vec<Vec<u32>>,
    symmetry_breaking: bool,
    on_model: F,
    stopped: bool,
}

impl<F: FnMut(FoundModel) -> bool> Run<'_, F> {
    fn state(&self, inst: usize) -> InstanceState {
        let (c, a) = &self.instances[inst];
        let con = &self.prep.constraints[*c];
        let p = con.premise.eval3(&self.partial, a);
        if p == T3::False {
            return InstanceState::Satisfied;
        }
        let q = con.conclusion.eval3(&self.partial, a);
        match (p, q) {
            (_, T3::True) => InstanceState::Satisfied,
            (T3::True, T3::False) => InstanceState::Violated,
            _ => InstanceState::Open,
        }
    }

    /// Retires satisfied instances; `None` (with nothing retired) on conflict.
    fn propagate(&mut self) -> Option<Vec<usize>> {
        let mut retired = Vec::new();
        let mut i = 0;
        while i < self.open.len() {
            match self.state(self.open[i]) {
                InstanceState::Violated => {
                    self.open.extend(retired);
                    return None;
                }
                InstanceState::Satisfied => retired.push(self.open.swap_remove(i)),
                InstanceState::Open => i += 1,
            }
        }
        Some(retired)
    }

    fn set(&mut self, kind: CellKind, v: Option<usize>) {
        match kind {
            CellKind::Const(c) => self.partial.consts[c] = v,
            CellKind::Func(f, idx) => self.partial.funcs[f][idx] = v,
            CellKind::Rel(r, idx) => self.partial.rels[r][idx] = v.map(|b| b == 1),
        }
    }

    fn mark(&mut self, pos: usize, value: Option<usize>, delta: i32) {
        let cell = &self.cells[pos];
        let bump = |d: &mut u32| {
            if delta > 0 {
                *d += 1
            } else {
                *d -= 1
            }
        };
        for &(s, e) in &cell.args {
            bump(&mut self.distinguished[s.0][e]);
        }
        if let (Some(s), Some(v)) = (cell.result, value) {
            bump(&mut self.distinguished[s.0][v]);
        }
    }

    fn candidates(&self, pos: usize) -> Vec<usize> {
        let cell = &self.cells[pos];
        let Some(s) = cell.result else {
            return vec![0, 1];
        };
        let n = self.sizes[s.0];
        if !self.symmetry_breaking {
            return (0..n).collect();
        }
        let in_args = |v: usize| cell.args.iter().any(|&(t, e)| t == s && e == v);
        let mut out = Vec::new();
        let mut fresh_taken = false;
        for v in 0..n {
            if self.distinguished[s.0][v] > 0 || in_args(v) {
                out.push(v);
            } else if !fresh_taken {
                fresh_taken = true;
                out.push(v);
            }
        }
        out
    }

    fn dfs(&mut self, pos: usize) {
        if self.stopped {
            return;
        }
        if pos == self.cells.len() {
            debug_assert!(self.open.is_empty());
            let model = self.build();
            if !(self.on_model)(model) {
                self.stopped = true;
            }
            return;
        }
        let kind = self.cells[pos].kind;
        for v in self.candidates(pos) {
            self.set(kind, Some(v));
            if let Some(retired) = self.propagate() {
                self.mark(pos, Some(v), 1);
                self.dfs(pos + 1);
                self.mark(pos, Some(v), -1);
                self.open.extend(retired);
            }
            self.set(kind, None);
            if self.stopped {
                return;
            }
        }
    }

    fn build(&self) -> FoundModel {
        let carriers: Vec<Vec<String>> = self
            .sizes
            .iter()
            .map(|&n| (0..n).map(|i| format!("a{i}")).collect())
            .collect();
        let expanded = FiniteStructure::from_parts(
            self.prep.sig.clone(),
            carriers,
            self.partial.consts.iter().map(|c| c.expect("complete")).collect(),
            self.partial
                .funcs
                .iter()
                .map(|t| t.iter().map(|c| c.expect("complete")).collect())
                .collect(),
            self.partial
                .rels
                .iter()
                .map(|t| t.iter().map(|c| c.expect("complete")).collect())
                .collect(),
        );
        let model = expanded.reduct(self.prep.base.clone()).expect("extension by constants");
        FoundModel { expanded, model }
    }
}

fn feasible(sig: &Signature, sizes: &[usize]) -> bool {
    sig.constants().iter().all(|c| sizes[c.sort.0] > 0)
        && sig
            .functions()
            .iter()
            .all(|f| table_len(sizes, &f.args) == 0 || sizes[f.result.0] > 0)
}

fn size_vectors(min: &[usize], max: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for (lo, hi) in min.iter().zip(max) {
        let mut next = Vec::new();
        for v in &out {
            for k in *lo..=*hi {
                let mut w = v.clone();
                w.push(k);
                next.push(w);
            }
        }
        out = next;
    }
    out.sort_by_key(|v| (v.iter().sum::<usize>(), v.clone()));
    out
}

fn run_sizes<F: FnMut(FoundModel) -> bool>(prep: &Prepared, sizes: &[usize], symmetry_breaking: bool, on_model: F) -> bool {
    let sig = &prep.sig;
    let mut cells = Vec::new();
    for (c, decl) in sig.constants().iter().enumerate() {
        cells.push(Cell {
            kind: CellKind::Const(c),
            args: Vec::new(),
            result: Some(decl.sort),
        });
    }
    let mut fcells = Vec::new();
    for (f, decl) in sig.functions().iter().enumerate() {
        for idx in 0..table_len(sizes, &decl.args) {
            let t = index_tuple(sizes, &decl.args, idx);
            let key = t.iter().copied().max().unwrap_or(0);
            fcells.push((key, f, idx, decl.args.iter().copied().zip(t).collect::<Vec<_>>(), decl.result));
        }
    }
    fcells.sort_by_key(|c| (c.0, c.1, c.2));
    cells.extend(fcells.into_iter().map(|(_, f, idx, args, result)| Cell {
        kind: CellKind::Func(f, idx),
        args,
        result: Some(result),
    }));
    let mut rcells = Vec::new();
    for (r, decl) in sig.relations().iter().enumerate() {
        for idx in 0..table_len(sizes, &decl.args) {
            let t = index_tuple(sizes, &decl.args, idx);
            let key = t.iter().copied().max().unwrap_or(0);
            rcells.push((key, r, idx, decl.args.iter().copied().zip(t).collect::<Vec<_>>()));
        }
    }
    rcells.sort_by_key(|c| (c.0, c.1, c.2));
    cells.extend(rcells.into_iter().map(|(_, r, idx, args)| Cell {
        kind: CellKind::Rel(r, idx),
        args,
        result: None,
    }));

    let mut instances = Vec::new();
    for (i, con) in prep.constraints.iter().enumerate() {
        for idx in 0..table_len(sizes, &con.sorts) {
            instances.push((i, index_tuple(sizes, &con.sorts, idx)));
        }
    }
    let partial = Partial {
        sizes: sizes.to_vec(),
        consts: vec![None; sig.constants().len()],
        funcs: sig
            .functions()
            .iter()
            .map(|f| vec![None; table_len(sizes, &f.args)])
            .collect(),
        rels: sig
            .relations()
            .iter()
            .map(|r| vec![None; table_len(sizes, &r.args)])
            .collect(),
    };
    let mut run = Run {
        prep,
        sizes: sizes.to_vec(),
        cells,
        partial,
        open: (0..instances.len()).collect(),
        instances,
        distinguished: sizes.iter().map(|&n| vec![0; n]).collect(),
        symmetry_breaking,
        on_model,
        stopped: false,
    };
    if run.propagate().is_some() {
        run.dfs(0);
    }
    run.stopped
}

/// Calls `on_model` for each model in search order until it returns `false`.
/// Returns whether the enumeration was stopped early.
pub fn enumerate_models<F: FnMut(FoundModel) -> bool>(p: &SearchProblem, mut on_model: F) -> Result<bool, SearchError> {
    let prep = prepare(p)?;
    let max = p.bound.sizes(&p.theory.signature);
    let mut min = p.min_sizes.clone();
    min.resize(max.len(), 0);
    for sizes in size_vectors(&min, &max) {
        if !feasible(&prep.sig, &sizes) {
            continue;
        }
        if run_sizes(&prep, &sizes, p.symmetry_breaking, &mut on_model) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// The first model in search order, or `ExhaustedAtBound`.
pub fn find_model(p: &SearchProblem) -> Result<FindResult, SearchError> {
    let mut found = None;
    enumerate_models(p, |m| {
        found = Some(m);
        false
    })?;
    Ok(match found {
        Some(m) => FindResult::Found(Box::new(m)),
        None => FindResult::ExhaustedAtBound(p.bound.clone()),
    })
}

/// All models found by the search (one per explored branch; with symmetry
/// breaking on, some isomorphic copies are skipped).
pub fn all_models(p: &SearchProblem) -> Result<Vec<FoundModel>, SearchError> {
    let mut out = Vec::new();
    enumerate_models(p, |m| {
        out.push(m);
        true
    })?;
    Ok(out)
}

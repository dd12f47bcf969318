use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use rayon::prelude::*;

use crate::model::{compile, diagram_over, tuples, Compiled, FiniteStructure};
use crate::morphism::{FormulaPool, PoolFormula, StructureMap};
use crate::search::{find_model, Bound, SearchProblem, Verdict};
use crate::syntax::{Formula, SortId, Term, Theory};

use super::{joint_model, require_model, show_assignment, AnalysisError};

/// A pool formula and a tuple of the structure (variable → element name).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PcCase {
    pub formula: Formula,
    pub assignment: Vec<(String, String)>,
}

/// For `Fails`: the case together with a continuation realizing it and the
/// map into the continuation. For `UnknownAtBound`: the first case with
/// neither a continuation nor an obstruction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PcWitness {
    pub case: PcCase,
    pub continuation: Option<FiniteStructure>,
    pub map: Option<StructureMap>,
}

fn check_signature(t: &Theory, m: &FiniteStructure) -> Result<(), AnalysisError> {
    if m.signature() != &t.signature {
        return Err(AnalysisError::BadInput("structure and theory have different signatures".into()));
    }
    Ok(())
}

/// The pool for the obstruction side: the same formulas with no restriction
/// on which context variables occur.
fn obstruction_pool(pool: &FormulaPool, t: &Theory) -> Result<Vec<PoolFormula>, AnalysisError> {
    let ctx = pool.context(&t.signature);
    Ok(pool.formulas_in(&t.signature, &ctx)?)
}

fn compile_all(fs: &[PoolFormula], t: &Theory) -> Result<Vec<Compiled>, AnalysisError> {
    fs.iter()
        .map(|p| compile(&p.formula, &t.signature, &p.free).map_err(AnalysisError::from))
        .collect()
}

enum Outcome {
    Continued(PcWitness),
    Open(PcCase),
    Closed,
}

/// Bounded positive-closedness check.
///
/// Cases are the pairs (φ, a) with `M ⊭ φ(a)`, φ in pool order and `a` in
/// lexicographic order. A case fails when some model of `T` of size ≤ `bound`
/// receives a homomorphism from `M` making φ true of the image of `a`; it
/// closes when some pool formula ψ true of `a` has no common realization
/// with φ within the bound. At a fixed bound these exclude each other, since
/// the continuation would realize both. The verdict reports the first
/// failing case, else the first open one, else Holds.
pub fn pc_check(t: &Theory, m: &FiniteStructure, pool: &FormulaPool, bound: impl Into<Bound>) -> Result<Verdict<PcWitness>, AnalysisError> {
    let bound = bound.into();
    check_signature(t, m)?;
    require_model(m, t)?;
    let sig = &t.signature;
    let phis = pool.formulas(sig)?;
    let psis = obstruction_pool(pool, t)?;
    let cphis = compile_all(&phis, t)?;
    let cpsis = compile_all(&psis, t)?;
    let sizes = m.sizes();
    let mut cases: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, p) in phis.iter().enumerate() {
        let sorts = p.free_sorts();
        for a in tuples(&sizes, &sorts) {
            if !cphis[i].eval(m, &a) {
                cases.push((i, a));
            }
        }
    }
    let diag = diagram_over(m, sig, "e_");
    let cache: Mutex<HashMap<(usize, usize), bool>> = Mutex::new(HashMap::new());
    let open: Mutex<Option<(usize, PcCase)>> = Mutex::new(None);
    let result = cases.par_iter().enumerate().find_map_first(|(ci, (i, a))| {
        let step = || -> Result<Outcome, AnalysisError> {
            let phi = &phis[*i];
            let case = PcCase {
                formula: phi.formula.clone(),
                assignment: show_assignment(m, &phi.free, a),
            };
            let names: BTreeMap<String, Term> = phi
                .free
                .iter()
                .zip(a)
                .map(|((v, s), &e)| (v.clone(), diag.name(*s, e)))
                .collect();
            let mut p = SearchProblem::new(t.clone(), bound.clone());
            p.fresh = diag.fresh.clone();
            p.required = diag.facts.clone();
            p.required.push(phi.formula.substitute(&names));
            if let Some(n) = find_model(&p)?.found() {
                let map = diag.induced_map(&n.expanded);
                return Ok(Outcome::Continued(PcWitness {
                    case,
                    continuation: Some(n.model),
                    map: Some(map),
                }));
            }
            let at: BTreeMap<&str, usize> = phi.free.iter().map(|(v, _)| v.as_str()).zip(a.iter().copied()).collect();
            for (j, psi) in psis.iter().enumerate() {
                let Some(b) = psi.free.iter().map(|(v, _)| at.get(v.as_str()).copied()).collect::<Option<Vec<usize>>>() else {
                    continue;
                };
                if !cpsis[j].eval(m, &b) {
                    continue;
                }
                let known = cache.lock().unwrap().get(&(*i, j)).copied();
                let inconsistent = match known {
                    Some(x) => x,
                    None => {
                        let x = joint_model(t, &phi.free, &[&phi.formula, &psi.formula], &bound)?.is_none();
                        cache.lock().unwrap().insert((*i, j), x);
                        x
                    }
                };
                if inconsistent {
                    return Ok(Outcome::Closed);
                }
            }
            Ok(Outcome::Open(case))
        };
        match step() {
            Ok(Outcome::Continued(w)) => Some(Ok(w)),
            Ok(Outcome::Closed) => None,
            Ok(Outcome::Open(case)) => {
                let mut o = open.lock().unwrap();
                if o.as_ref().is_none_or(|(k, _)| ci < *k) {
                    *o = Some((ci, case));
                }
                None
            }
            Err(e) => Some(Err(e)),
        }
    });
    let label = pool.label();
    match result {
        Some(Ok(w)) => Ok(Verdict::fails(w, bound).with_pool(label)),
        Some(Err(e)) => Err(e),
        None => match open.into_inner().unwrap() {
            Some((_, case)) => Ok(Verdict::unknown(
                Some(PcWitness {
                    case,
                    continuation: None,
                    map: None,
                }),
                bound,
            )
            .with_pool(label)
            .with_note("neither a continuation nor an obstruction within the bound")),
            None => Ok(Verdict::holds(None, bound)
                .with_pool(label)
                .with_note("every case closed by an obstruction within the pool and bound")),
        },
    }
}

/// A formula with the tuple for its assigned variables; the remaining free
/// variables had no witness in the subset and no obstruction was found.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HaykazyanFailure {
    pub formula: Formula,
    pub assignment: Vec<(String, String)>,
    pub witness_vars: Vec<String>,
}

/// Bounded form of the test that a subset `A` of a model is itself a p.c.
/// model. `subset[s]` lists the elements of sort `s` in `A`. Only the
/// quantifier-free formulas of the pool are used; each formula is tried with
/// every split of its free variables into assigned (from `A`) and witnessed.
pub fn haykazyan_check(
    t: &Theory,
    m: &FiniteStructure,
    subset: &[Vec<usize>],
    pool: &FormulaPool,
    bound: impl Into<Bound>,
) -> Result<Verdict<HaykazyanFailure>, AnalysisError> {
    let bound = bound.into();
    check_signature(t, m)?;
    require_model(m, t)?;
    let sig = &t.signature;
    if subset.len() != sig.sorts().len() {
        return Err(AnalysisError::NotASubset("one element list per sort is needed".into()));
    }
    for (s, els) in subset.iter().enumerate() {
        if let Some(e) = els.iter().find(|&&e| e >= m.size(SortId(s))) {
            return Err(AnalysisError::NotASubset(format!("element {e} of sort `{}` is out of range", sig.sort_name(SortId(s)))));
        }
    }
    let mut phis = pool.formulas(sig)?;
    phis.retain(|p| p.formula.is_quantifier_free());
    let mut psis = obstruction_pool(pool, t)?;
    psis.retain(|p| p.formula.is_quantifier_free());
    let cphis = compile_all(&phis, t)?;
    let cpsis = compile_all(&psis, t)?;
    let from_a = |sorts: &[SortId]| -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for s in sorts {
            let mut next = Vec::new();
            for v in &out {
                for &e in &subset[s.0] {
                    let mut w: Vec<usize> = v.clone();
                    w.push(e);
                    next.push(w);
                }
            }
            out = next;
        }
        out
    };
    let mut cache: HashMap<(usize, usize, usize), bool> = HashMap::new();
    for (i, phi) in phis.iter().enumerate() {
        let n = phi.free.len();
        for mask in 0..(1usize << n) {
            let xs: Vec<usize> = (0..n).filter(|k| mask & (1 << k) != 0).collect();
            let ys: Vec<usize> = (0..n).filter(|k| mask & (1 << k) == 0).collect();
            let xsorts: Vec<SortId> = xs.iter().map(|&k| phi.free[k].1).collect();
            let ysorts: Vec<SortId> = ys.iter().map(|&k| phi.free[k].1).collect();
            let witnesses = from_a(&ysorts);
            for a in from_a(&xsorts) {
                let full = |b: &[usize]| {
                    let mut v = vec![0; n];
                    for (k, &e) in xs.iter().zip(&a) {
                        v[*k] = e;
                    }
                    for (k, &e) in ys.iter().zip(b) {
                        v[*k] = e;
                    }
                    v
                };
                if witnesses.iter().any(|b| cphis[i].eval(m, &full(b))) {
                    continue;
                }
                let mut closed = false;
                for (j, psi) in psis.iter().enumerate() {
                    if !psi_holds(psi, &cpsis[j], phi, &xs, &a, m, &from_a) {
                        continue;
                    }
                    let key = (i, mask, j);
                    let inconsistent = match cache.get(&key) {
                        Some(&x) => x,
                        None => {
                            let (ctx, renamed) = apart(phi, &xs, psi);
                            let x = joint_model(t, &ctx, &[&phi.formula, &renamed], &bound)?.is_none();
                            cache.insert(key, x);
                            x
                        }
                    };
                    if inconsistent {
                        closed = true;
                        break;
                    }
                }
                if !closed {
                    let assigned: Vec<(String, SortId)> = xs.iter().map(|&k| phi.free[k].clone()).collect();
                    return Ok(Verdict::fails(
                        HaykazyanFailure {
                            formula: phi.formula.clone(),
                            assignment: show_assignment(m, &assigned, &a),
                            witness_vars: ys.iter().map(|&k| phi.free[k].0.clone()).collect(),
                        },
                        bound,
                    )
                    .with_pool(pool.label()));
                }
            }
        }
    }
    Ok(Verdict::holds(None, bound).with_pool(pool.label()))
}

/// Whether `psi(a, c)` holds for some `c` from the subset, where `psi`'s
/// variables among the assigned variables of `phi` take their values from `a`.
fn psi_holds(
    psi: &PoolFormula,
    c: &Compiled,
    phi: &PoolFormula,
    xs: &[usize],
    a: &[usize],
    m: &FiniteStructure,
    from_a: &dyn Fn(&[SortId]) -> Vec<Vec<usize>>,
) -> bool {
    let fixed: BTreeMap<&str, usize> = xs.iter().zip(a).map(|(&k, &e)| (phi.free[k].0.as_str(), e)).collect();
    let zs: Vec<usize> = (0..psi.free.len()).filter(|&k| !fixed.contains_key(psi.free[k].0.as_str())).collect();
    let zsorts: Vec<SortId> = zs.iter().map(|&k| psi.free[k].1).collect();
    from_a(&zsorts).iter().any(|cz| {
        let mut v = vec![0; psi.free.len()];
        for (k, (name, _)) in psi.free.iter().enumerate() {
            if let Some(&e) = fixed.get(name.as_str()) {
                v[k] = e;
            }
        }
        for (&k, &e) in zs.iter().zip(cz) {
            v[k] = e;
        }
        c.eval(m, &v)
    })
}

/// `psi` with its unassigned variables renamed away from `phi`'s, and the
/// joint variable context.
fn apart(phi: &PoolFormula, xs: &[usize], psi: &PoolFormula) -> (Vec<(String, SortId)>, Formula) {
    let assigned: Vec<&str> = xs.iter().map(|&k| phi.free[k].0.as_str()).collect();
    let mut ctx: Vec<(String, SortId)> = phi.free.clone();
    let mut map = BTreeMap::new();
    for (v, s) in &psi.free {
        if assigned.contains(&v.as_str()) {
            continue;
        }
        let mut name = format!("{v}_z");
        while ctx.iter().any(|(w, _)| *w == name) {
            name.push('z');
        }
        ctx.push((name.clone(), *s));
        map.insert(v.clone(), Term::Var(name));
    }
    (ctx, psi.formula.substitute(&map))
}

/// Result of greedily continuing a model towards a p.c. one.
#[derive(Clone, Debug)]
pub struct Continued {
    pub model: FiniteStructure,
    /// Composite map from the input structure.
    pub map: StructureMap,
    /// The case realized at each step.
    pub steps: Vec<PcCase>,
    /// Why the process stopped short of a p.c. model, if it did.
    pub stalled: Option<String>,
    pub open: Vec<PcCase>,
}

const MAX_STEPS: usize = 64;

/// Repeatedly replaces the model by the continuation `pc_check` reports for
/// the first failing case, until the check holds or the model outgrows
/// `max_size`.
pub fn continue_to_pc(
    t: &Theory,
    m: &FiniteStructure,
    pool: &FormulaPool,
    bound: impl Into<Bound>,
    max_size: usize,
) -> Result<Continued, AnalysisError> {
    let bound = bound.into();
    require_model(m, t)?;
    let mut cur = m.clone();
    let mut map = StructureMap::identity(m);
    let mut steps = Vec::new();
    for _ in 0..MAX_STEPS {
        let v = pc_check(t, &cur, pool, bound.clone())?;
        match v.status {
            crate::search::Status::Holds => {
                return Ok(Continued {
                    model: cur,
                    map,
                    steps,
                    stalled: None,
                    open: Vec::new(),
                })
            }
            crate::search::Status::UnknownAtBound => {
                let w = v.witness.expect("open case");
                return Ok(Continued {
                    model: cur,
                    map,
                    steps,
                    stalled: Some("a case has neither a continuation nor an obstruction within the bound".into()),
                    open: vec![w.case],
                });
            }
            crate::search::Status::Fails => {
                let w = v.witness.expect("continuation");
                let n = w.continuation.expect("continuation");
                if n.total_size() > max_size {
                    return Ok(Continued {
                        model: cur,
                        map,
                        steps,
                        stalled: Some(format!("the next continuation has {} elements, above {max_size}", n.total_size())),
                        open: vec![w.case],
                    });
                }
                map = map.compose(&w.map.expect("map"));
                steps.push(w.case);
                cur = n;
            }
        }
    }
    Ok(Continued {
        model: cur,
        map,
        steps,
        stalled: Some(format!("no p.c. model after {MAX_STEPS} steps")),
        open: Vec::new(),
    })
}

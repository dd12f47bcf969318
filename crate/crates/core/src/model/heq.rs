//! Hyperimaginary quotients `M^E` of finite structures.

use std::sync::Arc;

use thiserror::Error;

use crate::morphism::{find_isomorphisms, verify_isomorphism, MapError, StructureMap};
use crate::syntax::{Formula, Signature, SignatureError, SortId};

use super::eval::{compile, EvalError};
use super::structure::{table_len, tuple_index, tuples, FiniteStructure};

/// An equivalence relation on `sorts`-tuples, given by a formula in the
/// doubled variables `left`, `right`. The classes form a new sort `name`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivSpec {
    pub name: String,
    pub sorts: Vec<SortId>,
    pub left: Vec<String>,
    pub right: Vec<String>,
    pub formula: Formula,
}

impl EquivSpec {
    /// Equality on a single sort.
    pub fn equality(name: &str, s: SortId) -> Self {
        EquivSpec {
            name: name.to_string(),
            sorts: vec![s],
            left: vec!["x".into()],
            right: vec!["y".into()],
            formula: Formula::eq(crate::syntax::Term::var("x"), crate::syntax::Term::var("y")),
        }
    }

    /// The total relation on a single sort.
    pub fn total(name: &str, s: SortId) -> Self {
        EquivSpec {
            name: name.to_string(),
            sorts: vec![s],
            left: vec!["x".into()],
            right: vec!["y".into()],
            formula: Formula::Top,
        }
    }
}

/// A relation `name(real…, class…)` of `M^E`, true when some representatives
/// of the classes satisfy `formula` together with the real arguments. Each
/// class slot lists the variables that stand for a representative tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelTemplate {
    pub name: String,
    pub real: Vec<(String, SortId)>,
    pub classes: Vec<Vec<String>>,
    pub formula: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeqError {
    #[error("relation is not reflexive at ({0})")]
    NotReflexive(String),
    #[error("relation is not symmetric at ({0}) ~ ({1})")]
    NotSymmetric(String, String),
    #[error("relation is not transitive at ({0}) ~ ({1}) ~ ({2})")]
    NotTransitive(String, String, String),
    #[error("`{0}` does not commute with the relation")]
    NotACongruence(String),
    #[error("not an automorphism: {0}")]
    NotAnAutomorphism(MapError),
    #[error("malformed specification: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Signature(#[from] SignatureError),
}

/// `M^E` with its bookkeeping.
#[derive(Clone, Debug)]
pub struct HeqQuotient {
    pub structure: FiniteStructure,
    pub class_sort: SortId,
    /// Class of each tuple, indexed like a table over the quotiented sorts.
    pub class_of: Vec<usize>,
    /// Member tuples of each class, in lexicographic order.
    pub members: Vec<Vec<Vec<usize>>>,
    /// Name of the projection relation `Xi_<name>(x…, class)`.
    pub xi: String,
}

fn show(m: &FiniteStructure, sorts: &[SortId], t: &[usize]) -> String {
    sorts
        .iter()
        .zip(t)
        .map(|(s, &e)| m.elem_name(*s, e).to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// The relation matrix of `E` over all tuples, checked to be an equivalence.
fn relation(m: &FiniteStructure, e: &EquivSpec) -> Result<(Vec<Vec<usize>>, Vec<Vec<bool>>), HeqError> {
    let n = e.sorts.len();
    if n == 0 || e.left.len() != n || e.right.len() != n {
        return Err(HeqError::BadSpec("variable lists must match the sort tuple".into()));
    }
    let ctx: Vec<(String, SortId)> = e
        .left
        .iter()
        .chain(&e.right)
        .cloned()
        .zip(e.sorts.iter().chain(&e.sorts).copied())
        .collect();
    let c = compile(&e.formula, m.signature(), &ctx)?;
    let sizes = m.sizes();
    let all: Vec<Vec<usize>> = tuples(&sizes, &e.sorts).collect();
    let mut rel = vec![vec![false; all.len()]; all.len()];
    for (i, a) in all.iter().enumerate() {
        for (j, b) in all.iter().enumerate() {
            let ab: Vec<usize> = a.iter().chain(b).copied().collect();
            rel[i][j] = c.eval(m, &ab);
        }
    }
    let sh = |i: usize| show(m, &e.sorts, &all[i]);
    for i in 0..all.len() {
        if !rel[i][i] {
            return Err(HeqError::NotReflexive(sh(i)));
        }
    }
    for i in 0..all.len() {
        for j in 0..all.len() {
            if rel[i][j] && !rel[j][i] {
                return Err(HeqError::NotSymmetric(sh(i), sh(j)));
            }
        }
    }
    for i in 0..all.len() {
        for j in 0..all.len() {
            if !rel[i][j] {
                continue;
            }
            for k in 0..all.len() {
                if rel[j][k] && !rel[i][k] {
                    return Err(HeqError::NotTransitive(sh(i), sh(j), sh(k)));
                }
            }
        }
    }
    Ok((all, rel))
}

fn classes(rel: &[Vec<bool>]) -> (Vec<usize>, Vec<Vec<usize>>) {
    let mut class_of = vec![usize::MAX; rel.len()];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for i in 0..rel.len() {
        if class_of[i] != usize::MAX {
            continue;
        }
        let k = members.len();
        let mut row = Vec::new();
        for j in i..rel.len() {
            if rel[i][j] {
                class_of[j] = k;
                row.push(j);
            }
        }
        members.push(row);
    }
    (class_of, members)
}

/// Builds `M^E`: `M` plus a sort of `E`-classes, the projection relation
/// `Xi_<name>`, and one relation per template. Classes are ordered by their
/// least member and named `[a…]` after it.
pub fn quotient_heq(m: &FiniteStructure, e: &EquivSpec, templates: &[RelTemplate]) -> Result<HeqQuotient, HeqError> {
    let (all, rel) = relation(m, e)?;
    let (class_of, member_idx) = classes(&rel);
    let msig = m.signature();
    let mut sig: Signature = msig.clone();
    let cs = sig.add_sort(&e.name)?;
    let xi = format!("Xi_{}", e.name);
    let mut xi_args = e.sorts.clone();
    xi_args.push(cs);
    sig.add_relation(&xi, xi_args)?;
    for t in templates {
        if t.classes.iter().any(|c| c.len() != e.sorts.len()) {
            return Err(HeqError::BadSpec(format!("class slots of `{}` must have {} variable(s)", t.name, e.sorts.len())));
        }
        let mut args: Vec<SortId> = t.real.iter().map(|(_, s)| *s).collect();
        args.extend(std::iter::repeat_n(cs, t.classes.len()));
        sig.add_relation(&t.name, args)?;
    }
    let mut carriers: Vec<Vec<String>> = m.carriers().to_vec();
    carriers.push(
        member_idx
            .iter()
            .map(|row| format!("[{}]", show(m, &e.sorts, &all[row[0]])))
            .collect(),
    );
    let sig = Arc::new(sig);
    let mut q = FiniteStructure::new(sig.clone(), carriers).map_err(|err| HeqError::BadSpec(err.to_string()))?;
    for c in 0..msig.constants().len() {
        q.set_constant(c, m.constant(c));
    }
    for f in 0..msig.functions().len() {
        for (args, v) in m.function_graph(f) {
            q.set_function(f, &args, v);
        }
    }
    for r in 0..msig.relations().len() {
        for t in m.relation_tuples(r) {
            q.set_relation(r, &t, true);
        }
    }
    let xi_idx = msig.relations().len();
    for (i, t) in all.iter().enumerate() {
        let mut args = t.clone();
        args.push(class_of[i]);
        q.set_relation(xi_idx, &args, true);
    }
    let sizes = m.sizes();
    for (k, t) in templates.iter().enumerate() {
        let mut ctx: Vec<(String, SortId)> = t.real.clone();
        for slot in &t.classes {
            ctx.extend(slot.iter().cloned().zip(e.sorts.iter().copied()));
        }
        let c = compile(&t.formula, msig, &ctx)?;
        let ctx_sorts: Vec<SortId> = ctx.iter().map(|(_, s)| *s).collect();
        let n = e.sorts.len();
        for a in tuples(&sizes, &ctx_sorts) {
            if !c.eval(m, &a) {
                continue;
            }
            let mut args: Vec<usize> = a[..t.real.len()].to_vec();
            for chunk in a[t.real.len()..].chunks(n) {
                args.push(class_of[tuple_index(&sizes, &e.sorts, chunk)]);
            }
            q.set_relation(xi_idx + 1 + k, &args, true);
        }
    }
    let members = member_idx
        .iter()
        .map(|row| row.iter().map(|&i| all[i].clone()).collect())
        .collect();
    debug_assert_eq!(class_of.len(), table_len(&sizes, &e.sorts));
    Ok(HeqQuotient {
        structure: q,
        class_sort: cs,
        class_of,
        members,
        xi,
    })
}

/// The quotient of `M` itself by a single-sort `E`: the carrier of that sort
/// becomes the classes, relations hold of classes when they hold of some
/// representatives, functions are computed on representatives (and must
/// respect `E`).
pub fn class_structure(m: &FiniteStructure, e: &EquivSpec) -> Result<FiniteStructure, HeqError> {
    if e.sorts.len() != 1 {
        return Err(HeqError::BadSpec("class structure needs a single quotiented sort".into()));
    }
    let s = e.sorts[0];
    let (all, rel) = relation(m, e)?;
    let (class_of, members) = classes(&rel);
    let img = |t: SortId, x: usize| if t == s { class_of[x] } else { x };
    let mut carriers = m.carriers().to_vec();
    carriers[s.0] = members.iter().map(|row| format!("[{}]", m.elem_name(s, all[row[0]][0]))).collect();
    let sig = m.signature_arc().clone();
    let mut q = FiniteStructure::new(sig.clone(), carriers).map_err(|err| HeqError::BadSpec(err.to_string()))?;
    for (c, decl) in sig.constants().iter().enumerate() {
        q.set_constant(c, img(decl.sort, m.constant(c)));
    }
    for (f, decl) in sig.functions().iter().enumerate() {
        let mut seen: std::collections::HashMap<Vec<usize>, usize> = Default::default();
        for (args, v) in m.function_graph(f) {
            let ca: Vec<usize> = args.iter().zip(&decl.args).map(|(&x, t)| img(*t, x)).collect();
            let cv = img(decl.result, v);
            if let Some(&w) = seen.get(&ca) {
                if w != cv {
                    return Err(HeqError::NotACongruence(decl.name.clone()));
                }
            }
            seen.insert(ca.clone(), cv);
            q.set_function(f, &ca, cv);
        }
    }
    for (r, decl) in sig.relations().iter().enumerate() {
        for t in m.relation_tuples(r) {
            let ct: Vec<usize> = t.iter().zip(&decl.args).map(|(&x, u)| img(*u, x)).collect();
            q.set_relation(r, &ct, true);
        }
    }
    Ok(q)
}

/// The automorphism `f^E` of `M^E` induced by an automorphism `f` of `M`,
/// and whether it is the only automorphism of `M^E` agreeing with `f` on the
/// sorts of `M`.
#[derive(Clone, Debug)]
pub struct LiftedAutomorphism {
    pub map: StructureMap,
    pub unique: bool,
}

pub fn lift_automorphism(m: &FiniteStructure, f: &StructureMap, q: &HeqQuotient, e: &EquivSpec) -> Result<LiftedAutomorphism, HeqError> {
    verify_isomorphism(m, m, f).map_err(HeqError::NotAnAutomorphism)?;
    let sizes = m.sizes();
    let nclasses = q.members.len();
    let mut class_map = Vec::with_capacity(nclasses);
    for row in &q.members {
        let image = f.apply_tuple(&e.sorts, &row[0]).expect("total");
        class_map.push(Some(q.class_of[tuple_index(&sizes, &e.sorts, &image)]));
    }
    let mut maps = f.maps.clone();
    maps.push(class_map);
    let lifted = StructureMap { maps };
    verify_isomorphism(&q.structure, &q.structure, &lifted).map_err(HeqError::NotAnAutomorphism)?;
    let mut seed = f.maps.clone();
    seed.push(vec![None; nclasses]);
    let all = find_isomorphisms(&q.structure, &q.structure, &StructureMap { maps: seed }, 2);
    let unique = all.len() == 1 && all[0] == lifted;
    Ok(LiftedAutomorphism { map: lifted, unique })
}

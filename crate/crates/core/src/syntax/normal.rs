//! Prenex-existential and regular-disjunction normal forms, plus a canonical
//! representative for α-equivalence classes.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::formula::{fresh_var, Formula, Term, VarDecl};

/// Default cap on the number of disjuncts produced by [`to_regular_disjunction`].
pub const DEFAULT_DISJUNCT_LIMIT: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalFormError {
    #[error("regular disjunction would exceed {limit} disjuncts; raise the limit")]
    ExponentialBlowup { limit: usize },
}

/// Renames bound variables so that no two binders share a name and no binder
/// reuses a free variable's name.
pub fn rename_apart(f: &Formula) -> Formula {
    let mut taken: BTreeSet<String> = f.all_var_names();
    let free: BTreeSet<String> = f.free_vars().into_iter().collect();
    let mut seen: BTreeSet<String> = free.clone();
    rename_rec(f, &BTreeMap::new(), &mut taken, &mut seen)
}

fn rename_rec(
    f: &Formula,
    env: &BTreeMap<String, Term>,
    taken: &mut BTreeSet<String>,
    seen: &mut BTreeSet<String>,
) -> Formula {
    match f {
        Formula::Top | Formula::Bottom => f.clone(),
        Formula::Atom(r, args) => Formula::Atom(r.clone(), args.iter().map(|t| t.substitute(env)).collect()),
        Formula::Eq(a, b) => Formula::Eq(a.substitute(env), b.substitute(env)),
        Formula::And(ps) => Formula::And(ps.iter().map(|p| rename_rec(p, env, taken, seen)).collect()),
        Formula::Or(ps) => Formula::Or(ps.iter().map(|p| rename_rec(p, env, taken, seen)).collect()),
        Formula::Exists(vs, body) => {
            let mut inner = env.clone();
            let mut new_vs = Vec::with_capacity(vs.len());
            for v in vs {
                let name = if seen.contains(&v.name) {
                    let fresh = fresh_var(&v.name, taken);
                    taken.insert(fresh.clone());
                    fresh
                } else {
                    v.name.clone()
                };
                seen.insert(name.clone());
                if name != v.name {
                    inner.insert(v.name.clone(), Term::Var(name.clone()));
                } else {
                    inner.remove(&v.name);
                }
                new_vs.push(VarDecl {
                    name,
                    sort: v.sort.clone(),
                });
            }
            Formula::Exists(new_vs, Box::new(rename_rec(body, &inner, taken, seen)))
        }
    }
}

/// Pulls every quantifier to the front: the result is `Exists(vars, q)` with
/// `q` quantifier-free.
///
/// Moving `∃` out of a disjunction assumes the bound sort is inhabited; the
/// two sides can differ on structures where that sort is empty and no free
/// variable of the sort occurs.
pub fn to_prenex_existential(f: &Formula) -> Formula {
    let renamed = rename_apart(f);
    let mut vars = Vec::new();
    let body = pull(&renamed, &mut vars);
    Formula::Exists(vars, Box::new(body))
}

fn pull(f: &Formula, vars: &mut Vec<VarDecl>) -> Formula {
    match f {
        Formula::And(ps) => Formula::And(ps.iter().map(|p| pull(p, vars)).collect()),
        Formula::Or(ps) => Formula::Or(ps.iter().map(|p| pull(p, vars)).collect()),
        Formula::Exists(vs, body) => {
            vars.extend(vs.iter().cloned());
            pull(body, vars)
        }
        _ => f.clone(),
    }
}

/// One disjunct of a regular formula: `∃ vars. ⋀ atoms`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegularDisjunct {
    pub vars: Vec<VarDecl>,
    pub atoms: Vec<Formula>,
}

impl RegularDisjunct {
    pub fn to_formula(&self) -> Formula {
        Formula::Exists(self.vars.clone(), Box::new(Formula::conj(self.atoms.clone())))
    }
}

/// The disjuncts of the regular form of `f` (bound variables renamed apart).
pub fn regular_disjuncts(f: &Formula, limit: usize) -> Result<Vec<RegularDisjunct>, NormalFormError> {
    dnf(&rename_apart(f), limit)
}

fn dnf(f: &Formula, limit: usize) -> Result<Vec<RegularDisjunct>, NormalFormError> {
    let out = match f {
        Formula::Top => vec![RegularDisjunct {
            vars: vec![],
            atoms: vec![],
        }],
        Formula::Bottom => vec![],
        Formula::Atom(..) | Formula::Eq(..) => vec![RegularDisjunct {
            vars: vec![],
            atoms: vec![f.clone()],
        }],
        Formula::Or(ps) => {
            let mut acc = Vec::new();
            for p in ps {
                acc.extend(dnf(p, limit)?);
                if acc.len() > limit {
                    return Err(NormalFormError::ExponentialBlowup { limit });
                }
            }
            acc
        }
        Formula::And(ps) => {
            let mut acc = vec![RegularDisjunct {
                vars: vec![],
                atoms: vec![],
            }];
            for p in ps {
                let part = dnf(p, limit)?;
                if acc.len().saturating_mul(part.len()) > limit {
                    return Err(NormalFormError::ExponentialBlowup { limit });
                }
                let mut next = Vec::with_capacity(acc.len() * part.len());
                for a in &acc {
                    for b in &part {
                        let mut vars = a.vars.clone();
                        vars.extend(b.vars.iter().cloned());
                        let mut atoms = a.atoms.clone();
                        atoms.extend(b.atoms.iter().cloned());
                        next.push(RegularDisjunct { vars, atoms });
                    }
                }
                acc = next;
            }
            acc
        }
        Formula::Exists(vs, body) => dnf(body, limit)?
            .into_iter()
            .map(|mut d| {
                let mut vars = vs.clone();
                vars.append(&mut d.vars);
                d.vars = vars;
                d
            })
            .collect(),
    };
    Ok(out)
}

/// `Or(d_1, …, d_n)` where each `d_i` is `Exists(vars_i, conjunction of atoms)`.
pub fn to_regular_disjunction(f: &Formula) -> Result<Formula, NormalFormError> {
    to_regular_disjunction_with_limit(f, DEFAULT_DISJUNCT_LIMIT)
}

pub fn to_regular_disjunction_with_limit(f: &Formula, limit: usize) -> Result<Formula, NormalFormError> {
    let ds = regular_disjuncts(f, limit)?;
    Ok(Formula::Or(ds.iter().map(RegularDisjunct::to_formula).collect()))
}

/// Canonical representative: bound variables renamed by binder level
/// (`v0`, `v1`, …), nested binders merged, `And`/`Or` flattened, sorted and
/// deduplicated, equalities oriented. Idempotent.
pub fn canonicalize(f: &Formula) -> Formula {
    let free: Vec<String> = f.free_vars();
    let prefix = ["v", "w", "u", "b", "v_"]
        .into_iter()
        .find(|p| !free.iter().any(|x| is_indexed(x, p)))
        .map(str::to_string)
        .unwrap_or_else(|| {
            let mut p = "v_".to_string();
            while free.iter().any(|x| is_indexed(x, &p)) {
                p.push('_');
            }
            p
        });
    canon(f, 0, &BTreeMap::new(), &prefix)
}

fn is_indexed(name: &str, prefix: &str) -> bool {
    name.strip_prefix(prefix)
        .is_some_and(|rest| !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()))
}

fn canon(f: &Formula, level: usize, env: &BTreeMap<String, Term>, prefix: &str) -> Formula {
    match f {
        Formula::Top | Formula::Bottom => f.clone(),
        Formula::Atom(r, args) => Formula::Atom(r.clone(), args.iter().map(|t| t.substitute(env)).collect()),
        Formula::Eq(a, b) => {
            let (a, b) = (a.substitute(env), b.substitute(env));
            if a <= b {
                Formula::Eq(a, b)
            } else {
                Formula::Eq(b, a)
            }
        }
        Formula::And(ps) => {
            let mut parts = Vec::new();
            for p in ps {
                match canon(p, level, env, prefix) {
                    Formula::And(qs) => parts.extend(qs),
                    Formula::Top => {}
                    q => parts.push(q),
                }
            }
            parts.sort();
            parts.dedup();
            Formula::conj(parts)
        }
        Formula::Or(ps) => {
            let mut parts = Vec::new();
            for p in ps {
                match canon(p, level, env, prefix) {
                    Formula::Or(qs) => parts.extend(qs),
                    Formula::Bottom => {}
                    q => parts.push(q),
                }
            }
            parts.sort();
            parts.dedup();
            Formula::disj(parts)
        }
        Formula::Exists(..) => {
            let mut vars = Vec::new();
            let mut cur = f;
            while let Formula::Exists(vs, body) = cur {
                vars.extend(vs.iter().cloned());
                cur = body;
            }
            if vars.is_empty() {
                return canon(cur, level, env, prefix);
            }
            let mut inner = env.clone();
            let mut new_vs = Vec::with_capacity(vars.len());
            for (k, v) in vars.iter().enumerate() {
                let name = format!("{prefix}{}", level + k);
                inner.insert(v.name.clone(), Term::Var(name.clone()));
                new_vs.push(VarDecl {
                    name,
                    sort: v.sort.clone(),
                });
            }
            let body = canon(cur, level + vars.len(), &inner, prefix);
            Formula::Exists(new_vs, Box::new(body))
        }
    }
}

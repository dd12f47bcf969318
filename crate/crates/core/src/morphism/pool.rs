//! Finite pools of positive formulas, standing in for "every formula".

use std::collections::BTreeSet;

use crate::syntax::{well_sorted, Formula, Signature, SortError, SortId, Term, VarDecl};

const CONTEXT_NAMES: [&str; 6] = ["x", "y", "z", "u", "v", "w"];

/// A pool formula with its free variables, listed in context order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoolFormula {
    pub formula: Formula,
    pub free: Vec<(String, SortId)>,
}

impl PoolFormula {
    pub fn free_sorts(&self) -> Vec<SortId> {
        self.free.iter().map(|(_, s)| *s).collect()
    }
}

/// Either the generated pool of primitive positive formulas with at most
/// `depth` bound variables and at most `size` nodes, or an explicit list.
///
/// Generated formulas are `true`, `false` and `exists b0…. (A1 & … & An)`
/// where each `Ai` is an atom or an oriented equality between variables,
/// constants and one level of function application. Reflexive equalities
/// appear only on their own (`x = x`, `exists b0. b0 = b0`). Formulas are
/// identified up to the order of atoms and renaming of bound variables and
/// listed by size, then structurally.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormulaPool {
    pub depth: usize,
    pub size: usize,
    pub vars_per_sort: usize,
    pub explicit: Option<Vec<Formula>>,
}

impl Default for FormulaPool {
    fn default() -> Self {
        FormulaPool {
            depth: 2,
            size: 12,
            vars_per_sort: 2,
            explicit: None,
        }
    }
}

impl FormulaPool {
    pub fn new(depth: usize, size: usize) -> Self {
        FormulaPool {
            depth,
            size,
            ..Default::default()
        }
    }

    pub fn explicit(formulas: Vec<Formula>) -> Self {
        FormulaPool {
            explicit: Some(formulas),
            ..Default::default()
        }
    }

    pub fn label(&self) -> String {
        match &self.explicit {
            Some(fs) => format!("explicit({})", fs.len()),
            None => format!("pp(depth={},size={},vars={})", self.depth, self.size, self.vars_per_sort),
        }
    }

    /// The default free-variable context: `vars_per_sort` variables per sort,
    /// named `x, y, z, u, v, w, x1, …` across the sorts in order.
    pub fn context(&self, sig: &Signature) -> Vec<(String, SortId)> {
        let mut out = Vec::new();
        let mut i = 0;
        for s in sig.sort_ids() {
            for _ in 0..self.vars_per_sort {
                out.push((context_name(i), s));
                i += 1;
            }
        }
        out
    }

    /// The pool over the default context. Within each sort, the free
    /// variables used form an initial segment of that sort's context
    /// variables, so `P(y)` is left out in favour of `P(x)`.
    pub fn formulas(&self, sig: &Signature) -> Result<Vec<PoolFormula>, SortError> {
        let ctx = self.context(sig);
        self.generate(sig, &ctx, true)
    }

    /// The pool with free variables drawn from `ctx`, any subset allowed.
    pub fn formulas_in(&self, sig: &Signature, ctx: &[(String, SortId)]) -> Result<Vec<PoolFormula>, SortError> {
        self.generate(sig, ctx, false)
    }

    fn generate(&self, sig: &Signature, ctx: &[(String, SortId)], prefix: bool) -> Result<Vec<PoolFormula>, SortError> {
        if let Some(fs) = &self.explicit {
            let mut out = Vec::with_capacity(fs.len());
            for f in fs {
                let free = well_sorted(f, sig)?;
                let free = order_like(free, ctx);
                out.push(PoolFormula { formula: f.clone(), free });
            }
            return Ok(out);
        }
        let mut found: BTreeSet<(usize, Formula)> = BTreeSet::new();
        found.insert((1, Formula::Top));
        found.insert((1, Formula::Bottom));
        for nb in 0..=self.depth {
            if nb > self.size {
                break;
            }
            for bsorts in nondecreasing(sig.sorts().len(), nb) {
                self.generate_block(sig, ctx, &bsorts, &mut found);
            }
        }
        let mut out = Vec::with_capacity(found.len());
        for (_, f) in found {
            let used: BTreeSet<String> = f.free_vars().into_iter().collect();
            let free: Vec<(String, SortId)> = ctx.iter().filter(|(v, _)| used.contains(v)).cloned().collect();
            if prefix && !is_prefix(ctx, &used) {
                continue;
            }
            out.push(PoolFormula { formula: f, free });
        }
        Ok(out)
    }

    fn generate_block(&self, sig: &Signature, ctx: &[(String, SortId)], bsorts: &[SortId], found: &mut BTreeSet<(usize, Formula)>) {
        let nb = bsorts.len();
        let bound: Vec<(String, SortId)> = bsorts.iter().enumerate().map(|(i, s)| (format!("b{i}"), *s)).collect();
        let decls: Vec<VarDecl> = bound
            .iter()
            .map(|(n, s)| VarDecl::new(n, sig.sort_name(*s)))
            .collect();
        // Base terms, then one level of function application.
        let mut terms: Vec<(Term, SortId)> = Vec::new();
        for (v, s) in ctx.iter().chain(&bound) {
            terms.push((Term::var(v), *s));
        }
        for c in sig.constants() {
            terms.push((Term::constant(&c.name), c.sort));
        }
        let base = terms.clone();
        for f in sig.functions() {
            let choices: Vec<Vec<&Term>> = f
                .args
                .iter()
                .map(|s| base.iter().filter(|(_, t)| t == s).map(|(t, _)| t).collect())
                .collect();
            for args in product(&choices) {
                terms.push((Term::App(f.name.clone(), args.into_iter().cloned().collect()), f.result));
            }
        }
        let budget = self.size.saturating_sub(nb);
        let mut atoms: Vec<(Formula, usize)> = Vec::new();
        for r in sig.relations() {
            let choices: Vec<Vec<&Term>> = r
                .args
                .iter()
                .map(|s| terms.iter().filter(|(_, t)| t == s).map(|(t, _)| t).collect())
                .collect();
            for args in product(&choices) {
                let a = Formula::Atom(r.name.clone(), args.into_iter().cloned().collect());
                let n = a.size();
                if n <= budget {
                    atoms.push((a, n));
                }
            }
        }
        for (i, (t1, s1)) in terms.iter().enumerate() {
            for (t2, s2) in &terms[i + 1..] {
                if s1 != s2 {
                    continue;
                }
                let (a, b) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
                let e = Formula::Eq(a.clone(), b.clone());
                let n = e.size();
                if n <= budget {
                    atoms.push((e, n));
                }
            }
        }
        atoms.sort();
        let bnames: Vec<&str> = bound.iter().map(|(n, _)| n.as_str()).collect();
        let perms = sort_preserving_perms(bsorts);
        let emit = |set: Vec<Formula>, found: &mut BTreeSet<(usize, Formula)>| {
            let f = Formula::exists_opt(decls.clone(), Formula::conj(set));
            found.insert((f.size(), f));
        };
        // Reflexive equalities on their own.
        if nb == 0 {
            for (v, _) in ctx {
                if 3 <= self.size {
                    emit(vec![Formula::eq(Term::var(v), Term::var(v))], found);
                }
            }
        } else if nb == 1 && 4 <= self.size {
            emit(vec![Formula::eq(Term::var("b0"), Term::var("b0"))], found);
        }
        let mut chosen: Vec<usize> = Vec::new();
        // Depth-first over increasing index sets within the size budget.
        fn rec(
            atoms: &[(Formula, usize)],
            start: usize,
            used: usize,
            budget: usize,
            chosen: &mut Vec<usize>,
            visit: &mut dyn FnMut(&[usize]),
        ) {
            for i in start..atoms.len() {
                let extra = atoms[i].1 + usize::from(!chosen.is_empty());
                if used + extra > budget {
                    continue;
                }
                chosen.push(i);
                visit(chosen);
                rec(atoms, i + 1, used + extra, budget, chosen, visit);
                chosen.pop();
            }
        }
        let mut visit = |idx: &[usize]| {
            let set: Vec<Formula> = idx.iter().map(|&i| atoms[i].0.clone()).collect();
            if !bnames.iter().all(|b| set.iter().any(|a| a.has_free_var(b))) {
                return;
            }
            if perms.len() > 1 {
                let own = set.clone();
                for p in &perms[1..] {
                    if rename_sorted(&own, &bnames, p) < own {
                        return;
                    }
                }
            }
            emit(set, found);
        };
        rec(&atoms, 0, 0, budget, &mut chosen, &mut visit);
    }
}

pub(crate) fn context_name(i: usize) -> String {
    if i < CONTEXT_NAMES.len() {
        CONTEXT_NAMES[i].to_string()
    } else {
        format!("x{}", i - CONTEXT_NAMES.len() + 1)
    }
}

fn is_prefix(ctx: &[(String, SortId)], used: &BTreeSet<String>) -> bool {
    let mut gap: BTreeSet<SortId> = BTreeSet::new();
    for (v, s) in ctx {
        if used.contains(v) {
            if gap.contains(s) {
                return false;
            }
        } else {
            gap.insert(*s);
        }
    }
    true
}

/// Free variables in context order, then any others in their own order.
fn order_like(free: Vec<(String, SortId)>, ctx: &[(String, SortId)]) -> Vec<(String, SortId)> {
    let mut out: Vec<(String, SortId)> = ctx.iter().filter(|c| free.contains(c)).cloned().collect();
    out.extend(free.into_iter().filter(|f| !ctx.contains(f)));
    out
}

fn nondecreasing(nsorts: usize, len: usize) -> Vec<Vec<SortId>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::new();
        for v in &out {
            let lo = v.last().map(|s: &SortId| s.0).unwrap_or(0);
            for s in lo..nsorts {
                let mut w = v.clone();
                w.push(SortId(s));
                next.push(w);
            }
        }
        out = next;
    }
    out
}

fn product<'a, T>(choices: &[Vec<&'a T>]) -> Vec<Vec<&'a T>> {
    let mut out: Vec<Vec<&'a T>> = vec![Vec::new()];
    for c in choices {
        let mut next = Vec::with_capacity(out.len() * c.len());
        for v in &out {
            for t in c {
                let mut w = v.clone();
                w.push(*t);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

/// Permutations of positions mapping each position to one of the same sort;
/// the identity comes first.
fn sort_preserving_perms(sorts: &[SortId]) -> Vec<Vec<usize>> {
    fn go(sorts: &[SortId], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == sorts.len() {
            out.push(cur.clone());
            return;
        }
        let i = cur.len();
        for j in 0..sorts.len() {
            if sorts[j] == sorts[i] && !cur.contains(&j) {
                cur.push(j);
                go(sorts, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(sorts, &mut Vec::new(), &mut out);
    out
}

fn rename_sorted(set: &[Formula], names: &[&str], perm: &[usize]) -> Vec<Formula> {
    let map = names
        .iter()
        .zip(perm)
        .map(|(n, &j)| (n.to_string(), Term::var(names[j])))
        .collect();
    let mut out: Vec<Formula> = set
        .iter()
        .map(|a| match a.substitute(&map) {
            Formula::Eq(x, y) if y < x => Formula::Eq(y, x),
            other => other,
        })
        .collect();
    out.sort();
    out
}

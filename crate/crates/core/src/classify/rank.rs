//! The binary-tree rank of a set of formulas relative to a contradictory pair,
//! computed exactly inside a finite ambient structure.

use std::collections::HashMap;

use crate::model::{compile, tuples, FiniteStructure};
use crate::syntax::{Formula, SortId};

use super::ClassifyError;

/// `phi(x, y)` and `psi(x, y)` with no common realization in `ambient`, and
/// `sigma`, a finite set of formulas in `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankQuery {
    pub ambient: FiniteStructure,
    pub x: Vec<(String, SortId)>,
    pub y: Vec<(String, SortId)>,
    pub phi: Formula,
    pub psi: Formula,
    pub sigma: Vec<Formula>,
}

type Set = Vec<u64>;

fn set_empty(s: &Set) -> bool {
    s.iter().all(|&w| w == 0)
}

fn set_and(a: &Set, b: &Set) -> Set {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn set_insert(s: &mut Set, i: usize) {
    s[i / 64] |= 1 << (i % 64);
}

/// Realizations of `sigma`, and of `phi(x, b)`, `psi(x, b)` for each `b`, as
/// bitsets over the `x`-tuples in lexicographic order.
struct Tables {
    sigma: Set,
    phi: Vec<Set>,
    psi: Vec<Set>,
}

fn tables(q: &RankQuery) -> Result<Tables, ClassifyError> {
    let m = &q.ambient;
    let sig = m.signature();
    let sizes = m.sizes();
    let xs: Vec<SortId> = q.x.iter().map(|(_, s)| *s).collect();
    let ys: Vec<SortId> = q.y.iter().map(|(_, s)| *s).collect();
    let xt: Vec<Vec<usize>> = tuples(&sizes, &xs).collect();
    let yt: Vec<Vec<usize>> = tuples(&sizes, &ys).collect();
    let words = xt.len().div_ceil(64).max(1);
    let mut ctx = q.x.clone();
    ctx.extend(q.y.iter().cloned());
    let cphi = compile(&q.phi, sig, &ctx)?;
    let cpsi = compile(&q.psi, sig, &ctx)?;
    let csig = q
        .sigma
        .iter()
        .map(|f| compile(f, sig, &q.x))
        .collect::<Result<Vec<_>, _>>()?;
    let mut sigma = vec![0u64; words];
    for (i, a) in xt.iter().enumerate() {
        if csig.iter().all(|c| c.eval(m, a)) {
            set_insert(&mut sigma, i);
        }
    }
    let mut phi = Vec::with_capacity(yt.len());
    let mut psi = Vec::with_capacity(yt.len());
    for b in &yt {
        let mut p = vec![0u64; words];
        let mut s = vec![0u64; words];
        for (i, a) in xt.iter().enumerate() {
            let mut v = a.clone();
            v.extend(b.iter().copied());
            let in_phi = cphi.eval(m, &v);
            let in_psi = cpsi.eval(m, &v);
            if in_phi && in_psi {
                let show = |t: &[usize], ss: &[SortId]| {
                    t.iter()
                        .zip(ss)
                        .map(|(&e, &s)| m.elem_name(s, e).to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                };
                return Err(ClassifyError::NotContradictory {
                    x: show(a, &xs),
                    y: show(b, &ys),
                });
            }
            if in_phi {
                set_insert(&mut p, i);
            }
            if in_psi {
                set_insert(&mut s, i);
            }
        }
        phi.push(p);
        psi.push(s);
    }
    Ok(Tables { sigma, phi, psi })
}

fn rank_of(t: &Tables, s: &Set, memo: &mut HashMap<Set, i64>) -> i64 {
    if set_empty(s) {
        return -1;
    }
    if let Some(&r) = memo.get(s) {
        return r;
    }
    let mut best = 0;
    for (p, q) in t.phi.iter().zip(&t.psi) {
        let l = set_and(s, p);
        let r = set_and(s, q);
        if set_empty(&l) || set_empty(&r) {
            continue;
        }
        let v = 1 + rank_of(t, &l, memo).min(rank_of(t, &r, memo));
        best = best.max(v);
    }
    memo.insert(s.clone(), best);
    best
}

/// `R(sigma)`: −1 when `sigma` has no realization, otherwise the largest `n`
/// such that some `b` splits the realizations into a `phi(x, b)` part and a
/// `psi(x, b)` part both of rank ≥ `n − 1`. Memoized on realization sets.
pub fn rank(q: &RankQuery) -> Result<i64, ClassifyError> {
    let t = tables(q)?;
    let mut memo = HashMap::new();
    Ok(rank_of(&t, &t.sigma, &mut memo))
}

/// Searches for parameters `(b_η)` on the binary tree of height `n` such that
/// every branch's instances (`phi` to the left, `psi` to the right) are
/// realized together with `sigma`. Nodes are assigned in breadth-first order,
/// pruning as soon as some branch prefix has no realization.
pub fn rank_via_tree(q: &RankQuery, n: usize) -> Result<bool, ClassifyError> {
    let t = tables(q)?;
    if n == 0 {
        return Ok(!set_empty(&t.sigma));
    }
    // Node `i` (breadth-first, root 0) has children `2i+1` (phi) and `2i+2` (psi).
    let internal = (1usize << n) - 1;
    let mut reach: Vec<Option<Set>> = vec![None; 2 * internal + 1];
    reach[0] = Some(t.sigma.clone());
    fn go(t: &Tables, node: usize, internal: usize, reach: &mut Vec<Option<Set>>) -> bool {
        if node == internal {
            return true;
        }
        let here = reach[node].clone().expect("parent assigned first");
        for (p, q) in t.phi.iter().zip(&t.psi) {
            let l = set_and(&here, p);
            let r = set_and(&here, q);
            if set_empty(&l) || set_empty(&r) {
                continue;
            }
            reach[2 * node + 1] = Some(l);
            reach[2 * node + 2] = Some(r);
            if go(t, node + 1, internal, reach) {
                return true;
            }
        }
        false
    }
    let found = go(&t, 0, internal, &mut reach);
    debug_assert!(!found || (internal..2 * internal + 1).all(|i| reach[i].as_ref().is_some_and(|s| !set_empty(s))));
    Ok(found)
}

use std::sync::Arc;

use thiserror::Error;

use crate::morphism::{verify_homomorphism, MapError, StructureMap};

use super::structure::{tuples, FiniteStructure};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnionError {
    #[error("a chain of {stages} structure(s) needs {} link(s), got {links}", stages.saturating_sub(1))]
    LinkCount { stages: usize, links: usize },
    #[error("empty chain")]
    EmptyChain,
    #[error("link {link} is not a homomorphism: {reason}")]
    NotAHomomorphism { link: usize, reason: MapError },
}

/// The union of a chain together with the maps from each stage into it.
#[derive(Clone, Debug)]
pub struct DirectedUnion {
    pub union: FiniteStructure,
    pub projections: Vec<StructureMap>,
}

/// Union of the chain `chain[0] → chain[1] → …` along `links`.
///
/// Elements are classes of (stage, element) pairs under "identified by some
/// later link"; a relation holds of classes when it holds of representatives
/// at some stage, and functions and constants are computed on
/// representatives. Classes are listed by their earliest representative and
/// named `s<stage>_<element>` after it.
pub fn directed_union(chain: &[FiniteStructure], links: &[StructureMap]) -> Result<DirectedUnion, UnionError> {
    if chain.is_empty() {
        return Err(UnionError::EmptyChain);
    }
    if links.len() + 1 != chain.len() {
        return Err(UnionError::LinkCount {
            stages: chain.len(),
            links: links.len(),
        });
    }
    for (i, f) in links.iter().enumerate() {
        verify_homomorphism(&chain[i], &chain[i + 1], f).map_err(|reason| UnionError::NotAHomomorphism { link: i, reason })?;
    }
    let sig = chain[0].signature_arc().clone();
    let nsorts = sig.sorts().len();
    // Global ids, stage-major then sort then element.
    let mut offset = vec![vec![0usize; nsorts]; chain.len()];
    let mut owner = Vec::new();
    for (i, m) in chain.iter().enumerate() {
        for s in sig.sort_ids() {
            offset[i][s.0] = owner.len();
            for e in 0..m.size(s) {
                owner.push((i, s, e));
            }
        }
    }
    let mut parent: Vec<usize> = (0..owner.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for (i, f) in links.iter().enumerate() {
        for s in sig.sort_ids() {
            for e in 0..chain[i].size(s) {
                let a = find(&mut parent, offset[i][s.0] + e);
                let b = find(&mut parent, offset[i + 1][s.0] + f.at(s, e));
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                parent[hi] = lo;
            }
        }
    }
    // Class index per sort, in order of earliest representative.
    let mut class_of = vec![usize::MAX; owner.len()];
    let mut carriers: Vec<Vec<String>> = vec![Vec::new(); nsorts];
    for g in 0..owner.len() {
        let r = find(&mut parent, g);
        if r == g {
            let (i, s, e) = owner[g];
            class_of[g] = carriers[s.0].len();
            carriers[s.0].push(format!("s{i}_{}", chain[i].elem_name(s, e)));
        }
    }
    for g in 0..owner.len() {
        let r = find(&mut parent, g);
        class_of[g] = class_of[r];
    }
    let cls = |i: usize, s: crate::syntax::SortId, e: usize| class_of[offset[i][s.0] + e];
    let mut union = FiniteStructure::new(Arc::clone(&sig), carriers).expect("every class has a representative");
    for (c, decl) in sig.constants().iter().enumerate() {
        union.set_constant(c, cls(0, decl.sort, chain[0].constant(c)));
    }
    for (i, m) in chain.iter().enumerate() {
        let sizes = m.sizes();
        for (f, decl) in sig.functions().iter().enumerate() {
            for t in tuples(&sizes, &decl.args) {
                let ct: Vec<usize> = t.iter().zip(&decl.args).map(|(&e, s)| cls(i, *s, e)).collect();
                union.set_function(f, &ct, cls(i, decl.result, m.function(f, &t)));
            }
        }
        for (r, decl) in sig.relations().iter().enumerate() {
            for t in m.relation_tuples(r) {
                let ct: Vec<usize> = t.iter().zip(&decl.args).map(|(&e, s)| cls(i, *s, e)).collect();
                union.set_relation(r, &ct, true);
            }
        }
    }
    let projections = chain
        .iter()
        .enumerate()
        .map(|(i, m)| StructureMap {
            maps: sig
                .sort_ids()
                .map(|s| (0..m.size(s)).map(|e| Some(cls(i, s, e))).collect())
                .collect(),
        })
        .collect();
    Ok(DirectedUnion { union, projections })
}

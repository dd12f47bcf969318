//! Backtracking search for homomorphisms and isomorphisms.
//!
//! Source elements are assigned in canonical order (sort by sort, element by
//! element) and candidate images are tried in ascending order, so results
//! come out in lexicographic order of their element images. Every fact of
//! the source is checked as soon as all the elements it mentions are
//! assigned.

use crate::model::structure::{tuple_index, tuples, FiniteStructure};
use crate::syntax::SortId;

use super::map::StructureMap;

enum Check {
    Func { f: usize, args: Vec<usize>, value: usize },
    Rel { r: usize, args: Vec<usize>, truth: bool },
}

struct Search<'a> {
    dst: &'a FiniteStructure,
    sort_of: Vec<SortId>,
    elem_of: Vec<usize>,
    forced: Vec<Option<usize>>,
    checks: Vec<Vec<Check>>,
    iso: bool,
    used: Vec<Vec<bool>>,
    assign: Vec<usize>,
    dst_sizes: Vec<usize>,
    limit: usize,
    out: Vec<Vec<usize>>,
}

impl Search<'_> {
    fn consistent(&self, pos: usize) -> bool {
        let sig = self.dst.signature();
        for c in &self.checks[pos] {
            match c {
                Check::Func { f, args, value } => {
                    let decl = &sig.functions()[*f];
                    let img: Vec<usize> = args.iter().map(|&p| self.assign[p]).collect();
                    let idx = tuple_index(&self.dst_sizes, &decl.args, &img);
                    if self.dst.func_val_at(*f, idx) != self.assign[*value] {
                        return false;
                    }
                }
                Check::Rel { r, args, truth } => {
                    let decl = &sig.relations()[*r];
                    let img: Vec<usize> = args.iter().map(|&p| self.assign[p]).collect();
                    let idx = tuple_index(&self.dst_sizes, &decl.args, &img);
                    let holds = self.dst.rel_at(*r, idx);
                    if (*truth && !holds) || (self.iso && !*truth && holds) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn run(&mut self, pos: usize) -> bool {
        if pos == self.assign.len() {
            self.out.push(self.assign.clone());
            return self.limit != 0 && self.out.len() >= self.limit;
        }
        let s = self.sort_of[pos];
        let candidates: Vec<usize> = match self.forced[pos] {
            Some(v) => vec![v],
            None => (0..self.dst.size(s)).collect(),
        };
        for v in candidates {
            if self.iso && self.used[s.0][v] {
                continue;
            }
            self.assign[pos] = v;
            if !self.consistent(pos) {
                continue;
            }
            if self.iso {
                self.used[s.0][v] = true;
            }
            let stop = self.run(pos + 1);
            if self.iso {
                self.used[s.0][v] = false;
            }
            if stop {
                return true;
            }
        }
        false
    }
}

fn search(src: &FiniteStructure, dst: &FiniteStructure, seed: &StructureMap, limit: usize, iso: bool) -> Vec<StructureMap> {
    let sig = src.signature();
    if sig != dst.signature() || seed.maps.len() != sig.sorts().len() {
        return Vec::new();
    }
    let sizes = src.sizes();
    if iso && sizes != dst.sizes() {
        return Vec::new();
    }
    let mut offset = Vec::with_capacity(sizes.len());
    let mut sort_of = Vec::new();
    let mut elem_of = Vec::new();
    for (s, &n) in sizes.iter().enumerate() {
        offset.push(sort_of.len());
        for e in 0..n {
            sort_of.push(SortId(s));
            elem_of.push(e);
        }
    }
    let pos = |s: SortId, e: usize| offset[s.0] + e;
    let total = sort_of.len();
    let mut forced: Vec<Option<usize>> = vec![None; total];
    let force = |p: usize, v: usize, forced: &mut Vec<Option<usize>>| -> bool {
        match forced[p] {
            Some(w) if w != v => false,
            _ => {
                forced[p] = Some(v);
                true
            }
        }
    };
    for s in sig.sort_ids() {
        if seed.maps[s.0].len() != sizes[s.0] {
            return Vec::new();
        }
        for (e, v) in seed.maps[s.0].iter().enumerate() {
            if let Some(v) = v {
                if *v >= dst.size(s) || !force(pos(s, e), *v, &mut forced) {
                    return Vec::new();
                }
            }
        }
    }
    for (c, decl) in sig.constants().iter().enumerate() {
        if !force(pos(decl.sort, src.constant(c)), dst.constant(c), &mut forced) {
            return Vec::new();
        }
    }
    let mut checks: Vec<Vec<Check>> = (0..total).map(|_| Vec::new()).collect();
    for (f, decl) in sig.functions().iter().enumerate() {
        for t in tuples(&sizes, &decl.args) {
            let args: Vec<usize> = t.iter().zip(&decl.args).map(|(&e, s)| pos(*s, e)).collect();
            let value = pos(decl.result, src.function(f, &t));
            let last = args.iter().copied().chain([value]).max().expect("value present");
            checks[last].push(Check::Func { f, args, value });
        }
    }
    for (r, decl) in sig.relations().iter().enumerate() {
        for t in tuples(&sizes, &decl.args) {
            let truth = src.holds(r, &t);
            if !truth && !iso {
                continue;
            }
            let args: Vec<usize> = t.iter().zip(&decl.args).map(|(&e, s)| pos(*s, e)).collect();
            match args.iter().max() {
                Some(&last) => checks[last].push(Check::Rel { r, args, truth }),
                None => {
                    // Nullary relation: decided up front.
                    let holds = dst.holds(r, &[]);
                    if (truth && !holds) || (iso && !truth && holds) {
                        return Vec::new();
                    }
                }
            }
        }
    }
    let mut st = Search {
        dst,
        sort_of,
        elem_of,
        forced,
        checks,
        iso,
        used: dst.sizes().into_iter().map(|n| vec![false; n]).collect(),
        assign: vec![0; total],
        dst_sizes: dst.sizes(),
        limit,
        out: Vec::new(),
    };
    st.run(0);
    st.out
        .iter()
        .map(|a| {
            let mut maps: Vec<Vec<Option<usize>>> = sizes.iter().map(|&n| vec![None; n]).collect();
            for (p, &v) in a.iter().enumerate() {
                maps[st.sort_of[p].0][st.elem_of[p]] = Some(v);
            }
            StructureMap { maps }
        })
        .collect()
}

/// Up to `limit` homomorphisms `src → dst` extending `seed`, in canonical
/// order; `limit == 0` enumerates all. An empty result means none exist.
pub fn find_homomorphisms(src: &FiniteStructure, dst: &FiniteStructure, seed: &StructureMap, limit: usize) -> Vec<StructureMap> {
    search(src, dst, seed, limit, false)
}

pub fn find_homomorphism(src: &FiniteStructure, dst: &FiniteStructure) -> Option<StructureMap> {
    find_homomorphisms(src, dst, &StructureMap::empty(src), 1).pop()
}

/// Up to `limit` isomorphisms extending `seed`, canonical order.
pub fn find_isomorphisms(src: &FiniteStructure, dst: &FiniteStructure, seed: &StructureMap, limit: usize) -> Vec<StructureMap> {
    search(src, dst, seed, limit, true)
}

/// The canonically first isomorphism extending `seed`.
///
/// The forth direction extends the partial map one source element at a time
/// while keeping it a partial isomorphism (atoms preserved and reflected,
/// injective). For finite structures of equal size per sort a complete forth
/// chain is already onto, so the back steps hold automatically.
pub fn find_isomorphism(src: &FiniteStructure, dst: &FiniteStructure, seed: &StructureMap) -> Option<StructureMap> {
    find_isomorphisms(src, dst, seed, 1).pop()
}

pub fn automorphisms(m: &FiniteStructure) -> Vec<StructureMap> {
    find_isomorphisms(m, m, &StructureMap::empty(m), 0)
}

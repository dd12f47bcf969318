use thiserror::Error;

use crate::model::structure::{tuples, FiniteStructure};
use crate::syntax::SortId;

/// A sort-indexed, possibly partial function between the carriers of two
/// structures. `maps[s][a]` is the image of element `a` of sort `s`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StructureMap {
    pub maps: Vec<Vec<Option<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("element {elem} of sort `{sort}` has no image")]
    NotTotal { sort: String, elem: String },
    #[error("image of `{elem}` in sort `{sort}` is out of range")]
    OutOfRange { sort: String, elem: String },
    #[error("map does not commute with constant `{0}`")]
    Constant(String),
    #[error("map does not commute with `{name}` at ({args})")]
    Function { name: String, args: String },
    #[error("map does not preserve `{name}` at ({args})")]
    Relation { name: String, args: String },
    #[error("map does not reflect `{name}` at ({args})")]
    Reflection { name: String, args: String },
    #[error("map is not injective on sort `{0}`")]
    NotInjective(String),
    #[error("map is not surjective on sort `{0}`")]
    NotSurjective(String),
    #[error("map shape does not match the source structure")]
    Shape,
}

impl StructureMap {
    /// The nowhere-defined map out of `src`.
    pub fn empty(src: &FiniteStructure) -> Self {
        StructureMap {
            maps: src.sizes().into_iter().map(|n| vec![None; n]).collect(),
        }
    }

    pub fn identity(m: &FiniteStructure) -> Self {
        StructureMap {
            maps: m.sizes().into_iter().map(|n| (0..n).map(Some).collect()).collect(),
        }
    }

    pub fn from_total(maps: Vec<Vec<usize>>) -> Self {
        StructureMap {
            maps: maps.into_iter().map(|v| v.into_iter().map(Some).collect()).collect(),
        }
    }

    pub fn get(&self, s: SortId, e: usize) -> Option<usize> {
        self.maps[s.0][e]
    }

    pub fn set(&mut self, s: SortId, e: usize, v: usize) {
        self.maps[s.0][e] = Some(v);
    }

    pub fn is_total(&self) -> bool {
        self.maps.iter().all(|m| m.iter().all(Option::is_some))
    }

    pub fn total(&self) -> Option<Vec<Vec<usize>>> {
        self.maps.iter().map(|m| m.iter().copied().collect()).collect()
    }

    /// Image of `e`; panics on undefined points, so only for total maps.
    pub fn at(&self, s: SortId, e: usize) -> usize {
        self.maps[s.0][e].expect("map is total")
    }

    /// `then ∘ self`, defined where both are.
    pub fn compose(&self, then: &StructureMap) -> StructureMap {
        StructureMap {
            maps: self
                .maps
                .iter()
                .zip(&then.maps)
                .map(|(f, g)| f.iter().map(|x| x.and_then(|v| g.get(v).copied().flatten())).collect())
                .collect(),
        }
    }

    pub fn apply_tuple(&self, sorts: &[SortId], tuple: &[usize]) -> Option<Vec<usize>> {
        sorts.iter().zip(tuple).map(|(s, &e)| self.get(*s, e)).collect()
    }

    /// True when `self` agrees with `other` wherever `self` is defined.
    pub fn extended_by(&self, other: &StructureMap) -> bool {
        self.maps.iter().zip(&other.maps).all(|(a, b)| {
            a.iter().zip(b).all(|(x, y)| x.is_none() || x == y)
        })
    }

    /// Inverse of a bijection.
    pub fn inverse(&self) -> Option<StructureMap> {
        let mut maps = Vec::with_capacity(self.maps.len());
        for m in &self.maps {
            let mut inv = vec![None; m.len()];
            for (a, b) in m.iter().enumerate() {
                let b = (*b)?;
                if b >= inv.len() || inv[b].is_some() {
                    return None;
                }
                inv[b] = Some(a);
            }
            maps.push(inv);
        }
        Some(StructureMap { maps })
    }
}

fn show(m: &FiniteStructure, sorts: &[SortId], t: &[usize]) -> String {
    sorts
        .iter()
        .zip(t)
        .map(|(s, &e)| m.elem_name(*s, e).to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn check_shape(src: &FiniteStructure, dst: &FiniteStructure, f: &StructureMap) -> Result<(), MapError> {
    if f.maps.len() != src.sizes().len() || src.signature() != dst.signature() {
        return Err(MapError::Shape);
    }
    let sig = src.signature();
    for s in sig.sort_ids() {
        if f.maps[s.0].len() != src.size(s) {
            return Err(MapError::Shape);
        }
        for (e, v) in f.maps[s.0].iter().enumerate() {
            match v {
                None => {
                    return Err(MapError::NotTotal {
                        sort: sig.sort_name(s).to_string(),
                        elem: src.elem_name(s, e).to_string(),
                    })
                }
                Some(v) if *v >= dst.size(s) => {
                    return Err(MapError::OutOfRange {
                        sort: sig.sort_name(s).to_string(),
                        elem: src.elem_name(s, e).to_string(),
                    })
                }
                _ => {}
            }
        }
    }
    Ok(())
}

/// Independent check that `f` is a homomorphism `src → dst`: total, commutes
/// with constants and functions, preserves relations.
pub fn verify_homomorphism(src: &FiniteStructure, dst: &FiniteStructure, f: &StructureMap) -> Result<(), MapError> {
    check_shape(src, dst, f)?;
    let sig = src.signature();
    let sizes = src.sizes();
    for (c, decl) in sig.constants().iter().enumerate() {
        if f.at(decl.sort, src.constant(c)) != dst.constant(c) {
            return Err(MapError::Constant(decl.name.clone()));
        }
    }
    for (g, decl) in sig.functions().iter().enumerate() {
        for t in tuples(&sizes, &decl.args) {
            let image = f.apply_tuple(&decl.args, &t).expect("total");
            if f.at(decl.result, src.function(g, &t)) != dst.function(g, &image) {
                return Err(MapError::Function {
                    name: decl.name.clone(),
                    args: show(src, &decl.args, &t),
                });
            }
        }
    }
    for (r, decl) in sig.relations().iter().enumerate() {
        for t in src.relation_tuples(r) {
            let image = f.apply_tuple(&decl.args, &t).expect("total");
            if !dst.holds(r, &image) {
                return Err(MapError::Relation {
                    name: decl.name.clone(),
                    args: show(src, &decl.args, &t),
                });
            }
        }
    }
    Ok(())
}

/// Independent check that `f` is an isomorphism: a bijective homomorphism
/// that also reflects every relation.
pub fn verify_isomorphism(src: &FiniteStructure, dst: &FiniteStructure, f: &StructureMap) -> Result<(), MapError> {
    verify_homomorphism(src, dst, f)?;
    let sig = src.signature();
    for s in sig.sort_ids() {
        if src.size(s) != dst.size(s) {
            return Err(MapError::NotSurjective(sig.sort_name(s).to_string()));
        }
        let mut seen = vec![false; dst.size(s)];
        for e in 0..src.size(s) {
            let v = f.at(s, e);
            if seen[v] {
                return Err(MapError::NotInjective(sig.sort_name(s).to_string()));
            }
            seen[v] = true;
        }
    }
    let sizes = src.sizes();
    for (r, decl) in sig.relations().iter().enumerate() {
        for t in tuples(&sizes, &decl.args) {
            let image = f.apply_tuple(&decl.args, &t).expect("total");
            if dst.holds(r, &image) && !src.holds(r, &t) {
                return Err(MapError::Reflection {
                    name: decl.name.clone(),
                    args: show(src, &decl.args, &t),
                });
            }
        }
    }
    Ok(())
}

pub fn is_homomorphism(src: &FiniteStructure, dst: &FiniteStructure, f: &StructureMap) -> bool {
    verify_homomorphism(src, dst, f).is_ok()
}

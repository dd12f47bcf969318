use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a sort in its signature's declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SortId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstDecl {
    pub name: String,
    pub sort: SortId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuncDecl {
    pub name: String,
    pub args: Vec<SortId>,
    pub result: SortId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelDecl {
    pub name: String,
    pub args: Vec<SortId>,
}

/// A non-sort symbol, resolved to its position in the declaration lists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    Const(usize),
    Func(usize),
    Rel(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("duplicate sort `{0}`")]
    DuplicateSort(String),
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("unknown sort `{0}`")]
    UnknownSort(String),
}

/// A multi-sorted signature. Declaration order is fixed and drives every
/// canonical enumeration downstream (cells, pools, diagrams).
#[derive(Clone, Default, Serialize, Deserialize)]
#[serde(from = "SignatureRepr", into = "SignatureRepr")]
pub struct Signature {
    sorts: Vec<String>,
    constants: Vec<ConstDecl>,
    functions: Vec<FuncDecl>,
    relations: Vec<RelDecl>,
    sort_index: HashMap<String, SortId>,
    symbol_index: HashMap<String, Symbol>,
}

#[derive(Serialize, Deserialize)]
struct SignatureRepr {
    sorts: Vec<String>,
    constants: Vec<ConstDecl>,
    functions: Vec<FuncDecl>,
    relations: Vec<RelDecl>,
}

impl From<SignatureRepr> for Signature {
    fn from(r: SignatureRepr) -> Self {
        let mut sig = Signature {
            sorts: r.sorts,
            constants: r.constants,
            functions: r.functions,
            relations: r.relations,
            ..Default::default()
        };
        sig.reindex();
        sig
    }
}

impl From<Signature> for SignatureRepr {
    fn from(s: Signature) -> Self {
        SignatureRepr {
            sorts: s.sorts,
            constants: s.constants,
            functions: s.functions,
            relations: s.relations,
        }
    }
}

impl PartialEq for Signature {
    fn eq(&self, other: &Self) -> bool {
        self.sorts == other.sorts
            && self.constants == other.constants
            && self.functions == other.functions
            && self.relations == other.relations
    }
}

impl Eq for Signature {}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Signature")
            .field("sorts", &self.sorts)
            .field("constants", &self.constants)
            .field("functions", &self.functions)
            .field("relations", &self.relations)
            .finish()
    }
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    /// A one-sorted signature with the given sort name and nothing else.
    pub fn single_sorted(sort: &str) -> Self {
        let mut sig = Self::new();
        sig.add_sort(sort).expect("fresh signature");
        sig
    }

    fn reindex(&mut self) {
        self.sort_index = self
            .sorts
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), SortId(i)))
            .collect();
        self.symbol_index.clear();
        for (i, c) in self.constants.iter().enumerate() {
            self.symbol_index.insert(c.name.clone(), Symbol::Const(i));
        }
        for (i, f) in self.functions.iter().enumerate() {
            self.symbol_index.insert(f.name.clone(), Symbol::Func(i));
        }
        for (i, r) in self.relations.iter().enumerate() {
            self.symbol_index.insert(r.name.clone(), Symbol::Rel(i));
        }
    }

    pub fn add_sort(&mut self, name: &str) -> Result<SortId, SignatureError> {
        if self.sort_index.contains_key(name) {
            return Err(SignatureError::DuplicateSort(name.to_string()));
        }
        let id = SortId(self.sorts.len());
        self.sorts.push(name.to_string());
        self.sort_index.insert(name.to_string(), id);
        Ok(id)
    }

    fn claim(&self, name: &str) -> Result<(), SignatureError> {
        if self.symbol_index.contains_key(name) {
            Err(SignatureError::DuplicateSymbol(name.to_string()))
        } else {
            Ok(())
        }
    }

    fn check_sort(&self, s: SortId) -> Result<(), SignatureError> {
        if s.0 < self.sorts.len() {
            Ok(())
        } else {
            Err(SignatureError::UnknownSort(format!("#{}", s.0)))
        }
    }

    pub fn add_constant(&mut self, name: &str, sort: SortId) -> Result<usize, SignatureError> {
        self.claim(name)?;
        self.check_sort(sort)?;
        let i = self.constants.len();
        self.constants.push(ConstDecl {
            name: name.to_string(),
            sort,
        });
        self.symbol_index.insert(name.to_string(), Symbol::Const(i));
        Ok(i)
    }

    pub fn add_function(
        &mut self,
        name: &str,
        args: Vec<SortId>,
        result: SortId,
    ) -> Result<usize, SignatureError> {
        self.claim(name)?;
        for &a in &args {
            self.check_sort(a)?;
        }
        self.check_sort(result)?;
        let i = self.functions.len();
        self.functions.push(FuncDecl {
            name: name.to_string(),
            args,
            result,
        });
        self.symbol_index.insert(name.to_string(), Symbol::Func(i));
        Ok(i)
    }

    pub fn add_relation(&mut self, name: &str, args: Vec<SortId>) -> Result<usize, SignatureError> {
        self.claim(name)?;
        for &a in &args {
            self.check_sort(a)?;
        }
        let i = self.relations.len();
        self.relations.push(RelDecl {
            name: name.to_string(),
            args,
        });
        self.symbol_index.insert(name.to_string(), Symbol::Rel(i));
        Ok(i)
    }

    /// Convenience for building signatures by sort name.
    pub fn sort_named(&self, name: &str) -> Result<SortId, SignatureError> {
        self.sort_id(name)
            .ok_or_else(|| SignatureError::UnknownSort(name.to_string()))
    }

    pub fn sorts(&self) -> &[String] {
        &self.sorts
    }

    pub fn sort_ids(&self) -> impl Iterator<Item = SortId> {
        (0..self.sorts.len()).map(SortId)
    }

    pub fn sort_name(&self, s: SortId) -> &str {
        &self.sorts[s.0]
    }

    pub fn sort_id(&self, name: &str) -> Option<SortId> {
        self.sort_index.get(name).copied()
    }

    pub fn constants(&self) -> &[ConstDecl] {
        &self.constants
    }

    pub fn functions(&self) -> &[FuncDecl] {
        &self.functions
    }

    pub fn relations(&self) -> &[RelDecl] {
        &self.relations
    }

    pub fn symbol(&self, name: &str) -> Option<Symbol> {
        self.symbol_index.get(name).copied()
    }

    pub fn constant_index(&self, name: &str) -> Option<usize> {
        match self.symbol(name) {
            Some(Symbol::Const(i)) => Some(i),
            _ => None,
        }
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        match self.symbol(name) {
            Some(Symbol::Func(i)) => Some(i),
            _ => None,
        }
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        match self.symbol(name) {
            Some(Symbol::Rel(i)) => Some(i),
            _ => None,
        }
    }

    pub fn is_symbol(&self, name: &str) -> bool {
        self.symbol_index.contains_key(name)
    }

    /// The only sort, when there is exactly one.
    pub fn unique_sort(&self) -> Option<SortId> {
        (self.sorts.len() == 1).then_some(SortId(0))
    }

    pub fn is_relational(&self) -> bool {
        self.functions.is_empty()
    }

    /// A name not yet used by any symbol, derived from `base`.
    pub fn fresh_name(&self, base: &str) -> String {
        if !self.is_symbol(base) {
            return base.to_string();
        }
        let mut i = 1;
        loop {
            let candidate = format!("{base}_{i}");
            if !self.is_symbol(&candidate) {
                return candidate;
            }
            i += 1;
        }
    }

    /// Extends with fresh constants, returning the new signature and their indices.
    pub fn with_constants(&self, consts: &[(String, SortId)]) -> Result<(Signature, Vec<usize>), SignatureError> {
        let mut sig = self.clone();
        let mut ids = Vec::with_capacity(consts.len());
        for (name, sort) in consts {
            ids.push(sig.add_constant(name, *sort)?);
        }
        Ok((sig, ids))
    }

    /// True when `self` is `other` with extra symbols appended (same sorts,
    /// and every symbol of `other` declared identically and in the same position).
    pub fn extends(&self, other: &Signature) -> bool {
        self.sorts.starts_with(&other.sorts)
            && self.constants.starts_with(&other.constants)
            && self.functions.starts_with(&other.functions)
            && self.relations.starts_with(&other.relations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_across_symbol_classes() {
        let mut sig = Signature::single_sorted("elem");
        let e = SortId(0);
        sig.add_constant("c", e).unwrap();
        assert_eq!(
            sig.add_relation("c", vec![e]),
            Err(SignatureError::DuplicateSymbol("c".into()))
        );
        assert!(sig.add_function("f", vec![SortId(3)], e).is_err());
    }

    #[test]
    fn serde_round_trip_rebuilds_indices() {
        let mut sig = Signature::single_sorted("elem");
        sig.add_relation("R", vec![SortId(0), SortId(0)]).unwrap();
        let text = serde_json::to_string(&sig).unwrap();
        let back: Signature = serde_json::from_str(&text).unwrap();
        assert_eq!(back, sig);
        assert_eq!(back.relation_index("R"), Some(0));
    }

    #[test]
    fn fresh_names_avoid_existing_symbols() {
        let mut sig = Signature::single_sorted("elem");
        sig.add_constant("e_a", SortId(0)).unwrap();
        assert_eq!(sig.fresh_name("e_a"), "e_a_1");
        assert_eq!(sig.fresh_name("e_b"), "e_b");
    }
}

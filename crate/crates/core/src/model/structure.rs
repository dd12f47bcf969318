use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::syntax::{Signature, SortId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("expected {expected} carrier(s), found {found}")]
    CarrierCount { expected: usize, found: usize },
    #[error("duplicate element `{elem}` in sort `{sort}`")]
    DuplicateElement { sort: String, elem: String },
    #[error("symbol `{0}` has no total interpretation: its result sort is empty")]
    EmptyResultSort(String),
    #[error("unknown element `{elem}` of sort `{sort}`")]
    UnknownElement { sort: String, elem: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{name}` expects {expected} argument(s), found {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error("signature mismatch")]
    SignatureMismatch,
}

/// A finite structure with total interpretations.
///
/// Elements of each sort are `0..n` in declaration order; names are kept for
/// printing. Function and relation tables are dense and indexed in mixed
/// radix, first argument most significant, so table order is the
/// lexicographic tuple order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteStructure {
    sig: Arc<Signature>,
    carriers: Vec<Vec<String>>,
    consts: Vec<usize>,
    funcs: Vec<Vec<usize>>,
    rels: Vec<Vec<bool>>,
}

/// Number of cells of a table over the given argument sorts.
pub fn table_len(sizes: &[usize], args: &[SortId]) -> usize {
    args.iter().map(|s| sizes[s.0]).product()
}

/// Mixed-radix index of a tuple.
pub fn tuple_index(sizes: &[usize], args: &[SortId], tuple: &[usize]) -> usize {
    args.iter().zip(tuple).fold(0, |acc, (s, &v)| acc * sizes[s.0] + v)
}

/// Inverse of [`tuple_index`].
pub fn index_tuple(sizes: &[usize], args: &[SortId], mut idx: usize) -> Vec<usize> {
    let mut out = vec![0; args.len()];
    for (k, s) in args.iter().enumerate().rev() {
        let n = sizes[s.0];
        out[k] = idx % n;
        idx /= n;
    }
    out
}

/// All tuples over the given sorts, in lexicographic order.
pub fn tuples<'a>(sizes: &'a [usize], args: &'a [SortId]) -> impl Iterator<Item = Vec<usize>> + 'a {
    let n = table_len(sizes, args);
    (0..n).map(move |i| index_tuple(sizes, args, i))
}

impl FiniteStructure {
    /// A structure with the given carriers, every relation empty and every
    /// constant and function sent to the first element of its result sort.
    pub fn new(sig: Arc<Signature>, carriers: Vec<Vec<String>>) -> Result<Self, StructureError> {
        if carriers.len() != sig.sorts().len() {
            return Err(StructureError::CarrierCount {
                expected: sig.sorts().len(),
                found: carriers.len(),
            });
        }
        for (s, names) in carriers.iter().enumerate() {
            let mut seen = std::collections::HashSet::new();
            for n in names {
                if !seen.insert(n) {
                    return Err(StructureError::DuplicateElement {
                        sort: sig.sorts()[s].clone(),
                        elem: n.clone(),
                    });
                }
            }
        }
        let sizes: Vec<usize> = carriers.iter().map(Vec::len).collect();
        let mut consts = Vec::new();
        for c in sig.constants() {
            if sizes[c.sort.0] == 0 {
                return Err(StructureError::EmptyResultSort(c.name.clone()));
            }
            consts.push(0);
        }
        let mut funcs = Vec::new();
        for f in sig.functions() {
            let n = table_len(&sizes, &f.args);
            if n > 0 && sizes[f.result.0] == 0 {
                return Err(StructureError::EmptyResultSort(f.name.clone()));
            }
            funcs.push(vec![0; n]);
        }
        let rels = sig
            .relations()
            .iter()
            .map(|r| vec![false; table_len(&sizes, &r.args)])
            .collect();
        Ok(FiniteStructure {
            sig,
            carriers,
            consts,
            funcs,
            rels,
        })
    }

    /// Carriers of the given sizes with elements named `a0`, `a1`, ….
    pub fn with_sizes(sig: Arc<Signature>, sizes: &[usize]) -> Result<Self, StructureError> {
        let carriers = sizes
            .iter()
            .map(|&n| (0..n).map(|i| format!("a{i}")).collect())
            .collect();
        Self::new(sig, carriers)
    }

    /// Assembles a structure from raw tables; used by the model finder.
    pub(crate) fn from_parts(
        sig: Arc<Signature>,
        carriers: Vec<Vec<String>>,
        consts: Vec<usize>,
        funcs: Vec<Vec<usize>>,
        rels: Vec<Vec<bool>>,
    ) -> Self {
        FiniteStructure {
            sig,
            carriers,
            consts,
            funcs,
            rels,
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn signature_arc(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.carriers.iter().map(Vec::len).collect()
    }

    pub fn size(&self, s: SortId) -> usize {
        self.carriers[s.0].len()
    }

    pub fn total_size(&self) -> usize {
        self.carriers.iter().map(Vec::len).sum()
    }

    pub fn carrier(&self, s: SortId) -> &[String] {
        &self.carriers[s.0]
    }

    pub fn carriers(&self) -> &[Vec<String>] {
        &self.carriers
    }

    pub fn elem_name(&self, s: SortId, e: usize) -> &str {
        &self.carriers[s.0][e]
    }

    pub fn elem_index(&self, s: SortId, name: &str) -> Option<usize> {
        self.carriers[s.0].iter().position(|n| n == name)
    }

    pub fn constant(&self, c: usize) -> usize {
        self.consts[c]
    }

    pub fn constant_by_name(&self, name: &str) -> Option<usize> {
        self.sig.constant_index(name).map(|c| self.consts[c])
    }

    pub fn set_constant(&mut self, c: usize, e: usize) {
        self.consts[c] = e;
    }

    pub fn function(&self, f: usize, args: &[usize]) -> usize {
        let sizes = self.sizes();
        self.funcs[f][tuple_index(&sizes, &self.sig.functions()[f].args, args)]
    }

    pub fn set_function(&mut self, f: usize, args: &[usize], value: usize) {
        let sizes = self.sizes();
        let i = tuple_index(&sizes, &self.sig.functions()[f].args, args);
        self.funcs[f][i] = value;
    }

    pub fn holds(&self, r: usize, args: &[usize]) -> bool {
        let sizes = self.sizes();
        self.rels[r][tuple_index(&sizes, &self.sig.relations()[r].args, args)]
    }

    pub fn set_relation(&mut self, r: usize, args: &[usize], value: bool) {
        let sizes = self.sizes();
        let i = tuple_index(&sizes, &self.sig.relations()[r].args, args);
        self.rels[r][i] = value;
    }

    pub(crate) fn func_val_at(&self, f: usize, idx: usize) -> usize {
        self.funcs[f][idx]
    }

    pub(crate) fn rel_at(&self, r: usize, idx: usize) -> bool {
        self.rels[r][idx]
    }

    pub(crate) fn func_table(&self, f: usize) -> &[usize] {
        &self.funcs[f]
    }

    pub(crate) fn rel_table(&self, r: usize) -> &[bool] {
        &self.rels[r]
    }

    pub(crate) fn consts(&self) -> &[usize] {
        &self.consts
    }

    /// Tuples in relation `r`, in lexicographic order.
    pub fn relation_tuples(&self, r: usize) -> Vec<Vec<usize>> {
        let sizes = self.sizes();
        let args = &self.sig.relations()[r].args;
        self.rels[r]
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| index_tuple(&sizes, args, i))
            .collect()
    }

    /// The function graph as (arguments, value) pairs in argument order.
    pub fn function_graph(&self, f: usize) -> Vec<(Vec<usize>, usize)> {
        let sizes = self.sizes();
        let args = &self.sig.functions()[f].args;
        self.funcs[f]
            .iter()
            .enumerate()
            .map(|(i, &v)| (index_tuple(&sizes, args, i), v))
            .collect()
    }

    /// Restriction to a sub-signature `sub` that `self`'s signature extends.
    pub fn reduct(&self, sub: Arc<Signature>) -> Result<FiniteStructure, StructureError> {
        if !self.sig.extends(&sub) {
            return Err(StructureError::SignatureMismatch);
        }
        Ok(FiniteStructure {
            consts: self.consts[..sub.constants().len()].to_vec(),
            funcs: self.funcs[..sub.functions().len()].to_vec(),
            rels: self.rels[..sub.relations().len()].to_vec(),
            carriers: self.carriers.clone(),
            sig: sub,
        })
    }

    /// Expansion to a signature extending ours: new relations empty, new
    /// functions and constants sent to element 0 (sorts must be nonempty).
    pub fn expansion(&self, sig: Arc<Signature>) -> Result<FiniteStructure, StructureError> {
        if !sig.extends(&self.sig) {
            return Err(StructureError::SignatureMismatch);
        }
        let mut out = FiniteStructure::new(sig, self.carriers.clone())?;
        out.consts[..self.consts.len()].clone_from_slice(&self.consts);
        out.funcs[..self.funcs.len()].clone_from_slice(&self.funcs);
        out.rels[..self.rels.len()].clone_from_slice(&self.rels);
        Ok(out)
    }

    /// Expansion by constants appended to the signature (`sig` must extend ours
    /// by constants only).
    pub fn expand_constants(&self, sig: Arc<Signature>, values: &[usize]) -> Result<FiniteStructure, StructureError> {
        if !sig.extends(&self.sig)
            || sig.functions().len() != self.sig.functions().len()
            || sig.relations().len() != self.sig.relations().len()
            || sig.constants().len() != self.consts.len() + values.len()
        {
            return Err(StructureError::SignatureMismatch);
        }
        let mut consts = self.consts.clone();
        consts.extend_from_slice(values);
        Ok(FiniteStructure {
            sig,
            carriers: self.carriers.clone(),
            consts,
            funcs: self.funcs.clone(),
            rels: self.rels.clone(),
        })
    }

    /// Same structure with elements renamed (names must stay unique per sort).
    pub fn renamed(&self, carriers: Vec<Vec<String>>) -> FiniteStructure {
        debug_assert_eq!(
            carriers.iter().map(Vec::len).collect::<Vec<_>>(),
            self.sizes()
        );
        FiniteStructure {
            carriers,
            ..self.clone()
        }
    }

    /// Image of the structure under per-sort permutations `perm[s][old] = new`.
    pub fn permuted(&self, perm: &[Vec<usize>]) -> FiniteStructure {
        let sizes = self.sizes();
        let mut out = self.clone();
        for (s, p) in perm.iter().enumerate() {
            for (old, &new) in p.iter().enumerate() {
                out.carriers[s][new] = self.carriers[s][old].clone();
            }
        }
        for (c, decl) in self.sig.constants().iter().enumerate() {
            out.consts[c] = perm[decl.sort.0][self.consts[c]];
        }
        for (f, decl) in self.sig.functions().iter().enumerate() {
            for (i, &v) in self.funcs[f].iter().enumerate() {
                let t: Vec<usize> = index_tuple(&sizes, &decl.args, i)
                    .iter()
                    .zip(&decl.args)
                    .map(|(&e, s)| perm[s.0][e])
                    .collect();
                out.funcs[f][tuple_index(&sizes, &decl.args, &t)] = perm[decl.result.0][v];
            }
        }
        for (r, decl) in self.sig.relations().iter().enumerate() {
            for (i, &b) in self.rels[r].iter().enumerate() {
                let t: Vec<usize> = index_tuple(&sizes, &decl.args, i)
                    .iter()
                    .zip(&decl.args)
                    .map(|(&e, s)| perm[s.0][e])
                    .collect();
                out.rels[r][tuple_index(&sizes, &decl.args, &t)] = b;
            }
        }
        out
    }

    /// Name → index lookup tables, one per sort.
    pub fn name_index(&self) -> Vec<HashMap<String, usize>> {
        self.carriers
            .iter()
            .map(|c| c.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect())
            .collect()
    }
}

use std::collections::BTreeSet;

use crate::morphism::StructureMap;
use crate::syntax::{Formula, Signature, SortId, Term};

use super::structure::FiniteStructure;

/// The positive diagram of a structure: one fresh constant per element and
/// the atomic facts true of them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagram {
    /// The input signature extended by the element constants.
    pub signature: Signature,
    /// The element constants, in declaration order.
    pub fresh: Vec<(String, SortId)>,
    /// `names[s][e]` is the constant naming element `e` of sort `s`.
    pub names: Vec<Vec<String>>,
    /// `e = e` per element, then constant, function and relation facts, each
    /// group in symbol then tuple order.
    pub facts: Vec<Formula>,
}

impl Diagram {
    pub fn name(&self, s: SortId, e: usize) -> Term {
        Term::Const(self.names[s.0][e].clone())
    }

    /// Reads off the map `M → N` given by the element constants in a structure
    /// over the extended signature.
    pub fn induced_map(&self, expanded: &FiniteStructure) -> StructureMap {
        let sig = expanded.signature();
        StructureMap {
            maps: self
                .names
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|n| sig.constant_index(n).map(|c| expanded.constant(c)))
                        .collect()
                })
                .collect(),
        }
    }
}

/// The positive diagram over `m`'s own signature, constants named `e_<elem>`.
pub fn positive_diagram(m: &FiniteStructure) -> Diagram {
    diagram_over(m, m.signature(), "e_")
}

/// The positive diagram with constants `<prefix><elem>` added to `base`,
/// which must extend `m`'s signature. Names are disambiguated by sort when an
/// element name occurs in several sorts, and renamed away from symbols of
/// `base`.
pub fn diagram_over(m: &FiniteStructure, base: &Signature, prefix: &str) -> Diagram {
    let msig = m.signature();
    let mut signature = base.clone();
    let mut names = Vec::with_capacity(msig.sorts().len());
    let mut fresh = Vec::new();
    let mut used = BTreeSet::new();
    for s in msig.sort_ids() {
        let mut row = Vec::with_capacity(m.size(s));
        for e in 0..m.size(s) {
            let elem = m.elem_name(s, e);
            let shared = msig
                .sort_ids()
                .any(|t| t != s && m.elem_index(t, elem).is_some());
            let base_name = if shared {
                format!("{prefix}{}_{elem}", msig.sort_name(s))
            } else {
                format!("{prefix}{elem}")
            };
            let mut name = signature.fresh_name(&base_name);
            let mut i = 1;
            while used.contains(&name) {
                name = signature.fresh_name(&format!("{base_name}_{i}"));
                i += 1;
            }
            used.insert(name.clone());
            signature.add_constant(&name, s).expect("fresh name");
            fresh.push((name.clone(), s));
            row.push(name);
        }
        names.push(row);
    }
    let c = |s: SortId, e: usize| Term::Const(names[s.0][e].clone());
    let mut facts = Vec::new();
    for s in msig.sort_ids() {
        for e in 0..m.size(s) {
            facts.push(Formula::eq(c(s, e), c(s, e)));
        }
    }
    for (k, decl) in msig.constants().iter().enumerate() {
        facts.push(Formula::eq(Term::constant(&decl.name), c(decl.sort, m.constant(k))));
    }
    for (f, decl) in msig.functions().iter().enumerate() {
        for (args, v) in m.function_graph(f) {
            let ts = args.iter().zip(&decl.args).map(|(&a, s)| c(*s, a)).collect();
            facts.push(Formula::eq(Term::App(decl.name.clone(), ts), c(decl.result, v)));
        }
    }
    for (r, decl) in msig.relations().iter().enumerate() {
        for t in m.relation_tuples(r) {
            let ts = t.iter().zip(&decl.args).map(|(&a, s)| c(*s, a)).collect();
            facts.push(Formula::Atom(decl.name.clone(), ts));
        }
    }
    Diagram {
        signature,
        fresh,
        names,
        facts,
    }
}

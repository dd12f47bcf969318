//! Generators shared by the property tests.
#![allow(dead_code)]

use std::sync::Arc;

use poslog::gen::{random_formula, FormulaShape};
use poslog::model::{tuples, FiniteStructure};
use poslog::syntax::{Formula, HInductiveSentence, Signature, SortId, Theory, VarDecl};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One sort `elem`, unary `P`, binary `R`.
pub fn relational() -> Arc<Signature> {
    let mut sig = Signature::single_sorted("elem");
    sig.add_relation("P", vec![SortId(0)]).unwrap();
    sig.add_relation("R", vec![SortId(0), SortId(0)]).unwrap();
    Arc::new(sig)
}

/// `relational` plus a constant `c` and a unary function `f`.
pub fn rich() -> Arc<Signature> {
    let mut sig = (*relational()).clone();
    sig.add_constant("c", SortId(0)).unwrap();
    sig.add_function("f", vec![SortId(0)], SortId(0)).unwrap();
    Arc::new(sig)
}

pub fn xy() -> Vec<(String, SortId)> {
    vec![("x".into(), SortId(0)), ("y".into(), SortId(0))]
}

pub fn shape(depth: usize) -> FormulaShape {
    FormulaShape {
        depth,
        ..FormulaShape::default()
    }
}

/// Every structure on `n` points over a one-sorted relational signature.
pub fn all_structures(sig: &Arc<Signature>, n: usize) -> Vec<FiniteStructure> {
    let slots: Vec<(usize, Vec<usize>)> = sig
        .relations()
        .iter()
        .enumerate()
        .flat_map(|(r, d)| tuples(&[n], &d.args).map(move |t| (r, t)).collect::<Vec<_>>())
        .collect();
    assert!(slots.len() < 20);
    (0u32..1 << slots.len())
        .map(|bits| {
            let mut m = FiniteStructure::with_sizes(sig.clone(), &[n]).unwrap();
            for (i, (r, t)) in slots.iter().enumerate() {
                if bits >> i & 1 == 1 {
                    m.set_relation(*r, t, true);
                }
            }
            m
        })
        .collect()
}

/// A few h-inductive axioms `forall x, y. premise -> conclusion` with small
/// random sides; about half are h-universal.
pub fn random_theory(rng: &mut impl Rng, sig: &Signature, axioms: usize) -> Theory {
    let ctx = xy();
    let premise_shape = FormulaShape {
        depth: 1,
        max_width: 2,
        term_depth: 0,
        allow_or: false,
        allow_exists: false,
    };
    let conclusion_shape = FormulaShape {
        depth: 1,
        max_width: 2,
        term_depth: 0,
        allow_or: true,
        allow_exists: true,
    };
    let decls = vec![VarDecl::new("x", "elem"), VarDecl::new("y", "elem")];
    let axioms = (0..axioms)
        .map(|_| {
            let premise = random_formula(rng, sig, &ctx, premise_shape);
            let conclusion = if rng.random_bool(0.5) {
                Formula::Bottom
            } else {
                random_formula(rng, sig, &ctx, conclusion_shape)
            };
            HInductiveSentence::new(decls.clone(), premise, conclusion)
        })
        .collect();
    Theory::with_axioms(sig.clone(), axioms)
}

/// A random structure on 1 to `max` points.
pub fn sized(rng: &mut impl Rng, sig: &Arc<Signature>, max: usize, density: f64) -> FiniteStructure {
    let n = rng.random_range(1..=max);
    poslog::gen::random_structure(rng, sig.clone(), &[n], density)
}

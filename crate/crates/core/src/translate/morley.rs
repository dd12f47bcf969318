//! Morleyisation: one new relation symbol per fragment formula, with
//! h-inductive axioms forcing it to agree with the formula.

use std::collections::BTreeMap;

use crate::syntax::{check_theory, Formula, HInductiveSentence, SortContext, Term, Theory, VarDecl};

use super::fo::{FoFormula, FoTheory, Fragment};
use super::TranslateError;

/// The relation standing for one fragment formula, applied to the formula's
/// free variables in name order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MorSymbol {
    pub formula: FoFormula,
    pub relation: String,
    pub args: Vec<VarDecl>,
}

impl MorSymbol {
    pub fn atom(&self) -> Formula {
        Formula::atom(&self.relation, self.args.iter().map(|v| Term::var(&v.name)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Morleyisation {
    /// `Mor(Δ)` followed by the rewritten axioms of the input theory.
    pub theory: Theory,
    pub symbols: Vec<MorSymbol>,
    /// Number of leading axioms that belong to `Mor(Δ)`.
    pub mor_axioms: usize,
}

impl Morleyisation {
    pub fn symbol_for(&self, f: &FoFormula) -> Option<&MorSymbol> {
        self.symbols.iter().find(|s| &s.formula == f)
    }
}

/// Sorts of free variables, pushed from parents to children so that a
/// subformula like `x1 = x2` inherits the sorts its context gives it.
fn contexts(delta: &Fragment, sig: &crate::syntax::Signature) -> Result<Vec<SortContext>, TranslateError> {
    let fs = delta.formulas();
    let base = delta.known_sorts(sig);
    let mut inherited: BTreeMap<&FoFormula, SortContext> = BTreeMap::new();
    let mut out = vec![SortContext::new(); fs.len()];
    for (i, f) in fs.iter().enumerate().rev() {
        let mut known = inherited.get(f).cloned().unwrap_or_default();
        known.extend(base.iter().filter(|(v, _)| !known.iter().any(|(w, _)| w == v)).cloned().collect::<Vec<_>>());
        let ctx = f.free_sorted(sig, &known)?;
        for c in f.children() {
            let mut pass = ctx.clone();
            if let FoFormula::Exists(v, _) = f {
                let s = sig
                    .sort_id(&v.sort)
                    .ok_or_else(|| TranslateError::BadInput(format!("unknown sort {}", v.sort)))?;
                pass.retain(|(w, _)| *w != v.name);
                pass.push((v.name.clone(), s));
            }
            inherited.entry(c).or_insert(pass);
        }
        out[i] = ctx;
    }
    Ok(out)
}

/// `Mor(Δ) ∪ T'`: the fragment's defining axioms, then each axiom
/// `∀x(φ → ψ)` of `t` rewritten as `∀x(R_φ → R_ψ)`. Both `φ` and `ψ` must
/// lie in the fragment.
pub fn morleyise(delta: &Fragment, t: &FoTheory) -> Result<Morleyisation, TranslateError> {
    let mut sig = t.signature.clone();
    let ctxs = contexts(delta, &sig)?;
    let mut symbols = Vec::with_capacity(delta.len());
    for (i, (f, ctx)) in delta.formulas().iter().zip(&ctxs).enumerate() {
        let name = sig.fresh_name(&format!("Mor{i}"));
        sig.add_relation(&name, ctx.iter().map(|(_, s)| *s).collect())?;
        symbols.push(MorSymbol {
            formula: f.clone(),
            relation: name,
            args: ctx.iter().map(|(v, s)| VarDecl::new(v, t.signature.sort_name(*s))).collect(),
        });
    }
    let r = |f: &FoFormula| -> Result<Formula, TranslateError> {
        delta
            .position(f)
            .map(|j| symbols[j].atom())
            .ok_or_else(|| TranslateError::NotInFragment(f.to_string()))
    };
    let mut axioms = Vec::new();
    for s in &symbols {
        let xs = s.args.clone();
        let me = s.atom();
        let both = |axioms: &mut Vec<HInductiveSentence>, def: Formula| {
            axioms.push(HInductiveSentence::new(xs.clone(), def.clone(), me.clone()));
            axioms.push(HInductiveSentence::new(xs.clone(), me.clone(), def));
        };
        match &s.formula {
            FoFormula::Top | FoFormula::Bottom | FoFormula::Atom(..) | FoFormula::Eq(..) => {
                both(&mut axioms, s.formula.skeleton());
            }
            FoFormula::And(ps) => {
                let parts = ps.iter().map(&r).collect::<Result<Vec<_>, _>>()?;
                both(&mut axioms, Formula::conj(parts));
            }
            FoFormula::Or(ps) => {
                let parts = ps.iter().map(&r).collect::<Result<Vec<_>, _>>()?;
                both(&mut axioms, Formula::disj(parts));
            }
            FoFormula::Exists(v, body) => {
                both(&mut axioms, Formula::exists(vec![v.clone()], r(body)?));
            }
            FoFormula::Not(p) => {
                let rp = r(p)?;
                axioms.push(HInductiveSentence::new(xs.clone(), Formula::Top, Formula::Or(vec![me.clone(), rp.clone()])));
                axioms.push(HInductiveSentence::new(xs.clone(), Formula::And(vec![me.clone(), rp]), Formula::Bottom));
            }
        }
    }
    let mor_axioms = axioms.len();
    for ax in &t.axioms {
        axioms.push(HInductiveSentence::new(ax.universals.clone(), r(&ax.premise)?, r(&ax.conclusion)?));
    }
    let theory = Theory::with_axioms(sig, axioms);
    check_theory(&theory).map_err(|(i, e)| TranslateError::BadInput(format!("axiom {i}: {e}")))?;
    Ok(Morleyisation {
        theory,
        symbols,
        mor_axioms,
    })
}

//! Full first-order evaluation, kept to the test surface: it is the oracle
//! for Morleyisation and nothing outside tests can reach it.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fo::{FoAxiom, FoFormula, FoTheory, Fragment};
use super::morley::morleyise;
use crate::model::{check_model, compile, tuples, FiniteStructure};
use crate::search::{all_models, SearchProblem};
use crate::syntax::{Formula, HInductiveSentence, Signature, SortId, Term, Theory, VarDecl};

pub(crate) fn fo_eval(m: &FiniteStructure, f: &FoFormula, env: &mut BTreeMap<String, (SortId, usize)>) -> bool {
    match f {
        FoFormula::Top => true,
        FoFormula::Bottom => false,
        FoFormula::Atom(..) | FoFormula::Eq(..) => {
            let g = f.skeleton();
            let vars = g.free_vars();
            let ctx: Vec<(String, SortId)> = vars.iter().map(|v| (v.clone(), env[v].0)).collect();
            let a: Vec<usize> = vars.iter().map(|v| env[v].1).collect();
            compile(&g, m.signature(), &ctx).unwrap().eval(m, &a)
        }
        FoFormula::Not(p) => !fo_eval(m, p, env),
        FoFormula::And(ps) => ps.iter().all(|p| fo_eval(m, p, env)),
        FoFormula::Or(ps) => ps.iter().any(|p| fo_eval(m, p, env)),
        FoFormula::Exists(v, p) => {
            let s = m.signature().sort_id(&v.sort).unwrap();
            let saved = env.get(&v.name).copied();
            let mut found = false;
            for e in 0..m.size(s) {
                env.insert(v.name.clone(), (s, e));
                if fo_eval(m, p, env) {
                    found = true;
                    break;
                }
            }
            match saved {
                Some(x) => env.insert(v.name.clone(), x),
                None => env.remove(&v.name),
            };
            found
        }
    }
}

fn sig() -> Signature {
    let mut s = Signature::single_sorted("elem");
    s.add_relation("P", vec![SortId(0)]).unwrap();
    s.add_relation("E", vec![SortId(0), SortId(0)]).unwrap();
    s
}

fn x(n: &str) -> Term {
    Term::var(n)
}

fn p(t: &str) -> FoFormula {
    FoFormula::Atom("P".into(), vec![x(t)])
}

fn e(a: &str, b: &str) -> FoFormula {
    FoFormula::Atom("E".into(), vec![x(a), x(b)])
}

fn empty() -> FoTheory {
    FoTheory {
        signature: sig(),
        axioms: vec![],
    }
}

#[test]
fn atomic_clause() {
    let mor = morleyise(&Fragment::closure([p("x")]), &empty()).unwrap();
    let shown: Vec<String> = mor.theory.axioms.iter().map(|a| a.to_string()).collect();
    assert_eq!(shown, vec!["forall x:elem. P(x) -> Mor0(x)", "forall x:elem. Mor0(x) -> P(x)"]);
}

#[test]
fn negation_clause() {
    let mor = morleyise(&Fragment::closure([FoFormula::not(p("x"))]), &empty()).unwrap();
    let shown: Vec<String> = mor.theory.axioms[2..].iter().map(|a| a.to_string()).collect();
    assert_eq!(
        shown,
        vec!["forall x:elem. true -> Mor1(x) | Mor0(x)", "forall x:elem. Mor1(x) & Mor0(x) -> false"]
    );
}

#[test]
fn existential_clause() {
    let f = FoFormula::exists(VarDecl::new("y", "elem"), e("x", "y"));
    let mor = morleyise(&Fragment::closure([f]), &empty()).unwrap();
    let shown: Vec<String> = mor.theory.axioms[2..].iter().map(|a| a.to_string()).collect();
    assert_eq!(
        shown,
        vec![
            "forall x:elem. exists y:elem. Mor0(x, y) -> Mor1(x)",
            "forall x:elem. Mor1(x) -> exists y:elem. Mor0(x, y)"
        ]
    );
}

#[test]
fn theory_axioms_are_rewritten() {
    let t = FoTheory {
        signature: sig(),
        axioms: vec![FoAxiom {
            universals: vec![VarDecl::new("x", "elem")],
            premise: p("x"),
            conclusion: FoFormula::not(FoFormula::exists(VarDecl::new("y", "elem"), e("x", "y"))),
        }],
    };
    let delta = Fragment::default().with_theory(&t);
    let mor = morleyise(&delta, &t).unwrap();
    let last = mor.theory.axioms.last().unwrap();
    assert_eq!(last.to_string(), "forall x:elem. Mor0(x) -> Mor3(x)");
    assert_eq!(mor.theory.axioms.len(), mor.mor_axioms + 1);
    assert!(matches!(
        morleyise(&Fragment::closure([p("x")]), &t),
        Err(super::TranslateError::NotInFragment(_))
    ));
}

#[test]
fn fragment_constructors() {
    let s = sig();
    let qf = Fragment::qf(&s);
    let shown: Vec<String> = qf.formulas().iter().map(|f| f.to_string()).collect();
    assert_eq!(shown, vec!["x1 = x2", "P(x1)", "E(x1, x2)", "~x1 = x2", "~P(x1)", "~E(x1, x2)"]);
    assert!(Fragment::new(vec![FoFormula::not(p("x"))]).is_err());
    assert!(Fragment::new(vec![p("x"), FoFormula::not(p("x"))]).is_ok());
    let d1 = Fragment::depth(&s, 1).unwrap();
    assert!(d1.formulas().iter().any(|f| f.to_string() == "~(exists x2:elem. E(x1, x2))"));
    assert!(d1.formulas().iter().all(|f| f.quantifier_depth() <= 1));
}

fn random_fo(rng: &mut ChaCha8Rng, depth: usize, vars: &[&str]) -> FoFormula {
    let pick = |rng: &mut ChaCha8Rng| vars[rng.random_range(0..vars.len())];
    if depth == 0 || rng.random_range(0..4) == 0 {
        return match rng.random_range(0..3) {
            0 => p(pick(rng)),
            1 => e(pick(rng), pick(rng)),
            _ => FoFormula::Eq(x(pick(rng)), x(pick(rng))),
        };
    }
    match rng.random_range(0..4) {
        0 => FoFormula::not(random_fo(rng, depth - 1, vars)),
        1 => FoFormula::And(vec![random_fo(rng, depth - 1, vars), random_fo(rng, depth - 1, vars)]),
        2 => FoFormula::Or(vec![random_fo(rng, depth - 1, vars), random_fo(rng, depth - 1, vars)]),
        _ => {
            let v = ["x", "y", "z"][rng.random_range(0..3)];
            FoFormula::exists(VarDecl::new(v, "elem"), random_fo(rng, depth - 1, vars))
        }
    }
}

fn random_structure(rng: &mut ChaCha8Rng, n: usize) -> FiniteStructure {
    let mut m = FiniteStructure::with_sizes(Arc::new(sig()), &[n]).unwrap();
    for a in 0..n {
        m.set_relation(0, &[a], rng.random_bool(0.5));
        for b in 0..n {
            m.set_relation(1, &[a, b], rng.random_bool(0.4));
        }
    }
    m
}

/// Agreement of every `R_φ` with `φ`, for all assignments of its variables.
fn agrees(m: &FiniteStructure, mor: &super::Morleyisation) -> Result<(), String> {
    for s in &mor.symbols {
        let r = m.signature().relation_index(&s.relation).unwrap();
        let sorts = vec![SortId(0); s.args.len()];
        for a in tuples(&m.sizes(), &sorts) {
            let mut env: BTreeMap<String, (SortId, usize)> =
                s.args.iter().zip(&a).map(|(v, &e)| (v.name.clone(), (SortId(0), e))).collect();
            if fo_eval(m, &s.formula, &mut env) != m.holds(r, &a) {
                return Err(format!("{} at {a:?}", s.formula));
            }
        }
    }
    Ok(())
}

#[test]
fn expansions_by_truth_sets_are_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let delta = Fragment::closure((0..2).map(|_| random_fo(&mut rng, 2, &["x", "y"])));
        let mor = morleyise(&delta, &empty()).unwrap();
        let ext = Arc::new(mor.theory.signature.clone());
        for n in 1..=3 {
            let m = random_structure(&mut rng, n);
            let mut big = m.expansion(ext.clone()).unwrap();
            for s in &mor.symbols {
                let r = ext.relation_index(&s.relation).unwrap();
                for a in tuples(&[n], &vec![SortId(0); s.args.len()]) {
                    let mut env = s.args.iter().zip(&a).map(|(v, &e)| (v.name.clone(), (SortId(0), e))).collect();
                    big.set_relation(r, &a, fo_eval(&m, &s.formula, &mut env));
                }
            }
            assert_eq!(check_model(&big, &mor.theory).unwrap(), None, "{:?}", delta.formulas());
        }
    }
}

#[test]
fn models_of_the_morleyisation_interpret_formulas_correctly() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..15 {
        let delta = Fragment::closure([random_fo(&mut rng, 2, &["x", "y"])]);
        let mor = morleyise(&delta, &empty()).unwrap();
        let models = all_models(&SearchProblem::new(mor.theory.clone(), 3)).unwrap();
        assert!(!models.is_empty());
        for n in models {
            agrees(&n.model, &mor).unwrap();
        }
    }
}

#[test]
fn positive_theories_morleyise_to_equivalent_ones() {
    let t = Theory::with_axioms(
        sig(),
        vec![HInductiveSentence::new(
            vec![VarDecl::new("x", "elem")],
            Formula::atom("P", vec![x("x")]),
            Formula::exists(vec![VarDecl::new("y", "elem")], Formula::atom("E", vec![x("x"), x("y")])),
        )],
    );
    let fo = FoTheory::from(&t);
    let mor = morleyise(&Fragment::default().with_theory(&fo), &fo).unwrap();
    let models = all_models(&SearchProblem::new(mor.theory.clone(), 2).without_symmetry_breaking()).unwrap();
    for n in &models {
        agrees(&n.model, &mor).unwrap();
        let base = n.model.reduct(Arc::new(sig())).unwrap();
        assert_eq!(check_model(&base, &t).unwrap(), None);
    }
}

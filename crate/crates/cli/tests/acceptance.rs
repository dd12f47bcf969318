//! Acceptance criteria 1–10. Each criterion prints one PASS/FAIL line with
//! its measured time against a pinned limit; the test fails if any line does.

mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use poslog::analysis::{amalgamate, continue_to_pc, pc_check};
use poslog::classify::{rank, rank_via_tree, RankQuery};
use poslog::gen::{random_formula, random_grid, random_structure, FormulaShape};
use poslog::io::{parse_formula_with, parse_rules, parse_structure, parse_theory, span_from_json, SourceFile};
use poslog::model::{
    check_model, class_structure, compile, eval, lift_automorphism, quotient_heq, tuples, EquivSpec, FiniteStructure,
};
use poslog::morphism::{
    automorphisms, check_immersion, find_homomorphisms, find_isomorphism, is_homomorphism, FormulaPool, StructureMap,
};
use poslog::search::{enumerate_models, SearchProblem, Status};
use poslog::syntax::{canonicalize, to_prenex_existential, to_regular_disjunction, Formula, Signature, SortId, Term, Theory, VarDecl};
use poslog::translate::{
    cont_to_pos, cont_translate, morleyise, qe_eliminate, qe_verify, ContFormula, FoFormula, FoTheory, Fragment, GridStructure,
};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn corpus_file(name: &str) -> SourceFile {
    SourceFile::read(&common::corpus().join(name)).unwrap()
}

fn theory(name: &str) -> Theory {
    parse_theory(&corpus_file(name)).unwrap()
}

fn structure(name: &str, t: &Theory) -> FiniteStructure {
    parse_structure(&corpus_file(name), Arc::new(t.signature.clone())).unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn one_sort(rels: &[(&str, usize)]) -> Arc<Signature> {
    let mut sig = Signature::single_sorted("elem");
    for &(r, n) in rels {
        sig.add_relation(r, vec![SortId(0); n]).unwrap();
    }
    Arc::new(sig)
}

/// A random structure on 1 to `max` points.
fn sized(rng: &mut impl Rng, sig: &Arc<Signature>, max: usize, density: f64) -> FiniteStructure {
    let n = rng.random_range(1..=max);
    random_structure(rng, sig.clone(), &[n], density)
}

fn xy() -> Vec<(String, SortId)> {
    vec![("x".into(), SortId(0)), ("y".into(), SortId(0))]
}

/// Every structure on `n` points for a one-sorted relational signature, in
/// the order of the bits of a counter over all relation tuples.
fn all_structures(sig: &Arc<Signature>, n: usize) -> Vec<FiniteStructure> {
    let slots: Vec<(usize, Vec<usize>)> = sig
        .relations()
        .iter()
        .enumerate()
        .flat_map(|(r, d)| tuples(&[n], &d.args).map(move |t| (r, t)).collect::<Vec<_>>())
        .collect();
    assert!(slots.len() < 20, "too many structures");
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

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Binary relations on `n` points up to isomorphism, as adjacency bitmasks.
fn digraphs_up_to_iso(n: usize) -> Vec<u32> {
    let perms = permutations(n);
    let image = |bits: u32, p: &[usize]| {
        let mut out = 0u32;
        for a in 0..n {
            for b in 0..n {
                if bits >> (a * n + b) & 1 == 1 {
                    out |= 1 << (p[a] * n + p[b]);
                }
            }
        }
        out
    };
    (0u32..1 << (n * n))
        .filter(|&bits| perms.iter().all(|p| image(bits, p) >= bits))
        .collect()
}

fn digraph(sig: &Arc<Signature>, n: usize, bits: u32) -> FiniteStructure {
    let mut m = FiniteStructure::with_sizes(sig.clone(), &[n]).unwrap();
    for a in 0..n {
        for b in 0..n {
            if bits >> (a * n + b) & 1 == 1 {
                m.set_relation(0, &[a, b], true);
            }
        }
    }
    m
}

// ---------------------------------------------------------------- 1

fn criterion_1() -> Outcome {
    let t = theory("empty.pth");
    let pool = FormulaPool::new(2, 12);
    let v = pc_check(&t, &structure("singleton.pstruct", &t), &pool, 3).map_err(|e| e.to_string())?;
    ensure(v.status == Status::Holds, || format!("singleton: {:?}", v.status))?;
    for n in 2..=4 {
        let m = structure(&format!("pure{n}.pstruct"), &t);
        let v = pc_check(&t, &m, &pool, 3).map_err(|e| e.to_string())?;
        ensure(v.status == Status::Fails, || format!("size {n}: {:?}", v.status))?;
        let w = v.witness.ok_or("no witness")?;
        let is_xy = matches!(&w.case.formula, Formula::Eq(Term::Var(a), Term::Var(b)) if a != b);
        ensure(is_xy, || format!("size {n}: witness {}", w.case.formula))?;
    }
    Ok("singleton Holds; sizes 2-4 Fail on x = y".into())
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Outcome {
    let t = theory("distinct3.pth");
    let consts = structure("consts.pstruct", &t);
    let plus1 = structure("plus1.pstruct", &t);
    let pool = FormulaPool::new(2, 12);
    ensure(check_model(&consts, &t).unwrap().is_none(), || "consts is not a model".into())?;
    ensure(check_model(&plus1, &t).unwrap().is_none(), || "plus1 is not a model".into())?;
    let v = pc_check(&t, &consts, &pool, 4).map_err(|e| e.to_string())?;
    ensure(v.status == Status::Holds, || format!("consts: {:?}", v.status))?;
    let v = pc_check(&t, &plus1, &pool, 4).map_err(|e| e.to_string())?;
    ensure(v.status == Status::Fails, || format!("plus1: {:?}", v.status))?;

    let c = continue_to_pc(&t, &plus1, &pool, 4, 8).map_err(|e| e.to_string())?;
    ensure(c.stalled.is_none(), || format!("continuation stalled: {:?}", c.stalled))?;
    ensure(c.model.total_size() == 3, || format!("continued model has {} elements", c.model.total_size()))?;
    let star = plus1.elem_index(SortId(0), "star").ok_or("no star")?;
    let image = c.map.at(SortId(0), star);
    let on_constant = (0..3).any(|k| c.model.constant(k) == image);
    ensure(on_constant, || "star is not sent to a constant".into())?;

    let mut load = |p: &str| -> Result<FiniteStructure, String> { Ok(structure(p, &t)) };
    let v: serde_json::Value = serde_json::from_str(&corpus_file("span.json").text).unwrap();
    let span = span_from_json(&v, &mut load).map_err(|e| e.to_string())?;
    for k in 1..=6 {
        let v = amalgamate(&t, &span.m0, &span.m1, &span.f, &span.m2, &span.g, k).map_err(|e| e.to_string())?;
        ensure(v.status == Status::UnknownAtBound, || format!("k = {k}: {:?}", v.status))?;
        ensure(v.refutation.is_some(), || format!("k = {k}: no ground refutation"))?;
    }
    Ok("pc split, one-step collapse, span refuted for k = 1..6".into())
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    let plain = theory("disjointP.pth");
    let inhabited = theory("disjointP_pc.pth");
    let rules = parse_rules(&corpus_file("disjointP.rules"), &plain.signature).map_err(|e| e.to_string())?;
    let ctx = vec![("x".to_string(), SortId(0)), ("z".to_string(), SortId(0))];
    let parse = |s: &str| parse_formula_with(&SourceFile::new("<test>", s), &plain.signature, &ctx).unwrap();

    let cases = [
        (&plain, "exists y. y = x & P0(y)", "P0(x)"),
        (&plain, "exists y. P0(y) & P1(y) & P0(x)", "false"),
        (&inhabited, "exists y. P0(y) & P1(x)", "P1(x)"),
    ];
    for (t, src, want) in cases {
        let f = parse(src);
        let got = qe_eliminate(&rules, &f).map_err(|e| e.to_string())?;
        ensure(canonicalize(&got) == canonicalize(&parse(want)), || format!("{src}: got {got}"))?;
        let v = qe_verify(t, &f, &got, 4).map_err(|e| e.to_string())?;
        ensure(v.status == Status::Holds, || format!("{src}: verify {:?}", v.status))?;
    }

    // Dropping an inhabitation claim is unsound without the axioms that make it true.
    let unsound = qe_verify(&plain, &parse("exists y. P0(y)"), &Formula::Top, 4).map_err(|e| e.to_string())?;
    ensure(unsound.status == Status::Fails, || "an unsound elimination was not separated".into())?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shape = FormulaShape {
        depth: 2,
        max_width: 3,
        term_depth: 0,
        allow_or: false,
        allow_exists: true,
    };
    let mut quantified = 0;
    for i in 0..50 {
        let f = random_formula(&mut rng, &inhabited.signature, &ctx, shape);
        quantified += usize::from(!f.is_quantifier_free());
        let got = qe_eliminate(&rules, &f).map_err(|e| format!("random {i} `{f}`: {e}"))?;
        let v = qe_verify(&inhabited, &f, &got, 4).map_err(|e| e.to_string())?;
        ensure(v.status == Status::Holds, || format!("random {i} `{f}` -> `{got}`: {:?}", v.status))?;
    }
    Ok(format!("3 rule cases; 50 random ({quantified} with quantifiers) verified at k = 4"))
}

// ---------------------------------------------------------------- 4

/// Plain recursive first-order satisfaction, independent of the library's
/// evaluator.
fn fo_holds(m: &FiniteStructure, f: &FoFormula, env: &mut BTreeMap<String, usize>) -> bool {
    let sig = m.signature();
    let term = |t: &Term, env: &BTreeMap<String, usize>| -> usize {
        match t {
            Term::Var(v) => env[v],
            Term::Const(c) => m.constant(sig.constant_index(c).unwrap()),
            Term::App(..) => panic!("relational signature"),
        }
    };
    match f {
        FoFormula::Top => true,
        FoFormula::Bottom => false,
        FoFormula::Atom(r, args) => {
            let a: Vec<usize> = args.iter().map(|t| term(t, env)).collect();
            m.holds(sig.relation_index(r).unwrap(), &a)
        }
        FoFormula::Eq(a, b) => term(a, env) == term(b, env),
        FoFormula::Not(p) => !fo_holds(m, p, env),
        FoFormula::And(ps) => ps.iter().all(|p| fo_holds(m, p, env)),
        FoFormula::Or(ps) => ps.iter().any(|p| fo_holds(m, p, env)),
        FoFormula::Exists(v, body) => {
            let s = sig.sort_id(&v.sort).unwrap();
            let saved = env.get(&v.name).copied();
            let mut found = false;
            for e in 0..m.size(s) {
                env.insert(v.name.clone(), e);
                if fo_holds(m, body, env) {
                    found = true;
                    break;
                }
            }
            match saved {
                Some(e) => env.insert(v.name.clone(), e),
                None => env.remove(&v.name),
            };
            found
        }
    }
}

fn random_fo(rng: &mut impl Rng, scope: &mut Vec<String>, depth: usize, next: &mut usize) -> FoFormula {
    if depth == 0 || rng.random_range(0..4) == 0 {
        let mut pick = || Term::var(&scope[rng.random_range(0..scope.len())]);
        let (a, b) = (pick(), pick());
        return if rng.random_range(0..3) == 0 {
            FoFormula::Eq(a, b)
        } else {
            FoFormula::Atom("R".into(), vec![a, b])
        };
    }
    match rng.random_range(0..4) {
        0 => FoFormula::not(random_fo(rng, scope, depth - 1, next)),
        1 => FoFormula::And(vec![random_fo(rng, scope, depth - 1, next), random_fo(rng, scope, depth - 1, next)]),
        2 => FoFormula::Or(vec![random_fo(rng, scope, depth - 1, next), random_fo(rng, scope, depth - 1, next)]),
        _ => {
            let y = format!("z{next}");
            *next += 1;
            scope.push(y.clone());
            let body = random_fo(rng, scope, depth - 1, next);
            scope.pop();
            FoFormula::exists(VarDecl::new(&y, "elem"), body)
        }
    }
}

/// Points where an expansion's `R_φ` disagrees with the oracle on `φ`.
fn morley_discrepancies(n: &FiniteStructure, symbols: &[poslog::translate::MorSymbol]) -> usize {
    let sig = n.signature();
    let mut bad = 0;
    for s in symbols {
        let r = sig.relation_index(&s.relation).unwrap();
        let sorts: Vec<SortId> = s.args.iter().map(|v| sig.sort_id(&v.sort).unwrap()).collect();
        for a in tuples(&n.sizes(), &sorts) {
            let mut env: BTreeMap<String, usize> = s.args.iter().map(|v| v.name.clone()).zip(a.iter().copied()).collect();
            if n.holds(r, &a) != fo_holds(n, &s.formula, &mut env) {
                bad += 1;
            }
        }
    }
    bad
}

fn criterion_4() -> Outcome {
    let sig = one_sort(&[("R", 2)]);
    let base = FoTheory::from(&Theory::new((*sig).clone()));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked_models = 0;
    let mut points = 0;
    for case in 0..200 {
        let mut next = 0;
        let k = rng.random_range(1..=2);
        let roots: Vec<FoFormula> = (0..k)
            .map(|_| random_fo(&mut rng, &mut vec!["x1".into(), "x2".into()], 2, &mut next))
            .collect();
        let delta = Fragment::closure(roots);
        let mor = morleyise(&delta, &base).map_err(|e| format!("case {case}: {e}"))?;
        let msig = Arc::new(mor.theory.signature.clone());

        // The oracle's expansion of a random structure is a model of Mor(Δ).
        let n = rng.random_range(1..=3);
        let m = random_structure(&mut rng, sig.clone(), &[n], 0.4);
        let mut expanded = m.expansion(msig.clone()).unwrap();
        for s in &mor.symbols {
            let r = msig.relation_index(&s.relation).unwrap();
            let sorts: Vec<SortId> = s.args.iter().map(|v| msig.sort_id(&v.sort).unwrap()).collect();
            for a in tuples(&[n], &sorts) {
                let mut env = s.args.iter().map(|v| v.name.clone()).zip(a.iter().copied()).collect();
                expanded.set_relation(r, &a, fo_holds(&m, &s.formula, &mut env));
            }
        }
        if let Some(c) = check_model(&expanded, &mor.theory).unwrap() {
            return Err(format!("case {case}: oracle expansion violates axiom {}", c.axiom));
        }

        // Every model of Mor(Δ) of that size interprets R_φ as φ.
        let mut p = SearchProblem::new(mor.theory.clone(), n);
        p.min_sizes = vec![n];
        let mut bad = 0;
        let mut seen = 0;
        enumerate_models(&p, |fm| {
            bad += morley_discrepancies(&fm.model, &mor.symbols);
            seen += 1;
            seen < 64
        })
        .map_err(|e| e.to_string())?;
        ensure(bad == 0, || format!("case {case}: {bad} discrepancies"))?;
        ensure(seen > 0, || format!("case {case}: no model of size {n}"))?;
        checked_models += seen;
        points += mor.symbols.len();
    }
    Ok(format!("200 cases, {points} symbols, {checked_models} models, 0 discrepancies"))
}

// ---------------------------------------------------------------- 5

/// Rank over subsets of a single-variable sort, straight from the recursive
/// definition.
fn brute_rank(s: u32, phi: &[u32], psi: &[u32], memo: &mut BTreeMap<u32, i64>) -> i64 {
    if s == 0 {
        return -1;
    }
    if let Some(&r) = memo.get(&s) {
        return r;
    }
    let mut best = 0;
    for (p, q) in phi.iter().zip(psi) {
        let (l, r) = (s & p, s & q);
        if l != 0 && r != 0 {
            best = best.max(1 + brute_rank(l, phi, psi, memo).min(brute_rank(r, phi, psi, memo)));
        }
    }
    memo.insert(s, best);
    best
}

/// `phi(M, b)` as a bitmask over `x`, for each `b`.
fn slices(m: &FiniteStructure, f: &Formula) -> Vec<u32> {
    let c = compile(f, m.signature(), &xy()).unwrap();
    let n = m.size(SortId(0));
    (0..n)
        .map(|b| (0..n).filter(|&a| c.eval(m, &[a, b])).fold(0, |acc, a| acc | 1 << a))
        .collect()
}

fn criterion_5() -> Outcome {
    let sig = one_sort(&[("D", 2)]);
    let x = vec![("x".to_string(), SortId(0))];
    let y = vec![("y".to_string(), SortId(0))];
    let pool: Vec<Formula> = FormulaPool::new(1, 5)
        .formulas_in(&sig, &xy())
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|p| p.formula)
        .filter(|f| !matches!(f, Formula::Top | Formula::Bottom))
        .collect();

    // The derived value on the inequality structure.
    let t = theory("neq.pth");
    let neq3 = structure("neq3.pstruct", &t);
    let q = RankQuery {
        ambient: neq3.clone(),
        x: x.clone(),
        y: y.clone(),
        phi: Formula::eq(Term::var("x"), Term::var("y")),
        psi: Formula::atom("D", vec![Term::var("x"), Term::var("y")]),
        sigma: vec![Formula::Top],
    };
    let r = rank(&q).map_err(|e| e.to_string())?;
    let brute = brute_rank(0b111, &slices(&neq3, &q.phi), &slices(&neq3, &q.psi), &mut BTreeMap::new());
    ensure(r == 1 && brute == 1, || format!("rank(=, D) on neq3: {r}, brute force {brute}"))?;

    let mut ambients = 0;
    let mut queries = 0;
    for n in 1..=4 {
        for bits in digraphs_up_to_iso(n) {
            let m = digraph(&sig, n, bits);
            ambients += 1;
            let tables: Vec<Vec<u32>> = pool.iter().map(|f| slices(&m, f)).collect();
            for i in 0..pool.len() {
                for j in i + 1..pool.len() {
                    if tables[i].iter().zip(&tables[j]).any(|(a, b)| a & b != 0) {
                        continue;
                    }
                    let q = RankQuery {
                        ambient: m.clone(),
                        x: x.clone(),
                        y: y.clone(),
                        phi: pool[i].clone(),
                        psi: pool[j].clone(),
                        sigma: vec![Formula::Top],
                    };
                    let r = rank(&q).map_err(|e| e.to_string())?;
                    let brute = brute_rank((1 << n) - 1, &tables[i], &tables[j], &mut BTreeMap::new());
                    ensure(r == brute, || format!("{} / {} on {bits:#x}: rank {r}, brute force {brute}", pool[i], pool[j]))?;
                    for k in 0..=3 {
                        let tree = rank_via_tree(&q, k).map_err(|e| e.to_string())?;
                        ensure(tree == (r >= k as i64), || {
                            format!("{} / {} on {bits:#x}: rank {r} but tree of height {k} {tree}", pool[i], pool[j])
                        })?;
                    }
                    queries += 1;
                }
            }
        }
    }
    Ok(format!("rank(=, D) = 1 on neq3; {ambients} ambients, {} pool formulas, {queries} contradictory pairs", pool.len()))
}

// ---------------------------------------------------------------- 6

/// Formulas inside the translatable fragment: truncated subtraction always
/// has a constant side, and no `inf` sits under a lower bound.
fn random_cont(rng: &mut impl Rng, voc: &[(String, usize)], vars: &mut Vec<String>, depth: usize, lower: bool, next: &mut usize) -> ContFormula {
    let g = 8;
    if depth == 0 || rng.random_range(0..4) == 0 {
        if rng.random_range(0..6) == 0 {
            return ContFormula::constant(rng.random_range(0..=g), g);
        }
        let (s, a) = &voc[rng.random_range(0..voc.len())];
        let args = (0..*a).map(|_| vars[rng.random_range(0..vars.len())].clone()).collect();
        return ContFormula::Sym(s.clone(), args);
    }
    let c = ContFormula::constant(rng.random_range(0..=g), g);
    match rng.random_range(0..5) {
        0 => ContFormula::max(random_cont(rng, voc, vars, depth - 1, lower, next), random_cont(rng, voc, vars, depth - 1, lower, next)),
        1 => ContFormula::min(random_cont(rng, voc, vars, depth - 1, lower, next), random_cont(rng, voc, vars, depth - 1, lower, next)),
        2 => ContFormula::dot(random_cont(rng, voc, vars, depth - 1, lower, next), c),
        3 => ContFormula::dot(c, random_cont(rng, voc, vars, depth - 1, true, next)),
        _ if lower => ContFormula::max(random_cont(rng, voc, vars, depth - 1, lower, next), c),
        _ => {
            let y = format!("w{next}");
            *next += 1;
            vars.push(y.clone());
            let body = random_cont(rng, voc, vars, depth - 1, lower, next);
            vars.pop();
            ContFormula::inf(&y, body)
        }
    }
}

fn zero_set_agrees(g: &GridStructure, f: &ContFormula) -> Result<usize, String> {
    let tr = cont_translate(f, &g.vocabulary()).map_err(|e| format!("{f}: {e}"))?;
    let pos = cont_to_pos(g, &tr.thresholds).map_err(|e| e.to_string())?;
    let n = g.carrier().len();
    let mut points = 0;
    for u in 0..n {
        for v in 0..n {
            let mut env = BTreeMap::from([("u".to_string(), u), ("v".to_string(), v)]);
            let zero = g.eval(f, &mut env).map_err(|e| e.to_string())? == Ratio::from_integer(0);
            let sat = eval(&pos, &tr.formula, &env).map_err(|e| e.to_string())?;
            if zero != sat {
                return Err(format!("{f} at u={u}, v={v}: zero {zero}, translation {sat}"));
            }
            points += 1;
        }
    }
    Ok(points)
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut points = 0;
    let mut formulas = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=5);
        let g = random_grid(&mut rng, n, 8, &[("P", 1), ("R", 2)]);
        let voc: Vec<(String, usize)> = g.vocabulary().into_iter().collect();
        // One formula per clause shape, then random mixtures.
        let mut fs = vec![
            ContFormula::max(ContFormula::sym("P", &["u"]), ContFormula::sym("R", &["u", "v"])),
            ContFormula::min(ContFormula::sym("P", &["u"]), ContFormula::sym("d", &["u", "v"])),
            ContFormula::inf("w", ContFormula::max(ContFormula::sym("R", &["u", "w"]), ContFormula::sym("P", &["w"]))),
            ContFormula::dot(ContFormula::sym("R", &["u", "v"]), ContFormula::constant(rng.random_range(0..=8), 8)),
            ContFormula::dot(ContFormula::constant(rng.random_range(0..=8), 8), ContFormula::sym("P", &["v"])),
            ContFormula::constant(rng.random_range(0..=8), 8),
        ];
        for _ in 0..4 {
            fs.push(random_cont(&mut rng, &voc, &mut vec!["u".into(), "v".into()], 3, false, &mut 0));
        }
        for f in &fs {
            points += zero_set_agrees(&g, f)?;
            formulas += 1;
        }
    }
    Ok(format!("200 grids, {formulas} formulas, {points} points, exact"))
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Outcome {
    let sig = one_sort(&[("R", 2)]);
    let structures: Vec<FiniteStructure> = (1..=3).flat_map(|n| all_structures(&sig, n)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let shape = FormulaShape {
        depth: 3,
        max_width: 3,
        term_depth: 0,
        allow_or: true,
        allow_exists: true,
    };
    let ctx = xy();
    let mut evaluations = 0usize;
    for i in 0..300 {
        let f = random_formula(&mut rng, &sig, &ctx, shape);
        let prenex = to_prenex_existential(&f);
        let regular = to_regular_disjunction(&f).map_err(|e| format!("{f}: {e}"))?;
        let cf = compile(&f, &sig, &ctx).map_err(|e| e.to_string())?;
        let cp = compile(&prenex, &sig, &ctx).map_err(|e| format!("prenex of {f}: {e}"))?;
        let cr = compile(&regular, &sig, &ctx).map_err(|e| format!("regular form of {f}: {e}"))?;
        for m in &structures {
            let n = m.size(SortId(0));
            for a in tuples(&[n], &[SortId(0), SortId(0)]) {
                let want = cf.eval(m, &a);
                ensure(cp.eval(m, &a) == want, || format!("formula {i} `{f}`: prenex `{prenex}` differs at {a:?}"))?;
                ensure(cr.eval(m, &a) == want, || format!("formula {i} `{f}`: regular `{regular}` differs at {a:?}"))?;
                evaluations += 1;
            }
        }
    }
    Ok(format!("300 formulas x {} structures, {evaluations} points", structures.len()))
}

// ---------------------------------------------------------------- 8

fn disjoint_union(a: &FiniteStructure, b: &FiniteStructure) -> FiniteStructure {
    let sig = a.signature_arc().clone();
    let (na, nb) = (a.size(SortId(0)), b.size(SortId(0)));
    let mut m = FiniteStructure::with_sizes(sig.clone(), &[na + nb]).unwrap();
    for r in 0..sig.relations().len() {
        for t in a.relation_tuples(r) {
            m.set_relation(r, &t, true);
        }
        for t in b.relation_tuples(r) {
            let shifted: Vec<usize> = t.iter().map(|e| e + na).collect();
            m.set_relation(r, &shifted, true);
        }
    }
    m
}

/// `a` included into `a ⊔ b`, where `b` maps homomorphically onto part of
/// `a`; the folding map is a retraction, so the inclusion is an immersion.
fn retract_extension(rng: &mut impl Rng, a: &FiniteStructure) -> (FiniteStructure, StructureMap) {
    let sig = a.signature_arc().clone();
    let na = a.size(SortId(0));
    let nb = rng.random_range(1..=2);
    let h: Vec<usize> = (0..nb).map(|_| rng.random_range(0..na)).collect();
    let mut b = FiniteStructure::with_sizes(sig.clone(), &[nb]).unwrap();
    for (r, d) in sig.relations().iter().enumerate() {
        for t in tuples(&[nb], &d.args) {
            let image: Vec<usize> = t.iter().map(|&e| h[e]).collect();
            if a.holds(r, &image) && rng.random_bool(0.7) {
                b.set_relation(r, &t, true);
            }
        }
    }
    let u = disjoint_union(a, &b);
    let fold = StructureMap::from_total(vec![(0..na).chain(h.iter().copied()).collect()]);
    assert!(is_homomorphism(&u, a, &fold));
    (u, StructureMap::from_total(vec![(0..na).collect()]))
}

fn criterion_8() -> Outcome {
    let sig = one_sort(&[("P", 1), ("R", 2)]);
    let pool = FormulaPool::new(2, 12);
    let formulas = pool.formulas(&sig).map_err(|e| e.to_string())?;
    let compiled: Vec<_> = formulas.iter().map(|p| (compile(&p.formula, &sig, &p.free).unwrap(), p.free_sorts())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut homs = 0;
    for i in 0..100 {
        let a = sized(&mut rng, &sig, 4, 0.3);
        let b = sized(&mut rng, &sig, 4, 0.6);
        for f in find_homomorphisms(&a, &b, &StructureMap::empty(&a), 32) {
            homs += 1;
            for (c, sorts) in &compiled {
                for t in tuples(&a.sizes(), sorts) {
                    let image = f.apply_tuple(sorts, &t).unwrap();
                    ensure(!c.eval(&a, &t) || c.eval(&b, &image), || format!("pair {i}: a pool formula is not preserved"))?;
                }
            }
        }
    }
    ensure(homs > 0, || "no homomorphisms found".into())?;

    // Composites of immersions are immersions; and when the composite is
    // one, so is its first factor.
    let mut composites = 0;
    for i in 0..50 {
        let a = sized(&mut rng, &sig, 3, 0.4);
        let (b, f) = retract_extension(&mut rng, &a);
        let (c, g) = retract_extension(&mut rng, &b);
        let imm = |s: &FiniteStructure, d: &FiniteStructure, m: &StructureMap| {
            check_immersion(s, d, m, &pool).map(|v| v.status == Status::Holds).map_err(|e| e.to_string())
        };
        ensure(imm(&a, &b, &f)?, || format!("pair {i}: first inclusion is not an immersion"))?;
        ensure(imm(&b, &c, &g)?, || format!("pair {i}: second inclusion is not an immersion"))?;
        ensure(imm(&a, &c, &f.compose(&g))?, || format!("pair {i}: composite is not an immersion"))?;

        let d = sized(&mut rng, &sig, 3, 0.5);
        let Some(h) = find_homomorphisms(&a, &d, &StructureMap::empty(&a), 1).pop() else { continue };
        let Some(k) = find_homomorphisms(&d, &c, &StructureMap::empty(&d), 1).pop() else { continue };
        if imm(&a, &c, &h.compose(&k))? {
            ensure(imm(&a, &d, &h)?, || format!("pair {i}: composite immerses but its first factor does not"))?;
        }
        composites += 1;
    }
    Ok(format!("{homs} homomorphisms preserve {} pool formulas; 50 immersion chains, {composites} random composites", formulas.len()))
}

// ---------------------------------------------------------------- 9

fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p: Vec<usize>| {
                let blocks = p.iter().max().map_or(0, |m| m + 1);
                (0..=blocks).map(move |b| {
                    let mut q = p.clone();
                    q.push(b);
                    q
                })
            })
            .collect();
    }
    out
}

fn criterion_9() -> Outcome {
    let sig = one_sort(&[("P", 1), ("R", 2)]);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in 0..20 {
        let m = sized(&mut rng, &sig, 4, 0.4);
        let c = class_structure(&m, &EquivSpec::equality("S_E", SortId(0))).map_err(|e| e.to_string())?;
        ensure(find_isomorphism(&m, &c, &StructureMap::empty(&m)).is_some(), || format!("structure {i}: quotient not isomorphic"))?;
    }

    let esig = one_sort(&[("E", 2), ("P", 1)]);
    let spec = EquivSpec {
        name: "S_E".into(),
        sorts: vec![SortId(0)],
        left: vec!["x".into()],
        right: vec!["y".into()],
        formula: Formula::atom("E", vec![Term::var("x"), Term::var("y")]),
    };
    let (mut structures, mut lifts) = (0, 0);
    for n in 1..=4 {
        for part in set_partitions(n) {
            for p in 0u32..1 << n {
                let mut m = FiniteStructure::with_sizes(esig.clone(), &[n]).unwrap();
                for a in 0..n {
                    for b in 0..n {
                        m.set_relation(0, &[a, b], part[a] == part[b]);
                    }
                    m.set_relation(1, &[a], p >> a & 1 == 1);
                }
                let q = quotient_heq(&m, &spec, &[]).map_err(|e| e.to_string())?;
                let quotient_autos = automorphisms(&q.structure);
                for f in automorphisms(&m) {
                    let l = lift_automorphism(&m, &f, &q, &spec).map_err(|e| e.to_string())?;
                    let agreeing: Vec<&StructureMap> = quotient_autos.iter().filter(|h| h.maps[0] == f.maps[0]).collect();
                    ensure(l.unique && agreeing.len() == 1 && *agreeing[0] == l.map, || {
                        format!("partition {part:?}, P {p:#b}: {} automorphisms agree with f", agreeing.len())
                    })?;
                    lifts += 1;
                }
                structures += 1;
            }
        }
    }
    Ok(format!("20 equality quotients isomorphic; {lifts} lifts unique over {structures} structures"))
}

// ---------------------------------------------------------------- 10

fn criterion_10() -> Outcome {
    let golden = common::golden_dir();
    let mut runs = Vec::new();
    for threads in [1, 4, 1, 4] {
        let out: Vec<String> = common::CASES
            .iter()
            .map(|(_, args)| {
                let (code, stdout) = common::run_case(args, threads);
                common::render(code, &stdout)
            })
            .collect();
        runs.push(out);
    }
    for (k, (name, _)) in common::CASES.iter().enumerate() {
        let first = &runs[0][k];
        ensure(runs.iter().all(|r| &r[k] == first), || format!("{name}: output varies between runs"))?;
        let want = std::fs::read_to_string(golden.join(format!("{name}.golden"))).unwrap_or_default();
        ensure(&want == first, || format!("{name}: differs from its golden file"))?;
    }
    Ok(format!("{} cases identical over 2 runs x POSLOG_THREADS in {{1, 4}}", common::CASES.len()))
}

#[test]
fn acceptance() {
    let criteria: [(fn() -> Outcome, Option<u64>); 10] = [
        (criterion_1, Some(1)),
        (criterion_2, Some(5)),
        (criterion_3, Some(30)),
        (criterion_4, Some(60)),
        (criterion_5, Some(120)),
        (criterion_6, Some(30)),
        (criterion_7, Some(60)),
        (criterion_8, Some(60)),
        (criterion_9, Some(30)),
        (criterion_10, None),
    ];
    assert!(Path::new(&common::corpus()).is_dir());
    let mut failed = Vec::new();
    for (i, (run, limit)) in criteria.into_iter().enumerate() {
        let n = i + 1;
        let start = Instant::now();
        let result = run();
        let took = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(s)) if took > Duration::from_secs(s) => Err(format!("took {took:.2?}, limit {s} s")),
            (r, _) => r,
        };
        let limit = limit.map_or("no limit".to_string(), |s| format!("limit {s} s"));
        let line = match result {
            Ok(detail) => format!("criterion {n}: PASS ({detail}; {took:.2?}, {limit})\n"),
            Err(e) => {
                failed.push(n);
                format!("criterion {n}: FAIL ({e}; {took:.2?}, {limit})\n")
            }
        };
        // Straight to the stream, so the lines show without --nocapture.
        let _ = std::io::stdout().lock().write_all(line.as_bytes());
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

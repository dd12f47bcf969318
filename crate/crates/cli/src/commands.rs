use std::collections::BTreeMap;
use std::path::Path;

use poslog::analysis::{
    amalgamate, continue_to_pc, find_obstruction, haykazyan_check, jcp_pair, pc_check, support_check, type_maximal_check, type_of, JointContinuation,
};
use poslog::classify::{check_op_witness, check_psi_dividing, check_tp_witness, rank, rank_via_tree, Partitioned, RankQuery, SlotFormula, WitnessFailure};
use poslog::io::{
    grid_from_json, map_from_json, map_to_json, parse_cont_formula, parse_rules, parse_sentence, parse_thresholds, print_structure, sequence_from_json,
    span_from_json, tree_from_json, Report, SourceFile,
};
use poslog::model::{check_model, directed_union, eval, lift_automorphism, quotient_heq, EquivSpec, FiniteStructure, HeqError};
use poslog::morphism::{check_immersion, find_homomorphisms, find_isomorphism, FormulaPool, ImmersionError, StructureMap};
use poslog::search::{find_model, ground_refutation, entails_bounded, Bound, FindResult, SearchProblem, Status, Verdict};
use poslog::syntax::{canonicalize, to_prenex_existential, to_regular_disjunction, well_sorted_in, Formula, Signature, SortContext, SortId, Theory};
use poslog::translate::{cont_to_pos, cont_translate, morleyise, qe_eliminate, qe_verify, FoTheory, Fragment};
use serde_json::{json, Value};

use crate::args::{Cli, Command, Partition};
use crate::load::{self, Fallible};

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

/// Settings shared by all subcommands.
struct Ctx {
    echo: Vec<String>,
    bound_text: String,
    pool_depth: usize,
    pool_size: usize,
    pool_file: Option<std::path::PathBuf>,
}

impl Ctx {
    fn report(&self, status: impl Into<String>) -> Report {
        Report::new(self.echo.clone(), status)
    }

    fn bound(&self, sig: &Signature) -> Fallible<Bound> {
        load::bound(&self.bound_text, sig)
    }

    fn pool(&self, sig: &Signature) -> Fallible<FormulaPool> {
        load::pool(self.pool_depth, self.pool_size, self.pool_file.as_deref(), sig)
    }
}

fn code_of(s: Status) -> i32 {
    match s {
        Status::Holds => EXIT_HOLDS,
        Status::Fails => EXIT_FAILS,
        Status::UnknownAtBound => EXIT_UNKNOWN,
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Status, bound, pool, notes and refutation of a verdict; the witness is
/// filled in by the caller.
fn verdict_report<W>(cx: &Ctx, v: &Verdict<W>, with_bound: bool) -> (Report, i32) {
    let mut r = cx.report(v.status.to_string());
    if with_bound {
        r.bound = Some(serde_json::to_value(&v.bound).expect("bounds serialize"));
    }
    r.pool = v.pool.clone();
    r.notes = v.notes.clone();
    if let Some(g) = &v.refutation {
        r.result("refutation", serde_json::to_value(g).expect("refutations serialize"));
    }
    (r, code_of(v.status))
}

fn assignment_json(a: &[(String, String)]) -> Value {
    Value::Object(a.iter().map(|(k, v)| (k.clone(), json!(v))).collect())
}

fn show_assignment(a: &[(String, String)]) -> String {
    let parts: Vec<String> = a.iter().map(|(k, v)| format!("{k} := {v}")).collect();
    if parts.is_empty() {
        "(no variables)".into()
    } else {
        parts.join(", ")
    }
}

fn structure_lines(r: &mut Report, title: &str, m: &FiniteStructure, name: &str) {
    r.line(format!("{title}:"));
    for l in print_structure(m, name).lines() {
        r.line(format!("  {l}"));
    }
}

fn map_lines(r: &mut Report, title: &str, f: &StructureMap, src: &FiniteStructure, dst: &FiniteStructure) {
    r.line(format!("{title}:"));
    let sig = src.signature();
    for s in sig.sort_ids() {
        for e in 0..src.size(s) {
            if let Some(v) = f.get(s, e) {
                r.line(format!("  {}: {} -> {}", sig.sort_name(s), src.elem_name(s, e), dst.elem_name(s, v)));
            }
        }
    }
}

fn single_sort(sig: &Signature, what: &str) -> Fallible<SortId> {
    sig.unique_sort().ok_or_else(|| format!("cannot tell the sort of {what}; the signature has several sorts"))
}

/// Sorts of `names`, as used in `formulas` (starting from `known`).
fn var_sorts(names: &[String], formulas: &[&Formula], sig: &Signature, known: &SortContext) -> Fallible<SortContext> {
    let mut ctx = known.clone();
    for f in formulas {
        for (v, s) in well_sorted_in(f, sig, &ctx).map_err(err)? {
            if !ctx.iter().any(|(w, _)| *w == v) {
                ctx.push((v, s));
            }
        }
    }
    names
        .iter()
        .map(|n| match ctx.iter().find(|(v, _)| v == n) {
            Some((_, s)) => Ok((n.clone(), *s)),
            None => Ok((n.clone(), single_sort(sig, &format!("variable `{n}`"))?)),
        })
        .collect()
}

fn subset_lists(text: &str, m: &FiniteStructure) -> Fallible<Vec<Vec<usize>>> {
    let mut out = vec![Vec::new(); m.signature().sorts().len()];
    for (s, e) in load::elements(text, m)? {
        if !out[s.0].contains(&e) {
            out[s.0].push(e);
        }
    }
    for l in &mut out {
        l.sort_unstable();
    }
    Ok(out)
}

fn theory_and(path: &Path, structures: &[&Path]) -> Fallible<(Theory, Vec<FiniteStructure>)> {
    let t = load::theory(path)?;
    let ms = structures.iter().map(|p| load::structure(p, &t.signature)).collect::<Fallible<Vec<_>>>()?;
    Ok((t, ms))
}

pub fn dispatch(cli: Cli, echo: Vec<String>) -> Fallible<(Report, i32)> {
    let cx = Ctx {
        echo,
        bound_text: cli.bound,
        pool_depth: cli.pool_depth,
        pool_size: cli.pool_size,
        pool_file: cli.pool_file,
    };
    match cli.command {
        Command::Check { theory, structure } => check(&cx, &theory, &structure),
        Command::Find {
            theory,
            fresh,
            require,
            forbid,
        } => find(&cx, &theory, &fresh, &require, &forbid),
        Command::Entails { theory, sentence } => entails(&cx, &theory, &sentence),
        Command::Hom { theory, source, target, all } => hom(&cx, &theory, &source, &target, all),
        Command::Iso { theory, source, target } => iso(&cx, &theory, &source, &target),
        Command::Immersion { theory, source, target, map } => immersion(&cx, &theory, &source, &target, &map),
        Command::PcCheck { theory, structure } => pc(&cx, &theory, &structure),
        Command::Obstruct { theory, formula } => obstruct(&cx, &theory, &formula),
        Command::Haykazyan { theory, structure, subset } => haykazyan(&cx, &theory, &structure, &subset),
        Command::Jcp { theory, first, second } => jcp(&cx, &theory, &first, &second),
        Command::Amalgamate { theory, span } => amalgamate_span(&cx, &theory, &span),
        Command::Continue { theory, structure, max_size } => continue_pc(&cx, &theory, &structure, max_size),
        Command::Type { theory, structure, tuple, params } => type_cmd(&cx, &theory, &structure, &tuple, &params),
        Command::Support {
            theory,
            structure,
            tuple,
            params,
            formula,
        } => support(&cx, &theory, &structure, &tuple, &params, &formula),
        Command::Dividing {
            theory,
            sequence,
            part,
            psi,
            slots,
            base,
        } => dividing(&cx, &theory, &sequence, &part, &psi, &slots, &base),
        Command::Tp { theory, tree, part, psi, slots } => tp(&cx, &theory, &tree, &part, &psi, &slots),
        Command::Op { theory, a, b, part, psi } => op(&cx, &theory, &a, &b, &part, &psi),
        Command::Rank {
            theory,
            structure,
            part,
            psi,
            sigma,
            tree,
        } => rank_cmd(&cx, &theory, &structure, &part, &psi, &sigma, tree),
        Command::Heq {
            theory,
            structure,
            equiv,
            left,
            right,
            name,
            lift,
        } => heq(&cx, &theory, &structure, &equiv, &left, &right, &name, lift.as_deref()),
        Command::Union { theory, chain } => union(&cx, &theory, &chain),
        Command::Normal { theory, formula } => normal(&cx, &theory, &formula),
        Command::Morleyise { theory, fragment } => morley(&cx, &theory, &fragment),
        Command::Qe {
            theory,
            rules,
            formula,
            verify,
        } => qe(&cx, &theory, &rules, &formula, verify),
        Command::C2p {
            grid_structure,
            grid,
            thresholds,
            formula,
        } => c2p(&cx, &grid_structure, grid, thresholds.as_deref(), formula.as_deref()),
    }
}

fn check(cx: &Ctx, theory: &Path, structure: &Path) -> Fallible<(Report, i32)> {
    let (t, ms) = theory_and(theory, &[structure])?;
    match check_model(&ms[0], &t).map_err(err)? {
        None => {
            let mut r = cx.report("Holds");
            r.line(format!("the structure satisfies all {} axioms", t.axioms.len()));
            Ok((r, EXIT_HOLDS))
        }
        Some(ce) => {
            let mut r = cx.report("Fails");
            let ax = t.axioms[ce.axiom].to_string();
            r.witness = Some(json!({"axiom": ce.axiom, "axiom_text": ax, "assignment": assignment_json(&ce.assignment)}));
            r.line(format!("axiom {} fails: {ax}", ce.axiom));
            r.line(format!("at {}", show_assignment(&ce.assignment)));
            Ok((r, EXIT_FAILS))
        }
    }
}

fn find(cx: &Ctx, theory: &Path, fresh: &[String], require: &[String], forbid: &[String]) -> Fallible<(Report, i32)> {
    let t = load::theory(theory)?;
    let bound = cx.bound(&t.signature)?;
    let fresh = fresh
        .iter()
        .map(|c| match c.split_once(':') {
            Some((n, s)) => t.signature.sort_id(s.trim()).map(|id| (n.trim().to_string(), id)).ok_or_else(|| format!("--fresh: unknown sort `{s}`")),
            None => Ok((c.trim().to_string(), single_sort(&t.signature, &format!("constant `{c}`"))?)),
        })
        .collect::<Fallible<Vec<_>>>()?;
    let sig = t.signature.with_constants(&fresh).map_err(err)?.0;
    let required = require.iter().map(|s| load::sentence(s, &sig)).collect::<Fallible<Vec<_>>>()?;
    let forbidden = forbid.iter().map(|s| load::sentence(s, &sig)).collect::<Fallible<Vec<_>>>()?;
    let mut p = SearchProblem::new(t.clone(), bound.clone());
    p.fresh = fresh.clone();
    p.required = required.clone();
    p.forbidden = forbidden;
    let v = match find_model(&p).map_err(err)? {
        FindResult::Found(m) => Verdict::holds(Some(m.expanded), bound),
        FindResult::ExhaustedAtBound(b) => {
            let v = Verdict::unknown(None, b);
            match ground_refutation(&t, &fresh, &required) {
                Some(g) => {
                    let note = g.to_string();
                    v.with_refutation(Some(g)).with_note(note)
                }
                None => v.with_note("no model within the bound; this does not prove inconsistency"),
            }
        }
    };
    let (mut r, code) = verdict_report(cx, &v, true);
    if let Some(m) = &v.witness {
        r.witness = Some(json!({"model": print_structure(m, "Found")}));
        structure_lines(&mut r, "model", m, "Found");
    }
    Ok((r, code))
}

fn entails(cx: &Ctx, theory: &Path, sentence: &str) -> Fallible<(Report, i32)> {
    let t = load::theory(theory)?;
    let sigma = parse_sentence(&SourceFile::new("<argument>", sentence), &t.signature).map_err(err)?;
    let bound = cx.bound(&t.signature)?;
    let v = entails_bounded(&t, &sigma, bound).map_err(err)?;
    let (mut r, code) = verdict_report(cx, &v, true);
    if let Some(c) = &v.witness {
        let text = print_structure(&c.model.model, "CounterModel");
        r.witness = Some(json!({"model": text, "assignment": assignment_json(&c.assignment)}));
        structure_lines(&mut r, "counter-model", &c.model.model, "CounterModel");
        r.line(format!("violated at {}", show_assignment(&c.assignment)));
    }
    Ok((r, code))
}

fn hom(cx: &Ctx, theory: &Path, source: &Path, target: &Path, all: Option<usize>) -> Fallible<(Report, i32)> {
    let (_, ms) = theory_and(theory, &[source, target])?;
    let (src, dst) = (&ms[0], &ms[1]);
    let limit = match all {
        None => 1,
        Some(0) => usize::MAX,
        Some(k) => k,
    };
    let found = find_homomorphisms(src, dst, &StructureMap::empty(src), limit);
    if found.is_empty() {
        let mut r = cx.report("Fails");
        r.line("no homomorphism exists");
        return Ok((r, EXIT_FAILS));
    }
    let mut r = cx.report("Holds");
    if all.is_some() {
        r.result("count", found.len());
        r.witness = Some(Value::Array(found.iter().map(|f| map_to_json(f, src, dst)).collect()));
        for (i, f) in found.iter().enumerate() {
            map_lines(&mut r, &format!("homomorphism {i}"), f, src, dst);
        }
    } else {
        r.witness = Some(map_to_json(&found[0], src, dst));
        map_lines(&mut r, "homomorphism", &found[0], src, dst);
    }
    Ok((r, EXIT_HOLDS))
}

fn iso(cx: &Ctx, theory: &Path, source: &Path, target: &Path) -> Fallible<(Report, i32)> {
    let (_, ms) = theory_and(theory, &[source, target])?;
    let (src, dst) = (&ms[0], &ms[1]);
    match find_isomorphism(src, dst, &StructureMap::empty(src)) {
        Some(f) => {
            let mut r = cx.report("Holds");
            r.witness = Some(map_to_json(&f, src, dst));
            map_lines(&mut r, "isomorphism", &f, src, dst);
            Ok((r, EXIT_HOLDS))
        }
        None => {
            let mut r = cx.report("Fails");
            r.line("the structures are not isomorphic");
            Ok((r, EXIT_FAILS))
        }
    }
}

fn immersion(cx: &Ctx, theory: &Path, source: &Path, target: &Path, map: &Path) -> Fallible<(Report, i32)> {
    let (t, ms) = theory_and(theory, &[source, target])?;
    let (src, dst) = (&ms[0], &ms[1]);
    let f = map_from_json(&load::json(map)?, src, dst).map_err(err)?;
    let pool = cx.pool(&t.signature)?;
    let v = match check_immersion(src, dst, &f, &pool) {
        Ok(v) => v,
        Err(ImmersionError::NotAHomomorphism(e)) => {
            let mut r = cx.report("Fails");
            r.pool = Some(pool.label());
            r.notes.push(format!("the map is not a homomorphism: {e}"));
            return Ok((r, EXIT_FAILS));
        }
        Err(e) => return Err(e.to_string()),
    };
    let (mut r, code) = verdict_report(cx, &v, false);
    if let Some(w) = &v.witness {
        r.witness = Some(json!({"formula": w.formula.to_string(), "assignment": assignment_json(&w.assignment)}));
        r.line(format!("not reflected: {}", w.formula));
        r.line(format!("at {}", show_assignment(&w.assignment)));
    }
    Ok((r, code))
}

fn pc(cx: &Ctx, theory: &Path, structure: &Path) -> Fallible<(Report, i32)> {
    let (t, ms) = theory_and(theory, &[structure])?;
    let m = &ms[0];
    let v = pc_check(&t, m, &cx.pool(&t.signature)?, cx.bound(&t.signature)?).map_err(err)?;
    let (mut r, code) = verdict_report(cx, &v, true);
    if let Some(w) = &v.witness {
        let mut o = json!({"formula": w.case.formula.to_string(), "assignment": assignment_json(&w.case.assignment)});
        r.line(format!("case: {} at {}", w.case.formula, show_assignment(&w.case.assignment)));
        if let (Some(n), Some(f)) = (&w.continuation, &w.map) {
            o["continuation"] = json!(print_structure(n, "Continuation"));
            o["map"] = map_to_json(f, m, n);
            structure_lines(&mut r, "continuation", n, "Continuation");
            map_lines(&mut r, "map", f, m, n);
        }
        r.witness = Some(o);
    }
    Ok((r, code))
}

fn obstruct(cx: &Ctx, theory: &Path, formula: &str) -> Fallible<(Report, i32)> {
    let t = load::theory(theory)?;
    let phi = load::formula(formula, &t.signature, &[])?;
    let v = find_obstruction(&t, &phi, &cx.pool(&t.signature)?, cx.bound(&t.signature)?).map_err(err)?;
    let (mut r, code) = verdict_report(cx, &v, true);
    if let Some(o) = &v.witness {
        r.witness = Some(json!({"psi": o.psi.to_string(), "phi": o.phi.to_string()}));
        r.line(format!("obstruction: {}", o.psi));
    }
    Ok((r, code))
}

fn haykazyan(cx: &Ctx, theory: &Path, structure: &Path, subset: &str) -> Fallible<(Report, i32)> {
    let (t, ms) = theory_and(theory, &[structure])?;
    let m = &ms[0];
    let sub = subset_lists(subset, m)?;
    let v = haykazyan_check(&t, m, &sub, &cx.pool(&t.signature)?, cx.bound(&t.signature)?).map_err(err)?;
    let (mut r, code) = verdict_report(cx, &v, true);
    if let Some(w) = &v.witness {
        r.witness = Some(json!({
            "formula": w.formula.to_string(),
            "assignment": assignment_json(&w.assignment),
            "witness_vars": w.witness_vars,
        }));
        r.line(format!("formula: {}", w.formula));
        r.line(format!("at {}", show_assignment(&w.assignment)));
        r.line(format!("witnessed variables: {}", w.witness_vars.join(", ")));
    }
    Ok((r, code))
}

fn joint_report(cx: &Ctx, v: &Verdict<JointContinuation>, sources: &[&FiniteStructure]) -> (Report, i32) {
    let (mut r, code) = verdict_report(cx, v, true);
    if let Some(j) = &v.witness {
        let maps: Vec<Value> = j.maps.iter().zip(sources).map(|(f, s)| map_to_json(f, s, &j.model)).collect();
        r.witness = Some(json!({"model": print_structure(&j.model, "Joint"), "maps": maps}));
        structure_lines(&mut r, "joint continuation", &j.model, "Joint");
        for (i, (f, s)) in j.maps.iter().zip(sources).enumerate() {
            map_lines(&mut r, &format!("map from model {}", i + 1), f, s, &j.model);
        }
    }
    (r, code)
}

fn jcp(cx: &Ctx, theory: &Path, first: &Path, second: &Path) -> Fallible<(Report, i32)> {
    let (t, ms) = theory_and(theory, &[first, second])?;
    let v = jcp_pair(&t, &ms[0], &ms[1], cx.bound(&t.signature)?).map_err(err)?;
    Ok(joint_report(cx, &v, &[&ms[0], &ms[1]]))
}

fn amalgamate_span(cx: &Ctx, theory: &Path, span: &Path) -> Fallible<(Report, i32)> {
    let t = load::theory(theory)?;
    let v = load::json(span)?;
    let s = span_from_json(&v, &mut load::structure_loader(span, &t.signature)).map_err(|e| format!("{}: {e}", span.display()))?;
    let verdict = amalgamate(&t, &s.m0, &s.m1, &s.f, &s.m2, &s.g, cx.bound(&t.signature)?).map_err(err)?;
    Ok(joint_report(cx, &verdict, &[&s.m1, &s.m2]))
}

fn continue_pc(cx: &Ctx, theory: &Path, structure: &Path, max_size: usize) -> Fallible<(Report, i32)> {
    let (t, ms) = theory_and(theory, &[structure])?;
    let m = &ms[0];
    let pool = cx.pool(&t.signature)?;
    let bound = cx.bound(&t.signature)?;
    let c = continue_to_pc(&t, m, &pool, bound.clone(), max_size).map_err(err)?;
    let (status, code) = if c.stalled.is_some() { ("Stalled", EXIT_UNKNOWN) } else { ("Holds", EXIT_HOLDS) };
    let mut r = cx.report(status);
    r.bound = Some(serde_json::to_value(&bound).expect("bounds serialize"));
    r.pool = Some(pool.label());
    let steps: Vec<Value> = c
        .steps
        .iter()
        .map(|s| json!({"formula": s.formula.to_string(), "assignment": assignment_json(&s.assignment)}))
        .collect();
    let open: Vec<Value> = c
        .open
        .iter()
        .map(|s| json!({"formula": s.formula.to_string(), "assignment": assignment_json(&s.assignment)}))
        .collect();
    r.witness = Some(json!({
        "model": print_structure(&c.model, "Continued"),
        "map": map_to_json(&c.map, m, &c.model),
        "steps": steps,
        "open": open,
    }));
    for (i, s) in c.steps.iter().enumerate() {
        r.line(format!("step {}: {} at {}", i + 1, s.formula, show_assignment(&s.assignment)));
    }
    structure_lines(&mut r, "model", &c.model, "Continued");
    map_lines(&mut r, "map", &c.map, m, &c.model);
    for s in &c.open {
        r.line(format!("open case: {} at {}", s.formula, show_assignment(&s.assignment)));
    }
    if let Some(why) = &c.stalled {
        r.notes.push(format!("stalled: {why}"));
    }
    Ok((r, code))
}

fn type_cmd(cx: &Ctx, theory: &Path, structure: &Path, tuple: &str, params: &str) -> Fallible<(Report, i32)> {
    let (t, ms) = theory_and(theory, &[structure])?;
    let m = &ms[0];
    let a = load::elements(tuple, m)?;
    let ps = load::elements(params, m)?;
    let pool = cx.pool(&t.signature)?;
    let ts = type_of(m, &a, &ps, &pool).map_err(err)?;
    let formulas: Vec<String> = ts.formulas.iter().map(ToString::to_string).collect();
    let vars: Vec<String> = ts.ctx.iter().map(|(v, _)| v.clone()).collect();
    let (mut r, code) = if ps.is_empty() {
        let v = type_maximal_check(&t, m, &a, &pool, cx.bound(&t.signature)?).map_err(err)?;
        let (mut r, code) = verdict_report(cx, &v, true);
        if let Some(g) = &v.witness {
            let mut o = json!({"formula": g.formula.to_string()});
            r.line(format!("not refuted inside the type: {}", g.formula));
            if let Some(n) = &g.continuation {
                o["continuation"] = json!(print_structure(n, "Continuation"));
                structure_lines(&mut r, "continuation", n, "Continuation");
            }
            r.witness = Some(o);
        }
        (r, code)
    } else {
        let mut r = cx.report("Holds");
        r.pool = Some(pool.label());
        r.notes.push("maximality is only checked without parameters".into());
        (r, EXIT_HOLDS)
    };
    let params_json: Vec<Value> = ts.params.iter().map(|(c, s, e)| json!({"constant": c, "element": m.elem_name(*s, *e)})).collect();
    r.result("variables", json!(vars));
    r.result("parameters", json!(params_json));
    r.result("type", json!(formulas));
    r.line(format!("type of ({}) in variables ({}):", tuple, vars.join(", ")));
    for f in &formulas {
        r.line(format!("  {f}"));
    }
    Ok((r, code))
}

fn support(cx: &Ctx, theory: &Path, structure: &Path, tuple: &str, params: &str, formula: &str) -> Fallible<(Report, i32)> {
    let (t, ms) = theory_and(theory, &[structure])?;
    let m = &ms[0];
    let a = load::elements(tuple, m)?;
    let ps = load::elements(params, m)?;
    let ts = type_of(m, &a, &ps, &cx.pool(&t.signature)?).map_err(err)?;
    let phi = load::formula(formula, &ts.signature, &ts.ctx)?;
    let v = support_check(&t, &phi, &ts, cx.bound(&t.signature)?).map_err(err)?;
    let (mut r, code) = verdict_report(cx, &v, true);
    if let Some(w) = &v.witness {
        let mut o = json!({});
        if let Some(psi) = &w.psi {
            o["psi"] = json!(psi.to_string());
            r.line(format!("realized together with the formula: {psi}"));
        }
        if let Some(n) = &w.model {
            o["model"] = json!(print_structure(n, "Model"));
            structure_lines(&mut r, "model", n, "Model");
        }
        r.witness = Some(o);
    }
    Ok((r, code))
}

/// `phi(x; y)` with `y` of the given parameter sorts.
fn partitioned(part: &Partition, sig: &Signature, y_sorts: &[SortId]) -> Fallible<Partitioned> {
    let x = load::names(&part.x);
    let y = load::names(&part.y);
    if y.len() != y_sorts.len() {
        return Err(format!("--y lists {} variables but the parameter tuples have length {}", y.len(), y_sorts.len()));
    }
    let known: SortContext = y.iter().cloned().zip(y_sorts.iter().copied()).collect();
    let phi = load::formula(&part.phi, sig, &known)?;
    let x = var_sorts(&x, &[&phi], sig, &known)?;
    Ok(Partitioned { formula: phi, x, y })
}

fn slot_formula(psi: &str, slots: &[String], sig: &Signature, sorts: &[SortId]) -> Fallible<SlotFormula> {
    let slots: Vec<Vec<String>> = slots.iter().map(|s| load::names(s)).collect();
    let mut ctx = SortContext::new();
    for s in &slots {
        if s.len() != sorts.len() {
            return Err(format!("slot ({}) has {} variables; the parameter tuples have length {}", s.join(","), s.len(), sorts.len()));
        }
        ctx.extend(s.iter().cloned().zip(sorts.iter().copied()));
    }
    Ok(SlotFormula::new(load::formula(psi, sig, &ctx)?, slots))
}

fn witness_failure(r: &mut Report, w: &WitnessFailure) {
    let v = match w {
        WitnessFailure::NotAnObstruction(m) => {
            structure_lines(r, "psi is realized together with the conjunction in", m, "Model");
            json!({"kind": "not_an_obstruction", "model": print_structure(m, "Model")})
        }
        WitnessFailure::NotAlong { node, selection } => {
            let at = match node.as_deref() {
                Some("") => " under the root".to_string(),
                Some(n) => format!(" under node `{n}`"),
                None => String::new(),
            };
            r.line(format!("psi fails along the parameters at selection {selection:?}{at}"));
            json!({"kind": "not_along", "node": node, "selection": selection})
        }
        WitnessFailure::TypeMismatch { index, formula } => {
            r.line(format!("tuple {index} differs from tuple 0 on {formula}"));
            json!({"kind": "type_mismatch", "index": index, "formula": formula.to_string()})
        }
        WitnessFailure::BranchInconsistent(leaf) => {
            r.line(format!("the branch to `{leaf}` is not consistent"));
            json!({"kind": "branch_inconsistent", "leaf": leaf})
        }
        WitnessFailure::Cell(i, j) => {
            r.line(format!("cell ({i}, {j}) fails"));
            json!({"kind": "cell", "i": i, "j": j})
        }
    };
    r.witness = Some(v);
}

fn dividing(cx: &Ctx, theory: &Path, sequence: &Path, part: &Partition, psi: &str, slots: &[String], base: &str) -> Fallible<(Report, i32)> {
    let t = load::theory(theory)?;
    let sig = &t.signature;
    let seq = sequence_from_json(&load::json(sequence)?, &mut load::structure_loader(sequence, sig)).map_err(|e| format!("{}: {e}", sequence.display()))?;
    let phi = partitioned(part, sig, &seq.sorts)?;
    let psi = slot_formula(psi, slots, sig, &seq.sorts)?;
    let base = load::elements(base, &seq.ambient)?;
    let v = check_psi_dividing(&t, &phi, &psi, &seq, &base, &cx.pool(sig)?, cx.bound(sig)?).map_err(err)?;
    let (mut r, code) = verdict_report(cx, &v, true);
    if let Some(w) = &v.witness {
        witness_failure(&mut r, w);
    }
    Ok((r, code))
}

fn tp(cx: &Ctx, theory: &Path, tree: &Path, part: &Partition, psi: &str, slots: &[String]) -> Fallible<(Report, i32)> {
    let t = load::theory(theory)?;
    let sig = &t.signature;
    let tr = tree_from_json(&load::json(tree)?, &mut load::structure_loader(tree, sig)).map_err(|e| format!("{}: {e}", tree.display()))?;
    let phi = partitioned(part, sig, &tr.sorts)?;
    let psi = slot_formula(psi, slots, sig, &tr.sorts)?;
    let v = check_tp_witness(&t, &phi, &psi, &tr, cx.bound(sig)?).map_err(err)?;
    let (mut r, code) = verdict_report(cx, &v, true);
    if let Some(w) = &v.witness {
        witness_failure(&mut r, w);
    }
    Ok((r, code))
}

fn op(cx: &Ctx, theory: &Path, a: &Path, b: &Path, part: &Partition, psi: &str) -> Fallible<(Report, i32)> {
    let t = load::theory(theory)?;
    let sig = &t.signature;
    let sa = sequence_from_json(&load::json(a)?, &mut load::structure_loader(a, sig)).map_err(|e| format!("{}: {e}", a.display()))?;
    let sb = sequence_from_json(&load::json(b)?, &mut load::structure_loader(b, sig)).map_err(|e| format!("{}: {e}", b.display()))?;
    let x = load::names(&part.x);
    if x.len() != sa.sorts.len() {
        return Err(format!("--x lists {} variables but the tuples of {} have length {}", x.len(), a.display(), sa.sorts.len()));
    }
    let phi = partitioned(part, sig, &sb.sorts)?;
    let mut ctx: SortContext = x.iter().cloned().zip(sa.sorts.iter().copied()).collect();
    ctx.extend(phi.y.iter().cloned().zip(sb.sorts.iter().copied()));
    let phi = Partitioned {
        x: x.into_iter().zip(sa.sorts.iter().copied()).collect(),
        ..phi
    };
    let psi = load::formula(psi, sig, &ctx)?;
    let v = check_op_witness(&t, &phi, &psi, &sa, &sb, cx.bound(sig)?).map_err(err)?;
    let (mut r, code) = verdict_report(cx, &v, true);
    if let Some(w) = &v.witness {
        witness_failure(&mut r, w);
    }
    Ok((r, code))
}

#[allow(clippy::too_many_arguments)]
fn rank_cmd(cx: &Ctx, theory: &Path, structure: &Path, part: &Partition, psi: &str, sigma: &[String], tree: Option<usize>) -> Fallible<(Report, i32)> {
    let (t, ms) = theory_and(theory, &[structure])?;
    let sig = &t.signature;
    let phi = load::formula(&part.phi, sig, &[])?;
    let psi = load::formula(psi, sig, &[])?;
    let (xs, ys) = (load::names(&part.x), load::names(&part.y));
    let all: Vec<String> = xs.iter().chain(&ys).cloned().collect();
    let ctx = var_sorts(&all, &[&phi, &psi], sig, &SortContext::new())?;
    let (x, y) = ctx.split_at(xs.len());
    let sigma = sigma.iter().map(|s| load::formula(s, sig, x)).collect::<Fallible<Vec<_>>>()?;
    let q = RankQuery {
        ambient: ms[0].clone(),
        x: x.to_vec(),
        y: y.to_vec(),
        phi,
        psi,
        sigma,
    };
    let n = rank(&q).map_err(err)?;
    let mut r = cx.report("Holds");
    r.result("rank", n);
    r.line(format!("rank: {n}"));
    if let Some(h) = tree {
        let found = rank_via_tree(&q, h).map_err(err)?;
        r.result("tree", json!({"height": h, "found": found}));
        r.line(format!("binary tree of height {h}: {}", if found { "found" } else { "none" }));
    }
    Ok((r, EXIT_HOLDS))
}

#[allow(clippy::too_many_arguments)]
fn heq(cx: &Ctx, theory: &Path, structure: &Path, equiv: &str, left: &str, right: &str, name: &str, lift: Option<&Path>) -> Fallible<(Report, i32)> {
    let (t, ms) = theory_and(theory, &[structure])?;
    let m = &ms[0];
    let sig = &t.signature;
    let (l, rt) = (load::names(left), load::names(right));
    if l.len() != rt.len() || l.is_empty() {
        return Err("--left and --right must list the same, nonzero number of variables".into());
    }
    let phi = load::formula(equiv, sig, &[])?;
    let both: Vec<String> = l.iter().chain(&rt).cloned().collect();
    let ctx = var_sorts(&both, &[&phi], sig, &SortContext::new())?;
    let sorts: Vec<SortId> = ctx[..l.len()].iter().map(|(_, s)| *s).collect();
    if ctx[l.len()..].iter().map(|(_, s)| *s).ne(sorts.iter().copied()) {
        return Err("--left and --right variables must have matching sorts".into());
    }
    let spec = EquivSpec {
        name: name.to_string(),
        sorts,
        left: l,
        right: rt,
        formula: phi,
    };
    let q = match quotient_heq(m, &spec, &[]) {
        Ok(q) => q,
        Err(e @ (HeqError::NotReflexive(_) | HeqError::NotSymmetric(..) | HeqError::NotTransitive(..) | HeqError::NotACongruence(_))) => {
            let mut r = cx.report("Fails");
            r.line(e.to_string());
            r.witness = Some(json!({"reason": e.to_string()}));
            return Ok((r, EXIT_FAILS));
        }
        Err(e) => return Err(e.to_string()),
    };
    let mut r = cx.report("Holds");
    r.result("quotient", print_structure(&q.structure, "Quotient"));
    r.result("classes", q.members.len());
    r.result("xi", q.xi.clone());
    structure_lines(&mut r, "quotient", &q.structure, "Quotient");
    if let Some(p) = lift {
        let f = map_from_json(&load::json(p)?, m, m).map_err(|e| format!("{}: {e}", p.display()))?;
        let la = lift_automorphism(m, &f, &q, &spec).map_err(err)?;
        r.result("lift", json!({"map": map_to_json(&la.map, &q.structure, &q.structure), "unique": la.unique}));
        map_lines(&mut r, "lifted automorphism", &la.map, &q.structure, &q.structure);
        r.line(format!("unique: {}", la.unique));
    }
    Ok((r, EXIT_HOLDS))
}

/// `{"stages": [path, …], "links": [map, …]}`, one link per consecutive pair.
fn union(cx: &Ctx, theory: &Path, chain: &Path) -> Fallible<(Report, i32)> {
    let t = load::theory(theory)?;
    let v = load::json(chain)?;
    let bad = |what: &str| format!("{}: {what}", chain.display());
    let stages = v.get("stages").and_then(Value::as_array).ok_or_else(|| bad("`stages` must be an array of paths"))?;
    let links = v.get("links").and_then(Value::as_array).ok_or_else(|| bad("`links` must be an array of maps"))?;
    let mut ms = Vec::new();
    for s in stages {
        let p = s.as_str().ok_or_else(|| bad("stage paths must be strings"))?;
        ms.push(load::structure(&load::relative(chain, p), &t.signature)?);
    }
    if ms.is_empty() || links.len() + 1 != ms.len() {
        return Err(bad("a chain of n ≥ 1 stages needs n − 1 links"));
    }
    let fs = links
        .iter()
        .enumerate()
        .map(|(i, l)| map_from_json(l, &ms[i], &ms[i + 1]).map_err(|e| bad(&format!("link {i}: {e}"))))
        .collect::<Fallible<Vec<_>>>()?;
    let u = directed_union(&ms, &fs).map_err(err)?;
    let mut r = cx.report("Holds");
    r.result("union", print_structure(&u.union, "Union"));
    let proj: Vec<Value> = u.projections.iter().zip(&ms).map(|(f, m)| map_to_json(f, m, &u.union)).collect();
    r.result("projections", proj);
    structure_lines(&mut r, "union", &u.union, "Union");
    for (i, (f, m)) in u.projections.iter().zip(&ms).enumerate() {
        map_lines(&mut r, &format!("stage {i}"), f, m, &u.union);
    }
    Ok((r, EXIT_HOLDS))
}

fn normal(cx: &Ctx, theory: &Path, formula: &str) -> Fallible<(Report, i32)> {
    let t = load::theory(theory)?;
    let phi = load::formula(formula, &t.signature, &[])?;
    let prenex = to_prenex_existential(&phi);
    let regular = to_regular_disjunction(&phi).map_err(err)?;
    let canonical = canonicalize(&phi);
    let mut r = cx.report("Holds");
    r.result("prenex", prenex.to_string());
    r.result("regular", regular.to_string());
    r.result("canonical", canonical.to_string());
    r.line(format!("prenex: {prenex}"));
    r.line(format!("regular: {regular}"));
    r.line(format!("canonical: {canonical}"));
    Ok((r, EXIT_HOLDS))
}

fn morley(cx: &Ctx, theory: &Path, fragment: &str) -> Fallible<(Report, i32)> {
    let t = load::theory(theory)?;
    let sig = &t.signature;
    let frag = match fragment.trim() {
        "qf" => Fragment::qf(sig),
        other => match other.strip_prefix("depth=").map(str::parse::<usize>) {
            Some(Ok(d)) => Fragment::depth(sig, d).map_err(err)?,
            _ => return Err(format!("--fragment: expected `qf` or `depth=d`, got `{other}`")),
        },
    };
    let fo = FoTheory::from(&t);
    let mo = morleyise(&frag.with_theory(&fo), &fo).map_err(err)?;
    let mut r = cx.report("Holds");
    let symbols: BTreeMap<String, Value> = mo
        .symbols
        .iter()
        .map(|s| (s.relation.clone(), json!(s.formula.to_string())))
        .collect();
    r.result("theory", mo.theory.to_string());
    r.result("symbols", Value::Object(symbols.into_iter().collect()));
    r.result("mor_axioms", mo.mor_axioms);
    for s in &mo.symbols {
        r.line(format!("{} := {}", s.atom(), s.formula));
    }
    r.line("theory:");
    for l in mo.theory.to_string().lines() {
        r.line(format!("  {l}"));
    }
    Ok((r, EXIT_HOLDS))
}

fn qe(cx: &Ctx, theory: &Path, rules: &Path, formula: &str, verify: Option<usize>) -> Fallible<(Report, i32)> {
    let t = load::theory(theory)?;
    let rs = parse_rules(&load::source(rules)?, &t.signature).map_err(err)?;
    let phi = load::formula(formula, &t.signature, &[])?;
    let out = qe_eliminate(&rs, &phi).map_err(err)?;
    let (mut r, code) = match verify {
        Some(k) => {
            let v = qe_verify(&t, &phi, &out, k).map_err(err)?;
            let (mut r, code) = verdict_report(cx, &v, true);
            if let Some(s) = &v.witness {
                let side = if s.original_holds { "the original holds and the result fails" } else { "the result holds and the original fails" };
                r.witness = Some(json!({
                    "model": print_structure(&s.model, "Separation"),
                    "assignment": assignment_json(&s.assignment),
                    "original_holds": s.original_holds,
                }));
                r.line(format!("{side} at {}", show_assignment(&s.assignment)));
                structure_lines(&mut r, "in", &s.model, "Separation");
            }
            (r, code)
        }
        None => (cx.report("Holds"), EXIT_HOLDS),
    };
    r.result("formula", out.to_string());
    r.text.insert(0, format!("result: {out}"));
    Ok((r, code))
}

fn c2p(cx: &Ctx, grid_structure: &Path, grid: u32, thresholds: Option<&Path>, formula: Option<&str>) -> Fallible<(Report, i32)> {
    if grid == 0 {
        return Err("--grid must be positive".into());
    }
    let g = grid_from_json(&load::json(grid_structure)?, grid).map_err(|e| format!("{}: {e}", grid_structure.display()))?;
    let mut ths = match thresholds {
        Some(p) => parse_thresholds(&load::source(p)?).map_err(err)?,
        None => Vec::new(),
    };
    let translation = match formula {
        Some(text) => {
            let f = parse_cont_formula(text).map_err(err)?;
            let tr = cont_translate(&f, &g.vocabulary()).map_err(err)?;
            ths.extend(tr.thresholds.iter().cloned());
            Some((f, tr))
        }
        None => None,
    };
    let m = cont_to_pos(&g, &ths).map_err(err)?;
    let sig_text = Theory::new(m.signature().clone()).to_string();
    let mut r = cx.report("Holds");
    let mut code = EXIT_HOLDS;
    r.result("signature", sig_text.clone());
    r.result("structure", print_structure(&m, "Positive"));
    if let Some((f, tr)) = translation {
        r.result("translation", tr.formula.to_string());
        r.line(format!("translation: {}", tr.formula));
        let vars = f.free_vars();
        let n = g.carrier().len();
        let mut mismatch = None;
        'outer: for idx in 0..n.pow(vars.len() as u32) {
            let mut env = BTreeMap::new();
            let mut k = idx;
            for v in vars.iter().rev() {
                env.insert(v.clone(), k % n);
                k /= n;
            }
            let zero = g.eval(&f, &mut env.clone()).map_err(err)? == 0.into();
            let pos = eval(&m, &tr.formula, &env).map_err(err)?;
            if zero != pos {
                mismatch = Some((env, zero));
                break 'outer;
            }
        }
        match mismatch {
            None => r.line(format!("the translation agrees with the zero set at all {} assignments", n.pow(vars.len() as u32))),
            Some((env, zero)) => {
                let a: Vec<(String, String)> = env.iter().map(|(v, e)| (v.clone(), g.carrier()[*e].clone())).collect();
                r.status = "Fails".into();
                code = EXIT_FAILS;
                r.witness = Some(json!({"assignment": assignment_json(&a), "zero": zero}));
                r.line(format!("disagreement at {}", show_assignment(&a)))
            }
        };
    }
    r.line("signature:");
    for l in sig_text.lines() {
        r.line(format!("  {l}"));
    }
    structure_lines(&mut r, "structure", &m, "Positive");
    Ok((r, code))
}

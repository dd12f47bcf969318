//! The line-free DSLs: declarations start with a keyword, so layout is free
//! and `#` starts a comment anywhere.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use num_rational::Ratio;

use crate::model::{tuples, FiniteStructure, StructureError};
use crate::syntax::{check_sentence, check_theory, well_sorted, well_sorted_in, Formula, HInductiveSentence, Signature, SortId, Term, Theory, VarDecl};
use crate::translate::{ContFormula, PatternRule, QeRule};

use super::lexer::{quote, Cursor, Tok};
use super::{ErrorKind, ParseError, SourceFile};

const KEYWORDS: [&str; 12] = [
    "sort", "const", "fun", "rel", "axiom", "forall", "exists", "true", "false", "structure", "rule", "subst",
];

fn symbol_name(c: &mut Cursor, what: &str) -> Result<(String, usize, usize), ParseError> {
    match c.peek() {
        Some(Tok::Ident(s)) if KEYWORDS.contains(&s.as_str()) => Err(c.error(format!("`{s}` is reserved, expected {what}"))),
        Some(Tok::Ident(_)) => c.name(what),
        _ => Err(c.error(format!("expected {what}"))),
    }
}

fn sort_ref(c: &mut Cursor, sig: &Signature) -> Result<SortId, ParseError> {
    let (s, a, b) = symbol_name(c, "a sort")?;
    sig.sort_id(&s)
        .ok_or_else(|| c.src.error_of(ErrorKind::UnknownSymbol, a, b, format!("unknown sort `{s}`")))
}

/// A binder variable whose sort may be left for inference.
struct Binder {
    name: String,
    sort: Option<String>,
    start: usize,
    end: usize,
}

fn binders(c: &mut Cursor, sig: &Signature) -> Result<Vec<Binder>, ParseError> {
    let mut out = Vec::new();
    loop {
        let (name, start, end) = symbol_name(c, "a variable")?;
        if sig.is_symbol(&name) {
            return Err(c.src.error(start, end, format!("`{name}` is a symbol of the signature, not a variable")));
        }
        let sort = if c.eat_punct(":") {
            let s = sort_ref(c, sig)?;
            Some(sig.sort_name(s).to_string())
        } else {
            None
        };
        out.push(Binder { name, sort, start, end });
        if !c.eat_punct(",") {
            break;
        }
    }
    c.expect_punct(".")?;
    Ok(out)
}

/// Fills in omitted binder sorts: the only sort when there is one, otherwise
/// the sort forced by `scope` (a formula in which the binders occur free).
fn resolve_binders(src: &SourceFile, sig: &Signature, bs: Vec<Binder>, scope: &Formula) -> Result<Vec<VarDecl>, ParseError> {
    let mut inferred: Option<Result<Vec<(String, SortId)>, String>> = None;
    let known: Vec<(String, SortId)> = bs
        .iter()
        .filter_map(|b| b.sort.as_ref().and_then(|s| sig.sort_id(s)).map(|s| (b.name.clone(), s)))
        .collect();
    let mut out = Vec::new();
    for b in bs {
        let sort = match b.sort {
            Some(s) => s,
            None => match sig.unique_sort() {
                Some(s) => sig.sort_name(s).to_string(),
                None => {
                    let ctx = inferred.get_or_insert_with(|| well_sorted_in(scope, sig, &known).map_err(|e| e.to_string()));
                    match ctx {
                        Ok(ctx) => match ctx.iter().find(|(v, _)| *v == b.name) {
                            Some((_, s)) => sig.sort_name(*s).to_string(),
                            None => {
                                return Err(src.error_of(
                                    ErrorKind::Sort,
                                    b.start,
                                    b.end,
                                    format!("cannot determine the sort of `{}`; write `{}:sort`", b.name, b.name),
                                ))
                            }
                        },
                        Err(e) => return Err(src.error_of(ErrorKind::Sort, b.start, b.end, e.clone())),
                    }
                }
            },
        };
        out.push(VarDecl::new(&b.name, &sort));
    }
    Ok(out)
}

struct FormulaParser<'s> {
    sig: &'s Signature,
    /// Variables bound by enclosing quantifiers, innermost last.
    scope: Vec<String>,
    /// Current nesting; capped so hostile input cannot exhaust the stack.
    depth: usize,
}

const MAX_NESTING: usize = 200;

impl<'s> FormulaParser<'s> {
    fn new(sig: &'s Signature) -> Self {
        FormulaParser {
            sig,
            scope: Vec::new(),
            depth: 0,
        }
    }

    fn nest(&mut self, c: &Cursor) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(c.error("formula nested too deeply"));
        }
        Ok(())
    }

    fn or(&mut self, c: &mut Cursor) -> Result<Formula, ParseError> {
        let mut parts = vec![self.and(c)?];
        while c.eat_punct("|") {
            parts.push(self.and(c)?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::Or(parts) })
    }

    fn and(&mut self, c: &mut Cursor) -> Result<Formula, ParseError> {
        let mut parts = vec![self.unary(c)?];
        while c.eat_punct("&") {
            parts.push(self.unary(c)?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::And(parts) })
    }

    fn unary(&mut self, c: &mut Cursor) -> Result<Formula, ParseError> {
        self.nest(c)?;
        let r = self.unary_inner(c);
        self.depth -= 1;
        r
    }

    fn unary_inner(&mut self, c: &mut Cursor) -> Result<Formula, ParseError> {
        if c.eat_keyword("true") {
            return Ok(Formula::Top);
        }
        if c.eat_keyword("false") {
            return Ok(Formula::Bottom);
        }
        if c.eat_keyword("exists") {
            let bs = binders(c, self.sig)?;
            let n = self.scope.len();
            self.scope.extend(bs.iter().map(|b| b.name.clone()));
            let body = self.or(c);
            self.scope.truncate(n);
            let body = body?;
            let vs = resolve_binders(c.src, self.sig, bs, &body)?;
            return Ok(Formula::Exists(vs, Box::new(body)));
        }
        if c.eat_punct("(") {
            let f = self.or(c)?;
            c.expect_punct(")")?;
            return Ok(f);
        }
        self.atom(c)
    }

    fn atom(&mut self, c: &mut Cursor) -> Result<Formula, ParseError> {
        let (n, start, end) = match c.peek() {
            Some(Tok::Ident(_)) => symbol_name(c, "a formula")?,
            _ => return Err(c.error("expected a formula")),
        };
        if let Some(r) = self.sig.relation_index(&n) {
            let arity = self.sig.relations()[r].args.len();
            if c.eat_punct("(") {
                let args = self.term_list(c)?;
                return Ok(Formula::Atom(n, args));
            }
            if arity == 0 {
                return Ok(Formula::Atom(n, Vec::new()));
            }
            return Err(c.src.error(start, end, format!("relation `{n}` needs arguments")));
        }
        let lhs = self.term_after(c, n, start, end)?;
        if !c.eat_punct("=") {
            return Err(c.error("expected `=` after a term"));
        }
        let rhs = self.term(c)?;
        Ok(Formula::Eq(lhs, rhs))
    }

    fn term_list(&mut self, c: &mut Cursor) -> Result<Vec<Term>, ParseError> {
        let mut args = Vec::new();
        if c.eat_punct(")") {
            return Ok(args);
        }
        loop {
            args.push(self.term(c)?);
            if c.eat_punct(")") {
                return Ok(args);
            }
            c.expect_punct(",")?;
        }
    }

    fn term(&mut self, c: &mut Cursor) -> Result<Term, ParseError> {
        self.nest(c)?;
        let r = symbol_name(c, "a term").and_then(|(n, a, b)| self.term_after(c, n, a, b));
        self.depth -= 1;
        r
    }

    fn term_after(&mut self, c: &mut Cursor, n: String, start: usize, end: usize) -> Result<Term, ParseError> {
        if c.eat_punct("(") {
            if self.sig.function_index(&n).is_none() {
                let what = if self.sig.relation_index(&n).is_some() { "a relation, not a function" } else { "not a function" };
                return Err(c.src.error_of(ErrorKind::UnknownSymbol, start, end, format!("`{n}` is {what}")));
            }
            let args = self.term_list(c)?;
            return Ok(Term::App(n, args));
        }
        if self.scope.contains(&n) {
            return Ok(Term::Var(n));
        }
        if self.sig.constant_index(&n).is_some() {
            return Ok(Term::Const(n));
        }
        if self.sig.function_index(&n).is_some() {
            return Ok(Term::App(n, Vec::new()));
        }
        if self.sig.relation_index(&n).is_some() {
            return Err(c.src.error_of(ErrorKind::UnknownSymbol, start, end, format!("relation `{n}` used as a term")));
        }
        Ok(Term::Var(n))
    }
}

fn sort_error(src: &SourceFile, start: usize, end: usize, e: impl ToString) -> ParseError {
    src.error_of(ErrorKind::Sort, start, end, e.to_string())
}

/// A positive formula over `sig`, sort-checked; free variables are allowed.
pub fn parse_formula_in(src: &SourceFile, sig: &Signature) -> Result<Formula, ParseError> {
    parse_formula_with(src, sig, &[])
}

/// As [`parse_formula_in`], with the sorts of some free variables given.
pub fn parse_formula_with(src: &SourceFile, sig: &Signature, ctx: &[(String, SortId)]) -> Result<Formula, ParseError> {
    let mut c = Cursor::new(src)?;
    let start = c.offset();
    let f = FormulaParser::new(sig).or(&mut c)?;
    c.expect_end()?;
    well_sorted_in(&f, sig, &ctx.to_vec()).map_err(|e| sort_error(src, start, src.text.len(), e))?;
    Ok(f)
}

pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, ParseError> {
    parse_formula_in(&SourceFile::new("<formula>", text), sig)
}

fn sort_list(c: &mut Cursor, sig: &Signature) -> Result<Vec<SortId>, ParseError> {
    let mut out = Vec::new();
    c.expect_punct("(")?;
    if c.eat_punct(")") {
        return Ok(out);
    }
    loop {
        out.push(sort_ref(c, sig)?);
        if c.eat_punct(")") {
            return Ok(out);
        }
        c.expect_punct(",")?;
    }
}

fn declare<T, E: ToString>(c: &Cursor, r: Result<T, E>, start: usize, end: usize) -> Result<T, ParseError> {
    r.map_err(|e| c.src.error_of(ErrorKind::Duplicate, start, end, e.to_string()))
}

/// `[forall x:s, … .] premise -> conclusion`.
fn sentence(c: &mut Cursor, sig: &Signature) -> Result<HInductiveSentence, ParseError> {
    let bs = if c.eat_keyword("forall") { binders(c, sig)? } else { Vec::new() };
    let mut p = FormulaParser::new(sig);
    p.scope = bs.iter().map(|b| b.name.clone()).collect();
    let premise = p.or(c)?;
    c.expect_punct("->")?;
    let conclusion = p.or(c)?;
    let scope = Formula::And(vec![premise.clone(), conclusion.clone()]);
    let universals = resolve_binders(c.src, sig, bs, &scope)?;
    Ok(HInductiveSentence::new(universals, premise, conclusion))
}

/// A single h-inductive sentence, written as after `axiom` in a theory file.
pub fn parse_sentence(src: &SourceFile, sig: &Signature) -> Result<HInductiveSentence, ParseError> {
    let mut c = Cursor::new(src)?;
    let ax = sentence(&mut c, sig)?;
    c.expect_end()?;
    check_sentence(&ax, sig).map_err(|e| sort_error(src, 0, src.text.len(), e))?;
    Ok(ax)
}

/// Parses a theory file. Symbols must be declared before use; omitted
/// binder sorts are inferred.
pub fn parse_theory(src: &SourceFile) -> Result<Theory, ParseError> {
    let mut c = Cursor::new(src)?;
    let mut sig = Signature::new();
    let mut axioms = Vec::new();
    let mut spans = Vec::new();
    while !c.at_end() {
        let start = c.offset();
        if c.eat_keyword("sort") {
            let (n, a, b) = symbol_name(&mut c, "a sort name")?;
            declare(&c, sig.add_sort(&n), a, b)?;
        } else if c.eat_keyword("const") {
            let (n, a, b) = symbol_name(&mut c, "a constant name")?;
            c.expect_punct(":")?;
            let s = sort_ref(&mut c, &sig)?;
            declare(&c, sig.add_constant(&n, s), a, b)?;
        } else if c.eat_keyword("fun") {
            let (n, a, b) = symbol_name(&mut c, "a function name")?;
            let args = sort_list(&mut c, &sig)?;
            c.expect_punct(":")?;
            let s = sort_ref(&mut c, &sig)?;
            declare(&c, sig.add_function(&n, args, s), a, b)?;
        } else if c.eat_keyword("rel") {
            let (n, a, b) = symbol_name(&mut c, "a relation name")?;
            let args = if c.is_punct("(") { sort_list(&mut c, &sig)? } else { Vec::new() };
            declare(&c, sig.add_relation(&n, args), a, b)?;
        } else if c.eat_keyword("axiom") {
            axioms.push(sentence(&mut c, &sig)?);
            spans.push((start, c.last_end()));
        } else {
            return Err(c.error("expected `sort`, `const`, `fun`, `rel` or `axiom`"));
        }
    }
    let t = Theory::with_axioms(sig, axioms);
    if let Err((i, e)) = check_theory(&t) {
        let (a, b) = spans[i];
        return Err(sort_error(src, a, b, format!("axiom {}: {e}", i + 1)));
    }
    Ok(t)
}

/// A tuple `(a, b)`, or a bare element for a unary tuple.
fn elem_tuple(c: &mut Cursor) -> Result<Vec<(String, usize, usize)>, ParseError> {
    if !c.eat_punct("(") {
        return Ok(vec![c.name("an element")?]);
    }
    let mut out = Vec::new();
    if c.eat_punct(")") {
        return Ok(out);
    }
    loop {
        out.push(c.name("an element")?);
        if c.eat_punct(")") {
            return Ok(out);
        }
        c.expect_punct(",")?;
    }
}

fn braced<T>(c: &mut Cursor, mut item: impl FnMut(&mut Cursor) -> Result<T, ParseError>) -> Result<Vec<T>, ParseError> {
    c.expect_punct("{")?;
    let mut out = Vec::new();
    if c.eat_punct("}") {
        return Ok(out);
    }
    loop {
        out.push(item(c)?);
        if c.eat_punct("}") {
            return Ok(out);
        }
        c.expect_punct(",")?;
    }
}

type Named = (String, usize, usize);

enum Entry {
    Const(Named, Named),
    Fun(Named, Vec<(Vec<Named>, Named)>),
    Rel(Named, Vec<Vec<Named>>),
}

/// Parses a structure file against a known signature. Every sort needs a
/// carrier line, every constant a value and every function a value at every
/// tuple; relations without a line are empty.
pub fn parse_structure(src: &SourceFile, sig: Arc<Signature>) -> Result<FiniteStructure, ParseError> {
    let mut c = Cursor::new(src)?;
    if c.eat_keyword("structure") && !c.at_end() && !["sort", "const", "fun", "rel"].iter().any(|k| c.is_keyword(k)) {
        c.name("a structure name")?;
    }
    let mut carriers: Vec<Option<Vec<String>>> = vec![None; sig.sorts().len()];
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    while !c.at_end() {
        let kw = if c.eat_keyword("sort") {
            "sort"
        } else if c.eat_keyword("const") {
            "const"
        } else if c.eat_keyword("fun") {
            "fun"
        } else if c.eat_keyword("rel") {
            "rel"
        } else {
            return Err(c.error("expected `sort`, `const`, `fun` or `rel`"));
        };
        let name = symbol_name(&mut c, "a symbol")?;
        if !seen.insert((kw, name.0.clone())) {
            return Err(src.error_of(ErrorKind::Duplicate, name.1, name.2, format!("`{}` is interpreted twice", name.0)));
        }
        c.expect_punct("=")?;
        match kw {
            "sort" => {
                let Some(s) = sig.sort_id(&name.0) else {
                    return Err(src.error_of(ErrorKind::UnknownSymbol, name.1, name.2, format!("unknown sort `{}`", name.0)));
                };
                let elems = braced(&mut c, |c| c.name("an element"))?;
                let mut names = Vec::new();
                let mut distinct = BTreeSet::new();
                for (e, a, b) in elems {
                    if !distinct.insert(e.clone()) {
                        return Err(src.error_of(ErrorKind::Duplicate, a, b, format!("duplicate element {}", quote(&e))));
                    }
                    names.push(e);
                }
                carriers[s.0] = Some(names);
            }
            "const" => entries.push(Entry::Const(name, c.name("an element")?)),
            "fun" => {
                let cells = braced(&mut c, |c| {
                    let t = elem_tuple(c)?;
                    c.expect_punct("->")?;
                    Ok((t, c.name("an element")?))
                })?;
                entries.push(Entry::Fun(name, cells));
            }
            _ => entries.push(Entry::Rel(name, braced(&mut c, elem_tuple)?)),
        }
    }
    let end = src.text.len();
    let mut cs = Vec::new();
    for (i, cr) in carriers.into_iter().enumerate() {
        match cr {
            Some(v) => cs.push(v),
            None => {
                return Err(src.error_of(
                    ErrorKind::PartialInterpretation,
                    end,
                    end,
                    format!("sort `{}` has no carrier", sig.sorts()[i]),
                ))
            }
        }
    }
    let mut m = FiniteStructure::new(sig.clone(), cs).map_err(|e| match e {
        StructureError::EmptyResultSort(_) => src.error_of(ErrorKind::PartialInterpretation, end, end, e.to_string()),
        e => src.error_of(ErrorKind::Invalid, end, end, e.to_string()),
    })?;
    let index = m.name_index();
    let elem = |s: SortId, (n, a, b): &Named| -> Result<usize, ParseError> {
        index[s.0].get(n).copied().ok_or_else(|| {
            src.error_of(
                ErrorKind::UnknownElement,
                *a,
                *b,
                format!("unknown element {} of sort `{}`", quote(n), sig.sort_name(s)),
            )
        })
    };
    let tuple = |sorts: &[SortId], t: &[Named], at: &Named| -> Result<Vec<usize>, ParseError> {
        if t.len() != sorts.len() {
            return Err(src.error_of(
                ErrorKind::Invalid,
                at.1,
                at.2,
                format!("`{}` expects {} argument(s), found {}", at.0, sorts.len(), t.len()),
            ));
        }
        sorts.iter().zip(t).map(|(&s, e)| elem(s, e)).collect()
    };
    let unknown = |n: &Named| src.error_of(ErrorKind::UnknownSymbol, n.1, n.2, format!("unknown symbol `{}`", n.0));
    let mut const_done = vec![false; sig.constants().len()];
    let mut fun_done: Vec<Option<Vec<bool>>> = vec![None; sig.functions().len()];
    for en in &entries {
        match en {
            Entry::Const(n, v) => {
                let k = sig.constant_index(&n.0).ok_or_else(|| unknown(n))?;
                m.set_constant(k, elem(sig.constants()[k].sort, v)?);
                const_done[k] = true;
            }
            Entry::Fun(n, cells) => {
                let k = sig.function_index(&n.0).ok_or_else(|| unknown(n))?;
                let fd = &sig.functions()[k];
                let sizes = m.sizes();
                let mut set = vec![false; tuples(&sizes, &fd.args).count()];
                for (t, v) in cells {
                    let args = tuple(&fd.args, t, n)?;
                    let val = elem(fd.result, v)?;
                    let i = crate::model::tuple_index(&sizes, &fd.args, &args);
                    if set[i] {
                        let at = t.first().map(|x| (x.1, x.2)).unwrap_or((v.1, v.2));
                        return Err(src.error_of(ErrorKind::Duplicate, at.0, at.1, format!("`{}` is given twice at one tuple", n.0)));
                    }
                    set[i] = true;
                    m.set_function(k, &args, val);
                }
                fun_done[k] = Some(set);
            }
            Entry::Rel(n, ts) => {
                let k = sig.relation_index(&n.0).ok_or_else(|| unknown(n))?;
                let args = sig.relations()[k].args.clone();
                for t in ts {
                    let a = tuple(&args, t, n)?;
                    m.set_relation(k, &a, true);
                }
            }
        }
    }
    for (k, done) in const_done.iter().enumerate() {
        if !done {
            return Err(src.error_of(
                ErrorKind::PartialInterpretation,
                end,
                end,
                format!("constant `{}` is not interpreted", sig.constants()[k].name),
            ));
        }
    }
    let sizes = m.sizes();
    for (k, fd) in sig.functions().iter().enumerate() {
        let missing = match &fun_done[k] {
            Some(set) => set.iter().position(|b| !b),
            None => (!fd.args.iter().any(|s| sizes[s.0] == 0)).then_some(0),
        };
        if let Some(i) = missing {
            let t = crate::model::index_tuple(&sizes, &fd.args, i);
            let shown: Vec<String> = fd.args.iter().zip(&t).map(|(&s, &e)| quote(m.elem_name(s, e))).collect();
            return Err(src.error_of(
                ErrorKind::PartialInterpretation,
                end,
                end,
                format!("function `{}` is undefined at ({})", fd.name, shown.join(", ")),
            ));
        }
    }
    Ok(m)
}

fn show_tuple(m: &FiniteStructure, sorts: &[SortId], t: &[usize]) -> String {
    let parts: Vec<String> = sorts.iter().zip(t).map(|(&s, &e)| quote(m.elem_name(s, e))).collect();
    format!("({})", parts.join(", "))
}

/// The structure file text of `m`; [`parse_structure`] reads it back.
pub fn print_structure(m: &FiniteStructure, name: &str) -> String {
    let sig = m.signature();
    let mut out = String::new();
    let _ = writeln!(out, "structure {}", quote(name));
    for s in sig.sort_ids() {
        let elems: Vec<String> = m.carrier(s).iter().map(|e| quote(e)).collect();
        if elems.is_empty() {
            let _ = writeln!(out, "sort {} = {{ }}", sig.sort_name(s));
        } else {
            let _ = writeln!(out, "sort {} = {{ {} }}", sig.sort_name(s), elems.join(", "));
        }
    }
    for (k, cd) in sig.constants().iter().enumerate() {
        let _ = writeln!(out, "const {} = {}", cd.name, quote(m.elem_name(cd.sort, m.constant(k))));
    }
    for (k, fd) in sig.functions().iter().enumerate() {
        let cells: Vec<String> = m
            .function_graph(k)
            .into_iter()
            .map(|(t, v)| format!("{}->{}", show_tuple(m, &fd.args, &t), quote(m.elem_name(fd.result, v))))
            .collect();
        if cells.is_empty() {
            let _ = writeln!(out, "fun {} = {{ }}", fd.name);
        } else {
            let _ = writeln!(out, "fun {} = {{ {} }}", fd.name, cells.join(", "));
        }
    }
    for (k, rd) in sig.relations().iter().enumerate() {
        let ts: Vec<String> = m.relation_tuples(k).iter().map(|t| show_tuple(m, &rd.args, t)).collect();
        if ts.is_empty() {
            let _ = writeln!(out, "rel {} = {{ }}", rd.name);
        } else {
            let _ = writeln!(out, "rel {} = {{ {} }}", rd.name, ts.join(", "));
        }
    }
    out
}

fn flatten_and(f: Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::And(ps) => ps.into_iter().for_each(|p| flatten_and(p, out)),
        f => out.push(f),
    }
}

/// Parses a rules file: `subst` lines and
/// `rule exists y:s. A1 & … & An => replacement` lines, in priority order.
pub fn parse_rules(src: &SourceFile, sig: &Signature) -> Result<Vec<QeRule>, ParseError> {
    let mut c = Cursor::new(src)?;
    let mut out = Vec::new();
    while !c.at_end() {
        let start = c.offset();
        if c.eat_keyword("subst") {
            out.push(QeRule::Substitute);
            continue;
        }
        if !c.eat_keyword("rule") {
            return Err(c.error("expected `subst` or `rule`"));
        }
        c.expect_keyword("exists")?;
        let bs = binders(&mut c, sig)?;
        if bs.len() != 1 {
            return Err(src.error(bs[1].start, bs[1].end, "a rule eliminates exactly one variable"));
        }
        let mut p = FormulaParser::new(sig);
        p.scope = vec![bs[0].name.clone()];
        let body = p.or(&mut c)?;
        c.expect_punct("=>")?;
        p.scope.clear();
        let repl = p.or(&mut c)?;
        let end = c.last_end();
        let var = resolve_binders(src, sig, bs, &body)?.pop().unwrap();
        let mut atoms = Vec::new();
        flatten_and(body, &mut atoms);
        let whole = Formula::And(vec![Formula::exists(vec![var.clone()], Formula::conj(atoms.clone())), repl.clone()]);
        well_sorted(&whole, sig).map_err(|e| sort_error(src, start, end, e))?;
        let rule = PatternRule::new(var, atoms, repl).map_err(|e| src.error_of(ErrorKind::Invalid, start, end, e.to_string()))?;
        out.push(QeRule::Pattern(rule));
    }
    Ok(out)
}

pub fn print_rules(rules: &[QeRule]) -> String {
    let mut out = String::new();
    for r in rules {
        let _ = writeln!(out, "{r}");
    }
    out
}

fn cont_expr(c: &mut Cursor, depth: usize) -> Result<ContFormula, ParseError> {
    if depth > MAX_NESTING {
        return Err(c.error("formula nested too deeply"));
    }
    let (n, a, b) = match c.peek() {
        Some(Tok::Ident(_)) => c.name("a continuous formula")?,
        _ => return Err(c.error("expected a continuous formula")),
    };
    if n.chars().all(|ch| ch.is_ascii_digit()) {
        let num: u32 = n.parse().map_err(|_| c.src.error(a, b, "number out of range"))?;
        let den: u32 = if c.eat_punct("/") {
            let (d, da, db) = c.name("a denominator")?;
            d.parse().map_err(|_| c.src.error(da, db, "expected a positive integer"))?
        } else {
            1
        };
        if den == 0 || num > den {
            return Err(c.src.error(a, c.last_end(), "constants must lie in [0, 1]"));
        }
        return Ok(ContFormula::Const(Ratio::new(num, den)));
    }
    match n.as_str() {
        "max" | "min" | "dotminus" if c.is_punct("(") => {
            c.expect_punct("(")?;
            let l = cont_expr(c, depth + 1)?;
            c.expect_punct(",")?;
            let r = cont_expr(c, depth + 1)?;
            c.expect_punct(")")?;
            Ok(match n.as_str() {
                "max" => ContFormula::max(l, r),
                "min" => ContFormula::min(l, r),
                _ => ContFormula::dot(l, r),
            })
        }
        "inf" => {
            let (y, ..) = c.name("a variable")?;
            c.expect_punct(".")?;
            Ok(ContFormula::inf(&y, cont_expr(c, depth + 1)?))
        }
        _ => {
            let mut args = Vec::new();
            if c.eat_punct("(") && !c.eat_punct(")") {
                loop {
                    args.push(c.name("a variable")?.0);
                    if c.eat_punct(")") {
                        break;
                    }
                    c.expect_punct(",")?;
                }
            }
            Ok(ContFormula::Sym(n, args))
        }
    }
}

/// `max(a, b)`, `min(a, b)`, `dotminus(a, b)`, `inf y. body`, constants
/// `n/d` in [0, 1], and symbols applied to variables; the syntax printed by
/// `ContFormula`'s `Display`.
pub fn parse_cont_formula(text: &str) -> Result<ContFormula, ParseError> {
    let src = SourceFile::new("<formula>", text);
    let mut c = Cursor::new(&src)?;
    let f = cont_expr(&mut c, 0)?;
    c.expect_end()?;
    Ok(f)
}

/// Parses `symbol n/d` lines (one threshold each) for the threshold
/// relations of the continuous translation.
pub fn parse_thresholds(src: &SourceFile) -> Result<Vec<(String, Ratio<u32>)>, ParseError> {
    let mut c = Cursor::new(src)?;
    let mut out = Vec::new();
    while !c.at_end() {
        let (s, ..) = symbol_name(&mut c, "a symbol")?;
        let f = cont_expr(&mut c, 0)?;
        match f {
            ContFormula::Const(r) => out.push((s, r)),
            _ => return Err(c.src.error(c.last_end(), c.last_end(), "expected a threshold `n/d`")),
        }
    }
    Ok(out)
}

/// Formula lines separated by `;`, for explicit pools and lists.
pub fn parse_formula_list(src: &SourceFile, sig: &Signature) -> Result<Vec<Formula>, ParseError> {
    let mut c = Cursor::new(src)?;
    let mut out = Vec::new();
    while !c.at_end() {
        let start = c.offset();
        let f = FormulaParser::new(sig).or(&mut c)?;
        well_sorted(&f, sig).map_err(|e| sort_error(src, start, c.last_end(), e))?;
        out.push(f);
        if !c.eat_punct(";") {
            c.expect_end()?;
        }
    }
    Ok(out)
}

/// Element names per sort, for resolving `a0`-style references.
pub fn element_lookup(m: &FiniteStructure) -> BTreeMap<String, Vec<(SortId, usize)>> {
    let mut out: BTreeMap<String, Vec<(SortId, usize)>> = BTreeMap::new();
    for s in m.signature().sort_ids() {
        for (i, e) in m.carrier(s).iter().enumerate() {
            out.entry(e.clone()).or_default().push((s, i));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theory(text: &str) -> Result<Theory, ParseError> {
        parse_theory(&SourceFile::new("t.pth", text))
    }

    const DISTINCT: &str = "# three distinct constants\nsort elem\nconst c0 : elem\nconst c1 : elem\nconst c2 : elem\n\
        axiom c0 = c1 -> false\naxiom c0 = c2 -> false\naxiom c1 = c2 -> false\n";

    #[test]
    fn distinct_constants_theory() {
        let t = theory(DISTINCT).unwrap();
        assert_eq!(t.axioms.len(), 3);
        assert!(t.axioms.iter().all(|a| a.is_h_universal()));
        assert_eq!(theory(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn empty_and_inductive() {
        let t = theory("").unwrap();
        assert!(t.signature.sorts().is_empty() && t.axioms.is_empty());
        let t = theory("sort elem rel P(elem) rel R(elem, elem)\naxiom forall x. P(x) -> exists y. R(x,y)").unwrap();
        assert!(!t.axioms[0].is_h_universal());
        assert_eq!(t.axioms[0].to_string(), "forall x:elem. P(x) -> exists y:elem. R(x, y)");
    }

    #[test]
    fn sorts_inferred_across_sorts() {
        let t = theory("sort a sort b rel R(a, b)\naxiom forall x, y. R(x, y) -> exists z. R(x, z) & z = y").unwrap();
        assert_eq!(t.axioms[0].to_string(), "forall x:a, y:b. R(x, y) -> exists z:b. R(x, z) & z = y");
        let e = theory("sort a sort b rel R(a, b)\naxiom forall x. x = x -> false").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Sort);
    }

    #[test]
    fn spanned_errors() {
        let e = theory("sort elem\nrel P(elem)\naxiom P(x, x) -> false").unwrap_err();
        assert_eq!((e.kind, e.line), (ErrorKind::Sort, 3));
        let e = theory("sort elem\naxiom Q(x) -> false").unwrap_err();
        assert_eq!((e.kind, e.line, e.col), (ErrorKind::UnknownSymbol, 2, 7));
        let e = theory("sort elem sort elem").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Duplicate);
        let e = theory("sort elem\nrel P(elem)\naxiom P(x) -> ").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Syntax);
        let e = theory("sort elem rel P(elem) axiom P(x) -> P(y)").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Sort);
        assert!(theory(&"(".repeat(10_000)).is_err());
    }

    #[test]
    fn formulas_round_trip_through_display() {
        let t = theory("sort elem const c : elem fun f(elem) : elem rel P(elem) rel R(elem, elem) rel Q()").unwrap();
        let sig = &t.signature;
        for text in [
            "true",
            "P(x) & (R(x, y) | Q())",
            "exists y:elem. P(y) & f(y) = c | x = f(f(x))",
            "(exists y:elem. R(x, y)) & P(x)",
            "(P(x) & P(y)) & P(c)",
            "P(x) | (exists y:elem, z:elem. R(y, z) | false)",
        ] {
            let f = parse_formula(text, sig).unwrap();
            assert_eq!(f.to_string(), text);
            assert_eq!(parse_formula(&f.to_string(), sig).unwrap(), f);
        }
        assert_eq!(parse_formula("Q", sig).unwrap(), Formula::Atom("Q".into(), vec![]));
        assert!(parse_formula("P(x) -> P(x)", sig).is_err());
        assert!(parse_formula("R(x)", sig).is_err());
    }

    #[test]
    fn structures() {
        let t = theory(DISTINCT).unwrap();
        let sig = Arc::new(t.signature.clone());
        let text = "structure M\nsort elem = { a0, a1, a2 }\nconst c0 = a0\nconst c1 = a1\nconst c2 = a2\n";
        let m = parse_structure(&SourceFile::new("m", text), sig.clone()).unwrap();
        assert_eq!(m.sizes(), vec![3]);
        assert_eq!(print_structure(&m, "M"), text);
        let e = parse_structure(&SourceFile::new("m", "structure M\nsort elem = { a0 }\nconst c1 = a0\nconst c2 = a0"), sig.clone()).unwrap_err();
        assert_eq!(e.kind, ErrorKind::PartialInterpretation);
        let e = parse_structure(&SourceFile::new("m", "sort elem = { a0 }\nconst c0 = b"), sig).unwrap_err();
        assert_eq!((e.kind, e.line, e.col), (ErrorKind::UnknownElement, 2, 12));
    }

    #[test]
    fn structure_functions_and_quoting() {
        let t = theory("sort elem fun f(elem) : elem rel P(elem) rel E(elem, elem) rel Q()").unwrap();
        let sig = Arc::new(t.signature);
        let text = "structure \"the M\"\nsort elem = { \"[a0]\", a1 }\nfun f = { (\"[a0]\")->a1, (a1)->a1 }\nrel P = { (a1) }\nrel E = { }\nrel Q = { () }\n";
        let m = parse_structure(&SourceFile::new("m", text), sig.clone()).unwrap();
        assert_eq!(m.elem_name(SortId(0), 0), "[a0]");
        assert!(m.holds(2, &[]));
        assert_eq!(print_structure(&m, "the M"), text);
        let partial = "sort elem = { a0, a1 }\nfun f = { (a0)->a1 }";
        let e = parse_structure(&SourceFile::new("m", partial), sig.clone()).unwrap_err();
        assert_eq!(e.kind, ErrorKind::PartialInterpretation);
        assert!(e.message.contains("(a1)"), "{e}");
        let dup = "sort elem = { a0 }\nfun f = { a0->a0, a0->a0 }";
        assert_eq!(parse_structure(&SourceFile::new("m", dup), sig).unwrap_err().kind, ErrorKind::Duplicate);
    }

    #[test]
    fn rules_round_trip() {
        let t = theory("sort elem rel P0(elem) rel P1(elem)").unwrap();
        let text = "subst\nrule exists y:elem. P0(y) & P1(y) => false\nrule exists y:elem. P0(y) => true\n";
        let rules = parse_rules(&SourceFile::new("r", text), &t.signature).unwrap();
        assert_eq!(rules.len(), 3);
        assert_eq!(print_rules(&rules), text);
        let bad = parse_rules(&SourceFile::new("r", "rule exists y. P0(y) | P1(y) => true"), &t.signature).unwrap_err();
        assert_eq!(bad.kind, ErrorKind::Invalid);
        let bad = parse_rules(&SourceFile::new("r", "rule exists y. P0(y) => P1(z)"), &t.signature).unwrap_err();
        assert_eq!(bad.kind, ErrorKind::Invalid);
    }

    #[test]
    fn continuous_formulas() {
        for text in ["max(d(x, y), 3/8)", "inf y. dotminus(f(x), min(0, 1))", "g"] {
            let f = parse_cont_formula(text).unwrap();
            assert_eq!(parse_cont_formula(&f.to_string()).unwrap(), f);
        }
        assert_eq!(parse_cont_formula("2/4").unwrap(), ContFormula::constant(1, 2));
        assert!(parse_cont_formula("3/2").is_err());
        assert!(parse_cont_formula("1/0").is_err());
        let th = parse_thresholds(&SourceFile::new("t", "d 1/2\nf 3/8 # c\n")).unwrap();
        assert_eq!(th, vec![("d".to_string(), Ratio::new(1, 2)), ("f".to_string(), Ratio::new(3, 8))]);
    }
}

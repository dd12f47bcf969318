use std::fmt;

use thiserror::Error;

use super::formula::{Formula, HInductiveSentence, Term, Theory};
use super::signature::{Signature, SortId, Symbol};

/// Child-index path from the root of a formula to the offending node.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodePath(pub Vec<usize>);

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "root");
        }
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SortError {
    #[error("unknown symbol `{name}` at {path}")]
    UnknownSymbol { name: String, path: NodePath },
    #[error("unknown sort `{name}` at {path}")]
    UnknownSort { name: String, path: NodePath },
    #[error("`{name}` expects {expected} argument(s), found {found} at {path}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
        path: NodePath,
    },
    #[error("sort mismatch at {path}: expected `{expected}`, found `{found}`")]
    SortMismatch {
        expected: String,
        found: String,
        path: NodePath,
    },
    #[error("cannot determine the sort of variable `{var}`")]
    UnresolvedSort { var: String },
    #[error("free variable `{var}` of an axiom is not universally bound")]
    UnboundVariable { var: String },
}

/// Sorted free variables, in order of first occurrence.
pub type SortContext = Vec<(String, SortId)>;

struct Checker<'a> {
    sig: &'a Signature,
    free: SortContext,
    bound: Vec<(String, SortId)>,
    progress: bool,
    strict: bool,
}

impl<'a> Checker<'a> {
    fn lookup(&self, v: &str) -> Option<SortId> {
        self.bound
            .iter()
            .rev()
            .find(|(n, _)| n == v)
            .map(|(_, s)| *s)
            .or_else(|| self.free.iter().find(|(n, _)| n == v).map(|(_, s)| *s))
    }

    fn is_bound(&self, v: &str) -> bool {
        self.bound.iter().any(|(n, _)| n == v)
    }

    fn mismatch(&self, expected: SortId, found: SortId, path: &[usize]) -> SortError {
        SortError::SortMismatch {
            expected: self.sig.sort_name(expected).to_string(),
            found: self.sig.sort_name(found).to_string(),
            path: NodePath(path.to_vec()),
        }
    }

    fn term(&mut self, t: &Term, expected: Option<SortId>, path: &mut Vec<usize>) -> Result<Option<SortId>, SortError> {
        let found = match t {
            Term::Var(v) => match self.lookup(v) {
                Some(s) => Some(s),
                None => {
                    if let Some(s) = expected {
                        if !self.is_bound(v) {
                            self.free.push((v.clone(), s));
                            self.progress = true;
                        }
                    }
                    return Ok(expected);
                }
            },
            Term::Const(c) => match self.sig.symbol(c) {
                Some(Symbol::Const(i)) => Some(self.sig.constants()[i].sort),
                _ => {
                    return Err(SortError::UnknownSymbol {
                        name: c.clone(),
                        path: NodePath(path.clone()),
                    })
                }
            },
            Term::App(g, args) => match self.sig.symbol(g) {
                Some(Symbol::Func(i)) => {
                    let decl = &self.sig.functions()[i];
                    if decl.args.len() != args.len() {
                        return Err(SortError::ArityMismatch {
                            name: g.clone(),
                            expected: decl.args.len(),
                            found: args.len(),
                            path: NodePath(path.clone()),
                        });
                    }
                    let arg_sorts = decl.args.clone();
                    let result = decl.result;
                    for (k, (a, s)) in args.iter().zip(arg_sorts).enumerate() {
                        path.push(k);
                        self.term(a, Some(s), path)?;
                        path.pop();
                    }
                    Some(result)
                }
                _ => {
                    return Err(SortError::UnknownSymbol {
                        name: g.clone(),
                        path: NodePath(path.clone()),
                    })
                }
            },
        };
        if let (Some(e), Some(f)) = (expected, found) {
            if e != f {
                return Err(self.mismatch(e, f, path));
            }
        }
        Ok(found)
    }

    fn formula(&mut self, phi: &Formula, path: &mut Vec<usize>) -> Result<(), SortError> {
        match phi {
            Formula::Top | Formula::Bottom => Ok(()),
            Formula::Atom(r, args) => match self.sig.symbol(r) {
                Some(Symbol::Rel(i)) => {
                    let decl = &self.sig.relations()[i];
                    if decl.args.len() != args.len() {
                        return Err(SortError::ArityMismatch {
                            name: r.clone(),
                            expected: decl.args.len(),
                            found: args.len(),
                            path: NodePath(path.clone()),
                        });
                    }
                    let arg_sorts = decl.args.clone();
                    for (k, (a, s)) in args.iter().zip(arg_sorts).enumerate() {
                        path.push(k);
                        self.term(a, Some(s), path)?;
                        path.pop();
                    }
                    Ok(())
                }
                _ => Err(SortError::UnknownSymbol {
                    name: r.clone(),
                    path: NodePath(path.clone()),
                }),
            },
            Formula::Eq(a, b) => {
                path.push(0);
                let sa = self.term(a, None, path)?;
                path.pop();
                path.push(1);
                let sb = self.term(b, sa, path)?;
                path.pop();
                if sa.is_none() && sb.is_some() {
                    path.push(0);
                    self.term(a, sb, path)?;
                    path.pop();
                }
                if self.strict && (sa.is_none() && sb.is_none()) {
                    if let Some(s) = self.sig.unique_sort() {
                        path.push(0);
                        self.term(a, Some(s), path)?;
                        path.pop();
                        path.push(1);
                        self.term(b, Some(s), path)?;
                        path.pop();
                    } else {
                        let v = a.vars().into_iter().next().unwrap_or_default();
                        return Err(SortError::UnresolvedSort { var: v });
                    }
                }
                Ok(())
            }
            Formula::And(ps) | Formula::Or(ps) => {
                for (k, p) in ps.iter().enumerate() {
                    path.push(k);
                    self.formula(p, path)?;
                    path.pop();
                }
                Ok(())
            }
            Formula::Exists(vs, body) => {
                let n = self.bound.len();
                for v in vs {
                    let s = self.sig.sort_id(&v.sort).ok_or_else(|| SortError::UnknownSort {
                        name: v.sort.clone(),
                        path: NodePath(path.clone()),
                    })?;
                    self.bound.push((v.name.clone(), s));
                }
                path.push(0);
                let r = self.formula(body, path);
                path.pop();
                self.bound.truncate(n);
                r
            }
        }
    }
}

fn run(phi: &Formula, sig: &Signature, ctx: &SortContext) -> Result<SortContext, SortError> {
    let mut checker = Checker {
        sig,
        free: ctx.clone(),
        bound: Vec::new(),
        progress: true,
        strict: false,
    };
    while checker.progress {
        checker.progress = false;
        checker.formula(phi, &mut Vec::new())?;
    }
    checker.strict = true;
    checker.formula(phi, &mut Vec::new())?;
    // Order the context by first occurrence; caller-provided entries keep their sort.
    let mut out = SortContext::new();
    for v in phi.free_vars() {
        match checker.free.iter().find(|(n, _)| *n == v) {
            Some((_, s)) => out.push((v, *s)),
            None => match sig.unique_sort() {
                Some(s) => out.push((v, s)),
                None => return Err(SortError::UnresolvedSort { var: v }),
            },
        }
    }
    Ok(out)
}

/// Checks `phi` against `sig`, returning the sort of each free variable.
pub fn well_sorted(phi: &Formula, sig: &Signature) -> Result<SortContext, SortError> {
    run(phi, sig, &SortContext::new())
}

/// As [`well_sorted`], with some free-variable sorts fixed in advance.
pub fn well_sorted_in(phi: &Formula, sig: &Signature, ctx: &SortContext) -> Result<SortContext, SortError> {
    run(phi, sig, ctx)
}

/// Checks an axiom: premise and conclusion well-sorted under its universal
/// binder, with no other free variables.
pub fn check_sentence(ax: &HInductiveSentence, sig: &Signature) -> Result<SortContext, SortError> {
    let mut ctx = SortContext::new();
    for v in &ax.universals {
        let s = sig.sort_id(&v.sort).ok_or_else(|| SortError::UnknownSort {
            name: v.sort.clone(),
            path: NodePath::default(),
        })?;
        ctx.push((v.name.clone(), s));
    }
    for part in [&ax.premise, &ax.conclusion] {
        let got = well_sorted_in(part, sig, &ctx)?;
        for (v, _) in got {
            if !ctx.iter().any(|(n, _)| *n == v) {
                return Err(SortError::UnboundVariable { var: v });
            }
        }
    }
    Ok(ctx)
}

pub fn check_theory(t: &Theory) -> Result<(), (usize, SortError)> {
    for (i, ax) in t.axioms.iter().enumerate() {
        check_sentence(ax, &t.signature).map_err(|e| (i, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::formula::VarDecl;

    fn sig() -> Signature {
        let mut s = Signature::new();
        let elem = s.add_sort("elem").unwrap();
        let other = s.add_sort("other").unwrap();
        s.add_relation("P0", vec![elem]).unwrap();
        s.add_function("f", vec![elem], other).unwrap();
        s.add_constant("c", other).unwrap();
        s
    }

    #[test]
    fn top_has_empty_context() {
        assert_eq!(well_sorted(&Formula::Top, &sig()).unwrap(), vec![]);
    }

    #[test]
    fn atom_assigns_argument_sort() {
        let f = Formula::atom("P0", vec![Term::var("x")]);
        assert_eq!(well_sorted(&f, &sig()).unwrap(), vec![("x".to_string(), SortId(0))]);
    }

    #[test]
    fn function_result_sort_is_checked() {
        let f = Formula::atom("P0", vec![Term::app("f", vec![Term::var("x")])]);
        let err = well_sorted(&f, &sig()).unwrap_err();
        assert_eq!(
            err,
            SortError::SortMismatch {
                expected: "elem".into(),
                found: "other".into(),
                path: NodePath(vec![0])
            }
        );
    }

    #[test]
    fn arity_and_unknown_symbols() {
        let f = Formula::and(vec![Formula::Top, Formula::atom("P0", vec![])]);
        assert!(matches!(
            well_sorted(&f, &sig()),
            Err(SortError::ArityMismatch { path, .. }) if path == NodePath(vec![1])
        ));
        let g = Formula::atom("Q", vec![]);
        assert!(matches!(well_sorted(&g, &sig()), Err(SortError::UnknownSymbol { .. })));
    }

    #[test]
    fn equality_propagates_sorts_both_ways() {
        let f = Formula::and(vec![
            Formula::eq(Term::var("y"), Term::var("x")),
            Formula::eq(Term::app("f", vec![Term::var("z")]), Term::var("x")),
        ]);
        let ctx = well_sorted(&f, &sig()).unwrap();
        assert_eq!(
            ctx,
            vec![("y".into(), SortId(1)), ("x".into(), SortId(1)), ("z".into(), SortId(0))]
        );
    }

    #[test]
    fn ambiguous_equality_in_multisorted_signature() {
        let f = Formula::eq(Term::var("x"), Term::var("y"));
        assert!(matches!(well_sorted(&f, &sig()), Err(SortError::UnresolvedSort { .. })));
    }

    #[test]
    fn bound_variables_use_binder_sort() {
        let f = Formula::exists(
            vec![VarDecl::new("y", "other")],
            Formula::eq(Term::var("y"), Term::app("f", vec![Term::var("x")])),
        );
        assert_eq!(well_sorted(&f, &sig()).unwrap(), vec![("x".into(), SortId(0))]);
        let bad = Formula::exists(vec![VarDecl::new("y", "elem")], Formula::eq(Term::var("y"), Term::constant("c")));
        assert!(matches!(well_sorted(&bad, &sig()), Err(SortError::SortMismatch { .. })));
    }

    #[test]
    fn axiom_free_variables_must_be_universal() {
        let ax = HInductiveSentence::new(vec![], Formula::atom("P0", vec![Term::var("x")]), Formula::Bottom);
        assert!(matches!(check_sentence(&ax, &sig()), Err(SortError::UnboundVariable { .. })));
    }
}

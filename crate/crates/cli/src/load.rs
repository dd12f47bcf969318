//! Reading input files and parsing the small flag languages.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use poslog::io::{self, element_lookup, parse_formula_with, parse_structure, parse_theory, SourceFile};
use poslog::model::FiniteStructure;
use poslog::morphism::FormulaPool;
use poslog::search::Bound;
use poslog::syntax::{Formula, Signature, SortId, Theory};
use serde_json::Value;

pub type Fallible<T> = Result<T, String>;

pub fn source(path: &Path) -> Fallible<SourceFile> {
    SourceFile::read(path).map_err(|e| e.to_string())
}

pub fn theory(path: &Path) -> Fallible<Theory> {
    parse_theory(&source(path)?).map_err(|e| e.to_string())
}

pub fn structure(path: &Path, sig: &Signature) -> Fallible<FiniteStructure> {
    parse_structure(&source(path)?, Arc::new(sig.clone())).map_err(|e| e.to_string())
}

pub fn json(path: &Path) -> Fallible<Value> {
    let src = source(path)?;
    serde_json::from_str(&src.text).map_err(|e| format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
}

/// Paths inside a JSON file are relative to the file's directory.
pub fn relative(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        return p.to_path_buf();
    }
    base.parent().unwrap_or(Path::new("")).join(p)
}

pub fn structure_loader<'a>(base: &'a Path, sig: &'a Signature) -> impl FnMut(&str) -> Result<FiniteStructure, String> + 'a {
    move |p: &str| structure(&relative(base, p), sig)
}

/// A formula given on the command line, with some free-variable sorts fixed.
pub fn formula(text: &str, sig: &Signature, ctx: &[(String, SortId)]) -> Fallible<Formula> {
    parse_formula_with(&SourceFile::new("<argument>", text), sig, ctx).map_err(|e| e.to_string())
}

pub fn sentence(text: &str, sig: &Signature) -> Fallible<Formula> {
    let f = formula(text, sig, &[])?;
    if let Some(v) = f.free_vars().first() {
        return Err(format!("`{text}` has the free variable `{v}`; a sentence is expected"));
    }
    Ok(f)
}

/// `k`, `sort=k,…` or `k,sort=k,…`; unlisted sorts get `k` (default 4).
pub fn bound(text: &str, sig: &Signature) -> Fallible<Bound> {
    let mut b = Bound::uniform(4);
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.split_once('=') {
            Some((s, k)) => {
                let s = s.trim();
                if sig.sort_id(s).is_none() {
                    return Err(format!("--bound: unknown sort `{s}`"));
                }
                let k = k.trim().parse().map_err(|_| format!("--bound: bad size `{k}`"))?;
                b.per_sort.insert(s.to_string(), k);
            }
            None => b.default = item.parse().map_err(|_| format!("--bound: bad size `{item}`"))?,
        }
    }
    Ok(b)
}

pub fn pool(depth: usize, size: usize, file: Option<&Path>, sig: &Signature) -> Fallible<FormulaPool> {
    match file {
        Some(p) => {
            let fs = io::parse_formula_list(&source(p)?, sig).map_err(|e| e.to_string())?;
            Ok(FormulaPool::explicit(fs))
        }
        None => Ok(FormulaPool::new(depth, size)),
    }
}

pub fn names(text: &str) -> Vec<String> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

/// Elements by name, comma-separated; `sort:name` when a name is ambiguous.
pub fn elements(text: &str, m: &FiniteStructure) -> Fallible<Vec<(SortId, usize)>> {
    let lookup = element_lookup(m);
    names(text)
        .into_iter()
        .map(|n| {
            if let Some((s, e)) = n.split_once(':') {
                let sid = m.signature().sort_id(s).ok_or_else(|| format!("unknown sort `{s}`"))?;
                return m.elem_index(sid, e).map(|i| (sid, i)).ok_or_else(|| format!("no element `{e}` in sort `{s}`"));
            }
            match lookup.get(&n).map(Vec::as_slice) {
                Some([one]) => Ok(*one),
                Some(_) => Err(format!("element `{n}` is in several sorts; write `sort:{n}`")),
                None => Err(format!("unknown element `{n}`")),
            }
        })
        .collect()
}

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::syntax::{Signature, SortId};

use super::refute::GroundRefutation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Status {
    Holds,
    Fails,
    UnknownAtBound,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Holds => "Holds",
            Status::Fails => "Fails",
            Status::UnknownAtBound => "UnknownAtBound",
        })
    }
}

/// Per-sort size bound: `default` for every sort not listed in `per_sort`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bound {
    pub default: usize,
    pub per_sort: BTreeMap<String, usize>,
}

impl Bound {
    pub fn uniform(k: usize) -> Self {
        Bound {
            default: k,
            per_sort: BTreeMap::new(),
        }
    }

    pub fn for_sort(&self, name: &str) -> usize {
        self.per_sort.get(name).copied().unwrap_or(self.default)
    }

    pub fn sizes(&self, sig: &Signature) -> Vec<usize> {
        sig.sorts().iter().map(|s| self.for_sort(s)).collect()
    }

    pub fn for_id(&self, sig: &Signature, s: SortId) -> usize {
        self.for_sort(sig.sort_name(s))
    }
}

impl From<usize> for Bound {
    fn from(k: usize) -> Self {
        Bound::uniform(k)
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.per_sort.is_empty() {
            return write!(f, "{}", self.default);
        }
        write!(f, "{}", self.default)?;
        for (s, k) in &self.per_sort {
            write!(f, ",{s}={k}")?;
        }
        Ok(())
    }
}

impl Serialize for Bound {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        if self.per_sort.is_empty() {
            ser.serialize_u64(self.default as u64)
        } else {
            let mut m: BTreeMap<String, usize> = self.per_sort.clone();
            m.insert("*".into(), self.default);
            m.serialize(ser)
        }
    }
}

/// Outcome of a bounded semantic question.
///
/// `UnknownAtBound` never claims inconsistency; the only unconditional
/// negative is an attached [`GroundRefutation`].
#[derive(Clone, Debug)]
pub struct Verdict<W> {
    pub status: Status,
    pub witness: Option<W>,
    pub bound: Bound,
    pub refutation: Option<GroundRefutation>,
    /// Label of the formula pool the verdict is relative to, if any.
    pub pool: Option<String>,
    pub notes: Vec<String>,
}

impl<W> Verdict<W> {
    pub fn holds(witness: Option<W>, bound: impl Into<Bound>) -> Self {
        Verdict {
            status: Status::Holds,
            witness,
            bound: bound.into(),
            refutation: None,
            pool: None,
            notes: Vec::new(),
        }
    }

    pub fn fails(witness: W, bound: impl Into<Bound>) -> Self {
        Verdict {
            status: Status::Fails,
            witness: Some(witness),
            bound: bound.into(),
            refutation: None,
            pool: None,
            notes: Vec::new(),
        }
    }

    pub fn unknown(witness: Option<W>, bound: impl Into<Bound>) -> Self {
        Verdict {
            status: Status::UnknownAtBound,
            witness,
            bound: bound.into(),
            refutation: None,
            pool: None,
            notes: Vec::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn with_pool(mut self, label: impl Into<String>) -> Self {
        self.pool = Some(label.into());
        self
    }

    pub fn with_refutation(mut self, r: Option<GroundRefutation>) -> Self {
        self.refutation = r;
        self
    }

    pub fn is_holds(&self) -> bool {
        self.status == Status::Holds
    }

    pub fn is_fails(&self) -> bool {
        self.status == Status::Fails
    }

    pub fn is_unknown(&self) -> bool {
        self.status == Status::UnknownAtBound
    }

    pub fn map<V>(self, f: impl FnOnce(W) -> V) -> Verdict<V> {
        Verdict {
            status: self.status,
            witness: self.witness.map(f),
            bound: self.bound,
            refutation: self.refutation,
            pool: self.pool,
            notes: self.notes,
        }
    }
}

//! Syntactic transformations: Morleyisation, positive quantifier
//! elimination from user-supplied rules, and the translation of continuous
//! formulas over grid-valued structures into positive ones.

pub mod cont;
pub mod fo;
pub mod morley;
pub mod qe;

#[cfg(test)]
mod oracle;

use thiserror::Error;

pub use cont::{cont_to_pos, cont_translate, pos_name, threshold_name, ContFormula, GridStructure, GridTable, Translation, METRIC};
pub use fo::{FoAxiom, FoFormula, FoTheory, Fragment};
pub use morley::{morleyise, MorSymbol, Morleyisation};
pub use qe::{qe_eliminate, qe_verify, PatternRule, QeRule, Separation};

use crate::model::{EvalError, StructureError};
use crate::search::SearchError;
use crate::syntax::{NormalFormError, SignatureError, SortError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("fragment is not closed under subformulas: {0} is missing")]
    NotSubformulaClosed(String),
    #[error("formula {0} is not in the fragment")]
    NotInFragment(String),
    #[error("no rule applies to {0}")]
    NoRuleApplies(String),
    #[error("bad rule: {0}")]
    BadRule(String),
    #[error("threshold {0} is not on the grid")]
    OffGridThreshold(String),
    #[error("undeclared symbol {0}")]
    UndeclaredSymbol(String),
    #[error("no positive translation for {0}")]
    Untranslatable(String),
    #[error("bad grid structure: {0}")]
    BadGrid(String),
    #[error("{0}")]
    BadInput(String),
    #[error(transparent)]
    Sort(#[from] SortError),
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Normal(#[from] NormalFormError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

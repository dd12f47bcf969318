//! Signatures, positive formulas, sort checking and normal forms.

pub mod formula;
pub mod normal;
pub mod signature;
pub mod sorts;

pub use formula::{fresh_var, Formula, HInductiveSentence, Term, Theory, VarDecl};
pub use normal::{
    canonicalize, regular_disjuncts, rename_apart, to_prenex_existential, to_regular_disjunction,
    to_regular_disjunction_with_limit, NormalFormError, RegularDisjunct, DEFAULT_DISJUNCT_LIMIT,
};
pub use signature::{ConstDecl, FuncDecl, RelDecl, Signature, SignatureError, SortId, Symbol};
pub use sorts::{check_sentence, check_theory, well_sorted, well_sorted_in, NodePath, SortContext, SortError};

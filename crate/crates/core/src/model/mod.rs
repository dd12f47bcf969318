//! Finite structures and satisfaction of positive formulas.

pub mod diagram;
pub mod eval;
pub mod heq;
pub mod structure;
pub mod union;

pub use diagram::{diagram_over, positive_diagram, Diagram};
pub use eval::{
    check_axioms, check_model, compile, compile_open, eval, eval_sentence, is_model, Assignment, Compiled, CompiledAxiom,
    Counterexample, EvalError, Interp, T3,
};
pub use heq::{class_structure, lift_automorphism, quotient_heq, EquivSpec, HeqError, HeqQuotient, LiftedAutomorphism, RelTemplate};
pub use structure::{index_tuple, table_len, tuple_index, tuples, FiniteStructure, StructureError};
pub use union::{directed_union, DirectedUnion, UnionError};

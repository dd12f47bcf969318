//! Maps between finite structures: homomorphism, isomorphism and immersion.

pub mod hom;
pub mod immersion;
pub mod map;
pub mod pool;

pub use hom::{automorphisms, find_homomorphism, find_homomorphisms, find_isomorphism, find_isomorphisms};
pub use immersion::{check_immersion, ImmersionError, ImmersionFailure};
pub use map::{is_homomorphism, verify_homomorphism, verify_isomorphism, MapError, StructureMap};
pub use pool::{FormulaPool, PoolFormula};

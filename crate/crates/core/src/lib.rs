//! Positive (coherent) first-order logic over finite structures.
//!
//! The crate is organised bottom-up: [`syntax`] holds formulas and theories,
//! [`model`] finite structures and satisfaction, [`morphism`] maps between
//! structures, [`search`] the bounded model finder, and the remaining modules
//! build the p.c.-model analysis, classification witnesses and syntactic
//! translations on top of those.

pub mod syntax;
pub mod model;
pub mod morphism;
pub mod search;
pub mod analysis;
pub mod classify;
pub mod translate;
pub mod io;
pub mod gen;

//! Workbench for finite partial Boolean algebras.

pub mod algebra;
pub mod analysis;
pub mod bitset;
pub mod cliques;
pub mod rational;
pub mod registry;
pub mod saturation;
pub mod scenario;
pub mod solvers;

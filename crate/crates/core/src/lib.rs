//! Gowers uniformity norms, dual functions and anti-uniform decompositions
//! for lattice step functions on `wZ^d`, `d <= 3`.

pub mod antiuniform;
pub mod bench;
pub mod budget;
pub mod check;
pub mod cube;
pub mod dual;
pub mod error;
pub mod exponents;
pub mod families;
pub mod gowers;
pub mod grid;
pub mod io;
pub mod spectrum;
pub mod suite;
mod sum;

pub use check::{CheckParams, CheckRecord};
pub use cube::{FunctionTuple, VertexSet};
pub use error::{GhkError, Result};
pub use exponents::{exponent_triple, ExponentTriple, Rational};
pub use grid::{GridFunction, LatticeBox};

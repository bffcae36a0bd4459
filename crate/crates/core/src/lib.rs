//! Discrete Hamilton-Jacobi dynamics on periodic grids and a dual ascent
//! solver for terminal density control problems.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod hamiltonian;
pub mod objective;
pub mod optimizer;
pub mod par;

pub use error::{HjdError, Result};

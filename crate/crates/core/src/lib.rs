//! Pseudo-fermionic analysis of 2×2 non-Hermitian Hamiltonians.
//!
//! The crate is organized bottom-up: [`mat2`] carries the linear algebra,
//! [`pf`] builds pseudo-fermion pairs, [`decomposition`] writes a Hamiltonian
//! as `ωN + ρ` and derives metrics and the Hermitian counterpart,
//! [`symmetry`] handles PT-type phases, and [`catalog`] holds the model zoo.

pub mod catalog;
pub mod decomposition;
pub mod mat2;
pub mod pf;
pub mod symmetry;

pub use mat2::{Mat2, Vec2, C64};

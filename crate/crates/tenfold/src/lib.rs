//! Symmetry classes of free-fermion systems and their geometry.
//!
//! The crate models finite free-fermion systems: Fock-space operators built
//! from the canonical anticommutation relations, the tenfold classification
//! of quadratic Hamiltonians by antiunitary and transposing symmetries,
//! the compact symmetric spaces each class's time evolutions inhabit, the
//! structural suspension maps relating consecutive classes, and the
//! decomposition of weakly interacting time evolutions into a free part and
//! an orthogonal interaction generator.

pub mod cartan;
pub mod equivariant;
pub mod error;
pub mod fock;
pub mod symmetry;
pub mod mat;
pub mod suspension;
pub mod weak;

pub use error::{Error, Result};

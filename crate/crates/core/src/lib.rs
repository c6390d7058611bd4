//! Exact computations for symmetrical 2-extensions of the grid `Λ^d`.

pub mod canon;
pub mod catalog;
pub mod enumeration;
pub mod error;
pub mod finite;
pub mod generate;
pub mod grid;
pub mod lattice;
pub mod periodic;
pub mod pipeline;
pub mod realization;
pub mod space_group;

pub use error::{Error, Result};
pub use finite::{PointSet, Structure};
pub use grid::{GridAutomorphism, SignedPermutation, Vector};
pub use lattice::Lattice;
pub use space_group::SpaceGroupNF;

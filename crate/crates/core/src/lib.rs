//! Exact construction and verification of signed measure-valued solutions of
//! the continuity equation `∂_t μ + div(b μ) = 0` driven by bounded fields
//! whose characteristics are unique, at a finite approximation stage `K`.
//!
//! * [`stagegen`] builds the dense `±1` sign pattern stage by stage.
//! * [`pwl`] integrates it into the graph function `f_K` and analyses its
//!   level sets.
//! * [`measures`] and [`ce_residual`] assemble the atomic solution family and
//!   check the weak formulation.
//! * [`flow1d`] covers continuous one-dimensional fields and characteristics.
//! * [`octa3d`] is the uniformly bounded planar example built on an
//!   octahedron.

pub mod ce_residual;
pub mod error;
pub mod flow1d;
pub mod measures;
pub mod octa3d;
pub mod poly;
pub mod pwl;
pub mod quad;
pub mod rational;
pub mod stagegen;
pub mod testfn;

pub use error::{Error, Result};
pub use rational::Rational;

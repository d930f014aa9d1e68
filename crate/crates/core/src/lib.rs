//! Numerical verification of higher-order Poincaré, Adams and Orlicz-Sobolev
//! type inequalities for measures `dμ = e^{-U} dx` on `ℝ` and `ℝ²`.
//!
//! The pipeline is: a [`potential::PotentialSpec`] is discretized on a truncated
//! grid ([`discretize::GridMeasure`]); functions on the grid are measured with
//! weighted Sobolev, Orlicz and operator norms; minimizers and the Dirichlet
//! operator spectrum feed the constant estimators in [`verify`]; [`lab`] runs
//! JSON-configured experiments and writes reports.

pub mod dirichlet;
pub mod discretize;
pub mod error;
pub mod evolve;
pub mod lab;
pub mod minimize;
pub mod multi_index;
pub mod orlicz;
mod par;
pub mod potential;
pub mod verify;

pub use error::{Error, Result};
pub use multi_index::MultiIndex;

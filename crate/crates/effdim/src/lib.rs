//! Effective dimension of weighted function spaces on the unit cube.
//!
//! The crate has two halves. The space-level half (`weights`, `bounds`)
//! represents weight families `gamma_u`, computes the critical radius of the
//! ball that just admits a unit-variance function, and turns Poincaré-type
//! inequalities into upper bounds on truncation and superposition dimension.
//! The function-level half (`quadrature`, `decompose`, `estimators`) measures
//! concrete integrands: ANOVA and anchored decompositions, weighted norms,
//! per-function effective and mean dimension, and pick-freeze Monte Carlo
//! estimators for dimensions where full enumeration is impossible.

pub mod bounds;
pub mod cli;
pub mod decompose;
pub mod error;
pub mod estimators;
mod exec;
pub mod integrand;
mod numeric;
pub mod quadrature;
pub mod subset;
pub mod weights;

pub use error::{Error, Result};
pub use subset::SubsetMask;
pub use weights::{ConditionVerdict, EmptyWeight, WeightScheme};

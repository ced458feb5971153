//! Numerical laboratory for 3D piecewise-smooth vector fields: tangency and
//! sliding classification, Filippov dynamics, two-fold return maps, and
//! one-parameter unfoldings.

pub mod bifurcate;
pub mod catalog;
pub mod classify;
pub mod error;
pub mod flow;
pub mod jet;
pub mod lie;
pub mod poly;
pub mod sliding;
pub mod system;
pub mod twofold;

#[cfg(test)]
pub(crate) mod test_fixtures;

pub use error::PsvfError;
pub use system::{PiecewiseSystem, RegionTag, ScalarField, Side, ToleranceConfig, VectorField};

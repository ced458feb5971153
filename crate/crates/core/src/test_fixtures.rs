//! Re-exports of cataloged systems under the names unit tests grew up with,
//! plus closed-form oracles that only tests need.

pub use crate::catalog::{
    continuum_system, elliptic_twofold_system, hopf_variant_system, hyperbolic_twofold_system,
    null_sliding_system, parabolic_twofold_system,
};

use crate::catalog;
use crate::poly::{Poly, Term};
use crate::system::PiecewiseSystem;

fn t(exp: [u8; 3], c: f64) -> Term {
    Term { exp, c }
}

/// Sliding Hopf example with parameter mu.
pub fn hopf_system(mu: f64) -> PiecewiseSystem {
    catalog::hopf_example_system(mu)
}

/// Eight-parameter saddle-node pair; sliding field (mu - x1^2, -x2).
pub fn saddle_node_system(mu: f64, a: &[f64; 8]) -> PiecewiseSystem {
    catalog::saddle_node_example_system(mu, a)
}

/// Expected chart component i of the Hopf example's sliding field; exact for
/// mu with fl((mu - 1) + 1) == mu.
pub fn hopf_sliding_component(i: usize, mu: f64) -> Poly {
    match i {
        0 => Poly::from_terms([
            t([1, 0, 0], mu),
            t([0, 1, 0], -1.0),
            t([3, 0, 0], -1.0),
            t([1, 2, 0], -1.0),
        ]),
        _ => Poly::from_terms([
            t([1, 0, 0], 1.0),
            t([0, 1, 0], mu),
            t([2, 1, 0], -1.0),
            t([0, 3, 0], -1.0),
        ]),
    }
}

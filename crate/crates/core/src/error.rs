//! Crate-wide error type; jet arithmetic keeps its own smaller enum.

use thiserror::Error;

use crate::jet::JetError;

/// Errors shared across the geometry, classification, and flow modules.
#[derive(Debug, Error)]
pub enum PsvfError {
    #[error("point is not on the switching surface (h = {h:.3e})")]
    NotOnSwitchingSurface { h: f64 },

    #[error("gradient of h vanishes at the query point")]
    VanishingGradient,

    #[error("switching surface is not a graph x3 = phi(x1, x2)")]
    SurfaceNotGraphForm,

    #[error("Newton iteration failed to converge (residual {residual:.3e})")]
    NewtonDivergence { residual: f64 },

    #[error("vector field is transversal at the query point; no tangency to classify")]
    NotTangent,

    #[error("query point is not a two-fold of the requested type")]
    NotTwoFold,

    #[error("no pseudo-equilibrium found in the search box")]
    NoEquilibrium,

    #[error("orbit does not return to the switching surface within the time horizon")]
    NoReturn,

    #[error("eigenvalue structure unsuitable: {0}")]
    EigenStructure(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("family `{family}` has no parameter `{name}`")]
    UnknownParameter { family: String, name: String },

    #[error(transparent)]
    Jet(#[from] JetError),
}

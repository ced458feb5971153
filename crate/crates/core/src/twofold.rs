//! Fold involutions and the first-return map of an elliptic two-fold.

use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::PsvfError;
use crate::flow::orbit_return_directed;
use crate::lie::{lie_derivative, lie_derivative_at};
use crate::system::{PiecewiseSystem, ScalarField, SurfaceGraph, ToleranceConfig, VectorField};

/// Classification margin for |trace| = 2 of the return linearization.
const PARABOLIC_MARGIN: f64 = 1e-4;

/// Fold involution of one smooth field in chart coordinates on M.
///
/// The orbit of X through a near-fold point meets M a second time; the map
/// p -> second intersection is an involution fixing the fold line. Works for
/// visible and invisible folds: the quadratic model t* = -2 Xh / X^2h picks
/// forward time when Xh * X^2h < 0 and backward time otherwise.
pub fn involution(
    x: &VectorField,
    h: &ScalarField,
    p: &Vector2<f64>,
    tol: &ToleranceConfig,
) -> Result<Vector2<f64>, PsvfError> {
    let graph = SurfaceGraph::from_h(h)?;
    let lifted = graph.lift(p);
    let xh = lie_derivative_at(x, h.poly(), &lifted);
    if xh.abs() <= tol.zero_eps {
        return Ok(*p);
    }
    let x2h = lie_derivative_at(x, &lie_derivative(x, h.poly()), &lifted);
    if x2h.abs() <= tol.zero_eps {
        return Err(PsvfError::Precondition(
            "second Lie derivative vanishes; involution direction undefined".into(),
        ));
    }
    let dir = if xh * x2h < 0.0 { 1.0 } else { -1.0 };
    let horizon = (10.0 * 2.0 * (xh / x2h).abs()).max(1.0);
    let (q, _) = orbit_return_directed(x, h, &lifted, dir, horizon, tol)?;
    Ok(graph.project(&q))
}

/// Checks the elliptic two-fold structure at the chart origin.
fn require_elliptic_at_origin(
    sys: &PiecewiseSystem,
    tol: &ToleranceConfig,
) -> Result<SurfaceGraph, PsvfError> {
    let graph = sys.surface_graph()?;
    let origin = graph.lift(&Vector2::zeros());
    let a = sys.x_plus_h(&origin);
    let b = sys.x_minus_h(&origin);
    let a2 = lie_derivative_at(
        &sys.x_plus,
        &lie_derivative(&sys.x_plus, sys.h.poly()),
        &origin,
    );
    let b2 = lie_derivative_at(
        &sys.x_minus,
        &lie_derivative(&sys.x_minus, sys.h.poly()),
        &origin,
    );
    let e = tol.zero_eps;
    if a.abs() <= e && b.abs() <= e && a2 < -e && b2 > e {
        Ok(graph)
    } else {
        Err(PsvfError::NotTwoFold)
    }
}

/// First-return map of an elliptic two-fold at the chart origin:
/// the composition of the lower involution with the upper one.
pub fn first_return(
    sys: &PiecewiseSystem,
    p: &Vector2<f64>,
    tol: &ToleranceConfig,
) -> Result<Vector2<f64>, PsvfError> {
    require_elliptic_at_origin(sys, tol)?;
    let mid = involution(&sys.x_plus, &sys.h, p, tol)?;
    involution(&sys.x_minus, &sys.h, &mid, tol)
}

/// Linear type of the two-fold return map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnMapKind {
    Saddle,
    Elliptic,
    ParabolicBoundary,
}

impl fmt::Display for ReturnMapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ReturnMapKind::Saddle => "saddle",
            ReturnMapKind::Elliptic => "elliptic",
            ReturnMapKind::ParabolicBoundary => "parabolic_boundary",
        };
        write!(f, "{s}")
    }
}

/// Linearization of the first-return map at the two-fold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReturnMapData {
    /// Row-major 2x2 linearization L = D(first_return)(0).
    pub l: [[f64; 2]; 2],
    pub trace: f64,
    pub det: f64,
    /// Eigenvalues as (re, im) pairs, sorted by real part.
    pub eigenvalues: [[f64; 2]; 2],
    pub kind: ReturnMapKind,
    /// Unit eigenvectors of the saddle, ordered like the eigenvalues.
    pub invariant_directions: Option<[[f64; 2]; 2]>,
}

impl ReturnMapData {
    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.l[0][0], self.l[0][1], self.l[1][0], self.l[1][1])
    }
}

/// Largest absolute entry of the chart Hessian of a restricted polynomial.
fn chart_hessian_scale(g: &crate::poly::Poly) -> f64 {
    let origin = Vector3::zeros();
    let mut m = 0.0f64;
    for i in 0..2 {
        let gi = g.partial(i);
        for j in 0..2 {
            m = m.max(gi.partial(j).eval(&origin).abs());
        }
    }
    m
}

/// Central-difference linearization of the first-return map at the origin,
/// with one Richardson extrapolation step.
pub fn return_linearization(
    sys: &PiecewiseSystem,
    tol: &ToleranceConfig,
) -> Result<ReturnMapData, PsvfError> {
    let graph = require_elliptic_at_origin(sys, tol)?;
    // Scale the step by the fold-line conditioning: gradient over curvature.
    let mut factor = 1.0f64;
    for field in [&sys.x_plus, &sys.x_minus] {
        let g = graph.restrict(&lie_derivative(field, sys.h.poly()));
        let origin = Vector3::zeros();
        let grad = Vector2::new(g.partial(0).eval(&origin), g.partial(1).eval(&origin));
        let curv = chart_hessian_scale(&g);
        factor = factor.min(grad.norm() / curv.max(1.0));
    }
    let step = tol.fd_step * factor.clamp(1e-2, 1.0);

    let col = |e: Vector2<f64>, s: f64| -> Result<Vector2<f64>, PsvfError> {
        let plus = first_return(sys, &(e * s), tol)?;
        let minus = first_return(sys, &(e * -s), tol)?;
        Ok((plus - minus) / (2.0 * s))
    };
    let mut l = Matrix2::zeros();
    for (j, e) in [Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)].into_iter().enumerate() {
        let coarse = col(e, step)?;
        let fine = col(e, step / 2.0)?;
        let richardson = (fine * 4.0 - coarse) / 3.0;
        l.set_column(j, &richardson);
    }

    let trace = l.trace();
    let det = l.determinant();
    let disc = trace * trace - 4.0 * det;
    let (eigenvalues, invariant_directions);
    let kind = if (trace.abs() - 2.0).abs() <= PARABOLIC_MARGIN {
        ReturnMapKind::ParabolicBoundary
    } else if trace.abs() > 2.0 {
        ReturnMapKind::Saddle
    } else {
        ReturnMapKind::Elliptic
    };
    if disc >= 0.0 {
        let sq = disc.sqrt();
        let (l1, l2) = ((trace - sq) / 2.0, (trace + sq) / 2.0);
        eigenvalues = [[l1, 0.0], [l2, 0.0]];
        if kind == ReturnMapKind::Saddle {
            let vec_for = |lam: f64| -> [f64; 2] {
                let v = if l[(0, 1)].abs() >= l[(1, 0)].abs() {
                    Vector2::new(l[(0, 1)], lam - l[(0, 0)])
                } else {
                    Vector2::new(lam - l[(1, 1)], l[(1, 0)])
                };
                let v = v / v.norm();
                [v.x, v.y]
            };
            invariant_directions = Some([vec_for(l1), vec_for(l2)]);
        } else {
            invariant_directions = None;
        }
    } else {
        let im = (-disc).sqrt() / 2.0;
        let re = trace / 2.0;
        eigenvalues = [[re, im], [re, -im]];
        invariant_directions = None;
    }

    Ok(ReturnMapData {
        l: [[l[(0, 0)], l[(0, 1)]], [l[(1, 0)], l[(1, 1)]]],
        trace,
        det,
        eigenvalues,
        kind,
        invariant_directions,
    })
}

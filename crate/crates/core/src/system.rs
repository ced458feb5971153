//! Core data model: a piecewise-smooth pair over a switching surface, region
//! membership per Filippov's sign convention, and numeric tolerances.

use std::fmt;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::PsvfError;
use crate::poly::Poly;

/// Scalar polynomial field on R^3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalarField {
    poly: Poly,
}

impl ScalarField {
    pub fn new(poly: Poly) -> Self {
        Self { poly }
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn eval(&self, p: &Vector3<f64>) -> f64 {
        self.poly.eval(p)
    }

    pub fn gradient(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.poly.gradient(p)
    }
}

/// Polynomial vector field on R^3, one polynomial per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VectorField {
    components: [Poly; 3],
}

impl VectorField {
    pub fn new(components: [Poly; 3]) -> Self {
        Self { components }
    }

    /// Constant vector field.
    pub fn constant(v: [f64; 3]) -> Self {
        Self::new([Poly::constant(v[0]), Poly::constant(v[1]), Poly::constant(v[2])])
    }

    pub fn component(&self, i: usize) -> &Poly {
        &self.components[i]
    }

    pub fn components(&self) -> &[Poly; 3] {
        &self.components
    }

    pub fn eval(&self, p: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(
            self.components[0].eval(p),
            self.components[1].eval(p),
            self.components[2].eval(p),
        )
    }

    /// Jacobian matrix at `p`.
    pub fn jacobian(&self, p: &Vector3<f64>) -> nalgebra::Matrix3<f64> {
        nalgebra::Matrix3::from_rows(&[
            self.components[0].gradient(p).transpose(),
            self.components[1].gradient(p).transpose(),
            self.components[2].gradient(p).transpose(),
        ])
    }
}

/// A piecewise-smooth system X = (X+, X-) switching across M = h^{-1}(0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseSystem {
    pub name: String,
    pub h: ScalarField,
    pub x_plus: VectorField,
    pub x_minus: VectorField,
}

impl PiecewiseSystem {
    pub fn new(name: &str, h: ScalarField, x_plus: VectorField, x_minus: VectorField) -> Self {
        Self { name: name.to_string(), h, x_plus, x_minus }
    }

    /// System with the flat switching surface h = x3.
    pub fn flat(name: &str, x_plus: VectorField, x_minus: VectorField) -> Self {
        Self::new(name, ScalarField::new(Poly::var(2)), x_plus, x_minus)
    }

    /// System with the graph surface h = x3 - phi(x1, x2).
    pub fn graph(name: &str, phi: Poly, x_plus: VectorField, x_minus: VectorField) -> Self {
        let h = Poly::var(2).sub(&phi);
        Self::new(name, ScalarField::new(h), x_plus, x_minus)
    }

    /// The field governing the side `Side::Plus` (h > 0) or `Side::Minus`.
    pub fn field(&self, side: Side) -> &VectorField {
        match side {
            Side::Plus => &self.x_plus,
            Side::Minus => &self.x_minus,
        }
    }

    /// The same system seen from an origin shifted to `center`.
    pub fn translate(&self, center: &Vector3<f64>) -> PiecewiseSystem {
        let shift = |v: &VectorField| {
            VectorField::new([
                v.component(0).taylor_shift(center),
                v.component(1).taylor_shift(center),
                v.component(2).taylor_shift(center),
            ])
        };
        PiecewiseSystem::new(
            &self.name,
            ScalarField::new(self.h.poly().taylor_shift(center)),
            shift(&self.x_plus),
            shift(&self.x_minus),
        )
    }

    /// Lie derivative X+h evaluated at `p`.
    pub fn x_plus_h(&self, p: &Vector3<f64>) -> f64 {
        crate::lie::lie_derivative_at(&self.x_plus, self.h.poly(), p)
    }

    /// Lie derivative X-h evaluated at `p`.
    pub fn x_minus_h(&self, p: &Vector3<f64>) -> f64 {
        crate::lie::lie_derivative_at(&self.x_minus, self.h.poly(), p)
    }

    /// Graph description of M when h = a*x3 + psi(x1, x2) with constant a != 0.
    ///
    /// M is then the graph x3 = phi(x1, x2) = -psi/a, the chart used by all
    /// planar operations (sliding field, involutions, return maps).
    pub fn surface_graph(&self) -> Result<SurfaceGraph, PsvfError> {
        SurfaceGraph::from_h(&self.h)
    }
}

/// Which side of the switching surface a smooth arc lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

/// The switching surface as a graph x3 = phi(x1, x2).
#[derive(Debug, Clone)]
pub struct SurfaceGraph {
    phi: Poly,
}

impl SurfaceGraph {
    /// Builds the chart from h = a*x3 + psi(x1, x2) with constant a != 0.
    pub fn from_h(h: &ScalarField) -> Result<Self, PsvfError> {
        let mut a = 0.0;
        let mut psi = Poly::zero();
        for t in h.poly().terms() {
            match t.exp {
                [0, 0, 1] => a = t.c,
                [_, _, 0] => psi.add_term(t.exp, t.c),
                _ => return Err(PsvfError::SurfaceNotGraphForm),
            }
        }
        if a == 0.0 {
            return Err(PsvfError::SurfaceNotGraphForm);
        }
        Ok(SurfaceGraph { phi: psi.scale(-1.0 / a) })
    }

    pub fn phi(&self) -> &Poly {
        &self.phi
    }

    /// Lifts chart coordinates to the surface point (u1, u2, phi(u)).
    pub fn lift(&self, u: &Vector2<f64>) -> Vector3<f64> {
        let p = Vector3::new(u.x, u.y, 0.0);
        Vector3::new(u.x, u.y, self.phi.eval(&p))
    }

    /// Chart coordinates of a surface point.
    pub fn project(&self, p: &Vector3<f64>) -> Vector2<f64> {
        Vector2::new(p.x, p.y)
    }

    /// Restricts a spatial polynomial to the surface: substitutes x3 := phi.
    pub fn restrict(&self, poly: &Poly) -> Poly {
        poly.substitute_x3(&self.phi)
    }
}

/// Pointwise region membership on M, decided by the signs of X+h and X-h.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionTag {
    CrossingUp,
    CrossingDown,
    StableSliding,
    UnstableSliding,
    TangentialPlus,
    TangentialMinus,
    TangentialBoth,
}

impl RegionTag {
    pub fn is_crossing(self) -> bool {
        matches!(self, RegionTag::CrossingUp | RegionTag::CrossingDown)
    }

    pub fn is_sliding(self) -> bool {
        matches!(self, RegionTag::StableSliding | RegionTag::UnstableSliding)
    }

    pub fn is_tangential(self) -> bool {
        matches!(
            self,
            RegionTag::TangentialPlus | RegionTag::TangentialMinus | RegionTag::TangentialBoth
        )
    }
}

impl fmt::Display for RegionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegionTag::CrossingUp => "crossing_up",
            RegionTag::CrossingDown => "crossing_down",
            RegionTag::StableSliding => "stable_sliding",
            RegionTag::UnstableSliding => "unstable_sliding",
            RegionTag::TangentialPlus => "tangential_plus",
            RegionTag::TangentialMinus => "tangential_minus",
            RegionTag::TangentialBoth => "tangential_both",
        };
        write!(f, "{s}")
    }
}

/// Numeric thresholds shared by every algorithm in the crate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Threshold below which a certificate counts as zero.
    pub zero_eps: f64,
    /// Residual target for Newton solves.
    pub newton_tol: f64,
    /// Iteration cap for Newton solves.
    pub newton_max_iter: usize,
    /// |h| target for located surface events.
    pub event_tol: f64,
    /// Finite-difference step for return-map linearization.
    pub fd_step: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            zero_eps: 1e-9,
            newton_tol: 1e-12,
            newton_max_iter: 64,
            event_tol: 1e-10,
            fd_step: 1e-4,
        }
    }
}

/// Region tag at a point of M; values within zero_eps of 0 route to the
/// tangential tags so the classifier owns all degeneracy decisions.
pub fn region_of(
    sys: &PiecewiseSystem,
    p: &Vector3<f64>,
    tol: &ToleranceConfig,
) -> Result<RegionTag, PsvfError> {
    let h = sys.h.eval(p);
    if h.abs() > tol.zero_eps {
        return Err(PsvfError::NotOnSwitchingSurface { h });
    }
    let a = sys.x_plus_h(p);
    let b = sys.x_minus_h(p);
    let za = a.abs() <= tol.zero_eps;
    let zb = b.abs() <= tol.zero_eps;
    Ok(match (za, zb) {
        (true, true) => RegionTag::TangentialBoth,
        (true, false) => RegionTag::TangentialPlus,
        (false, true) => RegionTag::TangentialMinus,
        (false, false) => {
            if a > 0.0 && b > 0.0 {
                RegionTag::CrossingUp
            } else if a < 0.0 && b < 0.0 {
                RegionTag::CrossingDown
            } else if a < 0.0 {
                RegionTag::StableSliding
            } else {
                RegionTag::UnstableSliding
            }
        }
    })
}

/// Surface membership test plus one Newton projection step along grad h.
pub fn on_switching_surface(
    sys: &PiecewiseSystem,
    p: &Vector3<f64>,
    tol: &ToleranceConfig,
) -> Result<(bool, Vector3<f64>), PsvfError> {
    let grad = sys.h.gradient(p);
    let g2 = grad.norm_squared();
    if g2 <= tol.zero_eps * tol.zero_eps {
        return Err(PsvfError::VanishingGradient);
    }
    let h = sys.h.eval(p);
    let projected = p - grad * (h / g2);
    Ok((h.abs() <= tol.zero_eps, projected))
}

/// Repeated Newton projection onto M; returns a point with |h| <= target.
pub fn project_onto_surface(
    sys: &PiecewiseSystem,
    p: &Vector3<f64>,
    target: f64,
    max_iter: usize,
) -> Result<Vector3<f64>, PsvfError> {
    let mut q = *p;
    for _ in 0..max_iter {
        if sys.h.eval(&q).abs() <= target {
            return Ok(q);
        }
        let grad = sys.h.gradient(&q);
        let g2 = grad.norm_squared();
        if g2 == 0.0 {
            return Err(PsvfError::VanishingGradient);
        }
        q -= grad * (sys.h.eval(&q) / g2);
    }
    if sys.h.eval(&q).abs() <= target {
        Ok(q)
    } else {
        Err(PsvfError::NewtonDivergence { residual: sys.h.eval(&q).abs() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Term;

    fn origin() -> Vector3<f64> {
        Vector3::zeros()
    }

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn region_signs_match_convention() {
        // X+h = -1, X-h = 1: stable sliding.
        let sys = PiecewiseSystem::flat(
            "s",
            VectorField::constant([1.0, 0.0, -1.0]),
            VectorField::constant([0.0, 1.0, 1.0]),
        );
        assert_eq!(region_of(&sys, &origin(), &tol()).unwrap(), RegionTag::StableSliding);

        let sys = PiecewiseSystem::flat(
            "c",
            VectorField::constant([0.0, 0.0, 1.0]),
            VectorField::constant([0.0, 0.0, 1.0]),
        );
        assert_eq!(region_of(&sys, &origin(), &tol()).unwrap(), RegionTag::CrossingUp);

        let sys = PiecewiseSystem::flat(
            "e",
            VectorField::constant([0.0, 0.0, 0.5]),
            VectorField::constant([0.0, 0.0, -2.0]),
        );
        assert_eq!(region_of(&sys, &origin(), &tol()).unwrap(), RegionTag::UnstableSliding);
    }

    #[test]
    fn fold_point_routes_to_tangential() {
        let sys = PiecewiseSystem::flat(
            "fold",
            VectorField::new([Poly::constant(1.0), Poly::zero(), Poly::var(0)]),
            VectorField::constant([0.0, 0.0, 1.0]),
        );
        assert_eq!(region_of(&sys, &origin(), &tol()).unwrap(), RegionTag::TangentialPlus);
    }

    #[test]
    fn off_surface_point_is_rejected() {
        let sys = PiecewiseSystem::flat(
            "s",
            VectorField::constant([0.0, 0.0, 1.0]),
            VectorField::constant([0.0, 0.0, 1.0]),
        );
        let err = region_of(&sys, &Vector3::new(0.0, 0.0, 0.1), &tol()).unwrap_err();
        assert!(matches!(err, PsvfError::NotOnSwitchingSurface { .. }));
    }

    #[test]
    fn region_is_invariant_under_positive_rescaling() {
        let sys = PiecewiseSystem::flat(
            "s",
            VectorField::constant([1.0, 0.0, -0.3]),
            VectorField::constant([0.0, 1.0, 0.7]),
        );
        let scaled = PiecewiseSystem::flat(
            "s2",
            VectorField::constant([17.0, 0.0, -0.3 * 17.0]),
            VectorField::constant([0.0, 0.25, 0.7 * 0.25]),
        );
        assert_eq!(
            region_of(&sys, &origin(), &tol()).unwrap(),
            region_of(&scaled, &origin(), &tol()).unwrap()
        );
    }

    #[test]
    fn graph_surface_membership() {
        // h = x3 - (x1^3 + x1 x2^2)
        let phi = Poly::from_terms([
            Term { exp: [3, 0, 0], c: 1.0 },
            Term { exp: [1, 2, 0], c: 1.0 },
        ]);
        let sys = PiecewiseSystem::graph(
            "curved",
            phi,
            VectorField::constant([0.0, 0.0, 1.0]),
            VectorField::constant([0.0, 0.0, 1.0]),
        );
        let p = Vector3::new(0.1, 0.2, 0.1 * (0.01 + 0.04));
        let (on, _) = on_switching_surface(&sys, &p, &tol()).unwrap();
        assert!(on);
        let (off, projected) =
            on_switching_surface(&sys, &Vector3::new(0.0, 0.0, 0.1), &tol()).unwrap();
        assert!(!off);
        assert!(sys.h.eval(&projected).abs() < 0.1);
    }

    #[test]
    fn graph_chart_round_trips() {
        let phi = Poly::from_terms([Term { exp: [2, 0, 0], c: 0.5 }]);
        let sys = PiecewiseSystem::graph(
            "g",
            phi,
            VectorField::constant([0.0, 0.0, 1.0]),
            VectorField::constant([0.0, 0.0, 1.0]),
        );
        let graph = sys.surface_graph().unwrap();
        let u = Vector2::new(0.4, -0.3);
        let lifted = graph.lift(&u);
        assert_eq!(sys.h.eval(&lifted), 0.0);
        assert_eq!(graph.project(&lifted), u);
    }

    #[test]
    fn non_graph_surface_is_detected() {
        // h = x3^2 - x1 is not a graph over (x1, x2).
        let h = Poly::from_terms([
            Term { exp: [0, 0, 2], c: 1.0 },
            Term { exp: [1, 0, 0], c: -1.0 },
        ]);
        let sys = PiecewiseSystem::new(
            "bad",
            ScalarField::new(h),
            VectorField::constant([0.0, 0.0, 1.0]),
            VectorField::constant([0.0, 0.0, 1.0]),
        );
        assert!(matches!(sys.surface_graph(), Err(PsvfError::SurfaceNotGraphForm)));
    }

    #[test]
    fn system_json_schema_round_trips() {
        let sys = PiecewiseSystem::flat(
            "fold",
            VectorField::new([Poly::constant(1.0), Poly::zero(), Poly::var(0)]),
            VectorField::constant([0.0, 0.0, 1.0]),
        );
        let json = serde_json::to_string(&sys).unwrap();
        assert!(json.contains("\"x_plus\""));
        assert!(json.contains("\"exp\""));
        let back: PiecewiseSystem = serde_json::from_str(&json).unwrap();
        assert_eq!(sys, back);
    }
}

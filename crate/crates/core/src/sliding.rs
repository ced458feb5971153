//! Sliding vector fields on the switching surface, pseudo-equilibria, and
//! planar equilibrium analysis including saddle-node and Hopf tests.

use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::PsvfError;
use crate::lie::lie_derivative;
use crate::poly::Poly;
use crate::system::{PiecewiseSystem, SurfaceGraph, ToleranceConfig};

/// Planar vector field on M induced by the parent piecewise system.
///
/// `value` is the rescaled form X^s = (X-h) X+ - (X+h) X-; the time-correct
/// form divides by (X-h - X+h) and is available pointwise. X^s agrees with
/// the time-correct field up to a positive factor on stable sliding and a
/// negative factor on unstable sliding.
#[derive(Debug, Clone)]
pub struct SlidingField {
    parent: PiecewiseSystem,
    graph: SurfaceGraph,
    components: [Poly; 2],
    spatial: [Poly; 3],
    rescaled: bool,
}

/// Builds the rescaled sliding field, projected into the graph chart of M.
pub fn sliding_field(sys: &PiecewiseSystem) -> Result<SlidingField, PsvfError> {
    let graph = sys.surface_graph()?;
    let h = sys.h.poly();
    let a = lie_derivative(&sys.x_plus, h);
    let b = lie_derivative(&sys.x_minus, h);
    let spatial: [Poly; 3] = std::array::from_fn(|i| {
        b.mul(sys.x_plus.component(i)).sub(&a.mul(sys.x_minus.component(i)))
    });
    let components = [graph.restrict(&spatial[0]), graph.restrict(&spatial[1])];
    Ok(SlidingField {
        parent: sys.clone(),
        graph,
        components,
        spatial,
        rescaled: true,
    })
}

impl SlidingField {
    pub fn parent(&self) -> &PiecewiseSystem {
        &self.parent
    }

    pub fn graph(&self) -> &SurfaceGraph {
        &self.graph
    }

    /// Chart components of the rescaled field as polynomials.
    pub fn components(&self) -> &[Poly; 2] {
        &self.components
    }

    /// Spatial components of the rescaled field (tangent to M on M).
    pub fn spatial(&self) -> &[Poly; 3] {
        &self.spatial
    }

    pub fn rescaled(&self) -> bool {
        self.rescaled
    }

    /// Rescaled chart value at u.
    pub fn value(&self, u: &Vector2<f64>) -> Vector2<f64> {
        let p = Vector3::new(u.x, u.y, 0.0);
        Vector2::new(self.components[0].eval(&p), self.components[1].eval(&p))
    }

    /// Time-correct chart value (rescaled value over X-h - X+h).
    pub fn time_correct_value(
        &self,
        u: &Vector2<f64>,
        tol: &ToleranceConfig,
    ) -> Result<Vector2<f64>, PsvfError> {
        let p = self.graph.lift(u);
        let denom = self.parent.x_minus_h(&p) - self.parent.x_plus_h(&p);
        if denom.abs() <= tol.zero_eps {
            return Err(PsvfError::VanishingGradient);
        }
        Ok(self.value(u) / denom)
    }

    /// Jacobian of the rescaled chart field at u.
    pub fn jacobian(&self, u: &Vector2<f64>) -> Matrix2<f64> {
        let p = Vector3::new(u.x, u.y, 0.0);
        Matrix2::new(
            self.components[0].partial(0).eval(&p),
            self.components[0].partial(1).eval(&p),
            self.components[1].partial(0).eval(&p),
            self.components[1].partial(1).eval(&p),
        )
    }

    /// Largest |X^s| over an n x n grid on the box; detects identically null
    /// sliding fields numerically.
    pub fn max_on_grid(&self, box_: &SearchBox, n: usize) -> f64 {
        let mut max = 0.0f64;
        for u in box_.grid(n) {
            max = max.max(self.value(&u).amax());
        }
        max
    }
}

/// Time-correct Filippov field at a sliding point, as a spatial vector.
pub fn filippov_field(
    sys: &PiecewiseSystem,
    p: &Vector3<f64>,
    tol: &ToleranceConfig,
) -> Result<Vector3<f64>, PsvfError> {
    let a = sys.x_plus_h(p);
    let b = sys.x_minus_h(p);
    let denom = b - a;
    if denom.abs() <= tol.zero_eps {
        return Err(PsvfError::VanishingGradient);
    }
    Ok((sys.x_plus.eval(p) * b - sys.x_minus.eval(p) * a) / denom)
}

/// Rectangular search window in chart coordinates on M.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SearchBox {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl SearchBox {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Self {
        Self { min, max }
    }

    /// Square box [-half, half]^2.
    pub fn symmetric(half: f64) -> Self {
        Self::new([-half, -half], [half, half])
    }

    pub fn contains(&self, u: &Vector2<f64>, slack: f64) -> bool {
        let wx = self.max[0] - self.min[0];
        let wy = self.max[1] - self.min[1];
        u.x >= self.min[0] - slack * wx
            && u.x <= self.max[0] + slack * wx
            && u.y >= self.min[1] - slack * wy
            && u.y <= self.max[1] + slack * wy
    }

    /// Row-major n x n grid of sample points including the box edges.
    pub fn grid(&self, n: usize) -> impl Iterator<Item = Vector2<f64>> + '_ {
        let steps = (n.max(2) - 1) as f64;
        (0..n.max(2)).flat_map(move |i| {
            (0..n.max(2)).map(move |j| {
                Vector2::new(
                    self.min[0] + (self.max[0] - self.min[0]) * i as f64 / steps,
                    self.min[1] + (self.max[1] - self.min[1]) * j as f64 / steps,
                )
            })
        })
    }
}

impl Default for SearchBox {
    fn default() -> Self {
        Self::symmetric(1.0)
    }
}

/// Zeros of the rescaled sliding field found by Newton from grid seeds,
/// deduplicated within 10x newton_tol and sorted lexicographically.
pub fn pseudo_equilibria(
    sf: &SlidingField,
    box_: &SearchBox,
    grid_n: usize,
    tol: &ToleranceConfig,
) -> Vec<Vector2<f64>> {
    let mut found: Vec<Vector2<f64>> = Vec::new();
    for seed in box_.grid(grid_n) {
        if let Some(root) = refine_equilibrium(sf, &seed, tol) {
            if !box_.contains(&root, 0.05) {
                continue;
            }
            if found.iter().all(|q| (q - root).norm() > 10.0 * tol.newton_tol) {
                found.push(root);
            }
        }
    }
    found.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap().then(a.y.partial_cmp(&b.y).unwrap()));
    found
}

/// Newton refinement of a sliding-field zero from a seed; None on divergence.
pub fn refine_equilibrium(
    sf: &SlidingField,
    seed: &Vector2<f64>,
    tol: &ToleranceConfig,
) -> Option<Vector2<f64>> {
    let mut u = *seed;
    for _ in 0..tol.newton_max_iter {
        let f = sf.value(&u);
        if f.norm() <= tol.newton_tol {
            return Some(u);
        }
        let j = sf.jacobian(&u);
        let step = j.lu().solve(&f)?;
        if !step.iter().all(|c| c.is_finite()) {
            return None;
        }
        u -= step;
    }
    if sf.value(&u).norm() <= tol.newton_tol {
        Some(u)
    } else {
        None
    }
}

/// Equilibrium type of the planar sliding field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    HyperbolicNode,
    HyperbolicSaddle,
    HyperbolicFocus,
    SaddleNode,
    Hopf,
    Degenerate,
}

/// Full local data of a pseudo-equilibrium of the sliding field.
///
/// Eigen-entries are (re, im) pairs; for a complex pair the eigenvector slots
/// hold the real and imaginary parts of one complex eigenvector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub point: [f64; 2],
    pub sigma: f64,
    pub delta: f64,
    pub eigenvalues: [[f64; 2]; 2],
    pub eigenvectors: [[f64; 2]; 2],
    pub lyapunov_1: Option<f64>,
    pub delta_1: Option<f64>,
    pub kind: EquilibriumKind,
}

/// Classifies an equilibrium of the sliding field at p (|X^s(p)| small).
pub fn classify_equilibrium(
    sf: &SlidingField,
    p: &Vector2<f64>,
    tol: &ToleranceConfig,
) -> EquilibriumReport {
    let j = sf.jacobian(p);
    let sigma = j.trace();
    let delta = j.determinant();
    let scale = j.amax().max(1.0);
    let (eigenvalues, eigenvectors) = eig2(&j);

    let near = |x: f64, s: f64| x.abs() <= tol.zero_eps * s;
    let re0 = eigenvalues[0][0];
    let re1 = eigenvalues[1][0];
    let hyperbolic = !near(re0, scale) && !near(re1, scale);

    let mut lyapunov_1 = None;
    let mut delta_1 = None;
    let kind = if hyperbolic {
        if delta < 0.0 {
            EquilibriumKind::HyperbolicSaddle
        } else if eigenvalues[0][1] != 0.0 {
            EquilibriumKind::HyperbolicFocus
        } else {
            EquilibriumKind::HyperbolicNode
        }
    } else if near(delta, scale * scale) && !near(sigma, scale) {
        // One eigenvalue at zero, the other at sigma: saddle-node candidate.
        let d1 = kernel_quadratic_defect(sf, p, &j);
        delta_1 = Some(d1);
        if d1.abs() > tol.zero_eps {
            EquilibriumKind::SaddleNode
        } else {
            EquilibriumKind::Degenerate
        }
    } else if near(sigma, scale) && delta > tol.zero_eps * scale * scale {
        let l1 = lyapunov_from_jacobian(sf, p, &j);
        lyapunov_1 = Some(l1);
        if l1.abs() > tol.zero_eps {
            EquilibriumKind::Hopf
        } else {
            EquilibriumKind::Degenerate
        }
    } else {
        EquilibriumKind::Degenerate
    };

    EquilibriumReport {
        point: [p.x, p.y],
        sigma,
        delta,
        eigenvalues,
        eigenvectors,
        lyapunov_1,
        delta_1,
        kind,
    }
}

/// First Lyapunov quantity at a linear-center equilibrium of the sliding
/// field; negative means attracting (supercritical Hopf on parameter sweep).
pub fn first_lyapunov(
    sf: &SlidingField,
    p: &Vector2<f64>,
    tol: &ToleranceConfig,
) -> Result<f64, PsvfError> {
    let j = sf.jacobian(p);
    let scale = j.amax().max(1.0);
    if j.trace().abs() > tol.zero_eps * scale || j.determinant() <= tol.zero_eps * scale * scale {
        return Err(PsvfError::EigenStructure(
            "first Lyapunov quantity needs trace 0 and positive determinant".into(),
        ));
    }
    Ok(lyapunov_from_jacobian(sf, p, &j))
}

/// Eigenvalues ((re, im) pairs, sorted by real part then imaginary part) and
/// eigenvector data of a real 2x2 matrix.
fn eig2(j: &Matrix2<f64>) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    let sigma = j.trace();
    let delta = j.determinant();
    let disc = sigma * sigma - 4.0 * delta;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let l0 = (sigma - s) / 2.0;
        let l1 = (sigma + s) / 2.0;
        let v0 = real_eigenvector(j, l0);
        let v1 = real_eigenvector(j, l1);
        ([[l0, 0.0], [l1, 0.0]], [[v0.x, v0.y], [v1.x, v1.y]])
    } else {
        let w = (-disc).sqrt() / 2.0;
        // Complex eigenvector for sigma/2 + i w: store (Re v, Im v).
        let (re, im) = complex_eigenvector(j, sigma / 2.0, w);
        ([[sigma / 2.0, -w], [sigma / 2.0, w]], [[re.x, re.y], [im.x, im.y]])
    }
}

/// Kernel vector of J - lambda I, sign-normalized for determinism.
fn real_eigenvector(j: &Matrix2<f64>, lambda: f64) -> Vector2<f64> {
    let r1 = Vector2::new(j[(0, 1)], lambda - j[(0, 0)]);
    let r2 = Vector2::new(lambda - j[(1, 1)], j[(1, 0)]);
    let mut v = if r1.norm() >= r2.norm() { r1 } else { r2 };
    if v.norm() == 0.0 {
        return Vector2::new(1.0, 0.0);
    }
    v = v.normalize();
    let lead = if v.x.abs() >= v.y.abs() { v.x } else { v.y };
    if lead < 0.0 {
        v = -v;
    }
    v
}

/// Real and imaginary parts of an eigenvector for alpha + i w.
fn complex_eigenvector(j: &Matrix2<f64>, alpha: f64, w: f64) -> (Vector2<f64>, Vector2<f64>) {
    if j[(0, 1)].abs() >= j[(1, 0)].abs() {
        // v = (j01, lambda - j00)
        (Vector2::new(j[(0, 1)], alpha - j[(0, 0)]), Vector2::new(0.0, w))
    } else {
        // v = (lambda - j11, j10)
        (Vector2::new(alpha - j[(1, 1)], j[(1, 0)]), Vector2::new(w, 0.0))
    }
}

/// Second derivative of the kernel-direction component of X^s restricted to
/// the invariant-graph reduction at a one-zero-eigenvalue equilibrium.
fn kernel_quadratic_defect(sf: &SlidingField, p: &Vector2<f64>, j: &Matrix2<f64>) -> f64 {
    let sigma = j.trace();
    let v0 = real_eigenvector(j, 0.0);
    let v1 = real_eigenvector(j, sigma);
    let basis = Matrix2::from_columns(&[v0, v1]);
    let Some(values) = reduced_second_derivative(sf, p, &basis) else {
        return 0.0;
    };
    values
}

/// Computes g''(0) for g(z1) = G1(z1, chi(z1)) where G = B^{-1} X^s(p + Bz)
/// and chi solves G2 = 0 implicitly; exact polynomial partials throughout.
fn reduced_second_derivative(
    sf: &SlidingField,
    p: &Vector2<f64>,
    basis: &Matrix2<f64>,
) -> Option<f64> {
    let binv = basis.try_inverse()?;
    let pulled: [Poly; 2] =
        std::array::from_fn(|k| sf.components[k].affine_substitute_2d(p, basis));
    let g: [Poly; 2] = std::array::from_fn(|i| {
        pulled[0].scale(binv[(i, 0)]).add(&pulled[1].scale(binv[(i, 1)]))
    });
    let at0 = Vector3::zeros();
    let d = |q: &Poly, axes: &[usize]| {
        let mut out = q.clone();
        for &ax in axes {
            out = out.partial(ax);
        }
        out.eval(&at0)
    };
    let d2g2 = d(&g[1], &[1]);
    if d2g2 == 0.0 {
        return None;
    }
    let chi_p = -d(&g[1], &[0]) / d2g2;
    let chi_pp = -(d(&g[1], &[0, 0]) + 2.0 * d(&g[1], &[0, 1]) * chi_p
        + d(&g[1], &[1, 1]) * chi_p * chi_p)
        / d2g2;
    Some(
        d(&g[0], &[0, 0])
            + 2.0 * d(&g[0], &[0, 1]) * chi_p
            + d(&g[0], &[1, 1]) * chi_p * chi_p
            + d(&g[0], &[1]) * chi_pp,
    )
}

/// Standard planar first-Lyapunov formula after normalizing the linear part
/// to rotation by omega = sqrt(det J).
fn lyapunov_from_jacobian(sf: &SlidingField, p: &Vector2<f64>, j: &Matrix2<f64>) -> f64 {
    let omega = j.determinant().sqrt();
    let (u, wv) = complex_eigenvector(j, 0.0, omega);
    // Basis (u, -w) turns the linear part into [[0, -omega], [omega, 0]].
    let basis = Matrix2::from_columns(&[u, -wv]);
    let Some(binv) = basis.try_inverse() else {
        return 0.0;
    };
    let pulled: [Poly; 2] =
        std::array::from_fn(|k| sf.components[k].affine_substitute_2d(p, &basis));
    let fg: [Poly; 2] = std::array::from_fn(|i| {
        pulled[0].scale(binv[(i, 0)]).add(&pulled[1].scale(binv[(i, 1)]))
    });
    let at0 = Vector3::zeros();
    let d = |q: &Poly, axes: &[usize]| {
        let mut out = q.clone();
        for &ax in axes {
            out = out.partial(ax);
        }
        out.eval(&at0)
    };
    let (f, g) = (&fg[0], &fg[1]);
    let fxx = d(f, &[0, 0]);
    let fyy = d(f, &[1, 1]);
    let fxy = d(f, &[0, 1]);
    let gxx = d(g, &[0, 0]);
    let gyy = d(g, &[1, 1]);
    let gxy = d(g, &[0, 1]);
    let cubic =
        d(f, &[0, 0, 0]) + d(f, &[0, 1, 1]) + d(g, &[0, 0, 1]) + d(g, &[1, 1, 1]);
    let mixed = fxy * (fxx + fyy) - gxy * (gxx + gyy) - fxx * gxx + fyy * gyy;
    (cubic + mixed / omega) / 16.0
}

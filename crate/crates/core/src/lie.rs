//! Lie-derivative towers Z^n h and the differential certificates (frame
//! determinants, ranks, restricted Hessians) consumed by the classifier.

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::PsvfError;
use crate::jet::JetError;
use crate::poly::Poly;
use crate::system::{ScalarField, ToleranceConfig, VectorField};

/// Exact Lie derivative Zf = sum_i Z_i * df/dx_i as a polynomial.
pub fn lie_derivative(z: &VectorField, f: &Poly) -> Poly {
    let mut out = Poly::zero();
    for i in 0..3 {
        out = out.add(&z.component(i).mul(&f.partial(i)));
    }
    out
}

/// Lie derivative evaluated at a point without building the product poly.
pub fn lie_derivative_at(z: &VectorField, f: &Poly, p: &Vector3<f64>) -> f64 {
    z.eval(p).dot(&f.gradient(p))
}

/// The iterated derivatives [Zh, Z^2 h, ..., Z^depth h] as polynomials.
pub fn lie_iterates(z: &VectorField, h: &Poly, depth: usize) -> Vec<Poly> {
    let mut out = Vec::with_capacity(depth);
    let mut cur = h.clone();
    for _ in 0..depth {
        cur = lie_derivative(z, &cur);
        out.push(cur.clone());
    }
    out
}

/// Tower of Lie derivatives of h along one field at one point, with the
/// differential data the tangency definitions test.
#[derive(Debug, Clone)]
pub struct LieTower {
    depth: usize,
    values: Vec<f64>,
    differentials: Vec<Vector3<f64>>,
    restricted_hessian: Matrix2<f64>,
    det_frame: Option<f64>,
}

impl LieTower {
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Z^k h(p), 1-indexed; k must be <= depth.
    pub fn value(&self, k: usize) -> f64 {
        self.values[k - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// [dh, d(Zh)] and, when depth >= 2, d(Z^2 h).
    pub fn differentials(&self) -> &[Vector3<f64>] {
        &self.differentials
    }

    /// Hessian of Zh restricted to M, in the deterministic tangent frame.
    pub fn restricted_hessian(&self) -> &Matrix2<f64> {
        &self.restricted_hessian
    }

    /// det [dh; d(Zh); d(Z^2 h)]; present when depth >= 2.
    pub fn det_frame(&self) -> Option<f64> {
        self.det_frame
    }
}

/// Computes the tower at `p` down to `depth` iterates (1..=4).
pub fn lie_tower(
    z: &VectorField,
    h: &ScalarField,
    p: &Vector3<f64>,
    depth: usize,
) -> Result<LieTower, PsvfError> {
    if depth == 0 || depth > crate::jet::MAX_ORDER {
        return Err(PsvfError::Jet(JetError::OrderOutOfRange(depth)));
    }
    let iterates = lie_iterates(z, h.poly(), depth);
    let values = iterates.iter().map(|q| q.eval(p)).collect();

    let mut differentials = vec![h.gradient(p), iterates[0].gradient(p)];
    if depth >= 2 {
        differentials.push(iterates[1].gradient(p));
    }
    let det_frame = if depth >= 2 {
        Some(det3(&differentials[0], &differentials[1], &differentials[2]))
    } else {
        None
    };

    Ok(LieTower {
        depth,
        values,
        differentials,
        restricted_hessian: restricted_hessian(&iterates[0], h.poly(), p),
        det_frame,
    })
}

/// Triple-product determinant; antisymmetric under row swaps bit-for-bit.
pub fn det3(r0: &Vector3<f64>, r1: &Vector3<f64>, r2: &Vector3<f64>) -> f64 {
    r0.dot(&r1.cross(r2))
}

/// Numeric rank of the available differentials, singular values thresholded
/// at zero_eps times the largest.
pub fn frame_rank(tower: &LieTower, tol: &ToleranceConfig) -> usize {
    let rows = tower.differentials();
    let mut m = nalgebra::DMatrix::zeros(rows.len(), 3);
    for (i, r) in rows.iter().enumerate() {
        m.set_row(i, &r.transpose());
    }
    let svals = m.singular_values();
    let smax = svals.iter().cloned().fold(0.0f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    svals.iter().filter(|s| **s > tol.zero_eps * smax).count()
}

/// Sign class of a symmetric 2x2 form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignatureKind {
    PosDef,
    NegDef,
    Indefinite,
    Degenerate,
}

/// Determinant and sign class of the restricted Hessian.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HessianSignature {
    pub det: f64,
    pub signature: SignatureKind,
}

/// Classifies the tower's restricted Hessian; Morse (definite/indefinite)
/// versus degenerate is decided on the scaled determinant.
pub fn restricted_hessian_signature(tower: &LieTower, tol: &ToleranceConfig) -> HessianSignature {
    let m = tower.restricted_hessian();
    let det = m.determinant();
    let scale = m.amax().max(1.0);
    let signature = if det > tol.zero_eps * scale * scale {
        if m.trace() > 0.0 {
            SignatureKind::PosDef
        } else {
            SignatureKind::NegDef
        }
    } else if det < -tol.zero_eps * scale * scale {
        SignatureKind::Indefinite
    } else {
        SignatureKind::Degenerate
    };
    HessianSignature { det, signature }
}

/// Exact 3x3 Hessian of a polynomial at a point.
pub fn hessian3(q: &Poly, p: &Vector3<f64>) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        let qi = q.partial(i);
        for j in i..3 {
            let v = qi.partial(j).eval(p);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Orthonormal basis of ker grad_h built by Gram-Schmidt from the two
/// coordinate axes most orthogonal to grad_h; exactly (e1, e2) for h = x3.
pub fn tangent_frame(grad_h: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let mut order: [usize; 3] = [0, 1, 2];
    order.sort_by(|&a, &b| {
        grad_h[a].abs().partial_cmp(&grad_h[b].abs()).unwrap().then(a.cmp(&b))
    });
    let (a, b) = if order[0] < order[1] { (order[0], order[1]) } else { (order[1], order[0]) };
    let n = grad_h.normalize();
    let ea = Vector3::from_fn(|i, _| if i == a { 1.0 } else { 0.0 });
    let eb = Vector3::from_fn(|i, _| if i == b { 1.0 } else { 0.0 });
    let u = (ea - n * ea.dot(&n)).normalize();
    let mut v = eb - n * eb.dot(&n);
    v -= u * v.dot(&u);
    (u, v.normalize())
}

/// Hessian of (g restricted to h = 0) in the tangent frame at p; the
/// correction term accounts for surface curvature and is geometric at
/// critical points of the restriction.
pub fn restricted_hessian(g: &Poly, h: &Poly, p: &Vector3<f64>) -> Matrix2<f64> {
    let gh = h.gradient(p);
    let g2 = gh.norm_squared();
    let (u, v) = tangent_frame(&gh);
    let hg = hessian3(g, p);
    let hh = hessian3(h, p);
    let c = g.gradient(p).dot(&gh) / g2;
    let form = |a: &Vector3<f64>, b: &Vector3<f64>| (hg * b).dot(a) - c * ((hh * b).dot(a));
    let m00 = form(&u, &u);
    let m01 = form(&u, &v);
    let m11 = form(&v, &v);
    Matrix2::new(m00, m01, m01, m11)
}

/// Component of grad g tangent to the level set of h at p.
pub fn tangential_gradient(g: &Poly, h: &Poly, p: &Vector3<f64>) -> Vector3<f64> {
    let gh = h.gradient(p);
    let gg = g.gradient(p);
    gg - gh * (gg.dot(&gh) / gh.norm_squared())
}

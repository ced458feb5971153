//! Taxonomy engine: maps a surface point to a codimension-zero class,
//! a codimension-one class, Omega_T, or degenerate, with certificates.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::PsvfError;
use crate::lie::{
    frame_rank, lie_derivative, lie_derivative_at, lie_tower, restricted_hessian_signature,
    tangential_gradient, SignatureKind,
};
use crate::poly::Poly;
use crate::sliding::{
    classify_equilibrium, pseudo_equilibria, refine_equilibrium, sliding_field, EquilibriumKind,
    EquilibriumReport, SearchBox, SlidingField,
};
use crate::system::{
    project_onto_surface, region_of, PiecewiseSystem, RegionTag, ScalarField, ToleranceConfig,
    VectorField,
};
use crate::twofold::{involution, return_linearization, ReturnMapKind};

/// Extra saddle margin on |trace| > 2 for condition (E).
const E_MARGIN: f64 = 1e-3;
/// Finite-difference parameter step for the (P) transversality certificates.
const P_FD_STEP: f64 = 1e-3;

/// Tangency type of one smooth field against M.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TangencyKind {
    MRegular,
    Fold,
    Cusp,
    Lips,
    BeakToBeak,
    Swallowtail,
    Degenerate,
}

impl fmt::Display for TangencyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TangencyKind::MRegular => "m_regular",
            TangencyKind::Fold => "fold",
            TangencyKind::Cusp => "cusp",
            TangencyKind::Lips => "lips",
            TangencyKind::BeakToBeak => "beak_to_beak",
            TangencyKind::Swallowtail => "swallowtail",
            TangencyKind::Degenerate => "degenerate",
        };
        write!(f, "{s}")
    }
}

/// Tangency verdict with the deciding Lie-tower certificates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TangencyClass {
    pub kind: TangencyKind,
    /// Lie derivative values [Xh, X^2h, ...] up to the computed depth.
    pub values: Vec<f64>,
    pub det_frame: Option<f64>,
    pub frame_rank: Option<usize>,
    pub hessian_det: Option<f64>,
    /// Norm of the M-tangential gradient of Xh (swallowtail regularity).
    pub restriction_gradient_norm: Option<f64>,
    /// Deepest Lie derivative needed for the decision.
    pub depth_used: usize,
}

/// Decision tree over the Lie tower per the fold/cusp/lips/beak/swallowtail
/// taxonomy; every branch records the numbers that decided it.
pub fn classify_tangency(
    x: &VectorField,
    h: &ScalarField,
    p: &Vector3<f64>,
    tol: &ToleranceConfig,
) -> Result<TangencyClass, PsvfError> {
    if x.eval(p).norm() <= tol.zero_eps {
        return Err(PsvfError::Precondition(
            "vector field vanishes at the point; use the boundary-equilibrium path".into(),
        ));
    }
    let e = tol.zero_eps;
    let t1 = lie_tower(x, h, p, 1)?;
    if t1.value(1).abs() > e {
        return Ok(TangencyClass {
            kind: TangencyKind::MRegular,
            values: t1.values().to_vec(),
            det_frame: None,
            frame_rank: None,
            hessian_det: None,
            restriction_gradient_norm: None,
            depth_used: 1,
        });
    }
    let t2 = lie_tower(x, h, p, 2)?;
    if t2.value(2).abs() > e {
        return Ok(TangencyClass {
            kind: TangencyKind::Fold,
            values: t2.values().to_vec(),
            det_frame: t2.det_frame(),
            frame_rank: None,
            hessian_det: None,
            restriction_gradient_norm: None,
            depth_used: 2,
        });
    }
    let t4 = lie_tower(x, h, p, 4)?;
    let rank = frame_rank(&t4, tol);
    if t4.value(3).abs() > e {
        let (kind, hessian_det) = if rank == 3 {
            (TangencyKind::Cusp, None)
        } else if rank == 2 {
            let sig = restricted_hessian_signature(&t4, tol);
            let kind = match sig.signature {
                SignatureKind::PosDef | SignatureKind::NegDef => TangencyKind::Lips,
                SignatureKind::Indefinite => TangencyKind::BeakToBeak,
                SignatureKind::Degenerate => TangencyKind::Degenerate,
            };
            (kind, Some(sig.det))
        } else {
            (TangencyKind::Degenerate, None)
        };
        return Ok(TangencyClass {
            kind,
            values: t4.values().to_vec(),
            det_frame: t4.det_frame(),
            frame_rank: Some(rank),
            hessian_det,
            restriction_gradient_norm: None,
            depth_used: 3,
        });
    }
    if t4.value(4).abs() > e {
        let xh = lie_derivative(x, h.poly());
        let grad_norm = tangential_gradient(&xh, h.poly(), p).norm();
        let kind = if grad_norm > e {
            TangencyKind::Swallowtail
        } else {
            TangencyKind::Degenerate
        };
        return Ok(TangencyClass {
            kind,
            values: t4.values().to_vec(),
            det_frame: t4.det_frame(),
            frame_rank: Some(rank),
            hessian_det: None,
            restriction_gradient_norm: Some(grad_norm),
            depth_used: 4,
        });
    }
    Ok(TangencyClass {
        kind: TangencyKind::Degenerate,
        values: t4.values().to_vec(),
        det_frame: t4.det_frame(),
        frame_rank: Some(rank),
        hessian_det: None,
        restriction_gradient_norm: None,
        depth_used: 4,
    })
}

/// Sign pattern of a two-fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoFoldKind {
    Parabolic,
    Hyperbolic,
    Elliptic,
}

impl fmt::Display for TwoFoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TwoFoldKind::Parabolic => "parabolic",
            TwoFoldKind::Hyperbolic => "hyperbolic",
            TwoFoldKind::Elliptic => "elliptic",
        };
        write!(f, "{s}")
    }
}

/// Two-fold verdict with the deciding second Lie derivatives.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoFoldClass {
    pub kind: TwoFoldKind,
    /// [(X+)^2h, (X-)^2h] at the point.
    pub second_lie: [f64; 2],
}

/// Sign-pattern decision for a point where both fields fold.
pub fn classify_two_fold(
    sys: &PiecewiseSystem,
    p: &Vector3<f64>,
    tol: &ToleranceConfig,
) -> Result<TwoFoldClass, PsvfError> {
    let e = tol.zero_eps;
    if sys.x_plus_h(p).abs() > e || sys.x_minus_h(p).abs() > e {
        return Err(PsvfError::NotTwoFold);
    }
    let a2 = lie_derivative_at(
        &sys.x_plus,
        &lie_derivative(&sys.x_plus, sys.h.poly()),
        p,
    );
    let b2 = lie_derivative_at(
        &sys.x_minus,
        &lie_derivative(&sys.x_minus, sys.h.poly()),
        p,
    );
    if a2.abs() <= e || b2.abs() <= e {
        return Err(PsvfError::NotTwoFold);
    }
    let kind = if a2 < 0.0 && b2 > 0.0 {
        TwoFoldKind::Elliptic
    } else if a2 > 0.0 && b2 < 0.0 {
        TwoFoldKind::Hyperbolic
    } else {
        TwoFoldKind::Parabolic
    };
    Ok(TwoFoldClass { kind, second_lie: [a2, b2] })
}

/// One checked sub-condition with its numeric certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionItem {
    pub label: String,
    pub passed: bool,
    pub certificate: f64,
    pub note: Option<String>,
}

/// A named condition ((H), (P), (E), (HS)) with its item trail.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub name: String,
    pub passed: bool,
    /// True when the verdict rests on sampled-trajectory heuristics.
    pub heuristic: bool,
    pub items: Vec<ConditionItem>,
}

impl ConditionReport {
    fn new(name: &str, heuristic: bool) -> Self {
        Self { name: name.into(), passed: true, heuristic, items: Vec::new() }
    }

    fn push(&mut self, label: &str, passed: bool, certificate: f64, note: Option<String>) {
        self.passed &= passed;
        self.items.push(ConditionItem { label: label.into(), passed, certificate, note });
    }
}

/// Subtype of a boundary equilibrium per the eigenvalues of the vanishing
/// field's Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryEquilibriumKind {
    Node,
    Saddle,
    Focus,
    FailsH,
}

/// Eigen-data of a boundary equilibrium.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryEquilibriumClass {
    pub kind: BoundaryEquilibriumKind,
    /// Eigenvalues of the vanishing field's Jacobian as (re, im), by re.
    pub eigenvalues: [[f64; 2]; 3],
    /// Transversality of each eigendirection (or invariant plane) to M.
    pub transversal: [bool; 3],
    /// Eigenvalues of the sliding-field Jacobian as (re, im) pairs.
    pub sliding_eigenvalues: [[f64; 2]; 2],
}

/// Eigenvalues of a 2x2 matrix as (re, im) pairs sorted by real part.
fn eig2_pairs(j: &Matrix2<f64>) -> [[f64; 2]; 2] {
    let tr = j.trace();
    let det = j.determinant();
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        [[(tr - s) / 2.0, 0.0], [(tr + s) / 2.0, 0.0]]
    } else {
        let im = (-disc).sqrt() / 2.0;
        [[tr / 2.0, -im], [tr / 2.0, im]]
    }
}

/// Right-singular vector of the smallest singular value.
fn smallest_singular_vector(m: &Matrix3<f64>) -> Vector3<f64> {
    let svd = m.svd(false, true);
    let v_t = svd.v_t.unwrap();
    let mut idx = 0;
    for i in 1..3 {
        if svd.singular_values[i] < svd.singular_values[idx] {
            idx = i;
        }
    }
    v_t.row(idx).transpose()
}

/// Two right-singular vectors of the two smallest singular values.
fn two_smallest_singular_vectors(m: &Matrix3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let svd = m.svd(false, true);
    let v_t = svd.v_t.unwrap();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| svd.singular_values[a].partial_cmp(&svd.singular_values[b]).unwrap());
    (v_t.row(order[0]).transpose(), v_t.row(order[1]).transpose())
}

/// Condition (H) at an arbitrary surface point where exactly one field
/// vanishes: hyperbolicity, simple spectrum, eigendirection transversality.
pub fn check_h_at(
    sys: &PiecewiseSystem,
    p: &Vector3<f64>,
    tol: &ToleranceConfig,
) -> Result<(ConditionReport, BoundaryEquilibriumClass), PsvfError> {
    let e = tol.zero_eps;
    let np = sys.x_plus.eval(p).norm();
    let nm = sys.x_minus.eval(p).norm();
    let (zero_field, other_field) = match (np <= e, nm <= e) {
        (true, false) => (&sys.x_plus, &sys.x_minus),
        (false, true) => (&sys.x_minus, &sys.x_plus),
        (true, true) => {
            return Err(PsvfError::Precondition("both fields vanish at the point".into()))
        }
        (false, false) => {
            return Err(PsvfError::Precondition("neither field vanishes at the point".into()))
        }
    };
    let mut report = ConditionReport::new("H", false);

    // (a) the non-vanishing field crosses M transversally.
    let cert_a = lie_derivative_at(other_field, sys.h.poly(), p).abs();
    report.push("a", cert_a > e, cert_a, Some("transversality of the regular field".into()));

    let a_mat = zero_field.jacobian(p);
    let scale = a_mat.amax().max(1.0);
    let mut eig: Vec<(f64, f64)> = a_mat
        .complex_eigenvalues()
        .iter()
        .map(|c| (c.re, c.im))
        .collect();
    eig.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.partial_cmp(&y.1).unwrap()));

    let sf = sliding_field(sys)?;
    let u = sf.graph().project(p);
    let js = sf.jacobian(&u);
    let s_scale = js.amax().max(1.0);
    let s_eig = eig2_pairs(&js);

    // (b) hyperbolicity of both Jacobians.
    let min_re3 = eig.iter().map(|l| l.0.abs()).fold(f64::INFINITY, f64::min) / scale;
    let min_re2 = s_eig.iter().map(|l| l[0].abs()).fold(f64::INFINITY, f64::min) / s_scale;
    let cert_b = min_re3.min(min_re2);
    report.push(
        "b",
        cert_b > e,
        cert_b,
        Some("smallest |Re| over the equilibrium and sliding spectra, scaled".into()),
    );

    // (c) simple spectrum of the equilibrium Jacobian.
    let mut cert_c = f64::INFINITY;
    for i in 0..3 {
        for j in (i + 1)..3 {
            let dr = eig[i].0 - eig[j].0;
            let di = eig[i].1 - eig[j].1;
            cert_c = cert_c.min(dr.hypot(di) / scale);
        }
    }
    report.push("c", cert_c > e, cert_c, Some("pairwise eigenvalue separation, scaled".into()));

    // (d) eigendirections transversal to M.
    let grad_h = sys.h.gradient(p);
    if grad_h.norm() == 0.0 {
        return Err(PsvfError::VanishingGradient);
    }
    let n_hat = grad_h.normalize();
    let mut transversal = [false; 3];
    let mut cert_d = f64::INFINITY;
    let mut i = 0;
    while i < 3 {
        if eig[i].1.abs() <= e * scale {
            let v = smallest_singular_vector(&(a_mat - Matrix3::identity() * eig[i].0));
            let c = v.dot(&n_hat).abs();
            transversal[i] = c > e;
            cert_d = cert_d.min(c);
            i += 1;
        } else {
            // Conjugate pair: the invariant plane ker((A - aI)^2 + b^2 I).
            let shifted = a_mat - Matrix3::identity() * eig[i].0;
            let b2 = eig[i].1 * eig[i].1;
            let plane_mat = shifted * shifted + Matrix3::identity() * b2;
            let (v1, v2) = two_smallest_singular_vectors(&plane_mat);
            let c = v1.dot(&n_hat).abs() + v2.dot(&n_hat).abs();
            transversal[i] = c > e;
            if i + 1 < 3 {
                transversal[i + 1] = transversal[i];
            }
            cert_d = cert_d.min(c);
            i += 2;
        }
    }
    report.push("d", cert_d > e, cert_d, Some("eigendirection transversality to M".into()));

    // (e) distinct real parts of non-conjugated eigenvalues.
    let mut cert_e = f64::INFINITY;
    for i in 0..3 {
        for j in (i + 1)..3 {
            let conjugates = eig[i].1.abs() > e * scale && (eig[i].1 + eig[j].1).abs() <= e * scale
                && (eig[i].0 - eig[j].0).abs() <= e * scale;
            if !conjugates {
                cert_e = cert_e.min((eig[i].0 - eig[j].0).abs() / scale);
            }
        }
    }
    report.push(
        "e",
        cert_e > e,
        cert_e,
        Some("distinct real parts of non-conjugated eigenvalues".into()),
    );

    let n_complex = eig.iter().filter(|l| l.1.abs() > e * scale).count();
    let kind = if !report.passed {
        BoundaryEquilibriumKind::FailsH
    } else if n_complex == 0 {
        let positives = eig.iter().filter(|l| l.0 > 0.0).count();
        if positives == 0 || positives == 3 {
            BoundaryEquilibriumKind::Node
        } else {
            BoundaryEquilibriumKind::Saddle
        }
    } else {
        BoundaryEquilibriumKind::Focus
    };
    let class = BoundaryEquilibriumClass {
        kind,
        eigenvalues: [
            [eig[0].0, eig[0].1],
            [eig[1].0, eig[1].1],
            [eig[2].0, eig[2].1],
        ],
        transversal,
        sliding_eigenvalues: s_eig,
    };
    Ok((report, class))
}

/// Condition (H) at the origin.
pub fn check_h(sys: &PiecewiseSystem, tol: &ToleranceConfig) -> Result<ConditionReport, PsvfError> {
    check_h_at(sys, &Vector3::zeros(), tol).map(|(r, _)| r)
}

/// Chart gradient of a restricted (x3-free) polynomial.
fn grad2(g: &Poly, u: &Vector2<f64>) -> Vector2<f64> {
    let p = Vector3::new(u.x, u.y, 0.0);
    Vector2::new(g.partial(0).eval(&p), g.partial(1).eval(&p))
}

fn eval2(g: &Poly, u: &Vector2<f64>) -> f64 {
    g.eval(&Vector3::new(u.x, u.y, 0.0))
}

/// Condition (P) at an arbitrary parabolic two-fold: transversality of the
/// upper involution's image of the lower fold line, plus sliding-flow
/// transversality certificates.
pub fn check_p_at(
    sys: &PiecewiseSystem,
    p: &Vector3<f64>,
    tol: &ToleranceConfig,
) -> Result<ConditionReport, PsvfError> {
    let tf = classify_two_fold(sys, p, tol)?;
    if tf.kind != TwoFoldKind::Parabolic {
        return Err(PsvfError::Precondition("parabolic two-fold required".into()));
    }
    let graph = sys.surface_graph()?;
    let u0 = graph.project(p);
    let g_minus = graph.restrict(&lie_derivative(&sys.x_minus, sys.h.poly()));
    let thr = tol.zero_eps.sqrt();
    let gm_grad = grad2(&g_minus, &u0);
    if gm_grad.norm() <= tol.zero_eps {
        return Err(PsvfError::Precondition("lower fold line is singular".into()));
    }
    let tau = Vector2::new(-gm_grad.y, gm_grad.x).normalize();
    // Newton projection onto the lower fold line {X-h|_M = 0}.
    let onto_fold = |mut q: Vector2<f64>| -> Vector2<f64> {
        for _ in 0..4 {
            let g = eval2(&g_minus, &q);
            let gr = grad2(&g_minus, &q);
            let n2 = gr.norm_squared();
            if n2 == 0.0 {
                break;
            }
            q -= gr * (g / n2);
        }
        q
    };
    let mut report = ConditionReport::new("P", false);

    // (a) the image curve of the lower fold line crosses it transversally.
    let s = P_FD_STEP;
    let q_plus = onto_fold(u0 + tau * s);
    let q_minus = onto_fold(u0 - tau * s);
    let im_plus = involution(&sys.x_plus, &sys.h, &q_plus, tol)?;
    let im_minus = involution(&sys.x_plus, &sys.h, &q_minus, tol)?;
    let t_im = (im_plus - im_minus) / (2.0 * s);
    let cert_a = t_im.x * tau.y - t_im.y * tau.x;
    report.push(
        "a",
        cert_a.abs() > thr,
        cert_a,
        Some("det of image tangent against the fold-line tangent".into()),
    );

    // (b) sliding directions pushed through the involution stay transversal
    // to the sliding field where the image lands in the sliding region.
    let sf = sliding_field(sys)?;
    let mut worst: Option<f64> = None;
    let mut skipped = 0usize;
    for r in [0.02, 0.05, 0.1] {
        for k in 0..8 {
            let ang = std::f64::consts::TAU * k as f64 / 8.0;
            let q = u0 + Vector2::new(ang.cos(), ang.sin()) * r;
            let Ok(region) = region_of(sys, &graph.lift(&q), tol) else { continue };
            if region != RegionTag::UnstableSliding {
                continue;
            }
            let Ok(im) = involution(&sys.x_plus, &sys.h, &q, tol) else {
                skipped += 1;
                continue;
            };
            let Ok(im_region) = region_of(sys, &graph.lift(&im), tol) else { continue };
            if im_region != RegionTag::StableSliding {
                continue;
            }
            // Push the sliding direction through a central-difference Jacobian.
            let mut dg = Matrix2::zeros();
            for (j, ej) in [Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)].iter().enumerate() {
                let fp = involution(&sys.x_plus, &sys.h, &(q + ej * s), tol)?;
                let fm = involution(&sys.x_plus, &sys.h, &(q - ej * s), tol)?;
                dg.set_column(j, &((fp - fm) / (2.0 * s)));
            }
            let v1 = dg * sf.value(&q);
            let v2 = sf.value(&im);
            let det = v1.x * v2.y - v1.y * v2.x;
            let norm = (v1.norm() * v2.norm()).max(1e-300);
            let c = det.abs() / norm;
            worst = Some(worst.map_or(c, |w: f64| w.min(c)));
        }
    }
    match worst {
        Some(c) => report.push(
            "b",
            c > thr,
            c,
            Some("worst normalized det of pushed vs local sliding directions".into()),
        ),
        None => {
            let note = if skipped > 0 {
                "no escaping samples mapped into the sliding region (some orbits skipped)"
            } else {
                "vacuous: no escaping samples mapped into the sliding region"
            };
            report.push("b", true, 1.0, Some(note.into()));
        }
    }

    // (c) the sliding flow is transversal to the image curve.
    let w = sf.jacobian(&u0) * t_im;
    let cert_c = w.x * t_im.y - w.y * t_im.x;
    report.push(
        "c",
        cert_c.abs() > thr,
        cert_c,
        Some("det of DX^s applied to the image tangent against it".into()),
    );
    Ok(report)
}

/// Condition (P) at the origin.
pub fn check_p(sys: &PiecewiseSystem, tol: &ToleranceConfig) -> Result<ConditionReport, PsvfError> {
    check_p_at(sys, &Vector3::zeros(), tol)
}

/// Condition (E) at an arbitrary elliptic two-fold: the first-return
/// linearization is a saddle whose invariant directions enter the crossing
/// region.
pub fn check_e_at(
    sys: &PiecewiseSystem,
    p: &Vector3<f64>,
    tol: &ToleranceConfig,
) -> Result<ConditionReport, PsvfError> {
    let tf = classify_two_fold(sys, p, tol)?;
    if tf.kind != TwoFoldKind::Elliptic {
        return Err(PsvfError::Precondition("elliptic two-fold required".into()));
    }
    let shifted;
    let local = if p.norm() > tol.zero_eps {
        shifted = sys.translate(p);
        &shifted
    } else {
        sys
    };
    let data = return_linearization(local, tol)?;
    let mut report = ConditionReport::new("E", false);
    let cert_a = data.trace.abs() - 2.0;
    let saddle = data.kind == ReturnMapKind::Saddle && cert_a > E_MARGIN;
    report.push(
        "a",
        saddle,
        cert_a,
        Some(format!("|trace| - 2 of the return linearization ({})", data.kind)),
    );

    match data.invariant_directions {
        Some(dirs) if saddle => {
            let graph = local.surface_graph()?;
            let mut total = 0usize;
            let mut crossing = 0usize;
            for d in dirs {
                let v = Vector2::new(d[0], d[1]);
                for r in [1e-3, 1e-2] {
                    for sgn in [1.0, -1.0] {
                        let q = graph.lift(&(v * (r * sgn)));
                        total += 1;
                        if let Ok(region) = region_of(local, &q, tol) {
                            if region.is_crossing() {
                                crossing += 1;
                            }
                        }
                    }
                }
            }
            let cert = crossing as f64 / total.max(1) as f64;
            report.push(
                "b",
                crossing == total,
                cert,
                Some("fraction of invariant-direction samples in the crossing region".into()),
            );
        }
        _ => {
            report.push("b", false, 0.0, Some("no saddle directions to sample".into()));
        }
    }
    Ok(report)
}

/// Condition (E) at the origin.
pub fn check_e(sys: &PiecewiseSystem, tol: &ToleranceConfig) -> Result<ConditionReport, PsvfError> {
    check_e_at(sys, &Vector3::zeros(), tol)
}

/// One classical RK4 step of the planar (rescaled) sliding field.
fn rk4_planar(sf: &SlidingField, u: &Vector2<f64>, dt: f64) -> Vector2<f64> {
    let k1 = sf.value(u);
    let k2 = sf.value(&(u + k1 * (dt / 2.0)));
    let k3 = sf.value(&(u + k2 * (dt / 2.0)));
    let k4 = sf.value(&(u + k3 * dt));
    u + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

enum FanLimit {
    Equilibrium,
    Cycle { converged: bool },
    Escape,
    Unresolved,
}

/// Heuristic limit-set classification of one fan trajectory.
fn fan_limit(sf: &SlidingField, start: &Vector2<f64>, center: &Vector2<f64>, half: f64) -> FanLimit {
    let dt = 2e-2;
    let steps = 10_000;
    let escape_r = 3.0 * half;
    let mut u = *start;
    let mut dists = Vec::with_capacity(steps);
    for _ in 0..steps {
        u = rk4_planar(sf, &u, dt);
        let d = (u - center).norm();
        if !d.is_finite() || d > escape_r {
            return FanLimit::Escape;
        }
        dists.push(d);
    }
    let d_final = *dists.last().unwrap();
    if d_final < 0.15 * half {
        return FanLimit::Equilibrium;
    }
    let tail = &dists[dists.len() - steps / 10..];
    let r_star = tail.iter().sum::<f64>() / tail.len() as f64;
    let spread = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
        (lo.min(d), hi.max(d))
    });
    let var = (spread.1 - spread.0) / r_star.max(1e-12);
    if var < 0.5 {
        // Geometric approach to the recurrent radius.
        let d50 = (dists[steps / 2] - r_star).abs();
        let d75 = (dists[3 * steps / 4] - r_star).abs();
        let d100 = (d_final - r_star).abs();
        let converged = d100 <= 1.5 * d75 + 1e-6 && d75 <= 1.5 * d50 + 1e-6;
        FanLimit::Cycle { converged }
    } else {
        FanLimit::Unresolved
    }
}

/// Condition (HS), desk-scale heuristic: unique equilibrium in the box and a
/// trajectory fan whose limit sets resolve to the equilibrium, a recurrent
/// cycle, or an exit from the box. Integration uses the rescaled sliding
/// field; time orientation on escaping regions is reversed there.
pub fn check_hs(
    sys: &PiecewiseSystem,
    box_: &SearchBox,
    tol: &ToleranceConfig,
) -> Result<ConditionReport, PsvfError> {
    let sf = sliding_field(sys)?;
    let mut report = ConditionReport::new("HS", true);

    // (a) equilibrium uniqueness in the box.
    let equilibria = pseudo_equilibria(&sf, box_, 21, tol);
    report.push(
        "a",
        equilibria.len() == 1,
        equilibria.len() as f64,
        Some("number of pseudo-equilibria found in the box".into()),
    );
    let center = equilibria.first().copied().unwrap_or_else(Vector2::zeros);
    let half = 0.5
        * (box_.max[0] - box_.min[0])
            .min(box_.max[1] - box_.min[1]);

    // Fan of sampled trajectories.
    let mut cycles = 0usize;
    let mut cycles_converged = 0usize;
    let mut unresolved = 0usize;
    let mut escapes = 0usize;
    let mut total = 0usize;
    for r_frac in [0.3, 0.6, 0.9] {
        for k in 0..8 {
            let ang = std::f64::consts::TAU * k as f64 / 8.0;
            let start = center + Vector2::new(ang.cos(), ang.sin()) * (r_frac * half);
            total += 1;
            match fan_limit(&sf, &start, &center, half) {
                FanLimit::Equilibrium => {}
                FanLimit::Cycle { converged } => {
                    cycles += 1;
                    if converged {
                        cycles_converged += 1;
                    }
                }
                FanLimit::Escape => escapes += 1,
                FanLimit::Unresolved => unresolved += 1,
            }
        }
    }

    // (b) detected cycles attract or repel geometrically (hyperbolic-like).
    if cycles == 0 {
        report.push("b", true, 1.0, Some("vacuous: no periodic trajectories detected".into()));
    } else {
        report.push(
            "b",
            cycles_converged == cycles,
            cycles_converged as f64 / cycles as f64,
            Some(format!("{cycles_converged} of {cycles} cycles converge geometrically")),
        );
    }

    // (c) every fan limit resolves to equilibrium, cycle, or box exit.
    let note_c = if escapes > 0 {
        format!("{escapes} of {total} trajectories leave the box (limit set out of scope)")
    } else {
        format!("all {total} trajectories resolved")
    };
    report.push(
        "c",
        unresolved == 0,
        (total - unresolved) as f64 / total.max(1) as f64,
        Some(note_c),
    );

    // (d) no saddle connections among hyperbolic saddles.
    let saddles: Vec<Vector2<f64>> = equilibria
        .iter()
        .filter(|q| {
            classify_equilibrium(&sf, q, tol).kind == EquilibriumKind::HyperbolicSaddle
        })
        .copied()
        .collect();
    if saddles.is_empty() {
        report.push("d", true, 1.0, Some("vacuous: no saddle equilibria in the box".into()));
    } else {
        let mut min_dist = f64::MAX;
        for s_pt in &saddles {
            let rep = classify_equilibrium(&sf, s_pt, tol);
            let v_u = Vector2::new(rep.eigenvectors[1][0], rep.eigenvectors[1][1]);
            for sgn in [1.0, -1.0] {
                let mut u = s_pt + v_u * (1e-3 * sgn);
                for step in 0..10_000 {
                    u = rk4_planar(&sf, &u, 2e-2);
                    if !u.x.is_finite() || (u - center).norm() > 3.0 * half {
                        break;
                    }
                    for other in &saddles {
                        if step > 100 || (other - s_pt).norm() > 1e-9 {
                            min_dist = min_dist.min((u - other).norm());
                        }
                    }
                }
            }
        }
        report.push(
            "d",
            min_dist > 0.01 * half,
            min_dist,
            Some("closest unstable-manifold approach to any saddle".into()),
        );
    }
    Ok(report)
}

/// Final verdict: a codimension-zero class, a codimension-one class, the
/// deferred tangential set, or degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Xi0(u8),
    Xi1(u8),
    OmegaT,
    Degenerate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Xi0(k) => write!(f, "Xi0_{k}"),
            Verdict::Xi1(k) => write!(f, "Xi1_{k}"),
            Verdict::OmegaT => write!(f, "Omega_T"),
            Verdict::Degenerate => write!(f, "degenerate"),
        }
    }
}

impl FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "Omega_T" {
            return Ok(Verdict::OmegaT);
        }
        if s == "degenerate" {
            return Ok(Verdict::Degenerate);
        }
        if let Some(k) = s.strip_prefix("Xi0_") {
            if let Ok(n) = k.parse::<u8>() {
                if (1..=4).contains(&n) {
                    return Ok(Verdict::Xi0(n));
                }
            }
        }
        if let Some(k) = s.strip_prefix("Xi1_") {
            if let Ok(n) = k.parse::<u8>() {
                if (1..=6).contains(&n) {
                    return Ok(Verdict::Xi1(n));
                }
            }
        }
        Err(format!("unknown verdict `{s}`"))
    }
}

impl Serialize for Verdict {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Verdict {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Full classification record: verdict, sub-labels, and certificate trail.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    /// Human-readable reason attached to degenerate / candidate verdicts.
    pub qualifier: Option<String>,
    /// Point on M the verdict refers to.
    pub point: [f64; 3],
    pub region: Option<RegionTag>,
    pub tangency_plus: Option<TangencyClass>,
    pub tangency_minus: Option<TangencyClass>,
    pub two_fold: Option<TwoFoldClass>,
    pub boundary_equilibrium: Option<BoundaryEquilibriumClass>,
    pub equilibrium: Option<EquilibriumReport>,
    pub condition_reports: Vec<ConditionReport>,
}

impl Classification {
    fn at(verdict: Verdict, p: &Vector3<f64>) -> Self {
        Self {
            verdict,
            qualifier: None,
            point: [p.x, p.y, p.z],
            region: None,
            tangency_plus: None,
            tangency_minus: None,
            two_fold: None,
            boundary_equilibrium: None,
            equilibrium: None,
            condition_reports: Vec::new(),
        }
    }

    fn with_qualifier(mut self, q: &str) -> Self {
        self.qualifier = Some(q.into());
        self
    }
}

/// Grid max threshold for declaring the sliding field identically null.
const NULL_GRID_EPS: f64 = 1e-12;

/// Top-level dispatch over the singularity taxonomy at a point of M.
pub fn classify_psvf(
    sys: &PiecewiseSystem,
    p: &Vector3<f64>,
    tol: &ToleranceConfig,
    box_: &SearchBox,
) -> Classification {
    // Land on the switching surface first.
    let p = if sys.h.eval(p).abs() <= tol.event_tol {
        *p
    } else {
        match project_onto_surface(sys, p, tol.event_tol, 64) {
            Ok(q) => q,
            Err(_) => {
                return Classification::at(Verdict::Degenerate, p)
                    .with_qualifier("point is not on the switching surface");
            }
        }
    };

    let np = sys.x_plus.eval(&p).norm();
    let nm = sys.x_minus.eval(&p).norm();
    if np <= tol.zero_eps && nm <= tol.zero_eps {
        return Classification::at(Verdict::Degenerate, &p)
            .with_qualifier("both fields vanish at the point");
    }
    if np <= tol.zero_eps || nm <= tol.zero_eps {
        // Boundary-equilibrium path: condition (H) decides Xi1(4).
        return match check_h_at(sys, &p, tol) {
            Ok((report, class)) => {
                let passed = report.passed;
                let mut c = Classification::at(
                    if passed { Verdict::Xi1(4) } else { Verdict::Degenerate },
                    &p,
                );
                c.boundary_equilibrium = Some(class);
                c.condition_reports.push(report);
                if !passed {
                    c.qualifier = Some("boundary equilibrium fails (H)".into());
                }
                c
            }
            Err(err) => Classification::at(Verdict::Degenerate, &p)
                .with_qualifier(&format!("boundary-equilibrium analysis failed: {err}")),
        };
    }

    let tc_plus = match classify_tangency(&sys.x_plus, &sys.h, &p, tol) {
        Ok(t) => t,
        Err(err) => {
            return Classification::at(Verdict::Degenerate, &p)
                .with_qualifier(&format!("tangency analysis failed: {err}"));
        }
    };
    let tc_minus = match classify_tangency(&sys.x_minus, &sys.h, &p, tol) {
        Ok(t) => t,
        Err(err) => {
            return Classification::at(Verdict::Degenerate, &p)
                .with_qualifier(&format!("tangency analysis failed: {err}"));
        }
    };
    let region = region_of(sys, &p, tol).ok();

    let reg_p = tc_plus.kind == TangencyKind::MRegular;
    let reg_m = tc_minus.kind == TangencyKind::MRegular;
    let mut out = match (reg_p, reg_m) {
        (true, true) => classify_regular_regular(sys, &p, tol, box_, region),
        (false, true) | (true, false) => {
            let tangent = if reg_p { &tc_minus } else { &tc_plus };
            let verdict = match tangent.kind {
                TangencyKind::Fold => Verdict::Xi0(2),
                TangencyKind::Cusp => Verdict::Xi0(3),
                TangencyKind::Lips => Verdict::Xi1(1),
                TangencyKind::BeakToBeak => Verdict::Xi1(2),
                TangencyKind::Swallowtail => Verdict::Xi1(3),
                TangencyKind::Degenerate | TangencyKind::MRegular => Verdict::Degenerate,
            };
            let mut c = Classification::at(verdict, &p);
            if verdict == Verdict::Degenerate {
                c.qualifier = Some("tangency beyond the codimension-one taxonomy".into());
            }
            c
        }
        (false, false) => classify_double_tangency(sys, &p, tol, &tc_plus, &tc_minus),
    };
    out.region = region;
    out.tangency_plus = Some(tc_plus);
    out.tangency_minus = Some(tc_minus);
    out
}

/// Both fields transversal: crossing is generic; sliding points are decided
/// by the sliding-field equilibrium analysis.
fn classify_regular_regular(
    sys: &PiecewiseSystem,
    p: &Vector3<f64>,
    tol: &ToleranceConfig,
    box_: &SearchBox,
    region: Option<RegionTag>,
) -> Classification {
    match region {
        Some(r) if r.is_crossing() => Classification::at(Verdict::Xi0(1), p),
        Some(_) => {
            let sf = match sliding_field(sys) {
                Ok(sf) => sf,
                Err(err) => {
                    return Classification::at(Verdict::Degenerate, p)
                        .with_qualifier(&format!("sliding analysis failed: {err}"));
                }
            };
            let identically_null = (sf.components()[0].is_zero()
                && sf.components()[1].is_zero())
                || sf.max_on_grid(box_, 21) <= NULL_GRID_EPS;
            if identically_null {
                return Classification::at(Verdict::Degenerate, p)
                    .with_qualifier("sliding field identically null on grid");
            }
            let u = sf.graph().project(p);
            if sf.value(&u).norm() > tol.zero_eps {
                return Classification::at(Verdict::Xi0(1), p);
            }
            let report = classify_equilibrium(&sf, &u, tol);
            let mut c = match report.kind {
                EquilibriumKind::HyperbolicNode
                | EquilibriumKind::HyperbolicSaddle
                | EquilibriumKind::HyperbolicFocus => Classification::at(Verdict::Xi0(1), p),
                EquilibriumKind::SaddleNode => Classification::at(Verdict::Xi1(5), p),
                EquilibriumKind::Hopf => {
                    let mut c = Classification::at(Verdict::Xi1(6), p);
                    match check_hs(sys, box_, tol) {
                        Ok(hs) => {
                            if !hs.passed {
                                c.qualifier = Some("candidate (HS unverified)".into());
                            }
                            c.condition_reports.push(hs);
                        }
                        Err(err) => {
                            c.qualifier =
                                Some(format!("candidate (HS unverified: {err})"));
                        }
                    }
                    c
                }
                EquilibriumKind::Degenerate => Classification::at(Verdict::Degenerate, p)
                    .with_qualifier("degenerate sliding equilibrium"),
            };
            c.equilibrium = Some(report);
            c
        }
        None => Classification::at(Verdict::Degenerate, p)
            .with_qualifier("region undecidable at the point"),
    }
}

/// Both fields tangent: the two-fold family is decided by (P)/(E); anything
/// else stays in the deferred tangential set.
fn classify_double_tangency(
    sys: &PiecewiseSystem,
    p: &Vector3<f64>,
    tol: &ToleranceConfig,
    tc_plus: &TangencyClass,
    tc_minus: &TangencyClass,
) -> Classification {
    if tc_plus.kind == TangencyKind::Degenerate || tc_minus.kind == TangencyKind::Degenerate {
        return Classification::at(Verdict::Degenerate, p)
            .with_qualifier("degenerate tangency on at least one side");
    }
    if tc_plus.kind != TangencyKind::Fold || tc_minus.kind != TangencyKind::Fold {
        return Classification::at(Verdict::OmegaT, p)
            .with_qualifier("tangential singularity outside the two-fold family");
    }
    let two_fold = match classify_two_fold(sys, p, tol) {
        Ok(t) => t,
        Err(err) => {
            return Classification::at(Verdict::Degenerate, p)
                .with_qualifier(&format!("two-fold analysis failed: {err}"));
        }
    };
    let mut c = match two_fold.kind {
        TwoFoldKind::Hyperbolic => {
            let mut c = Classification::at(Verdict::Xi0(4), p);
            c.qualifier = Some("hyperbolic two-fold: (P)/(E) vacuous".into());
            c
        }
        TwoFoldKind::Parabolic => match check_p_at(sys, p, tol) {
            Ok(report) => {
                let mut c = if report.passed {
                    Classification::at(Verdict::Xi0(4), p)
                } else {
                    Classification::at(Verdict::OmegaT, p)
                        .with_qualifier("parabolic two-fold failing (P)")
                };
                c.condition_reports.push(report);
                c
            }
            Err(err) => Classification::at(Verdict::OmegaT, p)
                .with_qualifier(&format!("condition (P) not computable: {err}")),
        },
        TwoFoldKind::Elliptic => match check_e_at(sys, p, tol) {
            Ok(report) => {
                let mut c = if report.passed {
                    Classification::at(Verdict::Xi0(4), p)
                } else {
                    Classification::at(Verdict::OmegaT, p)
                        .with_qualifier("elliptic two-fold failing (E)")
                };
                c.condition_reports.push(report);
                c
            }
            Err(err) => Classification::at(Verdict::OmegaT, p)
                .with_qualifier(&format!("condition (E) not computable: {err}")),
        },
    };
    c.two_fold = Some(two_fold);
    c
}

/// Newton solve of {Xh = 0, X^2h = 0} restricted to M, from a chart guess.
pub fn locate_tangency_pair(
    x: &VectorField,
    h: &ScalarField,
    guess: &Vector2<f64>,
    tol: &ToleranceConfig,
) -> Result<Vector2<f64>, PsvfError> {
    let graph = crate::system::SurfaceGraph::from_h(h)?;
    let g1 = graph.restrict(&lie_derivative(x, h.poly()));
    let g2 = graph.restrict(&lie_derivative(x, &lie_derivative(x, h.poly())));
    newton2_on_chart(&g1, &g2, guess, tol)
}

/// Newton solve of {X+h = 0, X-h = 0} restricted to M (a two-fold point).
pub fn locate_two_fold(
    sys: &PiecewiseSystem,
    guess: &Vector2<f64>,
    tol: &ToleranceConfig,
) -> Result<Vector2<f64>, PsvfError> {
    let graph = sys.surface_graph()?;
    let g1 = graph.restrict(&lie_derivative(&sys.x_plus, sys.h.poly()));
    let g2 = graph.restrict(&lie_derivative(&sys.x_minus, sys.h.poly()));
    newton2_on_chart(&g1, &g2, guess, tol)
}

pub(crate) fn newton2_on_chart(
    g1: &Poly,
    g2: &Poly,
    guess: &Vector2<f64>,
    tol: &ToleranceConfig,
) -> Result<Vector2<f64>, PsvfError> {
    let mut u = *guess;
    for _ in 0..tol.newton_max_iter {
        let f = Vector2::new(eval2(g1, &u), eval2(g2, &u));
        if f.norm() <= tol.newton_tol {
            return Ok(u);
        }
        let r1 = grad2(g1, &u);
        let r2 = grad2(g2, &u);
        let j = Matrix2::new(r1.x, r1.y, r2.x, r2.y);
        match j.lu().solve(&f) {
            Some(step) if step.iter().all(|c| c.is_finite()) => u -= step,
            _ => return Err(PsvfError::NewtonDivergence { residual: f.norm() }),
        }
    }
    let res = Vector2::new(eval2(g1, &u), eval2(g2, &u)).norm();
    if res <= tol.newton_tol {
        Ok(u)
    } else {
        Err(PsvfError::NewtonDivergence { residual: res })
    }
}

/// Nearest point of the fold line {Xh|_M = 0} from a chart guess
/// (gradient-descent Newton on the squared residual).
pub fn nearest_fold_point(
    x: &VectorField,
    h: &ScalarField,
    guess: &Vector2<f64>,
    tol: &ToleranceConfig,
) -> Result<Vector2<f64>, PsvfError> {
    let graph = crate::system::SurfaceGraph::from_h(h)?;
    let g = graph.restrict(&lie_derivative(x, h.poly()));
    let mut u = *guess;
    for _ in 0..tol.newton_max_iter {
        let val = eval2(&g, &u);
        if val.abs() <= tol.newton_tol {
            return Ok(u);
        }
        let gr = grad2(&g, &u);
        let n2 = gr.norm_squared();
        if n2 == 0.0 {
            return Err(PsvfError::VanishingGradient);
        }
        u -= gr * (val / n2);
    }
    let res = eval2(&g, &u).abs();
    if res <= tol.newton_tol {
        Ok(u)
    } else {
        Err(PsvfError::NewtonDivergence { residual: res })
    }
}

/// 3D Newton solve of X(x) = 0 from a spatial guess.
pub fn locate_field_zero(
    x: &VectorField,
    guess: &Vector3<f64>,
    tol: &ToleranceConfig,
) -> Result<Vector3<f64>, PsvfError> {
    let mut q = *guess;
    for _ in 0..tol.newton_max_iter {
        let f = x.eval(&q);
        if f.norm() <= tol.newton_tol {
            return Ok(q);
        }
        match x.jacobian(&q).lu().solve(&f) {
            Some(step) if step.iter().all(|c| c.is_finite()) => q -= step,
            _ => return Err(PsvfError::NewtonDivergence { residual: f.norm() }),
        }
    }
    let res = x.eval(&q).norm();
    if res <= tol.newton_tol {
        Ok(q)
    } else {
        Err(PsvfError::NewtonDivergence { residual: res })
    }
}

/// Refined pseudo-equilibrium nearest to a chart guess.
pub fn locate_pseudo_equilibrium(
    sys: &PiecewiseSystem,
    guess: &Vector2<f64>,
    tol: &ToleranceConfig,
) -> Result<Vector2<f64>, PsvfError> {
    let sf = sliding_field(sys)?;
    refine_equilibrium(&sf, guess, tol).ok_or(PsvfError::NoEquilibrium)
}

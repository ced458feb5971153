//! Randomized invariants: decision laziness, scaling covariance, convexity of
//! the Filippov field, involutivity, and exactness of the algebraic layers.

use nalgebra::{Vector2, Vector3};
use proptest::prelude::*;

use psvf_core::catalog;
use psvf_core::classify::{
    classify_psvf, classify_tangency, classify_two_fold, TangencyKind, TwoFoldKind, Verdict,
};
use psvf_core::jet::jet_of_poly;
use psvf_core::lie::{det3, lie_derivative, lie_derivative_at};
use psvf_core::poly::{Poly, Term};
use psvf_core::sliding::{filippov_field, sliding_field, SearchBox};
use psvf_core::twofold::{involution, return_linearization, ReturnMapKind};
use psvf_core::{PiecewiseSystem, RegionTag, ToleranceConfig, VectorField};

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

/// Dyadic rationals n/16 so draws are exact in f64 and shrink cleanly.
fn dyadic(lo: i32, hi: i32) -> impl Strategy<Value = f64> {
    (lo..=hi).prop_map(|n| f64::from(n) / 16.0)
}

fn dyadic_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(dyadic(-16, 16), n)
}

/// Affine field from 12 coefficients, 4 per component: c + a x1 + b x2 + d x3.
fn affine_field(c: &[f64]) -> VectorField {
    let comp = |s: &[f64]| {
        Poly::constant(s[0])
            .add(&Poly::monomial([1, 0, 0], s[1]))
            .add(&Poly::monomial([0, 1, 0], s[2]))
            .add(&Poly::monomial([0, 0, 1], s[3]))
    };
    VectorField::new([comp(&c[0..4]), comp(&c[4..8]), comp(&c[8..12])])
}

fn scale_field(x: &VectorField, c: f64) -> VectorField {
    VectorField::new([
        x.component(0).scale(c),
        x.component(1).scale(c),
        x.component(2).scale(c),
    ])
}

/// Expected tag from the signs of the two normal components.
fn tag_from_signs(a: f64, b: f64) -> RegionTag {
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

proptest! {
    /// Regular contact must be decided from the first Lie derivative alone.
    #[test]
    fn regular_contact_is_decided_at_depth_one(
        c in dyadic_vec(12),
        lead in 2i32..=16,
        neg in any::<bool>(),
    ) {
        let mut c = c;
        c[8] = f64::from(if neg { -lead } else { lead }) / 16.0;
        let sys = PiecewiseSystem::flat("depth", affine_field(&c), affine_field(&c));
        let class = classify_tangency(&sys.x_plus, &sys.h, &Vector3::zeros(), &tol()).unwrap();
        prop_assert_eq!(class.kind, TangencyKind::MRegular);
        prop_assert_eq!(class.depth_used, 1);
    }

    /// Tangency kind and decision depth are invariant under X -> cX, c > 0.
    #[test]
    fn tangency_kind_survives_positive_rescaling(idx in 0usize..5, num in 1i32..=64) {
        let c = f64::from(num) / 8.0;
        let (sys, expected) = match idx {
            0 => (catalog::fold_regular_system(), TangencyKind::Fold),
            1 => (catalog::cusp_regular_system(), TangencyKind::Cusp),
            2 => (catalog::lips_system(0.0), TangencyKind::Lips),
            3 => (catalog::beak_to_beak_system(0.0), TangencyKind::BeakToBeak),
            _ => (catalog::swallowtail_system(0.0), TangencyKind::Swallowtail),
        };
        let base = classify_tangency(&sys.x_plus, &sys.h, &Vector3::zeros(), &tol()).unwrap();
        prop_assert_eq!(base.kind, expected);
        let scaled = scale_field(&sys.x_plus, c);
        let rescaled = classify_tangency(&scaled, &sys.h, &Vector3::zeros(), &tol()).unwrap();
        prop_assert_eq!(rescaled.kind, base.kind);
        prop_assert_eq!(rescaled.depth_used, base.depth_used);
    }

    /// Region tags follow the sign pattern of (X+h, X-h) and ignore positive
    /// rescaling of either field.
    #[test]
    fn region_tags_respect_positive_rescaling(
        cp in dyadic_vec(12),
        cm in dyadic_vec(12),
        u1 in dyadic(-16, 16),
        u2 in dyadic(-16, 16),
        np in 1i32..=32,
        nm in 1i32..=32,
    ) {
        let sys = PiecewiseSystem::flat("region", affine_field(&cp), affine_field(&cm));
        let p = Vector3::new(u1, u2, 0.0);
        let a = sys.x_plus_h(&p);
        let b = sys.x_minus_h(&p);
        prop_assume!(a.abs() > 5e-2 && b.abs() > 5e-2);
        let tag = psvf_core::system::region_of(&sys, &p, &tol()).unwrap();
        prop_assert_eq!(tag, tag_from_signs(a, b));
        prop_assert!(tag.is_crossing() ^ tag.is_sliding());
        let scaled = PiecewiseSystem::flat(
            "region_scaled",
            scale_field(&sys.x_plus, f64::from(np) / 8.0),
            scale_field(&sys.x_minus, f64::from(nm) / 8.0),
        );
        prop_assert_eq!(psvf_core::system::region_of(&scaled, &p, &tol()).unwrap(), tag);
    }

    /// Points with transversal contact and a nonvanishing sliding field are
    /// generic: the full classifier must return Xi0_1 and echo the region.
    #[test]
    fn regular_points_classify_as_generic(
        cp in dyadic_vec(12),
        cm in dyadic_vec(12),
        u1 in dyadic(-16, 16),
        u2 in dyadic(-16, 16),
    ) {
        let sys = PiecewiseSystem::flat("generic", affine_field(&cp), affine_field(&cm));
        let p = Vector3::new(u1, u2, 0.0);
        let a = sys.x_plus_h(&p);
        let b = sys.x_minus_h(&p);
        prop_assume!(a.abs() > 5e-2 && b.abs() > 5e-2);
        let tag = tag_from_signs(a, b);
        if tag.is_sliding() {
            let sf = sliding_field(&sys).unwrap();
            prop_assume!(sf.value(&Vector2::new(u1, u2)).norm() > 1e-3);
        }
        let class = classify_psvf(&sys, &p, &tol(), &SearchBox::symmetric(1.0));
        prop_assert_eq!(class.verdict, Verdict::Xi0(1));
        prop_assert_eq!(class.region, Some(tag));
    }

    /// On the sliding set the Filippov field is the convex combination of the
    /// two fields that is tangent to M.
    #[test]
    fn filippov_field_is_tangent_and_convex(
        cp in dyadic_vec(12),
        cm in dyadic_vec(12),
        u1 in dyadic(-16, 16),
        u2 in dyadic(-16, 16),
    ) {
        let sys = PiecewiseSystem::flat("filippov", affine_field(&cp), affine_field(&cm));
        let p = Vector3::new(u1, u2, 0.0);
        let a = sys.x_plus_h(&p);
        let b = sys.x_minus_h(&p);
        prop_assume!(a < -5e-2 && b > 5e-2);
        let v = filippov_field(&sys, &p, &tol()).unwrap();
        prop_assert!(v.z.abs() <= 1e-9 * (1.0 + v.norm()));
        let alpha = b / (b - a);
        prop_assert!(alpha > 0.0 && alpha < 1.0);
        let w = sys.x_plus.eval(&p) * alpha + sys.x_minus.eval(&p) * (1.0 - alpha);
        prop_assert!((v - w).norm() <= 1e-9 * (1.0 + w.norm()));
    }

    /// An equilibrium of X+ on M is inherited by the rescaled sliding field,
    /// with no hypotheses beyond the equilibrium itself.
    #[test]
    fn planted_equilibrium_is_inherited_by_the_sliding_field(
        rows in dyadic_vec(9),
        cm in dyadic_vec(12),
        m1 in -8i32..=8,
        m2 in -8i32..=8,
    ) {
        let p0 = Vector3::new(f64::from(m1) / 8.0, f64::from(m2) / 8.0, 0.0);
        let linear = |s: &[f64]| {
            Poly::monomial([1, 0, 0], s[0])
                .add(&Poly::monomial([0, 1, 0], s[1]))
                .add(&Poly::monomial([0, 0, 1], s[2]))
        };
        // taylor_shift(-p0) sends q(x) to q(x - p0), planting the zero at p0.
        let x_plus = VectorField::new([
            linear(&rows[0..3]).taylor_shift(&-p0),
            linear(&rows[3..6]).taylor_shift(&-p0),
            linear(&rows[6..9]).taylor_shift(&-p0),
        ]);
        let sys = PiecewiseSystem::flat("planted", x_plus, affine_field(&cm));
        let sf = sliding_field(&sys).unwrap();
        prop_assert!(sf.value(&Vector2::new(p0.x, p0.y)).norm() <= 1e-10);
    }

    /// Symbolic Lie derivative == pointwise form == directional difference.
    #[test]
    fn lie_derivative_matches_directional_difference(
        c in dyadic_vec(12),
        f6 in dyadic_vec(6),
        q1 in dyadic(-16, 16),
        q2 in dyadic(-16, 16),
        q3 in dyadic(-16, 16),
    ) {
        let x = affine_field(&c);
        let f = Poly::from_terms([
            Term { exp: [2, 0, 0], c: f6[0] },
            Term { exp: [1, 1, 0], c: f6[1] },
            Term { exp: [0, 2, 0], c: f6[2] },
            Term { exp: [1, 0, 0], c: f6[3] },
            Term { exp: [0, 1, 0], c: f6[4] },
            Term { exp: [0, 0, 1], c: f6[5] },
        ]);
        let p = Vector3::new(q1, q2, q3);
        let at = lie_derivative_at(&x, &f, &p);
        let symbolic = lie_derivative(&x, &f).eval(&p);
        prop_assert!((symbolic - at).abs() <= 1e-10 * (1.0 + at.abs()));
        // f is quadratic, so the centered difference along X(p) has no
        // truncation error, only rounding.
        let v = x.eval(&p);
        let d = 1e-4;
        let fd = (f.eval(&(p + v * d)) - f.eval(&(p - v * d))) / (2.0 * d);
        prop_assert!((fd - at).abs() <= 1e-6 * (1.0 + at.abs() + v.norm()));
    }

    /// An order-3 jet reproduces a degree <= 3 polynomial everywhere.
    #[test]
    fn jets_reproduce_low_degree_polynomials(
        raw in prop::collection::vec(
            (0u8..=3, 0u8..=3, 0u8..=3, dyadic(-16, 16)), 1..12),
        b1 in -8i32..=8,
        b2 in -8i32..=8,
        b3 in -8i32..=8,
        o1 in dyadic(-8, 8),
        o2 in dyadic(-8, 8),
        o3 in dyadic(-8, 8),
    ) {
        let poly = Poly::from_terms(
            raw.iter()
                .filter(|(i, j, k, _)| usize::from(i + j + k) <= 3)
                .map(|&(i, j, k, c)| Term { exp: [i, j, k], c }),
        );
        let base = Vector3::new(f64::from(b1) / 8.0, f64::from(b2) / 8.0, f64::from(b3) / 8.0);
        let jet = jet_of_poly(&poly, &base, 3).unwrap();
        let v0 = poly.eval(&base);
        prop_assert!((jet.value() - v0).abs() <= 1e-12 * (1.0 + v0.abs()));
        let u = Vector3::new(o1, o2, o3);
        let want = poly.eval(&(base + u));
        let got = jet.eval_offset(&u);
        prop_assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()));
    }

    /// det3 is alternating; on dyadic rows the identities are exact.
    #[test]
    fn det3_is_alternating(r in dyadic_vec(9)) {
        let r0 = Vector3::new(r[0], r[1], r[2]);
        let r1 = Vector3::new(r[3], r[4], r[5]);
        let r2 = Vector3::new(r[6], r[7], r[8]);
        prop_assert_eq!(det3(&r0, &r1, &r2), -det3(&r1, &r0, &r2));
        prop_assert_eq!(det3(&r0, &r0, &r2), 0.0);
        prop_assert_eq!(det3(&r0, &r1, &r1), 0.0);
    }

    /// Ring operations commute with evaluation.
    #[test]
    fn poly_ring_operations_match_pointwise(
        raw_p in prop::collection::vec((0u8..=2, 0u8..=2, 0u8..=2, dyadic(-16, 16)), 1..10),
        raw_q in prop::collection::vec((0u8..=2, 0u8..=2, 0u8..=2, dyadic(-16, 16)), 1..10),
        x1 in dyadic(-16, 16),
        x2 in dyadic(-16, 16),
        x3 in dyadic(-16, 16),
    ) {
        let term = |&(i, j, k, c): &(u8, u8, u8, f64)| Term { exp: [i, j, k], c };
        let p = Poly::from_terms(raw_p.iter().map(term));
        let q = Poly::from_terms(raw_q.iter().map(term));
        let x = Vector3::new(x1, x2, x3);
        let (pv, qv) = (p.eval(&x), q.eval(&x));
        let scale = 1.0 + pv.abs() + qv.abs();
        prop_assert!((p.add(&q).eval(&x) - (pv + qv)).abs() <= 1e-13 * scale);
        prop_assert!((p.sub(&q).eval(&x) - (pv - qv)).abs() <= 1e-13 * scale);
        prop_assert!((p.mul(&q).eval(&x) - pv * qv).abs() <= 1e-12 * scale * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Each half-map of the two-fold return composes with itself to the
    /// identity on a neighborhood of the fold lines.
    #[test]
    fn involution_composed_with_itself_is_identity(
        na in 4i32..=32,
        nb in 4i32..=32,
        u1 in dyadic(-8, 8),
        u2 in dyadic(-8, 8),
    ) {
        let sys = catalog::elliptic_twofold_system(f64::from(na) / 16.0, f64::from(nb) / 16.0);
        let p = Vector2::new(u1, u2);
        for field in [&sys.x_plus, &sys.x_minus] {
            let q = involution(field, &sys.h, &p, &tol()).unwrap();
            let back = involution(field, &sys.h, &q, &tol()).unwrap();
            prop_assert!((back - p).norm() <= 1e-7);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// The two-fold return linearization matches the closed form of the
    /// quadratic model: L = [[-1, 2a], [-2b, 4ab - 1]], so det L = 1.
    #[test]
    fn return_linearization_matches_quadratic_model(na in 6i32..=32, nb in 6i32..=32) {
        let (a, b) = (f64::from(na) / 16.0, f64::from(nb) / 16.0);
        let trace = 4.0 * a * b - 2.0;
        // Stay clear of the parabolic boundary |trace| = 2.
        prop_assume!((trace.abs() - 2.0).abs() > 5e-2);
        let sys = catalog::elliptic_twofold_system(a, b);
        let data = return_linearization(&sys, &tol()).unwrap();
        let want = [[-1.0, 2.0 * a], [-2.0 * b, 4.0 * a * b - 1.0]];
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((data.l[i][j] - want[i][j]).abs() <= 2e-6);
            }
        }
        prop_assert!((data.det - 1.0).abs() <= 2e-6);
        prop_assert!((data.trace - trace).abs() <= 2e-6);
        let expected_kind =
            if trace.abs() > 2.0 { ReturnMapKind::Saddle } else { ReturnMapKind::Elliptic };
        prop_assert_eq!(data.kind, expected_kind);
    }
}

#[test]
fn verdict_strings_round_trip() {
    let all = [
        Verdict::Xi0(1),
        Verdict::Xi0(2),
        Verdict::Xi0(3),
        Verdict::Xi0(4),
        Verdict::Xi1(1),
        Verdict::Xi1(2),
        Verdict::Xi1(3),
        Verdict::Xi1(4),
        Verdict::Xi1(5),
        Verdict::Xi1(6),
        Verdict::OmegaT,
        Verdict::Degenerate,
    ];
    for v in all {
        assert_eq!(v.to_string().parse::<Verdict>().unwrap(), v);
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, format!("\"{v}\""));
        assert_eq!(serde_json::from_str::<Verdict>(&json).unwrap(), v);
    }
    for bad in ["Xi0_0", "Xi0_5", "Xi1_0", "Xi1_7", "Xi2_1", "omega_t", "Degenerate", ""] {
        assert!(bad.parse::<Verdict>().is_err(), "accepted {bad:?}");
    }
}

#[test]
fn two_fold_catalog_kinds_span_the_taxonomy() {
    let cases = [
        (catalog::elliptic_twofold_system(1.0, 2.0), TwoFoldKind::Elliptic),
        (catalog::parabolic_twofold_system(1.0, 1.0), TwoFoldKind::Parabolic),
        (catalog::hyperbolic_twofold_system(), TwoFoldKind::Hyperbolic),
    ];
    for (sys, want) in cases {
        let class = classify_two_fold(&sys, &Vector3::zeros(), &tol()).unwrap();
        assert_eq!(class.kind, want, "{}", sys.name);
    }
}

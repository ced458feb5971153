//! Unfolding functionals: scalar detectors eta(lambda) that cross zero at
//! each codimension-one transition, plus parameter-sweep drivers.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::classify::{classify_psvf, locate_field_zero, locate_tangency_pair, newton2_on_chart};
use crate::error::PsvfError;
use crate::lie::lie_tower;
use crate::poly::Poly;
use crate::sliding::{refine_equilibrium, sliding_field, SearchBox};
use crate::system::{PiecewiseSystem, ScalarField, SurfaceGraph, ToleranceConfig, VectorField};

/// Which unfolding functional a family uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaKind {
    LipsBeak,
    Swallowtail,
    BoundaryEquilibrium,
    SaddleNode,
    Hopf,
}

/// One functional evaluation: the detector value and its witness point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EtaSample {
    pub eta: f64,
    pub point: [f64; 3],
}

impl EtaSample {
    fn at(eta: f64, p: &Vector3<f64>) -> Self {
        Self { eta, point: [p.x, p.y, p.z] }
    }
}

/// Lips / beak-to-beak detector: the frame determinant
/// det[dh, d(Xh), d(X^2h)] at the solved tangency pair {Xh = X^2h = 0} on M.
pub fn eta_lips_beak(
    x: &VectorField,
    h: &ScalarField,
    guess: &Vector2<f64>,
    tol: &ToleranceConfig,
) -> Result<EtaSample, PsvfError> {
    let u = locate_tangency_pair(x, h, guess, tol)?;
    let p = SurfaceGraph::from_h(h)?.lift(&u);
    let tower = lie_tower(x, h, &p, 2)?;
    Ok(EtaSample::at(tower.det_frame().expect("depth 2 carries det_frame"), &p))
}

/// Swallowtail detector: X^3h at the solved tangency pair.
pub fn eta_swallowtail(
    x: &VectorField,
    h: &ScalarField,
    guess: &Vector2<f64>,
    tol: &ToleranceConfig,
) -> Result<EtaSample, PsvfError> {
    let u = locate_tangency_pair(x, h, guess, tol)?;
    let p = SurfaceGraph::from_h(h)?.lift(&u);
    let tower = lie_tower(x, h, &p, 3)?;
    Ok(EtaSample::at(tower.value(3), &p))
}

/// Boundary-equilibrium detector: the surface height h at the equilibrium of
/// whichever field carries one near the guess.
pub fn eta_boundary_equilibrium(
    sys: &PiecewiseSystem,
    guess: &Vector3<f64>,
    tol: &ToleranceConfig,
) -> Result<EtaSample, PsvfError> {
    let mut sides = [&sys.x_plus, &sys.x_minus];
    if sys.x_minus.eval(guess).norm() < sys.x_plus.eval(guess).norm() {
        sides.swap(0, 1);
    }
    for field in sides {
        if let Ok(q) = locate_field_zero(field, guess, tol) {
            return Ok(EtaSample::at(sys.h.eval(&q), &q));
        }
    }
    Err(PsvfError::NoEquilibrium)
}

/// Saddle-node detector: the kernel-direction component of the sliding field
/// at the fold point of the flow, found by solving
/// {s . X^s = 0, k^T DX^s k = 0} with k the near-kernel direction at the
/// guess (or the given hint) and s its perpendicular.
pub fn eta_saddle_node(
    sys: &PiecewiseSystem,
    guess: &Vector2<f64>,
    kernel_hint: Option<Vector2<f64>>,
    tol: &ToleranceConfig,
) -> Result<EtaSample, PsvfError> {
    let sf = sliding_field(sys)?;
    let k_hat = match kernel_hint {
        Some(v) if v.norm() > 0.0 => v.normalize(),
        _ => near_kernel_direction(&sf.jacobian(guess))?,
    };
    let s_hat = Vector2::new(-k_hat.y, k_hat.x);
    let c = sf.components();
    let g1 = c[0].scale(s_hat.x).add(&c[1].scale(s_hat.y));
    let mut g2 = Poly::zero();
    for (i, ci) in c.iter().enumerate() {
        for j in 0..2 {
            g2 = g2.add(&ci.partial(j).scale(k_hat[i] * k_hat[j]));
        }
    }
    let u = newton2_on_chart(&g1, &g2, guess, tol)?;
    let eta = k_hat.x * eval2(&c[0], &u) + k_hat.y * eval2(&c[1], &u);
    Ok(EtaSample::at(eta, &sf.graph().lift(&u)))
}

/// Chart evaluation of an x3-free polynomial.
fn eval2(g: &Poly, u: &Vector2<f64>) -> f64 {
    g.eval(&Vector3::new(u.x, u.y, 0.0))
}

/// Eigendirection of the eigenvalue closest to zero, sign-normalized so the
/// dominant component is positive. Errors when the spectrum is complex.
fn near_kernel_direction(j: &nalgebra::Matrix2<f64>) -> Result<Vector2<f64>, PsvfError> {
    let tr = j.trace();
    let det = j.determinant();
    let disc = tr * tr - 4.0 * det;
    if disc < 0.0 {
        return Err(PsvfError::Precondition(
            "complex sliding spectrum has no kernel direction".into(),
        ));
    }
    let s = disc.sqrt();
    let l1 = (tr - s) / 2.0;
    let l2 = (tr + s) / 2.0;
    let near = if l1.abs() <= l2.abs() { l1 } else { l2 };
    let shifted = j - nalgebra::Matrix2::identity() * near;
    // The kernel is perpendicular to the larger row of the shifted matrix.
    let r0 = shifted.row(0).transpose();
    let r1 = shifted.row(1).transpose();
    let row = if r0.norm() >= r1.norm() { r0 } else { r1 };
    if row.norm() == 0.0 {
        return Err(PsvfError::Precondition(
            "sliding Jacobian is a multiple of the identity".into(),
        ));
    }
    let mut v = Vector2::new(-row.y, row.x).normalize();
    let dominant = if v.x.abs() >= v.y.abs() { v.x } else { v.y };
    if dominant < 0.0 {
        v = -v;
    }
    Ok(v)
}

/// Hopf detector: the trace of the sliding Jacobian at the refined
/// pseudo-equilibrium near the guess.
pub fn eta_hopf(
    sys: &PiecewiseSystem,
    guess: &Vector2<f64>,
    tol: &ToleranceConfig,
) -> Result<EtaSample, PsvfError> {
    let sf = sliding_field(sys)?;
    let u = refine_equilibrium(&sf, guess, tol).ok_or(PsvfError::NoEquilibrium)?;
    Ok(EtaSample::at(sf.jacobian(&u).trace(), &sf.graph().lift(&u)))
}

/// Detector dispatch at the catalog's default guesses (the origin).
pub fn eta_for(
    sys: &PiecewiseSystem,
    kind: EtaKind,
    tol: &ToleranceConfig,
) -> Result<EtaSample, PsvfError> {
    let u0 = Vector2::zeros();
    match kind {
        EtaKind::LipsBeak => eta_lips_beak(&sys.x_plus, &sys.h, &u0, tol),
        EtaKind::Swallowtail => eta_swallowtail(&sys.x_plus, &sys.h, &u0, tol),
        EtaKind::BoundaryEquilibrium => eta_boundary_equilibrium(sys, &Vector3::zeros(), tol),
        EtaKind::SaddleNode => eta_saddle_node(sys, &u0, None, tol),
        EtaKind::Hopf => eta_hopf(sys, &u0, tol),
    }
}

/// Row of a parameter sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnfoldingRecord {
    pub lambda: f64,
    pub eta: f64,
    /// Witness point of the detector (the origin when it did not converge).
    pub point: [f64; 3],
    pub verdict: String,
    pub converged: bool,
}

/// Evaluates the detector and the classifier across a parameter grid.
pub fn unfold_sweep<F>(
    family: F,
    kind: EtaKind,
    lambdas: &[f64],
    tol: &ToleranceConfig,
    box_: &SearchBox,
) -> Vec<UnfoldingRecord>
where
    F: Fn(f64) -> PiecewiseSystem,
{
    lambdas
        .iter()
        .map(|&lambda| {
            let sys = family(lambda);
            let (eta, point, converged) = match eta_for(&sys, kind, tol) {
                Ok(sample) => (sample.eta, sample.point, true),
                Err(_) => (f64::NAN, [0.0; 3], false),
            };
            let verdict = classify_psvf(&sys, &Vector3::zeros(), tol, box_)
                .verdict
                .to_string();
            UnfoldingRecord { lambda, eta, point, verdict, converged }
        })
        .collect()
}

/// CSV export: header plus one row per record, full-precision floats.
pub fn sweep_to_csv(records: &[UnfoldingRecord]) -> String {
    let mut out = String::from("lambda,x1,x2,x3,eta,verdict,converged\n");
    for r in records {
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{}\n",
            r.lambda, r.point[0], r.point[1], r.point[2], r.eta, r.verdict, r.converged
        ));
    }
    out
}

/// Central-difference slope of the detector in lambda at zero.
pub fn eta_slope<F>(
    family: F,
    kind: EtaKind,
    delta: f64,
    tol: &ToleranceConfig,
) -> Result<f64, PsvfError>
where
    F: Fn(f64) -> PiecewiseSystem,
{
    let plus = eta_for(&family(delta), kind, tol)?;
    let minus = eta_for(&family(-delta), kind, tol)?;
    Ok((plus.eta - minus.eta) / (2.0 * delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use approx::assert_relative_eq;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn lips_and_beak_eta_match_closed_forms() {
        for lambda in [-0.1, 0.0, 0.1] {
            let s = eta_for(&catalog::lips_system(lambda), EtaKind::LipsBeak, &tol()).unwrap();
            assert_relative_eq!(s.eta, -2.0 * lambda, epsilon = 1e-10);
            let s = eta_for(&catalog::beak_to_beak_system(lambda), EtaKind::LipsBeak, &tol())
                .unwrap();
            assert_relative_eq!(s.eta, -2.0 * lambda, epsilon = 1e-10);
        }
    }

    #[test]
    fn curved_lips_eta_scales_with_curvature() {
        for lambda in [-0.1, 0.0, 0.1] {
            let s = eta_for(&catalog::curved_lips_system(lambda), EtaKind::LipsBeak, &tol())
                .unwrap();
            assert_relative_eq!(s.eta, -6.0 * lambda, epsilon = 1e-9);
        }
    }

    #[test]
    fn swallowtail_eta_matches_closed_form() {
        for lambda in [-0.1, 0.0, 0.1] {
            let s = eta_for(&catalog::swallowtail_system(lambda), EtaKind::Swallowtail, &tol())
                .unwrap();
            assert_relative_eq!(s.eta, 2.0 * lambda, epsilon = 1e-10);
            let s = eta_for(
                &catalog::curved_swallowtail_system(lambda),
                EtaKind::Swallowtail,
                &tol(),
            )
            .unwrap();
            assert_relative_eq!(s.eta, 2.0 * lambda, epsilon = 1e-10);
        }
    }

    #[test]
    fn boundary_eta_is_surface_height_of_the_equilibrium() {
        let s = eta_for(
            &catalog::boundary_equilibrium_real_system(0.2),
            EtaKind::BoundaryEquilibrium,
            &tol(),
        )
        .unwrap();
        assert_relative_eq!(s.eta, 0.2, epsilon = 1e-9);
        assert_relative_eq!(s.point[1], 0.2, epsilon = 1e-9);
        assert_relative_eq!(s.point[2], 0.2, epsilon = 1e-9);
        let s = eta_for(
            &catalog::boundary_equilibrium_complex_system(-0.3),
            EtaKind::BoundaryEquilibrium,
            &tol(),
        )
        .unwrap();
        assert_relative_eq!(s.eta, -0.3, epsilon = 1e-9);
    }

    #[test]
    fn saddle_node_eta_recovers_lambda_in_both_orientations() {
        for lambda in [-0.25, 0.0, 0.25] {
            let s = eta_for(
                &catalog::saddle_node_normal_system(lambda),
                EtaKind::SaddleNode,
                &tol(),
            )
            .unwrap();
            assert_relative_eq!(s.eta, lambda, epsilon = 1e-10);
            let s = eta_for(
                &catalog::saddle_node_swapped_system(lambda),
                EtaKind::SaddleNode,
                &tol(),
            )
            .unwrap();
            assert_relative_eq!(s.eta, lambda, epsilon = 1e-10);
        }
        let a = [1.0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5];
        let s = eta_for(
            &catalog::saddle_node_example_system(0.125, &a),
            EtaKind::SaddleNode,
            &tol(),
        )
        .unwrap();
        assert_relative_eq!(s.eta, 0.125, epsilon = 1e-10);
    }

    #[test]
    fn hopf_eta_is_twice_the_parameter() {
        for mu in [-0.2, 0.0, 0.2] {
            let s = eta_for(&catalog::hopf_example_system(mu), EtaKind::Hopf, &tol()).unwrap();
            assert_relative_eq!(s.eta, 2.0 * mu, epsilon = 1e-10);
        }
    }

    #[test]
    fn slopes_match_the_advertised_submersion_rates() {
        let tolc = tol();
        let cases: [(&str, EtaKind, f64); 5] = [
            ("lips", EtaKind::LipsBeak, -2.0),
            ("swallowtail", EtaKind::Swallowtail, 2.0),
            ("boundary_equilibrium_real", EtaKind::BoundaryEquilibrium, 1.0),
            ("saddle_node_normal", EtaKind::SaddleNode, 1.0),
            ("hopf_example", EtaKind::Hopf, 2.0),
        ];
        for (name, kind, expected) in cases {
            let family = |lambda: f64| {
                let mut params = std::collections::BTreeMap::new();
                params.insert("lambda".to_string(), lambda);
                catalog::instantiate(name, &params).unwrap()
            };
            let slope = eta_slope(family, kind, 0.01, &tolc).unwrap();
            assert_relative_eq!(slope, expected, max_relative = 1e-6);
        }
    }

    #[test]
    fn sweep_records_verdicts_and_convergence() {
        let records = unfold_sweep(
            catalog::lips_system,
            EtaKind::LipsBeak,
            &[-0.05, 0.0, 0.05],
            &tol(),
            &SearchBox::symmetric(1.0),
        );
        let verdicts: Vec<&str> = records.iter().map(|r| r.verdict.as_str()).collect();
        assert_eq!(verdicts, ["Xi0_3", "Xi1_1", "Xi0_3"]);
        assert!(records.iter().all(|r| r.converged));
        assert_relative_eq!(records[0].eta, 0.1, epsilon = 1e-10);
        assert_relative_eq!(records[2].eta, -0.1, epsilon = 1e-10);
    }

    #[test]
    fn sweep_csv_is_well_formed() {
        let records = unfold_sweep(
            catalog::swallowtail_system,
            EtaKind::Swallowtail,
            &[-0.02, 0.02],
            &tol(),
            &SearchBox::symmetric(1.0),
        );
        let csv = sweep_to_csv(&records);
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines[0], "lambda,x1,x2,x3,eta,verdict,converged");
        assert_eq!(lines.len(), 3);
        for row in &lines[1..] {
            assert_eq!(row.matches(',').count(), 6);
        }
    }
}

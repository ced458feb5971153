//! Named example library: constructors for every cataloged system, with
//! parameter metadata and expected classification outcomes.

use std::collections::BTreeMap;

use crate::bifurcate::EtaKind;
use crate::classify::Verdict;
use crate::error::PsvfError;
use crate::poly::{Poly, Term};
use crate::system::{PiecewiseSystem, VectorField};

fn t(exp: [u8; 3], c: f64) -> Term {
    Term { exp, c }
}

/// A named scalar parameter with its default value.
#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
}

/// Catalog entry: construction metadata plus the expected verdicts at
/// lambda in {-0.05, 0, +0.05}.
#[derive(Debug, Clone, Copy)]
pub struct FamilyDescriptor {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [ParamSpec],
    /// Unfolding functional that detects the family's transition, if any.
    pub eta: Option<EtaKind>,
    pub expected: [Verdict; 3],
}

const LAMBDA: ParamSpec = ParamSpec { name: "lambda", default: 0.0 };

static DESCRIPTORS: &[FamilyDescriptor] = &[
    FamilyDescriptor {
        name: "crossing_pair",
        summary: "both fields point upward; generic crossing (lambda unused)",
        params: &[LAMBDA],
        eta: None,
        expected: [Verdict::Xi0(1), Verdict::Xi0(1), Verdict::Xi0(1)],
    },
    FamilyDescriptor {
        name: "fold_regular",
        summary: "visible fold of the upper field at the origin (lambda unused)",
        params: &[LAMBDA],
        eta: None,
        expected: [Verdict::Xi0(2), Verdict::Xi0(2), Verdict::Xi0(2)],
    },
    FamilyDescriptor {
        name: "cusp_regular",
        summary: "cusp of the upper field at the origin (lambda unused)",
        params: &[LAMBDA],
        eta: None,
        expected: [Verdict::Xi0(3), Verdict::Xi0(3), Verdict::Xi0(3)],
    },
    FamilyDescriptor {
        name: "lips",
        summary: "lips transition: a definite Morse tangency set is born at lambda = 0",
        params: &[LAMBDA],
        eta: Some(EtaKind::LipsBeak),
        expected: [Verdict::Xi0(3), Verdict::Xi1(1), Verdict::Xi0(3)],
    },
    FamilyDescriptor {
        name: "beak_to_beak",
        summary: "beak-to-beak transition: an indefinite Morse tangency set reconnects",
        params: &[LAMBDA],
        eta: Some(EtaKind::LipsBeak),
        expected: [Verdict::Xi0(3), Verdict::Xi1(2), Verdict::Xi0(3)],
    },
    FamilyDescriptor {
        name: "swallowtail",
        summary: "swallowtail transition: a fourth-order tangency at lambda = 0",
        params: &[LAMBDA],
        eta: Some(EtaKind::Swallowtail),
        expected: [Verdict::Xi0(3), Verdict::Xi1(3), Verdict::Xi0(3)],
    },
    FamilyDescriptor {
        name: "curved_lips",
        summary: "lips transition over a paraboloid switching surface",
        params: &[LAMBDA],
        eta: Some(EtaKind::LipsBeak),
        expected: [Verdict::Xi0(3), Verdict::Xi1(1), Verdict::Xi0(3)],
    },
    FamilyDescriptor {
        name: "curved_beak_to_beak",
        summary: "beak-to-beak transition over a paraboloid switching surface",
        params: &[LAMBDA],
        eta: Some(EtaKind::LipsBeak),
        expected: [Verdict::Xi0(3), Verdict::Xi1(2), Verdict::Xi0(3)],
    },
    FamilyDescriptor {
        name: "curved_swallowtail",
        summary: "swallowtail transition over a paraboloid switching surface",
        params: &[LAMBDA],
        eta: Some(EtaKind::Swallowtail),
        expected: [Verdict::Xi0(3), Verdict::Xi1(3), Verdict::Xi0(3)],
    },
    FamilyDescriptor {
        name: "boundary_equilibrium_real",
        summary: "node with eigenvalues 1,2,3 crossing M along an eigenvector",
        params: &[LAMBDA],
        eta: Some(EtaKind::BoundaryEquilibrium),
        expected: [Verdict::Xi0(1), Verdict::Xi1(4), Verdict::Xi0(1)],
    },
    FamilyDescriptor {
        name: "boundary_equilibrium_complex",
        summary: "focus with eigenvalues 1 +/- i, 2 crossing M along the real eigenvector",
        params: &[LAMBDA],
        eta: Some(EtaKind::BoundaryEquilibrium),
        expected: [Verdict::Xi0(1), Verdict::Xi1(4), Verdict::Xi0(1)],
    },
    FamilyDescriptor {
        name: "saddle_node_example",
        summary: "eight-parameter pair whose sliding field is exactly (lambda - x1^2, -x2)",
        params: &[
            LAMBDA,
            ParamSpec { name: "a1", default: 1.0 },
            ParamSpec { name: "a2", default: 0.5 },
            ParamSpec { name: "a3", default: 0.5 },
            ParamSpec { name: "a4", default: 0.5 },
            ParamSpec { name: "a5", default: 0.5 },
            ParamSpec { name: "a6", default: 0.5 },
            ParamSpec { name: "a7", default: 0.5 },
            ParamSpec { name: "a8", default: 0.5 },
        ],
        eta: Some(EtaKind::SaddleNode),
        expected: [Verdict::Xi0(1), Verdict::Xi1(5), Verdict::Xi0(1)],
    },
    FamilyDescriptor {
        name: "saddle_node_normal",
        summary: "sliding saddle-node normal form (lambda - x1^2, -x2)",
        params: &[LAMBDA],
        eta: Some(EtaKind::SaddleNode),
        expected: [Verdict::Xi0(1), Verdict::Xi1(5), Verdict::Xi0(1)],
    },
    FamilyDescriptor {
        name: "saddle_node_swapped",
        summary: "saddle-node normal form with the kernel along the x2 axis",
        params: &[LAMBDA],
        eta: Some(EtaKind::SaddleNode),
        expected: [Verdict::Xi0(1), Verdict::Xi1(5), Verdict::Xi0(1)],
    },
    FamilyDescriptor {
        name: "saddle_node_literal",
        summary: "orientation (-x2, x1^2 - lambda): nilpotent at lambda = 0, not a saddle-node",
        params: &[LAMBDA],
        eta: None,
        expected: [Verdict::Xi0(1), Verdict::Degenerate, Verdict::Xi0(1)],
    },
    FamilyDescriptor {
        name: "hopf_example",
        summary: "sliding Hopf: the chart field is the planar Hopf normal form",
        params: &[LAMBDA],
        eta: Some(EtaKind::Hopf),
        expected: [Verdict::Xi0(1), Verdict::Xi1(6), Verdict::Xi0(1)],
    },
    FamilyDescriptor {
        name: "hopf_nf_variant",
        summary: "sliding Hopf variant with repelling cubic terms (first Lyapunov +1)",
        params: &[LAMBDA],
        eta: Some(EtaKind::Hopf),
        expected: [Verdict::Xi0(1), Verdict::Xi1(6), Verdict::Xi0(1)],
    },
    FamilyDescriptor {
        name: "twofold_quadratic",
        summary: "elliptic two-fold, a=1 b=2: saddle return map with sliding eigendirections",
        params: &[
            LAMBDA,
            ParamSpec { name: "a", default: 1.0 },
            ParamSpec { name: "b", default: 2.0 },
        ],
        eta: None,
        expected: [Verdict::OmegaT, Verdict::OmegaT, Verdict::OmegaT],
    },
    FamilyDescriptor {
        name: "twofold_elliptic_saddle",
        summary: "elliptic two-fold, a=b=-1.1: saddle return map through the crossing region",
        params: &[
            LAMBDA,
            ParamSpec { name: "a", default: -1.1 },
            ParamSpec { name: "b", default: -1.1 },
        ],
        eta: None,
        expected: [Verdict::Xi0(4), Verdict::Xi0(4), Verdict::Xi0(4)],
    },
    FamilyDescriptor {
        name: "twofold_parabolic",
        summary: "parabolic two-fold, a=b=1: generic fold-line image (lambda unused)",
        params: &[
            LAMBDA,
            ParamSpec { name: "a", default: 1.0 },
            ParamSpec { name: "b", default: 1.0 },
        ],
        eta: None,
        expected: [Verdict::Xi0(4), Verdict::Xi0(4), Verdict::Xi0(4)],
    },
    FamilyDescriptor {
        name: "twofold_hyperbolic",
        summary: "hyperbolic two-fold: both folds visible (lambda unused)",
        params: &[LAMBDA],
        eta: None,
        expected: [Verdict::Xi0(4), Verdict::Xi0(4), Verdict::Xi0(4)],
    },
    FamilyDescriptor {
        name: "singular_continuum",
        summary: "boundary equilibrium whose sliding field vanishes on a line when a = c",
        params: &[
            LAMBDA,
            ParamSpec { name: "a", default: 1.0 },
            ParamSpec { name: "b", default: 1.0 },
            ParamSpec { name: "c", default: 1.0 },
        ],
        eta: None,
        expected: [Verdict::Degenerate, Verdict::Degenerate, Verdict::Degenerate],
    },
    FamilyDescriptor {
        name: "appendix_null_sliding",
        summary: "antipodal constant pair: the sliding field is identically null",
        params: &[LAMBDA],
        eta: None,
        expected: [Verdict::Degenerate, Verdict::Degenerate, Verdict::Degenerate],
    },
];

/// All family names in catalog order.
pub fn family_names() -> Vec<&'static str> {
    DESCRIPTORS.iter().map(|d| d.name).collect()
}

/// Descriptor lookup by family name.
pub fn descriptor(name: &str) -> Result<&'static FamilyDescriptor, PsvfError> {
    DESCRIPTORS
        .iter()
        .find(|d| d.name == name)
        .ok_or_else(|| PsvfError::UnknownFamily(name.into()))
}

/// Builds a family member with defaults overridden by the given parameters;
/// `mu` is accepted as an alias for `lambda`.
pub fn instantiate(
    name: &str,
    overrides: &BTreeMap<String, f64>,
) -> Result<PiecewiseSystem, PsvfError> {
    let desc = descriptor(name)?;
    let mut vals: BTreeMap<&str, f64> =
        desc.params.iter().map(|p| (p.name, p.default)).collect();
    for (key, &value) in overrides {
        let key = if key == "mu" { "lambda" } else { key.as_str() };
        match vals.get_mut(key) {
            Some(slot) => *slot = value,
            None => {
                return Err(PsvfError::UnknownParameter {
                    family: name.into(),
                    name: key.into(),
                })
            }
        }
    }
    let p = |k: &str| vals[k];
    let lambda = p("lambda");
    let mut sys = match name {
        "crossing_pair" => crossing_pair_system(),
        "fold_regular" => fold_regular_system(),
        "cusp_regular" => cusp_regular_system(),
        "lips" => lips_system(lambda),
        "beak_to_beak" => beak_to_beak_system(lambda),
        "swallowtail" => swallowtail_system(lambda),
        "curved_lips" => curved_lips_system(lambda),
        "curved_beak_to_beak" => curved_beak_to_beak_system(lambda),
        "curved_swallowtail" => curved_swallowtail_system(lambda),
        "boundary_equilibrium_real" => boundary_equilibrium_real_system(lambda),
        "boundary_equilibrium_complex" => boundary_equilibrium_complex_system(lambda),
        "saddle_node_example" => {
            let a = [
                p("a1"), p("a2"), p("a3"), p("a4"), p("a5"), p("a6"), p("a7"), p("a8"),
            ];
            saddle_node_example_system(lambda, &a)
        }
        "saddle_node_normal" => saddle_node_normal_system(lambda),
        "saddle_node_swapped" => saddle_node_swapped_system(lambda),
        "saddle_node_literal" => saddle_node_literal_system(lambda),
        "hopf_example" => hopf_example_system(lambda),
        "hopf_nf_variant" => hopf_variant_system(lambda),
        "twofold_quadratic" | "twofold_elliptic_saddle" => {
            elliptic_twofold_system(p("a"), p("b"))
        }
        "twofold_parabolic" => parabolic_twofold_system(p("a"), p("b")),
        "twofold_hyperbolic" => hyperbolic_twofold_system(),
        "singular_continuum" => continuum_system(p("a"), p("b"), p("c")),
        "appendix_null_sliding" => null_sliding_system(),
        _ => unreachable!("descriptor() already validated the name"),
    };
    sys.name = name.into();
    Ok(sys)
}

/// Both fields point upward: generic crossing at every point of M.
pub fn crossing_pair_system() -> PiecewiseSystem {
    PiecewiseSystem::flat(
        "crossing_pair",
        VectorField::constant([0.0, 0.0, 1.0]),
        VectorField::constant([0.0, 0.0, 1.0]),
    )
}

/// Visible fold of the upper field along {x1 = 0}.
pub fn fold_regular_system() -> PiecewiseSystem {
    PiecewiseSystem::flat(
        "fold_regular",
        VectorField::new([Poly::constant(1.0), Poly::zero(), Poly::var(0)]),
        VectorField::constant([1.0, 0.0, 1.0]),
    )
}

/// Cusp of the upper field at the origin.
pub fn cusp_regular_system() -> PiecewiseSystem {
    PiecewiseSystem::flat(
        "cusp_regular",
        VectorField::new([
            Poly::constant(1.0),
            Poly::zero(),
            Poly::from_terms([t([0, 1, 0], 1.0), t([2, 0, 0], 1.0)]),
        ]),
        VectorField::constant([1.0, 0.0, 1.0]),
    )
}

/// X+h = x1^2 + c2*x2^2 + lambda*x2 against a transversal lower field.
fn morse_tangency_system(name: &str, c2: f64, lambda: f64) -> PiecewiseSystem {
    PiecewiseSystem::flat(
        name,
        VectorField::new([
            Poly::constant(1.0),
            Poly::zero(),
            Poly::from_terms([t([2, 0, 0], 1.0), t([0, 2, 0], c2), t([0, 1, 0], lambda)]),
        ]),
        VectorField::constant([1.0, 0.0, 1.0]),
    )
}

/// Lips family: definite Morse tangency at lambda = 0.
pub fn lips_system(lambda: f64) -> PiecewiseSystem {
    morse_tangency_system("lips", 1.0, lambda)
}

/// Beak-to-beak family: indefinite Morse tangency at lambda = 0.
pub fn beak_to_beak_system(lambda: f64) -> PiecewiseSystem {
    morse_tangency_system("beak_to_beak", -1.0, lambda)
}

/// Swallowtail family: X+h = x2 + lambda*x1^2 + x1^3.
pub fn swallowtail_system(lambda: f64) -> PiecewiseSystem {
    PiecewiseSystem::flat(
        "swallowtail",
        VectorField::new([
            Poly::constant(1.0),
            Poly::zero(),
            Poly::from_terms([t([0, 1, 0], 1.0), t([2, 0, 0], lambda), t([3, 0, 0], 1.0)]),
        ]),
        VectorField::constant([1.0, 0.0, 1.0]),
    )
}

/// Paraboloid graph x3 = x1^2 + x2^2 used by the curved variants.
fn paraboloid() -> Poly {
    Poly::from_terms([t([2, 0, 0], 1.0), t([0, 2, 0], 1.0)])
}

/// Morse tangency over the paraboloid: X+h = lambda*x2 + 2x1^2 + c2*x2^2 + x3.
fn curved_morse_system(name: &str, c2: f64, lambda: f64) -> PiecewiseSystem {
    PiecewiseSystem::graph(
        name,
        paraboloid(),
        VectorField::new([
            Poly::constant(1.0),
            Poly::zero(),
            // Third component 2x1 + X+h so that the tangency data is as named.
            Poly::from_terms([
                t([1, 0, 0], 2.0),
                t([0, 1, 0], lambda),
                t([2, 0, 0], 2.0),
                t([0, 2, 0], c2),
                t([0, 0, 1], 1.0),
            ]),
        ]),
        VectorField::constant([0.0, 0.0, 1.0]),
    )
}

/// Lips transition over a paraboloid; restricted Hessian det +12 at lambda 0.
pub fn curved_lips_system(lambda: f64) -> PiecewiseSystem {
    curved_morse_system("curved_lips", 0.0, lambda)
}

/// Beak-to-beak over a paraboloid; restricted Hessian det -12 at lambda 0.
pub fn curved_beak_to_beak_system(lambda: f64) -> PiecewiseSystem {
    curved_morse_system("curved_beak_to_beak", -2.0, lambda)
}

/// Swallowtail over a paraboloid: X+h = x2 + lambda*x1^2 + x1^3 exactly.
pub fn curved_swallowtail_system(lambda: f64) -> PiecewiseSystem {
    PiecewiseSystem::graph(
        "curved_swallowtail",
        paraboloid(),
        VectorField::new([
            Poly::constant(1.0),
            Poly::zero(),
            Poly::from_terms([
                t([1, 0, 0], 2.0),
                t([0, 1, 0], 1.0),
                t([2, 0, 0], lambda),
                t([3, 0, 0], 1.0),
            ]),
        ]),
        VectorField::constant([0.0, 0.0, 1.0]),
    )
}

/// Linear field A(x - lambda*v) against a vertical lower field.
fn boundary_system(name: &str, a: [[f64; 3]; 3], v: [f64; 3], lambda: f64) -> PiecewiseSystem {
    let comp = |row: [f64; 3]| {
        let shift = -lambda * (row[0] * v[0] + row[1] * v[1] + row[2] * v[2]);
        Poly::from_terms([
            t([1, 0, 0], row[0]),
            t([0, 1, 0], row[1]),
            t([0, 0, 1], row[2]),
            t([0, 0, 0], shift),
        ])
    };
    PiecewiseSystem::flat(
        name,
        VectorField::new([comp(a[0]), comp(a[1]), comp(a[2])]),
        VectorField::constant([0.0, 0.0, 1.0]),
    )
}

/// Node with eigenvalues 1, 2, 3 and all eigenvectors transversal to M;
/// the equilibrium sits at lambda*(0, 1, 1), an eigenvector direction.
pub fn boundary_equilibrium_real_system(lambda: f64) -> PiecewiseSystem {
    let a = [[3.0, 2.0, -2.0], [1.0, 3.0, -1.0], [1.0, 2.0, 0.0]];
    boundary_system("boundary_equilibrium_real", a, [0.0, 1.0, 1.0], lambda)
}

/// Focus with eigenvalues 1 +/- i and 2; the equilibrium sits at
/// lambda*(1, 1, 1), the real eigenvector direction.
pub fn boundary_equilibrium_complex_system(lambda: f64) -> PiecewiseSystem {
    let b = [[3.0, 1.0, -2.0], [1.0, 1.0, 0.0], [2.0, 0.0, 0.0]];
    boundary_system("boundary_equilibrium_complex", b, [1.0, 1.0, 1.0], lambda)
}

/// Eight-parameter pair whose sliding field collapses to (mu - x1^2, -x2);
/// exact in floating point when a1 is a power of two and the rest are dyadic.
pub fn saddle_node_example_system(mu: f64, a: &[f64; 8]) -> PiecewiseSystem {
    let k = a[0] * (a[0] + a[2]);
    PiecewiseSystem::flat(
        "saddle_node_example",
        VectorField::new([
            Poly::from_terms([t([1, 0, 0], a[0]), t([0, 0, 1], a[1]), t([0, 0, 0], k)]),
            Poly::monomial([0, 0, 1], a[3]),
            Poly::from_terms([t([0, 0, 1], a[4]), t([0, 0, 0], -1.0)]),
        ]),
        VectorField::new([
            Poly::from_terms([t([0, 0, 0], mu - k), t([1, 0, 0], a[2]), t([0, 0, 1], a[5])]),
            Poly::from_terms([t([0, 1, 0], -1.0), t([0, 0, 1], a[6])]),
            Poly::from_terms([
                t([1, 0, 0], -1.0 / a[0]),
                t([0, 0, 1], a[7]),
                t([0, 0, 0], 1.0),
            ]),
        ]),
    )
}

/// Minimal pair realizing the sliding field (lambda - x1^2, -x2).
pub fn saddle_node_normal_system(lambda: f64) -> PiecewiseSystem {
    PiecewiseSystem::flat(
        "saddle_node_normal",
        VectorField::new([
            Poly::from_terms([t([0, 0, 0], lambda), t([2, 0, 0], -1.0)]),
            Poly::monomial([0, 1, 0], -1.0),
            Poly::constant(-1.0),
        ]),
        VectorField::constant([0.0, 0.0, 1.0]),
    )
}

/// Saddle-node with the kernel along x2: sliding field (-x1, lambda - x2^2).
pub fn saddle_node_swapped_system(lambda: f64) -> PiecewiseSystem {
    PiecewiseSystem::flat(
        "saddle_node_swapped",
        VectorField::new([
            Poly::monomial([1, 0, 0], -1.0),
            Poly::from_terms([t([0, 0, 0], lambda), t([0, 2, 0], -1.0)]),
            Poly::constant(-1.0),
        ]),
        VectorField::constant([0.0, 0.0, 1.0]),
    )
}

/// Orientation (-x2, x1^2 - lambda): the linearization at lambda = 0 is
/// nilpotent, so the origin is beyond the saddle-node class.
pub fn saddle_node_literal_system(lambda: f64) -> PiecewiseSystem {
    PiecewiseSystem::flat(
        "saddle_node_literal",
        VectorField::new([
            Poly::monomial([0, 1, 0], -1.0),
            Poly::from_terms([t([2, 0, 0], 1.0), t([0, 0, 0], -lambda)]),
            Poly::constant(-1.0),
        ]),
        VectorField::constant([0.0, 0.0, 1.0]),
    )
}

/// Upper field spirals with rate mu - 1 over the unit-circle tangency locus;
/// the sliding field is the planar Hopf normal form with parameter mu.
pub fn hopf_example_system(mu: f64) -> PiecewiseSystem {
    PiecewiseSystem::flat(
        "hopf_example",
        VectorField::new([
            Poly::from_terms([t([0, 1, 0], -1.0), t([1, 0, 0], mu - 1.0)]),
            Poly::from_terms([t([1, 0, 0], 1.0), t([0, 1, 0], mu - 1.0)]),
            Poly::from_terms([t([2, 0, 0], 1.0), t([0, 2, 0], 1.0), t([0, 0, 0], -1.0)]),
        ]),
        VectorField::new([Poly::var(0), Poly::var(1), Poly::constant(1.0)]),
    )
}

/// Variant of the Hopf example whose sliding field carries repelling cubic
/// terms (+x1 r^2, +x2 r^2) instead of attracting ones.
pub fn hopf_variant_system(mu: f64) -> PiecewiseSystem {
    PiecewiseSystem::flat(
        "hopf_nf_variant",
        VectorField::new([
            Poly::from_terms([
                t([0, 1, 0], -1.0),
                t([1, 0, 0], mu - 1.0),
                t([3, 0, 0], 2.0),
                t([1, 2, 0], 2.0),
            ]),
            Poly::from_terms([
                t([1, 0, 0], 1.0),
                t([0, 1, 0], mu - 1.0),
                t([2, 1, 0], 2.0),
                t([0, 3, 0], 2.0),
            ]),
            Poly::from_terms([t([2, 0, 0], 1.0), t([0, 2, 0], 1.0), t([0, 0, 0], -1.0)]),
        ]),
        VectorField::new([Poly::var(0), Poly::var(1), Poly::constant(1.0)]),
    )
}

/// Elliptic two-fold family: both folds invisible, involutions
/// g+(u) = (u1 - 2a*u2, -u2) and g-(u) = (-u1, u2 - 2b*u1).
pub fn elliptic_twofold_system(a: f64, b: f64) -> PiecewiseSystem {
    PiecewiseSystem::flat(
        "twofold_elliptic",
        VectorField::new([
            Poly::constant(a),
            Poly::constant(1.0),
            Poly::monomial([0, 1, 0], -1.0),
        ]),
        VectorField::new([Poly::constant(1.0), Poly::constant(b), Poly::var(0)]),
    )
}

/// Parabolic two-fold family: upper fold visible, lower fold invisible.
pub fn parabolic_twofold_system(a: f64, b: f64) -> PiecewiseSystem {
    PiecewiseSystem::flat(
        "twofold_parabolic",
        VectorField::new([Poly::constant(a), Poly::constant(1.0), Poly::var(1)]),
        VectorField::new([Poly::constant(1.0), Poly::constant(b), Poly::var(0)]),
    )
}

/// Hyperbolic two-fold: both folds visible.
pub fn hyperbolic_twofold_system() -> PiecewiseSystem {
    PiecewiseSystem::flat(
        "twofold_hyperbolic",
        VectorField::new([Poly::constant(0.0), Poly::constant(1.0), Poly::var(1)]),
        VectorField::new([
            Poly::constant(1.0),
            Poly::constant(0.0),
            Poly::monomial([1, 0, 0], -1.0),
        ]),
    )
}

/// Constant-divergence pair with a linear sliding continuum when a = c.
pub fn continuum_system(a: f64, b: f64, c: f64) -> PiecewiseSystem {
    PiecewiseSystem::flat(
        "singular_continuum",
        VectorField::new([
            Poly::var(1),
            Poly::from_terms([t([1, 0, 0], -2.0), t([0, 1, 0], -1.0)]),
            Poly::from_terms([t([0, 1, 0], 1.0), t([0, 0, 1], 3.0)]),
        ]),
        VectorField::constant([a, b, c]),
    )
}

/// Antipodal constant pair: the sliding field vanishes identically.
pub fn null_sliding_system() -> PiecewiseSystem {
    PiecewiseSystem::flat(
        "appendix_null_sliding",
        VectorField::constant([-1.0, 1.0, -1.0]),
        VectorField::constant([1.0, -1.0, 1.0]),
    )
}

//! Truncated Taylor-series arithmetic in three variables up to total order 4.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::poly::Poly;
use crate::system::{ScalarField, VectorField};

/// Highest supported jet order.
pub const MAX_ORDER: usize = 4;

/// Jet arithmetic errors.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum JetError {
    #[error("jet order {0} outside 1..={MAX_ORDER}")]
    OrderOutOfRange(usize),
    #[error("jets have mismatched base points")]
    BasePointMismatch,
    #[error("jets have mismatched orders")]
    OrderMismatch,
    #[error("operation needs input order {needed} but only {available} is available")]
    InsufficientOrder { needed: usize, available: usize },
}

/// Number of multi-indices with total degree < d.
fn block_offset(d: usize) -> usize {
    d * (d + 1) * (d + 2) / 6
}

/// Dense position of the multi-index (i, j, k) in the simplex ordering.
fn index_of(i: usize, j: usize, k: usize) -> usize {
    let d = i + j + k;
    block_offset(d) + i * (2 * d + 3 - i) / 2 + j
}

/// All multi-indices with total degree <= order, in storage order.
pub fn simplex_indices(order: usize) -> Vec<[u8; 3]> {
    let mut out = Vec::with_capacity(block_offset(order + 1));
    for d in 0..=order {
        for i in 0..=d {
            for j in 0..=(d - i) {
                out.push([i as u8, j as u8, (d - i - j) as u8]);
            }
        }
    }
    out
}

/// Taylor coefficients of a scalar function at a base point, truncated at
/// total order <= 4: f(base + u) = sum c_a u^a + O(|u|^{order+1}).
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    base_point: Vector3<f64>,
    order: usize,
    coeffs: Vec<f64>,
}

impl Jet {
    /// Jet with all coefficients zero.
    pub fn zeros(base_point: Vector3<f64>, order: usize) -> Result<Self, JetError> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(JetError::OrderOutOfRange(order));
        }
        Ok(Self {
            base_point,
            order,
            coeffs: vec![0.0; block_offset(order + 1)],
        })
    }

    pub fn base_point(&self) -> Vector3<f64> {
        self.base_point
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Taylor coefficient for the multi-index (i, j, k).
    pub fn coeff(&self, i: usize, j: usize, k: usize) -> Result<f64, JetError> {
        if i + j + k > self.order {
            return Err(JetError::InsufficientOrder {
                needed: i + j + k,
                available: self.order,
            });
        }
        Ok(self.coeffs[index_of(i, j, k)])
    }

    fn coeff_unchecked(&self, i: usize, j: usize, k: usize) -> f64 {
        self.coeffs[index_of(i, j, k)]
    }

    /// Value at the base point.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Gradient at the base point.
    pub fn gradient(&self) -> Vector3<f64> {
        Vector3::new(
            self.coeff_unchecked(1, 0, 0),
            self.coeff_unchecked(0, 1, 0),
            self.coeff_unchecked(0, 0, 1),
        )
    }

    /// Hessian at the base point; needs order >= 2.
    pub fn hessian(&self) -> Result<Matrix3<f64>, JetError> {
        if self.order < 2 {
            return Err(JetError::InsufficientOrder { needed: 2, available: self.order });
        }
        let xx = 2.0 * self.coeff_unchecked(2, 0, 0);
        let yy = 2.0 * self.coeff_unchecked(0, 2, 0);
        let zz = 2.0 * self.coeff_unchecked(0, 0, 2);
        let xy = self.coeff_unchecked(1, 1, 0);
        let xz = self.coeff_unchecked(1, 0, 1);
        let yz = self.coeff_unchecked(0, 1, 1);
        Ok(Matrix3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz))
    }

    /// Truncates to a lower (or equal) order; exact coefficient copy.
    pub fn truncate(&self, order: usize) -> Result<Jet, JetError> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(JetError::OrderOutOfRange(order));
        }
        if order > self.order {
            return Err(JetError::InsufficientOrder { needed: order, available: self.order });
        }
        Ok(Jet {
            base_point: self.base_point,
            order,
            coeffs: self.coeffs[..block_offset(order + 1)].to_vec(),
        })
    }

    /// Evaluates the truncated series at base_point + u.
    pub fn eval_offset(&self, u: &Vector3<f64>) -> f64 {
        let mut acc = 0.0;
        for (pos, exp) in simplex_indices(self.order).into_iter().enumerate() {
            acc += self.coeffs[pos]
                * u.x.powi(exp[0] as i32)
                * u.y.powi(exp[1] as i32)
                * u.z.powi(exp[2] as i32);
        }
        acc
    }

    /// Derivative jet along one axis; order drops by one.
    pub fn partial(&self, axis: usize) -> Result<Jet, JetError> {
        if self.order < 2 {
            return Err(JetError::InsufficientOrder { needed: 2, available: self.order });
        }
        let mut out = Jet::zeros(self.base_point, self.order - 1)?;
        for exp in simplex_indices(self.order - 1) {
            let mut src = [exp[0] as usize, exp[1] as usize, exp[2] as usize];
            src[axis] += 1;
            let factor = src[axis] as f64;
            let v = factor * self.coeff_unchecked(src[0], src[1], src[2]);
            out.coeffs[index_of(exp[0] as usize, exp[1] as usize, exp[2] as usize)] = v;
        }
        Ok(out)
    }

    fn check_compatible(&self, other: &Jet) -> Result<(), JetError> {
        if self.base_point != other.base_point {
            return Err(JetError::BasePointMismatch);
        }
        if self.order != other.order {
            return Err(JetError::OrderMismatch);
        }
        Ok(())
    }

    /// Sum of two jets at the same base point and order.
    pub fn add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
        Ok(out)
    }

    /// Truncated product of two jets at the same base point and order.
    pub fn mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_compatible(other)?;
        let mut out = Jet::zeros(self.base_point, self.order)?;
        let idx = simplex_indices(self.order);
        for (pa, ea) in idx.iter().enumerate() {
            if self.coeffs[pa] == 0.0 {
                continue;
            }
            for (pb, eb) in idx.iter().enumerate() {
                let d = (ea[0] + eb[0]) as usize + (ea[1] + eb[1]) as usize + (ea[2] + eb[2]) as usize;
                if d > self.order {
                    continue;
                }
                let pos = index_of(
                    (ea[0] + eb[0]) as usize,
                    (ea[1] + eb[1]) as usize,
                    (ea[2] + eb[2]) as usize,
                );
                out.coeffs[pos] += self.coeffs[pa] * other.coeffs[pb];
            }
        }
        Ok(out)
    }
}

/// Exact jet of a polynomial scalar field at `p`.
pub fn jet_of(field: &ScalarField, p: &Vector3<f64>, order: usize) -> Result<Jet, JetError> {
    jet_of_poly(field.poly(), p, order)
}

/// Exact jet of each component of a polynomial vector field at `p`.
pub fn jet_of_vector(
    field: &VectorField,
    p: &Vector3<f64>,
    order: usize,
) -> Result<[Jet; 3], JetError> {
    Ok([
        jet_of_poly(field.component(0), p, order)?,
        jet_of_poly(field.component(1), p, order)?,
        jet_of_poly(field.component(2), p, order)?,
    ])
}

/// Exact jet of a raw polynomial at `p` (Taylor shift then truncate).
pub fn jet_of_poly(poly: &Poly, p: &Vector3<f64>, order: usize) -> Result<Jet, JetError> {
    let mut jet = Jet::zeros(*p, order)?;
    let shifted = poly.taylor_shift(p);
    for t in shifted.terms() {
        let d = t.exp[0] as usize + t.exp[1] as usize + t.exp[2] as usize;
        if d > order {
            continue;
        }
        jet.coeffs[index_of(t.exp[0] as usize, t.exp[1] as usize, t.exp[2] as usize)] += t.c;
    }
    Ok(jet)
}

/// Jet of the directional derivative Xf = <X, grad f> at `p`.
///
/// The input f must support order + 1 so the derivative keeps full accuracy;
/// polynomial fields always do up to MAX_ORDER.
pub fn directional_compose(
    x: &VectorField,
    f: &ScalarField,
    p: &Vector3<f64>,
    order: usize,
) -> Result<Jet, JetError> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(JetError::OrderOutOfRange(order));
    }
    if order + 1 > MAX_ORDER {
        return Err(JetError::InsufficientOrder { needed: order + 1, available: MAX_ORDER });
    }
    let xf = crate::lie::lie_derivative(x, f.poly());
    jet_of_poly(&xf, p, order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Term;
    use approx::assert_relative_eq;

    fn v(x: f64, y: f64, z: f64) -> Vector3<f64> {
        Vector3::new(x, y, z)
    }

    #[test]
    fn simplex_indexing_is_a_bijection() {
        let idx = simplex_indices(MAX_ORDER);
        assert_eq!(idx.len(), 35);
        for (pos, e) in idx.iter().enumerate() {
            assert_eq!(index_of(e[0] as usize, e[1] as usize, e[2] as usize), pos);
        }
    }

    #[test]
    fn linear_field_gradient() {
        let f = ScalarField::new(Poly::var(2));
        let jet = jet_of(&f, &v(0.0, 0.0, 0.0), 1).unwrap();
        assert_eq!(jet.value(), 0.0);
        assert_eq!(jet.gradient(), v(0.0, 0.0, 1.0));
    }

    #[test]
    fn pure_quadratic_hessian() {
        let f = ScalarField::new(Poly::from_terms([
            Term { exp: [2, 0, 0], c: 1.0 },
            Term { exp: [0, 2, 0], c: 1.0 },
        ]));
        let jet = jet_of(&f, &v(0.0, 0.0, 0.0), 2).unwrap();
        let h = jet.hessian().unwrap();
        assert_eq!(h, Matrix3::from_diagonal(&v(2.0, 2.0, 0.0)));
    }

    #[test]
    fn cubic_off_origin_matches_symbolic_derivatives() {
        // f = x1^3 - x2 at p=(1,0,0): value 1, df/dx1 = 3, d2f/dx1^2 = 6.
        let f = ScalarField::new(Poly::from_terms([
            Term { exp: [3, 0, 0], c: 1.0 },
            Term { exp: [0, 1, 0], c: -1.0 },
        ]));
        let jet = jet_of(&f, &v(1.0, 0.0, 0.0), 3).unwrap();
        assert_eq!(jet.value(), 1.0);
        assert_eq!(jet.gradient().x, 3.0);
        assert_eq!(2.0 * jet.coeff(2, 0, 0).unwrap(), 6.0);
    }

    #[test]
    fn truncation_is_exact_prefix() {
        let f = ScalarField::new(Poly::from_terms([
            Term { exp: [4, 0, 0], c: 2.0 },
            Term { exp: [1, 1, 1], c: -1.0 },
            Term { exp: [0, 0, 1], c: 0.5 },
        ]));
        let j4 = jet_of(&f, &v(0.3, -0.2, 0.7), 4).unwrap();
        let j2 = jet_of(&f, &v(0.3, -0.2, 0.7), 2).unwrap();
        assert_eq!(j4.truncate(2).unwrap(), j2);
    }

    #[test]
    fn directional_compose_reads_off_definition() {
        // X=(1,0,x1), f=x3: Xf = x1, so value 0 and gradient (1,0,0) at 0.
        let x = VectorField::new([Poly::constant(1.0), Poly::zero(), Poly::var(0)]);
        let f = ScalarField::new(Poly::var(2));
        let jet = directional_compose(&x, &f, &v(0.0, 0.0, 0.0), 1).unwrap();
        assert_eq!(jet.value(), 0.0);
        assert_eq!(jet.gradient(), v(1.0, 0.0, 0.0));
    }

    #[test]
    fn directional_compose_transversal_constant() {
        let x = VectorField::new([Poly::zero(), Poly::zero(), Poly::constant(1.0)]);
        let f = ScalarField::new(Poly::var(2));
        let jet = directional_compose(&x, &f, &v(0.2, -0.4, 0.1), 2).unwrap();
        assert_eq!(jet.value(), 1.0);
        assert_eq!(jet.gradient(), v(0.0, 0.0, 0.0));
    }

    #[test]
    fn directional_compose_quadratic_hessian() {
        // X=(1,0,x1^2+x2^2), f=x3: Hessian of Xf at 0 is diag(2,2,0).
        let x = VectorField::new([
            Poly::constant(1.0),
            Poly::zero(),
            Poly::from_terms([
                Term { exp: [2, 0, 0], c: 1.0 },
                Term { exp: [0, 2, 0], c: 1.0 },
            ]),
        ]);
        let f = ScalarField::new(Poly::var(2));
        let jet = directional_compose(&x, &f, &v(0.0, 0.0, 0.0), 2).unwrap();
        assert_eq!(jet.hessian().unwrap(), Matrix3::from_diagonal(&v(2.0, 2.0, 0.0)));
    }

    #[test]
    fn insufficient_order_is_reported() {
        let x = VectorField::new([Poly::constant(1.0), Poly::zero(), Poly::zero()]);
        let f = ScalarField::new(Poly::var(2));
        let err = directional_compose(&x, &f, &v(0.0, 0.0, 0.0), 4).unwrap_err();
        assert_eq!(err, JetError::InsufficientOrder { needed: 5, available: 4 });
    }

    #[test]
    fn jet_product_truncates_consistently() {
        let a = jet_of_poly(&Poly::var(0).add(&Poly::constant(2.0)), &v(0.0, 0.0, 0.0), 3).unwrap();
        let b = jet_of_poly(&Poly::var(0).pow(2), &v(0.0, 0.0, 0.0), 3).unwrap();
        let prod = a.mul(&b).unwrap();
        // (2 + u)(u^2) = 2u^2 + u^3
        assert_eq!(prod.coeff(2, 0, 0).unwrap(), 2.0);
        assert_eq!(prod.coeff(3, 0, 0).unwrap(), 1.0);
        assert_eq!(prod.value(), 0.0);
    }

    #[test]
    fn jet_partial_matches_polynomial_partial() {
        let poly = Poly::from_terms([
            Term { exp: [2, 1, 0], c: 3.0 },
            Term { exp: [0, 0, 3], c: -1.0 },
        ]);
        let p0 = v(0.4, -0.3, 0.9);
        let dj = jet_of_poly(&poly, &p0, 4).unwrap().partial(2).unwrap();
        let direct = jet_of_poly(&poly.partial(2), &p0, 3).unwrap();
        for (a, b) in dj.coeffs.iter().zip(&direct.coeffs) {
            assert_relative_eq!(a, b, max_relative = 1e-13);
        }
    }

    #[test]
    fn mismatched_base_points_are_rejected() {
        let a = jet_of_poly(&Poly::var(0), &v(0.0, 0.0, 0.0), 2).unwrap();
        let b = jet_of_poly(&Poly::var(0), &v(1.0, 0.0, 0.0), 2).unwrap();
        assert_eq!(a.add(&b).unwrap_err(), JetError::BasePointMismatch);
    }
}

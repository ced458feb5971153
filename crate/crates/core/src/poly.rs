//! Sparse polynomials in three variables with exact coefficient arithmetic.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::Vector3;
use serde::de::Deserializer;
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

/// One monomial `c * x1^e0 * x2^e1 * x3^e2` of a serialized polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub exp: [u8; 3],
    pub c: f64,
}

/// Polynomial in (x1, x2, x3) stored as exponent -> coefficient.
///
/// Zero coefficients are pruned after every operation, so the term map is a
/// canonical form and `is_zero` is exact.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    terms: BTreeMap<[u8; 3], f64>,
}

impl Poly {
    /// The zero polynomial.
    pub fn zero() -> Self {
        Self::default()
    }

    /// The constant polynomial `c`.
    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term([0, 0, 0], c);
        p
    }

    /// The coordinate polynomial `x_{axis+1}` for axis in 0..3.
    pub fn var(axis: usize) -> Self {
        let mut exp = [0u8; 3];
        exp[axis] = 1;
        Self::monomial(exp, 1.0)
    }

    /// The single monomial `c * x^exp`.
    pub fn monomial(exp: [u8; 3], c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(exp, c);
        p
    }

    /// Builds a polynomial from a term list, combining repeated exponents.
    pub fn from_terms(terms: impl IntoIterator<Item = Term>) -> Self {
        let mut p = Self::zero();
        for t in terms {
            p.add_term(t.exp, t.c);
        }
        p
    }

    /// Adds `c` to the coefficient of `exp`, pruning exact zeros.
    pub fn add_term(&mut self, exp: [u8; 3], c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(exp).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&exp);
        }
    }

    /// True iff every coefficient is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of the monomial `exp` (0 when absent).
    pub fn coeff(&self, exp: [u8; 3]) -> f64 {
        self.terms.get(&exp).copied().unwrap_or(0.0)
    }

    /// Iterates terms in deterministic (lexicographic exponent) order.
    pub fn terms(&self) -> impl Iterator<Item = Term> + '_ {
        self.terms.iter().map(|(&exp, &c)| Term { exp, c })
    }

    /// Total degree, or 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e[0] as usize + e[1] as usize + e[2] as usize)
            .max()
            .unwrap_or(0)
    }

    /// Evaluates at `p`, summing monomials in deterministic order.
    pub fn eval(&self, p: &Vector3<f64>) -> f64 {
        let mut acc = 0.0;
        for (exp, c) in &self.terms {
            acc += c
                * p.x.powi(exp[0] as i32)
                * p.y.powi(exp[1] as i32)
                * p.z.powi(exp[2] as i32);
        }
        acc
    }

    /// Partial derivative with respect to `x_{axis+1}`.
    pub fn partial(&self, axis: usize) -> Poly {
        let mut out = Poly::zero();
        for (exp, c) in &self.terms {
            if exp[axis] == 0 {
                continue;
            }
            let mut e = *exp;
            e[axis] -= 1;
            out.add_term(e, c * exp[axis] as f64);
        }
        out
    }

    /// Gradient vector at `p`.
    pub fn gradient(&self, p: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(
            self.partial(0).eval(p),
            self.partial(1).eval(p),
            self.partial(2).eval(p),
        )
    }

    /// Sum of two polynomials.
    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (exp, c) in &other.terms {
            out.add_term(*exp, *c);
        }
        out
    }

    /// Difference of two polynomials.
    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (exp, c) in &other.terms {
            out.add_term(*exp, -c);
        }
        out
    }

    /// Product of two polynomials.
    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let exp = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                out.add_term(exp, ca * cb);
            }
        }
        out
    }

    /// Scales every coefficient by `s`.
    pub fn scale(&self, s: f64) -> Poly {
        let mut out = Poly::zero();
        for (exp, c) in &self.terms {
            out.add_term(*exp, c * s);
        }
        out
    }

    /// Negation.
    pub fn neg(&self) -> Poly {
        self.scale(-1.0)
    }

    /// Integer power by repeated multiplication.
    pub fn pow(&self, n: usize) -> Poly {
        let mut out = Poly::constant(1.0);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Substitutes `x3 := phi(x1, x2)`; the result has no x3 dependence.
    pub fn substitute_x3(&self, phi: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (exp, c) in &self.terms {
            let base = Poly::monomial([exp[0], exp[1], 0], *c);
            out = out.add(&base.mul(&phi.pow(exp[2] as usize)));
        }
        out
    }

    /// Coefficients of `q(u) = p(center + u)` via exact binomial expansion.
    pub fn taylor_shift(&self, center: &Vector3<f64>) -> Poly {
        let mut out = Poly::zero();
        for (exp, c) in &self.terms {
            // Expand prod_axis (center_a + u_a)^{exp_a} term by term.
            let mut partial: Vec<([u8; 3], f64)> = vec![([0, 0, 0], *c)];
            for axis in 0..3 {
                let n = exp[axis];
                let ctr = center[axis];
                let mut next = Vec::with_capacity(partial.len() * (n as usize + 1));
                for (e, coef) in &partial {
                    for k in 0..=n {
                        let mut en = *e;
                        en[axis] = k;
                        let binom = binomial(n, k);
                        let shift_pow = ctr.powi((n - k) as i32);
                        next.push((en, coef * binom * shift_pow));
                    }
                }
                partial = next;
            }
            for (e, coef) in partial {
                out.add_term(e, coef);
            }
        }
        out
    }

    /// Substitutes an affine map `x := c + M u` in the (x1, x2) plane; x3 terms
    /// must be absent.
    pub fn affine_substitute_2d(
        &self,
        c: &nalgebra::Vector2<f64>,
        m: &nalgebra::Matrix2<f64>,
    ) -> Poly {
        debug_assert!(self.terms.keys().all(|e| e[2] == 0));
        let sub1 = Poly::constant(c.x)
            .add(&Poly::var(0).scale(m[(0, 0)]))
            .add(&Poly::var(1).scale(m[(0, 1)]));
        let sub2 = Poly::constant(c.y)
            .add(&Poly::var(0).scale(m[(1, 0)]))
            .add(&Poly::var(1).scale(m[(1, 1)]));
        let mut out = Poly::zero();
        for (exp, coef) in &self.terms {
            let term = sub1
                .pow(exp[0] as usize)
                .mul(&sub2.pow(exp[1] as usize))
                .scale(*coef);
            out = out.add(&term);
        }
        out
    }

    /// Largest absolute coefficient (0 for the zero polynomial).
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

fn binomial(n: u8, k: u8) -> f64 {
    let mut num = 1.0;
    for i in 0..k {
        num = num * (n - i) as f64 / (i + 1) as f64;
    }
    num
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // Order by (total degree, exponent) for readable output.
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by_key(|(e, _)| (e[0] as usize + e[1] as usize + e[2] as usize, **e));
        let mut first = true;
        for (exp, c) in terms {
            if first {
                if *c < 0.0 {
                    write!(f, "-")?;
                }
                first = false;
            } else if *c < 0.0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag = c.abs();
            let is_const = *exp == [0, 0, 0];
            if mag != 1.0 || is_const {
                write!(f, "{}", format_coeff(mag))?;
                if !is_const {
                    write!(f, "*")?;
                }
            }
            let mut sep = "";
            for (axis, &e) in exp.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                write!(f, "{}x{}", sep, axis + 1)?;
                if e > 1 {
                    write!(f, "^{}", e)?;
                }
                sep = "*";
            }
        }
        Ok(())
    }
}

fn format_coeff(c: f64) -> String {
    // Rust's f64 Display is the shortest string that round-trips.
    format!("{c}")
}

impl Serialize for Poly {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.terms.len()))?;
        for t in self.terms() {
            seq.serialize_element(&t)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Poly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let terms = Vec::<Term>::deserialize(deserializer)?;
        Ok(Poly::from_terms(terms))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(v: [f64; 3]) -> Vector3<f64> {
        Vector3::new(v[0], v[1], v[2])
    }

    #[test]
    fn eval_matches_hand_expansion() {
        // f = 2 x1^2 x3 - x2 + 3
        let f = Poly::from_terms([
            Term { exp: [2, 0, 1], c: 2.0 },
            Term { exp: [0, 1, 0], c: -1.0 },
            Term { exp: [0, 0, 0], c: 3.0 },
        ]);
        assert_eq!(f.eval(&p([1.0, 2.0, 3.0])), 2.0 * 3.0 - 2.0 + 3.0);
        assert_eq!(f.degree(), 3);
    }

    #[test]
    fn arithmetic_cancels_exactly() {
        let a = Poly::var(0).mul(&Poly::var(0));
        let b = a.clone();
        assert!(a.sub(&b).is_zero());
        let s = a.add(&a.neg());
        assert!(s.is_zero());
    }

    #[test]
    fn partial_derivative_drops_degree() {
        // d/dx1 (x1^3 - x2 + x1^2) = 3 x1^2 + 2 x1
        let f = Poly::from_terms([
            Term { exp: [3, 0, 0], c: 1.0 },
            Term { exp: [0, 1, 0], c: -1.0 },
            Term { exp: [2, 0, 0], c: 1.0 },
        ]);
        let d = f.partial(0);
        assert_eq!(d.coeff([2, 0, 0]), 3.0);
        assert_eq!(d.coeff([1, 0, 0]), 2.0);
        assert!(d.coeff([0, 1, 0]) == 0.0);
    }

    #[test]
    fn taylor_shift_reproduces_values() {
        let f = Poly::from_terms([
            Term { exp: [3, 1, 0], c: 1.5 },
            Term { exp: [0, 2, 2], c: -0.25 },
            Term { exp: [1, 0, 0], c: 2.0 },
        ]);
        let c = p([0.5, -1.25, 0.75]);
        let shifted = f.taylor_shift(&c);
        for u in [p([0.0, 0.0, 0.0]), p([0.25, -0.5, 1.0]), p([-1.0, 2.0, 0.125])] {
            assert_relative_eq!(shifted.eval(&u), f.eval(&(c + u)), max_relative = 1e-12);
        }
    }

    #[test]
    fn taylor_shift_is_exact_on_dyadic_data() {
        // (x1 + 1)^2 expanded at center -1 must give exactly x1^2.
        let f = Poly::var(0).add(&Poly::constant(1.0)).pow(2);
        let shifted = f.taylor_shift(&p([-1.0, 0.0, 0.0]));
        assert_eq!(shifted.coeff([2, 0, 0]), 1.0);
        assert_eq!(shifted.coeff([1, 0, 0]), 0.0);
        assert_eq!(shifted.coeff([0, 0, 0]), 0.0);
    }

    #[test]
    fn substitute_x3_removes_the_variable() {
        // f = x3^2 + x1 x3, phi = x1 + x2 -> x1^2 + 2 x1 x2 + x2^2 + x1^2 + x1 x2
        let f = Poly::from_terms([
            Term { exp: [0, 0, 2], c: 1.0 },
            Term { exp: [1, 0, 1], c: 1.0 },
        ]);
        let phi = Poly::var(0).add(&Poly::var(1));
        let g = f.substitute_x3(&phi);
        assert_eq!(g.coeff([2, 0, 0]), 2.0);
        assert_eq!(g.coeff([1, 1, 0]), 3.0);
        assert_eq!(g.coeff([0, 2, 0]), 1.0);
        assert!(g.terms().all(|t| t.exp[2] == 0));
    }

    #[test]
    fn affine_substitute_2d_matches_pointwise() {
        let f = Poly::from_terms([
            Term { exp: [2, 0, 0], c: 1.0 },
            Term { exp: [1, 1, 0], c: -2.0 },
            Term { exp: [0, 1, 0], c: 0.5 },
        ]);
        let c = nalgebra::Vector2::new(0.25, -0.5);
        let m = nalgebra::Matrix2::new(1.0, 2.0, -0.5, 1.5);
        let g = f.affine_substitute_2d(&c, &m);
        let z = nalgebra::Vector2::new(0.3, -0.7);
        let x = c + m * z;
        assert_relative_eq!(
            g.eval(&p([z.x, z.y, 0.0])),
            f.eval(&p([x.x, x.y, 0.0])),
            max_relative = 1e-12
        );
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let f = Poly::from_terms([
            Term { exp: [2, 0, 1], c: 0.1 },
            Term { exp: [0, 0, 0], c: -3.0e-17 },
            Term { exp: [1, 1, 1], c: std::f64::consts::PI },
        ]);
        let json = serde_json::to_string(&f).unwrap();
        let back: Poly = serde_json::from_str(&json).unwrap();
        assert_eq!(f, back);
        for (a, b) in f.terms().zip(back.terms()) {
            assert_eq!(a.c.to_bits(), b.c.to_bits());
        }
    }

    #[test]
    fn display_is_stable_and_readable() {
        let f = Poly::from_terms([
            Term { exp: [2, 0, 0], c: -1.0 },
            Term { exp: [0, 0, 0], c: 0.5 },
            Term { exp: [0, 1, 0], c: 1.0 },
        ]);
        assert_eq!(format!("{}", f), "0.5 + x2 - x1^2");
        assert_eq!(format!("{}", Poly::zero()), "0");
    }
}

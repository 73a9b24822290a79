//! Real bivariate polynomials and polynomial planar vector fields.
//!
//! Polynomials are kept in canonical sparse form: a map from exponent pairs
//! `(i, j)` to the coefficient of `x^i y^j`, with no explicitly stored zero.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::roots::UniPoly;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("declared degree {declared} is below the actual degree {actual}")]
    DegreeTooLow { declared: u32, actual: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// Canonical sparse polynomial in `(x, y)`.
#[derive(Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<(u32, u32, f64)>", into = "Vec<(u32, u32, f64)>")]
pub struct BivariatePolynomial {
    coeffs: BTreeMap<(u32, u32), f64>,
}

impl From<Vec<(u32, u32, f64)>> for BivariatePolynomial {
    fn from(terms: Vec<(u32, u32, f64)>) -> Self {
        Self::from_terms(terms.into_iter().map(|(i, j, c)| (c, i, j)))
    }
}

impl From<BivariatePolynomial> for Vec<(u32, u32, f64)> {
    fn from(p: BivariatePolynomial) -> Self {
        p.terms().map(|((i, j), c)| (i, j, c)).collect()
    }
}

impl BivariatePolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(c, 0, 0)
    }

    /// `c x^i y^j`.
    pub fn monomial(c: f64, i: u32, j: u32) -> Self {
        let mut coeffs = BTreeMap::new();
        if c != 0.0 {
            coeffs.insert((i, j), c);
        }
        Self { coeffs }
    }

    pub fn x() -> Self {
        Self::monomial(1.0, 1, 0)
    }

    pub fn y() -> Self {
        Self::monomial(1.0, 0, 1)
    }

    /// Sum of `(coefficient, i, j)` terms; repeated exponents accumulate.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (f64, u32, u32)>,
    {
        let mut p = Self::zero();
        for (c, i, j) in terms {
            p.add_term(i, j, c);
        }
        p
    }

    fn add_term(&mut self, i: u32, j: u32, c: f64) {
        if c == 0.0 {
            return;
        }
        let e = self.coeffs.entry((i, j)).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.coeffs.remove(&(i, j));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of `x^i y^j` (zero when absent).
    pub fn coeff(&self, i: u32, j: u32) -> f64 {
        self.coeffs.get(&(i, j)).copied().unwrap_or(0.0)
    }

    /// Stored `((i, j), c)` pairs in exponent order.
    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        self.coeffs.iter().map(|(&k, &c)| (k, c))
    }

    /// Maximum total degree of a stored monomial, 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.coeffs.keys().map(|&(i, j)| i + j).max().unwrap_or(0)
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(&(i, j), &c)| c * x.powi(i as i32) * y.powi(j as i32))
            .sum()
    }

    pub fn eval_at(&self, p: [f64; 2]) -> f64 {
        self.eval(p[0], p[1])
    }

    /// Formal partial derivative.
    pub fn partial(&self, axis: Axis) -> Self {
        let mut out = Self::zero();
        for (&(i, j), &c) in &self.coeffs {
            match axis {
                Axis::X if i > 0 => out.add_term(i - 1, j, c * i as f64),
                Axis::Y if j > 0 => out.add_term(i, j - 1, c * j as f64),
                _ => {}
            }
        }
        out
    }

    /// Monomials of total degree exactly `k`.
    pub fn homogeneous_part(&self, k: u32) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .filter(|(&(i, j), _)| i + j == k)
                .map(|(&e, &c)| (e, c))
                .collect(),
        }
    }

    /// The univariate polynomial `x -> p(x, 0)`.
    pub fn restrict_to_d(&self) -> UniPoly {
        let n = self
            .coeffs
            .keys()
            .filter(|&&(_, j)| j == 0)
            .map(|&(i, _)| i as usize + 1)
            .max()
            .unwrap_or(0);
        let mut c = vec![0.0; n];
        for (&(i, j), &v) in &self.coeffs {
            if j == 0 {
                c[i as usize] = v;
            }
        }
        UniPoly::new(c)
    }

    /// `u -> p(u, 1)`; for homogeneous `p` its real roots are the cotangents of
    /// the angles where `p(cos t, sin t)` vanishes.
    pub fn dehomogenize_y(&self) -> UniPoly {
        let n = self.coeffs.keys().map(|&(i, _)| i as usize + 1).max().unwrap_or(0);
        let mut c = vec![0.0; n];
        for (&(i, _), &v) in &self.coeffs {
            c[i as usize] += v;
        }
        UniPoly::new(c)
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero();
        }
        Self {
            coeffs: self.coeffs.iter().map(|(&e, &c)| (e, c * s)).collect(),
        }
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut out = Self::constant(1.0);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }
}

impl fmt::Debug for BivariatePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for BivariatePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(i, j), &c) in self.coeffs.iter().rev() {
            if !first {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            if a != 1.0 || (i == 0 && j == 0) {
                write!(f, "{a}")?;
            }
            match i {
                0 => {}
                1 => write!(f, "x")?,
                _ => write!(f, "x^{i}")?,
            }
            match j {
                0 => {}
                1 => write!(f, "y")?,
                _ => write!(f, "y^{j}")?,
            }
        }
        Ok(())
    }
}

impl Add for &BivariatePolynomial {
    type Output = BivariatePolynomial;
    fn add(self, rhs: &BivariatePolynomial) -> BivariatePolynomial {
        let mut out = self.clone();
        for (&(i, j), &c) in &rhs.coeffs {
            out.add_term(i, j, c);
        }
        out
    }
}

impl Sub for &BivariatePolynomial {
    type Output = BivariatePolynomial;
    fn sub(self, rhs: &BivariatePolynomial) -> BivariatePolynomial {
        let mut out = self.clone();
        for (&(i, j), &c) in &rhs.coeffs {
            out.add_term(i, j, -c);
        }
        out
    }
}

impl Mul for &BivariatePolynomial {
    type Output = BivariatePolynomial;
    fn mul(self, rhs: &BivariatePolynomial) -> BivariatePolynomial {
        let mut out = BivariatePolynomial::zero();
        for (&(i1, j1), &c1) in &self.coeffs {
            for (&(i2, j2), &c2) in &rhs.coeffs {
                out.add_term(i1 + i2, j1 + j2, c1 * c2);
            }
        }
        out
    }
}

impl Neg for &BivariatePolynomial {
    type Output = BivariatePolynomial;
    fn neg(self) -> BivariatePolynomial {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for BivariatePolynomial {
            type Output = BivariatePolynomial;
            fn $m(self, rhs: BivariatePolynomial) -> BivariatePolynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for BivariatePolynomial {
    type Output = BivariatePolynomial;
    fn neg(self) -> BivariatePolynomial {
        self.scale(-1.0)
    }
}

/// Planar field `(P, Q)` of declared degree `m >= max(deg P, deg Q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyVectorField {
    pub p: BivariatePolynomial,
    pub q: BivariatePolynomial,
    degree: u32,
}

impl PolyVectorField {
    /// Field whose declared degree is the actual degree.
    pub fn new(p: BivariatePolynomial, q: BivariatePolynomial) -> Self {
        let degree = p.degree().max(q.degree());
        Self { p, q, degree }
    }

    pub fn with_degree(
        p: BivariatePolynomial,
        q: BivariatePolynomial,
        degree: u32,
    ) -> Result<Self, PolyError> {
        let actual = p.degree().max(q.degree());
        if actual > degree {
            return Err(PolyError::DegreeTooLow { declared: degree, actual });
        }
        Ok(Self { p, q, degree })
    }

    /// Constant field `(a, b)`.
    pub fn constant(a: f64, b: f64) -> Self {
        Self::new(BivariatePolynomial::constant(a), BivariatePolynomial::constant(b))
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Largest degree actually attained by `P` or `Q`.
    pub fn actual_degree(&self) -> u32 {
        self.p.degree().max(self.q.degree())
    }

    pub fn eval(&self, pt: [f64; 2]) -> [f64; 2] {
        [self.p.eval(pt[0], pt[1]), self.q.eval(pt[0], pt[1])]
    }

    pub fn divergence(&self) -> BivariatePolynomial {
        &self.p.partial(Axis::X) + &self.q.partial(Axis::Y)
    }

    /// Row-major Jacobian `[[Px, Py], [Qx, Qy]]` as polynomials.
    pub fn jacobian(&self) -> [[BivariatePolynomial; 2]; 2] {
        [
            [self.p.partial(Axis::X), self.p.partial(Axis::Y)],
            [self.q.partial(Axis::X), self.q.partial(Axis::Y)],
        ]
    }

    pub fn jacobian_at(&self, pt: [f64; 2]) -> [[f64; 2]; 2] {
        let j = self.jacobian();
        [
            [j[0][0].eval_at(pt), j[0][1].eval_at(pt)],
            [j[1][0].eval_at(pt), j[1][1].eval_at(pt)],
        ]
    }

    pub fn negated(&self) -> Self {
        Self { p: -&self.p, q: -&self.q, degree: self.degree }
    }

    pub(crate) fn redeclare(mut self, degree: u32) -> Self {
        self.degree = degree.max(self.actual_degree());
        self
    }
}

/// Which half-plane a field governs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    /// `X` on `N = {y > 0}`.
    X,
    /// `Y` on `S = {y < 0}`.
    Y,
}

/// `Z = (X, Y)`, discontinuous across `D = {y = 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseField {
    pub x: PolyVectorField,
    pub y: PolyVectorField,
}

impl PiecewiseField {
    /// Both sides are redeclared with the common degree `max(deg X, deg Y)`.
    pub fn new(x: PolyVectorField, y: PolyVectorField) -> Self {
        let m = x.degree().max(y.degree());
        Self { x: x.redeclare(m), y: y.redeclare(m) }
    }

    /// Common declared degree `m`.
    pub fn degree(&self) -> u32 {
        self.x.degree()
    }

    pub fn side(&self, side: Side) -> &PolyVectorField {
        match side {
            Side::X => &self.x,
            Side::Y => &self.y,
        }
    }

    /// Value of the governing field; on `D` itself the `X` value is returned.
    pub fn eval(&self, pt: [f64; 2]) -> [f64; 2] {
        if pt[1] >= 0.0 {
            self.x.eval(pt)
        } else {
            self.y.eval(pt)
        }
    }

    /// `(Y, X)`: the same field with the half-planes exchanged.
    pub fn swapped(&self) -> Self {
        Self { x: self.y.clone(), y: self.x.clone() }
    }

    /// `-Z`, whose forward orbits are the backward orbits of `Z`.
    pub fn time_reversed(&self) -> Self {
        Self { x: self.x.negated(), y: self.y.negated() }
    }

    /// `det[X, Y] = P1 Q2 - Q1 P2`.
    pub fn det(&self) -> BivariatePolynomial {
        &(&self.x.p * &self.y.q) - &(&self.x.q * &self.y.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(terms: &[(f64, u32, u32)]) -> BivariatePolynomial {
        BivariatePolynomial::from_terms(terms.iter().copied())
    }

    #[test]
    fn eval_examples() {
        assert_eq!(p(&[(1.0, 2, 0), (2.0, 0, 1)]).eval(1.0, 1.0), 3.0);
        assert_eq!(BivariatePolynomial::zero().eval(5.0, -3.0), 0.0);
        assert_eq!(p(&[(1.0, 3, 1), (-1.0, 0, 2)]).eval(2.0, 1.0), 7.0);
    }

    #[test]
    fn partial_examples() {
        assert_eq!(p(&[(1.0, 2, 0)]).partial(Axis::X), p(&[(2.0, 1, 0)]));
        assert!(BivariatePolynomial::constant(7.0).partial(Axis::Y).is_zero());
        assert_eq!(
            p(&[(1.0, 3, 1), (-1.0, 0, 2)]).partial(Axis::Y),
            p(&[(1.0, 3, 0), (-2.0, 0, 1)])
        );
    }

    #[test]
    fn homogeneous_examples() {
        let q = p(&[(1.0, 2, 0), (1.0, 1, 0), (1.0, 0, 0)]);
        assert_eq!(q.homogeneous_part(2), p(&[(1.0, 2, 0)]));
        assert!(q.homogeneous_part(3).is_zero());
        let r = p(&[(1.0, 2, 1), (1.0, 1, 1), (-1.0, 0, 1)]);
        assert_eq!(r.homogeneous_part(2), p(&[(1.0, 1, 1)]));
    }

    #[test]
    fn canonical_form_drops_cancellations() {
        let a = p(&[(1.0, 1, 0), (2.0, 0, 1)]);
        let b = p(&[(1.0, 1, 0)]);
        let d = &a - &b;
        assert_eq!(d.terms().count(), 1);
        assert_eq!(d.degree(), 1);
        assert!((&a - &a).is_zero());
        assert_eq!((&a - &a).degree(), 0);
    }

    #[test]
    fn declared_degree_must_cover_actual() {
        let err = PolyVectorField::with_degree(p(&[(1.0, 2, 0)]), p(&[]), 1).unwrap_err();
        assert_eq!(err, PolyError::DegreeTooLow { declared: 1, actual: 2 });
        let z = PiecewiseField::new(
            PolyVectorField::new(p(&[(1.0, 1, 0)]), p(&[(-1.0, 0, 0)])),
            PolyVectorField::constant(1.0, 1.0),
        );
        assert_eq!(z.degree(), 1);
        assert_eq!(z.y.degree(), 1);
    }

    #[test]
    fn det_on_d() {
        // X = (x, -1), Y = (1, 1): det = x + 1
        let z = PiecewiseField::new(
            PolyVectorField::new(p(&[(1.0, 1, 0)]), p(&[(-1.0, 0, 0)])),
            PolyVectorField::constant(1.0, 1.0),
        );
        assert_eq!(z.det(), p(&[(1.0, 1, 0), (1.0, 0, 0)]));
    }

    #[test]
    fn display() {
        assert_eq!(p(&[(1.0, 3, 1), (-1.0, 0, 2)]).to_string(), "x^3y - y^2");
    }
}

//! Poincare compactification in the `(theta, rho)` chart.
//!
//! With `x = cos(theta) / rho`, `y = sin(theta) / rho` and time rescaled by
//! `rho^(m-1)`, a degree-`m` field becomes
//!
//! ```text
//! theta' =        sum_i rho^i A_{m-i}(theta)
//! rho'   = -rho * sum_i rho^i R_{m-i}(theta)
//! ```
//!
//! where `A_k = Q_k(c, s) c - P_k(c, s) s` and `R_k = P_k(c, s) c + Q_k(c, s) s`
//! are built from the degree-`k` homogeneous parts. The circle at infinity is
//! `rho = 0`; the upper half `theta in [0, pi]` carries `X`, the lower half `Y`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dline::{classify_values, DClass};
use crate::poly::{Axis, BivariatePolynomial, PiecewiseField, PolyVectorField, Side};
use crate::quadrature::{self, QuadError};
use crate::tolerances::{Certainty, Tolerances};

use std::f64::consts::PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompactifyError {
    #[error("{side:?} piece evaluated at theta = {theta}, outside its half")]
    WrongHalf { side: Side, theta: f64 },
    #[error("top-degree coefficient A_m of {0:?} vanishes identically")]
    DegenerateTopCoefficient(Side),
    #[error("degree {0} is even: the circle at infinity always carries singular points")]
    EvenDegree(u32),
    #[error("constant fields have no compactification")]
    ConstantField,
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrigKind {
    A,
    R,
}

/// `A_k` or `R_k` as a homogeneous polynomial in `(c, s) = (cos t, sin t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigCoefficient {
    pub k: u32,
    pub side: Side,
    pub kind: TrigKind,
    poly: BivariatePolynomial,
    derivative: BivariatePolynomial,
}

impl TrigCoefficient {
    fn new(k: u32, side: Side, kind: TrigKind, poly: BivariatePolynomial) -> Self {
        // d/dt p(cos t, sin t) = -s p_c + c p_s
        let c = BivariatePolynomial::x();
        let s = BivariatePolynomial::y();
        let derivative = &(&c * &poly.partial(Axis::Y)) - &(&s * &poly.partial(Axis::X));
        Self { k, side, kind, poly, derivative }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        self.poly.eval(c, s)
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        self.derivative.eval(c, s)
    }

    /// The underlying polynomial in `(c, s)`.
    pub fn polynomial(&self) -> &BivariatePolynomial {
        &self.poly
    }

    pub fn is_identically_zero(&self, rel: f64, scale: f64) -> bool {
        self.poly.max_abs_coeff() <= rel * scale
    }
}

/// `A_k`, `R_k` for `k = 0..=m` of one side.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigCoefficients {
    pub side: Side,
    pub a: Vec<TrigCoefficient>,
    pub r: Vec<TrigCoefficient>,
}

impl TrigCoefficients {
    pub fn top_a(&self) -> &TrigCoefficient {
        self.a.last().expect("k = 0 always present")
    }

    pub fn top_r(&self) -> &TrigCoefficient {
        self.r.last().expect("k = 0 always present")
    }
}

pub fn trig_coefficients(field: &PolyVectorField, side: Side) -> TrigCoefficients {
    let c = BivariatePolynomial::x();
    let s = BivariatePolynomial::y();
    let mut a = Vec::new();
    let mut r = Vec::new();
    for k in 0..=field.degree() {
        let pk = field.p.homogeneous_part(k);
        let qk = field.q.homogeneous_part(k);
        a.push(TrigCoefficient::new(k, side, TrigKind::A, &(&qk * &c) - &(&pk * &s)));
        r.push(TrigCoefficient::new(k, side, TrigKind::R, &(&pk * &c) + &(&qk * &s)));
    }
    TrigCoefficients { side, a, r }
}

/// The discontinuous piecewise trigonometric field in `(theta, rho)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigField {
    pub m: u32,
    pub x: TrigCoefficients,
    pub y: TrigCoefficients,
}

pub fn compactified_field(z: &PiecewiseField) -> TrigField {
    TrigField { m: z.degree(), x: trig_coefficients(&z.x, Side::X), y: trig_coefficients(&z.y, Side::Y) }
}

impl TrigField {
    pub fn coefficients(&self, side: Side) -> &TrigCoefficients {
        match side {
            Side::X => &self.x,
            Side::Y => &self.y,
        }
    }

    /// Half of the circle carrying `theta`; the boundary rays belong to `X`.
    pub fn half_of(theta: f64) -> Side {
        if theta.sin() >= 0.0 {
            Side::X
        } else {
            Side::Y
        }
    }

    /// Evaluate one piece; `theta` must lie in that piece's closed half.
    pub fn eval_piece(&self, side: Side, theta: f64, rho: f64) -> Result<[f64; 2], CompactifyError> {
        let s = theta.sin();
        let ok = match side {
            Side::X => s >= -1e-12,
            Side::Y => s <= 1e-12,
        };
        if !ok {
            return Err(CompactifyError::WrongHalf { side, theta });
        }
        Ok(self.eval_unchecked(side, theta, rho))
    }

    pub fn eval(&self, theta: f64, rho: f64) -> [f64; 2] {
        self.eval_unchecked(Self::half_of(theta), theta, rho)
    }

    /// Piece formula without the half check, for integrators that overshoot a
    /// boundary by a rounding error.
    pub fn eval_unchecked(&self, side: Side, theta: f64, rho: f64) -> [f64; 2] {
        let co = self.coefficients(side);
        let m = self.m as usize;
        let mut th = 0.0;
        let mut rr = 0.0;
        let mut pw = 1.0;
        for i in 0..=m {
            th += pw * co.a[m - i].eval(theta);
            rr += pw * co.r[m - i].eval(theta);
            pw *= rho;
        }
        let rho_comp = if rho == 0.0 { 0.0 } else { -rho * rr };
        [th, rho_comp]
    }

    /// Divergence of one piece in the `(theta, rho)` plane.
    pub fn divergence(&self, side: Side, theta: f64, rho: f64) -> f64 {
        let co = self.coefficients(side);
        let m = self.m as usize;
        let mut d = 0.0;
        let mut pw = 1.0;
        for i in 0..=m {
            d += pw * (co.a[m - i].derivative(theta) - (i as f64 + 1.0) * co.r[m - i].eval(theta));
            pw *= rho;
        }
        d
    }
}

/// Angle between the compactified field and the chain-rule image of the planar
/// field at `(cos(theta)/rho, sin(theta)/rho)`.
pub fn pullback_check(z: &PiecewiseField, theta: f64, rho: f64, tol: &Tolerances) -> Result<f64, CompactifyError> {
    if !(rho > 0.0) {
        return Err(CompactifyError::Precondition("rho must be positive"));
    }
    let (s, c) = theta.sin_cos();
    if s.abs() <= tol.sign {
        return Err(CompactifyError::Precondition("point lies on the discontinuity line"));
    }
    let x = c / rho;
    let y = s / rho;
    let side = if y > 0.0 { Side::X } else { Side::Y };
    let [dx, dy] = z.side(side).eval([x, y]);
    let r2 = x * x + y * y;
    let dtheta = (x * dy - y * dx) / r2;
    let drho = -(x * dx + y * dy) / r2.powf(1.5);
    let trig = compactified_field(z).eval_piece(side, theta, rho)?;
    let cross = trig[0] * drho - trig[1] * dtheta;
    let dot = trig[0] * dtheta + trig[1] * drho;
    if cross == 0.0 && dot == 0.0 {
        return Ok(0.0);
    }
    Ok(cross.abs().atan2(dot))
}

/// `P_{1,m}(1,0) Q_{2,m}(1,0) - Q_{1,m}(1,0) P_{2,m}(1,0)`: nonzero iff the
/// points `(+-1, 0, 0)`, when singular for the Filippov field, are hyperbolic.
pub fn filippov_point_value(z: &PiecewiseField) -> f64 {
    let m = z.degree();
    let top = |p: &BivariatePolynomial| p.homogeneous_part(m).eval(1.0, 0.0);
    top(&z.x.p) * top(&z.y.q) - top(&z.x.q) * top(&z.y.p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InfinityKind {
    /// Zero of `A_{1,m}` in `(0, pi)`.
    X,
    /// Zero of `A_{2,m}` in `(pi, 2 pi)`.
    Y,
    /// One of `(+-1, 0, 0)`, the two points of `D` on the circle at infinity.
    FilippovPoint { class: DClass, singular: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfinitySingularity {
    pub theta: f64,
    pub kind: InfinityKind,
    pub hyperbolic: Certainty,
    /// `A_{k,m}(theta)`.
    pub a: f64,
    /// `A'_{k,m}(theta)`.
    pub a_prime: f64,
    /// `R_{k,m}(theta)`.
    pub r: f64,
    /// Multiplicity of the zero of `A_{k,m}`; 0 for Filippov points.
    pub multiplicity: usize,
    /// Hyperbolicity value for Filippov points.
    pub filippov_value: Option<f64>,
}

fn field_scale(f: &PolyVectorField) -> f64 {
    f.p.max_abs_coeff().max(f.q.max_abs_coeff()).max(f64::MIN_POSITIVE)
}

fn check_top(field: &PolyVectorField, co: &TrigCoefficients, tol: &Tolerances) -> Result<(), CompactifyError> {
    if co.top_a().is_identically_zero(tol.coeff_zero, field_scale(field)) {
        Err(CompactifyError::DegenerateTopCoefficient(co.side))
    } else {
        Ok(())
    }
}

/// Zeros of `A_{k,m}` strictly inside the side's half, via `u = cot(theta)`.
fn open_half_zeros(co: &TrigCoefficients, tol: &Tolerances) -> Vec<(f64, usize)> {
    let u = co.top_a().polynomial().dehomogenize_y();
    if u.degree() == 0 {
        return Vec::new();
    }
    let b = u.cauchy_bound();
    let offset = match co.side {
        Side::X => 0.0,
        Side::Y => PI,
    };
    let mut out: Vec<(f64, usize)> = u
        .real_roots((-b, b), tol.root * 1e-2, tol.coeff_zero)
        .unwrap_or_default()
        .into_iter()
        .map(|(r, mult)| (1.0f64.atan2(r) + offset, mult))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

pub fn infinity_singularities(z: &PiecewiseField, tol: &Tolerances) -> Result<Vec<InfinitySingularity>, CompactifyError> {
    if z.degree() == 0 {
        return Err(CompactifyError::ConstantField);
    }
    let tf = compactified_field(z);
    check_top(&z.x, &tf.x, tol)?;
    check_top(&z.y, &tf.y, tol)?;

    let mut out = Vec::new();
    for co in [&tf.x, &tf.y] {
        for (theta, mult) in open_half_zeros(co, tol) {
            let a = co.top_a().eval(theta);
            let a_prime = co.top_a().derivative(theta);
            let r = co.top_r().eval(theta);
            let v = a_prime * r;
            let hyperbolic = if v.abs() > tol.sign {
                Certainty::Yes
            } else if mult >= 2 || r.abs() <= tol.sign {
                Certainty::No
            } else {
                Certainty::Borderline
            };
            let kind = match co.side {
                Side::X => InfinityKind::X,
                Side::Y => InfinityKind::Y,
            };
            out.push(InfinitySingularity { theta, kind, hyperbolic, a, a_prime, r, multiplicity: mult, filippov_value: None });
        }
    }

    let fp = filippov_point_value(z);
    for theta in [0.0, PI] {
        let a1 = tf.x.top_a().eval(theta);
        let a2 = tf.y.top_a().eval(theta);
        // D is {theta = 0} with X on the increasing side, {theta = pi} with X on the decreasing side
        let (xf, yf) = if theta == 0.0 { (a1, a2) } else { (-a1, -a2) };
        let class = classify_values(xf, yf, tol.sign);
        let singular = class != DClass::Sewing;
        let hyperbolic = match class {
            DClass::Sewing => Certainty::Yes,
            DClass::Sliding | DClass::Escaping if fp.abs() > tol.sign => Certainty::Yes,
            _ => Certainty::No,
        };
        out.push(InfinitySingularity {
            theta,
            kind: InfinityKind::FilippovPoint { class, singular },
            hyperbolic,
            a: a1,
            a_prime: tf.x.top_a().derivative(theta),
            r: tf.x.top_r().eval(theta),
            multiplicity: 0,
            filippov_value: Some(fp),
        });
    }
    out.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum S1Status {
    Elementary,
    NonElementary,
    /// The circle at infinity carries singular points; no integral is computed.
    HasSingularitiesOnS1,
}

/// Stability data of the circle at infinity as a closed poly-trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct S1Elementarity {
    pub status: S1Status,
    /// `int_0^pi (R_{1,m}/A_{1,m} + R_{2,m}/A_{2,m}) dtheta`.
    pub mu: Option<f64>,
    /// Same quantity as `int_0^pi R_1/A_1 + int_pi^2pi R_2/A_2`.
    pub mu_two_leg: Option<f64>,
    /// -1 for counterclockwise orientation, +1 otherwise.
    pub sigma: Option<i8>,
    /// Poincare map derivative `exp(sigma mu)`.
    pub derivative: Option<f64>,
}

impl S1Elementarity {
    fn singular() -> Self {
        Self { status: S1Status::HasSingularitiesOnS1, mu: None, mu_two_leg: None, sigma: None, derivative: None }
    }

    pub fn is_attractor(&self) -> Option<bool> {
        match (self.sigma, self.mu) {
            (Some(s), Some(mu)) if self.status == S1Status::Elementary => Some((s as f64) * mu < 0.0),
            _ => None,
        }
    }
}

pub fn s1_elementarity(z: &PiecewiseField, tol: &Tolerances) -> Result<S1Elementarity, CompactifyError> {
    let m = z.degree();
    if m % 2 == 0 {
        return Err(CompactifyError::EvenDegree(m));
    }
    let tf = compactified_field(z);
    check_top(&z.x, &tf.x, tol)?;
    check_top(&z.y, &tf.y, tol)?;
    let a1 = tf.x.top_a();
    let a2 = tf.y.top_a();
    let r1 = tf.x.top_r();
    let r2 = tf.y.top_r();
    let ends = [a1.eval(0.0), a1.eval(PI), a2.eval(PI), a2.eval(2.0 * PI)];
    if ends.iter().any(|v| v.abs() <= tol.sign)
        || !open_half_zeros(&tf.x, tol).is_empty()
        || !open_half_zeros(&tf.y, tol).is_empty()
        || ends[0] * ends[3] < 0.0
    {
        return Ok(S1Elementarity::singular());
    }
    let mu = quadrature::integrate(|t| r1.eval(t) / a1.eval(t) + r2.eval(t) / a2.eval(t), 0.0, PI, tol.quad)?;
    let leg1 = quadrature::integrate(|t| r1.eval(t) / a1.eval(t), 0.0, PI, 0.5 * tol.quad)?;
    let leg2 = quadrature::integrate(|t| r2.eval(t) / a2.eval(t), PI, 2.0 * PI, 0.5 * tol.quad)?;
    let sigma: i8 = if ends[0] > 0.0 { -1 } else { 1 };
    let status = if mu.abs() > tol.mu { S1Status::Elementary } else { S1Status::NonElementary };
    Ok(S1Elementarity {
        status,
        mu: Some(mu),
        mu_two_leg: Some(leg1 + leg2),
        sigma: Some(sigma),
        derivative: Some((sigma as f64 * mu).exp()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bp(terms: &[(f64, u32, u32)]) -> BivariatePolynomial {
        BivariatePolynomial::from_terms(terms.iter().copied())
    }

    fn field(p: &[(f64, u32, u32)], q: &[(f64, u32, u32)]) -> PolyVectorField {
        PolyVectorField::new(bp(p), bp(q))
    }

    fn rotation() -> PolyVectorField {
        field(&[(-1.0, 0, 1)], &[(1.0, 1, 0)])
    }

    fn radial() -> PolyVectorField {
        field(&[(1.0, 1, 0)], &[(1.0, 0, 1)])
    }

    fn spiral_out() -> PolyVectorField {
        field(&[(1.0, 1, 0), (-1.0, 0, 1)], &[(1.0, 1, 0), (1.0, 0, 1)])
    }

    #[test]
    fn coefficient_examples() {
        let thetas = [0.0, 0.3, 1.7, 4.0, 5.9];
        let co = trig_coefficients(&rotation(), Side::X);
        for t in thetas {
            assert!((co.a[1].eval(t) - 1.0).abs() < 1e-15);
            assert!(co.r[1].eval(t).abs() < 1e-15);
        }
        let co = trig_coefficients(&radial(), Side::X);
        for t in thetas {
            assert!(co.a[1].eval(t).abs() < 1e-15);
            assert!((co.r[1].eval(t) - 1.0).abs() < 1e-15);
        }
        let co = trig_coefficients(&field(&[(1.0, 2, 0)], &[]), Side::X);
        for t in thetas {
            let (s, c) = f64::sin_cos(t);
            assert!((co.a[2].eval(t) + c * c * s).abs() < 1e-15);
            assert!((co.r[2].eval(t) - c * c * c).abs() < 1e-15);
            let d = 2.0 * c * s * s - c * c * c;
            assert!((co.a[2].derivative(t) - d).abs() < 1e-14);
        }
    }

    #[test]
    fn compactified_examples() {
        let z = PiecewiseField::new(radial(), radial());
        let v = compactified_field(&z).eval(PI / 4.0, 0.5);
        assert!(v[0].abs() < 1e-15 && (v[1] + 0.5).abs() < 1e-15);
        let z = PiecewiseField::new(rotation(), rotation());
        let v = compactified_field(&z).eval(PI / 2.0, 1.0);
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1].abs() < 1e-15);
        for t in [0.1, 2.0, 4.0] {
            assert_eq!(compactified_field(&z).eval(t, 0.0)[1], 0.0);
        }
    }

    #[test]
    fn wrong_half() {
        let tf = compactified_field(&PiecewiseField::new(rotation(), rotation()));
        assert!(matches!(tf.eval_piece(Side::X, 4.0, 0.1), Err(CompactifyError::WrongHalf { .. })));
        assert!(matches!(tf.eval_piece(Side::Y, 1.0, 0.1), Err(CompactifyError::WrongHalf { .. })));
        assert!(tf.eval_piece(Side::Y, 4.0, 0.1).is_ok());
    }

    #[test]
    fn pullback_examples() {
        let t = Tolerances::default();
        let z = PiecewiseField::new(radial(), radial());
        assert!(pullback_check(&z, PI / 3.0, 0.2, &t).unwrap() < 1e-12);
        let z = PiecewiseField::new(rotation(), rotation());
        assert!(pullback_check(&z, 2.0 * PI / 3.0, 1.0, &t).unwrap() < 1e-12);
        assert!(pullback_check(&z, 1.0, 0.0, &t).is_err());
    }

    #[test]
    fn infinity_rotation_has_only_filippov_points() {
        let z = PiecewiseField::new(rotation(), rotation());
        let s = infinity_singularities(&z, &Tolerances::default()).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|e| matches!(e.kind, InfinityKind::FilippovPoint { class: DClass::Sewing, singular: false })));
        assert_eq!((s[0].theta, s[1].theta), (0.0, PI));
    }

    #[test]
    fn infinity_radial_is_degenerate() {
        let z = PiecewiseField::new(radial(), radial());
        assert_eq!(
            infinity_singularities(&z, &Tolerances::default()),
            Err(CompactifyError::DegenerateTopCoefficient(Side::X))
        );
    }

    #[test]
    fn infinity_quadratic_double_zero() {
        let z = PiecewiseField::new(field(&[(1.0, 2, 0)], &[]), field(&[(1.0, 2, 0)], &[(-1.0, 0, 2)]));
        let s = infinity_singularities(&z, &Tolerances::default()).unwrap();
        let xs: Vec<_> = s.iter().filter(|e| e.kind == InfinityKind::X).collect();
        assert_eq!(xs.len(), 1);
        assert!((xs[0].theta - PI / 2.0).abs() < 1e-9);
        assert!(xs[0].a_prime.abs() < 1e-9);
        assert_eq!(xs[0].hyperbolic, Certainty::No);
    }

    #[test]
    fn filippov_point_examples() {
        let z = PiecewiseField::new(spiral_out(), rotation());
        assert_eq!(filippov_point_value(&z), 1.0);
        let z = PiecewiseField::new(field(&[(1.0, 1, 0)], &[]), field(&[], &[(1.0, 1, 0)]));
        assert_eq!(filippov_point_value(&z), 1.0);
        let z = PiecewiseField::new(spiral_out(), spiral_out());
        assert_eq!(filippov_point_value(&z), 0.0);
    }

    #[test]
    fn s1_examples() {
        let t = Tolerances::default();
        let e = s1_elementarity(&PiecewiseField::new(rotation(), rotation()), &t).unwrap();
        assert_eq!(e.status, S1Status::NonElementary);
        assert_eq!(e.mu, Some(0.0));

        let e = s1_elementarity(&PiecewiseField::new(spiral_out(), rotation()), &t).unwrap();
        assert_eq!(e.status, S1Status::Elementary);
        assert!((e.mu.unwrap() - PI).abs() < 1e-10);
        assert_eq!(e.sigma, Some(-1));
        assert!((e.derivative.unwrap() - (-PI).exp()).abs() < 1e-12);
        assert_eq!(e.is_attractor(), Some(true));

        let spiral_in = field(&[(-1.0, 1, 0), (-1.0, 0, 1)], &[(1.0, 1, 0), (-1.0, 0, 1)]);
        let e = s1_elementarity(&PiecewiseField::new(spiral_out(), spiral_in), &t).unwrap();
        assert_eq!(e.status, S1Status::NonElementary);
        assert!(e.mu.unwrap().abs() < 1e-12);
    }

    #[test]
    fn s1_even_degree_and_singular() {
        let t = Tolerances::default();
        let q = field(&[(1.0, 2, 0)], &[(1.0, 0, 2)]);
        assert_eq!(
            s1_elementarity(&PiecewiseField::new(q.clone(), q), &t),
            Err(CompactifyError::EvenDegree(2))
        );
        // clockwise X against counterclockwise Y: (+-1,0,0) become Filippov singular points
        let cw = field(&[(1.0, 0, 1)], &[(-1.0, 1, 0)]);
        let e = s1_elementarity(&PiecewiseField::new(cw, rotation()), &t).unwrap();
        assert_eq!(e.status, S1Status::HasSingularitiesOnS1);
    }
}

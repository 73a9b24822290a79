//! The discontinuity line `D = {y = 0}`.
//!
//! With `f(x, y) = y` the Lie derivative `Xf` of `X = (P, Q)` is simply `Q`,
//! so every classification on `D` reduces to signs of `Q1(x, 0)`, `Q2(x, 0)`
//! and `det[X, Y](x, 0)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{Axis, BivariatePolynomial, PiecewiseField, PolyVectorField, Side};
use crate::roots::{RootError, UniPoly};
use crate::tolerances::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DlineError {
    #[error("{0:?}f vanishes identically on the discontinuity line")]
    IdenticallyZeroOnD(Side),
    #[error("Filippov field undefined at x = {x}: point is {class:?}")]
    NotOnSlidingOrEscaping { x: f64, class: DClass },
    #[error("empty or inverted window [{0}, {1}]")]
    BadWindow(f64, f64),
}

fn lift(side: Side) -> impl Fn(RootError) -> DlineError {
    move |e| match e {
        RootError::IdenticallyZeroOnD => DlineError::IdenticallyZeroOnD(side),
        RootError::BadWindow(a, b) => DlineError::BadWindow(a, b),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DClass {
    Sewing,
    Sliding,
    Escaping,
    TangencyX,
    TangencyY,
    TangencyBoth,
}

impl DClass {
    pub fn is_sliding_or_escaping(self) -> bool {
        matches!(self, DClass::Sliding | DClass::Escaping)
    }

    pub fn is_tangency(self) -> bool {
        matches!(self, DClass::TangencyX | DClass::TangencyY | DClass::TangencyBoth)
    }
}

/// Class of a point of `D` together with the witnesses `Xf`, `Yf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DPointClass {
    pub tag: DClass,
    pub xf: f64,
    pub yf: f64,
}

/// What bounds an arc of `D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Endpoint {
    Window,
    /// Odd-multiplicity root of `Q1(x, 0)`.
    RootOfXf { multiplicity: usize },
    /// Odd-multiplicity root of `Q2(x, 0)`.
    RootOfYf { multiplicity: usize },
    RootOfBoth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DArc {
    pub start: f64,
    pub end: f64,
    pub class: DClass,
    pub start_event: Endpoint,
    pub end_event: Endpoint,
    /// Even-multiplicity tangencies inside the arc; they do not change the class.
    pub interior_tangencies: Vec<f64>,
}

impl DArc {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.start && x < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DSingularityKind {
    FzSaddle,
    FzNode,
    FoldX,
    FoldY,
    NonElementary,
}

/// The condition a non-elementary point failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Failure {
    /// `d/dx det[X, Y]` within tolerance of zero.
    DetDerivativeVanishes,
    /// `Xf = X^2 f = 0`: a cusp or worse of `X`.
    CuspX,
    CuspY,
    /// `Xf = Yf = 0`.
    DoubleTangency,
    /// `det[X, Y]` vanishes on all of `D`.
    DetIdenticallyZero,
    /// An `F_Z` zero at the boundary of a sliding or escaping arc.
    AtArcEndpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Certificates {
    pub xf: f64,
    pub yf: f64,
    pub det: Option<f64>,
    pub det_derivative: Option<f64>,
    pub x2f: Option<f64>,
    pub y2f: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DSingularity {
    pub x: f64,
    pub kind: DSingularityKind,
    pub class: DClass,
    pub certificates: Certificates,
    pub failure: Option<Failure>,
}

impl DSingularity {
    pub fn is_elementary(&self) -> bool {
        self.kind != DSingularityKind::NonElementary
    }
}

/// `Xf = <grad f, X> = Q`.
pub fn lie_derivative(x: &PolyVectorField) -> BivariatePolynomial {
    x.q.clone()
}

/// `X(Xf) = P dQ/dx + Q dQ/dy`.
pub fn second_lie_derivative(x: &PolyVectorField) -> BivariatePolynomial {
    &(&x.p * &x.q.partial(Axis::X)) + &(&x.q * &x.q.partial(Axis::Y))
}

pub fn classify_point(z: &PiecewiseField, x: f64, tol: &Tolerances) -> DPointClass {
    let xf = z.x.q.eval(x, 0.0);
    let yf = z.y.q.eval(x, 0.0);
    DPointClass { tag: classify_values(xf, yf, tol.sign), xf, yf }
}

pub(crate) fn classify_values(xf: f64, yf: f64, eps: f64) -> DClass {
    let zx = xf.abs() <= eps;
    let zy = yf.abs() <= eps;
    match (zx, zy) {
        (true, true) => DClass::TangencyBoth,
        (true, false) => DClass::TangencyX,
        (false, true) => DClass::TangencyY,
        _ if xf * yf > 0.0 => DClass::Sewing,
        _ if xf > 0.0 => DClass::Escaping,
        _ => DClass::Sliding,
    }
}

/// Window `[-R, R]` containing every real root of `Q1(x,0)`, `Q2(x,0)` and
/// `det[X,Y](x,0)`, from Cauchy bounds.
pub fn default_window(z: &PiecewiseField) -> (f64, f64) {
    let r = [z.x.q.restrict_to_d(), z.y.q.restrict_to_d(), z.det().restrict_to_d()]
        .iter()
        .filter(|p| !p.is_zero())
        .map(UniPoly::cauchy_bound)
        .fold(1.0_f64, f64::max);
    (-r, r)
}

fn roots_of(p: &BivariatePolynomial, window: (f64, f64), tol: &Tolerances) -> Result<Vec<(f64, usize)>, RootError> {
    p.restrict_to_d().real_roots(window, tol.root, tol.coeff_zero)
}

/// Maximal arcs of `D` in `window` between consecutive odd-multiplicity roots
/// of `Q1(x,0)` or `Q2(x,0)`, each classified at its midpoint.
pub fn segment_d(z: &PiecewiseField, window: (f64, f64), tol: &Tolerances) -> Result<Vec<DArc>, DlineError> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(DlineError::BadWindow(lo, hi));
    }
    let rx = roots_of(&z.x.q, window, tol).map_err(lift(Side::X))?;
    let ry = roots_of(&z.y.q, window, tol).map_err(lift(Side::Y))?;

    let mut splits: Vec<(f64, Endpoint)> = Vec::new();
    let mut even: Vec<f64> = Vec::new();
    let tagged = rx
        .iter()
        .map(|&(r, m)| (r, m, Side::X))
        .chain(ry.iter().map(|&(r, m)| (r, m, Side::Y)));
    for (r, m, side) in tagged {
        if r <= lo || r >= hi {
            continue;
        }
        if m % 2 == 0 {
            even.push(r);
            continue;
        }
        let ev = match side {
            Side::X => Endpoint::RootOfXf { multiplicity: m },
            Side::Y => Endpoint::RootOfYf { multiplicity: m },
        };
        match splits.iter_mut().find(|(s, _)| (s - r).abs() <= 10.0 * tol.root) {
            Some(existing) => existing.1 = Endpoint::RootOfBoth,
            None => splits.push((r, ev)),
        }
    }
    splits.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut bounds = vec![(lo, Endpoint::Window)];
    bounds.extend(splits);
    bounds.push((hi, Endpoint::Window));
    Ok(bounds
        .windows(2)
        .map(|w| {
            let (a, ea) = w[0];
            let (b, eb) = w[1];
            let mid = 0.5 * (a + b);
            DArc {
                start: a,
                end: b,
                class: classify_point(z, mid, tol).tag,
                start_event: ea,
                end_event: eb,
                interior_tangencies: even.iter().copied().filter(|&e| e > a && e < b).collect(),
            }
        })
        .collect())
}

/// Tangent element of the cone spanned by `X(p)` and `Y(p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilippovVector {
    /// Second component is exactly zero.
    pub value: [f64; 2],
    /// Weight of `X`; lies in `(0, 1)`.
    pub lambda: f64,
}

/// `F_Z(x) = lambda X + (1 - lambda) Y` with `lambda = Yf / (Yf - Xf)`.
pub fn filippov_field(z: &PiecewiseField, x: f64, tol: &Tolerances) -> Result<FilippovVector, DlineError> {
    let c = classify_point(z, x, tol);
    if !c.tag.is_sliding_or_escaping() {
        return Err(DlineError::NotOnSlidingOrEscaping { x, class: c.tag });
    }
    let lambda = c.yf / (c.yf - c.xf);
    let p1 = z.x.p.eval(x, 0.0);
    let p2 = z.y.p.eval(x, 0.0);
    Ok(FilippovVector { value: [lambda * p1 + (1.0 - lambda) * p2, 0.0], lambda })
}

/// First component of `F_Z` on `D` written as `(Yf P1 - Xf P2) / (Yf - Xf)`,
/// without any class check.
pub fn sliding_velocity(z: &PiecewiseField, x: f64) -> f64 {
    let xf = z.x.q.eval(x, 0.0);
    let yf = z.y.q.eval(x, 0.0);
    (yf * z.x.p.eval(x, 0.0) - xf * z.y.p.eval(x, 0.0)) / (yf - xf)
}

/// Zeros of `F_Z` on sliding and escaping arcs, typed saddle or node.
pub fn fz_singularities(z: &PiecewiseField, window: (f64, f64), tol: &Tolerances) -> Result<Vec<DSingularity>, DlineError> {
    let det = z.det();
    let det_d = det.restrict_to_d();
    let ddet_d = det_d.derivative();
    if det_d.trimmed(tol.coeff_zero).is_zero() {
        // every sliding/escaping point is singular
        let arcs = segment_d(z, window, tol)?;
        return Ok(arcs
            .iter()
            .filter(|a| a.class.is_sliding_or_escaping())
            .map(|a| {
                let x = a.midpoint();
                let c = classify_point(z, x, tol);
                DSingularity {
                    x,
                    kind: DSingularityKind::NonElementary,
                    class: c.tag,
                    certificates: Certificates { xf: c.xf, yf: c.yf, det: Some(0.0), det_derivative: Some(0.0), ..Default::default() },
                    failure: Some(Failure::DetIdenticallyZero),
                }
            })
            .collect());
    }
    let roots = det_d
        .real_roots(window, tol.root, tol.coeff_zero)
        .map_err(|e| match e {
            RootError::BadWindow(a, b) => DlineError::BadWindow(a, b),
            RootError::IdenticallyZeroOnD => unreachable!("checked above"),
        })?;
    let mut out = Vec::new();
    for (x, _) in roots {
        let c = classify_point(z, x, tol);
        let d = ddet_d.eval(x);
        let cert = Certificates { xf: c.xf, yf: c.yf, det: Some(det_d.eval(x)), det_derivative: Some(d), ..Default::default() };
        let (kind, failure) = match c.tag {
            DClass::Sewing => continue,
            DClass::TangencyX | DClass::TangencyY | DClass::TangencyBoth => {
                (DSingularityKind::NonElementary, Some(Failure::AtArcEndpoint))
            }
            _ if d.abs() <= tol.sign => (DSingularityKind::NonElementary, Some(Failure::DetDerivativeVanishes)),
            DClass::Sliding if d > 0.0 => (DSingularityKind::FzSaddle, None),
            DClass::Sliding => (DSingularityKind::FzNode, None),
            DClass::Escaping if d < 0.0 => (DSingularityKind::FzSaddle, None),
            DClass::Escaping => (DSingularityKind::FzNode, None),
        };
        out.push(DSingularity { x, kind, class: c.tag, certificates: cert, failure });
    }
    Ok(out)
}

/// Tangency points of exactly one field, typed fold or cusp.
pub fn fold_points(z: &PiecewiseField, window: (f64, f64), tol: &Tolerances) -> Result<Vec<DSingularity>, DlineError> {
    let mut out = Vec::new();
    for side in [Side::X, Side::Y] {
        let field = z.side(side);
        let roots = roots_of(&field.q, window, tol).map_err(lift(side))?;
        let second = second_lie_derivative(field);
        for (x, _) in roots {
            let c = classify_point(z, x, tol);
            if c.tag == DClass::TangencyBoth {
                continue;
            }
            let s = second.eval(x, 0.0);
            let mut cert = Certificates { xf: c.xf, yf: c.yf, ..Default::default() };
            let (kind, failure) = match side {
                Side::X => {
                    cert.x2f = Some(s);
                    if s.abs() > tol.sign {
                        (DSingularityKind::FoldX, None)
                    } else {
                        (DSingularityKind::NonElementary, Some(Failure::CuspX))
                    }
                }
                Side::Y => {
                    cert.y2f = Some(s);
                    if s.abs() > tol.sign {
                        (DSingularityKind::FoldY, None)
                    } else {
                        (DSingularityKind::NonElementary, Some(Failure::CuspY))
                    }
                }
            };
            out.push(DSingularity { x, kind, class: c.tag, certificates: cert, failure });
        }
    }
    out.sort_by(|a, b| a.x.total_cmp(&b.x));
    Ok(out)
}

/// Points where both fields are tangent to `D`; never elementary.
pub fn double_tangencies(z: &PiecewiseField, window: (f64, f64), tol: &Tolerances) -> Result<Vec<DSingularity>, DlineError> {
    let roots = roots_of(&z.x.q, window, tol).map_err(lift(Side::X))?;
    let sx = second_lie_derivative(&z.x);
    let sy = second_lie_derivative(&z.y);
    Ok(roots
        .into_iter()
        .filter_map(|(x, _)| {
            let c = classify_point(z, x, tol);
            (c.tag == DClass::TangencyBoth).then(|| DSingularity {
                x,
                kind: DSingularityKind::NonElementary,
                class: c.tag,
                certificates: Certificates {
                    xf: c.xf,
                    yf: c.yf,
                    x2f: Some(sx.eval(x, 0.0)),
                    y2f: Some(sy.eval(x, 0.0)),
                    ..Default::default()
                },
                failure: Some(Failure::DoubleTangency),
            })
        })
        .collect())
}

/// Everything on `D` in one pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DCensus {
    pub window: (f64, f64),
    pub arcs: Vec<DArc>,
    /// All `D`-singularities sorted by position.
    pub singularities: Vec<DSingularity>,
}

impl DCensus {
    pub fn non_elementary(&self) -> impl Iterator<Item = &DSingularity> {
        self.singularities.iter().filter(|s| !s.is_elementary())
    }
}

pub fn census(z: &PiecewiseField, window: (f64, f64), tol: &Tolerances) -> Result<DCensus, DlineError> {
    let arcs = segment_d(z, window, tol)?;
    let mut tangent = fold_points(z, window, tol)?;
    tangent.extend(double_tangencies(z, window, tol)?);
    // an F_Z zero sitting on a tangency point is already reported there
    let mut singularities: Vec<DSingularity> = fz_singularities(z, window, tol)?
        .into_iter()
        .filter(|s| {
            s.failure != Some(Failure::AtArcEndpoint)
                || !tangent.iter().any(|t| (t.x - s.x).abs() <= 10.0 * tol.root)
        })
        .collect();
    singularities.extend(tangent);
    singularities.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.kind.cmp(&b.kind)));
    Ok(DCensus { window, arcs, singularities })
}

//! The regularized family `Z_eps = Y + phi(y / eps) (X - Y)`.
//!
//! `Z_eps` agrees with `X` on `y >= eps` and with `Y` on `y <= -eps`; inside
//! the band it is a convex combination of the two sides. The module locates
//! the singular points that appear inside the band, tracks them along a
//! sequence of `eps`, and searches for hyperbolic cycles of `Z_eps`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dline::{census, DSingularityKind};
use crate::flow::{det2, FlowOptions, Section};
use crate::linalg::{self, Eigen2, Mat2, PointType};
use crate::ode::{solve, Crossing, Event, OdeError, OdeOptions, Stop};
use crate::poly::{BivariatePolynomial, PiecewiseField};
use crate::quadrature::{composite_gk15, gk15};
use crate::tolerances::{Certainty, Tolerances};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegularizeError {
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("no return to the section: {0}")]
    NoReturn(&'static str),
    #[error("section not transversal to the flow (determinant {det:e})")]
    NotTransversal { det: f64 },
    #[error("integrator failure: {0}")]
    Integrator(#[from] OdeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransitionFamily {
    /// Normalized integral of `(1 - s^2)^n`; of class `C^n`.
    SmoothstepN(u32),
    /// Normalized integral of `exp(-1 / (1 - s^2))`; of class `C^infinity`.
    AnalyticBump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothness {
    C(u32),
    Infinity,
}

const BUMP_PANELS: usize = 128;

/// Monotone `phi` with `phi = 0` on `t <= -1`, `phi = 1` on `t >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionFunction {
    pub family: TransitionFamily,
    /// Smoothstep: ascending coefficients of `phi` on `[-1, 1]`.
    /// Bump: cumulative integrals at the panel nodes of `[-1, 0]`.
    table: Vec<f64>,
    norm: f64,
}

fn bump(s: f64) -> f64 {
    let d = 1.0 - s * s;
    if d <= 0.0 {
        0.0
    } else {
        (-1.0 / d).exp()
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn make_transition(family: TransitionFamily) -> Result<TransitionFunction, RegularizeError> {
    match family {
        TransitionFamily::SmoothstepN(n) => {
            if !(1..=30).contains(&n) {
                return Err(RegularizeError::BadParameter(format!("smoothstep degree {n} outside 1..=30")));
            }
            // integral from -1 of sum_k C(n,k) (-1)^k s^(2k)
            let mut c = vec![0.0; 2 * n as usize + 2];
            for k in 0..=n {
                let a = binomial(n, k) * if k % 2 == 0 { 1.0 } else { -1.0 } / (2 * k + 1) as f64;
                c[2 * k as usize + 1] += a;
                c[0] += a;
            }
            let norm: f64 = c.iter().sum();
            Ok(TransitionFunction { family, table: c, norm })
        }
        TransitionFamily::AnalyticBump => {
            let h = 1.0 / BUMP_PANELS as f64;
            let mut table = vec![0.0];
            for k in 0..BUMP_PANELS {
                let a = -1.0 + k as f64 * h;
                let last = *table.last().expect("non-empty");
                table.push(last + gk15(&bump, a, a + h).0);
            }
            let half = *table.last().expect("non-empty");
            Ok(TransitionFunction { family, table, norm: 2.0 * half })
        }
    }
}

impl TransitionFunction {
    pub fn smoothness(&self) -> Smoothness {
        match self.family {
            TransitionFamily::SmoothstepN(n) => Smoothness::C(n),
            TransitionFamily::AnalyticBump => Smoothness::Infinity,
        }
    }

    /// Integral of the unnormalized density over `[-1, 1]`.
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    pub fn phi(&self, t: f64) -> f64 {
        if t <= -1.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        match self.family {
            TransitionFamily::SmoothstepN(_) => {
                let v = self.table.iter().rev().fold(0.0, |acc, c| acc * t + c) / self.norm;
                v.clamp(0.0, 1.0)
            }
            TransitionFamily::AnalyticBump => {
                if t > 0.0 {
                    return 1.0 - self.phi(-t);
                }
                let h = 1.0 / BUMP_PANELS as f64;
                let k = (((t + 1.0) / h).floor() as usize).min(BUMP_PANELS - 1);
                let a = -1.0 + k as f64 * h;
                (self.table[k] + gk15(&bump, a, t).0) / self.norm
            }
        }
    }

    pub fn dphi(&self, t: f64) -> f64 {
        if t <= -1.0 || t >= 1.0 {
            return 0.0;
        }
        match self.family {
            TransitionFamily::SmoothstepN(n) => (1.0 - t * t).powi(n as i32) / self.norm,
            TransitionFamily::AnalyticBump => bump(t) / self.norm,
        }
    }
}

/// `Z_eps` for one `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedField {
    pub z: PiecewiseField,
    pub phi: TransitionFunction,
    pub epsilon: f64,
    divs: [BivariatePolynomial; 2],
}

impl RegularizedField {
    pub fn new(z: PiecewiseField, phi: TransitionFunction, epsilon: f64) -> Result<Self, RegularizeError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(RegularizeError::BadParameter(format!("epsilon = {epsilon} must be positive")));
        }
        let divs = [z.x.divergence(), z.y.divergence()];
        Ok(Self { z, phi, epsilon, divs })
    }

    pub fn eval(&self, q: [f64; 2]) -> [f64; 2] {
        if q[1] >= self.epsilon {
            return self.z.x.eval(q);
        }
        if q[1] <= -self.epsilon {
            return self.z.y.eval(q);
        }
        let w = self.phi.phi(q[1] / self.epsilon);
        let a = self.z.x.eval(q);
        let b = self.z.y.eval(q);
        [b[0] + w * (a[0] - b[0]), b[1] + w * (a[1] - b[1])]
    }

    pub fn divergence(&self, q: [f64; 2]) -> f64 {
        let dx = self.divs[0].eval(q[0], q[1]);
        let dy = self.divs[1].eval(q[0], q[1]);
        if q[1] >= self.epsilon {
            return dx;
        }
        if q[1] <= -self.epsilon {
            return dy;
        }
        let t = q[1] / self.epsilon;
        let w = self.phi.phi(t);
        let dq = self.z.x.q.eval(q[0], q[1]) - self.z.y.q.eval(q[0], q[1]);
        dy + w * (dx - dy) + self.phi.dphi(t) / self.epsilon * dq
    }

    pub fn jacobian(&self, q: [f64; 2]) -> Mat2 {
        let jx = self.z.x.jacobian_at(q);
        if q[1] >= self.epsilon {
            return jx;
        }
        let jy = self.z.y.jacobian_at(q);
        if q[1] <= -self.epsilon {
            return jy;
        }
        let t = q[1] / self.epsilon;
        let w = self.phi.phi(t);
        let dw = self.phi.dphi(t) / self.epsilon;
        let a = self.z.x.eval(q);
        let b = self.z.y.eval(q);
        let mut j = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                j[r][c] = jy[r][c] + w * (jx[r][c] - jy[r][c]);
            }
            j[r][1] += (a[r] - b[r]) * dw;
        }
        j
    }

    /// Central-difference Jacobian with step `1e-6 max(1, eps)`.
    pub fn jacobian_fd(&self, q: [f64; 2]) -> Mat2 {
        let h = 1e-6 * self.epsilon.max(1.0);
        let mut j = [[0.0; 2]; 2];
        for c in 0..2 {
            let mut qp = q;
            let mut qm = q;
            qp[c] += h;
            qm[c] -= h;
            let (fp, fm) = (self.eval(qp), self.eval(qm));
            for r in 0..2 {
                j[r][c] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        j
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmergentSingularity {
    pub position: [f64; 2],
    pub jacobian: Mat2,
    pub kind: PointType,
    pub eigenvalues: Eigen2,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmergentScan {
    pub singularities: Vec<EmergentSingularity>,
    /// Centers of bracketing cells whose Newton iteration did not converge.
    pub divergences: Vec<[f64; 2]>,
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Damped Newton: halve the step while the residual grows.
pub(crate) fn damped_newton(
    f: &dyn Fn([f64; 2]) -> [f64; 2],
    jac: &dyn Fn([f64; 2]) -> Mat2,
    start: [f64; 2],
    tol: f64,
) -> Option<([f64; 2], f64)> {
    let mut q = start;
    let mut fq = f(q);
    let mut r = norm2(fq);
    for _ in 0..50 {
        if r <= tol {
            return Some((q, r));
        }
        let step = linalg::solve(&jac(q), [-fq[0], -fq[1]])?;
        let mut lam = 1.0;
        loop {
            let qn = [q[0] + lam * step[0], q[1] + lam * step[1]];
            let fnew = f(qn);
            let rn = norm2(fnew);
            if rn < r {
                q = qn;
                fq = fnew;
                r = rn;
                break;
            }
            lam *= 0.5;
            if lam < 1e-12 {
                return (r <= tol).then_some((q, r));
            }
        }
    }
    (r <= tol).then_some((q, r))
}

/// Zeros of `Z_eps` in `x_window x [-eps, eps]` by sign-grid bracketing with
/// step `eps / 20` and damped Newton from each bracketing cell.
pub fn emergent_singularities(r: &RegularizedField, x_window: (f64, f64), tol: &Tolerances) -> Result<EmergentScan, RegularizeError> {
    let (x0, x1) = x_window;
    if !(x0 < x1) {
        return Err(RegularizeError::BadParameter(format!("empty window [{x0}, {x1}]")));
    }
    let eps = r.epsilon;
    let h = eps / 20.0;
    let nx = ((x1 - x0) / h).ceil() as usize;
    let ny = 40;
    let hx = (x1 - x0) / nx as f64;
    let grid: Vec<Vec<[f64; 2]>> =
        (0..=ny).map(|j| (0..=nx).map(|i| r.eval([x0 + i as f64 * hx, -eps + j as f64 * h])).collect()).collect();
    let f = |q: [f64; 2]| r.eval(q);
    let jac = |q: [f64; 2]| r.jacobian(q);
    let mut scan = EmergentScan { singularities: Vec::new(), divergences: Vec::new() };
    for j in 0..ny {
        for i in 0..nx {
            let corners = [grid[j][i], grid[j][i + 1], grid[j + 1][i], grid[j + 1][i + 1]];
            let brackets = (0..2).all(|c| {
                let lo = corners.iter().map(|v| v[c]).fold(f64::INFINITY, f64::min);
                let hi = corners.iter().map(|v| v[c]).fold(f64::NEG_INFINITY, f64::max);
                lo <= 0.0 && hi >= 0.0
            });
            if !brackets {
                continue;
            }
            let center = [x0 + (i as f64 + 0.5) * hx, -eps + (j as f64 + 0.5) * h];
            let Some((q, res)) = damped_newton(&f, &jac, center, tol.newton) else {
                scan.divergences.push(center);
                continue;
            };
            let inside = q[1].abs() < eps && q[0] >= x0 - hx && q[0] <= x1 + hx;
            if !inside || scan.singularities.iter().any(|s| norm2([s.position[0] - q[0], s.position[1] - q[1]]) <= 10.0 * tol.root) {
                continue;
            }
            let jacobian = r.jacobian_fd(q);
            let eigenvalues = linalg::eigen(&jacobian);
            scan.singularities.push(EmergentSingularity {
                position: q,
                jacobian,
                kind: eigenvalues.classify(tol.sign),
                eigenvalues,
                residual: res,
            });
        }
    }
    scan.singularities.sort_by(|a, b| a.position[0].total_cmp(&b.position[0]));
    Ok(scan)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub singularities: Vec<EmergentSingularity>,
    pub divergences: usize,
    /// Largest distance from a found singularity to the nearest `F_Z` zero.
    pub distance_to_fz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSweep {
    pub rows: Vec<SweepRow>,
    /// Abscissae of the hyperbolic `F_Z` singularities in the window.
    pub fz_targets: Vec<f64>,
    pub counts_stable: bool,
    pub types_stable: bool,
    /// `distance_to_fz` never grows along the sweep (to within 1e-10).
    pub distances_non_increasing: bool,
    /// Largest swept `eps` below which every row is empty.
    pub eps0: Option<f64>,
}

pub fn epsilon_sweep(
    z: &PiecewiseField,
    phi: &TransitionFunction,
    x_window: (f64, f64),
    eps_list: &[f64],
    tol: &Tolerances,
) -> Result<EpsilonSweep, RegularizeError> {
    if eps_list.is_empty() || eps_list.iter().any(|e| !(*e > 0.0)) || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(RegularizeError::BadParameter("eps_list must be positive and strictly descending".into()));
    }
    let fz_targets: Vec<f64> = census(z, x_window, tol)
        .map(|c| {
            c.singularities
                .iter()
                .filter(|s| matches!(s.kind, DSingularityKind::FzSaddle | DSingularityKind::FzNode))
                .map(|s| s.x)
                .collect()
        })
        .unwrap_or_default();
    let mut rows = Vec::new();
    for &eps in eps_list {
        let r = RegularizedField::new(z.clone(), phi.clone(), eps)?;
        let scan = emergent_singularities(&r, x_window, tol)?;
        let distance_to_fz = if fz_targets.is_empty() || scan.singularities.is_empty() {
            None
        } else {
            Some(
                scan.singularities
                    .iter()
                    .map(|s| fz_targets.iter().map(|x| norm2([s.position[0] - x, s.position[1]])).fold(f64::INFINITY, f64::min))
                    .fold(0.0, f64::max),
            )
        };
        rows.push(SweepRow { epsilon: eps, singularities: scan.singularities, divergences: scan.divergences.len(), distance_to_fz });
    }
    let types = |r: &SweepRow| {
        let mut t: Vec<String> = r.singularities.iter().map(|s| format!("{:?}", s.kind)).collect();
        t.sort();
        t
    };
    let counts_stable = rows.windows(2).all(|w| w[0].singularities.len() == w[1].singularities.len());
    let types_stable = rows.windows(2).all(|w| types(&w[0]) == types(&w[1]));
    let distances_non_increasing = rows.windows(2).all(|w| match (w[0].distance_to_fz, w[1].distance_to_fz) {
        (Some(a), Some(b)) => b <= a + 1e-10,
        _ => true,
    });
    let mut eps0 = None;
    for row in rows.iter().rev() {
        if !row.singularities.is_empty() {
            break;
        }
        eps0 = Some(row.epsilon);
    }
    Ok(EpsilonSweep { rows, fz_targets, counts_stable, types_stable, distances_non_increasing, eps0 })
}

/// One return of a smooth planar flow to `section`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothReturn {
    pub s1: f64,
    pub time: f64,
    /// `det(F(q0), d) / det(F(q1), d) * exp(int div)`.
    pub derivative: f64,
    pub transversality: f64,
    pub points: Vec<[f64; 2]>,
}

/// Return map of a smooth field on `section`, with its derivative from the
/// divergence integral.
pub fn smooth_return(
    f: &dyn Fn([f64; 2]) -> [f64; 2],
    div: &dyn Fn([f64; 2]) -> f64,
    section: &Section,
    s0: f64,
    opts: &FlowOptions,
    tol: &Tolerances,
) -> Result<SmoothReturn, RegularizeError> {
    let q0 = section.point(s0);
    let v0 = f(q0);
    let d = section.direction;
    let cross = det2(d, v0);
    if cross.abs() <= tol.sign {
        return Err(RegularizeError::NotTransversal { det: cross });
    }
    let o = cross.signum();
    let n = [-o * d[1], o * d[0]];
    let w = opts.window;
    let events = [
        Event::new(Crossing::Rising, move |_t, s: &[f64; 3]| (s[0] - q0[0]) * n[0] + (s[1] - q0[1]) * n[1]),
        Event::new(Crossing::Rising, move |_t, s: &[f64; 3]| s[0] - w.x.1),
        Event::new(Crossing::Falling, move |_t, s: &[f64; 3]| s[0] - w.x.0),
        Event::new(Crossing::Rising, move |_t, s: &[f64; 3]| s[1] - w.y.1),
        Event::new(Crossing::Falling, move |_t, s: &[f64; 3]| s[1] - w.y.0),
    ];
    let rhs = |_t: f64, s: &[f64; 3]| {
        let v = f([s[0], s[1]]);
        [v[0], v[1], div([s[0], s[1]])]
    };
    let ode = OdeOptions { rtol: tol.ode_rtol, atol: tol.ode_atol, max_steps: opts.max_steps, h_max: opts.h_max };
    let sol = solve(rhs, 0.0, [q0[0], q0[1], 0.0], opts.horizon, &events, None, &ode)?;
    match sol.stop {
        Stop::Event(0) => {}
        Stop::Event(_) => return Err(RegularizeError::NoReturn("left the window")),
        _ => return Err(RegularizeError::NoReturn("time budget exhausted")),
    }
    let e = sol.y_end();
    let q1 = [e[0], e[1]];
    let derivative = det2(v0, d) / det2(f(q1), d) * e[2].exp();
    Ok(SmoothReturn {
        s1: section.param(q1),
        time: sol.t_end(),
        derivative,
        transversality: cross.abs() / (norm2(v0) * norm2(d)),
        points: sol.y.iter().map(|s| [s[0], s[1]]).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizedCycle {
    pub s: f64,
    pub point: [f64; 2],
    pub period: f64,
    pub derivative: f64,
    /// Central difference with one Richardson step.
    pub derivative_fd: Option<f64>,
    pub hyperbolic: Certainty,
    pub points: Vec<[f64; 2]>,
}

/// Fixed point of the return map of `Z_eps` on `section`.
pub fn regularized_cycle_search(
    r: &RegularizedField,
    section: &Section,
    opts: &FlowOptions,
    tol: &Tolerances,
) -> Result<Option<RegularizedCycle>, RegularizeError> {
    let f = |q: [f64; 2]| r.eval(q);
    let div = |q: [f64; 2]| r.divergence(q);
    let ret = |s: f64| smooth_return(&f, &div, section, s, opts, tol);
    let g = |s: f64| ret(s).ok().map(|v| v.s1 - s);
    let (lo, hi) = section.range;
    let n = 16;
    let grid: Vec<(f64, Option<f64>)> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).map(|s| (s, g(s))).collect();
    if grid.iter().all(|(_, v)| v.is_none()) {
        return Err(RegularizeError::NoReturn("no sample point returns to the section"));
    }
    let mut fixed = None;
    for (i, &(s, gs)) in grid.iter().enumerate() {
        let Some(gs) = gs else { continue };
        if gs.abs() <= tol.close {
            fixed = Some(s);
            break;
        }
        if let Some(&(s2, Some(g2))) = grid.get(i + 1) {
            if gs * g2 < 0.0 {
                fixed = secant_bracket(&g, s, gs, s2, g2, tol.root);
                break;
            }
        }
    }
    let Some(s) = fixed else { return Ok(None) };
    let v = ret(s)?;
    let h = tol.fd_step * (hi - lo).abs();
    let central = |h: f64| Some((ret(s + h).ok()?.s1 - ret(s - h).ok()?.s1) / (2.0 * h));
    let derivative_fd = match (central(h), central(0.5 * h)) {
        (Some(a), Some(b)) => Some((4.0 * b - a) / 3.0),
        _ => None,
    };
    let scale = v.points.iter().map(|p| norm2(*p)).fold(f64::INFINITY, f64::min).max(f64::MIN_POSITIVE);
    let noise = tol.sign.max(100.0 * (tol.ode_rtol + tol.ode_atol / scale) / v.transversality);
    let gap = (v.derivative - 1.0).abs();
    let hyperbolic = if gap <= noise {
        Certainty::No
    } else if gap <= 10.0 * noise {
        Certainty::Borderline
    } else {
        Certainty::Yes
    };
    Ok(Some(RegularizedCycle {
        s,
        point: section.point(s),
        period: v.time,
        derivative: v.derivative,
        derivative_fd,
        hyperbolic,
        points: v.points,
    }))
}

fn secant_bracket(g: &dyn Fn(f64) -> Option<f64>, mut a: f64, mut ga: f64, mut b: f64, mut gb: f64, tol: f64) -> Option<f64> {
    for _ in 0..100 {
        if (b - a).abs() <= tol {
            break;
        }
        let mut s = (a * gb - b * ga) / (gb - ga);
        if !s.is_finite() || (s - a) * (s - b) >= 0.0 {
            s = 0.5 * (a + b);
        }
        let gs = g(s)?;
        if gs == 0.0 {
            return Some(s);
        }
        if (gs > 0.0) == (gb > 0.0) {
            b = s;
            gb = gs;
            ga *= 0.5;
        } else {
            a = s;
            ga = gs;
            gb *= 0.5;
        }
    }
    Some(if ga.abs() < gb.abs() { a } else { b })
}

/// Fixed-panel reference value of the bump normalization.
pub fn bump_normalization_reference(panels: usize) -> f64 {
    composite_gk15(bump, -1.0, 1.0, panels)
}

//! Membership report for the generic class `G_m`, interior hyperbolicity,
//! and the perturbations used to repair non-generic fields.


use serde::{Deserialize, Serialize};

use crate::compactify::{
    filippov_point_value, infinity_singularities, s1_elementarity, CompactifyError, InfinityKind, InfinitySingularity,
    S1Elementarity, S1Status,
};
use crate::dline::{self, Certificates, DCensus, DSingularityKind, Failure};
use crate::flow::{
    find_closed_polytrajectories, has_separatrices, probe_saddle_connections, BranchKind, ClosedSearch, Closure,
    EventKind, FlowOptions, SaddleOrigin, Window,
};
use crate::linalg::{eigen, Eigen2, PointType};
use crate::poly::{BivariatePolynomial, PiecewiseField, PolyVectorField, Side};
use crate::regularize::damped_newton;
use crate::tolerances::{Certainty, Tolerances};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StabilityError {
    #[error("radial perturbation with k = {k} needs degree {}, field has degree {m}", 2 * k + 1)]
    DegreeMismatch { m: u32, k: u32 },
    #[error("no repairable violation: {0}")]
    NotRepairable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    Satisfied,
    Violated,
    Undetermined,
}

impl Status {
    /// `Violated` dominates `Undetermined`, which dominates `Satisfied`.
    pub fn all(items: impl IntoIterator<Item = Status>) -> Status {
        items.into_iter().fold(Status::Satisfied, |acc, s| match (acc, s) {
            (Status::Violated, _) | (_, Status::Violated) => Status::Violated,
            (Status::Undetermined, _) | (_, Status::Undetermined) => Status::Undetermined,
            _ => Status::Satisfied,
        })
    }
}

/// Evidence attached to a status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "witness")]
pub enum Witness {
    InteriorSingularity { side: Side, point: [f64; 2], eigenvalues: Eigen2 },
    DSingularity { x: f64, failure: Option<Failure>, certificates: Certificates },
    InfinitySingularity { theta: f64, a_prime: f64, r: f64, multiplicity: usize },
    FilippovPoint { theta: f64, value: f64 },
    ClosedTrajectory { kind: Closure, point: [f64; 2], eta_prime: Option<f64> },
    S1 { mu: f64 },
    Connection { unstable_start: [f64; 2], stable_start: [f64; 2], distance: f64 },
    Degenerate { reason: String },
    Note { reason: String },
}

/// One sub-census of a condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub name: String,
    pub status: Status,
    pub witnesses: Vec<Witness>,
}

impl Part {
    fn new(name: &str, status: Status, witnesses: Vec<Witness>) -> Self {
        Self { name: name.to_string(), status, witnesses }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub status: Status,
    pub parts: Vec<Part>,
}

impl Condition {
    fn from_parts(parts: Vec<Part>) -> Self {
        Self { status: Status::all(parts.iter().map(|p| p.status)), parts }
    }

    pub fn part(&self, name: &str) -> Option<&Part> {
        self.parts.iter().find(|p| p.name == name)
    }

    pub fn witnesses(&self) -> impl Iterator<Item = &Witness> {
        self.parts.iter().flat_map(|p| p.witnesses.iter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteriorSingularity {
    pub point: [f64; 2],
    pub eigenvalues: Eigen2,
    pub kind: PointType,
    pub hyperbolic: Certainty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedSummary {
    pub kind: Closure,
    pub elementary: Certainty,
    pub eta_prime: Option<f64>,
    pub eta_prime_fd: Option<f64>,
    pub point: [f64; 2],
    pub period: f64,
    pub via_sliding: bool,
    pub reversed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub saddle: usize,
    pub kind: BranchKind,
    pub start: [f64; 2],
    pub end: Option<EventKind>,
}

/// Separatrix distance matrix with traces dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionSummary {
    pub saddles: Vec<SaddleOrigin>,
    pub probes: Vec<ProbeSummary>,
    pub unstable: Vec<usize>,
    pub stable: Vec<usize>,
    pub distances: Vec<Vec<f64>>,
    pub possible_connections: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmOptions {
    /// Search box; defaults to [`default_box`].
    pub window: Option<Window>,
    /// Report clean semi-decisions as `Satisfied` instead of `Undetermined`.
    pub optimistic: bool,
    pub horizon: f64,
    pub closed_samples: usize,
}

impl Default for GmOptions {
    fn default() -> Self {
        Self { window: None, optimistic: false, horizon: 100.0, closed_samples: 24 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub degree: u32,
    pub window: Window,
    pub overall: Status,
    pub gm1: Condition,
    pub gm2: Condition,
    pub gm3: Condition,
    pub interior_x: Vec<InteriorSingularity>,
    pub interior_y: Vec<InteriorSingularity>,
    pub d_census: Option<DCensus>,
    pub infinity: Option<Vec<InfinitySingularity>>,
    pub filippov_value: f64,
    pub s1: Option<S1Elementarity>,
    pub closed: Vec<ClosedSummary>,
    pub connections: ConnectionSummary,
}

/// Square box `[-R, R]^2` with `R` from Cauchy-type bounds on `D` and on the
/// coefficients, at least 2, plus a margin of 1 and capped at 100.
pub fn default_box(z: &PiecewiseField) -> Window {
    let coeff_bound = |f: &PolyVectorField| {
        [&f.p, &f.q]
            .iter()
            .map(|p| {
                let top = p.homogeneous_part(p.degree()).max_abs_coeff();
                if p.degree() == 0 || top == 0.0 {
                    1.0
                } else {
                    1.0 + p.terms().filter(|((i, j), _)| i + j < p.degree()).map(|(_, c)| c.abs() / top).fold(0.0, f64::max)
                }
            })
            .fold(1.0_f64, f64::max)
    };
    let r = dline::default_window(z).1.max(coeff_bound(&z.x)).max(coeff_bound(&z.y)).max(2.0);
    Window::square((r + 1.0).min(100.0))
}

fn hyperbolicity(e: &Eigen2, tol: &Tolerances) -> Certainty {
    if e.is_hyperbolic(tol.sign) {
        Certainty::Yes
    } else {
        Certainty::No
    }
}

/// Zeros of `field` in the open half-plane of `region` inside `window`, from
/// sign-change bracketing on a grid followed by damped Newton.
pub fn interior_singularities(field: &PolyVectorField, region: Side, window: Window, tol: &Tolerances) -> Vec<InteriorSingularity> {
    const N: usize = 120;
    let (ylo, yhi) = match region {
        Side::X => (window.y.0.max(0.0), window.y.1),
        Side::Y => (window.y.0, window.y.1.min(0.0)),
    };
    if !(ylo < yhi) || !(window.x.0 < window.x.1) {
        return Vec::new();
    }
    let in_region = |q: [f64; 2]| match region {
        Side::X => q[1] > tol.sign,
        Side::Y => q[1] < -tol.sign,
    };
    let hx = (window.x.1 - window.x.0) / N as f64;
    let hy = (yhi - ylo) / N as f64;
    let values: Vec<Vec<[f64; 2]>> =
        (0..=N).map(|i| (0..=N).map(|j| field.eval([window.x.0 + i as f64 * hx, ylo + j as f64 * hy])).collect()).collect();
    let changes = |k: usize, c: [[f64; 2]; 4]| {
        let lo = c.iter().map(|v| v[k]).fold(f64::INFINITY, f64::min);
        let hi = c.iter().map(|v| v[k]).fold(f64::NEG_INFINITY, f64::max);
        lo <= 0.0 && hi >= 0.0
    };
    let f = |q: [f64; 2]| field.eval(q);
    let jac = |q: [f64; 2]| field.jacobian_at(q);
    let mut out: Vec<InteriorSingularity> = Vec::new();
    for i in 0..N {
        for j in 0..N {
            let c = [values[i][j], values[i + 1][j], values[i][j + 1], values[i + 1][j + 1]];
            if !(changes(0, c) && changes(1, c)) {
                continue;
            }
            let start = [window.x.0 + (i as f64 + 0.5) * hx, ylo + (j as f64 + 0.5) * hy];
            let Some((q, _)) = damped_newton(&f, &jac, start, tol.newton) else { continue };
            if !window.contains(q) || !in_region(q) {
                continue;
            }
            let e = eigen(&field.jacobian_at(q));
            let merge = if e.is_hyperbolic(tol.sign) { 10.0 * tol.root } else { tol.close };
            if out.iter().any(|s| (s.point[0] - q[0]).hypot(s.point[1] - q[1]) <= merge) {
                continue;
            }
            out.push(InteriorSingularity { point: q, eigenvalues: e, kind: e.classify(tol.sign), hyperbolic: hyperbolicity(&e, tol) });
        }
    }
    out.sort_by(|a, b| a.point[0].total_cmp(&b.point[0]).then(a.point[1].total_cmp(&b.point[1])));
    out
}

fn interior_part(found: &[(Side, &[InteriorSingularity])]) -> Part {
    let witnesses: Vec<Witness> = found
        .iter()
        .flat_map(|(side, list)| {
            list.iter()
                .filter(|s| s.hyperbolic != Certainty::Yes)
                .map(move |s| Witness::InteriorSingularity { side: *side, point: s.point, eigenvalues: s.eigenvalues })
        })
        .collect();
    let status = if witnesses.is_empty() { Status::Satisfied } else { Status::Violated };
    Part::new("interior", status, witnesses)
}

fn d_part(census: &Result<DCensus, dline::DlineError>) -> Part {
    match census {
        Ok(c) => {
            let witnesses: Vec<Witness> = c
                .non_elementary()
                .map(|s| Witness::DSingularity { x: s.x, failure: s.failure, certificates: s.certificates })
                .collect();
            let status = if witnesses.is_empty() { Status::Satisfied } else { Status::Violated };
            Part::new("d_singularities", status, witnesses)
        }
        Err(e @ dline::DlineError::IdenticallyZeroOnD(_)) => {
            Part::new("d_singularities", Status::Violated, vec![Witness::Degenerate { reason: e.to_string() }])
        }
        Err(e) => Part::new("d_singularities", Status::Undetermined, vec![Witness::Note { reason: e.to_string() }]),
    }
}

fn infinity_part(inf: &Result<Vec<InfinitySingularity>, CompactifyError>) -> Part {
    match inf {
        Ok(list) => {
            let mut status = Status::Satisfied;
            let mut witnesses = Vec::new();
            for s in list {
                let w = match s.kind {
                    InfinityKind::FilippovPoint { class, .. } if class.is_sliding_or_escaping() => {
                        Witness::FilippovPoint { theta: s.theta, value: s.filippov_value.unwrap_or(0.0) }
                    }
                    _ => Witness::InfinitySingularity { theta: s.theta, a_prime: s.a_prime, r: s.r, multiplicity: s.multiplicity },
                };
                match s.hyperbolic {
                    Certainty::Yes => continue,
                    Certainty::No => status = Status::Violated,
                    Certainty::Borderline => status = Status::all([status, Status::Undetermined]),
                }
                witnesses.push(w);
            }
            Part::new("infinity", status, witnesses)
        }
        Err(e @ CompactifyError::DegenerateTopCoefficient(_)) => {
            Part::new("infinity", Status::Violated, vec![Witness::Degenerate { reason: e.to_string() }])
        }
        Err(e) => Part::new("infinity", Status::Undetermined, vec![Witness::Note { reason: e.to_string() }]),
    }
}

fn semi_decision(optimistic: bool) -> Status {
    if optimistic {
        Status::Satisfied
    } else {
        Status::Undetermined
    }
}

fn closed_part(closed: &[ClosedSummary], optimistic: bool) -> Part {
    let mut status = if closed.is_empty() { semi_decision(optimistic) } else { Status::Satisfied };
    let mut witnesses = Vec::new();
    for c in closed {
        let s = match c.elementary {
            Certainty::Yes => continue,
            Certainty::No => Status::Violated,
            Certainty::Borderline => Status::Undetermined,
        };
        status = Status::all([status, s]);
        witnesses.push(Witness::ClosedTrajectory { kind: c.kind, point: c.point, eta_prime: c.eta_prime });
    }
    if closed.is_empty() {
        witnesses.push(Witness::Note { reason: "no closed poly-trajectory found".into() });
    }
    Part::new("closed_trajectories", status, witnesses)
}

fn s1_part(s1: &Result<S1Elementarity, CompactifyError>) -> Option<Part> {
    let s = s1.as_ref().ok()?;
    match s.status {
        S1Status::Elementary => Some(Part::new("s1", Status::Satisfied, Vec::new())),
        S1Status::NonElementary => Some(Part::new("s1", Status::Violated, vec![Witness::S1 { mu: s.mu.unwrap_or(0.0) }])),
        S1Status::HasSingularitiesOnS1 => None,
    }
}

fn connection_part(c: &ConnectionSummary, optimistic: bool) -> Part {
    let witnesses: Vec<Witness> = c
        .possible_connections
        .iter()
        .map(|&(u, s, d)| Witness::Connection { unstable_start: c.probes[u].start, stable_start: c.probes[s].start, distance: d })
        .collect();
    if !witnesses.is_empty() {
        return Part::new("saddle_connections", Status::Violated, witnesses);
    }
    let reason = if c.saddles.is_empty() { "no saddles" } else { "no connection found" };
    Part::new("saddle_connections", semi_decision(optimistic), vec![Witness::Note { reason: reason.into() }])
}

/// Check the conditions of `G_m` on `z`. Sub-censuses run concurrently; the
/// report layout is fixed.
pub fn check_gm(z: &PiecewiseField, options: &GmOptions, tol: &Tolerances) -> StabilityReport {
    let window = options.window.unwrap_or_else(|| default_box(z));
    let d_window = dline::default_window(z);
    let (ix, iy, census, inf, s1, closed) = std::thread::scope(|s| {
        let ix = s.spawn(|| interior_singularities(&z.x, Side::X, window, tol));
        let iy = s.spawn(|| interior_singularities(&z.y, Side::Y, window, tol));
        let census = s.spawn(|| dline::census(z, d_window, tol));
        let inf = s.spawn(|| infinity_singularities(z, tol));
        let s1 = s.spawn(|| s1_elementarity(z, tol));
        let closed = s.spawn(|| {
            let folds = dline::fold_points(z, window.x, tol).unwrap_or_default().iter().map(|f| f.x).collect();
            let mut search = ClosedSearch::default_for(z, window, folds, tol);
            search.flow.horizon = options.horizon;
            search.samples = options.closed_samples;
            find_closed_polytrajectories(z, &search, tol)
                .into_iter()
                .map(|c| ClosedSummary {
                    kind: c.kind,
                    elementary: c.elementary,
                    eta_prime: c.eta_prime,
                    eta_prime_fd: c.eta_prime_fd,
                    point: c.trajectory.arcs.first().map(|a| a.start()).unwrap_or([f64::NAN; 2]),
                    period: c.trajectory.duration(),
                    via_sliding: c.trajectory.has_sliding(),
                    reversed: c.reversed,
                })
                .collect::<Vec<_>>()
        });
        (
            ix.join().expect("interior census"),
            iy.join().expect("interior census"),
            census.join().expect("D census"),
            inf.join().expect("infinity census"),
            s1.join().expect("S1 check"),
            closed.join().expect("closed search"),
        )
    });

    let mut saddles: Vec<SaddleOrigin> = Vec::new();
    for (side, list) in [(Side::X, &ix), (Side::Y, &iy)] {
        saddles.extend(list.iter().filter(|s| s.kind == PointType::Saddle).map(|s| SaddleOrigin::Interior { side, point: s.point }));
    }
    if let Ok(c) = &census {
        saddles.extend(
            c.singularities
                .iter()
                .filter(|s| matches!(s.kind, DSingularityKind::FzSaddle | DSingularityKind::FzNode))
                .map(|s| SaddleOrigin::Fz { x: s.x })
                .filter(|o| has_separatrices(z, o, tol)),
        );
    }
    let flow = FlowOptions::new(options.horizon, window);
    let report = probe_saddle_connections(z, &saddles, &flow, tol);
    let connections = ConnectionSummary {
        probes: report
            .probes
            .iter()
            .map(|p| ProbeSummary { saddle: p.saddle, kind: p.kind, start: p.start, end: p.end })
            .collect(),
        saddles: report.saddles,
        unstable: report.unstable,
        stable: report.stable,
        distances: report.distances,
        possible_connections: report.possible_connections,
    };

    let gm1 = Condition::from_parts(vec![
        interior_part(&[(Side::X, &ix), (Side::Y, &iy)]),
        d_part(&census),
        infinity_part(&inf),
    ]);
    let mut gm2_parts = vec![closed_part(&closed, options.optimistic)];
    gm2_parts.extend(s1_part(&s1));
    let gm2 = Condition::from_parts(gm2_parts);
    let gm3 = Condition::from_parts(vec![connection_part(&connections, options.optimistic)]);
    StabilityReport {
        degree: z.degree(),
        window,
        overall: Status::all([gm1.status, gm2.status, gm3.status]),
        gm1,
        gm2,
        gm3,
        interior_x: ix,
        interior_y: iy,
        d_census: census.ok(),
        infinity: inf.ok(),
        filippov_value: filippov_point_value(z),
        s1: s1.ok(),
        closed,
        connections,
    }
}

/// Vector component of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    /// First component `P`.
    P,
    /// Second component `Q`.
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Perturbation {
    /// `X -> R(sigma1)(X + v)`, `Y -> R(sigma2)(Y + v)`.
    RotateTranslate { sigma1: f64, sigma2: f64, v1: f64, v2: f64 },
    /// Adds `epsilon x^m` to one component of one side.
    AxisPowerX { epsilon: f64, side: Side, component: Component },
    /// Adds `epsilon (x^2 + y^2)^k (x, y)` to `X`; needs `m = 2k + 1`.
    RadialOdd { epsilon: f64, k: u32 },
}

fn rotate_translate(f: &PolyVectorField, sigma: f64, v: [f64; 2]) -> PolyVectorField {
    let (s, c) = sigma.sin_cos();
    let p = &f.p + &BivariatePolynomial::constant(v[0]);
    let q = &f.q + &BivariatePolynomial::constant(v[1]);
    let np = &p.scale(c) - &q.scale(s);
    let nq = &p.scale(s) + &q.scale(c);
    PolyVectorField::with_degree(np, nq, f.degree()).expect("rotation keeps the degree")
}

pub fn apply_perturbation(z: &PiecewiseField, pert: &Perturbation) -> Result<PiecewiseField, StabilityError> {
    let m = z.degree();
    Ok(match *pert {
        Perturbation::RotateTranslate { sigma1, sigma2, v1, v2 } => {
            PiecewiseField::new(rotate_translate(&z.x, sigma1, [v1, v2]), rotate_translate(&z.y, sigma2, [v1, v2]))
        }
        Perturbation::AxisPowerX { epsilon, side, component } => {
            let f = z.side(side);
            let term = BivariatePolynomial::monomial(epsilon, m, 0);
            let (p, q) = match component {
                Component::P => (&f.p + &term, f.q.clone()),
                Component::Q => (f.p.clone(), &f.q + &term),
            };
            let g = PolyVectorField::with_degree(p, q, m).expect("x^m keeps the degree");
            match side {
                Side::X => PiecewiseField::new(g, z.y.clone()),
                Side::Y => PiecewiseField::new(z.x.clone(), g),
            }
        }
        Perturbation::RadialOdd { epsilon, k } => {
            if m != 2 * k + 1 {
                return Err(StabilityError::DegreeMismatch { m, k });
            }
            let r2k = (&(&BivariatePolynomial::x() * &BivariatePolynomial::x()) + &(&BivariatePolynomial::y() * &BivariatePolynomial::y()))
                .powi(k)
                .scale(epsilon);
            let p = &z.x.p + &(&r2k * &BivariatePolynomial::x());
            let q = &z.x.q + &(&r2k * &BivariatePolynomial::y());
            PiecewiseField::new(PolyVectorField::with_degree(p, q, m).expect("degree 2k+1"), z.y.clone())
        }
    })
}

/// Inverse of `RotateTranslate { sigma1, sigma2, v1, v2 }`.
pub fn undo_rotate_translate(z: &PiecewiseField, sigma1: f64, sigma2: f64, v1: f64, v2: f64) -> PiecewiseField {
    let unrotated = PiecewiseField::new(rotate_translate(&z.x, -sigma1, [0.0, 0.0]), rotate_translate(&z.y, -sigma2, [0.0, 0.0]));
    PiecewiseField::new(rotate_translate(&unrotated.x, 0.0, [-v1, -v2]), rotate_translate(&unrotated.y, 0.0, [-v1, -v2]))
}

/// `1e-3, 1e-2, ..., 1e2`.
pub fn repair_schedule() -> impl Iterator<Item = f64> {
    (0..6).map(|i| 1e-3 * 10f64.powi(i))
}

/// Smallest `AxisPowerX` on the schedule making `filippov_point_value` exceed `tol.sign`.
pub fn repair_filippov_point(z: &PiecewiseField, tol: &Tolerances) -> Result<(Perturbation, PiecewiseField), StabilityError> {
    let targets = [(Side::X, Component::Q), (Side::X, Component::P), (Side::Y, Component::Q), (Side::Y, Component::P)];
    for epsilon in repair_schedule() {
        for (side, component) in targets {
            let pert = Perturbation::AxisPowerX { epsilon, side, component };
            let w = apply_perturbation(z, &pert)?;
            if filippov_point_value(&w).abs() > tol.sign {
                return Ok((pert, w));
            }
        }
    }
    Err(StabilityError::NotRepairable("the Filippov point value stays zero along the schedule".into()))
}

/// Smallest `RadialOdd` on the schedule making the circle at infinity elementary.
pub fn repair_s1(z: &PiecewiseField, tol: &Tolerances) -> Result<(Perturbation, PiecewiseField), StabilityError> {
    let m = z.degree();
    if m % 2 == 0 {
        return Err(StabilityError::DegreeMismatch { m, k: m / 2 });
    }
    for epsilon in repair_schedule() {
        let pert = Perturbation::RadialOdd { epsilon, k: (m - 1) / 2 };
        let w = apply_perturbation(z, &pert)?;
        if let Ok(s) = s1_elementarity(&w, tol) {
            if s.status == S1Status::Elementary && s.mu.is_some_and(|mu| mu.abs() > tol.mu) {
                return Ok((pert, w));
            }
        }
    }
    Err(StabilityError::NotRepairable("circle at infinity stays non-elementary".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repair {
    pub perturbation: Perturbation,
    pub field: PiecewiseField,
    pub report: StabilityReport,
}

/// Repair the first violation the explicit perturbations cover: a zero of
/// the hyperbolicity value at the Filippov points of infinity, or `mu = 0`.
pub fn genericity_repair(
    z: &PiecewiseField,
    report: &StabilityReport,
    options: &GmOptions,
    tol: &Tolerances,
) -> Result<Repair, StabilityError> {
    let s1_violated = report.gm2.part("s1").is_some_and(|p| p.status == Status::Violated);
    let fp_violated = report
        .gm1
        .part("infinity")
        .is_some_and(|p| p.status == Status::Violated && p.witnesses.iter().any(|w| matches!(w, Witness::FilippovPoint { .. })));
    let (perturbation, field) = if s1_violated {
        repair_s1(z, tol)?
    } else if fp_violated {
        repair_filippov_point(z, tol)?
    } else {
        return Err(StabilityError::NotRepairable("no Filippov point or S1 violation in the report".into()));
    };
    let report = check_gm(&field, options, tol);
    Ok(Repair { perturbation, field, report })
}

/// Image of the top pair `(A_m, R_m)` at one angle under a rotation by `sigma`.
pub fn rotated_top_pair(a: f64, r: f64, sigma: f64) -> (f64, f64) {
    let (s, c) = sigma.sin_cos();
    (c * a + s * r, c * r - s * a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compactify::compactified_field;
    use crate::dline::DClass;
    use std::f64::consts::PI;

    fn bp(terms: &[(f64, u32, u32)]) -> BivariatePolynomial {
        BivariatePolynomial::from_terms(terms.iter().copied())
    }

    fn field(p: &[(f64, u32, u32)], q: &[(f64, u32, u32)]) -> PolyVectorField {
        PolyVectorField::new(bp(p), bp(q))
    }

    fn rotation() -> PolyVectorField {
        field(&[(-1.0, 0, 1)], &[(1.0, 1, 0)])
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn interior_examples() {
        let w = Window::square(3.0);
        let t = tol();
        let s = interior_singularities(&field(&[(1.0, 1, 0)], &[(1.0, 0, 1), (-1.0, 0, 0)]), Side::X, w, &t);
        assert_eq!(s.len(), 1);
        assert!((s[0].point[0]).abs() < 1e-12 && (s[0].point[1] - 1.0).abs() < 1e-12);
        assert_eq!(s[0].eigenvalues.values, [(1.0, 0.0), (1.0, 0.0)]);
        assert_eq!(s[0].hyperbolic, Certainty::Yes);

        let s = interior_singularities(&field(&[(-1.0, 0, 1), (1.0, 0, 0)], &[(1.0, 1, 0)]), Side::X, w, &t);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].hyperbolic, Certainty::No);
        assert_eq!(s[0].kind, PointType::Borderline);

        assert!(interior_singularities(&PolyVectorField::constant(1.0, 1.0), Side::X, w, &t).is_empty());
        // the zero (0, 1) is not in S
        assert!(interior_singularities(&field(&[(1.0, 1, 0)], &[(1.0, 0, 1), (-1.0, 0, 0)]), Side::Y, w, &t).is_empty());
    }

    #[test]
    fn quarter_rotation() {
        let x = field(&[(1.0, 2, 0), (2.0, 0, 1)], &[(3.0, 1, 1), (-1.0, 0, 0)]);
        let z = PiecewiseField::new(x.clone(), rotation());
        let w = apply_perturbation(&z, &Perturbation::RotateTranslate { sigma1: PI / 2.0, sigma2: 0.0, v1: 0.0, v2: 0.0 }).unwrap();
        for ((i, j), c) in w.x.p.terms() {
            assert!((c + x.q.coeff(i, j)).abs() < 1e-15);
        }
        for ((i, j), c) in w.x.q.terms() {
            assert!((c - x.p.coeff(i, j)).abs() < 1e-15);
        }
        assert_eq!(w.y, z.y);
        let same = apply_perturbation(&z, &Perturbation::RotateTranslate { sigma1: 0.0, sigma2: 0.0, v1: 0.0, v2: 0.0 }).unwrap();
        assert_eq!(same, z);
    }

    #[test]
    fn round_trip() {
        let z = PiecewiseField::new(field(&[(1.0, 2, 0), (2.0, 0, 1)], &[(3.0, 1, 1), (-1.0, 0, 0)]), rotation());
        let (s1, s2, v1, v2) = (0.7, -1.3, 0.25, -2.0);
        let w = apply_perturbation(&z, &Perturbation::RotateTranslate { sigma1: s1, sigma2: s2, v1, v2 }).unwrap();
        let back = undo_rotate_translate(&w, s1, s2, v1, v2);
        for (a, b) in [(&back.x.p, &z.x.p), (&back.x.q, &z.x.q), (&back.y.p, &z.y.p), (&back.y.q, &z.y.q)] {
            for i in 0..=2 {
                for j in 0..=2 - i {
                    assert!((a.coeff(i, j) - b.coeff(i, j)).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn top_pair_equivariance() {
        let z = PiecewiseField::new(field(&[(1.0, 2, 0), (2.0, 1, 1)], &[(3.0, 1, 1), (-1.0, 0, 2)]), field(&[(1.0, 0, 2)], &[(1.0, 2, 0)]));
        let sigma = 0.9;
        let w = apply_perturbation(&z, &Perturbation::RotateTranslate { sigma1: sigma, sigma2: sigma, v1: 0.3, v2: 0.1 }).unwrap();
        let (tz, tw) = (compactified_field(&z), compactified_field(&w));
        for k in 0..100 {
            let th = k as f64 * 0.0628;
            let (a, r) = rotated_top_pair(tz.x.top_a().eval(th), tz.x.top_r().eval(th), sigma);
            assert!((a - tw.x.top_a().eval(th)).abs() < 1e-12);
            assert!((r - tw.x.top_r().eval(th)).abs() < 1e-12);
        }
    }

    #[test]
    fn radial_odd() {
        let z = PiecewiseField::new(rotation(), rotation());
        let w = apply_perturbation(&z, &Perturbation::RadialOdd { epsilon: 1e-3, k: 0 }).unwrap();
        assert_eq!(w.x, field(&[(-1.0, 0, 1), (1e-3, 1, 0)], &[(1.0, 1, 0), (1e-3, 0, 1)]));
        let s = s1_elementarity(&w, &tol()).unwrap();
        assert_eq!(s.status, S1Status::Elementary);
        assert!((s.mu.unwrap() - 1e-3 * PI).abs() < 1e-10);
        assert_eq!(
            apply_perturbation(&z, &Perturbation::RadialOdd { epsilon: 1e-3, k: 1 }),
            Err(StabilityError::DegreeMismatch { m: 1, k: 1 })
        );
    }

    #[test]
    fn filippov_point_repair() {
        let z = PiecewiseField::new(rotation(), rotation());
        assert_eq!(filippov_point_value(&z), 0.0);
        let (pert, w) = repair_filippov_point(&z, &tol()).unwrap();
        // P_{2,1}(1,0) = 0 rules out the y-component, the x-component gives the value eps
        assert_eq!(pert, Perturbation::AxisPowerX { epsilon: 1e-3, side: Side::X, component: Component::P });
        assert!((filippov_point_value(&w) - 1e-3).abs() < 1e-15);

        let y = field(&[(1.0, 1, 0)], &[(1.0, 0, 1)]);
        let (pert, w) = repair_filippov_point(&PiecewiseField::new(y.clone(), y), &tol()).unwrap();
        assert_eq!(pert, Perturbation::AxisPowerX { epsilon: 1e-3, side: Side::X, component: Component::Q });
        assert!((filippov_point_value(&w) + 1e-3).abs() < 1e-15);
    }

    #[test]
    fn not_repairable() {
        let z = PiecewiseField::new(field(&[(1.0, 0, 0)], &[(1.0, 0, 0)]), field(&[(1.0, 0, 0)], &[(1.0, 0, 0)]));
        let opts = GmOptions::default();
        let r = check_gm(&z, &opts, &tol());
        assert!(matches!(genericity_repair(&z, &r, &opts, &tol()), Err(StabilityError::NotRepairable(_))));
    }

    #[test]
    fn focus_on_d_report() {
        let z = PiecewiseField::new(field(&[(-1.0, 0, 1), (1.0, 1, 0)], &[(1.0, 1, 0), (1.0, 0, 1)]), rotation());
        let r = check_gm(&z, &GmOptions::default(), &tol());
        assert_eq!(r.gm1.status, Status::Violated);
        let d = r.gm1.part("d_singularities").unwrap();
        assert!(matches!(d.witnesses[..], [Witness::DSingularity { x, .. }] if x.abs() < 1e-9));
        assert_eq!(r.overall, Status::Violated);
        let s1 = r.s1.unwrap();
        assert!((s1.mu.unwrap() - PI).abs() < 1e-8);
    }

    #[test]
    fn constant_report() {
        let c = PolyVectorField::constant(1.0, 1.0);
        let r = check_gm(&PiecewiseField::new(c.clone(), c), &GmOptions::default(), &tol());
        assert_eq!(r.gm1.part("interior").unwrap().status, Status::Satisfied);
        assert_eq!(r.gm1.part("d_singularities").unwrap().status, Status::Satisfied);
        assert_eq!(r.gm1.part("infinity").unwrap().status, Status::Undetermined);
        assert_eq!(r.overall, Status::Undetermined);
        assert_eq!(r.d_census.as_ref().unwrap().arcs.len(), 1);
        assert_eq!(r.d_census.as_ref().unwrap().arcs[0].class, DClass::Sewing);
    }
}

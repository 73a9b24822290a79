//! Hybrid trajectories of piecewise fields under the Filippov rules, return
//! maps with their derivatives, closed poly-trajectory search and separatrix
//! probing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compactify::compactified_field;
use crate::dline::{classify_values, second_lie_derivative, sliding_velocity, DClass};
use crate::linalg::{eigen, eigenvector, PointType};
use crate::ode::{solve, Crossing, Event, OdeError, OdeOptions, Stop};
use crate::poly::{BivariatePolynomial, PiecewiseField, PolyVectorField, Side};
use crate::tolerances::{Certainty, Tolerances};

use std::collections::HashMap;
use std::f64::consts::PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("integrator failure: {0}")]
    StepFailure(#[from] OdeError),
    #[error("D-hit at x = {x} is within tolerance of an arc endpoint")]
    ClassificationAmbiguous { x: f64 },
    #[error("section not transversal to the flow (determinant {det:e})")]
    NotTransversal { det: f64 },
    #[error("no return to the section: {0}")]
    NoReturn(&'static str),
    #[error("start point is inconsistent with the requested side or window")]
    InconsistentStart,
    #[error("trajectory ends {distance:e} away from the expected endpoint")]
    EndpointMismatch { distance: f64 },
    #[error("constructed trajectory violates its invariants: {0}")]
    Illegal(String),
}

/// Axis-aligned box `x.0 <= x <= x.1`, `y.0 <= y <= y.1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Window {
    pub fn square(r: f64) -> Self {
        Self { x: (-r, r), y: (-r, r) }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x.0 && p[0] <= self.x.1 && p[1] >= self.y.0 && p[1] <= self.y.1
    }
}

/// Segment `origin + s * direction`, `s` in `range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub origin: [f64; 2],
    pub direction: [f64; 2],
    pub range: (f64, f64),
}

impl Section {
    pub fn new(origin: [f64; 2], direction: [f64; 2], range: (f64, f64)) -> Self {
        Self { origin, direction, range }
    }

    /// `{x = x0}` parameterized by `y`.
    pub fn vertical(x0: f64, y_range: (f64, f64)) -> Self {
        Self::new([x0, 0.0], [0.0, 1.0], y_range)
    }

    /// `D` parameterized by `x`.
    pub fn on_d(x_range: (f64, f64)) -> Self {
        Self::new([0.0, 0.0], [1.0, 0.0], x_range)
    }

    pub fn point(&self, s: f64) -> [f64; 2] {
        [self.origin[0] + s * self.direction[0], self.origin[1] + s * self.direction[1]]
    }

    pub fn param(&self, q: [f64; 2]) -> f64 {
        let d = self.direction;
        ((q[0] - self.origin[0]) * d[0] + (q[1] - self.origin[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])
    }

    pub fn length(&self) -> f64 {
        (self.range.1 - self.range.0).abs() * self.direction[0].hypot(self.direction[1])
    }

    fn normal(&self) -> [f64; 2] {
        [-self.direction[1], self.direction[0]]
    }
}

pub fn det2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldTag {
    X,
    Y,
    Fz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    CrossingAtSewing,
    EnterSliding,
    ExitAtFold,
    ReachFzSingularity,
    WindowExit,
    TimeBudget,
    /// Reached an escaping point: forward evolution is not unique.
    NonUniqueForward,
    /// Crossed the return section in the starting direction.
    SectionReturn,
    /// Came back to the start point.
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Closure {
    No,
    /// Meets `D` only at sewing points.
    Type1,
    /// Has a fold point and a sliding or escaping arc.
    Type3,
    /// Periodic orbit of one side that never reaches `D`.
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StartSide {
    N,
    S,
    D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryArc {
    pub field: FieldTag,
    pub t_span: (f64, f64),
    pub samples: Vec<(f64, [f64; 2])>,
    /// Integral of the divergence of the generating field along the arc.
    pub div_integral: f64,
}

impl TrajectoryArc {
    pub fn start(&self) -> [f64; 2] {
        self.samples.first().expect("arcs are never empty").1
    }

    pub fn end(&self) -> [f64; 2] {
        self.samples.last().expect("arcs are never empty").1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEvent {
    pub t: f64,
    pub kind: EventKind,
    pub point: [f64; 2],
    /// Index of the arc that ends at this event.
    pub after_arc: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTrajectory {
    pub arcs: Vec<TrajectoryArc>,
    pub events: Vec<TrajectoryEvent>,
    pub closed: Closure,
    pub non_unique_forward: bool,
}

impl PolyTrajectory {
    fn empty() -> Self {
        Self { arcs: Vec::new(), events: Vec::new(), closed: Closure::No, non_unique_forward: false }
    }

    pub fn end_point(&self) -> Option<[f64; 2]> {
        self.arcs.last().map(|a| a.end()).or_else(|| self.events.last().map(|e| e.point))
    }

    pub fn duration(&self) -> f64 {
        match (self.arcs.first(), self.arcs.last()) {
            (Some(a), Some(b)) => b.t_span.1 - a.t_span.0,
            _ => 0.0,
        }
    }

    pub fn last_event(&self) -> Option<EventKind> {
        self.events.last().map(|e| e.kind)
    }

    pub fn has_sliding(&self) -> bool {
        self.arcs.iter().any(|a| a.field == FieldTag::Fz)
    }

    /// All sampled points in time order.
    pub fn points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.arcs.iter().flat_map(|a| a.samples.iter().map(|s| s.1))
    }

    fn transition(&self, arc: usize) -> Option<&TrajectoryEvent> {
        self.events.iter().find(|e| {
            e.after_arc == arc
                && matches!(e.kind, EventKind::CrossingAtSewing | EventKind::EnterSliding | EventKind::ExitAtFold)
        })
    }

    /// Check the transition rules between consecutive arcs.
    pub fn validate(&self, z: &PiecewiseField, tol: &Tolerances) -> Result<(), String> {
        for arc in &self.arcs {
            if arc.field == FieldTag::Fz && arc.samples.iter().any(|s| s.1[1] != 0.0) {
                return Err("sliding arc leaves D".into());
            }
        }
        for i in 0..self.arcs.len().saturating_sub(1) {
            let (a, b) = (self.arcs[i].field, self.arcs[i + 1].field);
            let ev = self.transition(i).ok_or_else(|| format!("no transition event after arc {i}"))?;
            let x = ev.point[0];
            let xf = z.x.q.eval(x, 0.0);
            let yf = z.y.q.eval(x, 0.0);
            let class = classify_values(xf, yf, tol.sign);
            let ok = match (a, b, ev.kind) {
                (FieldTag::X, FieldTag::Y, EventKind::CrossingAtSewing)
                | (FieldTag::Y, FieldTag::X, EventKind::CrossingAtSewing) => class == DClass::Sewing,
                (FieldTag::X | FieldTag::Y, FieldTag::Fz, EventKind::EnterSliding) => class.is_sliding_or_escaping(),
                (FieldTag::Fz, FieldTag::X, EventKind::ExitAtFold) => xf.abs() <= tol.close,
                (FieldTag::Fz, FieldTag::Y, EventKind::ExitAtFold) => yf.abs() <= tol.close,
                _ => false,
            };
            if !ok {
                return Err(format!("illegal transition {a:?} -> {b:?} via {:?} at x = {x}", ev.kind));
            }
        }
        let folds = self.events.iter().filter(|e| e.kind == EventKind::ExitAtFold).count();
        match self.closed {
            Closure::Type1 if self.has_sliding() => Err("type 1 closure with a sliding arc".into()),
            Closure::Type3 if !self.has_sliding() || folds == 0 => Err("type 3 closure without fold and sliding arc".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy)]
struct Watch {
    origin: [f64; 2],
    normal: [f64; 2],
    /// Stop at every crossing; otherwise stop only near `close_to`.
    stop_always: bool,
    close_to: [f64; 2],
}

impl Watch {
    fn g(&self, q: [f64; 2]) -> f64 {
        (q[0] - self.origin[0]) * self.normal[0] + (q[1] - self.origin[1]) * self.normal[1]
    }
}

#[derive(Clone, Copy)]
struct Cfg<'a> {
    window: Window,
    horizon: f64,
    tol: &'a Tolerances,
    max_steps: usize,
    h_max: Option<f64>,
    watch: Option<Watch>,
}

impl Cfg<'_> {
    fn ode(&self, budget: usize) -> OdeOptions {
        OdeOptions { rtol: self.tol.ode_rtol, atol: self.tol.ode_atol, max_steps: budget, h_max: self.h_max }
    }
}

enum SmoothEnd {
    HitD,
    Watch,
    Closed,
    WindowExit,
    Horizon,
    Budget,
}

struct SmoothRun {
    samples: Vec<(f64, [f64; 2])>,
    div_integral: f64,
    end: SmoothEnd,
}

fn window_events<'a, const N: usize>(w: Window, ix: usize, iy: Option<usize>) -> Vec<Event<'a, N>> {
    let mut v = vec![
        Event::new(Crossing::Rising, move |_t, s: &[f64; N]| s[ix] - w.x.1),
        Event::new(Crossing::Falling, move |_t, s: &[f64; N]| s[ix] - w.x.0),
    ];
    if let Some(iy) = iy {
        v.push(Event::new(Crossing::Rising, move |_t, s: &[f64; N]| s[iy] - w.y.1));
        v.push(Event::new(Crossing::Falling, move |_t, s: &[f64; N]| s[iy] - w.y.0));
    }
    v
}

fn run_smooth(
    field: &PolyVectorField,
    div: &BivariatePolynomial,
    d_cross: Crossing,
    p0: [f64; 2],
    t0: f64,
    cfg: &Cfg,
    budget: &mut usize,
) -> Result<SmoothRun, FlowError> {
    let f = |_t: f64, s: &[f64; 3]| {
        let v = field.eval([s[0], s[1]]);
        [v[0], v[1], div.eval(s[0], s[1])]
    };
    let watch = cfg.watch;
    // the watch comes first so that it wins ties with the D event
    let mut events: Vec<Event<3>> = vec![
        Event::new(Crossing::Rising, move |_t, s: &[f64; 3]| match watch {
            Some(w) => w.g([s[0], s[1]]),
            None => -1.0,
        }),
        Event::new(d_cross, |_t, s: &[f64; 3]| s[1]),
    ];
    events.extend(window_events::<3>(cfg.window, 0, Some(1)));

    let mut run = SmoothRun { samples: vec![(t0, p0)], div_integral: 0.0, end: SmoothEnd::Horizon };
    let mut t = t0;
    let mut y = [p0[0], p0[1], 0.0];
    loop {
        if *budget == 0 {
            run.end = SmoothEnd::Budget;
            return Ok(run);
        }
        let sol = solve(f, t, y, cfg.horizon, &events, None, &cfg.ode(*budget))?;
        *budget = budget.saturating_sub(sol.steps);
        for (ti, yi) in sol.t.iter().zip(&sol.y).skip(1) {
            run.samples.push((*ti, [yi[0], yi[1]]));
        }
        t = sol.t_end();
        y = sol.y_end();
        run.div_integral = y[2];
        run.end = match sol.stop {
            Stop::Event(0) => {
                let w = watch.expect("watch event fires only when present");
                let q = [y[0], y[1]];
                if w.stop_always {
                    SmoothEnd::Watch
                } else if dist(q, w.close_to) <= cfg.tol.close {
                    SmoothEnd::Closed
                } else {
                    continue;
                }
            }
            Stop::Event(1) => SmoothEnd::HitD,
            Stop::Event(_) => SmoothEnd::WindowExit,
            Stop::Horizon => SmoothEnd::Horizon,
            Stop::StepBudget | Stop::Predicate => SmoothEnd::Budget,
        };
        return Ok(run);
    }
}

enum SlideEnd {
    ExitX,
    ExitY,
    FzSingular,
    Watch,
    Closed,
    WindowExit,
    Horizon,
    Budget,
}

fn run_slide(z: &PiecewiseField, x0: f64, t0: f64, cfg: &Cfg, budget: &mut usize) -> Result<(Vec<(f64, [f64; 2])>, SlideEnd), FlowError> {
    let tol = cfg.tol;
    let mut samples = vec![(t0, [x0, 0.0])];
    if sliding_velocity(z, x0).abs() <= tol.event {
        return Ok((samples, SlideEnd::FzSingular));
    }
    let f = |_t: f64, s: &[f64; 1]| [sliding_velocity(z, s[0])];
    let watch = cfg.watch;
    let mut events: Vec<Event<1>> = vec![
        Event::new(Crossing::Rising, move |_t, s: &[f64; 1]| match watch {
            Some(w) => w.g([s[0], 0.0]),
            None => -1.0,
        }),
        Event::new(Crossing::Any, |_t, s: &[f64; 1]| z.x.q.eval(s[0], 0.0)),
        Event::new(Crossing::Any, |_t, s: &[f64; 1]| z.y.q.eval(s[0], 0.0)),
    ];
    events.extend(window_events::<1>(cfg.window, 0, None));
    let stalled = |_t: f64, s: &[f64; 1]| sliding_velocity(z, s[0]).abs() <= tol.event;
    let mut t = t0;
    let mut y = [x0];
    loop {
        if *budget == 0 {
            return Ok((samples, SlideEnd::Budget));
        }
        let sol = solve(f, t, y, cfg.horizon, &events, Some(&stalled), &cfg.ode(*budget))?;
        *budget = budget.saturating_sub(sol.steps);
        for (ti, yi) in sol.t.iter().zip(&sol.y).skip(1) {
            samples.push((*ti, [yi[0], 0.0]));
        }
        t = sol.t_end();
        y = sol.y_end();
        let end = match sol.stop {
            Stop::Event(0) => {
                let w = watch.expect("watch event fires only when present");
                if w.stop_always {
                    SlideEnd::Watch
                } else if dist([y[0], 0.0], w.close_to) <= tol.close {
                    SlideEnd::Closed
                } else {
                    continue;
                }
            }
            Stop::Event(1) => SlideEnd::ExitX,
            Stop::Event(2) => SlideEnd::ExitY,
            Stop::Event(_) => SlideEnd::WindowExit,
            Stop::Predicate => SlideEnd::FzSingular,
            Stop::Horizon => SlideEnd::Horizon,
            Stop::StepBudget => SlideEnd::Budget,
        };
        return Ok((samples, end));
    }
}

#[derive(Debug, Clone, Copy)]
enum Next {
    Smooth(Side, [f64; 2]),
    Arrive(Side, f64),
    Slide(f64),
    Stop(EventKind),
}

/// Forward continuation from a point of `D`.
fn depart(z: &PiecewiseField, x: f64, tol: &Tolerances) -> Result<Next, FlowError> {
    let xf = z.x.q.eval(x, 0.0);
    let yf = z.y.q.eval(x, 0.0);
    let p = [x, 0.0];
    Ok(match classify_values(xf, yf, tol.sign) {
        DClass::Sewing if xf > 0.0 => Next::Smooth(Side::X, p),
        DClass::Sewing => Next::Smooth(Side::Y, p),
        DClass::Sliding => Next::Slide(x),
        DClass::Escaping => Next::Stop(EventKind::NonUniqueForward),
        DClass::TangencyX => {
            let x2 = second_lie_derivative(&z.x).eval(x, 0.0);
            if x2.abs() <= tol.sign {
                return Err(FlowError::ClassificationAmbiguous { x });
            }
            match (x2 > 0.0, yf > 0.0) {
                (true, true) => Next::Smooth(Side::X, p),
                (true, false) => Next::Stop(EventKind::NonUniqueForward),
                (false, true) => Next::Slide(x),
                (false, false) => Next::Smooth(Side::Y, p),
            }
        }
        DClass::TangencyY => {
            let y2 = second_lie_derivative(&z.y).eval(x, 0.0);
            if y2.abs() <= tol.sign {
                return Err(FlowError::ClassificationAmbiguous { x });
            }
            match (y2 < 0.0, xf < 0.0) {
                (true, true) => Next::Smooth(Side::Y, p),
                (true, false) => Next::Stop(EventKind::NonUniqueForward),
                (false, true) => Next::Slide(x),
                (false, false) => Next::Smooth(Side::X, p),
            }
        }
        DClass::TangencyBoth => return Err(FlowError::ClassificationAmbiguous { x }),
    })
}

fn initial_velocity(z: &PiecewiseField, next: Next) -> Option<[f64; 2]> {
    match next {
        Next::Smooth(side, p) => Some(z.side(side).eval(p)),
        Next::Slide(x) => Some([sliding_velocity(z, x), 0.0]),
        _ => None,
    }
}

fn first_step(z: &PiecewiseField, p0: [f64; 2], start: StartSide, tol: &Tolerances) -> Result<Next, FlowError> {
    match start {
        StartSide::N if p0[1] > 0.0 => Ok(Next::Smooth(Side::X, p0)),
        StartSide::S if p0[1] < 0.0 => Ok(Next::Smooth(Side::Y, p0)),
        StartSide::N | StartSide::S if p0[1] == 0.0 => depart(z, p0[0], tol),
        StartSide::D if p0[1].abs() <= tol.event => depart(z, p0[0], tol),
        _ => Err(FlowError::InconsistentStart),
    }
}

fn run_hybrid(z: &PiecewiseField, first: Next, t0: f64, cfg: &Cfg) -> Result<PolyTrajectory, FlowError> {
    let tol = cfg.tol;
    let divs = [z.x.divergence(), z.y.divergence()];
    let mut traj = PolyTrajectory::empty();
    let mut budget = cfg.max_steps;
    let mut t = t0;
    let mut next = first;
    let closes = |q: [f64; 2], traj: &PolyTrajectory| {
        cfg.watch.is_some_and(|w| !w.stop_always && !traj.arcs.is_empty() && dist(q, w.close_to) <= tol.close)
    };
    loop {
        let arc_idx = traj.arcs.len();
        let push_event = |traj: &mut PolyTrajectory, t: f64, kind: EventKind, point: [f64; 2]| {
            traj.events.push(TrajectoryEvent { t, kind, point, after_arc: arc_idx.saturating_sub(1) });
        };
        next = match next {
            Next::Stop(kind) => {
                if kind == EventKind::NonUniqueForward {
                    traj.non_unique_forward = true;
                }
                let p = traj.arcs.last().map_or([f64::NAN; 2], |a| a.end());
                push_event(&mut traj, t, kind, p);
                break;
            }
            Next::Smooth(side, p) => {
                let (field, div, tag, cross) = match side {
                    Side::X => (&z.x, &divs[0], FieldTag::X, Crossing::Falling),
                    Side::Y => (&z.y, &divs[1], FieldTag::Y, Crossing::Rising),
                };
                let run = run_smooth(field, div, cross, p, t, cfg, &mut budget)?;
                let (t1, mut q) = *run.samples.last().expect("non-empty");
                if matches!(run.end, SmoothEnd::HitD) {
                    q[1] = 0.0;
                }
                let mut samples = run.samples;
                samples.last_mut().expect("non-empty").1 = q;
                traj.arcs.push(TrajectoryArc { field: tag, t_span: (t, t1), samples, div_integral: run.div_integral });
                t = t1;
                match run.end {
                    SmoothEnd::HitD => Next::Arrive(side, q[0]),
                    SmoothEnd::Watch => Next::Stop(EventKind::SectionReturn),
                    SmoothEnd::Closed => Next::Stop(EventKind::Closed),
                    SmoothEnd::WindowExit => Next::Stop(EventKind::WindowExit),
                    SmoothEnd::Horizon | SmoothEnd::Budget => Next::Stop(EventKind::TimeBudget),
                }
            }
            Next::Arrive(from, x) => {
                let xf = z.x.q.eval(x, 0.0);
                let yf = z.y.q.eval(x, 0.0);
                let class = classify_values(xf, yf, tol.sign);
                let p = [x, 0.0];
                let (kind, n) = match (from, class) {
                    (Side::X, DClass::Sewing) if xf < 0.0 => (EventKind::CrossingAtSewing, Next::Smooth(Side::Y, p)),
                    (Side::Y, DClass::Sewing) if yf > 0.0 => (EventKind::CrossingAtSewing, Next::Smooth(Side::X, p)),
                    (_, DClass::Sliding) => (EventKind::EnterSliding, Next::Slide(x)),
                    _ => return Err(FlowError::ClassificationAmbiguous { x }),
                };
                push_event(&mut traj, t, kind, p);
                if closes(p, &traj) {
                    push_event(&mut traj, t, EventKind::Closed, p);
                    break;
                }
                n
            }
            Next::Slide(x) => {
                let (samples, end) = run_slide(z, x, t, cfg, &mut budget)?;
                let (t1, q) = *samples.last().expect("non-empty");
                traj.arcs.push(TrajectoryArc { field: FieldTag::Fz, t_span: (t, t1), samples, div_integral: 0.0 });
                t = t1;
                let arc_idx = traj.arcs.len();
                let fold_exit = |traj: &mut PolyTrajectory, side: Side| -> Result<Next, FlowError> {
                    let (own, other) = match side {
                        Side::X => (&z.x, &z.y),
                        Side::Y => (&z.y, &z.x),
                    };
                    if other.q.eval(q[0], 0.0).abs() <= tol.sign
                        || second_lie_derivative(own).eval(q[0], 0.0).abs() <= tol.sign
                    {
                        return Err(FlowError::ClassificationAmbiguous { x: q[0] });
                    }
                    traj.events.push(TrajectoryEvent { t: t1, kind: EventKind::ExitAtFold, point: q, after_arc: arc_idx - 1 });
                    Ok(Next::Smooth(side, q))
                };
                match end {
                    SlideEnd::ExitX => fold_exit(&mut traj, Side::X)?,
                    SlideEnd::ExitY => fold_exit(&mut traj, Side::Y)?,
                    SlideEnd::FzSingular => Next::Stop(EventKind::ReachFzSingularity),
                    SlideEnd::Watch => Next::Stop(EventKind::SectionReturn),
                    SlideEnd::Closed => Next::Stop(EventKind::Closed),
                    SlideEnd::WindowExit => Next::Stop(EventKind::WindowExit),
                    SlideEnd::Horizon | SlideEnd::Budget => Next::Stop(EventKind::TimeBudget),
                }
            }
        };
        if let Some(ev) = traj.events.last() {
            if ev.kind == EventKind::ExitAtFold && ev.after_arc + 1 == traj.arcs.len() && closes(ev.point, &traj) {
                let p = ev.point;
                traj.events.push(TrajectoryEvent { t, kind: EventKind::Closed, point: p, after_arc: traj.arcs.len() - 1 });
                break;
            }
        }
    }
    if traj.last_event() == Some(EventKind::Closed) {
        traj.closed = if traj.has_sliding() {
            Closure::Type3
        } else if traj.events.iter().any(|e| e.kind == EventKind::CrossingAtSewing) {
            Closure::Type1
        } else {
            Closure::Periodic
        };
    }
    Ok(traj)
}

/// Options shared by the trajectory-level operations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub horizon: f64,
    pub window: Window,
    pub max_steps: usize,
    /// Largest integrator step in time; `None` lets the controller decide.
    pub h_max: Option<f64>,
}

impl FlowOptions {
    pub fn new(horizon: f64, window: Window) -> Self {
        Self { horizon, window, max_steps: 10_000, h_max: None }
    }

    fn cfg<'a>(&self, tol: &'a Tolerances, watch: Option<Watch>) -> Cfg<'a> {
        Cfg { window: self.window, horizon: self.horizon, tol, max_steps: self.max_steps, h_max: self.h_max, watch }
    }
}

/// Trace of a single smooth field up to its first crossing of `y = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothTrace {
    pub samples: Vec<(f64, [f64; 2])>,
    pub stop: EventKind,
    pub div_integral: f64,
}

impl SmoothTrace {
    pub fn end(&self) -> [f64; 2] {
        self.samples.last().expect("non-empty").1
    }
}

/// Integrate one polynomial field from `p0`; stops at `y = 0`
/// ([`EventKind::CrossingAtSewing`] is used for the hit), window exit or horizon.
pub fn integrate_smooth(field: &PolyVectorField, p0: [f64; 2], opts: &FlowOptions, tol: &Tolerances) -> Result<SmoothTrace, FlowError> {
    if !opts.window.contains(p0) {
        return Err(FlowError::InconsistentStart);
    }
    let cfg = opts.cfg(tol, None);
    let mut budget = opts.max_steps;
    let run = run_smooth(field, &field.divergence(), Crossing::Any, p0, 0.0, &cfg, &mut budget)?;
    let stop = match run.end {
        SmoothEnd::HitD => EventKind::CrossingAtSewing,
        SmoothEnd::WindowExit => EventKind::WindowExit,
        _ => EventKind::TimeBudget,
    };
    Ok(SmoothTrace { samples: run.samples, stop, div_integral: run.div_integral })
}

/// Hybrid forward trajectory from `p0`, closing when it returns to `p0`.
pub fn advance_hybrid(z: &PiecewiseField, p0: [f64; 2], start: StartSide, opts: &FlowOptions, tol: &Tolerances) -> Result<PolyTrajectory, FlowError> {
    if !opts.window.contains(p0) {
        return Err(FlowError::InconsistentStart);
    }
    let first = first_step(z, p0, start, tol)?;
    let watch = initial_velocity(z, first)
        .filter(|v| v[0].hypot(v[1]) > tol.sign)
        .map(|v| Watch { origin: p0, normal: v, stop_always: false, close_to: p0 });
    let traj = run_hybrid(z, first, 0.0, &opts.cfg(tol, watch))?;
    traj.validate(z, tol).map_err(FlowError::Illegal)?;
    Ok(traj)
}

/// `Pi'(p0)` along the flow of `field` from `p0` over time `t_span`, with
/// sections through `p0` and `p1` of directions `sec0`, `sec1`.
pub fn transition_derivative(
    field: &PolyVectorField,
    p0: [f64; 2],
    p1: [f64; 2],
    sec0: [f64; 2],
    sec1: [f64; 2],
    t_span: f64,
    tol: &Tolerances,
) -> Result<f64, FlowError> {
    let d0 = det2(field.eval(p0), sec0);
    let d1 = det2(field.eval(p1), sec1);
    for d in [d0, d1] {
        if d.abs() <= tol.sign {
            return Err(FlowError::NotTransversal { det: d });
        }
    }
    let div = field.divergence();
    let f = |_t: f64, s: &[f64; 3]| {
        let v = field.eval([s[0], s[1]]);
        [v[0], v[1], div.eval(s[0], s[1])]
    };
    let opts = OdeOptions { rtol: tol.ode_rtol, atol: tol.ode_atol, ..OdeOptions::default() };
    let sol = solve(f, 0.0, [p0[0], p0[1], 0.0], t_span, &[], None, &opts)?;
    if sol.stop != Stop::Horizon {
        return Err(FlowError::NoReturn("step budget exhausted"));
    }
    let e = sol.y_end();
    let gap = dist([e[0], e[1]], p1);
    if gap > 1e-6 * p1[0].hypot(p1[1]).max(1.0) {
        return Err(FlowError::EndpointMismatch { distance: gap });
    }
    Ok(d0 / d1 * e[2].exp())
}

/// One evaluation of a return map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnMap {
    pub s0: f64,
    pub s1: f64,
    pub time: f64,
    /// Derivative from the divergence formula chained through `D`; zero when
    /// the return passes through a sliding arc.
    pub eta_prime: f64,
    /// Central difference with one Richardson step.
    pub eta_prime_fd: Option<f64>,
    pub via_sliding: bool,
    /// Sine of the angle between the flow and the section at the start.
    pub transversality: f64,
    pub trajectory: PolyTrajectory,
}

fn hybrid_velocity(z: &PiecewiseField, q: [f64; 2], tol: &Tolerances) -> Result<(Next, [f64; 2]), FlowError> {
    let next = if q[1] > 0.0 {
        Next::Smooth(Side::X, q)
    } else if q[1] < 0.0 {
        Next::Smooth(Side::Y, q)
    } else {
        depart(z, q[0], tol)?
    };
    let v = initial_velocity(z, next).ok_or(FlowError::NoReturn("start point has no forward orbit"))?;
    Ok((next, v))
}

fn return_once(z: &PiecewiseField, section: &Section, s0: f64, opts: &FlowOptions, tol: &Tolerances) -> Result<ReturnMap, FlowError> {
    let q0 = section.point(s0);
    if !opts.window.contains(q0) {
        return Err(FlowError::InconsistentStart);
    }
    let (first, v0) = hybrid_velocity(z, q0, tol)?;
    let cross = det2(section.direction, v0);
    if cross.abs() <= tol.sign {
        return Err(FlowError::NotTransversal { det: cross });
    }
    let n = section.normal();
    let o = cross.signum();
    let watch = Watch { origin: section.origin, normal: [o * n[0], o * n[1]], stop_always: true, close_to: q0 };
    let traj = run_hybrid(z, first, 0.0, &opts.cfg(tol, Some(watch)))?;
    match traj.last_event() {
        Some(EventKind::SectionReturn) => {}
        Some(EventKind::WindowExit) => return Err(FlowError::NoReturn("left the window")),
        Some(EventKind::ReachFzSingularity) => return Err(FlowError::NoReturn("stopped at an F_Z singularity")),
        Some(EventKind::NonUniqueForward) => return Err(FlowError::NoReturn("reached an escaping arc")),
        _ => return Err(FlowError::NoReturn("time budget exhausted")),
    }
    let q1 = traj.end_point().expect("non-empty");
    let via_sliding = traj.has_sliding();
    let eta_prime = if via_sliding {
        0.0
    } else {
        let dd = [1.0, 0.0];
        let k = traj.arcs.len();
        let mut prod = 1.0;
        for (i, arc) in traj.arcs.iter().enumerate() {
            let field = match arc.field {
                FieldTag::X => &z.x,
                _ => &z.y,
            };
            let a = if i == 0 { section.direction } else { dd };
            let b = if i + 1 == k { section.direction } else { dd };
            prod *= det2(field.eval(arc.start()), a) / det2(field.eval(arc.end()), b) * arc.div_integral.exp();
        }
        prod
    };
    let transversality = cross.abs() / (v0[0].hypot(v0[1]) * section.direction[0].hypot(section.direction[1]));
    Ok(ReturnMap {
        s0,
        s1: section.param(q1),
        time: traj.duration(),
        eta_prime,
        eta_prime_fd: None,
        via_sliding,
        transversality,
        trajectory: traj,
    })
}

/// Return map of the hybrid flow on `section` at parameter `s0`.
pub fn return_map(z: &PiecewiseField, section: &Section, s0: f64, opts: &FlowOptions, tol: &Tolerances) -> Result<ReturnMap, FlowError> {
    let mut r = return_once(z, section, s0, opts, tol)?;
    let h = tol.fd_step * (section.range.1 - section.range.0).abs().max(f64::MIN_POSITIVE);
    let eval = |s: f64| return_once(z, section, s, opts, tol).map(|r| r.s1).ok();
    let central = |h: f64| Some((eval(s0 + h)? - eval(s0 - h)?) / (2.0 * h));
    r.eta_prime_fd = match (central(h), central(0.5 * h)) {
        (Some(d1), Some(d2)) => Some((4.0 * d2 - d1) / 3.0),
        _ => None,
    };
    Ok(r)
}

/// Return of the compactified flow to `theta = 0` after one turn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactifiedReturn {
    pub rho0: f64,
    pub rho1: f64,
    /// Derivative of `rho0 -> rho1`.
    pub eta_prime: f64,
    /// Same derivative on the circle at infinity.
    pub eta_prime_at_infinity: f64,
    /// +1 for counterclockwise turns.
    pub orientation: i8,
}

fn compactified_turn(z: &PiecewiseField, rho0: f64, tol: &Tolerances) -> Result<(f64, f64, i8), FlowError> {
    let tf = compactified_field(z);
    let ccw = tf.x.top_a().eval(0.0) + rho0 * tf.x.a.iter().rev().nth(1).map_or(0.0, |a| a.eval(0.0)) > 0.0;
    let (legs, dir) = if ccw {
        ([(Side::X, 0.0, PI), (Side::Y, PI, 2.0 * PI)], 1.0)
    } else {
        ([(Side::Y, 0.0, -PI), (Side::X, -PI, -2.0 * PI)], -1.0)
    };
    let opts = OdeOptions { rtol: tol.ode_rtol, atol: tol.ode_atol, ..OdeOptions::default() };
    let mut rho = rho0;
    let mut prod = 1.0;
    for (side, a, b) in legs {
        let f = |_t: f64, s: &[f64; 3]| {
            let v = tf.eval_unchecked(side, s[0], s[1]);
            [v[0], v[1], tf.divergence(side, s[0], s[1])]
        };
        let events = [
            Event::new(if ccw { Crossing::Rising } else { Crossing::Falling }, move |_t, s: &[f64; 3]| s[0] - b),
            Event::new(Crossing::Rising, |_t, s: &[f64; 3]| s[1] - 10.0),
        ];
        let sol = solve(f, 0.0, [a, rho, 0.0], 1e4, &events, None, &opts)?;
        if sol.stop != Stop::Event(0) {
            return Err(FlowError::NoReturn("compactified orbit does not complete the half turn"));
        }
        let e = sol.y_end();
        let fa = tf.eval_unchecked(side, a, rho)[0];
        let fb = tf.eval_unchecked(side, b, e[1])[0];
        if fa.abs() <= tol.sign || fb.abs() <= tol.sign {
            return Err(FlowError::NotTransversal { det: fa.min(fb) });
        }
        prod *= fa / fb * e[2].exp();
        rho = e[1];
    }
    Ok((rho, prod, dir as i8))
}

/// Return map of the compactified field on the ray `theta = 0`, started at
/// `rho0`, and its derivative both at `rho0` and on the circle at infinity.
pub fn compactified_return_map(z: &PiecewiseField, rho0: f64, tol: &Tolerances) -> Result<CompactifiedReturn, FlowError> {
    if !(rho0 >= 0.0) {
        return Err(FlowError::InconsistentStart);
    }
    let (rho1, eta_prime, orientation) = compactified_turn(z, rho0, tol)?;
    let (_, eta_inf, _) = compactified_turn(z, 0.0, tol)?;
    Ok(CompactifiedReturn { rho0, rho1, eta_prime, eta_prime_at_infinity: eta_inf, orientation })
}

/// Where to look for closed poly-trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedSearch {
    pub flow: FlowOptions,
    pub sections: Vec<Section>,
    /// Sample count per section for bracketing fixed points.
    pub samples: usize,
    /// Extra seeds on `D`, typically the fold points.
    pub fold_seeds: Vec<f64>,
}

impl ClosedSearch {
    /// Sewing arcs of `D` as sections, vertical half-lines at interior
    /// abscissae, and the given fold points.
    pub fn default_for(z: &PiecewiseField, window: Window, fold_seeds: Vec<f64>, tol: &Tolerances) -> Self {
        let mut sections = Vec::new();
        if let Ok(arcs) = crate::dline::segment_d(z, window.x, tol) {
            for a in arcs.iter().filter(|a| a.class == DClass::Sewing) {
                let pad = 1e-3 * (a.end - a.start);
                sections.push(Section::on_d((a.start + pad, a.end - pad)));
            }
        }
        let (x0, x1) = window.x;
        for k in 1..4 {
            let xc = x0 + (x1 - x0) * k as f64 / 4.0;
            let pad = 0.05 * (window.y.1 - window.y.0);
            sections.push(Section::vertical(xc, (pad, window.y.1 - pad)));
            sections.push(Section::vertical(xc, (window.y.0 + pad, -pad)));
        }
        Self { flow: FlowOptions::new(200.0, window), sections, samples: 24, fold_seeds }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedTrajectory {
    pub trajectory: PolyTrajectory,
    pub kind: Closure,
    pub elementary: Certainty,
    /// Return-map derivative for type 1 and periodic closures.
    pub eta_prime: Option<f64>,
    pub eta_prime_fd: Option<f64>,
    /// Section and parameter of the fixed point, when found on a section.
    pub section: Option<(Section, f64)>,
    /// Found by following the reversed field.
    pub reversed: bool,
}

fn refine_fixed_point(g: &dyn Fn(f64) -> Option<f64>, mut a: f64, mut ga: f64, mut b: f64, mut gb: f64, tol: f64) -> Option<f64> {
    let mut side = 0;
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
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            a = s;
            ga = gs;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
    }
    Some(if ga.abs() < gb.abs() { a } else { b })
}

fn d_crossings(t: &PolyTrajectory) -> Vec<f64> {
    t.arcs.iter().flat_map(|a| [a.start(), a.end()]).filter(|p| p[1] == 0.0).map(|p| p[0]).collect()
}

fn same_orbit(a: &PolyTrajectory, b: &PolyTrajectory, tol: f64) -> bool {
    let (da, db) = (d_crossings(a), d_crossings(b));
    if !da.is_empty() || !db.is_empty() {
        return da.iter().any(|x| db.iter().any(|y| (x - y).abs() <= tol));
    }
    let Some(p) = b.arcs.first().map(|arc| arc.start()) else { return false };
    let pts: Vec<[f64; 2]> = a.points().collect();
    pts.windows(2).any(|w| point_segment_distance(p, w[0], w[1]) <= tol)
}

/// `|eta' - 1|` against `tol.sign` widened by the integrator's error level
/// at the smallest coordinate scale met along the orbit and by the section angle.
fn eta_certainty(r: &ReturnMap, tol: &Tolerances) -> Certainty {
    let eta = r.eta_prime;
    let scale = r.trajectory.points().map(|p| p[0].hypot(p[1])).fold(f64::INFINITY, f64::min).max(f64::MIN_POSITIVE);
    let noise = tol.sign.max(100.0 * (tol.ode_rtol + tol.ode_atol / scale) / r.transversality);
    let gap = (eta - 1.0).abs();
    if gap <= noise {
        Certainty::No
    } else if gap <= 10.0 * noise {
        Certainty::Borderline
    } else {
        Certainty::Yes
    }
}

/// Semi-decision search for closed poly-trajectories: fixed points of the
/// return map on each section plus closures of orbits started at the folds.
pub fn find_closed_polytrajectories(z: &PiecewiseField, search: &ClosedSearch, tol: &Tolerances) -> Vec<ClosedTrajectory> {
    let mut found: Vec<ClosedTrajectory> = Vec::new();
    let opts = &search.flow;
    let push = |found: &mut Vec<ClosedTrajectory>, c: ClosedTrajectory| {
        if !found.iter().any(|f| same_orbit(&f.trajectory, &c.trajectory, 1e3 * tol.close)) {
            found.push(c);
        }
    };
    let n = search.samples.max(2);
    for sec in &search.sections {
        let (s_lo, s_hi) = sec.range;
        let g = |s: f64| return_once(z, sec, s, opts, tol).ok().map(|r| r.s1 - s);
        let grid: Vec<(f64, Option<f64>)> = (0..n).map(|i| s_lo + (s_hi - s_lo) * i as f64 / (n - 1) as f64).map(|s| (s, g(s))).collect();
        let mut candidates = Vec::new();
        for (i, &(s, gs)) in grid.iter().enumerate() {
            let Some(gs) = gs else { continue };
            if gs.abs() <= tol.close {
                candidates.push(s);
            } else if let Some(&(s2, Some(g2))) = grid.get(i + 1) {
                if gs * g2 < 0.0 && g2.abs() > tol.close {
                    if let Some(r) = refine_fixed_point(&g, s, gs, s2, g2, tol.root) {
                        candidates.push(r);
                    }
                }
            }
        }
        for s in candidates {
            let Ok(r) = return_map(z, sec, s, opts, tol) else { continue };
            if (r.s1 - s).abs() > tol.close {
                continue;
            }
            let certainty = eta_certainty(&r, tol);
            let mut traj = r.trajectory;
            let kind = if traj.has_sliding() {
                Closure::Type3
            } else if traj.events.iter().any(|e| e.kind == EventKind::CrossingAtSewing) {
                Closure::Type1
            } else {
                Closure::Periodic
            };
            traj.closed = kind;
            let elementary = if kind == Closure::Type3 { Certainty::Yes } else { certainty };
            push(
                &mut found,
                ClosedTrajectory {
                    trajectory: traj,
                    kind,
                    elementary,
                    eta_prime: Some(r.eta_prime),
                    eta_prime_fd: r.eta_prime_fd,
                    section: Some((*sec, s)),
                    reversed: false,
                },
            );
        }
    }
    for (field, reversed) in [(z.clone(), false), (z.time_reversed(), true)] {
        for &x in &search.fold_seeds {
            let Ok(traj) = advance_hybrid(&field, [x, 0.0], StartSide::D, opts, tol) else { continue };
            if traj.closed == Closure::No {
                continue;
            }
            let kind = traj.closed;
            let elementary = if kind == Closure::Type3 { Certainty::Yes } else { Certainty::Borderline };
            push(&mut found, ClosedTrajectory { trajectory: traj, kind, elementary, eta_prime: None, eta_prime_fd: None, section: None, reversed });
        }
    }
    found
}

/// Saddle whose separatrices are probed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SaddleOrigin {
    /// Hyperbolic saddle of `X` on `N` or of `Y` on `S`.
    Interior { side: Side, point: [f64; 2] },
    /// Zero of `F_Z` on a sliding or escaping arc.
    Fz { x: f64 },
}

impl SaddleOrigin {
    pub fn point(&self) -> [f64; 2] {
        match *self {
            SaddleOrigin::Interior { point, .. } => point,
            SaddleOrigin::Fz { x } => [x, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchKind {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatrixProbe {
    pub saddle: usize,
    pub kind: BranchKind,
    pub start: [f64; 2],
    /// Points in flow order of the traced branch (time reversed for stable branches).
    pub trace: Vec<[f64; 2]>,
    pub end: Option<EventKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionReport {
    pub saddles: Vec<SaddleOrigin>,
    pub probes: Vec<SeparatrixProbe>,
    /// `distances[i][j]`: unstable probe `unstable[i]` against stable probe `stable[j]`.
    pub unstable: Vec<usize>,
    pub stable: Vec<usize>,
    pub distances: Vec<Vec<f64>>,
    /// Pairs `(unstable probe, stable probe, distance)` below `tol.connect`.
    pub possible_connections: Vec<(usize, usize, f64)>,
}

fn branch_starts(z: &PiecewiseField, s: &SaddleOrigin, delta: f64) -> Vec<(BranchKind, [f64; 2], StartSide)> {
    let side_of = |p: [f64; 2]| {
        if p[1] > 0.0 {
            StartSide::N
        } else if p[1] < 0.0 {
            StartSide::S
        } else {
            StartSide::D
        }
    };
    match *s {
        SaddleOrigin::Interior { side, point } => {
            let j = z.side(side).jacobian_at(point);
            let e = eigen(&j);
            if !e.is_real() || e.values[0].0 * e.values[1].0 >= 0.0 {
                return Vec::new();
            }
            let mut out = Vec::new();
            for (lam, kind) in [(e.values[0].0, BranchKind::Stable), (e.values[1].0, BranchKind::Unstable)] {
                let v = eigenvector(&j, lam);
                for sgn in [1.0, -1.0] {
                    let p = [point[0] + sgn * delta * v[0], point[1] + sgn * delta * v[1]];
                    out.push((kind, p, side_of(p)));
                }
            }
            out
        }
        SaddleOrigin::Fz { x } => {
            let xf = z.x.q.eval(x, 0.0);
            let yf = z.y.q.eval(x, 0.0);
            let h = 1e-6 * x.abs().max(1.0);
            let vp = (sliding_velocity(z, x + h) - sliding_velocity(z, x - h)) / (2.0 * h);
            let sliding = xf < 0.0 && yf > 0.0;
            // roles along D come from the sliding dynamics, across D from the class
            let (along, across) = match (sliding, vp > 0.0) {
                (true, true) => (BranchKind::Unstable, BranchKind::Stable),
                (false, false) => (BranchKind::Stable, BranchKind::Unstable),
                _ => return Vec::new(),
            };
            vec![
                (along, [x - delta, 0.0], StartSide::D),
                (along, [x + delta, 0.0], StartSide::D),
                (across, [x, delta], StartSide::N),
                (across, [x, -delta], StartSide::S),
            ]
        }
    }
}

/// Whether `s` has saddle dynamics and so carries separatrices.
pub fn has_separatrices(z: &PiecewiseField, s: &SaddleOrigin, tol: &Tolerances) -> bool {
    !branch_starts(z, s, tol.separatrix_offset).is_empty()
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0) };
    dist(p, [a[0] + t * d[0], a[1] + t * d[1]])
}

/// Minimum distance between two polylines, ignoring points within `exclude`
/// of `center`.
fn polyline_distance(a: &[[f64; 2]], b: &[[f64; 2]], center: Option<([f64; 2], f64)>) -> f64 {
    const CELL: f64 = 0.05;
    let keep = |p: [f64; 2]| center.map_or(true, |(c, r)| dist(p, c) > r);
    let key = |p: [f64; 2]| ((p[0] / CELL).floor() as i64, (p[1] / CELL).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, w) in b.windows(2).enumerate() {
        if !keep(w[0]) && !keep(w[1]) {
            continue;
        }
        let (k0, k1) = (key(w[0]), key(w[1]));
        for cx in k0.0.min(k1.0)..=k0.0.max(k1.0) {
            for cy in k0.1.min(k1.1)..=k0.1.max(k1.1) {
                grid.entry((cx, cy)).or_default().push(i);
            }
        }
    }
    let mut best = f64::INFINITY;
    for &p in a.iter().filter(|p| keep(**p)) {
        let k = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(segs) = grid.get(&(k.0 + dx, k.1 + dy)) {
                    for &i in segs {
                        best = best.min(point_segment_distance(p, b[i], b[i + 1]));
                    }
                }
            }
        }
    }
    if best.is_infinite() {
        // nothing within one cell: fall back to the coarse bound
        for &p in a.iter().filter(|p| keep(**p)) {
            for w in b.windows(2) {
                best = best.min(point_segment_distance(p, w[0], w[1]));
            }
        }
    }
    best
}

/// Trace every separatrix branch of `saddles` and measure how close each
/// unstable branch comes to each stable branch.
pub fn probe_saddle_connections(z: &PiecewiseField, saddles: &[SaddleOrigin], opts: &FlowOptions, tol: &Tolerances) -> ConnectionReport {
    let reversed = z.time_reversed();
    let mut probes = Vec::new();
    let traced = FlowOptions { h_max: Some(opts.h_max.unwrap_or(0.02)), ..*opts };
    for (si, s) in saddles.iter().enumerate() {
        for (kind, p, side) in branch_starts(z, s, tol.separatrix_offset) {
            let field = if kind == BranchKind::Unstable { z } else { &reversed };
            let (trace, end) = match advance_hybrid(field, p, side, &traced, tol) {
                Ok(t) => {
                    let mut pts: Vec<[f64; 2]> = t.points().collect();
                    pts.dedup();
                    (pts, t.last_event())
                }
                Err(_) => (vec![p], None),
            };
            probes.push(SeparatrixProbe { saddle: si, kind, start: p, trace, end });
        }
    }
    let unstable: Vec<usize> = (0..probes.len()).filter(|&i| probes[i].kind == BranchKind::Unstable).collect();
    let stable: Vec<usize> = (0..probes.len()).filter(|&i| probes[i].kind == BranchKind::Stable).collect();
    let mut distances = vec![vec![f64::INFINITY; stable.len()]; unstable.len()];
    let mut possible = Vec::new();
    for (i, &u) in unstable.iter().enumerate() {
        for (j, &s) in stable.iter().enumerate() {
            let (pu, ps) = (&probes[u], &probes[s]);
            let shared = (pu.saddle == ps.saddle).then(|| (saddles[pu.saddle].point(), 0.05));
            let d = polyline_distance(&pu.trace, &ps.trace, shared);
            distances[i][j] = d;
            if d <= tol.connect {
                possible.push((u, s, d));
            }
        }
    }
    ConnectionReport { saddles: saddles.to_vec(), probes, unstable, stable, distances, possible_connections: possible }
}

/// Dynamic type of a planar singular point `p` of `field`.
pub fn point_type(field: &PolyVectorField, p: [f64; 2], tol: &Tolerances) -> PointType {
    eigen(&field.jacobian_at(p)).classify(tol.sign)
}

//! Dormand-Prince 5(4) integrator with event localization.
//!
//! Events are zero crossings of scalar functions `g(t, y)`. A crossing found
//! over an accepted step is localized by Illinois iteration on fresh
//! Runge-Kutta steps from the start of that step, so the returned event state
//! carries full fifth-order accuracy.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Budget of accepted steps.
    pub max_steps: usize,
    /// Largest allowed |h|; `None` means the whole span.
    pub h_max: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, max_steps: 10_000, h_max: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    /// `g` goes from negative to non-negative.
    Rising,
    /// `g` goes from positive to non-positive.
    Falling,
    Any,
}

impl Crossing {
    fn fires(self, g0: f64, g1: f64) -> bool {
        let rising = g0 < 0.0 && g1 >= 0.0;
        let falling = g0 > 0.0 && g1 <= 0.0;
        match self {
            Crossing::Rising => rising,
            Crossing::Falling => falling,
            Crossing::Any => rising || falling,
        }
    }
}

pub struct Event<'a, const N: usize> {
    pub g: Box<dyn Fn(f64, &[f64; N]) -> f64 + 'a>,
    pub crossing: Crossing,
}

impl<'a, const N: usize> Event<'a, N> {
    pub fn new(crossing: Crossing, g: impl Fn(f64, &[f64; N]) -> f64 + 'a) -> Self {
        Self { g: Box::new(g), crossing }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    /// Event `index` fired.
    Event(usize),
    Horizon,
    StepBudget,
    /// The caller's stop predicate returned true after an accepted step.
    Predicate,
}

#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    /// Accepted step endpoints, starting with the initial state.
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub stop: Stop,
    pub steps: usize,
}

impl<const N: usize> Solution<N> {
    pub fn t_end(&self) -> f64 {
        *self.t.last().expect("solution holds the initial state")
    }

    pub fn y_end(&self) -> [f64; N] {
        *self.y.last().expect("solution holds the initial state")
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One Dormand-Prince step: `(y1, error estimate)`.
pub fn dopri_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], h: f64) -> ([f64; N], [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut k = [[0.0; N]; 7];
    k[0] = f(t, y);
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..N {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = f(t + C[s] * h, &ys);
    }
    let mut y1 = *y;
    let mut err = [0.0; N];
    for s in 0..7 {
        for i in 0..N {
            if s < 6 {
                y1[i] += h * A[6][s] * k[s][i];
            }
            err[i] += h * E[s] * k[s][i];
        }
    }
    (y1, err)
}

fn error_norm<const N: usize>(y0: &[f64; N], y1: &[f64; N], err: &[f64; N], o: &OdeOptions) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = o.atol + o.rtol * y0[i].abs().max(y1[i].abs());
        acc += (err[i] / sc).powi(2);
    }
    (acc / N as f64).sqrt()
}

/// Integrate `y' = f(t, y)` from `t0` toward `t_end` (either direction) until
/// the horizon, the first event, the stop predicate, or the step budget.
pub fn solve<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    events: &[Event<'_, N>],
    stop_when: Option<&dyn Fn(f64, &[f64; N]) -> bool>,
    opts: &OdeOptions,
) -> Result<Solution<N>, OdeError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut sol = Solution { t: vec![t0], y: vec![y0], stop: Stop::Horizon, steps: 0 };
    let span = t_end - t0;
    if span == 0.0 {
        return Ok(sol);
    }
    let dir = span.signum();
    let h_max = opts.h_max.unwrap_or(span.abs()).min(span.abs());
    let mut t = t0;
    let mut y = y0;
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.g)(t, &y)).collect();

    let f0 = f(t, &y);
    let d0 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let d1 = f0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut h = if d0 > 1e-5 && d1 > 1e-5 { 0.01 * d0 / d1 } else { 1e-4 };
    h = h.min(h_max) * dir;

    while sol.steps < opts.max_steps {
        let remaining = t_end - t;
        if remaining * dir <= 0.0 {
            return Ok(sol);
        }
        let last = h.abs() >= remaining.abs();
        if last {
            h = remaining;
        }
        let (y1, err) = dopri_step(&f, t, &y, h);
        if y1.iter().any(|v| !v.is_finite()) {
            if h.abs() < 1e-14 * t.abs().max(1.0) {
                return Err(OdeError::NonFinite { t });
            }
            h *= 0.25;
            continue;
        }
        let en = error_norm(&y, &y1, &err, opts);
        if en > 1.0 {
            let fac = (0.9 * en.powf(-0.2)).clamp(0.1, 0.9);
            h *= fac;
            if h.abs() < 1e-14 * t.abs().max(1.0) {
                return Err(OdeError::StepUnderflow { t });
            }
            continue;
        }
        let t1 = if last { t_end } else { t + h };

        // earliest event in (t, t1]
        let mut hit: Option<(usize, f64, [f64; N])> = None;
        let mut g_new = Vec::with_capacity(events.len());
        for (idx, ev) in events.iter().enumerate() {
            let g1 = (ev.g)(t1, &y1);
            g_new.push(g1);
            if ev.crossing.fires(g_prev[idx], g1) {
                let (s, ys) = localize(&f, ev, t, &y, t1 - t, g_prev[idx], g1, &y1);
                if hit.as_ref().map_or(true, |(_, hs, _)| s.abs() < hs.abs()) {
                    hit = Some((idx, s, ys));
                }
            }
        }
        sol.steps += 1;
        if let Some((idx, s, ye)) = hit {
            sol.t.push(t + s);
            sol.y.push(ye);
            sol.stop = Stop::Event(idx);
            return Ok(sol);
        }
        t = t1;
        y = y1;
        g_prev = g_new;
        sol.t.push(t);
        sol.y.push(y);
        if let Some(pred) = stop_when {
            if pred(t, &y) {
                sol.stop = Stop::Predicate;
                return Ok(sol);
            }
        }
        if last {
            return Ok(sol);
        }
        let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * fac).abs().min(h_max) * dir;
    }
    sol.stop = Stop::StepBudget;
    Ok(sol)
}

#[allow(clippy::too_many_arguments)]
fn localize<const N: usize, F>(
    f: &F,
    ev: &Event<'_, N>,
    t: f64,
    y: &[f64; N],
    h: f64,
    g0: f64,
    g1: f64,
    y1: &[f64; N],
) -> (f64, [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if g1 == 0.0 {
        return (h, *y1);
    }
    let eval = |s: f64| -> ([f64; N], f64) {
        let (ys, _) = dopri_step(f, t, y, s);
        let g = (ev.g)(t + s, &ys);
        (ys, g)
    };
    // Illinois false position on s in (0, h]
    let (mut a, mut ga) = (0.0, g0);
    let (mut b, mut gb, mut yb) = (h, g1, *y1);
    let mut side = 0;
    for _ in 0..200 {
        if (b - a).abs() <= 4.0 * f64::EPSILON * (t.abs() + b.abs()).max(1e-300) {
            break;
        }
        let mut s = (a * gb - b * ga) / (gb - ga);
        if !(s.is_finite()) || (s - a) * (s - b) >= 0.0 {
            s = 0.5 * (a + b);
        }
        let (ys, gs) = eval(s);
        if gs == 0.0 {
            return (s, ys);
        }
        if (gs > 0.0) == (gb > 0.0) {
            b = s;
            gb = gs;
            yb = ys;
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
    (b, yb)
}

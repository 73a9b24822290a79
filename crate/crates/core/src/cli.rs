//! The `filippov` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::fieldspec::{parse_list, parse_pair, parse_phi, parse_window, window_from, FieldSpec};
use crate::flow::{advance_hybrid, Closure, FieldTag, FlowOptions, Section, StartSide, TrajectoryEvent, Window};
use crate::portrait::{render_svg, PortraitOptions};
use crate::regularize::{epsilon_sweep, make_transition, regularized_cycle_search, RegularizedField, TransitionFamily};
use crate::report::{num, to_json, write_atomic};
use crate::stability::{check_gm, default_box, GmOptions, StabilityReport, Status};
use crate::tolerances::Tolerances;

pub const EXIT_SATISFIED: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_UNDETERMINED: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "filippov", version, about = "Analyze piecewise polynomial planar vector fields split along y = 0")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Census of singular points and closed orbits, written as a JSON report.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Report clean closed-orbit and connection searches as satisfied.
        #[arg(long)]
        optimistic: bool,
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Integrate one trajectory to CSV, with events in a sidecar JSON file.
    Flow {
        #[command(flatten)]
        common: Common,
        /// Start point `x,y`.
        #[arg(long, allow_hyphen_values = true)]
        seed: Option<String>,
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Phase portrait as SVG.
    Portrait {
        #[command(flatten)]
        common: Common,
        /// Streak seeds per axis and side.
        #[arg(long, default_value_t = 12)]
        grid: usize,
        /// Add the compactified disk panel.
        #[arg(long)]
        compactified: bool,
    },
    /// Singularities and cycles of the regularized field along a list of epsilons.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated, positive and strictly descending.
        #[arg(long)]
        eps: Option<String>,
        /// `smoothstepN` or `bump`.
        #[arg(long)]
        phi: Option<String>,
        /// Point `x,y` whose vertical section is searched for a cycle.
        #[arg(long, allow_hyphen_values = true)]
        seed: Option<String>,
        #[arg(long)]
        horizon: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Field specification (text or JSON).
    spec: PathBuf,
    /// `X0,X1,Y0,Y1`.
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    /// Output path; defaults to one derived from the spec path.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with its exit code.
struct Fail(i32, String);

fn input(msg: impl Into<String>) -> Fail {
    Fail(EXIT_INPUT, msg.into())
}

fn runtime(msg: impl ToString) -> Fail {
    Fail(EXIT_RUNTIME, msg.to_string())
}

struct Loaded {
    spec: FieldSpec,
    tol: Tolerances,
    window: Window,
}

/// `empty_window` admits a degenerate `--window`, which only the portrait renders.
fn load(common: &Common, empty_window: bool) -> Result<Loaded, Fail> {
    let text = std::fs::read_to_string(&common.spec).map_err(|e| input(format!("{}: {e}", common.spec.display())))?;
    let spec = FieldSpec::parse(&text).map_err(|e| input(format!("{}: {e}", common.spec.display())))?;
    let mut tol = Tolerances::from_env();
    if let Some(s) = spec.options.tolerance_scale {
        tol = tol.scaled(s);
    }
    let window = match (&common.window, spec.options.window) {
        (Some(w), _) => {
            let w = parse_window(w).map_err(|e| input(format!("--window: {e}")))?;
            if !empty_window && !(w[0] < w[1] && w[2] < w[3]) {
                return Err(input("--window: need X0 < X1 and Y0 < Y1"));
            }
            window_from(w)
        }
        (None, Some(w)) => window_from(w),
        (None, None) => default_box(&spec.to_field()),
    };
    Ok(Loaded { spec, tol, window })
}

fn out_path(common: &Common, suffix: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| common.spec.with_extension(suffix))
}

fn write(path: &Path, contents: &str) -> Result<(), Fail> {
    write_atomic(path, contents.as_bytes()).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn seed_of(flag: &Option<String>, spec: &FieldSpec) -> Result<Option<[f64; 2]>, Fail> {
    match flag {
        Some(s) => parse_pair(s).map(Some).map_err(|e| input(format!("--seed: {e}"))),
        None => Ok(spec.options.seed),
    }
}

#[derive(Serialize)]
struct AnalyzeOutput<'a> {
    spec: &'a FieldSpec,
    report: &'a StabilityReport,
}

fn exit_for(status: Status) -> i32 {
    match status {
        Status::Satisfied => EXIT_SATISFIED,
        Status::Violated => EXIT_VIOLATED,
        Status::Undetermined => EXIT_UNDETERMINED,
    }
}

fn analyze(common: &Common, optimistic: bool, horizon: Option<f64>) -> Result<i32, Fail> {
    let l = load(common, false)?;
    let z = l.spec.to_field();
    let mut opts = GmOptions { window: Some(l.window), optimistic, ..GmOptions::default() };
    if let Some(h) = horizon.or(l.spec.options.horizon) {
        opts.horizon = h;
    }
    let report = check_gm(&z, &opts, &l.tol);
    write(&out_path(common, "report.json"), &to_json(&AnalyzeOutput { spec: &l.spec, report: &report }))?;
    Ok(exit_for(report.overall))
}

#[derive(Serialize)]
struct FlowEvents<'a> {
    seed: [f64; 2],
    horizon: f64,
    closed: Closure,
    non_unique_forward: bool,
    events: &'a [TrajectoryEvent],
}

fn tag(f: FieldTag) -> &'static str {
    match f {
        FieldTag::X => "X",
        FieldTag::Y => "Y",
        FieldTag::Fz => "Fz",
    }
}

fn flow(common: &Common, seed: &Option<String>, horizon: Option<f64>) -> Result<i32, Fail> {
    let l = load(common, false)?;
    let p0 = seed_of(seed, &l.spec)?.ok_or_else(|| input("no seed: pass --seed x,y or set it in [options]"))?;
    if !l.window.contains(p0) {
        return Err(input(format!("seed ({}, {}) lies outside the window", p0[0], p0[1])));
    }
    let horizon = horizon.or(l.spec.options.horizon).unwrap_or(20.0);
    if !(horizon > 0.0) {
        return Err(input("--horizon must be positive"));
    }
    let start = if p0[1] > 0.0 {
        StartSide::N
    } else if p0[1] < 0.0 {
        StartSide::S
    } else {
        StartSide::D
    };
    let z = l.spec.to_field();
    let traj = advance_hybrid(&z, p0, start, &FlowOptions::new(horizon, l.window), &l.tol).map_err(runtime)?;
    let mut csv = String::from("t,x,y,field_tag\n");
    for arc in &traj.arcs {
        for (t, p) in &arc.samples {
            writeln!(csv, "{},{},{},{}", num(*t), num(p[0]), num(p[1]), tag(arc.field)).unwrap();
        }
    }
    let path = out_path(common, "flow.csv");
    write(&path, &csv)?;
    let events = FlowEvents { seed: p0, horizon, closed: traj.closed, non_unique_forward: traj.non_unique_forward, events: &traj.events };
    write(&path.with_extension("events.json"), &to_json(&events))?;
    Ok(0)
}

fn portrait(common: &Common, grid: usize, compactified: bool) -> Result<i32, Fail> {
    let l = load(common, true)?;
    let opts = PortraitOptions { grid, compactified, ..PortraitOptions::new(l.window) };
    write(&out_path(common, "svg"), &render_svg(&l.spec.to_field(), &opts, &l.tol))?;
    Ok(0)
}

fn sweep(common: &Common, eps: &Option<String>, phi: &Option<String>, seed: &Option<String>, horizon: Option<f64>) -> Result<i32, Fail> {
    let l = load(common, false)?;
    let eps = match eps {
        Some(s) => parse_list(s).map_err(|e| input(format!("--eps: {e}")))?,
        None => l.spec.options.eps.clone().unwrap_or_default(),
    };
    if eps.is_empty() {
        return Err(input("empty epsilon list"));
    }
    if eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(input("epsilon list must be positive and strictly descending"));
    }
    let family = match phi.as_ref().or(l.spec.options.phi.as_ref()) {
        Some(p) => parse_phi(p).map_err(|e| input(format!("--phi: {e}")))?,
        None => TransitionFamily::SmoothstepN(1),
    };
    let phi = make_transition(family).map_err(|e| input(e.to_string()))?;
    let seed = seed_of(seed, &l.spec)?;
    if seed.is_some_and(|s| s[1] == 0.0) {
        return Err(input("cycle seed must lie off y = 0"));
    }
    let z = l.spec.to_field();
    let table = epsilon_sweep(&z, &phi, l.window.x, &eps, &l.tol).map_err(runtime)?;
    let mut csv = String::from("kind,epsilon,x,y,type,re1,im1,re2,im2,period,derivative\n");
    for row in &table.rows {
        for s in &row.singularities {
            let [(a, b), (c, d)] = s.eigenvalues.values;
            writeln!(
                csv,
                "singularity,{},{},{},{:?},{},{},{},{},,",
                num(row.epsilon),
                num(s.position[0]),
                num(s.position[1]),
                s.kind,
                num(a),
                num(b),
                num(c),
                num(d)
            )
            .unwrap();
        }
    }
    if let Some(p) = seed {
        let (a, b) = (0.5 * p[1], 1.5 * p[1]);
        let section = Section::vertical(p[0], (a.min(b), a.max(b)));
        let opts = FlowOptions::new(horizon.or(l.spec.options.horizon).unwrap_or(100.0), l.window);
        for &e in &eps {
            let r = RegularizedField::new(z.clone(), phi.clone(), e).map_err(runtime)?;
            if let Ok(Some(c)) = regularized_cycle_search(&r, &section, &opts, &l.tol) {
                writeln!(
                    csv,
                    "cycle,{},{},{},{:?},,,,,{},{}",
                    num(e),
                    num(c.point[0]),
                    num(c.point[1]),
                    c.hyperbolic,
                    num(c.period),
                    num(c.derivative)
                )
                .unwrap();
            }
        }
    }
    write(&out_path(common, "sweep.csv"), &csv)?;
    Ok(0)
}

/// Run the command line `args` (program name first) and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Analyze { common, optimistic, horizon } => analyze(common, *optimistic, *horizon),
        Command::Flow { common, seed, horizon } => flow(common, seed, *horizon),
        Command::Portrait { common, grid, compactified } => portrait(common, *grid, *compactified),
        Command::Sweep { common, eps, phi, seed, horizon } => sweep(common, eps, phi, seed, *horizon),
    };
    match result {
        Ok(code) => code,
        Err(Fail(code, msg)) => {
            eprintln!("filippov: {msg}");
            code
        }
    }
}

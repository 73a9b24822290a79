//! Acceptance suite: one pass/fail line per criterion.

mod common;

use std::f64::consts::{E, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};

use common::*;
use filippov::cli;
use filippov::compactify::{
    compactified_field, filippov_point_value, pullback_check, s1_elementarity, trig_coefficients, S1Status,
};
use filippov::dline::{classify_point, filippov_field};
use filippov::fieldspec::FieldSpec;
use filippov::flow::{compactified_return_map, return_map, transition_derivative, FlowOptions, Section, Window};
use filippov::linalg::PointType;
use filippov::ode::{solve, Crossing, Event, OdeOptions, Stop};
use filippov::poly::{PiecewiseField, PolyVectorField, Side};
use filippov::regularize::{
    emergent_singularities, epsilon_sweep, make_transition, regularized_cycle_search, RegularizedField,
    TransitionFamily,
};
use filippov::report::to_json;
use filippov::stability::{
    apply_perturbation, check_gm, genericity_repair, undo_rotate_translate, GmOptions, Perturbation, Status,
    Witness,
};
use filippov::tolerances::{Certainty, Tolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Sliding and escaping samples of random fields.
fn criterion_1() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = tol();
    let mut samples = 0;
    for _ in 0..1000 {
        let z = random_field(&mut rng, 4);
        for _ in 0..20 {
            let x = rng.gen_range(-2.0..2.0);
            let c = classify_point(&z, x, &t);
            if !c.tag.is_sliding_or_escaping() {
                continue;
            }
            let f = filippov_field(&z, x, &t).expect("sliding or escaping point");
            assert_eq!(f.value[1], 0.0);
            assert!(f.lambda > 0.0 && f.lambda < 1.0, "lambda = {}", f.lambda);
            let (p1, q1, p2, q2) = (z.x.p.eval(x, 0.0), c.xf, z.y.p.eval(x, 0.0), c.yf);
            let det = p1 * q2 - q1 * p2;
            let scale = (p1 * q2).abs() + (q1 * p2).abs();
            assert!((f.value[0] * (c.yf - c.xf) - det).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE), "x = {x}");
            samples += 1;
        }
    }
    assert!(samples > 1000);
    format!("{samples} sliding/escaping samples")
}

fn criterion_2() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let t = tol();
    let mut worst_angle: f64 = 0.0;
    for _ in 0..1000 {
        let z = random_field(&mut rng, 4);
        let theta: f64 = rng.gen_range(0.0..2.0 * PI);
        let (s, c) = theta.sin_cos();
        let side = if s >= 0.0 { Side::X } else { Side::Y };
        let f = z.side(side);
        let co = trig_coefficients(f, side);
        for k in 0..=f.degree() {
            let pk = f.p.homogeneous_part(k).eval(c, s);
            let qk = f.q.homogeneous_part(k).eval(c, s);
            let (a, r) = (co.a[k as usize].eval(theta), co.r[k as usize].eval(theta));
            let lhs = a * a + r * r;
            let rhs = pk * pk + qk * qk;
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300), "k = {k}");
        }
        assert_eq!(compactified_field(&z).eval(theta, 0.0)[1], 0.0);
        if s.abs() > 1e-3 {
            let rho = rng.gen_range(0.05..2.0);
            let planar = f.eval([c / rho, s / rho]);
            if planar[0].hypot(planar[1]) > 1e-6 {
                let angle = pullback_check(&z, theta, rho, &t).unwrap();
                worst_angle = worst_angle.max(angle);
            }
        }
    }
    assert!(worst_angle <= 1e-8, "angle {worst_angle}");
    format!("worst pullback angle {worst_angle:.1e}")
}

fn focus_tangency() -> PiecewiseField {
    PiecewiseField::new(field(&[(-1.0, 0, 1), (1.0, 1, 0)], &[(1.0, 1, 0), (1.0, 0, 1)]), rotation())
}

fn criterion_3() -> String {
    let z = focus_tangency();
    let s = s1_elementarity(&z, &tol()).unwrap();
    let mu = s.mu.unwrap();
    assert!((mu - PI).abs() <= 1e-8);
    assert_eq!(s.status, S1Status::Elementary);
    let target = (-PI).exp();
    assert!(rel(s.derivative.unwrap(), target) < 1e-12);
    let r = compactified_return_map(&z, 0.05, &tol()).unwrap();
    assert!(rel(r.eta_prime, target) < 1e-3, "{}", r.eta_prime);
    format!("mu - pi = {:.1e}, return map at rho0 = 0.05 off by {:.1e}", mu - PI, rel(r.eta_prime, target))
}

fn criterion_4() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let z = random_field(&mut rng, 4);
        let scale = 1.0 + filippov_point_value(&z).abs();
        assert!((filippov_point_value(&z) + filippov_point_value(&z.swapped())).abs() <= 1e-12 * scale);
        let same = PiecewiseField::new(z.x.clone(), z.x.clone());
        assert_eq!(filippov_point_value(&same), 0.0);
    }
    let a = PiecewiseField::new(field(&[(1.0, 1, 0), (-1.0, 0, 1)], &[(1.0, 1, 0), (1.0, 0, 1)]), rotation());
    let b = PiecewiseField::new(field(&[(1.0, 1, 0)], &[]), field(&[], &[(1.0, 1, 0)]));
    assert_eq!(filippov_point_value(&a), 1.0);
    assert_eq!(filippov_point_value(&b), 1.0);
    "antisymmetric on 1000 fields, zero for X = Y, both examples give 1".into()
}

fn criterion_5() -> String {
    let t = tol();
    let phi = make_transition(TransitionFamily::SmoothstepN(1)).unwrap();
    let eps_list = [0.2, 0.1, 0.05, 0.025];
    let d_regular = PiecewiseField::new(PolyVectorField::constant(1.0, -1.0), PolyVectorField::constant(1.0, 1.0));
    let fold = PiecewiseField::new(field(&[(1.0, 0, 0)], &[(1.0, 1, 0)]), PolyVectorField::constant(0.0, 1.0));
    for (z, w) in [(&d_regular, (-2.0, 2.0)), (&fold, (-1.0, 1.0))] {
        for &e in &eps_list {
            let r = RegularizedField::new(z.clone(), phi.clone(), e).unwrap();
            assert!(emergent_singularities(&r, w, &t).unwrap().singularities.is_empty(), "eps = {e}");
        }
    }
    let saddle = PiecewiseField::new(field(&[(1.0, 1, 0)], &[(-1.0, 0, 0)]), PolyVectorField::constant(1.0, 1.0));
    let sweep = epsilon_sweep(&saddle, &phi, (-2.0, 0.0), &eps_list, &t).unwrap();
    for row in &sweep.rows {
        assert_eq!(row.singularities.len(), 1);
        assert_eq!(row.singularities[0].kind, PointType::Saddle);
    }
    assert!(sweep.distances_non_increasing);

    let opts = FlowOptions::new(100.0, Window::square(3.0));
    let sec = Section::vertical(0.0, (0.5, 1.5));
    let two_sided = PiecewiseField::new(limit_cycle(), rotation());
    let r = RegularizedField::new(two_sided, phi.clone(), 0.05).unwrap();
    let c = regularized_cycle_search(&r, &sec, &opts, &t).unwrap().expect("two-sided cycle");
    assert_eq!(c.hyperbolic, Certainty::Yes);
    assert!(c.derivative < 1.0);
    let control = PiecewiseField::new(limit_cycle(), limit_cycle());
    let r = RegularizedField::new(control, phi, 0.1).unwrap();
    let k = regularized_cycle_search(&r, &sec, &opts, &t).unwrap().expect("continuous cycle");
    let target = (-4.0 * PI).exp();
    assert!(rel(k.derivative, target) < 1e-3, "{}", k.derivative);
    format!("two-sided cycle derivative {:.4}, control off by {:.1e}", c.derivative, rel(k.derivative, target))
}

/// Where the flow of `f` from `p` meets the line through `p1` along `d1`,
/// as a parameter along `d1`.
fn hit(f: &PolyVectorField, p: [f64; 2], p1: [f64; 2], d1: [f64; 2], t_span: f64) -> f64 {
    let opts = OdeOptions { rtol: 1e-12, atol: 1e-14, ..OdeOptions::default() };
    let rhs = |_t: f64, s: &[f64; 2]| f.eval(*s);
    let half = solve(rhs, 0.0, p, 0.5 * t_span, &[], None, &opts).unwrap().y_end();
    let g = Event::new(Crossing::Any, |_t, s: &[f64; 2]| d1[0] * (s[1] - p1[1]) - d1[1] * (s[0] - p1[0]));
    let sol = solve(rhs, 0.5 * t_span, half, 2.0 * t_span, &[g], None, &opts).unwrap();
    assert_eq!(sol.stop, Stop::Event(0));
    let q = sol.y_end();
    ((q[0] - p1[0]) * d1[0] + (q[1] - p1[1]) * d1[1]) / (d1[0] * d1[0] + d1[1] * d1[1])
}

fn criterion_6() -> String {
    let t = tol();
    let shear = field(&[(1.0, 0, 0)], &[(1.0, 1, 0)]);
    let cases: [(PolyVectorField, [f64; 2], [f64; 2], [f64; 2], [f64; 2], f64, Option<f64>); 3] = [
        (field(&[(1.0, 1, 0)], &[(1.0, 0, 1)]), [1.0, 0.0], [E, 0.0], [0.0, 1.0], [0.0, 1.0], 1.0, Some(E)),
        (rotation(), [1.0, 0.0], [-1.0, 0.0], [1.0, 0.0], [-1.0, 0.0], PI, Some(1.0)),
        (shear, [0.0, 0.0], [1.0, 0.5], [0.0, 1.0], [0.0, 1.0], 1.0, Some(1.0)),
    ];
    let mut worst: f64 = 0.0;
    for (f, p0, p1, d0, d1, ts, exact) in cases {
        let d = transition_derivative(&f, p0, p1, d0, d1, ts, &t).unwrap();
        let h = 1e-5;
        let shifted = |s: f64| [p0[0] + s * d0[0], p0[1] + s * d0[1]];
        let fd = (hit(&f, shifted(h), p1, d1, ts) - hit(&f, shifted(-h), p1, d1, ts)) / (2.0 * h);
        worst = worst.max(rel(d, fd));
        assert!(rel(d, fd) < 1e-4, "{d} vs {fd}");
        if let Some(x) = exact {
            assert!(rel(d, x) < 1e-8);
        }
    }
    let z = PiecewiseField::new(limit_cycle(), limit_cycle());
    let r = return_map(&z, &Section::vertical(0.0, (0.2, 2.0)), 1.0, &FlowOptions::new(100.0, Window::square(3.0)), &t).unwrap();
    let fd = r.eta_prime_fd.unwrap();
    assert!(rel(r.eta_prime, fd) < 1e-4 || (r.eta_prime - fd).abs() < 1e-8);
    format!("worst formula/finite-difference gap {worst:.1e}")
}

fn limit_cycle_field() -> PiecewiseField {
    PiecewiseField::new(limit_cycle(), limit_cycle())
}

fn criterion_7() -> String {
    let t = tol();
    let opts = GmOptions::default();
    let r = check_gm(&focus_tangency(), &opts, &t);
    assert_eq!(r.gm1.status, Status::Violated);
    let d = r.gm1.part("d_singularities").unwrap();
    assert_eq!(d.status, Status::Violated);
    assert!(matches!(d.witnesses[..], [Witness::DSingularity { x, .. }] if x.abs() < 1e-9));
    assert_eq!(to_json(&r), to_json(&check_gm(&focus_tangency(), &opts, &t)));

    let c = PolyVectorField::constant(1.0, 1.0);
    let constant = PiecewiseField::new(c.clone(), c);
    let r = check_gm(&constant, &opts, &t);
    assert_eq!(r.gm1.part("infinity").unwrap().status, Status::Undetermined);
    assert_eq!(r.gm1.part("interior").unwrap().status, Status::Satisfied);
    assert_eq!(r.gm1.part("d_singularities").unwrap().status, Status::Satisfied);
    assert!(r.interior_x.is_empty() && r.interior_y.is_empty() && r.closed.is_empty());
    assert_eq!(to_json(&r), to_json(&check_gm(&constant, &opts, &t)));

    for optimistic in [false, true] {
        let o = GmOptions { optimistic, ..opts };
        let r = check_gm(&limit_cycle_field(), &o, &t);
        let closed = r.gm2.part("closed_trajectories").unwrap();
        assert_eq!(closed.status, Status::Satisfied);
        assert!(r.closed.iter().any(|c| c.elementary == Certainty::Yes && c.eta_prime.is_some_and(|e| e < 1.0)));
        let conn = r.gm3.part("saddle_connections").unwrap();
        assert_eq!(conn.status, if optimistic { Status::Satisfied } else { Status::Undetermined });
        assert_eq!(to_json(&r), to_json(&check_gm(&limit_cycle_field(), &o, &t)));
    }
    "three worked reports match, JSON byte-stable".into()
}

fn criterion_8() -> String {
    let t = tol();
    let opts = GmOptions::default();
    let z = PiecewiseField::new(rotation(), rotation());
    let before = check_gm(&z, &opts, &t);
    assert_eq!(before.gm2.part("s1").unwrap().status, Status::Violated);
    let fix = genericity_repair(&z, &before, &opts, &t).unwrap();
    assert_eq!(fix.perturbation, Perturbation::RadialOdd { epsilon: 1e-3, k: 0 });
    let s = fix.report.s1.unwrap();
    assert_eq!(s.status, S1Status::Elementary);
    assert!((s.mu.unwrap() - 1e-3 * PI).abs() <= 1e-10);
    for (old, new) in [(&before.gm1, &fix.report.gm1), (&before.gm2, &fix.report.gm2), (&before.gm3, &fix.report.gm3)] {
        for p in &old.parts {
            if p.status == Status::Satisfied {
                assert_ne!(new.part(&p.name).map(|q| q.status), Some(Status::Violated), "{}", p.name);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let z = random_field(&mut rng, 4);
        let (s1, s2, v1, v2) = (rng.gen_range(-PI..PI), rng.gen_range(-PI..PI), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let w = apply_perturbation(&z, &Perturbation::RotateTranslate { sigma1: s1, sigma2: s2, v1, v2 }).unwrap();
        assert_eq!(w.degree(), z.degree());
        let back = undo_rotate_translate(&w, s1, s2, v1, v2);
        for (a, b) in [(&back.x.p, &z.x.p), (&back.x.q, &z.x.q), (&back.y.p, &z.y.p), (&back.y.q, &z.y.q)] {
            for i in 0..=z.degree() {
                for j in 0..=z.degree() - i {
                    worst = worst.max((a.coeff(i, j) - b.coeff(i, j)).abs());
                }
            }
        }
    }
    assert!(worst <= 1e-12, "{worst}");
    format!("mu after repair = {:.12e}, round-trip error {worst:.1e}", s.mu.unwrap())
}

fn criterion_9() -> String {
    let dir = tempfile::tempdir().unwrap();
    let mut specs: Vec<_> = std::fs::read_dir(specs_dir()).unwrap().map(|e| e.unwrap().path()).collect();
    specs.sort();
    for spec in &specs {
        let text = std::fs::read_to_string(spec).unwrap();
        let parsed = FieldSpec::parse(&text).unwrap();
        assert_eq!(FieldSpec::parse(&parsed.to_text()).unwrap(), parsed);
        let name = spec.file_stem().unwrap().to_string_lossy().to_string();
        let outs: Vec<Vec<u8>> = (0..2)
            .map(|k| {
                let out = dir.path().join(format!("{name}.{k}.json"));
                let code = cli::run(["filippov", "analyze", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
                let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
                let expected = match report["report"]["overall"].as_str().unwrap() {
                    "Satisfied" => 0,
                    "Violated" => 1,
                    _ => 2,
                };
                assert_eq!(code, expected, "{name}");
                std::fs::read(&out).unwrap()
            })
            .collect();
        assert_eq!(outs[0], outs[1], "{name} report not deterministic");
    }
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "degree 1\n[P1]\n2 0 1\n").unwrap();
    assert_eq!(cli::run(["filippov", "analyze", bad.to_str().unwrap()]), 3);
    format!("{} specs round-trip with stable reports and matching exit codes", specs.len())
}

fn main() {
    let criteria: [(&str, fn() -> String); 9] = [
        ("Filippov tangency suite", criterion_1),
        ("compactification identities", criterion_2),
        ("circle at infinity worked chain", criterion_3),
        ("hyperbolicity at the Filippov points of infinity", criterion_4),
        ("regularization propositions", criterion_5),
        ("transition-map derivative", criterion_6),
        ("stability report regression", criterion_7),
        ("genericity repair", criterion_8),
        ("command-line contract", criterion_9),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        match catch_unwind(AssertUnwindSafe(run)) {
            Ok(detail) => println!("criterion {}: PASS  {name} ({detail}; {:.1?})", i + 1, start.elapsed()),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("criterion {}: FAIL  {name}: {msg}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

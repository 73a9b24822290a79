mod common;

use common::*;
use filippov::flow::{find_closed_polytrajectories, return_map, ClosedSearch, Closure, EventKind, FlowOptions, Section, Window};
use filippov::poly::PiecewiseField;
use filippov::stability::{check_gm, GmOptions, Status};
use filippov::tolerances::Tolerances;

#[test]
fn return_to_d_section_takes_one_lap() {
    // section and D coincide, so the section event and the D event tie
    let tol = Tolerances::default();
    let z = PiecewiseField::new(limit_cycle(), rotation());
    let sec = Section::on_d((-1.998, -0.002));
    let opts = FlowOptions::new(50.0, Window::square(2.0));
    for i in -10..=10 {
        let s = -1.0 + i as f64 * 1e-4;
        let r = return_map(&z, &sec, s, &opts, &tol).unwrap();
        let crossings = r.trajectory.events.iter().filter(|e| e.kind == EventKind::CrossingAtSewing).count();
        assert_eq!(crossings, 1, "s = {s}");
        let fd = r.eta_prime_fd.unwrap();
        assert!((r.eta_prime - fd).abs() < 1e-6 * r.eta_prime.abs().max(1e-3), "{} vs {fd}", r.eta_prime);
    }
}

#[test]
fn two_sided_cycle_is_found_and_attracting() {
    let tol = Tolerances::default();
    let z = PiecewiseField::new(limit_cycle(), rotation());
    let w = Window::square(2.0);
    let found = find_closed_polytrajectories(&z, &ClosedSearch::default_for(&z, w, vec![], &tol), &tol);
    assert_eq!(found.len(), 1);
    let c = &found[0];
    assert_eq!(c.kind, Closure::Type1);
    let target = (-2.0 * std::f64::consts::PI).exp();
    assert!((c.eta_prime.unwrap() - target).abs() < 1e-6 * target);
}

#[test]
fn optimistic_only_lifts_undetermined() {
    let tol = Tolerances::default();
    let z = PiecewiseField::new(limit_cycle(), rotation());
    let base = GmOptions { window: Some(Window::square(2.0)), ..GmOptions::default() };
    let strict = check_gm(&z, &base, &tol);
    let loose = check_gm(&z, &GmOptions { optimistic: true, ..base }, &tol);
    for (a, b) in [(&strict.gm1, &loose.gm1), (&strict.gm2, &loose.gm2), (&strict.gm3, &loose.gm3)] {
        for (p, q) in a.parts.iter().zip(&b.parts) {
            assert_eq!(p.name, q.name);
            match p.status {
                Status::Undetermined => assert_ne!(q.status, Status::Violated),
                s => assert_eq!(q.status, s, "{}", p.name),
            }
        }
    }
    assert_eq!(strict.gm2.part("closed_trajectories").unwrap().status, Status::Satisfied);
}

#[test]
fn mu_forms_agree() {
    let tol = Tolerances::default();
    let focus = field(&[(1.0, 1, 0), (-1.0, 0, 1)], &[(1.0, 1, 0), (1.0, 0, 1)]);
    let z = PiecewiseField::new(focus, rotation());
    let s1 = filippov::compactify::s1_elementarity(&z, &tol).unwrap();
    assert!((s1.mu.unwrap() - s1.mu_two_leg.unwrap()).abs() < 1e-9);
}

//! Search for closed orbits and their return-map derivatives.

use filippov::dline::fold_points;
use filippov::flow::{find_closed_polytrajectories, return_map, ClosedSearch, FlowOptions, Section, Window};
use filippov::poly::{BivariatePolynomial, PiecewiseField, PolyVectorField};
use filippov::tolerances::Tolerances;

fn bp(terms: &[(f64, u32, u32)]) -> BivariatePolynomial {
    BivariatePolynomial::from_terms(terms.iter().copied())
}

fn main() {
    let tol = Tolerances::default();
    // above: (-y + x(1 - r^2), x + y(1 - r^2)), attracting unit circle; below: rotation
    let upper = PolyVectorField::new(
        bp(&[(-1.0, 0, 1), (1.0, 1, 0), (-1.0, 3, 0), (-1.0, 1, 2)]),
        bp(&[(1.0, 1, 0), (1.0, 0, 1), (-1.0, 2, 1), (-1.0, 0, 3)]),
    );
    let lower = PolyVectorField::new(bp(&[(-1.0, 0, 1)]), bp(&[(1.0, 1, 0)]));
    let z = PiecewiseField::new(upper, lower);
    let window = Window::square(2.0);

    let section = Section::vertical(0.0, (0.5, 1.5));
    let opts = FlowOptions::new(50.0, window);
    for s in [0.2, 0.5, 0.8] {
        let r = return_map(&z, &section, s, &opts, &tol).unwrap();
        println!("return map: {:.4} -> {:.6}, derivative {:.6}", section.point(s)[1], section.point(r.s1)[1], r.eta_prime);
    }

    let folds = fold_points(&z, window.x, &tol).unwrap().iter().map(|f| f.x).collect();
    let search = ClosedSearch::default_for(&z, window, folds, &tol);
    for c in find_closed_polytrajectories(&z, &search, &tol) {
        let p = c.trajectory.arcs[0].start();
        println!(
            "closed {:?} through ({:+.6}, {:+.6}): derivative {:?}, finite difference {:?}, elementary {:?}",
            c.kind, p[0], p[1], c.eta_prime, c.eta_prime_fd, c.elementary
        );
    }
}

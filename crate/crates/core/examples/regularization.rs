//! Smooth the discontinuity with a transition function and follow the
//! singularities and cycles of the regularized field as epsilon shrinks.

use filippov::flow::{FlowOptions, Section, Window};
use filippov::poly::{BivariatePolynomial, PiecewiseField, PolyVectorField};
use filippov::regularize::{epsilon_sweep, make_transition, regularized_cycle_search, RegularizedField, TransitionFamily};
use filippov::tolerances::Tolerances;

fn main() {
    let tol = Tolerances::default();
    let phi = make_transition(TransitionFamily::SmoothstepN(2)).unwrap();
    println!("phi(-1, 0, 0.5, 1) = {}, {}, {:.6}, {}", phi.phi(-1.0), phi.phi(0.0), phi.phi(0.5), phi.phi(1.0));

    // sliding saddle at x = -1
    let upper = PolyVectorField::new(BivariatePolynomial::x(), BivariatePolynomial::constant(-1.0));
    let z = PiecewiseField::new(upper, PolyVectorField::constant(1.0, 1.0));
    let sweep = epsilon_sweep(&z, &phi, (-2.0, 0.0), &[0.2, 0.1, 0.05, 0.025], &tol).unwrap();
    println!("sliding singularities at {:?}", sweep.fz_targets);
    for row in &sweep.rows {
        for s in &row.singularities {
            println!("  eps {:.3}: ({:+.6}, {:+.6}) {:?}", row.epsilon, s.position[0], s.position[1], s.kind);
        }
    }
    println!("counts stable {}, distances non-increasing {}", sweep.counts_stable, sweep.distances_non_increasing);

    // a cycle that crosses y = 0 persists under regularization
    let rot = PolyVectorField::new(BivariatePolynomial::y().scale(-1.0), BivariatePolynomial::x());
    let lc = PolyVectorField::new(
        BivariatePolynomial::from_terms([(-1.0, 0, 1), (1.0, 1, 0), (-1.0, 3, 0), (-1.0, 1, 2)]),
        BivariatePolynomial::from_terms([(1.0, 1, 0), (1.0, 0, 1), (-1.0, 2, 1), (-1.0, 0, 3)]),
    );
    let z = PiecewiseField::new(lc, rot);
    let opts = FlowOptions::new(100.0, Window::square(2.0));
    for eps in [0.1, 0.05] {
        let r = RegularizedField::new(z.clone(), phi.clone(), eps).unwrap();
        if let Some(c) = regularized_cycle_search(&r, &Section::vertical(0.0, (0.5, 1.5)), &opts, &tol).unwrap() {
            println!("eps {eps}: cycle through y = {:.6}, period {:.6}, derivative {:.6}", c.point[1], c.period, c.derivative);
        }
    }
}

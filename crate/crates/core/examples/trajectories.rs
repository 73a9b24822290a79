//! Integrate trajectories across y = 0: crossing, entering a sliding arc and
//! following the sliding flow.

use filippov::flow::{advance_hybrid, FlowOptions, StartSide, Window};
use filippov::poly::{BivariatePolynomial, PiecewiseField, PolyVectorField};
use filippov::tolerances::Tolerances;

fn main() {
    let tol = Tolerances::default();
    let rotation = PolyVectorField::new(BivariatePolynomial::y().scale(-1.0), BivariatePolynomial::x());
    let z = PiecewiseField::new(rotation.clone(), rotation);
    let t = advance_hybrid(&z, [1.0, 0.5], StartSide::N, &FlowOptions::new(20.0, Window::square(3.0)), &tol).unwrap();
    println!("rotation from (1, 0.5): closed = {:?}, period = {:.9}", t.closed, t.duration());
    for e in &t.events {
        println!("  t = {:8.5} {:?} at ({:+.6}, {:+.6})", e.t, e.kind, e.point[0], e.point[1]);
    }

    let z = PiecewiseField::new(PolyVectorField::constant(1.0, -1.0), PolyVectorField::constant(1.0, 1.0));
    let t = advance_hybrid(&z, [0.0, 1.0], StartSide::N, &FlowOptions::new(20.0, Window::square(3.0)), &tol).unwrap();
    println!("constant fields from (0, 1): sliding = {}", t.has_sliding());
    for a in &t.arcs {
        println!("  {:?} for t in [{:.4}, {:.4}], ends at ({:+.4}, {:+.4})", a.field, a.t_span.0, a.t_span.1, a.end()[0], a.end()[1]);
    }
    for e in &t.events {
        println!("  t = {:8.5} {:?}", e.t, e.kind);
    }
}

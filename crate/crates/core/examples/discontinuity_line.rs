//! Classify the line y = 0 into sewing, sliding and escaping arcs and list
//! the sliding singularities and fold points on it.

use filippov::dline::{census, classify_point, filippov_field};
use filippov::poly::{BivariatePolynomial, PiecewiseField, PolyVectorField};
use filippov::tolerances::Tolerances;

fn main() {
    let tol = Tolerances::default();
    // above: (x, -1); below: (1, 1). Sliding for all x, with a saddle of the sliding flow at x = -1.
    let upper = PolyVectorField::new(BivariatePolynomial::x(), BivariatePolynomial::constant(-1.0));
    let lower = PolyVectorField::constant(1.0, 1.0);
    show("sliding saddle", &PiecewiseField::new(upper, lower), &tol);

    // above: (1, -1); below: (1, x). Sliding for x > 0, sewing for x < 0, a fold at 0.
    let lower = PolyVectorField::new(BivariatePolynomial::constant(1.0), BivariatePolynomial::x());
    show("sliding and sewing", &PiecewiseField::new(PolyVectorField::constant(1.0, -1.0), lower), &tol);
}

fn show(name: &str, z: &PiecewiseField, tol: &Tolerances) {
    println!("== {name}");
    let c = census(z, (-3.0, 3.0), tol).expect("census");
    for a in &c.arcs {
        println!("  arc [{:+.3}, {:+.3}] {:?}", a.start, a.end, a.class);
    }
    for s in &c.singularities {
        println!("  point x = {:+.6} {:?} elementary = {}", s.x, s.kind, s.is_elementary());
    }
    let p = classify_point(z, 0.5, tol);
    print!("  at x = 0.5: {:?} (Xf = {}, Yf = {})", p.tag, p.xf, p.yf);
    match filippov_field(z, 0.5, tol) {
        Ok(f) => println!(", sliding velocity {:+.6}, lambda {:.3}", f.value[0], f.lambda),
        Err(_) => println!(),
    }
}

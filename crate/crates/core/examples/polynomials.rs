//! Bivariate polynomials: arithmetic, homogeneous parts and real roots on y = 0.

use filippov::poly::{Axis, BivariatePolynomial};

fn main() {
    // p = x^3 - 2xy + y^2 - 1
    let p = BivariatePolynomial::from_terms([(1.0, 3, 0), (-2.0, 1, 1), (1.0, 0, 2), (-1.0, 0, 0)]);
    let q = &BivariatePolynomial::x() + &BivariatePolynomial::y();

    println!("deg p = {}, p(1, 2) = {}", p.degree(), p.eval(1.0, 2.0));
    println!("(p * q)(1, 2) = {}", (&p * &q).eval(1.0, 2.0));
    println!("dp/dx (1, 2) = {}", p.partial(Axis::X).eval(1.0, 2.0));
    for k in 0..=p.degree() {
        let h = p.homogeneous_part(k);
        println!("degree {k} part: {:?}", h.terms().collect::<Vec<_>>());
    }

    let on_d = p.restrict_to_d();
    let roots = on_d.real_roots((-5.0, 5.0), 1e-12, 1e-12).expect("roots");
    println!("p(x, 0) = {:?}", on_d.coeffs());
    for (r, mult) in roots {
        println!("  root {r:.12} multiplicity {mult}");
    }
}

//! Behaviour at infinity: singular points on the circle at infinity and the
//! stability of that circle when it is a closed orbit.

use filippov::compactify::{compactified_field, filippov_point_value, infinity_singularities, s1_elementarity};
use filippov::poly::{BivariatePolynomial, PiecewiseField, PolyVectorField, Side};
use filippov::tolerances::Tolerances;

fn main() {
    let tol = Tolerances::default();
    let (x, y) = (BivariatePolynomial::x(), BivariatePolynomial::y());

    // above: unstable focus (x - y, x + y); below: rotation (-y, x)
    let upper = PolyVectorField::new(&x - &y, &x + &y);
    let lower = PolyVectorField::new(y.scale(-1.0), x.clone());
    let z = PiecewiseField::new(upper, lower);
    let s1 = s1_elementarity(&z, &tol).expect("s1");
    println!("focus over rotation: {:?}", s1.status);
    println!("  mu = {:.12}, return derivative = {:.12}", s1.mu.unwrap(), s1.derivative.unwrap());
    println!("  attracting from the finite plane: {:?}", s1.is_attractor());

    let trig = compactified_field(&z);
    println!("  A_top(pi/2) = {:+.6}", trig.coefficients(Side::X).top_a().eval(std::f64::consts::FRAC_PI_2));

    // a saddle (x, -y) on both sides puts singular points on the circle
    let saddle = PolyVectorField::new(x.clone(), y.scale(-1.0));
    let z = PiecewiseField::new(saddle.clone(), saddle);
    println!("saddle on both sides: Filippov point value = {:+.3}", filippov_point_value(&z));
    for s in infinity_singularities(&z, &tol).expect("infinity") {
        println!("  theta = {:.6} {:?} A' = {:+.3} R = {:+.3}", s.theta, s.kind, s.a_prime, s.r);
    }
}

//! Check the generic conditions for structural stability and repair a
//! violation with an explicit small perturbation.

use filippov::poly::{BivariatePolynomial, PiecewiseField, PolyVectorField};
use filippov::report::to_json;
use filippov::stability::{check_gm, genericity_repair, GmOptions, StabilityReport};
use filippov::tolerances::Tolerances;

fn summary(name: &str, r: &StabilityReport) {
    println!("{name}: overall {:?}", r.overall);
    for (label, c) in [("gm1", &r.gm1), ("gm2", &r.gm2), ("gm3", &r.gm3)] {
        for p in &c.parts {
            println!("  {label}/{}: {:?}", p.name, p.status);
        }
    }
}

fn main() {
    let tol = Tolerances::default();
    let opts = GmOptions::default();
    let rot = PolyVectorField::new(BivariatePolynomial::y().scale(-1.0), BivariatePolynomial::x());
    let z = PiecewiseField::new(rot.clone(), rot);
    let report = check_gm(&z, &opts, &tol);
    summary("rotation", &report);

    let repair = genericity_repair(&z, &report, &opts, &tol).expect("repairable");
    println!("perturbation: {:?}", repair.perturbation);
    summary("repaired", &repair.report);

    let json = to_json(&repair.report.infinity);
    println!("infinity part as JSON:\n{json}");
}

#![allow(dead_code)]

use std::path::PathBuf;

use filippov::poly::{BivariatePolynomial, PiecewiseField, PolyVectorField};
use rand::Rng;

pub fn bp(terms: &[(f64, u32, u32)]) -> BivariatePolynomial {
    BivariatePolynomial::from_terms(terms.iter().copied())
}

pub fn field(p: &[(f64, u32, u32)], q: &[(f64, u32, u32)]) -> PolyVectorField {
    PolyVectorField::new(bp(p), bp(q))
}

pub fn rotation() -> PolyVectorField {
    field(&[(-1.0, 0, 1)], &[(1.0, 1, 0)])
}

/// `(-y + x(1 - r^2), x + y(1 - r^2))`, attracting unit circle.
pub fn limit_cycle() -> PolyVectorField {
    field(
        &[(-1.0, 0, 1), (1.0, 1, 0), (-1.0, 3, 0), (-1.0, 1, 2)],
        &[(1.0, 1, 0), (1.0, 0, 1), (-1.0, 2, 1), (-1.0, 0, 3)],
    )
}

pub fn random_poly<R: Rng>(rng: &mut R, degree: u32) -> BivariatePolynomial {
    let mut terms = Vec::new();
    for i in 0..=degree {
        for j in 0..=degree - i {
            if rng.gen_bool(0.7) {
                terms.push((rng.gen_range(-2.0..2.0), i, j));
            }
        }
    }
    BivariatePolynomial::from_terms(terms)
}

pub fn random_field<R: Rng>(rng: &mut R, max_degree: u32) -> PiecewiseField {
    let side = |rng: &mut R| {
        let m = rng.gen_range(0..=max_degree);
        PolyVectorField::new(random_poly(rng, m), random_poly(rng, m))
    };
    let x = side(rng);
    let y = side(rng);
    PiecewiseField::new(x, y)
}

pub fn specs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("specs")
}

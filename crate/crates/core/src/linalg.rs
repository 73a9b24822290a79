//! 2x2 eigenvalue typing of planar singular points.

use serde::{Deserialize, Serialize};

pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointType {
    Saddle,
    Node,
    Focus,
    /// An eigenvalue real part within tolerance of zero.
    Borderline,
}

/// Eigenvalues as `(re, im)` pairs, real ones sorted ascending.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigen2 {
    pub values: [(f64, f64); 2],
}

impl Eigen2 {
    pub fn is_real(&self) -> bool {
        self.values[0].1 == 0.0
    }

    /// Hyperbolic when both real parts exceed `tol` in magnitude.
    pub fn is_hyperbolic(&self, tol: f64) -> bool {
        self.values.iter().all(|v| v.0.abs() > tol)
    }

    pub fn classify(&self, tol: f64) -> PointType {
        let [(a, _), (b, _)] = self.values;
        if !self.is_hyperbolic(tol) {
            PointType::Borderline
        } else if !self.is_real() {
            PointType::Focus
        } else if a * b < 0.0 {
            PointType::Saddle
        } else {
            PointType::Node
        }
    }
}

pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn eigen(m: &Mat2) -> Eigen2 {
    let tr = m[0][0] + m[1][1];
    let d = det(m);
    let half = 0.5 * tr;
    let disc = half * half - d;
    if disc >= 0.0 {
        let r = disc.sqrt();
        // avoid cancellation in the smaller root
        let big = if half >= 0.0 { half + r } else { half - r };
        let small = if big != 0.0 { d / big } else { 0.0 };
        let (lo, hi) = if big < small { (big, small) } else { (small, big) };
        Eigen2 { values: [(lo, 0.0), (hi, 0.0)] }
    } else {
        let im = (-disc).sqrt();
        Eigen2 { values: [(half, -im), (half, im)] }
    }
}

/// Unit eigenvector for a real eigenvalue `lambda`.
pub fn eigenvector(m: &Mat2, lambda: f64) -> [f64; 2] {
    let a = [m[0][0] - lambda, m[0][1]];
    let b = [m[1][0], m[1][1] - lambda];
    // null vector of the row with the larger norm
    let row = if a[0].hypot(a[1]) >= b[0].hypot(b[1]) { a } else { b };
    let v = if row[0] == 0.0 && row[1] == 0.0 { [1.0, 0.0] } else { [-row[1], row[0]] };
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

pub fn solve(m: &Mat2, r: [f64; 2]) -> Option<[f64; 2]> {
    let d = det(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    Some([(r[0] * m[1][1] - r[1] * m[0][1]) / d, (m[0][0] * r[1] - m[1][0] * r[0]) / d])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typing() {
        assert_eq!(eigen(&[[1.0, 0.0], [0.0, -2.0]]).classify(1e-9), PointType::Saddle);
        assert_eq!(eigen(&[[-1.0, 0.0], [0.0, -2.0]]).classify(1e-9), PointType::Node);
        assert_eq!(eigen(&[[0.1, -1.0], [1.0, 0.1]]).classify(1e-9), PointType::Focus);
        assert_eq!(eigen(&[[0.0, -1.0], [1.0, 0.0]]).classify(1e-9), PointType::Borderline);
    }

    #[test]
    fn eigenvector_satisfies_equation() {
        let m = [[2.0, 1.0], [0.5, -1.0]];
        let e = eigen(&m);
        for (l, _) in e.values {
            let v = eigenvector(&m, l);
            let r = [m[0][0] * v[0] + m[0][1] * v[1] - l * v[0], m[1][0] * v[0] + m[1][1] * v[1] - l * v[1]];
            assert!(r[0].abs() < 1e-12 && r[1].abs() < 1e-12);
        }
    }

    #[test]
    fn solve_roundtrip() {
        let m = [[3.0, 1.0], [1.0, 2.0]];
        let x = solve(&m, [5.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }
}

//! Univariate polynomials and certified real-root isolation.
//!
//! Roots are isolated with Sturm sequences on each square-free factor of a
//! floating-point square-free (Yun) decomposition, then refined by bisection
//! and a final Newton polish kept inside the bracket.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    /// The restriction to the discontinuity line vanishes identically, so the
    /// whole line is a tangency set.
    #[error("polynomial is identically zero on the discontinuity line")]
    IdenticallyZeroOnD,
    #[error("empty or inverted window [{0}, {1}]")]
    BadWindow(f64, f64),
}

/// Dense polynomial with ascending coefficients; no trailing zero is stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UniPoly {
    coeffs: Vec<f64>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// Product of `(x - r)` over `roots`.
    pub fn from_roots(roots: &[f64]) -> Self {
        roots.iter().fold(Self::new(vec![1.0]), |acc, &r| acc.mul(&Self::new(vec![-r, 1.0])))
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(i, &c)| c * i as f64).collect())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::default();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Self::new(
            (0..n)
                .map(|i| {
                    self.coeffs.get(i).copied().unwrap_or(0.0) - rhs.coeffs.get(i).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Zero out coefficients below `rel * max|c|` and drop the resulting leading zeros.
    pub fn trimmed(&self, rel: f64) -> Self {
        let thr = rel * self.max_abs();
        Self::new(self.coeffs.iter().map(|&c| if c.abs() <= thr { 0.0 } else { c }).collect())
    }

    fn normalized(&self) -> Self {
        let m = self.max_abs();
        if m == 0.0 {
            self.clone()
        } else {
            self.scale(1.0 / m)
        }
    }

    fn monic(&self) -> Self {
        let l = self.leading();
        if l == 0.0 {
            self.clone()
        } else {
            self.scale(1.0 / l)
        }
    }

    /// Euclidean division `self = q * d + r`.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "division by the zero polynomial");
        if self.coeffs.len() < d.coeffs.len() {
            return (Self::default(), self.clone());
        }
        let mut r = self.coeffs.clone();
        let dn = d.coeffs.len() - 1;
        let lead = d.leading();
        let mut q = vec![0.0; r.len() - dn];
        for k in (0..q.len()).rev() {
            let c = r[k + dn] / lead;
            q[k] = c;
            for (j, &dc) in d.coeffs.iter().enumerate() {
                r[k + j] -= c * dc;
            }
            r[k + dn] = 0.0;
        }
        r.truncate(dn);
        (Self::new(q), Self::new(r))
    }

    /// Monic gcd; remainders below `rel` times the dividend scale count as zero.
    pub fn gcd(&self, other: &Self, rel: f64) -> Self {
        let mut a = self.normalized();
        let mut b = other.normalized();
        if a.coeffs.len() < b.coeffs.len() {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_zero() {
            let scale = a.max_abs().max(b.max_abs());
            let (_, r) = a.div_rem(&b);
            let r = Self::new(r.coeffs.iter().map(|&c| if c.abs() <= rel * scale { 0.0 } else { c }).collect());
            a = b;
            b = r.normalized();
        }
        a.monic()
    }

    /// Yun's algorithm: factors `(f_i, i)` with `self = c * prod f_i^i`, each `f_i`
    /// square-free. Factors of degree zero are omitted.
    pub fn square_free_decomposition(&self, rel: f64) -> Vec<(UniPoly, usize)> {
        let f = self.normalized();
        if f.degree() == 0 {
            return Vec::new();
        }
        let df = f.derivative();
        let a0 = f.gcd(&df, rel);
        if a0.degree() == 0 {
            return vec![(f.monic(), 1)];
        }
        let mut b = f.div_rem(&a0).0;
        let c = df.div_rem(&a0).0;
        let mut d = c.sub(&b.derivative()).trimmed(rel);
        let mut out = Vec::new();
        let mut i = 1;
        while b.degree() > 0 {
            let a = b.gcd(&d, rel);
            let (nb, _) = b.div_rem(&a);
            let c = if d.is_zero() { Self::default() } else { d.div_rem(&a).0 };
            if a.degree() > 0 {
                out.push((a.monic(), i));
            }
            b = nb;
            d = c.sub(&b.derivative()).trimmed(rel);
            i += 1;
            if i > self.degree() + 1 {
                break;
            }
        }
        out
    }

    /// Sturm chain `s0 = p, s1 = p', s_{k+1} = -rem(s_{k-1}, s_k)`.
    pub fn sturm_sequence(&self, rel: f64) -> Vec<UniPoly> {
        let mut seq = vec![self.normalized()];
        let d = self.derivative().normalized();
        if d.is_zero() {
            return seq;
        }
        seq.push(d);
        loop {
            let n = seq.len();
            let (_, r) = seq[n - 2].div_rem(&seq[n - 1]);
            let scale = seq[n - 2].max_abs().max(seq[n - 1].max_abs());
            let r = Self::new(r.coeffs.iter().map(|&c| if c.abs() <= rel * scale { 0.0 } else { -c }).collect());
            if r.is_zero() {
                break;
            }
            seq.push(r.normalized());
        }
        seq
    }

    /// `1 + max |a_i / a_n|`; every real root lies in `[-bound, bound]`.
    pub fn cauchy_bound(&self) -> f64 {
        let lead = self.leading().abs();
        if self.degree() == 0 || lead == 0.0 {
            return 1.0;
        }
        1.0 + self.coeffs[..self.coeffs.len() - 1]
            .iter()
            .fold(0.0_f64, |m, c| m.max(c.abs() / lead))
    }

    /// Real roots in the closed `window`, each to absolute accuracy `tol_root`,
    /// sorted ascending, with multiplicities.
    pub fn real_roots(&self, window: (f64, f64), tol_root: f64, rel: f64) -> Result<Vec<(f64, usize)>, RootError> {
        let (lo, hi) = window;
        if !(lo <= hi) {
            return Err(RootError::BadWindow(lo, hi));
        }
        if self.is_zero() {
            return Err(RootError::IdenticallyZeroOnD);
        }
        let f = self.trimmed(rel * 1e-3);
        let mut found: Vec<(f64, usize)> = Vec::new();
        for (factor, mult) in f.square_free_decomposition(rel) {
            for r in isolate_square_free(&factor, lo, hi, tol_root, rel) {
                found.push((r, mult));
            }
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, usize)> = Vec::new();
        for (r, m) in found {
            match merged.last_mut() {
                Some(last) if (r - last.0).abs() <= 10.0 * tol_root => last.1 += m,
                _ => merged.push((r, m)),
            }
        }
        Ok(merged)
    }
}

fn sign_changes(seq: &[UniPoly], x: f64) -> usize {
    let mut count = 0;
    let mut prev = 0.0_f64;
    for s in seq {
        let v = s.eval(x);
        if v == 0.0 {
            continue;
        }
        if prev != 0.0 && (v > 0.0) != (prev > 0.0) {
            count += 1;
        }
        prev = v;
    }
    count
}

fn isolate_square_free(g: &UniPoly, lo: f64, hi: f64, tol: f64, rel: f64) -> Vec<f64> {
    if g.degree() == 0 {
        return Vec::new();
    }
    if g.degree() == 1 {
        let r = -g.coeffs[0] / g.coeffs[1];
        return if r >= lo && r <= hi { vec![r] } else { Vec::new() };
    }
    let seq = g.sturm_sequence(rel);
    let mut roots = Vec::new();
    if g.eval(lo) == 0.0 {
        roots.push(lo);
    }
    let mut stack = vec![(lo, hi, sign_changes(&seq, lo), sign_changes(&seq, hi))];
    while let Some((a, b, va, vb)) = stack.pop() {
        let n = va.saturating_sub(vb);
        if n == 0 {
            continue;
        }
        if n == 1 {
            roots.push(refine(g, &seq, a, b, tol));
            continue;
        }
        if b - a <= tol {
            roots.push(0.5 * (a + b));
            continue;
        }
        let mid = 0.5 * (a + b);
        let vm = sign_changes(&seq, mid);
        stack.push((mid, b, vm, vb));
        stack.push((a, mid, va, vm));
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// Refine the single root of `g` in `(a, b]`.
fn refine(g: &UniPoly, seq: &[UniPoly], mut a: f64, mut b: f64, tol: f64) -> f64 {
    let gb = g.eval(b);
    if gb == 0.0 {
        return b;
    }
    let mut ga = g.eval(a);
    let bracket_by_sign = ga != 0.0 && (ga > 0.0) != (gb > 0.0);
    let mut iters = 0;
    while b - a > 0.25 * tol && iters < 200 {
        iters += 1;
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g.eval(m);
        if gm == 0.0 {
            return m;
        }
        if bracket_by_sign {
            if (gm > 0.0) == (ga > 0.0) {
                a = m;
                ga = gm;
            } else {
                b = m;
            }
        } else if sign_changes(seq, a) > sign_changes(seq, m) {
            b = m;
        } else {
            a = m;
        }
    }
    let mut x = 0.5 * (a + b);
    let dg = g.derivative();
    for _ in 0..3 {
        let d = dg.eval(x);
        if d == 0.0 {
            break;
        }
        let nx = x - g.eval(x) / d;
        if !(nx >= a && nx <= b) {
            break;
        }
        x = nx;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-10;
    const REL: f64 = 1e-12;

    #[test]
    fn roots_of_x2_minus_1() {
        let p = UniPoly::new(vec![-1.0, 0.0, 1.0]);
        let r = p.real_roots((-2.0, 2.0), TOL, REL).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0].0 + 1.0).abs() < TOL && r[0].1 == 1);
        assert!((r[1].0 - 1.0).abs() < TOL && r[1].1 == 1);
    }

    #[test]
    fn no_real_roots() {
        let p = UniPoly::new(vec![1.0, 0.0, 1.0]);
        assert!(p.real_roots((-10.0, 10.0), TOL, REL).unwrap().is_empty());
    }

    #[test]
    fn double_root_multiplicity() {
        // (x - 1)^2 x
        let p = UniPoly::from_roots(&[1.0, 1.0, 0.0]);
        let r = p.real_roots((-2.0, 2.0), TOL, REL).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r[0].0.abs() < TOL && r[0].1 == 1);
        assert!((r[1].0 - 1.0).abs() < TOL && r[1].1 == 2);
    }

    #[test]
    fn zero_polynomial_is_an_error() {
        assert_eq!(
            UniPoly::new(vec![0.0, 0.0]).real_roots((-1.0, 1.0), TOL, REL),
            Err(RootError::IdenticallyZeroOnD)
        );
    }

    #[test]
    fn roots_outside_window_are_dropped() {
        let p = UniPoly::from_roots(&[-3.0, 0.5, 4.0]);
        let r = p.real_roots((-1.0, 1.0), TOL, REL).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].0 - 0.5).abs() < TOL);
    }

    #[test]
    fn triple_and_close_roots() {
        let p = UniPoly::from_roots(&[0.3, 0.3, 0.3, -0.7, 0.31]);
        let r = p.real_roots((-2.0, 2.0), TOL, REL).unwrap();
        let xs: Vec<_> = r.iter().map(|x| x.0).collect();
        assert_eq!(r.len(), 3, "{r:?}");
        assert!((xs[0] + 0.7).abs() < 1e-9);
        assert!((xs[1] - 0.3).abs() < 1e-6 && r[1].1 == 3);
        assert!((xs[2] - 0.31).abs() < 1e-9);
    }

    #[test]
    fn cauchy_bound_contains_roots() {
        let p = UniPoly::from_roots(&[-7.5, 2.0, 3.0]);
        assert!(p.cauchy_bound() >= 7.5);
    }

    #[test]
    fn div_rem_reconstructs() {
        let a = UniPoly::new(vec![1.0, -2.0, 0.5, 3.0]);
        let d = UniPoly::new(vec![0.5, 1.0]);
        let (q, r) = a.div_rem(&d);
        let back = q.mul(&d).sub(&r.scale(-1.0));
        for (x, y) in back.coeffs().iter().zip(a.coeffs()) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}

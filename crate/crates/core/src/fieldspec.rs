//! Field specification files.
//!
//! The text format is line based. `#` starts a comment. A `degree m` line
//! comes first, followed by coefficient tables `[P1]`, `[Q1]`, `[P2]`, `[Q2]`
//! holding `i j value` rows for the monomial `value * x^i y^j`, and an
//! optional `[options]` table of `key value` rows:
//!
//! ```text
//! degree 1
//! [P1]
//! 0 1 -1
//! [Q1]
//! 1 0 1
//! [P2]
//! 0 0 1
//! [Q2]
//! 0 0 1
//! [options]
//! window -2,2,-2,2
//! eps 0.2,0.1,0.05
//! phi smoothstep1
//! seed 1,0.5
//! horizon 20
//! tolerance_scale 1
//! ```
//!
//! A file whose first non-blank character is `{` is read as JSON with the
//! same field names.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::flow::Window;
use crate::poly::{BivariatePolynomial, PiecewiseField, PolyVectorField};
use crate::regularize::TransitionFamily;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct SpecError {
    /// 1-based; 0 when no line applies.
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> SpecError {
    SpecError { line, message: message.into() }
}

/// `(i, j, value)` for `value * x^i y^j`.
pub type Term = (u32, u32, f64);

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub degree: u32,
    #[serde(default)]
    pub p1: Vec<Term>,
    #[serde(default)]
    pub q1: Vec<Term>,
    #[serde(default)]
    pub p2: Vec<Term>,
    #[serde(default)]
    pub q2: Vec<Term>,
    #[serde(default)]
    pub options: SpecOptions,
}

const TABLES: [&str; 4] = ["P1", "Q1", "P2", "Q2"];

/// Parse a number list `a,b,...`.
fn numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("`{}` is not a number", t.trim())))
        .collect()
}

pub fn parse_window(s: &str) -> Result<[f64; 4], String> {
    let v = numbers(s)?;
    <[f64; 4]>::try_from(v).map_err(|_| "window needs four values X0,X1,Y0,Y1".to_string())
}

pub fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let v = numbers(s)?;
    <[f64; 2]>::try_from(v).map_err(|_| "expected two values x,y".to_string())
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    numbers(s)
}

/// `smoothstepN` or `bump`.
pub fn parse_phi(s: &str) -> Result<TransitionFamily, String> {
    if s == "bump" {
        return Ok(TransitionFamily::AnalyticBump);
    }
    s.strip_prefix("smoothstep")
        .and_then(|n| n.parse::<u32>().ok())
        .map(TransitionFamily::SmoothstepN)
        .ok_or_else(|| format!("unknown transition `{s}`, expected smoothstepN or bump"))
}

pub fn window_from(w: [f64; 4]) -> Window {
    Window { x: (w[0], w[1]), y: (w[2], w[3]) }
}

impl FieldSpec {
    pub fn parse(text: &str) -> Result<Self, SpecError> {
        let spec = if text.trim_start().starts_with('{') {
            serde_json::from_str::<FieldSpec>(text).map_err(|e| err(e.line(), e.to_string()))?
        } else {
            Self::parse_text(text)?
        };
        spec.validate()?;
        Ok(spec)
    }

    fn parse_text(text: &str) -> Result<Self, SpecError> {
        let mut degree = None;
        let mut tables: [Vec<Term>; 4] = Default::default();
        let mut options = SpecOptions::default();
        let mut section: Option<String> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
                let name = name.trim();
                if !TABLES.contains(&name) && name != "options" {
                    return Err(err(line, format!("unknown table [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let mut words = body.split_whitespace();
            let head = words.next().unwrap_or_default();
            let rest: Vec<&str> = words.collect();
            match section.as_deref() {
                None => {
                    if head != "degree" || rest.len() != 1 {
                        return Err(err(line, "expected `degree m` before any table"));
                    }
                    let m = rest[0].parse::<u32>().map_err(|_| err(line, format!("bad degree `{}`", rest[0])))?;
                    degree = Some(m);
                }
                Some("options") => {
                    let value = rest.join(" ");
                    let bad = |e: String| err(line, format!("option `{head}`: {e}"));
                    match head {
                        "window" => options.window = Some(parse_window(&value).map_err(bad)?),
                        "eps" => options.eps = Some(parse_list(&value).map_err(bad)?),
                        "phi" => {
                            parse_phi(&value).map_err(bad)?;
                            options.phi = Some(value);
                        }
                        "seed" => options.seed = Some(parse_pair(&value).map_err(bad)?),
                        "horizon" => options.horizon = Some(value.parse().map_err(|_| bad(format!("`{value}` is not a number")))?),
                        "tolerance_scale" => {
                            options.tolerance_scale = Some(value.parse().map_err(|_| bad(format!("`{value}` is not a number")))?)
                        }
                        _ => return Err(err(line, format!("unknown option `{head}`"))),
                    }
                }
                Some(table) => {
                    let idx = TABLES.iter().position(|t| *t == table).expect("known table");
                    if rest.len() != 2 {
                        return Err(err(line, format!("[{table}] rows are `i j value`")));
                    }
                    let exp = |s: &str| s.parse::<u32>().map_err(|_| err(line, format!("[{table}]: bad exponent `{s}`")));
                    let i = exp(head)?;
                    let j = exp(rest[0])?;
                    let v = rest[1].parse::<f64>().map_err(|_| err(line, format!("[{table}]: bad value `{}`", rest[1])))?;
                    if let Some(m) = degree {
                        if i + j > m {
                            return Err(err(line, format!("[{table}] entry ({i}, {j}): exponent sum {} exceeds degree {m}", i + j)));
                        }
                    }
                    tables[idx].push((i, j, v));
                }
            }
        }
        let degree = degree.ok_or_else(|| err(0, "missing `degree m` line"))?;
        let [p1, q1, p2, q2] = tables;
        Ok(Self { degree, p1, q1, p2, q2, options })
    }

    fn tables(&self) -> [(&'static str, &Vec<Term>); 4] {
        [("P1", &self.p1), ("Q1", &self.q1), ("P2", &self.p2), ("Q2", &self.q2)]
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let m = self.degree;
        for (name, table) in self.tables() {
            let mut seen = std::collections::BTreeSet::new();
            for &(i, j, v) in table {
                if i + j > m {
                    return Err(err(0, format!("[{name}] entry ({i}, {j}): exponent sum {} exceeds degree {m}", i + j)));
                }
                if !v.is_finite() {
                    return Err(err(0, format!("[{name}] entry ({i}, {j}): value is not finite")));
                }
                if !seen.insert((i, j)) {
                    return Err(err(0, format!("[{name}] entry ({i}, {j}) appears twice")));
                }
            }
        }
        if !self.tables().iter().any(|(_, t)| t.iter().any(|&(i, j, v)| i + j == m && v != 0.0)) {
            return Err(err(0, format!("no nonzero coefficient of degree {m}")));
        }
        let o = &self.options;
        if let Some(w) = o.window {
            if !(w[0] < w[1] && w[2] < w[3]) {
                return Err(err(0, "window must satisfy X0 < X1 and Y0 < Y1"));
            }
        }
        if let Some(phi) = &o.phi {
            parse_phi(phi).map_err(|e| err(0, e))?;
        }
        if let Some(s) = o.tolerance_scale {
            if !(s > 0.0) {
                return Err(err(0, "tolerance_scale must be positive"));
            }
        }
        Ok(())
    }

    pub fn to_field(&self) -> PiecewiseField {
        let poly = |t: &[Term]| BivariatePolynomial::from_terms(t.iter().map(|&(i, j, v)| (v, i, j)));
        let side = |p: &[Term], q: &[Term]| {
            PolyVectorField::with_degree(poly(p), poly(q), self.degree).expect("validated exponents")
        };
        PiecewiseField::new(side(&self.p1, &self.q1), side(&self.p2, &self.q2))
    }

    /// Spec of `z` with its declared degree and no options.
    pub fn from_field(z: &PiecewiseField) -> Self {
        let terms = |p: &BivariatePolynomial| p.terms().map(|((i, j), v)| (i, j, v)).collect();
        Self {
            degree: z.degree(),
            p1: terms(&z.x.p),
            q1: terms(&z.x.q),
            p2: terms(&z.y.p),
            q2: terms(&z.y.q),
            options: SpecOptions::default(),
        }
    }

    /// Text form; values are written with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "degree {}", self.degree).unwrap();
        for (name, table) in self.tables() {
            writeln!(s, "[{name}]").unwrap();
            for &(i, j, v) in table {
                writeln!(s, "{i} {j} {v:.16e}").unwrap();
            }
        }
        let o = &self.options;
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(",");
        let mut opts = Vec::new();
        if let Some(w) = o.window {
            opts.push(format!("window {}", list(&w)));
        }
        if let Some(e) = &o.eps {
            opts.push(format!("eps {}", list(e)));
        }
        if let Some(p) = &o.phi {
            opts.push(format!("phi {p}"));
        }
        if let Some(v) = o.seed {
            opts.push(format!("seed {}", list(&v)));
        }
        if let Some(h) = o.horizon {
            opts.push(format!("horizon {h:.16e}"));
        }
        if let Some(t) = o.tolerance_scale {
            opts.push(format!("tolerance_scale {t:.16e}"));
        }
        if !opts.is_empty() {
            s.push_str("[options]\n");
            for line in opts {
                s.push_str(&line);
                s.push('\n');
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROTATION: &str = "degree 1\n[P1]\n0 1 -1\n1 0 1\n[Q1]\n1 0 1\n0 1 1\n[P2]\n0 1 -1\n[Q2]\n1 0 1\n";

    #[test]
    fn parses_text() {
        let s = FieldSpec::parse(ROTATION).unwrap();
        assert_eq!(s.degree, 1);
        assert_eq!(s.p1, vec![(0, 1, -1.0), (1, 0, 1.0)]);
        let z = s.to_field();
        assert_eq!(z.eval([1.0, 1.0]), [0.0, 2.0]);
        assert_eq!(z.eval([1.0, -1.0]), [1.0, 1.0]);
    }

    #[test]
    fn exponent_too_large_names_entry() {
        let e = FieldSpec::parse("degree 1\n[P1]\n1 1 2.0\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("(1, 1)"), "{e}");
    }

    #[test]
    fn text_round_trip() {
        let mut s = FieldSpec::parse(ROTATION).unwrap();
        s.options.window = Some([-2.0, 2.0, -1.5, 1.0 / 3.0]);
        s.options.eps = Some(vec![0.2, 0.1]);
        s.options.phi = Some("bump".into());
        s.options.seed = Some([1.0, 0.5]);
        assert_eq!(FieldSpec::parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn json_input() {
        let j = r#"{"degree":0,"p1":[[0,0,1.0]],"q1":[[0,0,1.0]],"p2":[[0,0,1.0]],"q2":[[0,0,1.0]]}"#;
        let s = FieldSpec::parse(j).unwrap();
        assert_eq!(s.to_field().eval([0.0, -1.0]), [1.0, 1.0]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(FieldSpec::parse("[P1]\n0 0 1\n").is_err());
        assert!(FieldSpec::parse("degree 1\n[R1]\n").is_err());
        assert!(FieldSpec::parse("degree 1\n[P1]\n0 0 x\n").is_err());
        assert!(FieldSpec::parse("degree 1\n[P1]\n0 0 1\n").is_err());
        assert!(parse_phi("smoothstep").is_err());
        assert_eq!(parse_phi("smoothstep3"), Ok(TransitionFamily::SmoothstepN(3)));
    }
}

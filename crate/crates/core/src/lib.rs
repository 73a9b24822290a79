//! Discontinuous piecewise polynomial vector fields in the plane.
//!
//! A field `Z = (X, Y)` follows the polynomial field `X` on `y > 0` and `Y`
//! on `y < 0`. The line `D = {y = 0}` is split into sewing, sliding and
//! escaping arcs, and orbits that reach a sliding arc follow the Filippov
//! convex combination of `X` and `Y` along it.
//!
//! - [`poly`], [`roots`]: bivariate polynomials and real roots of univariate ones.
//! - [`dline`]: classification of `D`, sliding singularities and fold points.
//! - [`compactify`]: the field near infinity and the stability of the circle at infinity.
//! - [`flow`]: hybrid trajectories, return maps, closed orbits and separatrix probes.
//! - [`regularize`]: smoothing of `Z` with a transition function and epsilon sweeps.
//! - [`stability`]: the generic conditions for structural stability and explicit repairs.
//! - [`fieldspec`], [`portrait`], [`report`], [`cli`]: input files, SVG output and the `filippov` binary.
//!
//! ```
//! use filippov::dline::census;
//! use filippov::poly::{PiecewiseField, PolyVectorField};
//! use filippov::tolerances::Tolerances;
//!
//! let z = PiecewiseField::new(PolyVectorField::constant(1.0, -1.0), PolyVectorField::constant(1.0, 1.0));
//! let c = census(&z, (-1.0, 1.0), &Tolerances::default()).unwrap();
//! assert_eq!(c.arcs.len(), 1);
//! ```

pub mod poly;
pub mod roots;
pub mod tolerances;
pub mod ode;
pub mod quadrature;
pub mod dline;
pub mod compactify;
pub mod linalg;
pub mod flow;
pub mod regularize;
pub mod stability;
pub mod fieldspec;
pub mod report;
pub mod portrait;
pub mod cli;

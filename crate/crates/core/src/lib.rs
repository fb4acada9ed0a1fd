//! Numerical toolkit for the sub-Riemannian geometry of the generalized
//! Siegel vector fields
//!
//! ```text
//! X = ∂x + |z|^{2m} y ∂t,    Y = ∂y − |z|^{2m} x ∂t     on R³ = C × R.
//! ```
//!
//! Modules, bottom-up:
//!
//! - [`model`]: parameters, points, symmetries, closed-form flows.
//! - [`path`]: piecewise-constant horizontal paths and the RK4 reference integrator.
//! - [`quasimetric`]: the explicit quasi-distance δ, boxes, ball sampling.
//! - [`oracle`]: upper/lower brackets for the CC distance.
//! - [`surface`]: admissible graphs `t = φ(z)` and their horizontal gradient.
//! - [`johncurve`], [`uniformcurve`]: twisted-cone and (ε, δ) curve builders.
//! - [`perimeter`]: perimeter measure, ball volumes and the Ahlfors scan.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod exec;
pub mod johncurve;

pub mod model;
pub mod oracle;
pub mod path;
pub mod perimeter;

pub mod quad;
pub mod quasimetric;
pub mod report;
pub mod rng;
pub mod stats;
pub mod surface;
pub mod uniformcurve;

pub use error::{Error, Result};
pub use exec::Execution;
pub use model::{ModelParams, Point, Vec2};
pub use path::{Control, HorizontalPath};

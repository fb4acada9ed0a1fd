//! The explicit quasi-distance
//!
//! ```text
//! δ((z,t),(ζ,τ)) = |z − ζ| + min{ |v|^{1/(2m+2)}, |v|^{1/2} / |z|^m },
//! v = τ − t + |z|^{2m} ω(z, ζ),
//! ```
//!
//! the two box families it is built from, and rejection sampling of δ-balls.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{ModelParams, Point, Vec2};
use crate::rng;

pub use crate::model::omega;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiDistanceBreakdown {
    /// `|z − ζ|`
    pub planar: f64,
    /// `τ − t + |z|^{2m} ω(z, ζ)`
    pub v: f64,
    /// `|v|^{1/2} / |z|^m`; `+∞` at `z = 0` unless `v = 0`.
    pub branch_i: f64,
    /// `|v|^{1/(2m+2)}`
    pub branch_j: f64,
    pub value: f64,
}

/// Twisted vertical offset `v` of `q` seen from `p`.
#[inline]
pub fn vertical_offset(p: &Point, q: &Point, params: &ModelParams) -> f64 {
    let z = p.z();
    q.t - p.t + params.weight(z) * omega(z, q.z())
}

#[inline]
fn branch_i(v: f64, weight: f64) -> f64 {
    if weight == 0.0 {
        if v == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (v.abs() / weight).sqrt()
    }
}

#[inline]
fn branch_j(v: f64, params: &ModelParams) -> f64 {
    v.abs().powf(1.0 / params.homogeneous_order())
}

pub fn delta(p: &Point, q: &Point, params: &ModelParams) -> QuasiDistanceBreakdown {
    let z = p.z();
    let planar = (z - q.z()).norm();
    let weight = params.weight(z);
    let v = q.t - p.t + weight * omega(z, q.z());
    let bi = branch_i(v, weight);
    let bj = branch_j(v, params);
    QuasiDistanceBreakdown {
        planar,
        v,
        branch_i: bi,
        branch_j: bj,
        value: planar + bi.min(bj),
    }
}

/// `δ(p, q)` only.
#[inline]
pub fn delta_value(p: &Point, q: &Point, params: &ModelParams) -> f64 {
    delta(p, q, params).value
}

/// `max{δ(p, q), δ(q, p)}`, used wherever a symmetric quantity (diameters)
/// is needed.
#[inline]
pub fn delta_sym(p: &Point, q: &Point, params: &ModelParams) -> f64 {
    delta_value(p, q, params).max(delta_value(q, p, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoxFamily {
    /// Weighted norm `‖u‖_{1,1,2}` scaled by `|z|^{2m}` vertically.
    I,
    /// Weighted norm `‖u‖_{1,1,2m+2}`.
    J,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub center: Point,
    pub radius: f64,
    pub family: BoxFamily,
}

/// Membership in `Box_I(p, r)` / `Box_J(p, r)`:
/// `max{|ξ − x|, |η − y|, ρ(v)} < r` with `ρ = |v|^{1/2}/|z|^m` or
/// `|v|^{1/(2m+2)}`.
pub fn box_contains(spec: &BoxSpec, q: &Point, params: &ModelParams) -> bool {
    let p = &spec.center;
    let dx = (q.x - p.x).abs();
    let dy = (q.y - p.y).abs();
    let weight = params.weight(p.z());
    let v = q.t - p.t + weight * omega(p.z(), q.z());
    let vertical = match spec.family {
        BoxFamily::I => branch_i(v, weight),
        BoxFamily::J => branch_j(v, params),
    };
    // the center itself belongs to every box with r > 0
    dx.max(dy).max(vertical) < spec.radius
}

/// Box parametrization `u ↦ (x + u₁, y + u₂, t + ·)` of either family.
pub fn box_point(spec: &BoxSpec, u: [f64; 3], params: &ModelParams) -> Point {
    let p = spec.center;
    let weight = params.weight(p.z());
    let twist = p.y * u[0] - p.x * u[1];
    let t = match spec.family {
        BoxFamily::I => p.t + weight * (u[2] + twist),
        BoxFamily::J => p.t + u[2] + weight * twist,
    };
    Point::new(p.x + u[0], p.y + u[1], t)
}

/// Bounding region of `Box_I(p, r) ∪ Box_J(p, r)` written in the sheared
/// coordinates `(u₁, u₂, v)`; the map to `R³` has unit Jacobian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallEnvelope {
    pub center: Point,
    pub radius: f64,
    /// Half-height in `v`: `max{|z|^{2m} r², r^{2m+2}}`.
    pub v_half: f64,
    weight: f64,
}

impl BallEnvelope {
    pub fn new(center: Point, radius: f64, params: &ModelParams) -> Self {
        let weight = params.weight(center.z());
        let v_half = (weight * radius * radius).max(radius.powf(params.homogeneous_order()));
        Self {
            center,
            radius,
            v_half,
            weight,
        }
    }

    /// Lebesgue volume of the envelope.
    pub fn volume(&self) -> f64 {
        4.0 * self.radius * self.radius * 2.0 * self.v_half
    }

    /// Maps unit-cube coordinates `s ∈ [0,1)³` to a point of the envelope.
    pub fn point(&self, s: [f64; 3]) -> Point {
        let c = self.center;
        let u1 = (2.0 * s[0] - 1.0) * self.radius;
        let u2 = (2.0 * s[1] - 1.0) * self.radius;
        let v = (2.0 * s[2] - 1.0) * self.v_half;
        let zeta = Vec2::new(c.x + u1, c.y + u2);
        Point::new(zeta.x, zeta.y, c.t + v - self.weight * omega(c.z(), zeta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSample {
    pub point: Point,
    pub delta: f64,
}

const MIN_ACCEPTANCE: f64 = 1e-4;
const ACCEPTANCE_CHECK_AFTER: usize = 20_000;

/// `n` points of the δ-ball `{q : δ(p, q) ≤ r}` by rejection from the box
/// envelope, each tagged with its δ value. Deterministic per `seed`.
pub fn sample_ball(p: &Point, r: f64, n: usize, seed: u64, params: &ModelParams) -> Result<Vec<BallSample>> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(invalid("r", format!("radius must be positive, got {r}")));
    }
    if !p.is_finite() {
        return Err(Error::NonFinite("ball center"));
    }
    let envelope = BallEnvelope::new(*p, r, params);
    let mut rng = rng::stream(seed, 0);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        let q = envelope.point([rng.gen(), rng.gen(), rng.gen()]);
        let d = delta_value(p, &q, params);
        if d <= r {
            out.push(BallSample { point: q, delta: d });
        }
        if attempts >= ACCEPTANCE_CHECK_AFTER && attempts.is_multiple_of(ACCEPTANCE_CHECK_AFTER) {
            let rate = out.len() as f64 / attempts as f64;
            if rate < MIN_ACCEPTANCE {
                return Err(Error::LowAcceptance { rate });
            }
        }
    }
    Ok(out)
}

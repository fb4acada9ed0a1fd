//! Model parameters, points of `R³ = C × R`, the exact symmetries of the
//! Siegel pair `X = ∂x + |z|^{2m} y ∂t`, `Y = ∂y − |z|^{2m} x ∂t`, and the
//! closed-form flow of constant-coefficient combinations `uX + vY`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// The exponent `m ≥ 1` fixing the vector-field pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    m: f64,
}

impl ModelParams {
    pub fn new(m: f64) -> Result<Self> {
        if !m.is_finite() || m < 1.0 {
            return Err(Error::InvalidExponent(m));
        }
        Ok(Self { m })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// Weight `2m + 2` of the vertical coordinate under dilations.
    pub fn homogeneous_order(&self) -> f64 {
        2.0 * self.m + 2.0
    }

    /// `Some(m)` when `m` is a natural number.
    pub fn integer_m(&self) -> Option<u32> {
        (self.m.fract() == 0.0 && self.m <= 64.0).then_some(self.m as u32)
    }

    /// `|z|^{2m}` evaluated from `|z|²`.
    #[inline]
    pub fn weight_from_sq(&self, norm_sq: f64) -> f64 {
        match self.integer_m() {
            Some(k) => norm_sq.powi(k as i32),
            None => norm_sq.powf(self.m),
        }
    }

    /// `|z|^{2m}`.
    #[inline]
    pub fn weight(&self, z: Vec2) -> f64 {
        self.weight_from_sq(z.norm_sq())
    }

    /// `|z|^e` for a real exponent with the convention `0^0 = 1`.
    #[inline]
    pub fn abs_pow(r: f64, e: f64) -> f64 {
        if e == 0.0 {
            1.0
        } else {
            r.abs().powf(e)
        }
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { m: 1.0 }
    }
}

/// A planar vector `z = (x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Self::new(r * theta.cos(), r * theta.sin())
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn rotate(self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Counterclockwise quarter turn.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// The symplectic form `ω(z, ζ) = xη − yξ`.
#[inline]
pub fn omega(z: Vec2, zeta: Vec2) -> f64 {
    z.x * zeta.y - z.y * zeta.x
}

/// A point `(x, y, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0, t: 0.0 };

    pub const fn new(x: f64, y: f64, t: f64) -> Self {
        Self { x, y, t }
    }

    pub fn from_planar(z: Vec2, t: f64) -> Self {
        Self::new(z.x, z.y, t)
    }

    #[inline]
    pub fn z(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.t.is_finite()
    }

    /// Euclidean distance in `R³`; only used for numerical gap checks.
    pub fn euclid_dist(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dt = self.t - other.t;
        (dx * dx + dy * dy + dt * dt).sqrt()
    }
}

/// Rotation of the planar part; leaves `t` fixed.
pub fn rotate(p: Point, theta: f64) -> Point {
    Point::from_planar(p.z().rotate(theta), p.t)
}

pub fn translate_t(p: Point, s: f64) -> Point {
    Point::new(p.x, p.y, p.t + s)
}

/// Anisotropic dilation `(z, t) ↦ (rz, r^{2m+2} t)`.
pub fn dilate(p: Point, r: f64, params: &ModelParams) -> Point {
    debug_assert!(r > 0.0);
    let rt = match params.integer_m() {
        Some(k) => r.powi(2 * k as i32 + 2),
        None => r.powf(params.homogeneous_order()),
    };
    Point::new(r * p.x, r * p.y, rt * p.t)
}

/// `∫₀¹ |z + s w|^{2m} ds`.
///
/// For integer `m` the integrand `(a + 2bs + cs²)^m` is expanded and
/// integrated term by term. Otherwise the interval is split at the point of
/// closest approach to the origin (the only place the integrand can lose
/// smoothness) and integrated with adaptive 64-point Gauss–Legendre.
pub fn line_power_integral(z: Vec2, w: Vec2, params: &ModelParams) -> f64 {
    let a = z.norm_sq();
    let b = z.dot(w);
    let c = w.norm_sq();
    if c == 0.0 {
        return params.weight_from_sq(a);
    }
    if let Some(k) = params.integer_m() {
        return quadratic_power_integral(a, 2.0 * b, c, k);
    }
    let m = params.m();
    let s_star = -b / c;
    // |z + sw|² = c(s − s*)² + |z × w|²/c, free of cancellation near s*
    let floor = omega(z, w).powi(2) / c;
    let integrand = |s: f64| {
        let u = s - s_star;
        (c * u * u + floor).powf(m)
    };
    let rule = quad::gl64();
    let abs_tol = 1e-12 * rule.integrate(integrand, 0.0, 1.0).abs();
    let piece = |lo: f64, hi: f64| match quad::adaptive(rule, integrand, lo, hi, 1e-12, abs_tol.max(1e-300)) {
        Ok(v) | Err(v) => v,
    };
    if s_star > 0.0 && s_star < 1.0 {
        piece(0.0, s_star) + piece(s_star, 1.0)
    } else {
        piece(0.0, 1.0)
    }
}

/// `∫₀¹ (a + b s + c s²)^k ds` by polynomial expansion.
fn quadratic_power_integral(a: f64, b: f64, c: f64, k: u32) -> f64 {
    let mut poly = vec![1.0];
    for _ in 0..k {
        let mut next = vec![0.0; poly.len() + 2];
        for (i, &p) in poly.iter().enumerate() {
            next[i] += p * a;
            next[i + 1] += p * b;
            next[i + 2] += p * c;
        }
        poly = next;
    }
    poly.iter().enumerate().map(|(i, &p)| p / (i as f64 + 1.0)).sum()
}

/// Time-one map of `uX + vY` started at `p`:
/// `(z + w, t + ω(w, z) ∫₀¹ |z + sw|^{2m} ds)` with `w = (u, v)`.
pub fn flow(p: Point, u: f64, v: f64, params: &ModelParams) -> Point {
    let z = p.z();
    let w = Vec2::new(u, v);
    let gain = omega(w, z) * line_power_integral(z, w, params);
    Point::from_planar(z + w, p.t + gain)
}

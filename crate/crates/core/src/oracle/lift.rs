//! Square lifts and the two-step constructive connector.

use crate::error::{invalid, Error, Result};
use crate::model::{flow, ModelParams, Point, Vec2};
use crate::path::HorizontalPath;
use crate::quad;

/// Vertical gain of the closed square path on `[x, x+u] × [0, u]`:
/// `2(m+1) ∫_{R_u} |ζ|^{2m} dξ dη`, by adaptive 2-D quadrature.
pub fn stokes_lift(x: f64, u: f64, params: &ModelParams) -> Result<f64> {
    if !(x >= 0.0) || !(u >= 0.0) || !x.is_finite() || !u.is_finite() {
        return Err(invalid("stokes_lift", format!("need finite x, u >= 0, got ({x}, {u})")));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    let integrand = |a: f64, b: f64| params.weight_from_sq(a * a + b * b);
    let area = match quad::adaptive_rect(quad::gl16(), integrand, (x, x + u), (0.0, u), 1e-10, 0.0) {
        Ok(v) => v,
        Err(estimate) => return Err(Error::Quadrature { estimate }),
    };
    Ok(2.0 * (params.m() + 1.0) * area)
}

/// Orthonormal frame `(e, e⊥)` with `e` pointing from the origin to `z`
/// (or along the x-axis when `z = 0`).
fn radial_frame(z: Vec2) -> (Vec2, Vec2) {
    let e = z.normalized().unwrap_or(Vec2::new(1.0, 0.0));
    (e, e.perp())
}

/// The four planar displacements of a square of side `u` based at `z`,
/// extending away from the origin. `raise = true` gives the orientation
/// with positive vertical gain.
pub fn square_displacements(z: Vec2, u: f64, raise: bool) -> [Vec2; 4] {
    let (e, n) = radial_frame(z);
    let (a, b) = (e * u, n * u);
    if raise {
        [b, a, -b, -a]
    } else {
        [a, b, -a, -b]
    }
}

/// Square loop from `base`; see [`square_displacements`].
pub fn square_path(base: Point, u: f64, raise: bool) -> HorizontalPath {
    let mut path = HorizontalPath::new(base);
    for w in square_displacements(base.z(), u, raise) {
        path.push_displacement(w.x, w.y);
    }
    path
}

/// Vertical gain of the square loop at `z` computed by composing flows.
fn square_gain(z: Vec2, u: f64, params: &ModelParams) -> f64 {
    let mut p = Point::from_planar(z, 0.0);
    for w in square_displacements(z, u, true) {
        p = flow(p, w.x, w.y, params);
    }
    p.t
}

/// Side `ū` of the square at `z` whose lift equals `gap > 0`.
///
/// Bisection on [`stokes_lift`] brackets the root; a few secant steps on
/// the flow-composed gain then remove the quadrature error.
pub fn square_side_for_gap(z: Vec2, gap: f64, params: &ModelParams) -> Result<f64> {
    if !(gap > 0.0) || !gap.is_finite() {
        return Err(invalid("gap", format!("must be positive and finite, got {gap}")));
    }
    let r = z.norm();
    let lift = |u: f64| stokes_lift(r, u, params).unwrap_or(f64::NAN);
    let mut hi = 1.0;
    let mut lo = 0.0;
    let mut guard = 0;
    while lift(hi) < gap {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::RootFinding { lo, hi });
        }
    }
    while lo == 0.0 && lift(0.5 * hi) >= gap && guard < 2000 {
        hi *= 0.5;
        guard += 1;
    }
    let root = quad::bisect(|u| lift(u) - gap, lo, hi, 1e-13 * hi).ok_or(Error::RootFinding { lo, hi })?;

    let f = |u: f64| square_gain(z, u, params) - gap;
    let (mut u0, mut u1) = (root, root * (1.0 + 1e-7));
    let (mut f0, mut f1) = (f(u0), f(u1));
    for _ in 0..20 {
        if f1 == 0.0 || f1.abs() <= 1e-15 * gap || f1 == f0 {
            break;
        }
        let u2 = u1 - f1 * (u1 - u0) / (f1 - f0);
        if !(u2 > 0.0) || !u2.is_finite() {
            break;
        }
        (u0, f0) = (u1, f1);
        u1 = u2;
        f1 = f(u1);
    }
    Ok(if f1.abs() <= f(root).abs() { u1 } else { root })
}

/// Planar flow from `p` to the fiber over `q`, then a square loop closing
/// the remaining vertical gap. Its length bounds `d(p, q)` from above.
pub fn connect_constructive(p: &Point, q: &Point, params: &ModelParams) -> Result<HorizontalPath> {
    if !p.is_finite() || !q.is_finite() {
        return Err(Error::NonFinite("connector endpoints"));
    }
    let mut path = HorizontalPath::new(*p);
    let w = q.z() - p.z();
    let mut mid = *p;
    if w != Vec2::ZERO {
        path.push_displacement(w.x, w.y);
        mid = flow(*p, w.x, w.y, params);
    }
    let gap = q.t - mid.t;
    // rounding-level gaps are left alone
    if gap.abs() > 4.0 * f64::EPSILON * (q.t.abs() + mid.t.abs()) {
        let side = square_side_for_gap(q.z(), gap.abs(), params)?;
        for d in square_displacements(q.z(), side, gap > 0.0) {
            path.push_displacement(d.x, d.y);
        }
    }
    Ok(path)
}

//! Analytic lower bound for `d`.
//!
//! Along a horizontal curve of length `L` from `(z, t)`, the twisted offset
//! satisfies `v = ∫ ω(γ̇, f(γ) − f(z)) ds` with `f(z) = |z|^{2m} z`, whose
//! Lipschitz constant on the disk of radius `R` is `(2m+1)R^{2m}`. Hence
//! `|v| ≤ G(L) = (2m+1) ∫₀^L (|z| + s)^{2m} s ds`, and `d ≥ G⁻¹(|v|)`.
//! The planar projection gives `d ≥ |ζ − z|` as well.

use crate::model::{ModelParams, Point};
use crate::quad;
use crate::quasimetric::vertical_offset;

/// `G(T)` for base radius `a`.
pub fn offset_budget(a: f64, big_t: f64, params: &ModelParams) -> f64 {
    let m2 = 2.0 * params.m();
    if big_t <= 0.0 {
        return 0.0;
    }
    let body = if big_t < 0.1 * a {
        quad::gl16().integrate(|s| (a + s).powf(m2) * s, 0.0, big_t)
    } else {
        let prim = |w: f64| w.powf(m2 + 2.0) / (m2 + 2.0) - a * w.powf(m2 + 1.0) / (m2 + 1.0);
        prim(a + big_t) - prim(a)
    };
    (m2 + 1.0) * body
}

fn invert_budget(a: f64, v: f64, params: &ModelParams) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while offset_budget(a, hi, params) < v {
        hi *= 2.0;
        if !hi.is_finite() {
            return 0.0;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if offset_budget(a, mid, params) < v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `max{|ζ − z|, G_z⁻¹(|v_pq|), G_ζ⁻¹(|v_qp|)}`, shaded down by a relative
/// `1e-9` to stay below `d` under rounding.
pub fn lower_bound(p: &Point, q: &Point, params: &ModelParams) -> f64 {
    let planar = (p.z() - q.z()).norm();
    let from_p = invert_budget(p.z().norm(), vertical_offset(p, q, params).abs(), params);
    let from_q = invert_budget(q.z().norm(), vertical_offset(q, p, params).abs(), params);
    planar.max(from_p).max(from_q) * (1.0 - 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_branches_agree() {
        let params = ModelParams::new(1.5).unwrap();
        let a = 2.0;
        let t = 0.1999;
        let quad_branch = offset_budget(a, t, &params);
        let m2 = 3.0;
        let prim = |w: f64| w.powf(m2 + 2.0) / (m2 + 2.0) - a * w.powf(m2 + 1.0) / (m2 + 1.0);
        let closed = (m2 + 1.0) * (prim(a + t) - prim(a));
        assert!((quad_branch - closed).abs() < 1e-10 * closed);
    }

    #[test]
    fn vertical_pair_at_origin() {
        // G(T) = 3T⁴/4 for m = 1, a = 0
        let params = ModelParams::default();
        let lb = lower_bound(&Point::ORIGIN, &Point::new(0.0, 0.0, 1.0), &params);
        assert!((lb - (4.0f64 / 3.0).powf(0.25)).abs() < 1e-8);
        assert!(lb < 4.0 * (3.0f64 / 8.0).powf(0.25));
    }
}

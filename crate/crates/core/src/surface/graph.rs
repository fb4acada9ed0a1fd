use super::AdmissibleGraph;
use crate::model::{omega, ModelParams, Vec2};

/// `|ζ − z| + |(φ(ζ) − φ(z)) / μ^{2m} + ω(z, ζ)|^{1/2}` with
/// `μ = max{|z|, |ζ|}`; reduces to `|ζ − z|` when `μ = 0`.
pub fn graph_delta(g: &dyn AdmissibleGraph, z: Vec2, zeta: Vec2, params: &ModelParams) -> f64 {
    let planar = (zeta - z).norm();
    let mu = z.norm().max(zeta.norm());
    if mu == 0.0 {
        return planar;
    }
    let w = params.weight_from_sq(mu * mu);
    planar + ((g.phi(zeta) - g.phi(z)) / w + omega(z, zeta)).abs().sqrt()
}

/// Membership of `ζ` in the disk
/// `D(z, r) = {|ζ − z| ≤ r, |φ(ζ) − φ(z) + μ^{2m} ω(z, ζ)| ≤ μ^{2m} r²}`.
pub fn disk_contains(g: &dyn AdmissibleGraph, z: Vec2, r: f64, zeta: Vec2, params: &ModelParams) -> bool {
    if (zeta - z).norm() > r {
        return false;
    }
    let mu = z.norm().max(zeta.norm());
    let w = params.weight_from_sq(mu * mu);
    (g.phi(zeta) - g.phi(z) + w * omega(z, zeta)).abs() <= w * r * r
}

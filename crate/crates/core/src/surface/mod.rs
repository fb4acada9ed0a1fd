//! Graphs `t = φ(z)` and their horizontal gradient
//! `ZF = (φ_x − |z|^{2m} y, φ_y + |z|^{2m} x)` for `F(z, t) = φ(z) − t`.

mod builtin;
mod checks;
mod graph;

pub use builtin::{builtin_names, surface_by_name, Cap, Paraboloid, Plane, SiegelExample};
pub use checks::{
    admissibility_grid, annulus_grid, check_admissibility, cubic_expansion_residual, expansion_matrix,
    expansion_residual, fit_residual_exponent, nondegeneracy, nondegeneracy_sweep, residual_exponents,
    AdmissibilityReport, AdmissibilityRow, Nondegeneracy, NondegeneracySweep, ResidualExponents,
};
pub use graph::{disk_contains, graph_delta};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, Point, Vec2};

/// Planar region over which a graph is defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Plane,
    /// Open disk `|z| < radius` centred at the origin.
    Disk {
        radius: f64,
    },
}

impl Domain {
    pub fn contains(&self, z: Vec2) -> bool {
        match *self {
            Domain::Plane => z.is_finite(),
            Domain::Disk { radius } => z.norm() < radius,
        }
    }
}

/// Third derivatives `[φ_xxx, φ_xxy, φ_xyy, φ_yyy]`.
pub type Third = [f64; 4];
pub type Hessian = [[f64; 2]; 2];

/// A surface `t = φ(z)`.
///
/// Only `phi` is required. The derivative methods default to central
/// differences with step `h = 1e-5 (1 + |z|)`, each level differencing the
/// one below, so accuracy degrades roughly as `ε/h^k` for order `k`;
/// built-in surfaces override all of them analytically.
pub trait AdmissibleGraph: Send + Sync {
    fn name(&self) -> &str;

    fn phi(&self, z: Vec2) -> f64;

    fn gradient(&self, z: Vec2) -> [f64; 2] {
        let h = fd_step(z);
        [
            (self.phi(z + Vec2::new(h, 0.0)) - self.phi(z - Vec2::new(h, 0.0))) / (2.0 * h),
            (self.phi(z + Vec2::new(0.0, h)) - self.phi(z - Vec2::new(0.0, h))) / (2.0 * h),
        ]
    }

    fn hessian(&self, z: Vec2) -> Hessian {
        let h = fd_step(z);
        let gx = |s: f64| self.gradient(z + Vec2::new(s, 0.0));
        let gy = |s: f64| self.gradient(z + Vec2::new(0.0, s));
        let (xp, xm, yp, ym) = (gx(h), gx(-h), gy(h), gy(-h));
        let xx = (xp[0] - xm[0]) / (2.0 * h);
        let yy = (yp[1] - ym[1]) / (2.0 * h);
        let xy = 0.5 * ((xp[1] - xm[1]) + (yp[0] - ym[0])) / (2.0 * h);
        [[xx, xy], [xy, yy]]
    }

    fn third(&self, z: Vec2) -> Third {
        let h = fd_step(z);
        let hx = |s: f64| self.hessian(z + Vec2::new(s, 0.0));
        let hy = |s: f64| self.hessian(z + Vec2::new(0.0, s));
        let (xp, xm, yp, ym) = (hx(h), hx(-h), hy(h), hy(-h));
        let d = 2.0 * h;
        [
            (xp[0][0] - xm[0][0]) / d,
            0.5 * ((xp[0][1] - xm[0][1]) + (yp[0][0] - ym[0][0])) / d,
            0.5 * ((xp[1][1] - xm[1][1]) + (yp[0][1] - ym[0][1])) / d,
            (yp[1][1] - ym[1][1]) / d,
        ]
    }

    /// Constant `C` claimed for `|D^k φ(z)| ≤ C |z|^{2m+2−k}`, `k = 1, 2, 3`.
    fn adm_constant(&self) -> f64;

    fn domain(&self) -> Domain {
        Domain::Plane
    }

    /// Radius of the disk used by the default verification grid.
    fn check_radius(&self) -> f64 {
        2.0
    }
}

fn fd_step(z: Vec2) -> f64 {
    1e-5 * (1.0 + z.norm())
}

/// Horizontal gradient data at one point of the graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphFrame {
    pub base: Vec2,
    pub phi: f64,
    /// `F = φ(z) − t`; zero for points on the graph.
    pub f_value: f64,
    pub zf: Vec2,
    pub is_characteristic: bool,
}

/// `|ZF| ≤ 1e-10 |z|^{2m+1}` marks a characteristic point. The bound has
/// the same homogeneity as `ZF`, so the test commutes with dilations.
pub fn char_tolerance(z: Vec2, params: &ModelParams) -> f64 {
    1e-10 * params.weight(z) * z.norm()
}

pub fn horizontal_gradient(g: &dyn AdmissibleGraph, z: Vec2, params: &ModelParams) -> Vec2 {
    let d = g.gradient(z);
    let w = params.weight(z);
    Vec2::new(d[0] - w * z.y, d[1] + w * z.x)
}

pub fn zf(g: &dyn AdmissibleGraph, z: Vec2, params: &ModelParams) -> GraphFrame {
    let v = horizontal_gradient(g, z, params);
    GraphFrame {
        base: z,
        phi: g.phi(z),
        f_value: 0.0,
        zf: v,
        is_characteristic: v.norm() <= char_tolerance(z, params),
    }
}

/// Frame at an arbitrary point `p`, with `F = φ(z) − t`.
pub fn zf_at(g: &dyn AdmissibleGraph, p: &Point, params: &ModelParams) -> GraphFrame {
    let mut frame = zf(g, p.z(), params);
    frame.f_value = frame.phi - p.t;
    frame
}

/// `|ZF(z)| / |z|^{2m}`, continuously extended by 0 at the origin.
pub fn zf_ratio(g: &dyn AdmissibleGraph, z: Vec2, params: &ModelParams) -> f64 {
    let w = params.weight(z);
    if w == 0.0 {
        0.0
    } else {
        horizontal_gradient(g, z, params).norm() / w
    }
}

/// Boundary point `(z, φ(z))`.
pub fn lift(g: &dyn AdmissibleGraph, z: Vec2) -> Point {
    Point::from_planar(z, g.phi(z))
}

/// `Ok(())` when `p` lies in the closed epigraph over the domain.
pub fn check_epigraph(g: &dyn AdmissibleGraph, p: &Point) -> Result<()> {
    if !g.domain().contains(p.z()) {
        return Err(Error::OutsideDomain { x: p.x, y: p.y });
    }
    let phi = g.phi(p.z());
    if p.t < phi {
        return Err(Error::BelowGraph { t: p.t, phi });
    }
    Ok(())
}

/// Open epigraph membership `t > φ(z)` over the domain.
pub fn in_open_epigraph(g: &dyn AdmissibleGraph, p: &Point) -> bool {
    g.domain().contains(p.z()) && p.t > g.phi(p.z())
}

/// Boundary points for scans: radii log-uniform in `[1e-3, R]` for
/// even indices, and points at log-uniform height `[1e-3, 1]·R/2` above or
/// below the x-axis for odd ones. The first two are always the origin and
/// `(R/4, 0)`, and the first point of each family takes the extreme of its
/// range. `R` is the surface's check radius.
pub fn boundary_samples(g: &dyn AdmissibleGraph, n: usize, seed: u64) -> Vec<Point> {
    let big_r = g.check_radius();
    let mut rng = crate::rng::stream(seed, 0x6a6f686e);
    let mut out = Vec::with_capacity(n);
    for z in [Vec2::ZERO, Vec2::new(0.25 * big_r, 0.0)] {
        if out.len() < n {
            out.push(lift(g, z));
        }
    }
    let mut i = 0usize;
    while out.len() < n {
        let u: f64 = if i < 2 { i as f64 } else { rng.gen() };
        let z = if i.is_multiple_of(2) {
            let r = 1e-3 * (big_r / 1e-3).powf(u);
            Vec2::from_polar(r, std::f64::consts::TAU * rng.gen::<f64>())
        } else {
            let x = big_r * (rng.gen::<f64>() - 0.5) * 1.5;
            let y = 0.5 * big_r * 10f64.powf(-3.0 * u);
            Vec2::new(x, if rng.gen::<bool>() { y } else { -y })
        };
        i += 1;
        if g.domain().contains(z) && z.norm() <= big_r {
            out.push(lift(g, z));
        }
    }
    out
}

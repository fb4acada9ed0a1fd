use super::{AdmissibleGraph, Domain, Hessian, Third};
use crate::error::{Error, Result};
use crate::model::{ModelParams, Vec2};

/// `φ ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Plane;

impl AdmissibleGraph for Plane {
    fn name(&self) -> &str {
        "plane"
    }
    fn phi(&self, _z: Vec2) -> f64 {
        0.0
    }
    fn gradient(&self, _z: Vec2) -> [f64; 2] {
        [0.0; 2]
    }
    fn hessian(&self, _z: Vec2) -> Hessian {
        [[0.0; 2]; 2]
    }
    fn third(&self, _z: Vec2) -> Third {
        [0.0; 4]
    }
    fn adm_constant(&self) -> f64 {
        1.0
    }
}

/// `φ(z) = −x^{2m+1} y`, with `x^{2m+1}` read as `sgn(x)|x|^{2m+1}` for
/// non-integer `m`. Every point of the x-axis is characteristic.
#[derive(Debug, Clone, Copy)]
pub struct SiegelExample {
    m: f64,
}

impl SiegelExample {
    pub fn new(params: &ModelParams) -> Self {
        Self { m: params.m() }
    }

    fn apow(x: f64, e: f64) -> f64 {
        if e == 0.0 {
            1.0
        } else {
            x.abs().powf(e)
        }
    }
}

impl AdmissibleGraph for SiegelExample {
    fn name(&self) -> &str {
        "siegel-example"
    }

    fn phi(&self, z: Vec2) -> f64 {
        -z.x.signum() * Self::apow(z.x, 2.0 * self.m + 1.0) * z.y
    }

    fn gradient(&self, z: Vec2) -> [f64; 2] {
        let k = 2.0 * self.m;
        [
            -(k + 1.0) * Self::apow(z.x, k) * z.y,
            -z.x.signum() * Self::apow(z.x, k + 1.0),
        ]
    }

    fn hessian(&self, z: Vec2) -> Hessian {
        let k = 2.0 * self.m;
        let xx = -(k + 1.0) * k * z.x.signum() * Self::apow(z.x, k - 1.0) * z.y;
        let xy = -(k + 1.0) * Self::apow(z.x, k);
        [[xx, xy], [xy, 0.0]]
    }

    fn third(&self, z: Vec2) -> Third {
        let k = 2.0 * self.m;
        [
            -(k + 1.0) * k * (k - 1.0) * Self::apow(z.x, k - 2.0) * z.y,
            -(k + 1.0) * k * z.x.signum() * Self::apow(z.x, k - 1.0),
            0.0,
            0.0,
        ]
    }

    fn adm_constant(&self) -> f64 {
        let k = 2.0 * self.m;
        // relative slack for rounding in the ratio test
        (k + 1.0) * k * (k - 1.0).max(1.0) * (1.0 + 1e-9)
    }
}

/// Caps `φ = σ √(1 − |z|^{2(m+1)})` of the bounded domain
/// `|z|^{2(m+1)} + t² < 1`, over the unit disk. `σ = −1` is the lower cap,
/// whose epigraph is the domain near the south pole.
#[derive(Debug, Clone, Copy)]
pub struct Cap {
    m: f64,
    sign: f64,
}

/// `s^e` with `0^e := 0` for `e ≠ 0`; the negative powers that appear are
/// always multiplied by monomials vanishing faster at the origin.
fn spow(s: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if s == 0.0 {
        0.0
    } else {
        s.powf(e)
    }
}

impl Cap {
    pub fn new(params: &ModelParams, sign: f64) -> Self {
        Self {
            m: params.m(),
            sign: if sign < 0.0 { -1.0 } else { 1.0 },
        }
    }

    /// `h, h', h'', h'''` of `h(s) = σ √(1 − s^{m+1})`.
    fn radial(&self, s: f64) -> [f64; 4] {
        let k = self.m + 1.0;
        let u = 1.0 - spow(s, k);
        let u1 = -k * spow(s, k - 1.0);
        let u2 = -k * (k - 1.0) * spow(s, k - 2.0);
        let u3 = -k * (k - 1.0) * (k - 2.0) * spow(s, k - 3.0);
        let r = u.sqrt();
        let h = r;
        let h1 = 0.5 * u1 / r;
        let h2 = -0.25 * u1 * u1 / (u * r) + 0.5 * u2 / r;
        let h3 = 0.375 * u1 * u1 * u1 / (u * u * r) - 0.75 * u1 * u2 / (u * r) + 0.5 * u3 / r;
        [h, h1, h2, h3].map(|v| self.sign * v)
    }
}

impl AdmissibleGraph for Cap {
    fn name(&self) -> &str {
        if self.sign > 0.0 {
            "cap+"
        } else {
            "cap-"
        }
    }

    fn phi(&self, z: Vec2) -> f64 {
        self.radial(z.norm_sq())[0]
    }

    fn gradient(&self, z: Vec2) -> [f64; 2] {
        let h1 = self.radial(z.norm_sq())[1];
        [2.0 * z.x * h1, 2.0 * z.y * h1]
    }

    fn hessian(&self, z: Vec2) -> Hessian {
        let [_, h1, h2, _] = self.radial(z.norm_sq());
        let (x, y) = (z.x, z.y);
        let xy = 4.0 * x * y * h2;
        [[2.0 * h1 + 4.0 * x * x * h2, xy], [xy, 2.0 * h1 + 4.0 * y * y * h2]]
    }

    fn third(&self, z: Vec2) -> Third {
        let [_, _, h2, h3] = self.radial(z.norm_sq());
        let (x, y) = (z.x, z.y);
        [
            12.0 * x * h2 + 8.0 * x * x * x * h3,
            4.0 * y * h2 + 8.0 * x * x * y * h3,
            4.0 * x * h2 + 8.0 * x * y * y * h3,
            12.0 * y * h2 + 8.0 * y * y * y * h3,
        ]
    }

    /// Bound on the verification disk of radius 0.75.
    fn adm_constant(&self) -> f64 {
        let k = self.m + 1.0;
        8.0 * k * k * k
    }

    fn domain(&self) -> Domain {
        Domain::Disk { radius: 1.0 }
    }

    fn check_radius(&self) -> f64 {
        0.75
    }
}

/// `φ = |z|²`: smooth but not flat enough at the origin for `m ≥ 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Paraboloid;

impl AdmissibleGraph for Paraboloid {
    fn name(&self) -> &str {
        "paraboloid"
    }
    fn phi(&self, z: Vec2) -> f64 {
        z.norm_sq()
    }
    fn gradient(&self, z: Vec2) -> [f64; 2] {
        [2.0 * z.x, 2.0 * z.y]
    }
    fn hessian(&self, _z: Vec2) -> Hessian {
        [[2.0, 0.0], [0.0, 2.0]]
    }
    fn third(&self, _z: Vec2) -> Third {
        [0.0; 4]
    }
    fn adm_constant(&self) -> f64 {
        10.0
    }
}

pub fn builtin_names() -> &'static [&'static str] {
    &["plane", "siegel-example", "cap+", "cap-", "paraboloid"]
}

pub fn surface_by_name(name: &str, params: &ModelParams) -> Result<Box<dyn AdmissibleGraph>> {
    Ok(match name {
        "plane" => Box::new(Plane),
        "siegel-example" => Box::new(SiegelExample::new(params)),
        "cap+" => Box::new(Cap::new(params, 1.0)),
        "cap-" => Box::new(Cap::new(params, -1.0)),
        "paraboloid" => Box::new(Paraboloid),
        other => return Err(Error::UnknownSurface(other.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_against_fd(g: &dyn AdmissibleGraph, z: Vec2) {
        let h = 1e-5;
        let d = g.gradient(z);
        let fx = (g.phi(z + Vec2::new(h, 0.0)) - g.phi(z - Vec2::new(h, 0.0))) / (2.0 * h);
        let fy = (g.phi(z + Vec2::new(0.0, h)) - g.phi(z - Vec2::new(0.0, h))) / (2.0 * h);
        assert!(
            (d[0] - fx).abs() < 1e-7 && (d[1] - fy).abs() < 1e-7,
            "{}: grad",
            g.name()
        );
        let hs = g.hessian(z);
        let gp = g.gradient(z + Vec2::new(h, 0.0));
        let gm = g.gradient(z - Vec2::new(h, 0.0));
        assert!(
            (hs[0][0] - (gp[0] - gm[0]) / (2.0 * h)).abs() < 1e-6,
            "{}: hxx",
            g.name()
        );
        assert!(
            (hs[0][1] - (gp[1] - gm[1]) / (2.0 * h)).abs() < 1e-6,
            "{}: hxy",
            g.name()
        );
        let t = g.third(z);
        let hp = g.hessian(z + Vec2::new(0.0, h));
        let hm = g.hessian(z - Vec2::new(0.0, h));
        let hxp = g.hessian(z + Vec2::new(h, 0.0));
        let hxm = g.hessian(z - Vec2::new(h, 0.0));
        assert!(
            (t[0] - (hxp[0][0] - hxm[0][0]) / (2.0 * h)).abs() < 1e-5,
            "{}: xxx",
            g.name()
        );
        assert!(
            (t[1] - (hp[0][0] - hm[0][0]) / (2.0 * h)).abs() < 1e-5,
            "{}: xxy",
            g.name()
        );
        assert!(
            (t[2] - (hp[0][1] - hm[0][1]) / (2.0 * h)).abs() < 1e-5,
            "{}: xyy",
            g.name()
        );
        assert!(
            (t[3] - (hp[1][1] - hm[1][1]) / (2.0 * h)).abs() < 1e-5,
            "{}: yyy",
            g.name()
        );
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        for m in [1.0, 1.5, 2.0, 3.25] {
            let params = ModelParams::new(m).unwrap();
            for name in builtin_names() {
                let g = surface_by_name(name, &params).unwrap();
                for z in [Vec2::new(0.31, -0.42), Vec2::new(-0.5, 0.2), Vec2::new(0.05, 0.6)] {
                    check_against_fd(g.as_ref(), z);
                }
            }
        }
    }

    #[test]
    fn cap_values() {
        let params = ModelParams::default();
        let up = Cap::new(&params, 1.0);
        assert_eq!(up.phi(Vec2::ZERO), 1.0);
        assert_eq!(up.third(Vec2::ZERO), [0.0; 4]);
        // |z|^4 + t^2 = 1
        let z = Vec2::new(0.6, 0.3);
        assert!((z.norm_sq().powi(2) + up.phi(z).powi(2) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unknown_name_is_rejected() {
        assert!(matches!(
            surface_by_name("torus", &ModelParams::default()),
            Err(Error::UnknownSurface(_))
        ));
    }
}

//! Flatness and expansion diagnostics for graphs.

use serde::{Deserialize, Serialize};

use super::{horizontal_gradient, AdmissibleGraph, Hessian};
use crate::error::{Error, Result};
use crate::model::{omega, ModelParams, Vec2};
use crate::stats::{loglog_fit, LinearFit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityRow {
    pub z: Vec2,
    /// `|D^k φ(z)| / |z|^{2m+2−k}` for `k = 1, 2, 3` (max-norm of entries).
    pub ratios: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub surface: String,
    pub rows: Vec<AdmissibilityRow>,
    pub max_ratios: [f64; 3],
    pub max_ratio: f64,
    pub constant: f64,
    /// Largest ratio on each annulus `|z| = 2^{-k}`, `k = 1..=20`.
    pub annuli: Vec<(f64, f64)>,
    pub pass: bool,
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Cartesian grid of the disk of radius `g.check_radius()`, origin removed.
pub fn admissibility_grid(g: &dyn AdmissibleGraph, per_side: usize) -> Vec<Vec2> {
    let r = g.check_radius();
    let n = per_side.max(2);
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let z = Vec2::new(
                -r + 2.0 * r * i as f64 / (n - 1) as f64,
                -r + 2.0 * r * j as f64 / (n - 1) as f64,
            );
            if z != Vec2::ZERO && z.norm() <= r && g.domain().contains(z) {
                out.push(z);
            }
        }
    }
    out
}

/// Ratios of `|D^kφ(z)| ≤ C|z|^{2m+2−k}` on `grid` plus 16 points on
/// each annulus `|z| = 2^{-k}`, `k = 1..=20`. Passes when every ratio is
/// finite and at most `g.adm_constant()`.
pub fn check_admissibility(
    g: &dyn AdmissibleGraph,
    grid: &[Vec2],
    params: &ModelParams,
) -> Result<AdmissibilityReport> {
    if grid.is_empty() {
        return Err(crate::error::invalid("grid", "must be non-empty"));
    }
    let row = |z: Vec2| -> Result<AdmissibilityRow> {
        let d1 = g.gradient(z);
        let h = g.hessian(z);
        let d3 = g.third(z);
        let r = z.norm();
        let e = params.homogeneous_order();
        let vals = [
            max_abs(&d1) / ModelParams::abs_pow(r, e - 1.0),
            max_abs(&[h[0][0], h[0][1], h[1][0], h[1][1]]) / ModelParams::abs_pow(r, e - 2.0),
            max_abs(&d3) / ModelParams::abs_pow(r, e - 3.0),
        ];
        if d1
            .iter()
            .chain(d3.iter())
            .chain(h.iter().flatten())
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("surface derivatives"));
        }
        Ok(AdmissibilityRow { z, ratios: vals })
    };
    let mut rows = grid
        .iter()
        .filter(|z| **z != Vec2::ZERO)
        .map(|z| row(*z))
        .collect::<Result<Vec<_>>>()?;
    let mut annuli = Vec::new();
    for k in 1..=20 {
        let rad = 0.5f64.powi(k);
        let mut worst = 0.0f64;
        for j in 0..16 {
            let z = Vec2::from_polar(rad, std::f64::consts::TAU * (j as f64 + 0.5) / 16.0);
            if !g.domain().contains(z) {
                continue;
            }
            let r = row(z)?;
            worst = worst.max(r.ratios.iter().fold(0.0, |a, b| a.max(*b)));
            rows.push(r);
        }
        annuli.push((rad, worst));
    }
    let mut max_ratios = [0.0f64; 3];
    for r in &rows {
        for (acc, v) in max_ratios.iter_mut().zip(r.ratios) {
            *acc = acc.max(v);
        }
    }
    let max_ratio = max_ratios.iter().fold(0.0f64, |a, b| a.max(*b));
    let constant = g.adm_constant();
    Ok(AdmissibilityReport {
        surface: g.name().to_string(),
        rows,
        max_ratios,
        max_ratio,
        constant,
        annuli,
        pass: max_ratio.is_finite() && max_ratio <= constant,
    })
}

/// The matrix `M(z, ζ)` of the first-order expansion of `ZF`, with the
/// `φ`-entries evaluated at the midpoint of `[z, ζ]`.
pub fn expansion_matrix(g: &dyn AdmissibleGraph, z: Vec2, zeta: Vec2, params: &ModelParams) -> Result<Hessian> {
    let r = z.norm();
    if r == 0.0 {
        return Err(Error::Precondition("expansion matrix needs z != 0".into()));
    }
    if zeta.norm() > 2.0 * r {
        return Err(Error::Precondition(format!(
            "expansion matrix needs |zeta| <= 2|z| ({} > {})",
            zeta.norm(),
            2.0 * r
        )));
    }
    let m = params.m();
    let mid = (z + zeta) * 0.5;
    let h = g.hessian(mid);
    let w = params.weight(z);
    let w2 = w / (r * r);
    let (x, y) = (z.x, z.y);
    Ok([
        [h[0][0] - 2.0 * m * w2 * x * y, h[0][1] - w2 * (r * r + 2.0 * m * y * y)],
        [h[1][0] + w2 * (r * r + 2.0 * m * x * x), h[1][1] + 2.0 * m * w2 * x * y],
    ])
}

fn apply(mat: &Hessian, v: Vec2) -> Vec2 {
    Vec2::new(mat[0][0] * v.x + mat[0][1] * v.y, mat[1][0] * v.x + mat[1][1] * v.y)
}

/// `|ZF(ζ) − ZF(z) − M(z, ζ)(ζ − z)|`.
pub fn expansion_residual(g: &dyn AdmissibleGraph, z: Vec2, zeta: Vec2, params: &ModelParams) -> Result<f64> {
    let mat = expansion_matrix(g, z, zeta, params)?;
    let lhs = horizontal_gradient(g, zeta, params) - horizontal_gradient(g, z, params);
    Ok((lhs - apply(&mat, zeta - z)).norm())
}

/// `|φ(ζ) − φ(z) + μ^{2m} ω(z, ζ) − ⟨ZF(z), ζ − z⟩|`, `μ = max{|z|, |ζ|}`.
pub fn cubic_expansion_residual(g: &dyn AdmissibleGraph, z: Vec2, zeta: Vec2, params: &ModelParams) -> f64 {
    let mu = z.norm().max(zeta.norm());
    let lhs = g.phi(zeta) - g.phi(z) + params.weight_from_sq(mu * mu) * omega(z, zeta);
    (lhs - horizontal_gradient(g, z, params).dot(zeta - z)).abs()
}

/// Log-log slope of `residual(h)` over the steps `hs`.
pub fn fit_residual_exponent<F: Fn(f64) -> f64>(residual: F, hs: &[f64]) -> Option<LinearFit> {
    let ys: Vec<f64> = hs.iter().map(|&h| residual(h)).collect();
    loglog_fit(hs, &ys)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nondegeneracy {
    pub z: Vec2,
    /// `max_{u ∈ {e₁, e₂}} min_ζ |M(z, ζ) u|`.
    pub best: f64,
    /// 0 for `e₁`, 1 for `e₂`.
    pub direction: usize,
    /// `|z|^{2m}`.
    pub threshold: f64,
    pub pass: bool,
}

/// Samples `ζ` on four rings of radius up to `eps0 |z|` (16 angles each,
/// plus `ζ = z`) and evaluates the coordinate-direction lower bound for
/// `|M(z, ζ) u|`.
pub fn nondegeneracy(g: &dyn AdmissibleGraph, z: Vec2, eps0: f64, params: &ModelParams) -> Result<Nondegeneracy> {
    let r = z.norm();
    let mut zetas = vec![z];
    for ring in 1..=4 {
        for j in 0..16 {
            let rho = eps0 * r * ring as f64 / 4.0;
            zetas.push(z + Vec2::from_polar(rho, std::f64::consts::TAU * j as f64 / 16.0));
        }
    }
    let mut mins = [f64::INFINITY; 2];
    for zeta in zetas {
        if !g.domain().contains(zeta) {
            continue;
        }
        let mat = expansion_matrix(g, z, zeta, params)?;
        mins[0] = mins[0].min(apply(&mat, Vec2::new(1.0, 0.0)).norm());
        mins[1] = mins[1].min(apply(&mat, Vec2::new(0.0, 1.0)).norm());
    }
    let direction = if mins[1] > mins[0] { 1 } else { 0 };
    let best = mins[direction];
    let threshold = params.weight(z);
    Ok(Nondegeneracy {
        z,
        best,
        direction,
        threshold,
        pass: best >= threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualExponents {
    pub z: Vec2,
    /// Fit of [`cubic_expansion_residual`].
    pub cubic: Option<LinearFit>,
    /// Fit of [`expansion_residual`].
    pub matrix: Option<LinearFit>,
}

/// Residual exponents along `ζ = z + h (cos 0.7, sin 0.7)` for seven
/// steps `h` geometric in `[1e-5, 1e-3] · max{|z|, 1}`.
pub fn residual_exponents(g: &dyn AdmissibleGraph, z: Vec2, params: &ModelParams) -> ResidualExponents {
    let e = Vec2::from_polar(1.0, 0.7);
    let scale = z.norm().max(1.0);
    let hs: Vec<f64> = (0..7)
        .map(|k| scale * 1e-3 * 10f64.powf(-2.0 * k as f64 / 6.0))
        .collect();
    ResidualExponents {
        z,
        cubic: fit_residual_exponent(|h| cubic_expansion_residual(g, z, z + e * h, params), &hs),
        matrix: fit_residual_exponent(|h| expansion_residual(g, z, z + e * h, params).unwrap_or(f64::NAN), &hs),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracySweep {
    pub eps0: f64,
    pub pass: bool,
    /// Smallest `best / threshold` over the grid.
    pub min_margin: f64,
}

/// [`nondegeneracy`] over `grid` for each `ε₀`. Returns one row per value.
pub fn nondegeneracy_sweep(
    g: &dyn AdmissibleGraph,
    grid: &[Vec2],
    eps0s: &[f64],
    params: &ModelParams,
) -> Result<Vec<NondegeneracySweep>> {
    eps0s
        .iter()
        .map(|&eps0| {
            let mut min_margin = f64::INFINITY;
            let mut pass = true;
            for &z in grid {
                let nd = nondegeneracy(g, z, eps0, params)?;
                min_margin = min_margin.min(nd.best / nd.threshold);
                pass &= nd.pass;
            }
            Ok(NondegeneracySweep { eps0, pass, min_margin })
        })
        .collect()
}

/// Grid points of [`admissibility_grid`] in the annulus `lo ≤ |z| ≤ hi`.
pub fn annulus_grid(g: &dyn AdmissibleGraph, per_side: usize, lo: f64, hi: f64) -> Vec<Vec2> {
    admissibility_grid(g, per_side)
        .into_iter()
        .filter(|z| z.norm() >= lo && z.norm() <= hi)
        .collect()
}

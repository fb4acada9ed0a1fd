//! Two-leg John curves in an epigraph `{t > φ(z)}` and the sampled
//! twisted-cone test `B(γ(s), λ diam γ|[0,s]) ⊂ Ω`.
//!
//! From `p = (z, t)` the first leg follows the horizontal flow of
//! `uX + vY`, `(u, v) = −ZF(z)/|ZF(z)|`, for `s ∈ [0, s̄]` with
//! `s̄ = ε₀ |ZF(z)| / |z|^{2m}`; along it `F = φ − t` decreases at rate
//! `|ZF|`. The second leg is the vertical ray above the switch point,
//! parametrized by `s = s̄ + τ^{2m+2}`.

use serde::{Deserialize, Serialize};

use crate::config::CalibrationConfig;
use crate::error::Result;
use crate::exec::{map_indexed, Execution};
use crate::model::{flow, ModelParams, Point, Vec2};
use crate::quasimetric::{delta_sym, sample_ball, BallEnvelope};
use crate::report::{fmt_f64, CsvRow};
use crate::rng::derive_seed;
use crate::stats::quantile;
use crate::surface::{check_epigraph, horizontal_gradient, in_open_epigraph, AdmissibleGraph, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JohnCurve {
    pub start: Point,
    pub direction: Vec2,
    pub switch_time: f64,
    pub eps0: f64,
    pub leg1_end: Point,
    /// `2m + 2`
    pub order: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub s: f64,
}

impl JohnCurve {
    pub fn point_at(&self, s: f64, params: &ModelParams) -> Point {
        if s <= self.switch_time {
            flow(self.start, s * self.direction.x, s * self.direction.y, params)
        } else {
            let mut q = self.leg1_end;
            q.t += s - self.switch_time;
            q
        }
    }

    pub fn s_of_tau(&self, tau: f64) -> f64 {
        self.switch_time + tau.powf(self.order)
    }

    pub fn tau_of_s(&self, s: f64) -> f64 {
        (s - self.switch_time).max(0.0).powf(1.0 / self.order)
    }

    pub fn point_at_tau(&self, tau: f64, params: &ModelParams) -> Point {
        self.point_at(self.s_of_tau(tau), params)
    }

    /// `s̄ + min{τ, τ^{m+1}/|z_s̄|^m}`, the closed-form stand-in for
    /// `diam γ|[0, s̄ + τ^{2m+2}]`.
    pub fn surrogate_diameter(&self, tau: f64, params: &ModelParams) -> f64 {
        let m = params.m();
        let r = self.leg1_end.z().norm();
        let m_tau = if r == 0.0 {
            tau
        } else {
            tau.min(tau.powf(m + 1.0) / r.powf(m))
        };
        self.switch_time + m_tau
    }

    /// `n + 1` samples of leg 1 (uniform in `s`) followed by `n` samples of
    /// leg 2 (uniform in `τ`) up to `s_end`.
    pub fn samples(&self, s_end: f64, n: usize, params: &ModelParams) -> Vec<CurveSample> {
        let n = n.max(1);
        let s1 = s_end.min(self.switch_time).max(0.0);
        let mut out = Vec::with_capacity(2 * n + 1);
        for k in 0..=n {
            let s = s1 * k as f64 / n as f64;
            out.push(sample(self.point_at(s, params), s));
        }
        if s_end > self.switch_time {
            let tau_end = self.tau_of_s(s_end);
            for k in 1..=n {
                let s = self.s_of_tau(tau_end * k as f64 / n as f64);
                out.push(sample(self.point_at(s, params), s));
            }
        }
        out
    }

    /// Whether every sampled leg-1 point stays in `|z|/2 ≤ |z_s| ≤ 3|z|/2`.
    pub fn leg1_in_annulus(&self, n: usize, params: &ModelParams) -> bool {
        let r = self.start.z().norm();
        self.samples(self.switch_time, n, params).iter().take(n + 1).all(|c| {
            let rs = Vec2::new(c.x, c.y).norm();
            rs >= 0.5 * r && rs <= 1.5 * r
        })
    }
}

fn sample(p: Point, s: f64) -> CurveSample {
    CurveSample {
        x: p.x,
        y: p.y,
        t: p.t,
        s,
    }
}

fn scaled_char_tol(z: Vec2, tol: f64, params: &ModelParams) -> f64 {
    tol * params.weight(z) * z.norm()
}

fn direction_with_tol(g: &dyn AdmissibleGraph, z: Vec2, tol: f64, params: &ModelParams) -> (Vec2, f64) {
    let zf = horizontal_gradient(g, z, params);
    let n = zf.norm();
    if n > scaled_char_tol(z, tol, params) {
        (-zf * (1.0 / n), n)
    } else {
        (Vec2::new(1.0, 0.0), 0.0)
    }
}

/// `−ZF(z)/|ZF(z)|`, or `(1, 0)` at characteristic points.
pub fn john_direction(g: &dyn AdmissibleGraph, z: Vec2, params: &ModelParams) -> Vec2 {
    direction_with_tol(g, z, CalibrationConfig::default().char_tol, params).0
}

pub fn build_john_curve(
    g: &dyn AdmissibleGraph,
    p: &Point,
    cfg: &CalibrationConfig,
    params: &ModelParams,
) -> Result<JohnCurve> {
    check_epigraph(g, p)?;
    let z = p.z();
    let (direction, zf_norm) = direction_with_tol(g, z, cfg.char_tol, params);
    let w = params.weight(z);
    let switch_time = if zf_norm == 0.0 || w == 0.0 {
        0.0
    } else {
        cfg.eps0 * zf_norm / w
    };
    let leg1_end = flow(*p, switch_time * direction.x, switch_time * direction.y, params);
    Ok(JohnCurve {
        start: *p,
        direction,
        switch_time,
        eps0: cfg.eps0,
        leg1_end,
        order: params.homogeneous_order(),
    })
}

/// Largest pairwise `δ` over a point set.
pub fn pairwise_diameter(points: &[Point], params: &ModelParams) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(delta_sym(a, b, params));
        }
    }
    best
}

/// `diam γ|[0, s_end]` on 64 samples per leg, doubled until the value
/// moves by less than 1% (at most 512 per leg).
pub fn curve_diameter(curve: &JohnCurve, s_end: f64, params: &ModelParams) -> f64 {
    let eval = |n: usize| {
        let pts: Vec<Point> = curve
            .samples(s_end, n, params)
            .iter()
            .map(|c| Point::new(c.x, c.y, c.t))
            .collect();
        pairwise_diameter(&pts, params)
    };
    let mut n = 64;
    let mut d = eval(n);
    while n < 512 {
        n *= 2;
        let d2 = eval(n);
        let settled = (d2 - d).abs() <= 0.01 * d2;
        d = d2;
        if settled {
            break;
        }
    }
    d
}

/// Fixed probe points of the envelope kept alongside the random samples:
/// the 26 non-central nodes of a `{0.02, 0.5, 0.98}³` grid.
fn envelope_probes(center: &Point, r: f64, params: &ModelParams) -> Vec<Point> {
    let env = BallEnvelope::new(*center, r, params);
    let levels = [0.02, 0.5, 0.98];
    let mut out = Vec::with_capacity(26);
    for a in levels {
        for b in levels {
            for c in levels {
                if a == 0.5 && b == 0.5 && c == 0.5 {
                    continue;
                }
                let q = env.point([a, b, c]);
                if crate::quasimetric::delta_value(center, &q, params) <= r {
                    out.push(q);
                }
            }
        }
    }
    out
}

/// Whether every sampled point of `B_δ(center, r)` lies in the open
/// epigraph. Sampling failures count as a failed ball.
pub fn ball_inside(
    g: &dyn AdmissibleGraph,
    center: &Point,
    r: f64,
    n_samples: usize,
    seed: u64,
    params: &ModelParams,
) -> bool {
    if r <= 0.0 {
        return in_open_epigraph(g, center) || check_epigraph(g, center).is_ok();
    }
    let Ok(samples) = sample_ball(center, r, n_samples, seed, params) else {
        return false;
    };
    samples.iter().all(|s| in_open_epigraph(g, &s.point))
        && envelope_probes(center, r, params)
            .iter()
            .all(|q| in_open_epigraph(g, q))
}

/// Largest `λ ∈ [0, λ_max]` with `pass(λ)`, by doubling then bisection to
/// relative precision `1e-3`.
pub fn largest_passing<F: Fn(f64) -> bool>(pass: F, lambda_max: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0f64.min(lambda_max);
    while pass(hi) {
        lo = hi;
        if hi >= lambda_max {
            return lambda_max;
        }
        hi = (2.0 * hi).min(lambda_max);
    }
    for _ in 0..60 {
        if hi - lo <= 1e-3 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if pass(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

const LAMBDA_MAX: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeTime {
    pub s: f64,
    /// 1 or 2.
    pub leg: u8,
    pub point: Point,
    pub diameter: f64,
    pub surrogate: f64,
    pub lambda_star: f64,
    pub pass_at_target: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub start: Point,
    pub switch_time: f64,
    pub lambda_target: f64,
    /// Minimum of the per-time values.
    pub lambda_star: f64,
    pub times: Vec<ConeTime>,
    pub monotone_diameter: bool,
    pub pass: bool,
}

/// Verification times: a quarter on leg 1 geometric in `s ∈ [s̄/100, s̄]`
/// (when `s̄ > 0`), the rest geometric in `τ` over four decades around
/// `|z|` (1 at the origin), clipped to stay inside a disk domain.
pub fn cone_times(g: &dyn AdmissibleGraph, curve: &JohnCurve, n_times: usize) -> Vec<(f64, u8)> {
    let n_times = n_times.max(1);
    let mut out = Vec::with_capacity(n_times);
    let n1 = if curve.switch_time > 0.0 && n_times > 1 {
        (n_times / 4).max(1)
    } else {
        0
    };
    for k in 0..n1 {
        let f = if n1 == 1 { 1.0 } else { k as f64 / (n1 - 1) as f64 };
        out.push((curve.switch_time * 10f64.powf(-2.0 * (1.0 - f)), 1));
    }
    let r = curve.leg1_end.z().norm();
    let ell = if r > 0.0 { r } else { 1.0 };
    let mut tau_hi = 10.0 * ell;
    if let Domain::Disk { radius } = g.domain() {
        tau_hi = tau_hi.min(0.25 * (radius - r).max(0.0));
    }
    let tau_lo = 1e-3 * ell.min(tau_hi.max(f64::MIN_POSITIVE));
    let n2 = n_times - n1;
    for k in 0..n2 {
        let f = if n2 == 1 { 1.0 } else { k as f64 / (n2 - 1) as f64 };
        let tau = tau_lo * (tau_hi / tau_lo).powf(f);
        out.push((curve.s_of_tau(tau), 2));
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub fn verify_cone(
    g: &dyn AdmissibleGraph,
    curve: &JohnCurve,
    cfg: &CalibrationConfig,
    n_times: usize,
    n_samples: usize,
    seed: u64,
    exec: Execution,
    params: &ModelParams,
) -> ConeReport {
    let times = cone_times(g, curve, n_times);
    let rows: Vec<ConeTime> = map_indexed(exec, &times, |i, &(s, leg)| {
        let point = curve.point_at(s, params);
        let diameter = curve_diameter(curve, s, params);
        let row_seed = derive_seed(seed, i as u64);
        let lambda_star = largest_passing(
            |lam| ball_inside(g, &point, lam * diameter, n_samples.max(1), row_seed, params),
            LAMBDA_MAX,
        );
        ConeTime {
            s,
            leg,
            point,
            diameter,
            surrogate: curve.surrogate_diameter(curve.tau_of_s(s), params),
            lambda_star,
            pass_at_target: lambda_star >= cfg.lambda_target,
        }
    });
    let lambda_star = rows.iter().map(|r| r.lambda_star).fold(f64::INFINITY, f64::min);
    let monotone_diameter = rows.windows(2).all(|w| w[1].diameter >= w[0].diameter * (1.0 - 1e-12));
    ConeReport {
        start: curve.start,
        switch_time: curve.switch_time,
        lambda_target: cfg.lambda_target,
        lambda_star,
        pass: lambda_star > 0.0 && rows.iter().all(|r| r.pass_at_target),
        times: rows,
        monotone_diameter,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JohnRow {
    pub start: Point,
    pub switch_time: f64,
    pub lambda_star: f64,
    pub monotone_diameter: bool,
}

impl CsvRow for JohnRow {
    fn header() -> &'static [&'static str] {
        &["px", "py", "pt", "switch_time", "lambda_star"]
    }
    fn fields(&self) -> Vec<String> {
        [
            self.start.x,
            self.start.y,
            self.start.t,
            self.switch_time,
            self.lambda_star,
        ]
        .iter()
        .map(|v| fmt_f64(*v))
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JohnSummary {
    pub n: usize,
    pub min_lambda: f64,
    pub median_lambda: f64,
    /// `min λ* ≥ ½ median λ*` and `min λ* > 0`.
    pub uniform: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JohnScanReport {
    pub rows: Vec<JohnRow>,
    pub summary: JohnSummary,
}

pub fn john_scan(
    g: &dyn AdmissibleGraph,
    starts: &[Point],
    cfg: &CalibrationConfig,
    n_times: usize,
    n_samples: usize,
    exec: Execution,
    params: &ModelParams,
) -> Result<JohnScanReport> {
    let rows = map_indexed(exec, starts, |i, p| -> Result<JohnRow> {
        let curve = build_john_curve(g, p, cfg, params)?;
        let rep = verify_cone(
            g,
            &curve,
            cfg,
            n_times,
            n_samples,
            derive_seed(cfg.seed, i as u64),
            exec,
            params,
        );
        Ok(JohnRow {
            start: *p,
            switch_time: curve.switch_time,
            lambda_star: rep.lambda_star,
            monotone_diameter: rep.monotone_diameter,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let lambdas: Vec<f64> = rows.iter().map(|r| r.lambda_star).collect();
    let min_lambda = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let median_lambda = quantile(&lambdas, 0.5).unwrap_or(0.0);
    Ok(JohnScanReport {
        summary: JohnSummary {
            n: rows.len(),
            min_lambda,
            median_lambda,
            uniform: !rows.is_empty() && min_lambda > 0.0 && min_lambda >= 0.5 * median_lambda,
        },
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{lift, Plane, SiegelExample};

    fn cfg() -> CalibrationConfig {
        CalibrationConfig::default()
    }

    #[test]
    fn plane_direction_and_switch_time() {
        let params = ModelParams::default();
        let d = john_direction(&Plane, Vec2::new(1.0, 0.0), &params);
        assert_eq!(d, Vec2::new(0.0, -1.0));
        let c = build_john_curve(&Plane, &Point::new(1.0, 0.0, 0.0), &cfg(), &params).unwrap();
        assert!((c.switch_time - 0.05).abs() < 1e-15);
        // flowing along −Y raises t on the plane at (1, 0)
        assert!(c.leg1_end.t > 0.0);
        assert_eq!(c.point_at(0.0, &params), c.start);
    }

    #[test]
    fn characteristic_start_is_a_vertical_ray() {
        let params = ModelParams::default();
        let g = SiegelExample::new(&params);
        let p = lift(&g, Vec2::new(0.5, 0.0));
        let c = build_john_curve(&g, &p, &cfg(), &params).unwrap();
        assert_eq!(c.switch_time, 0.0);
        let q = c.point_at(2.0, &params);
        assert_eq!((q.x, q.y, q.t), (p.x, p.y, p.t + 2.0));
    }

    #[test]
    fn start_below_graph_is_rejected() {
        let params = ModelParams::default();
        assert!(build_john_curve(&Plane, &Point::new(0.3, 0.1, -1.0), &cfg(), &params).is_err());
    }

    #[test]
    fn returned_direction_attains_the_full_gradient() {
        let params = ModelParams::new(1.5).unwrap();
        let g = SiegelExample::new(&params);
        for z in [Vec2::new(0.4, 0.3), Vec2::new(-1.1, 0.2)] {
            let zf = horizontal_gradient(&g, z, &params);
            let d = john_direction(&g, z, &params);
            assert!((-d.dot(zf) - zf.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn leg1_decreases_f_and_stays_in_annulus() {
        let params = ModelParams::default();
        let g = SiegelExample::new(&params);
        let p = lift(&g, Vec2::new(0.7, 0.4));
        let c = build_john_curve(&g, &p, &cfg(), &params).unwrap();
        assert!(c.switch_time > 0.0);
        assert!(c.leg1_in_annulus(32, &params));
        let end = c.leg1_end;
        assert!(end.t > g.phi(end.z()));
    }

    #[test]
    fn surrogate_tracks_sampled_diameter() {
        let params = ModelParams::default();
        let c = build_john_curve(&Plane, &Point::new(1.0, 0.0, 0.0), &cfg(), &params).unwrap();
        for tau in [0.01, 0.1, 1.0, 10.0] {
            let d = curve_diameter(&c, c.s_of_tau(tau), &params);
            let s = c.surrogate_diameter(tau, &params);
            assert!(d / s < 4.0 && s / d < 4.0, "tau {tau}: {d} vs {s}");
        }
    }

    #[test]
    fn largest_passing_bisects() {
        let v = largest_passing(|l| l <= 0.3, 1e3);
        assert!((v - 0.3).abs() < 1e-3);
        assert_eq!(largest_passing(|_| true, 8.0), 8.0);
        assert_eq!(largest_passing(|_| false, 8.0), 0.0);
    }

    #[test]
    fn plane_cone_is_positive() {
        let params = ModelParams::default();
        let c = build_john_curve(&Plane, &Point::new(1.0, 0.0, 0.0), &cfg(), &params).unwrap();
        let rep = verify_cone(&Plane, &c, &cfg(), 8, 64, 1, Execution::Sequential, &params);
        assert!(rep.lambda_star > 0.0, "{rep:?}");
        assert!(rep.monotone_diameter);
    }
}

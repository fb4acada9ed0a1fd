//! (ε, δ)-curves between two points of an epigraph, glued from the two
//! John curves and a near-minimizing connector.
//!
//! With `ρ(z) = |ZF(z)| / |z|^{2m}` (0 at the origin) and `d̂` the refined
//! distance estimate, a pair is in case A when `d̂ < μ max{ρ(z), ρ(ζ)}`.
//! Case A stops both John curves at `ŝ = H d̂`, still on their first legs.
//! Case B climbs both vertical legs by the same `τ`, chosen so that the
//! larger of the two truncated diameters equals `M d̂`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::CalibrationConfig;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::johncurve::{ball_inside, build_john_curve, curve_diameter, largest_passing, JohnCurve};
use crate::model::{flow, ModelParams, Point, Vec2};
use crate::oracle::{connect_constructive, refine_distance, RefineOptions};
use crate::path::HorizontalPath;
use crate::quasimetric::{delta_sym, delta_value};
use crate::report::{fmt_f64, CsvRow};
use crate::rng::{derive_seed, stream};
use crate::surface::{check_epigraph, horizontal_gradient, in_open_epigraph, zf_ratio, AdmissibleGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    A,
    B,
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Case::A => "A",
            Case::B => "B",
        })
    }
}

pub fn refine_options(cfg: &CalibrationConfig) -> RefineOptions {
    RefineOptions {
        seed: cfg.seed,
        ..Default::default()
    }
}

/// Refined upper estimate `d̂(p, q)` and the witness path.
pub fn distance_estimate(
    p: &Point,
    q: &Point,
    cfg: &CalibrationConfig,
    params: &ModelParams,
) -> Result<(f64, HorizontalPath)> {
    let init = connect_constructive(p, q, params)?;
    let est = refine_distance(p, q, &init, &refine_options(cfg), params)?;
    Ok((est.upper, est.witness))
}

/// Case label for a given distance value `d`.
pub fn classify_with_distance(
    g: &dyn AdmissibleGraph,
    p: &Point,
    q: &Point,
    d: f64,
    cfg: &CalibrationConfig,
    params: &ModelParams,
) -> Case {
    let rho = zf_ratio(g, p.z(), params).max(zf_ratio(g, q.z(), params));
    if d < cfg.mu_split * rho {
        Case::A
    } else {
        Case::B
    }
}

pub fn classify_case(
    g: &dyn AdmissibleGraph,
    p: &Point,
    q: &Point,
    cfg: &CalibrationConfig,
    params: &ModelParams,
) -> Result<Case> {
    check_epigraph(g, p)?;
    check_epigraph(g, q)?;
    let (d, _) = distance_estimate(p, q, cfg, params)?;
    Ok(classify_with_distance(g, p, q, d, cfg, params))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformCurve {
    pub p: Point,
    pub q: Point,
    pub case: Case,
    pub d_hat: f64,
    pub john_p: JohnCurve,
    pub john_q: JohnCurve,
    pub s_hat_p: f64,
    pub s_hat_q: f64,
    /// Common vertical climb in case B.
    pub tau: Option<f64>,
    pub connector: HorizontalPath,
    /// Euclidean distance from the connector endpoint to `γ_q(ŝ_q)`.
    pub connector_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformSample {
    pub point: Point,
    /// 0: John piece from `p`, 1: connector, 2: John piece into `q`.
    pub piece: u8,
    /// `min` of the sampled diameters of the two sub-arcs ending here.
    pub delta_t: f64,
}

impl UniformCurve {
    pub fn is_degenerate(&self) -> bool {
        self.p == self.q
    }

    /// Ordered points along the whole curve, `n` per leg and per connector.
    pub fn points(&self, n: usize, params: &ModelParams) -> Vec<(Point, u8)> {
        if self.is_degenerate() {
            return vec![(self.p, 0)];
        }
        let n = n.max(1);
        let to_point = |c: &crate::johncurve::CurveSample| Point::new(c.x, c.y, c.t);
        let mut out: Vec<(Point, u8)> = self
            .john_p
            .samples(self.s_hat_p, n, params)
            .iter()
            .map(|c| (to_point(c), 0))
            .collect();
        let total = self.connector.total_time();
        for k in 1..n {
            out.push((self.connector.point_at(total * k as f64 / n as f64, params), 1));
        }
        let back: Vec<(Point, u8)> = self
            .john_q
            .samples(self.s_hat_q, n, params)
            .iter()
            .rev()
            .map(|c| (to_point(c), 2))
            .collect();
        out.extend(back);
        out
    }

    /// Samples with the `Δ_t` profile.
    pub fn samples(&self, n: usize, params: &ModelParams) -> Vec<UniformSample> {
        let pts = self.points(n, params);
        let k = pts.len();
        let mut prefix = vec![0.0f64; k];
        let mut suffix = vec![0.0f64; k];
        for i in 1..k {
            let far = (0..i)
                .map(|j| delta_sym(&pts[j].0, &pts[i].0, params))
                .fold(0.0, f64::max);
            prefix[i] = prefix[i - 1].max(far);
        }
        for i in (0..k.saturating_sub(1)).rev() {
            let far = (i + 1..k)
                .map(|j| delta_sym(&pts[j].0, &pts[i].0, params))
                .fold(0.0, f64::max);
            suffix[i] = suffix[i + 1].max(far);
        }
        pts.iter()
            .enumerate()
            .map(|(i, &(point, piece))| UniformSample {
                point,
                piece,
                delta_t: prefix[i].min(suffix[i]),
            })
            .collect()
    }
}

/// Smallest `τ ≥ 0` with `f(τ) ≥ 0` for nondecreasing `f`, by doubling
/// from `scale` and bisection to relative precision `1e-4`.
fn solve_increasing<F: Fn(f64) -> f64>(f: F, scale: f64) -> Result<f64> {
    if f(0.0) >= 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = scale.max(f64::MIN_POSITIVE);
    let mut doublings = 0;
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 || !hi.is_finite() {
            return Err(Error::RootFinding { lo, hi });
        }
    }
    while hi - lo > 1e-4 * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

pub fn build_uniform_curve(
    g: &dyn AdmissibleGraph,
    p: &Point,
    q: &Point,
    cfg: &CalibrationConfig,
    params: &ModelParams,
) -> Result<UniformCurve> {
    let john_p = build_john_curve(g, p, cfg, params)?;
    let john_q = build_john_curve(g, q, cfg, params)?;
    if p == q {
        return Ok(UniformCurve {
            p: *p,
            q: *q,
            case: Case::B,
            d_hat: 0.0,
            john_p,
            john_q,
            s_hat_p: 0.0,
            s_hat_q: 0.0,
            tau: None,
            connector: HorizontalPath::new(*p),
            connector_gap: 0.0,
        });
    }
    let (d_hat, _) = distance_estimate(p, q, cfg, params)?;
    let case = classify_with_distance(g, p, q, d_hat, cfg, params);
    let (s_hat_p, s_hat_q, tau) = match case {
        Case::A => {
            let s = cfg.h * d_hat;
            (s, s, None)
        }
        Case::B => {
            let target = cfg.m_big * d_hat;
            let tau = solve_increasing(
                |tau| {
                    let dp = curve_diameter(&john_p, john_p.s_of_tau(tau), params);
                    let dq = curve_diameter(&john_q, john_q.s_of_tau(tau), params);
                    dp.max(dq) - target
                },
                d_hat,
            )?;
            (john_p.s_of_tau(tau), john_q.s_of_tau(tau), Some(tau))
        }
    };
    let a = john_p.point_at(s_hat_p, params);
    let b = john_q.point_at(s_hat_q, params);
    let (_, connector) = distance_estimate(&a, &b, cfg, params)?;
    let connector_gap = connector.endpoint(params).euclid_dist(&b);
    Ok(UniformCurve {
        p: *p,
        q: *q,
        case,
        d_hat,
        john_p,
        john_q,
        s_hat_p,
        s_hat_q,
        tau,
        connector,
        connector_gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformReport {
    pub case: Case,
    pub d_hat: f64,
    pub diameter: f64,
    pub diam_ratio: f64,
    pub diam_pass: bool,
    /// Largest corkscrew constant passing at every sample.
    pub eps_star: f64,
    /// Case A only: `ŝ ≤ min{s̄, s̄̄}`.
    pub time_compatible: Option<bool>,
    /// Case A only: `−⟨(u, v), ZF(ζ)⟩ > ¼ |ZF(ζ)|` for the John direction at `ζ`
    /// of the point with the smaller `ρ`.
    pub direction_margin: Option<bool>,
    /// Case A only: `δ(γ_p(ŝ), γ_q(ŝ)) / ŝ`.
    pub connector_ratio: Option<f64>,
    pub connector_gap: f64,
}

const EPS_MAX: f64 = 1e3;

#[allow(clippy::too_many_arguments)]
pub fn verify_uniform(
    g: &dyn AdmissibleGraph,
    curve: &UniformCurve,
    cfg: &CalibrationConfig,
    n_per_piece: usize,
    n_samples: usize,
    seed: u64,
    exec: Execution,
    params: &ModelParams,
) -> UniformReport {
    if curve.is_degenerate() {
        return UniformReport {
            case: curve.case,
            d_hat: 0.0,
            diameter: 0.0,
            diam_ratio: 0.0,
            diam_pass: true,
            eps_star: EPS_MAX,
            time_compatible: None,
            direction_margin: None,
            connector_ratio: None,
            connector_gap: 0.0,
        };
    }
    let samples = curve.samples(n_per_piece, params);
    let fine: Vec<Point> = curve
        .points(4 * n_per_piece.max(16), params)
        .into_iter()
        .map(|x| x.0)
        .collect();
    let diameter = crate::johncurve::pairwise_diameter(&fine, params);
    let diam_ratio = diameter / curve.d_hat;
    let eps_each = map_indexed(exec, &samples, |i, s| {
        if s.delta_t <= 0.0 {
            return EPS_MAX;
        }
        let row_seed = derive_seed(seed, i as u64);
        largest_passing(
            |eps| ball_inside(g, &s.point, eps * s.delta_t, n_samples, row_seed, params),
            EPS_MAX,
        )
    });
    let eps_star = eps_each.into_iter().fold(EPS_MAX, f64::min);
    let (time_compatible, direction_margin, connector_ratio) = match curve.case {
        Case::A => {
            let (jp, jq) = (&curve.john_p, &curve.john_q);
            let compat = curve.s_hat_p <= jp.switch_time.min(jq.switch_time);
            let weaker = if zf_ratio(g, curve.p.z(), params) >= zf_ratio(g, curve.q.z(), params) {
                jq
            } else {
                jp
            };
            let zf = horizontal_gradient(g, weaker.start.z(), params);
            let margin = -weaker.direction.dot(zf) > 0.25 * zf.norm();
            let a = jp.point_at(curve.s_hat_p, params);
            let b = jq.point_at(curve.s_hat_q, params);
            (
                Some(compat),
                Some(margin),
                Some(delta_sym(&a, &b, params) / curve.s_hat_p),
            )
        }
        Case::B => (None, None, None),
    };
    UniformReport {
        case: curve.case,
        d_hat: curve.d_hat,
        diameter,
        diam_ratio,
        diam_pass: diam_ratio <= cfg.inv_delta,
        eps_star,
        time_compatible,
        direction_margin,
        connector_ratio,
        connector_gap: curve.connector_gap,
    }
}

/// Pair sampler over `|z| ≤ R` (`R = min{2, check radius}`) with heights
/// `b ∈ (0, 1]` above the graph. Even indices draw both points
/// independently; odd indices place `q = e^{wX+w'Y} p` plus a tiny rise, with
/// `|w| = 10⁻² ρ(z)`, so that the pair lies well inside case A.
pub fn uniform_pairs(g: &dyn AdmissibleGraph, n: usize, seed: u64, params: &ModelParams) -> Vec<(Point, Point)> {
    let big_r = g.check_radius().min(2.0);
    let mut rng = stream(seed, 0x756e6966);
    let mut out = Vec::with_capacity(n);
    let mut i = 0usize;
    let draw_z = |rng: &mut crate::rng::StreamRng, lo: f64| {
        let r = big_r * (lo + (1.0 - lo) * rng.gen::<f64>()).sqrt();
        Vec2::from_polar(r, std::f64::consts::TAU * rng.gen::<f64>())
    };
    while out.len() < n {
        let close = i % 2 == 1;
        i += 1;
        let z = draw_z(&mut rng, if close { 0.1 } else { 0.0 });
        if !g.domain().contains(z) {
            continue;
        }
        let b = 1.0 - rng.gen::<f64>();
        let p = Point::from_planar(z, g.phi(z) + b);
        let q = if close {
            let rho = zf_ratio(g, z, params);
            if rho <= 0.0 {
                continue;
            }
            let w = Vec2::from_polar(1e-2 * rho, std::f64::consts::TAU * rng.gen::<f64>());
            let mut q = flow(p, w.x, w.y, params);
            q.t += 1e-4 * rho * rho * rng.gen::<f64>();
            q
        } else {
            let zq = draw_z(&mut rng, 0.0);
            Point::from_planar(zq, g.phi(zq) + 1.0 - rng.gen::<f64>())
        };
        if in_open_epigraph(g, &p) && in_open_epigraph(g, &q) {
            out.push((p, q));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformRow {
    pub pair: usize,
    pub p: Point,
    pub q: Point,
    pub case: Case,
    /// Label obtained with `δ` in place of `d̂`.
    pub case_with_delta: Case,
    pub diam_ratio: f64,
    pub eps_star: f64,
    pub time_compatible: Option<bool>,
}

impl CsvRow for UniformRow {
    fn header() -> &'static [&'static str] {
        &["pair", "case", "diam_ratio", "eps_star"]
    }
    fn fields(&self) -> Vec<String> {
        vec![
            self.pair.to_string(),
            self.case.to_string(),
            fmt_f64(self.diam_ratio),
            fmt_f64(self.eps_star),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformSummary {
    pub n: usize,
    pub case_a: usize,
    pub case_b: usize,
    pub label_changes_with_delta: usize,
    pub min_eps_star: f64,
    pub max_diam_ratio: f64,
    pub inv_delta: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformScanReport {
    pub rows: Vec<UniformRow>,
    pub summary: UniformSummary,
}

pub fn uniform_scan(
    g: &dyn AdmissibleGraph,
    pairs: &[(Point, Point)],
    cfg: &CalibrationConfig,
    n_per_piece: usize,
    n_samples: usize,
    exec: Execution,
    params: &ModelParams,
) -> Result<UniformScanReport> {
    let rows = map_indexed(exec, pairs, |i, (p, q)| -> Result<UniformRow> {
        let curve = build_uniform_curve(g, p, q, cfg, params)?;
        let rep = verify_uniform(
            g,
            &curve,
            cfg,
            n_per_piece,
            n_samples,
            derive_seed(cfg.seed, i as u64),
            Execution::Sequential,
            params,
        );
        Ok(UniformRow {
            pair: i,
            p: *p,
            q: *q,
            case: curve.case,
            case_with_delta: classify_with_distance(g, p, q, delta_value(p, q, params), cfg, params),
            diam_ratio: rep.diam_ratio,
            eps_star: rep.eps_star,
            time_compatible: rep.time_compatible,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let case_a = rows.iter().filter(|r| r.case == Case::A).count();
    let min_eps_star = rows.iter().map(|r| r.eps_star).fold(f64::INFINITY, f64::min);
    let max_diam_ratio = rows.iter().map(|r| r.diam_ratio).fold(0.0, f64::max);
    Ok(UniformScanReport {
        summary: UniformSummary {
            n: rows.len(),
            case_a,
            case_b: rows.len() - case_a,
            label_changes_with_delta: rows.iter().filter(|r| r.case != r.case_with_delta).count(),
            min_eps_star,
            max_diam_ratio,
            inv_delta: cfg.inv_delta,
            pass: min_eps_star > 0.0 && max_diam_ratio <= cfg.inv_delta,
        },
        rows,
    })
}

/// Largest difference quotient of `ρ` between horizontal and vertical
/// neighbours of a square grid of side `2R` with `n × n` nodes.
pub fn zf_ratio_lipschitz(g: &dyn AdmissibleGraph, big_r: f64, n: usize, params: &ModelParams) -> f64 {
    let n = n.max(2);
    let h = 2.0 * big_r / (n - 1) as f64;
    let node = |i: usize, j: usize| Vec2::new(-big_r + h * i as f64, -big_r + h * j as f64);
    let mut best = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let a = node(i, j);
            if !g.domain().contains(a) {
                continue;
            }
            for b in [node(i + 1, j), node(i, j + 1)] {
                if i + 1 < n && j + 1 < n && g.domain().contains(b) {
                    best = best.max((zf_ratio(g, a, params) - zf_ratio(g, b, params)).abs() / h);
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::dilate;
    use crate::surface::{Plane, SiegelExample};

    #[test]
    fn degenerate_pair() {
        let params = ModelParams::default();
        let cfg = CalibrationConfig::default();
        let p = Point::new(0.5, 0.1, 0.3);
        let c = build_uniform_curve(&Plane, &p, &p, &cfg, &params).unwrap();
        let rep = verify_uniform(&Plane, &c, &cfg, 8, 16, 0, Execution::Sequential, &params);
        assert!(rep.diam_pass && rep.eps_star > 0.0 && rep.diameter == 0.0);
    }

    #[test]
    fn characteristic_neighbours_are_case_b() {
        let params = ModelParams::default();
        let cfg = CalibrationConfig::default();
        let g = SiegelExample::new(&params);
        let p = Point::new(0.5, 0.0, 1e-3);
        let q = Point::new(0.5001, 0.0, 1e-3);
        assert_eq!(classify_case(&g, &p, &q, &cfg, &params).unwrap(), Case::B);
    }

    #[test]
    fn small_vertical_offset_on_plane_is_case_a_and_dilation_invariant() {
        let params = ModelParams::default();
        let cfg = CalibrationConfig::default();
        let p = Point::new(1.0, 0.0, 0.5);
        let q = Point::new(1.0, 0.0, 0.5 + 1e-6);
        assert_eq!(classify_case(&Plane, &p, &q, &cfg, &params).unwrap(), Case::A);
        for s in [0.1, 3.0] {
            let (ps, qs) = (dilate(p, s, &params), dilate(q, s, &params));
            assert_eq!(classify_case(&Plane, &ps, &qs, &cfg, &params).unwrap(), Case::A);
        }
    }

    #[test]
    fn symmetric_plane_pair_is_case_b_and_uniform() {
        let params = ModelParams::default();
        let cfg = CalibrationConfig::default();
        let p = Point::new(1.0, 0.0, 0.2);
        let q = Point::new(-1.0, 0.0, 0.2);
        let c = build_uniform_curve(&Plane, &p, &q, &cfg, &params).unwrap();
        assert_eq!(c.case, Case::B);
        assert!(c.tau.unwrap() > 0.0);
        assert!(c.connector_gap <= 1e-8);
        let a = c.john_p.point_at(c.s_hat_p, &params);
        assert!(a.t > p.t);
        let rep = verify_uniform(&Plane, &c, &cfg, 8, 32, 0, Execution::Sequential, &params);
        assert!(rep.eps_star > 0.0 && rep.diam_pass, "{rep:?}");
    }

    #[test]
    fn case_a_pair_meets_the_proof_conditions() {
        let params = ModelParams::default();
        let cfg = CalibrationConfig::default();
        let p = Point::new(1.0, 0.0, 0.3);
        let q = flow(p, 0.003, 0.004, &params);
        let c = build_uniform_curve(&Plane, &p, &q, &cfg, &params).unwrap();
        assert_eq!(c.case, Case::A);
        assert!((c.s_hat_p - cfg.h * c.d_hat).abs() < 1e-15);
        let rep = verify_uniform(&Plane, &c, &cfg, 8, 32, 0, Execution::Sequential, &params);
        assert_eq!(rep.time_compatible, Some(true));
        assert_eq!(rep.direction_margin, Some(true));
        assert!(rep.eps_star > 0.0);
    }

    #[test]
    fn delta_profile_vanishes_at_ends() {
        let params = ModelParams::default();
        let cfg = CalibrationConfig::default();
        let c = build_uniform_curve(
            &Plane,
            &Point::new(0.5, 0.5, 0.1),
            &Point::new(-0.2, 0.4, 0.6),
            &cfg,
            &params,
        )
        .unwrap();
        let s = c.samples(8, &params);
        assert_eq!(s.first().unwrap().delta_t, 0.0);
        assert_eq!(s.last().unwrap().delta_t, 0.0);
        assert!(s[s.len() / 2].delta_t > 0.0);
    }

    #[test]
    fn ratio_is_lipschitz_on_a_grid() {
        let params = ModelParams::default();
        let g = SiegelExample::new(&params);
        let l1 = zf_ratio_lipschitz(&g, 1.0, 41, &params);
        let l2 = zf_ratio_lipschitz(&g, 1.0, 81, &params);
        assert!(l1.is_finite() && l2 < 1.5 * l1 + 1.0, "{l1} {l2}");
    }
}

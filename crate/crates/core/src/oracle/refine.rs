//! Direct multiple-shooting refinement of horizontal connectors.
//!
//! A path is a planar polygon `z = z₀, z₁, …, z_N = ζ` traversed with
//! piecewise-constant controls. The planar endpoint is built in; the
//! vertical endpoint condition `g(z₁, …, z_{N−1}) = 0` is restored after
//! every trial move by Newton projection along `∇g`. The length `Σ |z_k − z_{k−1}|`
//! is then decreased by a pattern search on the interior vertices.
//!
//! Before optimizing, the pair is moved to a normal frame (`p` on the
//! positive x-axis at height 0, `δ(p, q) = 1`) with the exact symmetries, so
//! results are equivariant under rotation, vertical translation and dilation.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{line_power_integral, omega, ModelParams, Point, Vec2};
use crate::path::HorizontalPath;
use crate::quad;
use crate::quasimetric::delta_value;
use crate::rng::{self, StreamRng};

use super::bounds::lower_bound;
use super::lift::connect_constructive;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    pub segments: usize,
    /// Candidate evaluations allowed per start.
    pub budget: usize,
    pub starts: usize,
    pub seed: u64,
    /// Mesh size, relative to `δ(p, q)`, at which a start counts as converged.
    pub mesh_tol: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            segments: 10,
            budget: 5000,
            starts: 8,
            seed: 0,
            mesh_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizerStatus {
    Converged,
    /// Budget ran out before the mesh tolerance was reached; the estimate is
    /// the best path seen.
    Stagnated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub upper: f64,
    pub lower: f64,
    pub witness: HorizontalPath,
    pub status: OptimizerStatus,
    pub evaluations: usize,
    /// Euclidean distance from the witness endpoint to the target.
    pub endpoint_gap: f64,
    /// `δ(endpoint, target)`.
    pub endpoint_delta: f64,
}

/// Rigid-plus-dilation change of frame `x ↦ D_s(R_θ x − t₀ e_t)`.
#[derive(Debug, Clone, Copy)]
struct Frame {
    cos: f64,
    sin: f64,
    t0: f64,
    scale: f64,
    order: f64,
}

impl Frame {
    fn normalizing(p: &Point, q: &Point, params: &ModelParams) -> Self {
        let anchor = if p.z() != Vec2::ZERO { p.z() } else { q.z() };
        let theta = if anchor == Vec2::ZERO {
            0.0
        } else {
            -anchor.y.atan2(anchor.x)
        };
        let d = delta_value(p, q, params);
        Self {
            cos: theta.cos(),
            sin: theta.sin(),
            t0: p.t,
            scale: 1.0 / d,
            order: params.homogeneous_order(),
        }
    }

    fn vec(&self, w: Vec2) -> Vec2 {
        Vec2::new(self.cos * w.x - self.sin * w.y, self.sin * w.x + self.cos * w.y) * self.scale
    }

    fn vec_back(&self, w: Vec2) -> Vec2 {
        let w = w * (1.0 / self.scale);
        Vec2::new(self.cos * w.x + self.sin * w.y, -self.sin * w.x + self.cos * w.y)
    }

    fn point(&self, p: &Point) -> Point {
        Point::from_planar(self.vec(p.z()), (p.t - self.t0) * self.scale.powf(self.order))
    }
}

struct Problem<'a> {
    z0: Vec2,
    zeta: Vec2,
    /// Required vertical gain `τ − t`.
    gain: f64,
    n: usize,
    tol: f64,
    params: &'a ModelParams,
}

impl Problem<'_> {
    fn vertex(&self, x: &[Vec2], k: usize) -> Vec2 {
        if k == 0 {
            self.z0
        } else if k == self.n {
            self.zeta
        } else {
            x[k - 1]
        }
    }

    fn length(&self, x: &[Vec2]) -> f64 {
        (1..=self.n)
            .map(|k| (self.vertex(x, k) - self.vertex(x, k - 1)).norm())
            .sum()
    }

    fn constraint(&self, x: &[Vec2]) -> f64 {
        let mut total = 0.0;
        for k in 1..=self.n {
            let a = self.vertex(x, k - 1);
            let w = self.vertex(x, k) - a;
            if w != Vec2::ZERO {
                total += omega(w, a) * line_power_integral(a, w, self.params);
            }
        }
        total - self.gain
    }

    /// `∂g/∂z_k = −(2m+2)[A_k J w_k + B_k J w_{k+1}]` with `J(a,b) = (b,−a)`,
    /// `A_k = ∫ s|·|^{2m}` along segment `k`, `B_k = ∫ (1−s)|·|^{2m}` along
    /// segment `k+1`.
    fn constraint_grad(&self, x: &[Vec2], out: &mut [Vec2]) {
        let rule = quad::gl8();
        let c = -(2.0 * self.params.m() + 2.0);
        let moments = |a: Vec2, w: Vec2| -> (f64, f64) {
            let mut m0 = 0.0;
            let mut m1 = 0.0;
            for (node, weight) in rule.nodes().iter().zip(rule.weights()) {
                let s = 0.5 * (node + 1.0);
                let h = self.params.weight_from_sq((a + w * s).norm_sq());
                m0 += weight * h;
                m1 += weight * s * h;
            }
            (0.5 * m0, 0.5 * m1)
        };
        let j = |w: Vec2| Vec2::new(w.y, -w.x);
        let mut prev_w = self.vertex(x, 1) - self.z0;
        let mut prev_m = moments(self.z0, prev_w);
        for k in 1..self.n {
            let zk = self.vertex(x, k);
            let next_w = self.vertex(x, k + 1) - zk;
            let next_m = moments(zk, next_w);
            out[k - 1] = (j(prev_w) * prev_m.1 + j(next_w) * (next_m.0 - next_m.1)) * c;
            prev_w = next_w;
            prev_m = next_m;
        }
    }

    fn length_grad(&self, x: &[Vec2], out: &mut [Vec2]) {
        let unit = |w: Vec2| w.normalized().unwrap_or(Vec2::ZERO);
        for k in 1..self.n {
            let zk = self.vertex(x, k);
            out[k - 1] = unit(zk - self.vertex(x, k - 1)) - unit(self.vertex(x, k + 1) - zk);
        }
    }

    /// Newton steps along `∇g` until `|g| ≤ tol`.
    fn project(&self, x: &mut [Vec2], grad: &mut [Vec2]) -> bool {
        for _ in 0..30 {
            let g = self.constraint(x);
            if !g.is_finite() {
                return false;
            }
            if g.abs() <= self.tol {
                return true;
            }
            self.constraint_grad(x, grad);
            let gg: f64 = grad.iter().map(|v| v.norm_sq()).sum();
            if !(gg > 0.0) || !gg.is_finite() {
                return false;
            }
            let step = g / gg;
            for (xi, gi) in x.iter_mut().zip(grad.iter()) {
                *xi = *xi - *gi * step;
            }
        }
        self.constraint(x).abs() <= self.tol
    }
}

struct SearchOutcome {
    x: Vec<Vec2>,
    length: f64,
    evaluations: usize,
    converged: bool,
}

fn flatten(v: &[Vec2]) -> Vec<f64> {
    v.iter().flat_map(|p| [p.x, p.y]).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Tangential part of `∇(length)` and the unit normal `∇g/|∇g|`.
fn tangent_gradient(problem: &Problem<'_>, x: &[Vec2], gf: &mut [Vec2], gg: &mut [Vec2]) -> (Vec<f64>, Vec<f64>) {
    problem.length_grad(x, gf);
    problem.constraint_grad(x, gg);
    let f = flatten(gf);
    let mut normal = flatten(gg);
    let nn = dot(&normal, &normal).sqrt();
    if nn > 0.0 {
        normal.iter_mut().for_each(|v| *v /= nn);
    }
    let c = dot(&f, &normal);
    let tangent = f.iter().zip(&normal).map(|(a, b)| a - c * b).collect();
    (tangent, normal)
}

/// Inverse-Hessian model of the length restricted to the constraint
/// surface, updated by BFGS.
struct QuasiNewton {
    dim: usize,
    h: Option<Vec<f64>>,
}

impl QuasiNewton {
    fn new(dim: usize) -> Self {
        Self { dim, h: None }
    }

    fn reset(&mut self) {
        self.h = None;
    }

    fn direction(&self, tangent: &[f64], normal: &[f64], mesh: f64) -> Vec<f64> {
        let mut d: Vec<f64> = match &self.h {
            Some(h) => (0..self.dim)
                .map(|i| -dot(&h[i * self.dim..(i + 1) * self.dim], tangent))
                .collect(),
            None => {
                let n = dot(tangent, tangent).sqrt().max(f64::MIN_POSITIVE);
                tangent.iter().map(|v| -v * mesh / n).collect()
            }
        };
        let c = dot(&d, normal);
        d.iter_mut().zip(normal).for_each(|(a, b)| *a -= c * b);
        d
    }

    fn update(&mut self, s: &[f64], y: &[f64]) {
        let sy = dot(s, y);
        let yy = dot(y, y);
        if !(sy > 1e-12 * dot(s, s).sqrt() * yy.sqrt()) {
            return;
        }
        let n = self.dim;
        let h = self.h.get_or_insert_with(|| {
            let mut h = vec![0.0; n * n];
            for i in 0..n {
                h[i * n + i] = sy / yy;
            }
            h
        });
        let rho = 1.0 / sy;
        let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
        let yhy = dot(y, &hy);
        let k = rho * rho * yhy + rho;
        for i in 0..n {
            for j in 0..n {
                h[i * n + j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + k * s[i] * s[j];
            }
        }
    }
}

/// Generalized pattern search: a quasi-Newton SEARCH step proposes one
/// trial point (with backtracking); when it fails, the POLL step tries the
/// tangential steepest-descent direction and all `±` coordinate directions
/// at the current mesh size. The mesh doubles on a successful poll and
/// halves on a failed one; the start has converged once it drops below
/// `opts.mesh_tol`.
fn pattern_search(problem: &Problem<'_>, mut x: Vec<Vec2>, opts: &RefineOptions, rng: &mut StreamRng) -> SearchOutcome {
    let dim = x.len();
    let mut f = problem.length(&x);
    let mut mesh = 0.1;
    let mut evaluations = 0usize;
    let mut gf = vec![Vec2::ZERO; dim];
    let mut gg = vec![Vec2::ZERO; dim];
    let mut scratch = vec![Vec2::ZERO; dim];
    let mut coords: Vec<usize> = (0..4 * dim).collect();
    let mut model = QuasiNewton::new(2 * dim);
    let mut search_enabled = true;
    let (mut tangent, mut normal) = tangent_gradient(problem, &x, &mut gf, &mut gg);

    let mut try_candidate = |cand: &mut Vec<Vec2>, evaluations: &mut usize| -> Option<f64> {
        *evaluations += 1;
        if problem.project(cand, &mut scratch) {
            Some(problem.length(cand))
        } else {
            None
        }
    };
    let accept = |fc: f64, f: f64| fc < f - 1e-15 * f.max(1.0);

    loop {
        if mesh < opts.mesh_tol || evaluations >= opts.budget {
            return SearchOutcome {
                x,
                length: f,
                evaluations,
                converged: mesh < opts.mesh_tol,
            };
        }

        if search_enabled {
            let d = model.direction(&tangent, &normal, mesh);
            let mut scale = 1.0;
            let mut moved = None;
            for _ in 0..4 {
                if evaluations >= opts.budget {
                    break;
                }
                let mut cand: Vec<Vec2> = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| *v + Vec2::new(d[2 * i], d[2 * i + 1]) * scale)
                    .collect();
                if let Some(fc) = try_candidate(&mut cand, &mut evaluations) {
                    if accept(fc, f) {
                        moved = Some((cand, fc));
                        break;
                    }
                }
                scale *= 0.25;
            }
            match moved {
                Some((cand, fc)) => {
                    let s: Vec<f64> = flatten(&cand).iter().zip(flatten(&x)).map(|(a, b)| a - b).collect();
                    let (t2, n2) = tangent_gradient(problem, &cand, &mut gf, &mut gg);
                    let y: Vec<f64> = t2.iter().zip(&tangent).map(|(a, b)| a - b).collect();
                    model.update(&s, &y);
                    mesh = (2.0 * dot(&s, &s).sqrt())
                        .clamp(opts.mesh_tol, 0.5)
                        .min(mesh.max(opts.mesh_tol));
                    x = cand;
                    f = fc;
                    tangent = t2;
                    normal = n2;
                    continue;
                }
                None => {
                    model.reset();
                    search_enabled = false;
                }
            }
        }

        let tn = dot(&tangent, &tangent).sqrt();
        let mut directions: Vec<Vec<Vec2>> = Vec::with_capacity(1 + coords.len());
        if tn > 0.0 {
            directions.push(
                (0..dim)
                    .map(|i| Vec2::new(-tangent[2 * i], -tangent[2 * i + 1]) * (1.0 / tn))
                    .collect(),
            );
        }
        coords.shuffle(rng);
        for &c in &coords {
            let mut d = vec![Vec2::ZERO; dim];
            let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
            d[c / 4] = if (c / 2) % 2 == 0 {
                Vec2::new(sign, 0.0)
            } else {
                Vec2::new(0.0, sign)
            };
            directions.push(d);
        }

        let mut improved = false;
        for d in &directions {
            if evaluations >= opts.budget {
                break;
            }
            let mut cand: Vec<Vec2> = x.iter().zip(d).map(|(a, b)| *a + *b * mesh).collect();
            if let Some(fc) = try_candidate(&mut cand, &mut evaluations) {
                if accept(fc, f) {
                    x = cand;
                    f = fc;
                    improved = true;
                    break;
                }
            }
        }
        if improved {
            mesh = (mesh * 2.0).min(0.5);
            (tangent, normal) = tangent_gradient(problem, &x, &mut gf, &mut gg);
            search_enabled = true;
        } else {
            mesh *= 0.5;
        }
    }
}

/// Planar vertices of `path` (zero-length segments dropped) expressed in
/// `frame`.
fn polygon(path: &HorizontalPath, frame: &Frame) -> Vec<Vec2> {
    let mut z = frame.vec(path.start.z());
    let mut out = vec![z];
    for (i, c) in path.controls.iter().enumerate() {
        let d = path.duration(i);
        let w = frame.vec(Vec2::new(c.alpha * d, c.beta * d));
        if w != Vec2::ZERO {
            z = z + w;
            out.push(z);
        }
    }
    out
}

/// Interior vertices for an `n`-segment polygon following `poly`. When
/// `poly` has at most `n` edges every original vertex is kept, so the
/// geometric path is unchanged.
fn subdivide(poly: &[Vec2], n: usize) -> Option<Vec<Vec2>> {
    let edges = poly.len().checked_sub(1)?;
    if edges == 0 {
        return None;
    }
    let lens: Vec<f64> = poly.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let total: f64 = lens.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mut out = Vec::with_capacity(n - 1);
    if edges <= n {
        let mut pieces = vec![1usize; edges];
        let spare = n - edges;
        let quota: Vec<f64> = lens.iter().map(|l| l / total * spare as f64).collect();
        let mut given = 0;
        for (p, q) in pieces.iter_mut().zip(&quota) {
            *p += q.floor() as usize;
            given += q.floor() as usize;
        }
        let mut order: Vec<usize> = (0..edges).collect();
        order.sort_by(|&a, &b| (quota[b] - quota[b].floor()).total_cmp(&(quota[a] - quota[a].floor())));
        for &i in order.iter().take(spare - given) {
            pieces[i] += 1;
        }
        for (i, &k) in pieces.iter().enumerate() {
            let (a, b) = (poly[i], poly[i + 1]);
            for j in 1..=k {
                out.push(a + (b - a) * (j as f64 / k as f64));
            }
        }
        out.pop();
    } else {
        let mut acc = 0.0;
        let mut edge = 0;
        for j in 1..n {
            let target = total * j as f64 / n as f64;
            while edge + 1 < edges && acc + lens[edge] < target {
                acc += lens[edge];
                edge += 1;
            }
            let frac = if lens[edge] > 0.0 {
                ((target - acc) / lens[edge]).clamp(0.0, 1.0)
            } else {
                0.0
            };
            out.push(poly[edge] + (poly[edge + 1] - poly[edge]) * frac);
        }
    }
    Some(out)
}

/// Upper bound for `d(p, q)` by optimizing an `opts.segments`-segment
/// horizontal polygon, warm-started from `init` and from
/// [`connect_constructive`], plus seeded perturbations.
pub fn refine_distance(
    p: &Point,
    q: &Point,
    init: &HorizontalPath,
    opts: &RefineOptions,
    params: &ModelParams,
) -> Result<DistanceEstimate> {
    if opts.segments < 2 {
        return Err(invalid("segments", "need at least 2"));
    }
    if opts.starts == 0 {
        return Err(invalid("starts", "need at least 1"));
    }
    let lower = lower_bound(p, q, params);
    let d = delta_value(p, q, params);
    if d == 0.0 {
        return Ok(DistanceEstimate {
            upper: 0.0,
            lower: 0.0,
            witness: HorizontalPath::new(*p),
            status: OptimizerStatus::Converged,
            evaluations: 0,
            endpoint_gap: 0.0,
            endpoint_delta: 0.0,
        });
    }

    let frame = Frame::normalizing(p, q, params);
    let (np, nq) = (frame.point(p), frame.point(q));
    let n = opts.segments;
    let reach = np.z().norm().max(nq.z().norm()) + 1.0;
    let problem = Problem {
        z0: np.z(),
        zeta: nq.z(),
        gain: nq.t - np.t,
        n,
        tol: 1e-13 * (1.0 + nq.t.abs() + params.weight_from_sq(reach * reach)),
        params,
    };

    let mut seeds: Vec<Vec<Vec2>> = Vec::new();
    let mut grad = vec![Vec2::ZERO; n - 1];
    let mut warm = |path: &HorizontalPath, seeds: &mut Vec<Vec<Vec2>>| {
        let mut poly = polygon(path, &frame);
        if let Some(last) = poly.last_mut() {
            *last = problem.zeta;
        }
        if poly.first().copied() != Some(problem.z0) || poly.len() < 2 {
            return;
        }
        if let Some(mut x) = subdivide(&poly, n) {
            if problem.project(&mut x, &mut grad) {
                seeds.push(x);
            }
        }
    };
    warm(init, &mut seeds);
    if let Ok(c) = connect_constructive(p, q, params) {
        warm(&c, &mut seeds);
    }
    if seeds.is_empty() {
        // straight planar chord lifted by projection
        let mut x: Vec<Vec2> = (1..n)
            .map(|k| problem.z0 + (problem.zeta - problem.z0) * (k as f64 / n as f64))
            .collect();
        let mut rng = rng::stream(opts.seed, u64::MAX);
        for v in x.iter_mut() {
            *v = *v + Vec2::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
        }
        if problem.project(&mut x, &mut grad) {
            seeds.push(x);
        }
    }
    if seeds.is_empty() {
        return Err(crate::error::Error::Precondition(
            "no feasible warm start for the refiner".into(),
        ));
    }
    let base: Vec<Vec<Vec2>> = seeds.clone();
    let base_len: Vec<f64> = base.iter().map(|x| problem.length(x)).collect();
    let best_base = base_len
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);

    let mut best: Option<SearchOutcome> = None;
    let mut evaluations = 0;
    for k in 0..opts.starts {
        let mut rng = rng::stream(opts.seed, k as u64);
        let start = if k < base.len() {
            base[k].clone()
        } else {
            let mut x = base[best_base].clone();
            let sigma = 0.3 / (n as f64).sqrt();
            let mut ok = false;
            for _ in 0..4 {
                let mut cand: Vec<Vec2> = x
                    .iter()
                    .map(|v| *v + Vec2::new(normal(&mut rng), normal(&mut rng)) * sigma)
                    .collect();
                if problem.project(&mut cand, &mut grad) {
                    x = cand;
                    ok = true;
                    break;
                }
            }
            if !ok {
                continue;
            }
            x
        };
        let outcome = pattern_search(&problem, start, opts, &mut rng);
        evaluations += outcome.evaluations;
        let better = match &best {
            None => true,
            Some(b) => outcome.length < b.length,
        };
        if better {
            best = Some(outcome);
        }
    }
    let best = best.expect("at least one warm start");

    let mut witness = HorizontalPath::new(*p);
    for k in 1..=n {
        let w = frame.vec_back(problem.vertex(&best.x, k) - problem.vertex(&best.x, k - 1));
        witness.push(
            crate::path::Control::new(w.x * n as f64, w.y * n as f64),
            1.0 / n as f64,
        );
    }
    let end = witness.endpoint(params);
    Ok(DistanceEstimate {
        upper: witness.length(),
        lower,
        status: if best.converged {
            OptimizerStatus::Converged
        } else {
            OptimizerStatus::Stagnated
        },
        evaluations,
        endpoint_gap: end.euclid_dist(q),
        endpoint_delta: delta_value(&end, q, params),
        witness,
    })
}

fn normal(rng: &mut StreamRng) -> f64 {
    // Box–Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::flow;

    fn problem(params: &ModelParams) -> Problem<'_> {
        Problem {
            z0: Vec2::new(0.7, 0.1),
            zeta: Vec2::new(-0.2, 0.5),
            gain: 0.3,
            n: 4,
            tol: 1e-13,
            params,
        }
    }

    #[test]
    fn constraint_gradient_matches_finite_differences() {
        for m in [1.0, 1.5, 2.0] {
            let params = ModelParams::new(m).unwrap();
            let pr = problem(&params);
            let x = vec![Vec2::new(0.4, 0.3), Vec2::new(0.1, 0.9), Vec2::new(-0.3, 0.2)];
            let mut g = vec![Vec2::ZERO; 3];
            pr.constraint_grad(&x, &mut g);
            let h = 1e-6;
            for k in 0..3 {
                for axis in 0..2 {
                    let bump = if axis == 0 {
                        Vec2::new(h, 0.0)
                    } else {
                        Vec2::new(0.0, h)
                    };
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[k] = xp[k] + bump;
                    xm[k] = xm[k] - bump;
                    let fd = (pr.constraint(&xp) - pr.constraint(&xm)) / (2.0 * h);
                    let an = if axis == 0 { g[k].x } else { g[k].y };
                    assert!((fd - an).abs() < 1e-6, "m={m} k={k} axis={axis}: {fd} vs {an}");
                }
            }
        }
    }

    #[test]
    fn projection_lands_on_constraint() {
        let params = ModelParams::default();
        let pr = problem(&params);
        let mut x = vec![Vec2::new(0.4, 0.3), Vec2::new(0.1, 0.9), Vec2::new(-0.3, 0.2)];
        let mut g = vec![Vec2::ZERO; 3];
        assert!(pr.project(&mut x, &mut g));
        assert!(pr.constraint(&x).abs() <= 1e-13);
    }

    #[test]
    fn subdivision_keeps_geometry() {
        let poly = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 3.0)];
        let x = subdivide(&poly, 4).unwrap();
        assert_eq!(x.len(), 3);
        assert!(x.contains(&Vec2::new(1.0, 0.0)));
        let longer = [poly[0], poly[1], Vec2::new(1.0, 1.0), poly[2]];
        let resampled = subdivide(&longer, 2).unwrap();
        assert_eq!(resampled.len(), 1);
        assert!((resampled[0] - Vec2::new(1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn straight_target_stays_straight() {
        let params = ModelParams::default();
        let p = Point::new(0.3, -0.2, 0.4);
        let q = flow(p, 0.5, 0.25, &params);
        let init = connect_constructive(&p, &q, &params).unwrap();
        let est = refine_distance(&p, &q, &init, &RefineOptions::default(), &params).unwrap();
        let chord = 0.5f64.hypot(0.25);
        assert!(est.upper >= chord - 1e-12);
        assert!(est.upper - chord < 1e-4, "{} vs {chord}", est.upper);
        assert!(est.endpoint_gap < 1e-8);
    }

    #[test]
    fn vertical_pair_bracket() {
        let params = ModelParams::default();
        let q = Point::new(0.0, 0.0, 1.0);
        let init = connect_constructive(&Point::ORIGIN, &q, &params).unwrap();
        let est = refine_distance(&Point::ORIGIN, &q, &init, &RefineOptions::default(), &params).unwrap();
        assert!(est.upper <= init.length() + 1e-12);
        assert!(est.upper >= 1.0);
        assert!(est.lower <= est.upper);
        assert!(est.endpoint_gap < 1e-8, "{}", est.endpoint_gap);
    }
}

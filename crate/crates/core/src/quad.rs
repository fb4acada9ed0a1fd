//! Gauss–Legendre rules and the adaptive 1-D / 2-D drivers built on them.

use std::sync::OnceLock;

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are the roots of `P_n`, found by Newton iteration from the
    /// Chebyshev-like initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Tensor-product rule on the rectangle `[x0, x1] × [y0, y1]`.
    pub fn integrate_rect<F: FnMut(f64, f64) -> f64>(
        &self,
        mut f: F,
        (x0, x1): (f64, f64),
        (y0, y1): (f64, f64),
    ) -> f64 {
        let hx = 0.5 * (x1 - x0);
        let mx = 0.5 * (x0 + x1);
        let hy = 0.5 * (y1 - y0);
        let my = 0.5 * (y0 + y1);
        let mut acc = 0.0;
        for (xi, wi) in self.nodes.iter().zip(&self.weights) {
            let x = mx + hx * xi;
            for (yj, wj) in self.nodes.iter().zip(&self.weights) {
                acc += wi * wj * f(x, my + hy * yj);
            }
        }
        acc * hx * hy
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

macro_rules! cached_rule {
    ($name:ident, $n:expr) => {
        pub fn $name() -> &'static GaussLegendre {
            static RULE: OnceLock<GaussLegendre> = OnceLock::new();
            RULE.get_or_init(|| GaussLegendre::new($n))
        }
    };
}

cached_rule!(gl8, 8);
cached_rule!(gl16, 16);
cached_rule!(gl64, 64);

const MAX_DEPTH: u32 = 40;

/// Adaptive bisection driven by `rule`: an interval is accepted once the
/// whole-interval estimate agrees with the sum of its halves.
///
/// Returns `Err(estimate)` when the depth limit is hit somewhere.
pub fn adaptive<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64, f64> {
    if a == b {
        return Ok(0.0);
    }
    let whole = rule.integrate(&mut f, a, b);
    let tol = abs_tol.max(rel_tol * whole.abs());
    let mut ok = true;
    let value = adaptive_step(rule, &mut f, a, b, whole, rel_tol, tol, 0, &mut ok);
    if ok && value.is_finite() {
        Ok(value)
    } else {
        Err(value)
    }
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    f: &mut F,
    a: f64,
    b: f64,
    whole: f64,
    rel_tol: f64,
    abs_tol: f64,
    depth: u32,
    ok: &mut bool,
) -> f64 {
    let mid = 0.5 * (a + b);
    let left = rule.integrate(&mut *f, a, mid);
    let right = rule.integrate(&mut *f, mid, b);
    let refined = left + right;
    if !refined.is_finite() {
        *ok = false;
        return refined;
    }
    if (refined - whole).abs() <= (rel_tol * refined.abs()).max(abs_tol) {
        return refined;
    }
    if depth >= MAX_DEPTH {
        *ok = false;
        return refined;
    }
    adaptive_step(rule, f, a, mid, left, rel_tol, 0.5 * abs_tol, depth + 1, ok)
        + adaptive_step(rule, f, mid, b, right, rel_tol, 0.5 * abs_tol, depth + 1, ok)
}

/// Adaptive quadtree refinement of a tensor rule over a rectangle.
pub fn adaptive_rect<F: FnMut(f64, f64) -> f64>(
    rule: &GaussLegendre,
    mut f: F,
    xs: (f64, f64),
    ys: (f64, f64),
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64, f64> {
    if xs.0 == xs.1 || ys.0 == ys.1 {
        return Ok(0.0);
    }
    let whole = rule.integrate_rect(&mut f, xs, ys);
    let abs_tol = abs_tol.max(rel_tol * whole.abs());
    let mut ok = true;
    let value = rect_step(rule, &mut f, xs, ys, whole, rel_tol, abs_tol, 0, &mut ok);
    if ok && value.is_finite() {
        Ok(value)
    } else {
        Err(value)
    }
}

#[allow(clippy::too_many_arguments)]
fn rect_step<F: FnMut(f64, f64) -> f64>(
    rule: &GaussLegendre,
    f: &mut F,
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    whole: f64,
    rel_tol: f64,
    abs_tol: f64,
    depth: u32,
    ok: &mut bool,
) -> f64 {
    let xm = 0.5 * (x0 + x1);
    let ym = 0.5 * (y0 + y1);
    let quads = [
        ((x0, xm), (y0, ym)),
        ((xm, x1), (y0, ym)),
        ((x0, xm), (ym, y1)),
        ((xm, x1), (ym, y1)),
    ];
    let parts: Vec<f64> = quads
        .iter()
        .map(|&(xs, ys)| rule.integrate_rect(&mut *f, xs, ys))
        .collect();
    let refined: f64 = parts.iter().sum();
    if !refined.is_finite() {
        *ok = false;
        return refined;
    }
    if (refined - whole).abs() <= (rel_tol * refined.abs()).max(abs_tol) {
        return refined;
    }
    if depth >= 20 {
        *ok = false;
        return refined;
    }
    quads
        .iter()
        .zip(parts)
        .map(|(&(xs, ys), part)| rect_step(rule, f, xs, ys, part, rel_tol, 0.25 * abs_tol, depth + 1, ok))
        .sum()
}

/// Bisection on a sign change of `f` over `[lo, hi]`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> Option<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() || !f_lo.is_finite() || !f_hi.is_finite() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= x_tol || mid == lo || mid == hi {
            return Some(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

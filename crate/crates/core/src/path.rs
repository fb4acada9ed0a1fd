//! Horizontal paths with piecewise-constant controls and the reference
//! RK4 integrator of `γ̇ = α X(γ) + β Y(γ)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{flow, ModelParams, Point};

/// Constant control `(α, β)` on one segment.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Control {
    pub alpha: f64,
    pub beta: f64,
}

impl Control {
    pub const fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    pub fn norm(&self) -> f64 {
        self.alpha.hypot(self.beta)
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.is_finite() && self.beta.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub s: f64,
    pub point: Point,
}

/// Piecewise-constant control record starting at `start`.
///
/// `breakpoints` has one more entry than `controls`; segment `i` runs over
/// `[breakpoints[i], breakpoints[i + 1]]` with control `controls[i]`.
/// `samples` is empty until [`HorizontalPath::sample`] fills it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizontalPath {
    pub start: Point,
    pub breakpoints: Vec<f64>,
    pub controls: Vec<Control>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<PathSample>,
}

impl HorizontalPath {
    pub fn new(start: Point) -> Self {
        Self {
            start,
            breakpoints: vec![0.0],
            controls: Vec::new(),
            samples: Vec::new(),
        }
    }

    pub fn push(&mut self, control: Control, duration: f64) {
        debug_assert!(duration >= 0.0);
        let last = *self.breakpoints.last().expect("breakpoints never empty");
        self.breakpoints.push(last + duration);
        self.controls.push(control);
        self.samples.clear();
    }

    /// Appends a unit-duration segment moving the planar part by `(u, v)`.
    pub fn push_displacement(&mut self, u: f64, v: f64) {
        self.push(Control::new(u, v), 1.0);
    }

    pub fn segment_count(&self) -> usize {
        self.controls.len()
    }

    pub fn duration(&self, i: usize) -> f64 {
        self.breakpoints[i + 1] - self.breakpoints[i]
    }

    pub fn total_time(&self) -> f64 {
        self.breakpoints.last().copied().unwrap_or(0.0) - self.breakpoints[0]
    }

    /// `Σ |(α, β)| Δs`.
    pub fn length(&self) -> f64 {
        self.controls
            .iter()
            .enumerate()
            .map(|(i, c)| c.norm() * self.duration(i))
            .sum()
    }

    /// Segment endpoints through the closed-form flow, starting from `start`.
    pub fn vertices(&self, params: &ModelParams) -> Vec<Point> {
        let mut out = Vec::with_capacity(self.controls.len() + 1);
        let mut p = self.start;
        out.push(p);
        for (i, c) in self.controls.iter().enumerate() {
            let d = self.duration(i);
            p = flow(p, c.alpha * d, c.beta * d, params);
            out.push(p);
        }
        out
    }

    pub fn endpoint(&self, params: &ModelParams) -> Point {
        *self.vertices(params).last().expect("at least the start")
    }

    /// Point at path time `s` (clamped to the parameter range).
    pub fn point_at(&self, s: f64, params: &ModelParams) -> Point {
        let mut p = self.start;
        for (i, c) in self.controls.iter().enumerate() {
            let (a, b) = (self.breakpoints[i], self.breakpoints[i + 1]);
            if s <= a {
                break;
            }
            let d = s.min(b) - a;
            p = flow(p, c.alpha * d, c.beta * d, params);
        }
        p
    }

    /// Fills `samples` with `per_segment` exact points per segment.
    pub fn sample(&mut self, per_segment: usize, params: &ModelParams) {
        let per_segment = per_segment.max(1);
        let mut samples = Vec::with_capacity(self.controls.len() * per_segment + 1);
        let mut p = self.start;
        samples.push(PathSample {
            s: self.breakpoints[0],
            point: p,
        });
        for (i, c) in self.controls.iter().enumerate() {
            let a = self.breakpoints[i];
            let d = self.duration(i);
            let seg_start = p;
            for k in 1..=per_segment {
                let frac = d * k as f64 / per_segment as f64;
                let q = flow(seg_start, c.alpha * frac, c.beta * frac, params);
                samples.push(PathSample { s: a + frac, point: q });
                p = q;
            }
        }
        self.samples = samples;
    }

    /// Same geometric curve traversed backwards from `end`.
    pub fn reversed(&self, params: &ModelParams) -> HorizontalPath {
        let mut out = HorizontalPath::new(self.endpoint(params));
        for i in (0..self.controls.len()).rev() {
            let c = self.controls[i];
            out.push(Control::new(-c.alpha, -c.beta), self.duration(i));
        }
        out
    }
}

fn rhs(p: Point, c: Control, params: &ModelParams) -> (f64, f64, f64) {
    let w = params.weight_from_sq(p.x * p.x + p.y * p.y);
    (c.alpha, c.beta, w * (p.y * c.alpha - p.x * c.beta))
}

fn rk4_step(p: Point, c: Control, h: f64, params: &ModelParams) -> Point {
    let k1 = rhs(p, c, params);
    let p2 = Point::new(p.x + 0.5 * h * k1.0, p.y + 0.5 * h * k1.1, p.t + 0.5 * h * k1.2);
    let k2 = rhs(p2, c, params);
    let p3 = Point::new(p.x + 0.5 * h * k2.0, p.y + 0.5 * h * k2.1, p.t + 0.5 * h * k2.2);
    let k3 = rhs(p3, c, params);
    let p4 = Point::new(p.x + h * k3.0, p.y + h * k3.1, p.t + h * k3.2);
    let k4 = rhs(p4, c, params);
    Point::new(
        p.x + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        p.y + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        p.t + h / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2),
    )
}

/// Classical RK4 trajectory of the control ODE from `p`.
///
/// Each segment is cut into `ceil(Δs / step)` equal steps, so segment
/// boundaries are always hit exactly.
pub fn rk4_trajectory(p: Point, path: &HorizontalPath, step: f64, params: &ModelParams) -> Result<Vec<PathSample>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(invalid("step", format!("must be positive, got {step}")));
    }
    if !p.is_finite() {
        return Err(Error::NonFinite("start point"));
    }
    if path.controls.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("controls"));
    }
    let mut out = vec![PathSample {
        s: path.breakpoints[0],
        point: p,
    }];
    let mut q = p;
    for (i, &c) in path.controls.iter().enumerate() {
        let d = path.duration(i);
        if d <= 0.0 {
            continue;
        }
        let n = (d / step).ceil().max(1.0) as usize;
        let h = d / n as f64;
        for k in 1..=n {
            q = rk4_step(q, c, h, params);
            out.push(PathSample {
                s: path.breakpoints[i] + h * k as f64,
                point: q,
            });
        }
    }
    Ok(out)
}

/// Endpoint of the RK4-lifted trajectory.
pub fn integrate_horizontal(p: Point, path: &HorizontalPath, step: f64, params: &ModelParams) -> Result<Point> {
    rk4_trajectory(p, path, step, params).map(|tr| tr.last().expect("non-empty").point)
}

/// Largest per-step horizontality defect
/// `|Δt − ∫ |z|^{2m}(y α − x β) ds| / Δs` over consecutive samples, with
/// the integral taken by Simpson's rule along the (exactly linear) planar
/// motion of each step.
pub fn horizontality_residual(samples: &[PathSample], path: &HorizontalPath, params: &ModelParams) -> f64 {
    let control_at = |s: f64| -> Control {
        let idx = path
            .breakpoints
            .windows(2)
            .position(|w| s >= w[0] && s <= w[1])
            .unwrap_or(path.controls.len().saturating_sub(1));
        path.controls.get(idx).copied().unwrap_or_default()
    };
    let g = |x: f64, y: f64, c: Control| params.weight_from_sq(x * x + y * y) * (y * c.alpha - x * c.beta);
    samples
        .windows(2)
        .filter_map(|pair| {
            let (a, b) = (pair[0], pair[1]);
            let h = b.s - a.s;
            if h <= 0.0 {
                return None;
            }
            let c = control_at(0.5 * (a.s + b.s));
            let (mx, my) = (0.5 * (a.point.x + b.point.x), 0.5 * (a.point.y + b.point.y));
            let simpson = h / 6.0 * (g(a.point.x, a.point.y, c) + 4.0 * g(mx, my, c) + g(b.point.x, b.point.y, c));
            Some(((b.point.t - a.point.t) - simpson).abs() / h)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_controls_stay_put() {
        let params = ModelParams::default();
        let mut path = HorizontalPath::new(Point::ORIGIN);
        path.push(Control::new(0.0, 0.0), 1.0);
        let p = Point::new(0.4, 0.1, -2.0);
        assert_eq!(integrate_horizontal(p, &path, 1e-2, &params).unwrap(), p);
    }

    #[test]
    fn rejects_bad_input() {
        let params = ModelParams::default();
        let mut path = HorizontalPath::new(Point::ORIGIN);
        path.push(Control::new(f64::NAN, 0.0), 1.0);
        assert!(integrate_horizontal(Point::ORIGIN, &path, 1e-2, &params).is_err());
        let empty = HorizontalPath::new(Point::ORIGIN);
        assert!(integrate_horizontal(Point::ORIGIN, &empty, 0.0, &params).is_err());
    }

    #[test]
    fn length_sums_segments() {
        let mut path = HorizontalPath::new(Point::ORIGIN);
        path.push(Control::new(3.0, 4.0), 0.5);
        path.push(Control::new(0.0, -1.0), 2.0);
        assert!((path.length() - 4.5).abs() < 1e-15);
        assert!((path.total_time() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn reversed_path_returns_to_start() {
        let params = ModelParams::new(1.5).unwrap();
        let mut path = HorizontalPath::new(Point::new(0.2, -0.3, 0.1));
        path.push_displacement(0.7, 0.2);
        path.push_displacement(-0.1, 0.9);
        let back = path.reversed(&params);
        assert!(back.endpoint(&params).euclid_dist(&path.start) < 1e-13);
    }

    #[test]
    fn point_at_matches_vertices() {
        let params = ModelParams::default();
        let mut path = HorizontalPath::new(Point::new(1.0, 0.0, 0.0));
        path.push(Control::new(0.0, 2.0), 0.5);
        path.push(Control::new(-1.0, 0.0), 1.0);
        let v = path.vertices(&params);
        assert!(path.point_at(0.5, &params).euclid_dist(&v[1]) < 1e-15);
        assert!(path.point_at(9.0, &params).euclid_dist(&v[2]) < 1e-15);
    }
}

//! Empirical comparison of `δ` with the refined upper bound for `d`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec::{self, Execution};
use crate::model::{ModelParams, Point};
use crate::quasimetric::delta_value;
use crate::report::{fmt_f64, CsvRow};
use crate::rng;
use crate::stats::{summarize, Summary};

use super::lift::connect_constructive;
use super::refine::{refine_distance, OptimizerStatus, RefineOptions};

/// Axis-aligned box `[lo, hi]` in `R³`; both points of a pair are drawn
/// uniformly from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Region {
    /// `[-1, 1]³`.
    pub fn unit() -> Self {
        Self {
            lo: [-1.0; 3],
            hi: [1.0; 3],
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Point {
        let c = |i: usize, rng: &mut R| {
            if self.hi[i] > self.lo[i] {
                rng.gen_range(self.lo[i]..self.hi[i])
            } else {
                self.lo[i]
            }
        };
        let x = c(0, rng);
        let y = c(1, rng);
        let t = c(2, rng);
        Point::new(x, y, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRow {
    pub p: Point,
    pub q: Point,
    pub delta: f64,
    pub upper: f64,
    pub lower: f64,
    /// `upper / δ`, and 1 when both vanish.
    pub ratio: f64,
    pub converged: bool,
    pub endpoint_gap: f64,
}

impl CsvRow for EquivalenceRow {
    fn header() -> &'static [&'static str] {
        &["px", "py", "pt", "qx", "qy", "qt", "delta", "upper", "ratio"]
    }

    fn fields(&self) -> Vec<String> {
        [
            self.p.x, self.p.y, self.p.t, self.q.x, self.q.y, self.q.t, self.delta, self.upper, self.ratio,
        ]
        .into_iter()
        .map(fmt_f64)
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceSummary {
    pub n: usize,
    /// `max{max ratio, 1 / min ratio}`.
    pub c_emp: f64,
    pub ratio: Option<Summary>,
    /// Quantiles of `lower / δ`.
    pub lower_ratio: Option<Summary>,
    pub stagnated: usize,
    /// Rows where `lower > upper` (should be zero).
    pub bracket_violations: usize,
    pub max_endpoint_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub rows: Vec<EquivalenceRow>,
    pub summary: EquivalenceSummary,
}

/// `C_emp = max{max r, 1/min r}` over finite positive ratios.
pub fn symmetric_spread(ratios: &[f64]) -> f64 {
    let (lo, hi) = ratios
        .iter()
        .filter(|r| r.is_finite() && **r > 0.0)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    if hi == 0.0 {
        return f64::NAN;
    }
    hi.max(1.0 / lo)
}

/// One row of the scan for an explicit pair.
pub fn equivalence_row(p: &Point, q: &Point, opts: &RefineOptions, params: &ModelParams) -> Result<EquivalenceRow> {
    let delta = delta_value(p, q, params);
    let init = connect_constructive(p, q, params)?;
    let est = refine_distance(p, q, &init, opts, params)?;
    let ratio = if delta == 0.0 && est.upper == 0.0 {
        1.0
    } else {
        est.upper / delta
    };
    Ok(EquivalenceRow {
        p: *p,
        q: *q,
        delta,
        upper: est.upper,
        lower: est.lower,
        ratio,
        converged: est.status == OptimizerStatus::Converged,
        endpoint_gap: est.endpoint_gap,
    })
}

pub fn summarize_rows(rows: &[EquivalenceRow]) -> EquivalenceSummary {
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let lower: Vec<f64> = rows
        .iter()
        .filter(|r| r.delta > 0.0)
        .map(|r| r.lower / r.delta)
        .collect();
    EquivalenceSummary {
        n: rows.len(),
        c_emp: symmetric_spread(&ratios),
        ratio: summarize(&ratios),
        lower_ratio: summarize(&lower),
        stagnated: rows.iter().filter(|r| !r.converged).count(),
        bracket_violations: rows.iter().filter(|r| r.lower > r.upper).count(),
        max_endpoint_gap: rows.iter().map(|r| r.endpoint_gap).fold(0.0, f64::max),
    }
}

/// Scans `pairs` in parallel (per `exec`); row `i` uses refiner seed
/// `derive_seed(opts.seed, i)`.
pub fn equivalence_scan_pairs(
    pairs: &[(Point, Point)],
    opts: &RefineOptions,
    exec: Execution,
    params: &ModelParams,
) -> Result<EquivalenceReport> {
    let rows = exec::map_indexed(exec, pairs, |i, (p, q)| {
        let opts = RefineOptions {
            seed: rng::derive_seed(opts.seed, i as u64),
            ..*opts
        };
        equivalence_row(p, q, &opts, params)
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let summary = summarize_rows(&rows);
    Ok(EquivalenceReport { rows, summary })
}

/// `n` pairs drawn from `region` (pair `i` from stream `i` of `seed`),
/// then [`equivalence_scan_pairs`].
pub fn empirical_equivalence_scan(
    n: usize,
    region: &Region,
    seed: u64,
    opts: &RefineOptions,
    exec: Execution,
    params: &ModelParams,
) -> Result<EquivalenceReport> {
    if n == 0 {
        return Err(invalid("n", "need at least one pair"));
    }
    let pairs = sample_pairs(n, region, seed);
    let opts = RefineOptions { seed, ..*opts };
    equivalence_scan_pairs(&pairs, &opts, exec, params)
}

pub fn sample_pairs(n: usize, region: &Region, seed: u64) -> Vec<(Point, Point)> {
    (0..n)
        .map(|i| {
            let mut rng = rng::stream(seed, i as u64);
            (region.sample(&mut rng), region.sample(&mut rng))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coincident_pair_has_unit_ratio() {
        let params = ModelParams::default();
        let p = Point::new(0.2, 0.1, 0.3);
        let row = equivalence_row(&p, &p, &RefineOptions::default(), &params).unwrap();
        assert_eq!(row.ratio, 1.0);
        assert_eq!(row.upper, 0.0);
    }

    #[test]
    fn spread_is_symmetric() {
        assert_eq!(symmetric_spread(&[0.5, 1.0, 1.5]), 2.0);
        assert_eq!(symmetric_spread(&[1.0, 3.0]), 3.0);
    }
}

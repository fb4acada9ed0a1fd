//! End-to-end acceptance suite. Each check prints one line
//! `[k] PASS|FAIL name: detail (elapsed)` and the test fails if any check does.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use rand::Rng;
use siegel::config::CalibrationConfig;
use siegel::johncurve::john_scan;
use siegel::model::{dilate, flow, rotate, translate_t};
use siegel::oracle::scan::symmetric_spread;
use siegel::oracle::{
    connect_constructive, empirical_equivalence_scan, lower_bound, refine_distance, square_path, stokes_lift,
    RefineOptions, Region,
};
use siegel::path::integrate_horizontal;
use siegel::perimeter::{ahlfors_scan, geometric_radii};
use siegel::quasimetric::delta_value;
use siegel::report::to_csv_string;
use siegel::rng::stream;
use siegel::stats::loglog_fit;
use siegel::surface::{
    admissibility_grid, annulus_grid, boundary_samples, check_admissibility, nondegeneracy_sweep, residual_exponents,
    surface_by_name, AdmissibleGraph, Paraboloid,
};
use siegel::uniformcurve::{uniform_pairs, uniform_scan, Case};
use siegel::{Execution, HorizontalPath, ModelParams, Point, Vec2};

const MS: [f64; 3] = [1.0, 1.5, 2.0];

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn params(m: f64) -> ModelParams {
    ModelParams::new(m).unwrap()
}

fn surface(name: &str, p: &ModelParams) -> Box<dyn AdmissibleGraph> {
    surface_by_name(name, p).unwrap()
}

fn unit_point<R: Rng>(rng: &mut R) -> Point {
    Point::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    )
}

/// Independent RK4 for `ż = (u, v)`, `ṫ = |z|^{2m}(y u − x v)` over unit time.
fn rk4_reference(p: Point, u: f64, v: f64, h: f64, m: f64) -> Point {
    let f = |x: f64, y: f64| (x * x + y * y).powf(m) * (y * u - x * v);
    let n = (1.0 / h).round() as usize;
    let h = 1.0 / n as f64;
    let (mut x, mut y, mut t) = (p.x, p.y, p.t);
    for _ in 0..n {
        let k1 = f(x, y);
        let k2 = f(x + 0.5 * h * u, y + 0.5 * h * v);
        let k4 = f(x + h * u, y + h * v);
        t += h / 6.0 * (k1 + 4.0 * k2 + k4);
        x += h * u;
        y += h * v;
    }
    Point::new(x, y, t)
}

fn symmetries() -> Verdict {
    let mut worst = [0.0f64; 3];
    for (k, &m) in MS.iter().enumerate() {
        let par = params(m);
        let mut rng = stream(1, k as u64);
        for _ in 0..10_000 {
            let (p, q) = (unit_point(&mut rng), unit_point(&mut rng));
            let d = delta_value(&p, &q, &par);
            let th = rng.gen_range(0.0..TAU);
            let s = rng.gen_range(-1.0..1.0);
            let lam = 10f64.powf(rng.gen_range(-1.0..1.0));
            let dr = delta_value(&rotate(p, th), &rotate(q, th), &par);
            let dt = delta_value(&translate_t(p, s), &translate_t(q, s), &par);
            let dl = delta_value(&dilate(p, lam, &par), &dilate(q, lam, &par), &par);
            worst[0] = worst[0].max((dr - d).abs() / d.max(1.0));
            worst[1] = worst[1].max((dt - d).abs() / d.max(1.0));
            worst[2] = worst[2].max((dl - lam * d).abs() / (lam * d));
        }
    }
    check(
        worst.iter().all(|w| *w <= 1e-12),
        format!(
            "30000 pairs, max error rotation {:.1e}, translation {:.1e}, dilation {:.1e}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn flow_correctness() -> Verdict {
    let mut gap = 0.0f64;
    let mut rng = stream(2, 0);
    for i in 0..1000 {
        let m = MS[i % 3];
        let par = params(m);
        let p = unit_point(&mut rng);
        let (u, v) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let exact = flow(p, u, v, &par);
        let mut path = HorizontalPath::new(p);
        path.push_displacement(u, v);
        let lib = integrate_horizontal(p, &path, 1e-3, &par).unwrap();
        let own = rk4_reference(p, u, v, 1e-3, m);
        gap = gap.max(exact.euclid_dist(&lib)).max(exact.euclid_dist(&own));
    }
    let hs = [0.2, 0.1, 0.05, 0.025];
    let p = Point::new(0.6, -0.4, 0.2);
    let (u, v) = (-0.9, 0.7);
    let rk4 = |h: f64, par: &ModelParams| {
        let mut path = HorizontalPath::new(p);
        path.push_displacement(u, v);
        integrate_horizontal(p, &path, h, par).unwrap()
    };
    // at m = 1 the t-integrand is a cubic in s, which RK4 integrates exactly
    let par1 = params(1.0);
    let exact1 = rk4(0.5, &par1).euclid_dist(&flow(p, u, v, &par1));
    let mut orders = Vec::new();
    for m in [1.5, 2.0, 3.0] {
        let par = params(m);
        let exact = flow(p, u, v, &par);
        let errs: Vec<f64> = hs.iter().map(|&h| rk4(h, &par).euclid_dist(&exact)).collect();
        orders.push(loglog_fit(&hs, &errs).unwrap().slope);
    }
    check(
        gap <= 1e-8 && exact1 <= 1e-14 && orders.iter().all(|o| (o - 4.0).abs() <= 0.3),
        format!(
            "max endpoint gap {gap:.2e} over 1000 flows, m=1 error at step 0.5 {exact1:.1e}, \
             orders at m=1.5,2,3 {orders:.3?}"
        ),
    )
}

fn stokes() -> Verdict {
    let hand = stokes_lift(0.0, 1.0, &params(1.0)).unwrap();
    let hand_err = (hand - 8.0 / 3.0).abs();
    let mut worst = 0.0f64;
    let mut rng = stream(3, 0);
    for i in 0..100 {
        let m = MS[i % 3];
        let par = params(m);
        let (x, u) = (rng.gen_range(0.0..1.0), rng.gen_range(0.01..1.0));
        let base = Point::new(x, 0.0, 0.0);
        let path = square_path(base, u, true);
        let end = integrate_horizontal(base, &path, 1e-3, &par).unwrap();
        let lift = stokes_lift(x, u, &par).unwrap();
        worst = worst.max((end.t - lift).abs()).max((end.z() - base.z()).norm());
    }
    check(
        hand_err <= 1e-9 && worst <= 1e-8,
        format!("lift(0, 1) - 8/3 = {hand_err:.1e}, max |gain - lift| {worst:.1e} over 100 squares"),
    )
}

fn flow_bracket() -> Verdict {
    let par = params(1.0);
    let mut rng = stream(4, 0);
    let mut worst_slack = f64::INFINITY;
    let mut ratios = Vec::new();
    let mut lower_ok = true;
    for i in 0..1000 {
        let p = unit_point(&mut rng);
        let (u, v) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let q = flow(p, u, v, &par);
        let len = u.hypot(v);
        let opts = RefineOptions {
            seed: i,
            budget: 1000,
            ..RefineOptions::default()
        };
        let init = connect_constructive(&p, &q, &par).unwrap();
        let est = refine_distance(&p, &q, &init, &opts, &par).unwrap();
        worst_slack = worst_slack.min(est.upper - len);
        lower_ok &= lower_bound(&p, &q, &par) <= est.upper;
        ratios.push(est.upper / len);
    }
    let c_emp = ratios.iter().fold(0.0f64, |a, r| a.max(*r));
    check(
        worst_slack >= -1e-6 && c_emp.is_finite() && lower_ok,
        format!("1000 flow pairs, min (upper - |(u,v)|) {worst_slack:.2e}, C_emp {c_emp:.6}"),
    )
}

fn equivalence() -> Verdict {
    let par = params(1.0);
    let base = RefineOptions::default();
    let run = |budget: usize| {
        let opts = RefineOptions { budget, ..base };
        empirical_equivalence_scan(1000, &Region::unit(), 5, &opts, Execution::default(), &par).unwrap()
    };
    let a = run(base.budget);
    let b = run(2 * base.budget);
    let c = a.summary.c_emp;
    let ratios: Vec<f64> = a.rows.iter().map(|r| r.ratio).collect();
    let inside = ratios.iter().all(|r| *r >= 1.0 / c && *r <= c);
    let drift = b.summary.c_emp / c - 1.0;
    check(
        c.is_finite() && inside && drift.abs() <= 0.2 && a.summary.bracket_violations == 0,
        format!(
            "1000 pairs, C_emp {c:.4} (spread {:.4}), doubled budget {:.4} ({:+.1}%), stagnated {}",
            symmetric_spread(&ratios),
            b.summary.c_emp,
            100.0 * drift,
            a.summary.stagnated
        ),
    )
}

fn surface_checks() -> Verdict {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for &m in &MS {
        let par = params(m);
        for name in ["plane", "siegel-example", "cap+", "cap-"] {
            let g = surface(name, &par);
            let rep = check_admissibility(g.as_ref(), &admissibility_grid(g.as_ref(), 41), &par).unwrap();
            if !rep.pass {
                failures.push(format!("{name} m={m} ratio {:.3}", rep.max_ratio));
            }
            for z in [Vec2::new(0.6, 0.3), Vec2::new(-0.25, 0.4)] {
                let r = residual_exponents(g.as_ref(), z, &par);
                for fit in [r.cubic, r.matrix] {
                    let e = (fit.map_or(f64::NAN, |f| f.slope) - 2.0).abs();
                    worst = worst.max(if e.is_nan() { f64::INFINITY } else { e });
                }
            }
        }
    }
    let par = params(1.0);
    let near_zero: Vec<Vec2> = (1..=8).map(|k| Vec2::from_polar(0.5f64.powi(k), 0.3)).collect();
    let paraboloid = check_admissibility(&Paraboloid, &near_zero, &par).unwrap();
    check(
        failures.is_empty() && !paraboloid.pass && worst <= 0.1,
        format!(
            "failures {failures:?}, paraboloid ratio near 0 {:.2e} (fails), max |exponent - 2| {worst:.3}",
            paraboloid.max_ratio
        ),
    )
}

fn nondegeneracy() -> Verdict {
    let mut lines = Vec::new();
    let mut ok = true;
    for &m in &MS {
        let par = params(m);
        for name in ["plane", "siegel-example"] {
            let g = surface(name, &par);
            let grid = annulus_grid(g.as_ref(), 41, 0.1, 2.0);
            let s = &nondegeneracy_sweep(g.as_ref(), &grid, &[0.1], &par).unwrap()[0];
            ok &= s.pass && !grid.is_empty();
            lines.push(format!("{name} m={m} margin {:.3}", s.min_margin));
        }
    }
    check(ok, format!("eps0 = 0.1: {}", lines.join(", ")))
}

fn john() -> Verdict {
    let cfg = CalibrationConfig::default();
    let mut lines = Vec::new();
    let mut ok = true;
    for &m in &MS {
        let par = params(m);
        for name in ["plane", "siegel-example"] {
            let g = surface(name, &par);
            let starts = boundary_samples(g.as_ref(), 50, 8);
            let rep = john_scan(g.as_ref(), &starts, &cfg, 20, 200, Execution::default(), &par).unwrap();
            let s = &rep.summary;
            ok &= s.min_lambda > 0.0 && s.uniform && s.min_lambda >= 0.5 * s.median_lambda;
            lines.push(format!(
                "{name} m={m} min {:.3} median {:.3}",
                s.min_lambda, s.median_lambda
            ));
        }
    }
    check(ok, format!("50 starts x 20 times: {}", lines.join("; ")))
}

fn uniform() -> Verdict {
    let cfg = CalibrationConfig::default();
    let par = params(1.0);
    let mut lines = Vec::new();
    let mut ok = true;
    for name in ["plane", "siegel-example"] {
        let g = surface(name, &par);
        let pairs = uniform_pairs(g.as_ref(), 100, 9, &par);
        let rep = uniform_scan(g.as_ref(), &pairs, &cfg, 16, 200, Execution::default(), &par).unwrap();
        let s = &rep.summary;
        let a = rep.rows.iter().filter(|r| r.case == Case::A).count();
        ok &= s.pass && s.case_a >= 10 && s.case_b >= 10 && a == s.case_a;
        lines.push(format!(
            "{name}: A {} B {} max diam ratio {:.2} (<= {}), min eps* {:.3}",
            s.case_a, s.case_b, s.max_diam_ratio, s.inv_delta, s.min_eps_star
        ));
    }
    check(ok, format!("100 pairs each: {}", lines.join("; ")))
}

fn ahlfors() -> Verdict {
    let cfg = CalibrationConfig::default();
    let radii = geometric_radii(2e-3, 2.0, 10);
    let mut lines = Vec::new();
    let mut ok = true;
    for m in [1.0, 1.5] {
        let par = params(m);
        for name in ["plane", "siegel-example"] {
            let g = surface(name, &par);
            let bases = boundary_samples(g.as_ref(), 20, 10);
            let rep = ahlfors_scan(g.as_ref(), &bases, &radii, &cfg, Execution::default(), &par).unwrap();
            let s = &rep.summary;
            let flat = s.regimes.iter().filter(|f| f.expected_mu == 3.0).count();
            let origin = s.regimes.len() - flat;
            ok &= s.c_emp.is_finite()
                && s.c_emp <= 1e3
                && s.regimes.iter().all(|f| f.within(0.2))
                && flat > 0
                && origin > 0;
            lines.push(format!(
                "{name} m={m} C_emp {:.2}, {flat}+{origin} regime fits, max slope error {:.3}",
                s.c_emp, s.max_slope_error
            ));
        }
    }
    check(ok, format!("20 bases x 10 radii in [2e-3, 2]: {}", lines.join("; ")))
}

/// One scan, rendered as (CSV, JSON summary).
type Scan<'a> = Box<dyn Fn(Execution) -> (String, String) + 'a>;

fn reproducibility() -> Verdict {
    let cfg = CalibrationConfig {
        seed: 77,
        ..CalibrationConfig::default()
    };
    let par = params(1.5);
    let g = surface("siegel-example", &par);
    let g = g.as_ref();
    let runs: Vec<(&str, Scan<'_>)> = vec![
        (
            "equivalence",
            Box::new(|exec| {
                let opts = RefineOptions {
                    budget: 800,
                    ..RefineOptions::default()
                };
                let r = empirical_equivalence_scan(20, &Region::unit(), cfg.seed, &opts, exec, &par).unwrap();
                (to_csv_string(&r.rows), serde_json::to_string(&r.summary).unwrap())
            }),
        ),
        (
            "ahlfors",
            Box::new(|exec| {
                let bases = boundary_samples(g, 4, cfg.seed);
                let r = ahlfors_scan(g, &bases, &geometric_radii(1e-2, 1.0, 3), &cfg, exec, &par).unwrap();
                (to_csv_string(&r.rows), serde_json::to_string(&r.summary).unwrap())
            }),
        ),
        (
            "john",
            Box::new(|exec| {
                let starts = boundary_samples(g, 6, cfg.seed);
                let r = john_scan(g, &starts, &cfg, 6, 60, exec, &par).unwrap();
                (to_csv_string(&r.rows), serde_json::to_string(&r.summary).unwrap())
            }),
        ),
        (
            "uniform",
            Box::new(|exec| {
                let pairs = uniform_pairs(g, 6, cfg.seed, &par);
                let r = uniform_scan(g, &pairs, &cfg, 8, 60, exec, &par).unwrap();
                (to_csv_string(&r.rows), serde_json::to_string(&r.summary).unwrap())
            }),
        ),
    ];
    let mut differing = Vec::new();
    for (name, run) in &runs {
        let first = run(Execution::Parallel);
        if first != run(Execution::Parallel) || first != run(Execution::Sequential) {
            differing.push(*name);
        }
    }
    check(
        differing.is_empty(),
        format!("4 scans rerun (parallel twice, sequential once), differing: {differing:?}"),
    )
}

/// Name, body and wall-clock limit.
type Check = (&'static str, fn() -> Verdict, Duration);

#[test]
fn acceptance() {
    let checks: [Check; 11] = [
        ("exact symmetries of delta", symmetries, Duration::from_secs(10)),
        ("closed-form flow vs RK4", flow_correctness, Duration::MAX),
        ("square lift", stokes, Duration::MAX),
        ("flow distance bracket", flow_bracket, Duration::MAX),
        ("empirical equivalence d ~ delta", equivalence, Duration::from_secs(600)),
        ("surface admissibility and expansions", surface_checks, Duration::MAX),
        ("nondegeneracy of M", nondegeneracy, Duration::MAX),
        ("John cone condition", john, Duration::from_secs(300)),
        ("uniform curves", uniform, Duration::MAX),
        ("Ahlfors regularity and slopes", ahlfors, Duration::from_secs(900)),
        ("reproducibility", reproducibility, Duration::MAX),
    ];
    let mut failed = Vec::new();
    for (k, (name, run, limit)) in checks.iter().enumerate() {
        let t0 = Instant::now();
        let verdict = run();
        let dt = t0.elapsed();
        let (ok, detail) = match verdict {
            Ok(d) => (dt <= *limit, d),
            Err(d) => (false, d),
        };
        let budget = if *limit == Duration::MAX {
            String::new()
        } else {
            format!(", limit {}s", limit.as_secs())
        };
        println!(
            "[{}] {} {name}: {detail} ({:.1}s{budget})",
            k + 1,
            if ok { "PASS" } else { "FAIL" },
            dt.as_secs_f64()
        );
        if !ok {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed checks: {failed:?}");
}

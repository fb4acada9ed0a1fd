use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use siegel::config::CalibrationConfig;
use siegel::johncurve::john_scan;
use siegel::oracle::{empirical_equivalence_scan, RefineOptions, Region};
use siegel::perimeter::{ahlfors_scan, geometric_radii};
use siegel::surface::{boundary_samples, SiegelExample};
use siegel::{Execution, ModelParams};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn equivalence(c: &mut Criterion) {
    let params = ModelParams::default();
    let opts = RefineOptions {
        budget: 1000,
        ..RefineOptions::default()
    };
    let mut group = c.benchmark_group("equivalence_scan_32");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| empirical_equivalence_scan(black_box(32), &Region::unit(), 1, &opts, exec, &params).unwrap())
        });
    }
    group.finish();
}

fn john(c: &mut Criterion) {
    let params = ModelParams::default();
    let cfg = CalibrationConfig::default();
    let g = SiegelExample::new(&params);
    let starts = boundary_samples(&g, 8, 1);
    let mut group = c.benchmark_group("john_scan_8x6");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| john_scan(&g, black_box(&starts), &cfg, 6, 100, exec, &params).unwrap())
        });
    }
    group.finish();
}

fn ahlfors(c: &mut Criterion) {
    let params = ModelParams::default();
    let cfg = CalibrationConfig::default();
    let g = SiegelExample::new(&params);
    let bases = boundary_samples(&g, 4, 1);
    let radii = geometric_radii(1e-2, 1.0, 3);
    let mut group = c.benchmark_group("ahlfors_scan_4x3");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| ahlfors_scan(&g, black_box(&bases), &radii, &cfg, exec, &params).unwrap())
        });
    }
    group.finish();
}

criterion_group! {
    name = scans;
    config = Criterion::default().sample_size(10).measurement_time(Duration::from_secs(5));
    targets = equivalence, john, ahlfors
}
criterion_main!(scans);

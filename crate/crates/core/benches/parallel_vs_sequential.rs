use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use seqclock::conditions::{scan_parameters, ScanRanges};
use seqclock::models::presets;
use seqclock::par::Execution;
use seqclock::phase::{arnold_tongue, PhaseOscillator, PwaOscillator, TongueConfig};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn scan(c: &mut Criterion) {
    let ranges = ScanRanges::default();
    let mut g = c.benchmark_group("scan_20k");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| scan_parameters(&ranges, black_box(20_000), 1, exec).unwrap())
        });
    }
    g.finish();
}

fn tongue(c: &mut Criterion) {
    let osc = PwaOscillator::new(presets::gamma_1_5().pwa());
    let t_fr = osc.settle().unwrap().period.period;
    let mut cfg = TongueConfig::default_grid(t_fr, -1.0, 2000.0);
    cfg.amplitudes = vec![0.25, 0.5, 0.75];
    cfg.periods = vec![t_fr - 0.5, t_fr, t_fr + 0.5];

    let mut g = c.benchmark_group("tongue_3x3");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| arnold_tongue(&osc, black_box(&cfg), exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, scan, tongue);
criterion_main!(benches);

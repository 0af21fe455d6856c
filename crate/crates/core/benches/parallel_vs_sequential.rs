use std::hint::black_box;

use benford_track::montecarlo::rejection_rate;
use benford_track::report::{build_period_report, build_track_report, ReportMeta};
use benford_track::series::daily_changes;
use benford_track::{
    gen_benford, named_periods, ChangeMode, ChangeSeries, Strategy, SynthKind, SynthSpec,
    WindowSpec,
};
use chrono::NaiveDate;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn panel(series: usize, n: usize) -> Vec<ChangeSeries> {
    let start = NaiveDate::from_ymd_opt(2008, 8, 8).unwrap();
    (0..series)
        .map(|i| {
            let spec = SynthSpec::new(SynthKind::Benford, n, i as u64, None).unwrap();
            let quotes = spec
                .spread_series(&format!("E{i:02}"), "5Y", start)
                .unwrap();
            daily_changes(&quotes, None, ChangeMode::Absolute)
                .unwrap()
                .series
        })
        .collect()
}

fn monte_carlo(c: &mut Criterion) {
    let mut group = c.benchmark_group("rejection_rate_200x1500");
    for strategy in Strategy::available() {
        group.bench_with_input(
            BenchmarkId::from_parameter(strategy.name()),
            strategy,
            |b, s| {
                b.iter(|| rejection_rate(200, 0, 0.05, *s, |seed| gen_benford(1500, seed)).unwrap())
            },
        );
    }
    group.finish();
}

fn tracking(c: &mut Criterion) {
    let panel = panel(13, 1750);
    let spec = WindowSpec::default();
    let mut group = c.benchmark_group("track_report_13x1750");
    for strategy in Strategy::available() {
        group.bench_with_input(
            BenchmarkId::from_parameter(strategy.name()),
            strategy,
            |b, s| {
                b.iter(|| {
                    build_track_report(
                        black_box(&panel),
                        &spec,
                        None,
                        0.05,
                        ReportMeta::new("bench"),
                        *s,
                    )
                    .unwrap()
                })
            },
        );
    }
    group.finish();
}

fn periods(c: &mut Criterion) {
    let panel = panel(13, 1750);
    let periods = named_periods();
    let mut group = c.benchmark_group("period_report_13x1750");
    for strategy in Strategy::available() {
        group.bench_with_input(
            BenchmarkId::from_parameter(strategy.name()),
            strategy,
            |b, s| {
                b.iter(|| {
                    build_period_report(
                        black_box(&panel),
                        &periods,
                        None,
                        0.05,
                        ReportMeta::new("bench"),
                        *s,
                    )
                    .unwrap()
                })
            },
        );
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, tracking, periods);
criterion_main!(benches);

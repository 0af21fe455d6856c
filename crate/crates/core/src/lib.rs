//! Benford first-digit conformity testing for numeric time-series panels.
//!
//! The pipeline reads a panel of dated spread quotes, differences each
//! entity/tenor series into daily changes, and measures how far the first
//! significant digits of those changes depart from Benford's law with
//! Pearson's chi-square (8 degrees of freedom), the Chebyshev distance and
//! the Kullback-Leibler divergence. Analyses run over whole periods, the five
//! named sub-periods of 2008-2015, or rolling windows whose metric tracks are
//! summarized by least-squares trend lines.
//!
//! Loops over windows, series and Monte Carlo trials run on rayon when the
//! default `parallel` feature is enabled; see [`exec::Strategy`].

pub mod cli;
pub mod digits;
pub mod error;
pub mod exec;
pub mod montecarlo;
pub mod report;
pub mod series;
pub mod stats;
pub mod synth;
pub mod windows;

pub use digits::{
    benford_pmf, digit_histogram, first_significant_digit, observed_frequencies, BenfordPmf,
    DigitHistogram, FrequencyVector,
};
pub use error::{Error, Result};
pub use exec::Strategy;
pub use report::{
    build_period_report, build_track_report, emit, fit_trend, Format, Metric, PeriodReport, Report,
    ReportMeta, TrackReport, TrendFit,
};
pub use series::{
    daily_changes, parse_panel, slice, write_panel, ChangeMode, ChangeSeries, SpreadSeries,
};
pub use stats::{
    chebyshev_distance, chi_square_critical, chi_square_pvalue, chi_square_statistic, conformity,
    kl_divergence, ConformityStats, Verdict,
};
pub use synth::{gen_benford, gen_uniform_digit, inject_manipulation, SynthKind, SynthSpec};
pub use windows::{
    analyze_period, named_periods, rolling_windows, track, PeriodLabel, PeriodSpec, WindowResult,
    WindowSpec,
};

//! Per-period conformity tables, per-window tracks with linear trends, and
//! their text, CSV and JSON renderings.
//!
//! CSV and JSON are lossless: parsing an emitted document and emitting it
//! again reproduces the same bytes. CSV carries no `meta` block, so a report
//! parsed from CSV comes back with default metadata.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Strategy;
use crate::series::ChangeSeries;
use crate::stats::Verdict;
use crate::windows::{analyze_period, track_with, PeriodSpec, WindowResult, WindowSpec};

pub const PERIOD_CSV_HEADER: &str = "entity,tenor,period,chi2,p_value,verdict,n,small_sample";
pub const TRACK_CSV_HEADER: &str =
    "entity,tenor,window,start_date,end_date,n,chi2,p_value,chebyshev,kl";

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Report(format!("unknown format `{other}`"))),
        }
    }
}

/// Tool identity and the parameters a report was produced with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub parameters: BTreeMap<String, String>,
}

impl ReportMeta {
    pub fn new(command: &str) -> Self {
        Self {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            parameters: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }
}

/// Outcome of one (entity, tenor, period) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellVerdict {
    Accept,
    Reject,
    /// No value with a first digit fell in the period.
    Empty,
}

impl From<Verdict> for CellVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Accept => CellVerdict::Accept,
            Verdict::Reject => CellVerdict::Reject,
        }
    }
}

impl CellVerdict {
    fn as_str(self) -> &'static str {
        match self {
            CellVerdict::Accept => "accept",
            CellVerdict::Reject => "reject",
            CellVerdict::Empty => "empty",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRow {
    pub entity: String,
    pub tenor: String,
    pub period: String,
    pub chi2: Option<f64>,
    pub p_value: Option<f64>,
    pub verdict: CellVerdict,
    pub n: u64,
    pub small_sample: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodReport {
    pub meta: ReportMeta,
    pub rows: Vec<PeriodRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Chi2,
    Chebyshev,
    Kl,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Chi2, Metric::Chebyshev, Metric::Kl];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Chi2 => "chi2",
            Metric::Chebyshev => "chebyshev",
            Metric::Kl => "kl",
        }
    }

    fn of_row(self, row: &TrackRow) -> f64 {
        match self {
            Metric::Chi2 => row.chi2,
            Metric::Chebyshev => row.chebyshev,
            Metric::Kl => row.kl,
        }
    }
}

/// Ordinary least squares line of a metric against the 1-based window ordinal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub metric: Metric,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// OLS fit of `values[i]` against `i + 1`. A constant sequence has slope 0 and
/// `r_squared` 0.
pub fn fit_trend_values(values: &[f64], metric: Metric) -> Result<TrendFit> {
    if values.len() < 2 {
        return Err(Error::InsufficientWindows(values.len()));
    }
    if values.iter().all(|v| *v == values[0]) {
        return Ok(TrendFit {
            metric,
            slope: 0.0,
            intercept: values[0],
            r_squared: 0.0,
        });
    }
    let n = values.len() as f64;
    let mean_x = (n + 1.0) / 2.0;
    let mean_y = values.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (i, y) in values.iter().enumerate() {
        let dx = (i + 1) as f64 - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(TrendFit {
        metric,
        slope,
        intercept: mean_y - slope * mean_x,
        r_squared,
    })
}

/// Trend of one metric across a window track.
pub fn fit_trend(results: &[WindowResult], metric: Metric) -> Result<TrendFit> {
    let values: Vec<f64> = results
        .iter()
        .map(|w| match metric {
            Metric::Chi2 => w.stats.chi_square,
            Metric::Chebyshev => w.stats.chebyshev,
            Metric::Kl => w.stats.kl_divergence,
        })
        .collect();
    fit_trend_values(&values, metric)
}

/// One window of a track, flattened to the track CSV columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRow {
    pub entity: String,
    pub tenor: String,
    pub window: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// Values carrying a first digit.
    pub n: u64,
    pub chi2: f64,
    pub p_value: f64,
    pub chebyshev: f64,
    pub kl: f64,
}

impl TrackRow {
    pub fn from_window(entity: &str, tenor: &str, w: &WindowResult) -> Self {
        Self {
            entity: entity.to_string(),
            tenor: tenor.to_string(),
            window: w.index,
            start_date: w.start_date,
            end_date: w.end_date,
            n: w.stats.sample_size,
            chi2: w.stats.chi_square,
            p_value: w.stats.p_value,
            chebyshev: w.stats.chebyshev,
            kl: w.stats.kl_divergence,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTrack {
    pub entity: String,
    pub tenor: String,
    pub windows: Vec<TrackRow>,
    /// One fit per metric, empty when the track has fewer than two windows.
    pub trends: Vec<TrendFit>,
}

impl SeriesTrack {
    pub fn new(entity: &str, tenor: &str, windows: Vec<TrackRow>) -> Self {
        let trends = Metric::ALL
            .iter()
            .filter_map(|m| {
                let values: Vec<f64> = windows.iter().map(|r| m.of_row(r)).collect();
                fit_trend_values(&values, *m).ok()
            })
            .collect();
        Self {
            entity: entity.to_string(),
            tenor: tenor.to_string(),
            windows,
            trends,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackReport {
    pub meta: ReportMeta,
    pub series: Vec<SeriesTrack>,
}

impl TrackReport {
    pub fn rows(&self) -> impl Iterator<Item = &TrackRow> {
        self.series.iter().flat_map(|s| s.windows.iter())
    }
}

fn period_rank(periods: &[PeriodSpec], p: &PeriodSpec) -> (crate::windows::PeriodLabel, usize) {
    (
        p.label,
        periods.iter().position(|q| q == p).unwrap_or(usize::MAX),
    )
}

/// Analyzes every (series, period) cell. Series not matching `tenors` are
/// skipped. Rows are ordered by entity, tenor, then period with named periods
/// first in their canonical order.
pub fn build_period_report(
    panel: &[ChangeSeries],
    periods: &[PeriodSpec],
    tenors: Option<&[String]>,
    alpha: f64,
    meta: ReportMeta,
    strategy: Strategy,
) -> Result<PeriodReport> {
    crate::stats::check_alpha(alpha)?;
    let selected: Vec<&ChangeSeries> = panel
        .iter()
        .filter(|s| tenors.is_none_or(|t| t.contains(&s.tenor)))
        .collect();
    if selected.is_empty() {
        return Err(Error::Report("no series to analyze".into()));
    }
    let mut ordered: Vec<PeriodSpec> = periods.to_vec();
    ordered.sort_by_key(|p| period_rank(periods, p));
    ordered.dedup();

    let cells: Vec<(usize, PeriodSpec)> = (0..selected.len())
        .flat_map(|i| ordered.iter().map(move |p| (i, *p)))
        .collect();
    let mut rows = strategy
        .map_slice(&cells, |(i, period)| -> Result<PeriodRow> {
            let series = selected[*i];
            let base = PeriodRow {
                entity: series.entity.clone(),
                tenor: series.tenor.clone(),
                period: period.name(),
                chi2: None,
                p_value: None,
                verdict: CellVerdict::Empty,
                n: 0,
                small_sample: true,
            };
            match analyze_period(series, period, alpha) {
                Ok(stats) => Ok(PeriodRow {
                    chi2: Some(stats.chi_square),
                    p_value: Some(stats.p_value),
                    verdict: stats.verdict.into(),
                    n: stats.sample_size,
                    small_sample: stats.small_sample,
                    ..base
                }),
                Err(Error::EmptyPeriod { .. }) => Ok(base),
                Err(e) => Err(e),
            }
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    // Cells were generated in series order; make entity/tenor order explicit.
    rows.sort_by(|a, b| (&a.entity, &a.tenor).cmp(&(&b.entity, &b.tenor)));
    Ok(PeriodReport { meta, rows })
}

/// Rolling-window tracks with trend fits for every series matching `tenors`.
pub fn build_track_report(
    panel: &[ChangeSeries],
    spec: &WindowSpec,
    tenors: Option<&[String]>,
    alpha: f64,
    meta: ReportMeta,
    strategy: Strategy,
) -> Result<TrackReport> {
    let selected: Vec<&ChangeSeries> = panel
        .iter()
        .filter(|s| tenors.is_none_or(|t| t.contains(&s.tenor)))
        .collect();
    if selected.is_empty() {
        return Err(Error::Report("no series to analyze".into()));
    }
    let mut series = strategy
        .map_slice(&selected, |s| -> Result<SeriesTrack> {
            let windows = track_with(s, spec, alpha, strategy)?;
            let rows = windows
                .iter()
                .map(|w| TrackRow::from_window(&s.entity, &s.tenor, w))
                .collect();
            Ok(SeriesTrack::new(&s.entity, &s.tenor, rows))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    series.sort_by(|a, b| (&a.entity, &a.tenor).cmp(&(&b.entity, &b.tenor)));
    Ok(TrackReport { meta, series })
}

/// Upper-case Roman numeral for `n >= 1`.
pub fn roman(mut n: usize) -> String {
    const TABLE: [(usize, &str); 13] = [
        (1000, "M"),
        (900, "CM"),
        (500, "D"),
        (400, "CD"),
        (100, "C"),
        (90, "XC"),
        (50, "L"),
        (40, "XL"),
        (10, "X"),
        (9, "IX"),
        (5, "V"),
        (4, "IV"),
        (1, "I"),
    ];
    let mut out = String::new();
    for (value, symbol) in TABLE {
        while n >= value {
            out.push_str(symbol);
            n -= value;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Period(PeriodReport),
    Track(TrackReport),
}

/// Renders a report. Output is a pure function of the report.
pub fn emit(report: &Report, format: Format) -> Result<String> {
    match (report, format) {
        (Report::Period(r), Format::Text) => Ok(period_text(r)),
        (Report::Period(r), Format::Csv) => period_csv(r),
        (Report::Period(r), Format::Json) => period_json(r),
        (Report::Track(r), Format::Text) => Ok(track_text(r)),
        (Report::Track(r), Format::Csv) => track_csv(r),
        (Report::Track(r), Format::Json) => track_json(r),
    }
}

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::Report(e.to_string())
}

fn write_csv<T: Serialize>(header: &str, rows: impl Iterator<Item = T>) -> Result<String> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(header.split(',')).map_err(csv_error)?;
    for row in rows {
        writer.serialize(row).map_err(csv_error)?;
    }
    let bytes = writer.into_inner().map_err(csv_error)?;
    String::from_utf8(bytes).map_err(csv_error)
}

fn read_csv<T: for<'de> Deserialize<'de>>(header: &str, text: &str) -> Result<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let found = reader
        .headers()
        .map_err(csv_error)?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if found != header {
        return Err(Error::Report(format!(
            "expected header `{header}`, found `{found}`"
        )));
    }
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(csv_error)
}

fn period_csv(r: &PeriodReport) -> Result<String> {
    write_csv(PERIOD_CSV_HEADER, r.rows.iter())
}

fn track_csv(r: &TrackReport) -> Result<String> {
    write_csv(TRACK_CSV_HEADER, r.rows())
}

impl PeriodReport {
    pub fn from_csv(text: &str) -> Result<Self> {
        Ok(Self {
            meta: ReportMeta::new("analyze"),
            rows: read_csv(PERIOD_CSV_HEADER, text)?,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PeriodDocument = serde_json::from_str(text).map_err(csv_error)?;
        Ok(Self {
            meta: doc.meta,
            rows: doc.rows,
        })
    }
}

impl TrackReport {
    /// Rebuilds the report from track rows; trends are refit from the rows.
    pub fn from_csv(text: &str) -> Result<Self> {
        let rows: Vec<TrackRow> = read_csv(TRACK_CSV_HEADER, text)?;
        Ok(Self {
            meta: ReportMeta::new("track"),
            series: group_rows(rows)
                .into_iter()
                .map(|(entity, tenor, windows)| SeriesTrack::new(&entity, &tenor, windows))
                .collect(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TrackDocument = serde_json::from_str(text).map_err(csv_error)?;
        let series = group_rows(doc.rows)
            .into_iter()
            .map(|(entity, tenor, windows)| {
                let trends = Metric::ALL
                    .iter()
                    .filter_map(|m| doc.trends.get(&trend_key(&entity, &tenor, *m)).copied())
                    .collect();
                SeriesTrack {
                    entity,
                    tenor,
                    windows,
                    trends,
                }
            })
            .collect();
        Ok(Self {
            meta: doc.meta,
            series,
        })
    }
}

fn group_rows(rows: Vec<TrackRow>) -> Vec<(String, String, Vec<TrackRow>)> {
    let mut groups: Vec<(String, String, Vec<TrackRow>)> = Vec::new();
    for row in rows {
        match groups.last_mut() {
            Some((e, t, windows)) if *e == row.entity && *t == row.tenor => windows.push(row),
            _ => groups.push((row.entity.clone(), row.tenor.clone(), vec![row])),
        }
    }
    groups
}

fn trend_key(entity: &str, tenor: &str, metric: Metric) -> String {
    format!("{entity}/{tenor}/{}", metric.as_str())
}

#[derive(Serialize, Deserialize)]
struct PeriodDocument {
    meta: ReportMeta,
    rows: Vec<PeriodRow>,
}

#[derive(Serialize, Deserialize)]
struct TrackDocument {
    meta: ReportMeta,
    rows: Vec<TrackRow>,
    trends: BTreeMap<String, TrendFit>,
}

fn to_json<T: Serialize>(doc: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(doc).map_err(csv_error)?;
    text.push('\n');
    Ok(text)
}

fn period_json(r: &PeriodReport) -> Result<String> {
    to_json(&PeriodDocument {
        meta: r.meta.clone(),
        rows: r.rows.clone(),
    })
}

fn track_json(r: &TrackReport) -> Result<String> {
    let trends = r
        .series
        .iter()
        .flat_map(|s| {
            s.trends
                .iter()
                .map(|t| (trend_key(&s.entity, &s.tenor, t.metric), *t))
        })
        .collect();
    to_json(&TrackDocument {
        meta: r.meta.clone(),
        rows: r.rows().cloned().collect(),
        trends,
    })
}

/// Left-aligned text table with two-space gutters.
fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let rendered: Vec<String> = cells
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        out.push_str(rendered.join("  ").trim_end());
        out.push('\n');
    };
    line(&mut header.iter().copied());
    for row in rows {
        line(&mut row.iter().map(String::as_str));
    }
    out
}

fn fixed(x: f64) -> String {
    format!("{x:.4}")
}

fn period_text(r: &PeriodReport) -> String {
    let rows: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|row| {
            vec![
                row.entity.clone(),
                row.tenor.clone(),
                row.period.clone(),
                row.chi2.map_or_else(|| "-".into(), fixed),
                row.p_value.map_or_else(|| "-".into(), fixed),
                row.verdict.as_str().to_string(),
                row.n.to_string(),
                if row.small_sample { "yes" } else { "no" }.to_string(),
            ]
        })
        .collect();
    table(
        &[
            "entity",
            "tenor",
            "period",
            "chi2",
            "p_value",
            "verdict",
            "n",
            "small_sample",
        ],
        &rows,
    )
}

fn track_text(r: &TrackReport) -> String {
    let header = [
        "entity",
        "tenor",
        "window",
        "start_date",
        "end_date",
        "n",
        "chi2",
        "p_value",
        "chebyshev",
        "kl",
    ];
    let rows: Vec<Vec<String>> = r
        .rows()
        .map(|row| {
            vec![
                row.entity.clone(),
                row.tenor.clone(),
                roman(row.window),
                row.start_date.to_string(),
                row.end_date.to_string(),
                row.n.to_string(),
                fixed(row.chi2),
                fixed(row.p_value),
                fixed(row.chebyshev),
                fixed(row.kl),
            ]
        })
        .collect();
    let mut out = table(&header, &rows);
    let trends: Vec<Vec<String>> = r
        .series
        .iter()
        .flat_map(|s| {
            s.trends.iter().map(move |t| {
                vec![
                    s.entity.clone(),
                    s.tenor.clone(),
                    t.metric.as_str().to_string(),
                    format!("{:.6}", t.slope),
                    format!("{:.6}", t.intercept),
                    fixed(t.r_squared),
                ]
            })
        })
        .collect();
    if !trends.is_empty() {
        let _ = writeln!(out);
        out.push_str(&table(
            &[
                "entity",
                "tenor",
                "metric",
                "slope",
                "intercept",
                "r_squared",
            ],
            &trends,
        ));
    }
    out
}

//! Named sub-periods, rolling windows, and conformity analysis per slice.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::digits::digit_histogram;
use crate::error::{Error, Result};
use crate::exec::Strategy;
use crate::series::{slice, ChangeSeries};
use crate::stats::{conformity, ConformityStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PeriodLabel {
    /// 2008-08-08 to 2015-04-25.
    Full,
    /// 2008-08-08 to 2010-01-01.
    PreCrisis,
    /// 2010-01-01 to 2013-10-31.
    Crisis,
    /// 2013-11-01 to 2015-04-25.
    PostCrisis,
    /// 2010-01-01 to 2015-04-25, crisis and post-crisis together.
    Post2010,
    Custom,
}

impl PeriodLabel {
    pub const NAMED: [PeriodLabel; 5] = [
        PeriodLabel::Full,
        PeriodLabel::PreCrisis,
        PeriodLabel::Crisis,
        PeriodLabel::PostCrisis,
        PeriodLabel::Post2010,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PeriodLabel::Full => "full",
            PeriodLabel::PreCrisis => "pre_crisis",
            PeriodLabel::Crisis => "crisis",
            PeriodLabel::PostCrisis => "post_crisis",
            PeriodLabel::Post2010 => "post2010",
            PeriodLabel::Custom => "custom",
        }
    }

    fn bounds(self) -> Option<(NaiveDate, NaiveDate)> {
        let ymd = |y, m, d| NaiveDate::from_ymd_opt(y, m, d).expect("valid period bound");
        Some(match self {
            PeriodLabel::Full => (ymd(2008, 8, 8), ymd(2015, 4, 25)),
            PeriodLabel::PreCrisis => (ymd(2008, 8, 8), ymd(2010, 1, 1)),
            PeriodLabel::Crisis => (ymd(2010, 1, 1), ymd(2013, 10, 31)),
            PeriodLabel::PostCrisis => (ymd(2013, 11, 1), ymd(2015, 4, 25)),
            PeriodLabel::Post2010 => (ymd(2010, 1, 1), ymd(2015, 4, 25)),
            PeriodLabel::Custom => return None,
        })
    }
}

impl FromStr for PeriodLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PeriodLabel::NAMED
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::Report(format!("unknown period label `{s}`")))
    }
}

/// A labelled inclusive date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PeriodSpec {
    pub label: PeriodLabel,
    pub from: NaiveDate,
    pub to: NaiveDate,
}

impl PeriodSpec {
    pub fn named(label: PeriodLabel) -> Option<Self> {
        label.bounds().map(|(from, to)| Self { label, from, to })
    }

    pub fn custom(from: NaiveDate, to: NaiveDate) -> Result<Self> {
        if from > to {
            return Err(Error::InvalidRange { from, to });
        }
        Ok(Self {
            label: PeriodLabel::Custom,
            from,
            to,
        })
    }

    /// Identifier used in reports: the label for named periods, `FROM..TO` otherwise.
    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PeriodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.label {
            PeriodLabel::Custom => write!(f, "{}..{}", self.from, self.to),
            label => f.write_str(label.as_str()),
        }
    }
}

impl FromStr for PeriodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some((from, to)) = s.split_once("..") {
            let parse = |d: &str| {
                NaiveDate::parse_from_str(d, "%Y-%m-%d")
                    .map_err(|e| Error::Report(format!("invalid period date `{d}`: {e}")))
            };
            return PeriodSpec::custom(parse(from)?, parse(to)?);
        }
        let label: PeriodLabel = s.parse()?;
        Ok(PeriodSpec::named(label).expect("named label"))
    }
}

/// The five named sub-periods, in order.
pub fn named_periods() -> [PeriodSpec; 5] {
    PeriodLabel::NAMED.map(|l| PeriodSpec::named(l).expect("named label"))
}

/// Rolling window geometry, counted in observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub length: usize,
    pub step: usize,
    pub min_fill: f64,
}

impl Default for WindowSpec {
    /// 90-observation windows advanced by 45, trailing partial at half fill.
    fn default() -> Self {
        Self {
            length: 90,
            step: 45,
            min_fill: 0.5,
        }
    }
}

impl WindowSpec {
    pub fn new(length: usize, step: usize, min_fill: f64) -> Result<Self> {
        if step == 0 || length == 0 {
            return Err(Error::InvalidWindow(
                "length and step must be positive".into(),
            ));
        }
        if step > length {
            return Err(Error::InvalidWindow(format!(
                "step {step} exceeds length {length}"
            )));
        }
        if !(min_fill > 0.0 && min_fill <= 1.0) {
            return Err(Error::InvalidWindow(format!(
                "min_fill {min_fill} outside (0, 1]"
            )));
        }
        Ok(Self {
            length,
            step,
            min_fill,
        })
    }

    /// Fewest observations a series needs to produce any window.
    pub fn minimum_len(&self) -> usize {
        (self.length as f64 * self.min_fill).ceil() as usize
    }
}

/// Index ranges of the rolling windows over `len` observations.
///
/// Full windows start at `0, step, 2*step, ...` while they fit. One trailing
/// partial window, starting at the next offset and running to the end, is
/// kept when it adds at least `min_fill * step` observations beyond the last
/// full window. A series shorter than one full window yields a single
/// partial window.
pub fn window_ranges(len: usize, spec: &WindowSpec) -> Result<Vec<Range<usize>>> {
    let needed = spec.minimum_len();
    if len < needed || len == 0 {
        return Err(Error::TooShortForWindowing {
            len,
            needed: needed.max(1),
        });
    }
    if len < spec.length {
        return Ok(std::iter::once(0..len).collect());
    }
    let full = (len - spec.length) / spec.step + 1;
    let mut ranges: Vec<Range<usize>> = (0..full)
        .map(|k| k * spec.step..k * spec.step + spec.length)
        .collect();
    let covered = ranges.last().map_or(0, |r| r.end);
    let uncovered = len - covered;
    if uncovered > 0 && uncovered as f64 >= spec.min_fill * spec.step as f64 {
        ranges.push(full * spec.step..len);
    }
    Ok(ranges)
}

/// Rolling windows over a change series.
pub fn rolling_windows(series: &ChangeSeries, spec: &WindowSpec) -> Result<Vec<Range<usize>>> {
    window_ranges(series.len(), spec)
}

/// Conformity of one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowResult {
    /// 1-based ordinal.
    pub index: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// Observations in the window, zeros included.
    pub sample_size: usize,
    pub stats: ConformityStats,
}

fn analyze_values(series: &ChangeSeries, label: &str, alpha: f64) -> Result<ConformityStats> {
    let histogram = digit_histogram(&series.values())?;
    if histogram.total() == 0 {
        return Err(Error::EmptyPeriod {
            label: label.to_string(),
        });
    }
    conformity(&histogram, alpha)
}

/// Conformity statistics of the changes dated within `period`.
pub fn analyze_period(
    series: &ChangeSeries,
    period: &PeriodSpec,
    alpha: f64,
) -> Result<ConformityStats> {
    crate::stats::check_alpha(alpha)?;
    let sliced = slice(series, period.from, period.to)?;
    analyze_values(&sliced, &period.name(), alpha)
}

/// Conformity over a range of change indices.
pub fn analyze_range(
    series: &ChangeSeries,
    range: Range<usize>,
    alpha: f64,
) -> Result<ConformityStats> {
    let part = ChangeSeries {
        entity: series.entity.clone(),
        tenor: series.tenor.clone(),
        changes: series.changes[range.clone()].to_vec(),
    };
    analyze_values(
        &part,
        &format!("window {}..{}", range.start, range.end),
        alpha,
    )
}

/// Per-window conformity track using the default execution strategy.
pub fn track(series: &ChangeSeries, spec: &WindowSpec, alpha: f64) -> Result<Vec<WindowResult>> {
    track_with(series, spec, alpha, Strategy::default())
}

pub fn track_with(
    series: &ChangeSeries,
    spec: &WindowSpec,
    alpha: f64,
    strategy: Strategy,
) -> Result<Vec<WindowResult>> {
    crate::stats::check_alpha(alpha)?;
    let ranges = rolling_windows(series, spec)?;
    strategy
        .map_slice(&ranges, |range| analyze_range(series, range.clone(), alpha))
        .into_iter()
        .zip(&ranges)
        .enumerate()
        .map(|(i, (stats, range))| {
            Ok(WindowResult {
                index: i + 1,
                start_date: series.changes[range.start].date,
                end_date: series.changes[range.end - 1].date,
                sample_size: range.len(),
                stats: stats?,
            })
        })
        .collect()
}

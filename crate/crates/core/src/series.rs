//! Panel CSV ingestion, daily changes and date slicing.
//!
//! The panel format is one observation per row under the header
//! `date,entity,tenor,spread_bps`. Blank lines are skipped and lines starting
//! with `#` are comments.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PANEL_HEADER: &str = "date,entity,tenor,spread_bps";

/// One spread quote.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub date: NaiveDate,
    pub spread: f64,
}

/// Date-ordered spread quotes (basis points) for one entity and tenor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadSeries {
    pub entity: String,
    pub tenor: String,
    observations: Vec<Observation>,
}

impl SpreadSeries {
    /// Sorts by date; rejects duplicate dates and nonpositive or non-finite spreads.
    pub fn new(
        entity: impl Into<String>,
        tenor: impl Into<String>,
        mut observations: Vec<Observation>,
    ) -> Result<Self> {
        let entity = entity.into();
        let tenor = tenor.into();
        observations.sort_by_key(|o| o.date);
        for (i, o) in observations.iter().enumerate() {
            if !(o.spread.is_finite() && o.spread > 0.0) {
                return Err(Error::InvalidSpread {
                    line: 0,
                    value: o.spread.to_string(),
                });
            }
            if i > 0 && observations[i - 1].date == o.date {
                return Err(Error::DuplicateDate {
                    line: 0,
                    entity,
                    tenor,
                    date: o.date,
                });
            }
        }
        Ok(Self {
            entity,
            tenor,
            observations,
        })
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// One daily change and the calendar distance to the quote it was taken against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Change {
    pub date: NaiveDate,
    pub change: f64,
    pub gap_days: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChangeSeries {
    pub entity: String,
    pub tenor: String,
    pub changes: Vec<Change>,
}

impl ChangeSeries {
    pub fn len(&self) -> usize {
        self.changes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.changes.iter().map(|c| c.change).collect()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.changes.first().map(|c| c.date)
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.changes.last().map(|c| c.date)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeMode {
    /// `s_t - s_{t-1}` in basis points.
    #[default]
    Absolute,
    /// `(s_t - s_{t-1}) / s_{t-1}`.
    Relative,
}

/// Daily changes plus the number of consecutive pairs dropped for exceeding the gap cap.
#[derive(Debug, Clone, PartialEq)]
pub struct Differenced {
    pub series: ChangeSeries,
    pub dropped: usize,
}

/// Reads a panel CSV into one series per (entity, tenor), ordered by entity then tenor.
pub fn parse_panel<R: Read>(input: R) -> Result<Vec<SpreadSeries>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::None)
        .from_reader(input);

    let mut grouped: BTreeMap<(String, String), BTreeMap<NaiveDate, f64>> = BTreeMap::new();
    let mut header_seen = false;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if !header_seen {
            let header = record.iter().collect::<Vec<_>>().join(",");
            if header != PANEL_HEADER {
                return Err(Error::Parse {
                    line,
                    message: format!("expected header `{PANEL_HEADER}`, found `{header}`"),
                });
            }
            header_seen = true;
            continue;
        }
        if record.len() != 4 {
            return Err(Error::Parse {
                line,
                message: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d").map_err(|e| Error::Parse {
            line,
            message: format!("invalid date `{}`: {e}", &record[0]),
        })?;
        let entity = &record[1];
        let tenor = &record[2];
        if entity.is_empty() || tenor.is_empty() {
            return Err(Error::Parse {
                line,
                message: "entity and tenor must be nonempty".into(),
            });
        }
        let spread = parse_spread(&record[3]).ok_or_else(|| Error::Parse {
            line,
            message: format!("invalid spread `{}`", &record[3]),
        })?;
        if !(spread.is_finite() && spread > 0.0) {
            return Err(Error::InvalidSpread {
                line,
                value: record[3].to_string(),
            });
        }
        let series = grouped
            .entry((entity.to_string(), tenor.to_string()))
            .or_default();
        match series.entry(date) {
            Entry::Occupied(_) => {
                return Err(Error::DuplicateDate {
                    line,
                    entity: entity.to_string(),
                    tenor: tenor.to_string(),
                    date,
                })
            }
            Entry::Vacant(slot) => {
                slot.insert(spread);
            }
        }
    }
    if !header_seen {
        return Err(Error::Parse {
            line: 1,
            message: format!("missing header `{PANEL_HEADER}`"),
        });
    }

    Ok(grouped
        .into_iter()
        .map(|((entity, tenor), quotes)| SpreadSeries {
            entity,
            tenor,
            observations: quotes
                .into_iter()
                .map(|(date, spread)| Observation { date, spread })
                .collect(),
        })
        .collect())
}

/// Plain decimal with `.` separator: optional sign, digits, optional fraction.
/// Exponents, thousands separators, `inf` and `nan` are rejected.
fn parse_spread(text: &str) -> Option<f64> {
    let unsigned = text.strip_prefix(['-', '+']).unwrap_or(text);
    let (int, frac) = unsigned.split_once('.').unwrap_or((unsigned, ""));
    let digits_ok = !(int.is_empty() && frac.is_empty())
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.bytes().all(|b| b.is_ascii_digit());
    if !digits_ok {
        return None;
    }
    text.parse().ok()
}

/// Writes series in panel format, entity/tenor grouped, dates ascending.
pub fn write_panel<W: Write>(series: &[SpreadSeries], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{PANEL_HEADER}")?;
    for s in series {
        for o in &s.observations {
            writeln!(
                out,
                "{},{},{},{}",
                o.date.format("%Y-%m-%d"),
                s.entity,
                s.tenor,
                format_decimal(o.spread)
            )?;
        }
    }
    Ok(())
}

/// Shortest round-trip rendering, always in positional notation.
pub(crate) fn format_decimal(value: f64) -> String {
    // `Display` for f64 never uses exponent notation.
    value.to_string()
}

/// Differences between consecutive available observations.
///
/// Pairs further apart than `max_gap_days` calendar days are dropped, not
/// bridged. `None` keeps every pair.
pub fn daily_changes(
    series: &SpreadSeries,
    max_gap_days: Option<u32>,
    mode: ChangeMode,
) -> Result<Differenced> {
    if series.len() < 2 {
        return Err(Error::SeriesTooShort {
            entity: series.entity.clone(),
            tenor: series.tenor.clone(),
            len: series.len(),
        });
    }
    let mut changes = Vec::with_capacity(series.len() - 1);
    let mut dropped = 0;
    for pair in series.observations.windows(2) {
        let (prev, cur) = (pair[0], pair[1]);
        let gap_days = (cur.date - prev.date).num_days() as u32;
        if max_gap_days.is_some_and(|cap| gap_days > cap) {
            dropped += 1;
            continue;
        }
        let diff = cur.spread - prev.spread;
        let change = match mode {
            ChangeMode::Absolute => diff,
            ChangeMode::Relative => diff / prev.spread,
        };
        changes.push(Change {
            date: cur.date,
            change,
            gap_days,
        });
    }
    Ok(Differenced {
        series: ChangeSeries {
            entity: series.entity.clone(),
            tenor: series.tenor.clone(),
            changes,
        },
        dropped,
    })
}

/// Changes dated within `[from, to]`.
pub fn slice(series: &ChangeSeries, from: NaiveDate, to: NaiveDate) -> Result<ChangeSeries> {
    if from > to {
        return Err(Error::InvalidRange { from, to });
    }
    let start = series.changes.partition_point(|c| c.date < from);
    let end = series.changes.partition_point(|c| c.date <= to);
    Ok(ChangeSeries {
        entity: series.entity.clone(),
        tenor: series.tenor.clone(),
        changes: series.changes[start..end.max(start)].to_vec(),
    })
}

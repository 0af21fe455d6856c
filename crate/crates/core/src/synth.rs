//! Seeded synthetic samples with known first-digit behaviour.
//!
//! All generators draw from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)`. Independent draws for one spec (values,
//! manipulation subset, signs) use separate ChaCha streams of the same seed.
//! Output is bit-identical across runs and platforms.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::digits::{first_significant_digit, scale_by_power_of_ten};
use crate::error::{Error, Result};
use crate::series::{Observation, SpreadSeries};

const VALUE_STREAM: u64 = 0;
const MANIPULATION_STREAM: u64 = 1;
const SIGN_STREAM: u64 = 2;

/// Keeps generated mantissas at least this far below the next integer so the
/// intended leading digit survives rounding.
const MANTISSA_MARGIN: f64 = 1e-9;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    Benford,
    UniformDigit,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Manipulation {
    pub fraction: f64,
    pub target_digit: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub n: usize,
    pub seed: u64,
    pub manipulation: Option<Manipulation>,
}

impl SynthSpec {
    pub fn new(
        kind: SynthKind,
        n: usize,
        seed: u64,
        manipulation: Option<Manipulation>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSynth("sample size must be at least 1".into()));
        }
        if let Some(m) = manipulation {
            check_manipulation(m.fraction, m.target_digit)?;
        }
        Ok(Self {
            kind,
            n,
            seed,
            manipulation,
        })
    }

    /// Positive magnitudes with the requested digit behaviour.
    pub fn values(&self) -> Vec<f64> {
        let base = match self.kind {
            SynthKind::Benford => gen_benford(self.n, self.seed),
            SynthKind::UniformDigit => gen_uniform_digit(self.n, self.seed),
            SynthKind::Constant => vec![1.0; self.n],
        };
        match self.manipulation {
            Some(m) => inject_manipulation(&base, m.fraction, m.target_digit, self.seed)
                .expect("validated in SynthSpec::new"),
            None => base,
        }
    }

    /// A spread series whose daily changes have magnitudes `self.values()`.
    ///
    /// Change signs are drawn at random and the level is offset so the lowest
    /// spread is 100 bps. Dates are consecutive weekdays from `start` (moved
    /// forward to a Monday if it falls on a weekend).
    pub fn spread_series(
        &self,
        entity: &str,
        tenor: &str,
        start: NaiveDate,
    ) -> Result<SpreadSeries> {
        let magnitudes = self.values();
        let mut signs = rng(self.seed, SIGN_STREAM);
        let mut path = Vec::with_capacity(magnitudes.len() + 1);
        path.push(0.0);
        let mut level = 0.0;
        for m in &magnitudes {
            level += if signs.gen::<bool>() { *m } else { -*m };
            path.push(level);
        }
        let floor = path.iter().copied().fold(f64::INFINITY, f64::min);
        let offset = (100.0 - floor).ceil();
        let dates = weekdays_from(start).take(path.len());
        let observations = dates
            .zip(path)
            .map(|(date, p)| Observation {
                date,
                spread: offset + p,
            })
            .collect();
        SpreadSeries::new(entity, tenor, observations)
    }
}

/// Consecutive weekdays starting at `start` or the next weekday after it.
pub fn weekdays_from(start: NaiveDate) -> impl Iterator<Item = NaiveDate> {
    std::iter::successors(Some(start), |d| d.checked_add_days(Days::new(1)))
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
}

/// `10^U` with `U` uniform on `[0, 3)`: leading digits follow Benford's law exactly.
pub fn gen_benford(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng(seed, VALUE_STREAM);
    (0..n).map(|_| 10f64.powf(3.0 * rng.gen::<f64>())).collect()
}

/// `(d + F) * 10^K` with `d` uniform on 1..=9, `F` uniform on `[0, 1)` and
/// `K` uniform on {0, 1}: leading digit is exactly `d`.
pub fn gen_uniform_digit(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng(seed, VALUE_STREAM);
    (0..n)
        .map(|_| {
            let digit = f64::from(rng.gen_range(1u8..=9));
            let mantissa = digit + rng.gen::<f64>() * (1.0 - MANTISSA_MARGIN);
            let exponent = rng.gen_range(0..2);
            scale_by_power_of_ten(mantissa, exponent)
        })
        .collect()
}

fn check_manipulation(fraction: f64, target_digit: u8) -> Result<()> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidSynth(format!(
            "fraction {fraction} outside [0, 1]"
        )));
    }
    if !(1..=9).contains(&target_digit) {
        return Err(Error::InvalidSynth(format!(
            "target digit {target_digit} outside 1..=9"
        )));
    }
    Ok(())
}

/// Moves the leading digit of a random subset of `round(fraction * len)` values
/// to `target_digit`, keeping sign, decade and the fractional part of the mantissa.
///
/// Zeros in the chosen subset have no leading digit and stay zero. Non-finite
/// values are rejected.
pub fn inject_manipulation(
    values: &[f64],
    fraction: f64,
    target_digit: u8,
    seed: u64,
) -> Result<Vec<f64>> {
    check_manipulation(fraction, target_digit)?;
    let mut out = values.to_vec();
    let amount = (fraction * values.len() as f64).round() as usize;
    let mut rng = rng(seed, MANIPULATION_STREAM);
    let mut chosen = index::sample(&mut rng, values.len(), amount.min(values.len())).into_vec();
    chosen.sort_unstable();
    for i in chosen {
        out[i] = rescale_to_digit(values[i], target_digit)?;
    }
    Ok(out)
}

fn rescale_to_digit(value: f64, target_digit: u8) -> Result<f64> {
    let Some(current) = first_significant_digit(value)? else {
        return Ok(value);
    };
    let magnitude = value.abs();
    let mut exponent = magnitude.log10().floor() as i32;
    let mut mantissa = scale_by_power_of_ten(magnitude, -exponent);
    if mantissa < 1.0 {
        exponent -= 1;
        mantissa = scale_by_power_of_ten(magnitude, -exponent);
    } else if mantissa >= 10.0 {
        exponent += 1;
        mantissa = scale_by_power_of_ten(magnitude, -exponent);
    }
    let fractional = (mantissa - f64::from(current)).clamp(0.0, 1.0 - MANTISSA_MARGIN);
    let shifted = f64::from(target_digit) + fractional;
    let rescaled = scale_by_power_of_ten(shifted, exponent).copysign(value);
    debug_assert_eq!(first_significant_digit(rescaled)?, Some(target_digit));
    Ok(rescaled)
}

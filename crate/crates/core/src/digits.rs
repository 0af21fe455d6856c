//! Benford's first-digit law and first-significant-digit histograms.
//!
//! Digits are indexed 1..=9 in the public API; the backing arrays are
//! zero-based, so `counts[0]` holds digit 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of possible first significant digits.
pub const DIGITS: usize = 9;

/// The Benford reference distribution `P(d) = log10(1 + 1/d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenfordPmf {
    probabilities: [f64; DIGITS],
}

impl BenfordPmf {
    /// Probability of leading digit `digit` (1..=9).
    pub fn probability(&self, digit: u8) -> f64 {
        assert!((1..=9).contains(&digit), "digit out of range: {digit}");
        self.probabilities[usize::from(digit - 1)]
    }

    pub fn as_array(&self) -> &[f64; DIGITS] {
        &self.probabilities
    }

    pub fn frequencies(&self) -> FrequencyVector {
        FrequencyVector(self.probabilities)
    }
}

/// Returns the Benford PMF.
pub fn benford_pmf() -> BenfordPmf {
    let mut probabilities = [0.0; DIGITS];
    for (i, p) in probabilities.iter_mut().enumerate() {
        *p = (1.0 + 1.0 / (i + 1) as f64).log10();
    }
    BenfordPmf { probabilities }
}

/// Counts of first significant digits plus the number of values that had none.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DigitHistogram {
    counts: [u64; DIGITS],
    excluded: u64,
    total: u64,
}

impl DigitHistogram {
    pub fn from_counts(counts: [u64; DIGITS], excluded: u64) -> Self {
        Self {
            counts,
            excluded,
            total: counts.iter().sum(),
        }
    }

    pub fn counts(&self) -> &[u64; DIGITS] {
        &self.counts
    }

    /// Count for digit `digit` (1..=9).
    pub fn count(&self, digit: u8) -> u64 {
        assert!((1..=9).contains(&digit), "digit out of range: {digit}");
        self.counts[usize::from(digit - 1)]
    }

    pub fn excluded(&self) -> u64 {
        self.excluded
    }

    /// Number of values that carried a first digit.
    pub fn total(&self) -> u64 {
        self.total
    }

    fn record(&mut self, digit: Option<u8>) {
        match digit {
            Some(d) => {
                self.counts[usize::from(d - 1)] += 1;
                self.total += 1;
            }
            None => self.excluded += 1,
        }
    }

    /// Adds another histogram's counts into this one.
    pub fn merge(&mut self, other: &DigitHistogram) {
        for (a, b) in self.counts.iter_mut().zip(other.counts.iter()) {
            *a += b;
        }
        self.excluded += other.excluded;
        self.total += other.total;
    }
}

/// A probability vector over the nine first digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyVector([f64; DIGITS]);

impl FrequencyVector {
    const SUM_TOLERANCE: f64 = 1e-12;

    /// Validates that every entry lies in `[0, 1]` and the entries sum to 1.
    pub fn new(frequencies: [f64; DIGITS]) -> Result<Self> {
        if let Some(bad) = frequencies
            .iter()
            .find(|f| !f.is_finite() || **f < 0.0 || **f > 1.0)
        {
            return Err(Error::InvalidFrequencies(format!(
                "entry {bad} outside [0, 1]"
            )));
        }
        let sum: f64 = frequencies.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvalidFrequencies(format!(
                "entries sum to {sum}, expected 1"
            )));
        }
        Ok(Self(frequencies))
    }

    pub fn as_array(&self) -> &[f64; DIGITS] {
        &self.0
    }

    /// Frequency of digit `digit` (1..=9).
    pub fn get(&self, digit: u8) -> f64 {
        assert!((1..=9).contains(&digit), "digit out of range: {digit}");
        self.0[usize::from(digit - 1)]
    }
}

/// Leading nonzero decimal digit of `|x|`, or `None` for zero.
///
/// The digit is `floor(|x| / 10^floor(log10 |x|))`. When that mantissa falls
/// outside `[1, 10)` or within `1e-10` below an integer, `log10` and the
/// power-of-ten scaling cannot be trusted, and the digit is re-derived from
/// `|x|` rounded to 12 significant decimal digits.
pub fn first_significant_digit(x: f64) -> Result<Option<u8>> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    let magnitude = x.abs();
    if magnitude == 0.0 {
        return Ok(None);
    }

    let exponent = magnitude.log10().floor() as i32;
    let mantissa = scale_by_power_of_ten(magnitude, -exponent);
    let floor = mantissa.floor();
    let near_boundary = mantissa - floor >= 1.0 - 1e-10;
    if !(1.0..10.0).contains(&mantissa) || near_boundary {
        return Ok(Some(digit_from_rounded(magnitude)));
    }
    Ok(Some(floor as u8))
}

/// `value * 10^power`, using exact powers of ten where f64 has them.
pub(crate) fn scale_by_power_of_ten(value: f64, power: i32) -> f64 {
    // 10^k is exact in f64 for k <= 22; larger magnitudes are applied in steps
    // so subnormal inputs do not overflow the scale factor.
    let mut v = value;
    let mut p = power;
    while p > 22 {
        v *= 1e22;
        p -= 22;
    }
    while p < -22 {
        v /= 1e22;
        p += 22;
    }
    if p >= 0 {
        v * 10f64.powi(p)
    } else {
        v / 10f64.powi(-p)
    }
}

fn digit_from_rounded(magnitude: f64) -> u8 {
    let rendered = format!("{magnitude:.11e}");
    rendered.as_bytes()[0] - b'0'
}

/// Histogram of first significant digits. Zeros are counted as excluded.
pub fn digit_histogram(values: &[f64]) -> Result<DigitHistogram> {
    let mut histogram = DigitHistogram::default();
    for &v in values {
        histogram.record(first_significant_digit(v)?);
    }
    Ok(histogram)
}

/// Empirical first-digit frequencies `counts[d] / total`.
pub fn observed_frequencies(h: &DigitHistogram) -> Result<FrequencyVector> {
    if h.total == 0 {
        return Err(Error::EmptySample);
    }
    let total = h.total as f64;
    let mut frequencies = [0.0; DIGITS];
    for (f, &c) in frequencies.iter_mut().zip(h.counts.iter()) {
        *f = c as f64 / total;
    }
    Ok(FrequencyVector(frequencies))
}

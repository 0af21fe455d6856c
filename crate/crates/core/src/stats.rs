//! Conformity statistics between an observed digit distribution and Benford's:
//! Pearson's chi-square with its p-value, Chebyshev distance and
//! Kullback-Leibler divergence.

use serde::{Deserialize, Serialize};

use crate::digits::{benford_pmf, observed_frequencies, DigitHistogram, FrequencyVector, DIGITS};
use crate::error::{Error, Result};

/// Degrees of freedom of the first-digit chi-square test (nine digits, one constraint).
pub const DIGIT_DF: u32 = 8;

/// Samples below this size are flagged: at least one expected count falls under 5.
pub const SMALL_SAMPLE_THRESHOLD: u64 = 109;

/// Default significance level.
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Accept => "accept",
            Verdict::Reject => "reject",
        }
    }
}

/// All conformity statistics for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformityStats {
    pub chi_square: f64,
    pub p_value: f64,
    pub verdict: Verdict,
    pub chebyshev: f64,
    pub kl_divergence: f64,
    pub sample_size: u64,
    pub small_sample: bool,
}

/// Pearson's chi-square of a histogram against Benford expected counts.
pub fn chi_square_statistic(h: &DigitHistogram) -> Result<f64> {
    if h.total() == 0 {
        return Err(Error::EmptySample);
    }
    let mut observed = [0.0; DIGITS];
    for (o, &c) in observed.iter_mut().zip(h.counts()) {
        *o = c as f64;
    }
    Ok(chi_square_of_counts(&observed))
}

/// Chi-square for real-valued observed counts; expected counts are
/// `sum(observed) * P(d)`, not rounded.
pub fn chi_square_of_counts(observed: &[f64; DIGITS]) -> f64 {
    let n: f64 = observed.iter().sum();
    benford_pmf()
        .as_array()
        .iter()
        .zip(observed)
        .map(|(p, o)| {
            let expected = n * p;
            (o - expected).powi(2) / expected
        })
        .sum()
}

/// Upper-tail probability of the chi-square distribution with `df` degrees
/// of freedom at `stat`.
pub fn chi_square_pvalue(stat: f64, df: u32) -> Result<f64> {
    if df == 0 {
        return Err(Error::ZeroDegreesOfFreedom);
    }
    if stat.is_nan() {
        return Err(Error::NonFinite(stat));
    }
    if stat < 0.0 {
        return Err(Error::NegativeStatistic(stat));
    }
    if stat == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(regularized_gamma_q(f64::from(df) / 2.0, stat / 2.0).clamp(0.0, 1.0))
}

/// Critical value `c` with `chi_square_pvalue(c, df) == alpha`, found by bisection.
pub fn chi_square_critical(alpha: f64, df: u32) -> Result<f64> {
    check_alpha(alpha)?;
    if df == 0 {
        return Err(Error::ZeroDegreesOfFreedom);
    }
    let mut lo = 0.0;
    let mut hi = f64::from(df).max(1.0);
    while chi_square_pvalue(hi, df)? > alpha {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if chi_square_pvalue(mid, df)? > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest absolute component-wise difference.
pub fn chebyshev_distance(p_obs: &FrequencyVector, p_ref: &FrequencyVector) -> f64 {
    p_obs
        .as_array()
        .iter()
        .zip(p_ref.as_array())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// `sum p_obs * ln(p_obs / p_ref)`, with `0 * ln 0 = 0`.
pub fn kl_divergence(p_obs: &FrequencyVector, p_ref: &FrequencyVector) -> Result<f64> {
    if let Some((i, &q)) = p_ref
        .as_array()
        .iter()
        .enumerate()
        .find(|(_, q)| **q <= 0.0)
    {
        return Err(Error::ReferenceSupport {
            digit: i + 1,
            value: q,
        });
    }
    let divergence: f64 = p_obs
        .as_array()
        .iter()
        .zip(p_ref.as_array())
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, q)| p * (p / q).ln())
        .sum();
    // Rounding can leave tiny negative sums for p_obs == p_ref.
    Ok(divergence.max(0.0))
}

/// Every statistic for one histogram, with the verdict at `alpha`.
pub fn conformity(h: &DigitHistogram, alpha: f64) -> Result<ConformityStats> {
    check_alpha(alpha)?;
    let chi_square = chi_square_statistic(h)?;
    let p_value = chi_square_pvalue(chi_square, DIGIT_DF)?;
    let observed = observed_frequencies(h)?;
    let reference = benford_pmf().frequencies();
    Ok(ConformityStats {
        chi_square,
        p_value,
        verdict: if p_value >= alpha {
            Verdict::Accept
        } else {
            Verdict::Reject
        },
        chebyshev: chebyshev_distance(&observed, &reference),
        kl_divergence: kl_divergence(&observed, &reference)?,
        sample_size: h.total(),
        small_sample: h.total() < SMALL_SAMPLE_THRESHOLD,
    })
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

const CONVERGENCE: f64 = 1e-14;
const MAX_ITERATIONS: usize = 10_000;

/// Regularized upper incomplete gamma `Q(a, x)`.
fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - lower_gamma_series(a, x)
    } else {
        upper_gamma_continued_fraction(a, x)
    }
}

fn gamma_prefactor(a: f64, x: f64) -> f64 {
    (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// `P(a, x)` by its power series.
fn lower_gamma_series(a: f64, x: f64) -> f64 {
    let mut denom = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITERATIONS {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * CONVERGENCE {
            break;
        }
    }
    sum * gamma_prefactor(a, x)
}

/// `Q(a, x)` by its continued fraction, evaluated with modified Lentz.
fn upper_gamma_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITERATIONS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < CONVERGENCE {
            break;
        }
    }
    gamma_prefactor(a, x) * h
}

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7).
fn ln_gamma(x: f64) -> f64 {
    const COEFFICIENTS: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFICIENTS[0];
    for (i, c) in COEFFICIENTS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn freq(values: [f64; DIGITS]) -> FrequencyVector {
        FrequencyVector::new(values).unwrap()
    }

    fn uniform() -> FrequencyVector {
        freq([1.0 / 9.0; DIGITS])
    }

    /// Adaptive Simpson quadrature of the chi-square density over `[from, upper]`.
    fn chi_square_tail_by_quadrature(from: f64, df: u32) -> f64 {
        let k = f64::from(df) / 2.0;
        let norm = 2f64.powf(k) * ln_gamma_oracle(k).exp();
        let density = |x: f64| x.powf(k - 1.0) * (-x / 2.0).exp() / norm;
        #[allow(clippy::too_many_arguments)]
        fn simpson(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            eps: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
                return left + right + (left + right - whole) / 15.0;
            }
            simpson(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
                + simpson(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
        }
        let upper = from + 400.0;
        let (fa, fb) = (density(from), density(upper));
        let fm = density(0.5 * (from + upper));
        let whole = (upper - from) / 6.0 * (fa + 4.0 * fm + fb);
        simpson(&density, from, upper, fa, fm, fb, whole, 1e-14, 50)
    }

    /// ln Gamma for half-integers by the exact recurrence.
    fn ln_gamma_oracle(k: f64) -> f64 {
        let mut g = if k.fract() == 0.0 {
            1.0
        } else {
            std::f64::consts::PI.sqrt()
        };
        let mut z = if k.fract() == 0.0 { 1.0 } else { 0.5 };
        while z < k {
            g *= z;
            z += 1.0;
        }
        g.ln()
    }

    #[test]
    fn chi_square_examples() {
        let pmf = benford_pmf();
        let mut expected = [0.0; DIGITS];
        for (e, p) in expected.iter_mut().zip(pmf.as_array()) {
            *e = 1234.0 * p;
        }
        assert!(chi_square_of_counts(&expected).abs() < 1e-12);

        let h = DigitHistogram::from_counts([100; DIGITS], 0);
        // Term-by-term evaluation with expected counts 900 * P(d).
        let chi = chi_square_statistic(&h).unwrap();
        assert!((chi - 361.528_463_620_962).abs() < 1e-9, "{chi}");

        assert_eq!(
            chi_square_statistic(&DigitHistogram::default()),
            Err(Error::EmptySample)
        );
    }

    #[test]
    fn moving_mass_from_underrepresented_one_to_overrepresented_nine_increases_chi_square() {
        // Expected counts for n = 1000: 301.0 at digit one, 45.8 at digit nine.
        let before = DigitHistogram::from_counts([250, 170, 130, 100, 85, 75, 70, 60, 60], 0);
        let after = DigitHistogram::from_counts([249, 170, 130, 100, 85, 75, 70, 60, 61], 0);
        assert!(chi_square_statistic(&after).unwrap() > chi_square_statistic(&before).unwrap());

        // Moving mass off an overrepresented digit one can lower the statistic.
        let over = DigitHistogram::from_counts([400, 150, 100, 80, 70, 60, 50, 40, 50], 0);
        let moved = DigitHistogram::from_counts([399, 150, 100, 80, 70, 60, 50, 40, 51], 0);
        assert!(chi_square_statistic(&moved).unwrap() < chi_square_statistic(&over).unwrap());
    }

    #[test]
    fn pvalue_examples() {
        assert_eq!(chi_square_pvalue(0.0, 8).unwrap(), 1.0);
        let p = chi_square_pvalue(15.507, 8).unwrap();
        assert!((p - 0.05).abs() <= 0.0005, "{p}");
        // Frozen from the quadrature oracle below.
        let p20 = chi_square_pvalue(20.0, 8).unwrap();
        assert!((p20 - 0.010_336_050_675_925_7).abs() < 1e-10, "{p20}");
        assert!(chi_square_pvalue(-1.0, 8).is_err());
        assert!(chi_square_pvalue(1.0, 0).is_err());
        assert_eq!(chi_square_pvalue(f64::INFINITY, 8).unwrap(), 0.0);
    }

    #[test]
    fn pvalue_agrees_with_quadrature() {
        for df in [1u32, 2, 3, 8, 15] {
            for stat in [0.3, 1.0, 4.0, 7.9, 9.1, 15.507, 20.0, 35.0, 60.0] {
                let quad = chi_square_tail_by_quadrature(stat, df);
                let p = chi_square_pvalue(stat, df).unwrap();
                assert!(
                    (p - quad).abs() < 1e-10,
                    "df={df} stat={stat}: {p} vs {quad}"
                );
            }
        }
        let quad = chi_square_tail_by_quadrature(20.0, 8);
        assert!((quad - 0.010_336_050_675_925_7).abs() < 1e-12);
    }

    #[test]
    fn pvalue_agrees_with_statrs() {
        for df in [1u32, 4, 8, 30, 100] {
            let dist = ChiSquared::new(f64::from(df)).unwrap();
            for i in 0..400 {
                let stat = i as f64 * 0.5;
                let p = chi_square_pvalue(stat, df).unwrap();
                assert!((p - dist.sf(stat)).abs() < 1e-10, "df={df} stat={stat}");
            }
        }
    }

    #[test]
    fn critical_value_pins() {
        let c = chi_square_critical(0.05, 8).unwrap();
        assert!((c - 15.507).abs() < 0.001, "{c}");
        assert!((c - 15.507_313_055_865_45).abs() < 1e-8, "{c}");
        assert!(chi_square_critical(0.0, 8).is_err());
        assert!(chi_square_critical(0.01, 8).unwrap() > c);
    }

    #[test]
    fn chebyshev_examples() {
        let benford = benford_pmf().frequencies();
        assert_eq!(chebyshev_distance(&benford, &benford), 0.0);

        // Digit one emptied, its mass spread Benford-proportionally over 2..9.
        let p = benford.as_array();
        let rest = 1.0 - p[0];
        let mut shifted = [0.0; DIGITS];
        for i in 1..DIGITS {
            shifted[i] = p[i] / rest;
        }
        let shifted = freq(shifted);
        let d = chebyshev_distance(&shifted, &benford);
        assert!((d - p[0]).abs() < 1e-12, "{d}");
        assert!((d - 0.301).abs() < 0.0005);

        let d = chebyshev_distance(&uniform(), &benford);
        assert!((d - 0.189_918_884_552_870_1).abs() < 1e-12, "{d}");

        let mut nine = [0.0; DIGITS];
        nine[8] = 1.0;
        assert!((chebyshev_distance(&freq(nine), &benford) - (1.0 - p[8])).abs() < 1e-12);
    }

    #[test]
    fn kl_examples() {
        let benford = benford_pmf().frequencies();
        assert_eq!(kl_divergence(&benford, &benford).unwrap(), 0.0);
        let kl = kl_divergence(&uniform(), &benford).unwrap();
        assert!((kl - 0.191_205_400_104_620_67).abs() < 1e-12, "{kl}");
        let mut one = [0.0; DIGITS];
        one[0] = 1.0;
        let kl = kl_divergence(&freq(one), &benford).unwrap();
        assert!((kl - 1.200_545_365_829_620_1).abs() < 1e-12, "{kl}");
        assert!(matches!(
            kl_divergence(&benford, &freq(one)),
            Err(Error::ReferenceSupport { digit: 2, .. })
        ));
    }

    #[test]
    fn conformity_flags_small_samples() {
        let h = DigitHistogram::from_counts([15, 9, 6, 5, 4, 3, 3, 3, 2], 0);
        assert_eq!(h.total(), 50);
        let s = conformity(&h, 0.05).unwrap();
        assert!(s.small_sample);
        assert_eq!(s.sample_size, 50);
        assert_eq!(s.verdict, Verdict::Accept);

        let big = DigitHistogram::from_counts([33, 19, 14, 11, 9, 7, 6, 5, 5], 0);
        assert_eq!(big.total(), 109);
        assert!(!conformity(&big, 0.05).unwrap().small_sample);
        assert!(conformity(&h, 1.0).is_err());
        assert_eq!(
            conformity(&DigitHistogram::default(), 0.05),
            Err(Error::EmptySample)
        );
    }

    #[test]
    fn verdict_threshold_matches_critical_value() {
        let critical = chi_square_critical(0.05, 8).unwrap();
        let uniform = DigitHistogram::from_counts([100; DIGITS], 0);
        let s = conformity(&uniform, 0.05).unwrap();
        assert_eq!(s.verdict, Verdict::Reject);
        assert!(s.chi_square > critical);
        assert_eq!(conformity(&uniform, 0.05).unwrap(), s);
    }

    fn frequency_vector() -> impl Strategy<Value = FrequencyVector> {
        prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0f64..1.0], DIGITS)
            .prop_filter_map("all zero", |raw| {
                let sum: f64 = raw.iter().sum();
                if sum <= 0.0 {
                    return None;
                }
                let mut f = [0.0; DIGITS];
                for (dst, x) in f.iter_mut().zip(&raw) {
                    *dst = x / sum;
                }
                FrequencyVector::new(f).ok()
            })
    }

    proptest! {
        #[test]
        fn kl_is_nonnegative(p in frequency_vector()) {
            let kl = kl_divergence(&p, &benford_pmf().frequencies()).unwrap();
            prop_assert!(kl >= 0.0);
            prop_assert_eq!(kl_divergence(&p, &p).ok().map(|k| k < 1e-12).unwrap_or(true), true);
        }

        #[test]
        fn chebyshev_is_a_metric(p in frequency_vector(), q in frequency_vector(), r in frequency_vector()) {
            let pq = chebyshev_distance(&p, &q);
            prop_assert_eq!(pq, chebyshev_distance(&q, &p));
            prop_assert!((0.0..=1.0).contains(&pq));
            prop_assert!(chebyshev_distance(&p, &r) <= pq + chebyshev_distance(&q, &r) + 1e-15);
        }

        #[test]
        fn pvalue_is_nonincreasing(a in 0.0f64..200.0, b in 0.0f64..200.0, df in 1u32..40) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(chi_square_pvalue(lo, df).unwrap() >= chi_square_pvalue(hi, df).unwrap());
        }
    }
}

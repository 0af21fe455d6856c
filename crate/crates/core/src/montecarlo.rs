//! Seeded Monte Carlo rejection-rate estimates for the chi-square verdict.

use crate::digits::digit_histogram;
use crate::error::Result;
use crate::exec::Strategy;
use crate::stats::{conformity, Verdict};

/// Share of `trials` samples rejected at `alpha`. Trial `i` is generated by
/// `sample(first_seed + i)`.
pub fn rejection_rate<F>(
    trials: usize,
    first_seed: u64,
    alpha: f64,
    strategy: Strategy,
    sample: F,
) -> Result<f64>
where
    F: Fn(u64) -> Vec<f64> + Sync + Send,
{
    let verdicts = strategy.map(trials, |i| -> Result<Verdict> {
        let values = sample(first_seed.wrapping_add(i as u64));
        Ok(conformity(&digit_histogram(&values)?, alpha)?.verdict)
    });
    let mut rejected = 0usize;
    for v in verdicts {
        if v? == Verdict::Reject {
            rejected += 1;
        }
    }
    Ok(rejected as f64 / trials.max(1) as f64)
}

//! Two-sample permutation test over success/failure lists.
//!
//! The statistic is `mean(a) - mean(b)`; the one-sided p-value is the
//! probability, over relabelings of the pooled outcomes, of a statistic at
//! least as large as observed. For boolean outcomes the statistic is
//! strictly increasing in the number of successes assigned to group `a`,
//! so exact enumeration reduces to a hypergeometric tail over the
//! `C(n, |a|)` splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Exact enumeration is used at or below this pooled size when the method
/// is chosen automatically.
pub const EXACT_THRESHOLD: usize = 12;

/// Largest pooled size the u128 binomial table supports.
const EXACT_LIMIT: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PermutationMethod {
    /// Exact when `n <= EXACT_THRESHOLD`, Monte Carlo otherwise.
    Auto,
    /// Full enumeration of label splits.
    Exact,
    /// Plus-one-smoothed Monte Carlo: `(count + 1) / (iterations + 1)`.
    MonteCarlo,
}

/// One-sided p-value for `mean(a) - mean(b)` with the automatic method.
pub fn permutation_test(a: &[bool], b: &[bool], iterations: usize, seed: u64) -> Result<f64> {
    permutation_test_with(a, b, PermutationMethod::Auto, iterations, seed)
}

pub fn permutation_test_with(
    a: &[bool],
    b: &[bool],
    method: PermutationMethod,
    iterations: usize,
    seed: u64,
) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("both samples must be non-empty".into()));
    }
    let n = a.len() + b.len();
    match method {
        PermutationMethod::Exact => exact_p(a, b),
        PermutationMethod::MonteCarlo => Ok(monte_carlo_p(a, b, iterations, seed)),
        PermutationMethod::Auto => {
            if n <= EXACT_THRESHOLD {
                exact_p(a, b)
            } else {
                Ok(monte_carlo_p(a, b, iterations, seed))
            }
        }
    }
}

fn count_true(xs: &[bool]) -> usize {
    xs.iter().filter(|&&x| x).count()
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        result = result * (n - i) as u128 / (i + 1) as u128;
    }
    result
}

/// Exact tail over all `C(n, |a|)` splits. The statistic rises strictly
/// with the number of successes assigned to `a`, so the tail is the
/// hypergeometric mass at `t >= observed successes in a`.
fn exact_p(a: &[bool], b: &[bool]) -> Result<f64> {
    let n = a.len() + b.len();
    if n > EXACT_LIMIT {
        return Err(Error::Config(format!(
            "exact enumeration supports pooled sizes up to {EXACT_LIMIT}, got {n}"
        )));
    }
    let total_true = count_true(a) + count_true(b);
    let observed = count_true(a);
    let lo = total_true.saturating_sub(b.len());
    let hi = total_true.min(a.len());
    let mut tail: u128 = 0;
    for t in lo..=hi {
        if t >= observed {
            tail += binomial(total_true, t) * binomial(n - total_true, a.len() - t);
        }
    }
    Ok(tail as f64 / binomial(n, a.len()) as f64)
}

fn monte_carlo_p(a: &[bool], b: &[bool], iterations: usize, seed: u64) -> f64 {
    let observed = statistic(a, b);
    let mut pool: Vec<bool> = a.iter().chain(b.iter()).copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut count = 0usize;
    for _ in 0..iterations {
        pool.shuffle(&mut rng);
        let stat = statistic(&pool[..a.len()], &pool[a.len()..]);
        if stat >= observed - 1e-12 {
            count += 1;
        }
    }
    (count + 1) as f64 / (iterations + 1) as f64
}

pub fn statistic(a: &[bool], b: &[bool]) -> f64 {
    count_true(a) as f64 / a.len() as f64 - count_true(b) as f64 / b.len() as f64
}

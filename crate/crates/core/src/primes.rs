//! Prime sieving and Chebyshev prefix sums.
//!
//! Every downstream computation — trace batches, Mestre–Nagao sums, the
//! density average `f(x)` — walks the primes below some limit, and the
//! main-term analysis needs the Chebyshev function
//! `theta(x) = sum of ln(p) over primes p <= x`. A [`PrimeTable`] bundles
//! the sieved primes with a compensated prefix-sum of their logarithms so
//! `theta` lookups are a binary search.
//!
//! The sieve is a bit-packed, segmented sieve of Eratosthenes over odd
//! numbers: segments are sized to stay in L1/L2 cache, so building a table
//! up to 10^8 is feasible, and a table up to 10^6 (the default for the
//! Euler-product constants) takes milliseconds. Natural logarithms are
//! used throughout.

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

/// Odd numbers per sieve segment (one bit each → 32 KiB of bitset, which
/// keeps the inner marking loop inside the fast cache levels).
const SEGMENT_ODDS: usize = 1 << 18;

/// Primes up to a limit together with prefix sums of `ln p`.
#[derive(Clone, Debug)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
    /// `theta_prefix[i]` = compensated sum of `ln(primes[j])` for `j <= i`.
    theta_prefix: Vec<f64>,
}

/// Sieve all primes `p <= limit` and precompute `theta` prefix sums.
///
/// `limit` must be at least 2.
pub fn sieve(limit: u64) -> Result<PrimeTable> {
    if limit < 2 {
        return Err(Error::InvalidArgument(format!(
            "sieve limit must be at least 2, got {limit}"
        )));
    }
    let mut primes: Vec<u64> = vec![2];

    // Base primes up to sqrt(limit), by a plain odd sieve.
    let root = crate::modular::isqrt(limit);
    let mut base_odd: Vec<u64> = Vec::new();
    if root >= 3 {
        let n_odd = ((root - 3) / 2 + 1) as usize;
        let mut composite = vec![false; n_odd];
        for i in 0..n_odd {
            if composite[i] {
                continue;
            }
            let q = 2 * i as u64 + 3;
            base_odd.push(q);
            let mut m = q * q; // odd, since q is odd
            while m <= root {
                composite[((m - 3) / 2) as usize] = true;
                m += 2 * q;
            }
        }
    }

    // Segmented sieve over odd numbers in [3, limit].
    let mut bits = vec![0u64; SEGMENT_ODDS / 64];
    let mut lo = 3u64; // first odd number of the current segment
    while lo <= limit {
        let span = 2 * SEGMENT_ODDS as u64; // numbers covered by the segment
        let hi = lo.saturating_add(span - 2).min(limit | 1); // last odd considered
        bits.iter_mut().for_each(|w| *w = 0);
        for &q in &base_odd {
            if q * q > hi {
                break;
            }
            // First odd multiple of q in [max(q^2, lo), hi].
            let mut m = q * q;
            if m < lo {
                m = lo.div_ceil(q) * q;
                if m % 2 == 0 {
                    m += q;
                }
            }
            while m <= hi {
                let idx = ((m - lo) / 2) as usize;
                bits[idx / 64] |= 1 << (idx % 64);
                m += 2 * q;
            }
        }
        let count = ((hi - lo) / 2 + 1) as usize;
        for idx in 0..count {
            if bits[idx / 64] & (1 << (idx % 64)) == 0 {
                let p = lo + 2 * idx as u64;
                if p <= limit {
                    primes.push(p);
                }
            }
        }
        lo += span;
    }

    let mut theta_prefix = Vec::with_capacity(primes.len());
    let mut acc = NeumaierSum::new();
    for &p in &primes {
        acc.add((p as f64).ln());
        theta_prefix.push(acc.value());
    }

    Ok(PrimeTable {
        limit,
        primes,
        theta_prefix,
    })
}

impl PrimeTable {
    /// Upper bound the table was sieved to.
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// All primes `<= limit`, ascending.
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Number of primes in the table.
    pub fn count(&self) -> usize {
        self.primes.len()
    }

    /// Number of primes `p` with `p < bound` (strict).
    pub fn count_below(&self, bound: f64) -> usize {
        self.primes.partition_point(|&p| (p as f64) < bound)
    }

    /// Chebyshev function `theta(x) = sum of ln p over primes p <= x`.
    ///
    /// Requires `2 <= x <= limit`; values above the sieved limit are
    /// rejected rather than silently truncated.
    pub fn theta(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 2.0 {
            return Err(Error::InvalidArgument(format!(
                "theta is defined for x >= 2, got {x}"
            )));
        }
        if x > self.limit as f64 {
            return Err(Error::OutOfRange(format!(
                "theta({x}) exceeds the sieved limit {}",
                self.limit
            )));
        }
        let k = self.primes.partition_point(|&p| (p as f64) <= x);
        // x >= 2 guarantees at least one prime at or below x.
        Ok(self.theta_prefix[k - 1])
    }
}

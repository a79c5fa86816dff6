//! Euler-product constants and the counting main term `M(y)`.
//!
//! The average of `a_p` over curves ordered by conductor is governed, in
//! the large-conductor limit, by a weighted count of curves with a fixed
//! trace: its smoothed main term is
//!
//! ```text
//! M(y) = C1*sqrt(y) + C2 * sum_{1 <= r <= 2*sqrt(y)} c(r)*sqrt(4y - r^2) - C3*y
//! ```
//!
//! where `C1 = D2*A`, `C2 = D2*B`, `C3 = D2*pi` and `A`, `B`, `D2` are
//! absolutely convergent Euler products. `A` and `B` run over odd primes;
//! the density normalization `D2` runs over all primes. The products are
//! evaluated by truncation at a configurable prime limit (the terms are
//! `1 + O(1/p^3)`, so a limit of `10^6` gives far more than the six
//! significant digits used downstream).
//!
//! The multiplicative weight `c(r)` accounts for the local densities of
//! curves whose trace is divisible by the primes dividing `r`.

use crate::dataset;
use crate::error::{Error, Result};
use crate::primes::PrimeTable;
use crate::sum::NeumaierSum;

/// Truncated Euler products and the derived main-term coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MurmurationConstants {
    /// `A = prod over odd p of (1 + p/((p+1)^2 (p-1)))`.
    pub a: f64,
    /// `B = prod over odd p of (p^4 - 2p^2 - p + 1)/(p^2 - 1)^2`.
    pub b: f64,
    /// `D2 = 12 / (pi * prod over all p of (1 - 1/(p^2 + p)))`.
    pub d2: f64,
    /// `C1 = D2 * A`, coefficient of `sqrt(y)`.
    pub c1: f64,
    /// `C2 = D2 * B`, coefficient of the `c(r)` sum.
    pub c2: f64,
    /// `C3 = D2 * pi`, coefficient of `y`.
    pub c3: f64,
    /// Prime limit the products were truncated at.
    pub truncation_limit: u64,
    /// Crude bound on the truncation error of `a`, `b`, and `d2`: the
    /// neglected factors are `1 + O(1/p^2)` per prime, which sums to
    /// less than `8/limit` past the limit.
    pub tail_bound: f64,
}

/// Evaluate the three Euler products by truncating at `table.limit()`.
///
/// The limit must be at least 100 so every constant is good to a few
/// digits even in throwaway configurations.
pub fn euler_constants(table: &PrimeTable) -> Result<MurmurationConstants> {
    let limit = table.limit();
    if limit < 100 {
        return Err(Error::InvalidArgument(format!(
            "Euler products need a prime limit of at least 100, got {limit}"
        )));
    }
    let mut a = 1.0_f64;
    let mut b = 1.0_f64;
    let mut d2_prod = 1.0_f64;
    for &p in table.primes() {
        let pf = p as f64;
        d2_prod *= 1.0 - 1.0 / (pf * pf + pf);
        if p == 2 {
            continue;
        }
        a *= 1.0 + pf / ((pf + 1.0) * (pf + 1.0) * (pf - 1.0));
        b *= (((pf * pf) - 2.0) * (pf * pf) - pf + 1.0) / ((pf * pf - 1.0) * (pf * pf - 1.0));
    }
    let d2 = 12.0 / (std::f64::consts::PI * d2_prod);
    Ok(MurmurationConstants {
        a,
        b,
        d2,
        c1: d2 * a,
        c2: d2 * b,
        c3: d2 * std::f64::consts::PI,
        truncation_limit: limit,
        tail_bound: 8.0 / limit as f64,
    })
}

/// The multiplicative weight `c(r) = prod over p | r of
/// `(1 + p^2/(p^4 - 2p^2 - p + 1))`, e.g. `c(1) = 1`, `c(2) = 11/7`,
/// `c(3) = 70/61`. Squarefull parts do not matter: only the prime
/// support of `r` enters.
pub fn c_factor(r: u64) -> Result<f64> {
    if r == 0 {
        return Err(Error::InvalidArgument(
            "trace weight c(r) is defined for r >= 1".into(),
        ));
    }
    let mut c = 1.0_f64;
    for (p, _) in dataset::factor(r) {
        let p2 = (p as u128 * p as u128) as f64;
        c *= 1.0 + p2 / (p2 * p2 - 2.0 * p2 - p as f64 + 1.0);
    }
    Ok(c)
}

/// The smoothed main term `M(y)` of the trace-weighted curve count.
///
/// The `r`-sum is empty for `y < 1/4` (no integer `r` satisfies
/// `r <= 2*sqrt(y)`), so on `[0, 1/4)` the function is simply
/// `C1*sqrt(y) - C3*y`, positive up to `y = (C1/C3)^2 = (A/pi)^2` and
/// negative beyond. Each threshold `y = r^2/4` switches on a new term
/// continuously (the new summand vanishes at its threshold).
pub fn density_m(y: f64, consts: &MurmurationConstants) -> Result<f64> {
    if !y.is_finite() || y < 0.0 {
        return Err(Error::OutOfRange(format!(
            "main term M(y) is defined for y >= 0, got {y}"
        )));
    }
    let four_y = 4.0 * y;
    // Largest integer r with r^2 <= 4y, robust against sqrt rounding.
    let mut r_max = (2.0 * y.sqrt()).floor() as u64;
    while r_max > 0 && (r_max * r_max) as f64 > four_y {
        r_max -= 1;
    }
    while ((r_max + 1) * (r_max + 1)) as f64 <= four_y {
        r_max += 1;
    }
    let mut sum = NeumaierSum::new();
    for r in 1..=r_max {
        let discriminant = four_y - (r * r) as f64;
        sum.add(c_factor(r)? * discriminant.sqrt());
    }
    Ok(consts.c1 * y.sqrt() + consts.c2 * sum.value() - consts.c3 * y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::sieve;

    /// Products truncated at 10^6, the default working precision.
    fn consts() -> MurmurationConstants {
        euler_constants(&sieve(1_000_000).unwrap()).unwrap()
    }

    #[test]
    fn euler_products_at_the_default_truncation() {
        let c = consts();
        assert!((c.a - 1.1863898567061073).abs() < 1e-12);
        assert!((c.b - 0.940257152296381).abs() < 1e-12);
        assert!((c.d2 - 5.4223304195913515).abs() < 1e-12);
        assert_eq!(c.truncation_limit, 1_000_000);
    }

    #[test]
    fn derived_coefficients_are_consistent() {
        let c = consts();
        assert_eq!(c.c1, c.d2 * c.a);
        assert_eq!(c.c2, c.d2 * c.b);
        assert_eq!(c.c3, c.d2 * std::f64::consts::PI);
    }

    #[test]
    fn products_converge_monotonically() {
        let lo = euler_constants(&sieve(100).unwrap()).unwrap();
        let mid = euler_constants(&sieve(10_000).unwrap()).unwrap();
        let hi = consts();
        // Factors of A and D2 exceed 1; factors of B are below 1.
        assert!(lo.a < mid.a && mid.a < hi.a);
        assert!(lo.b > mid.b && mid.b > hi.b);
        assert!(lo.d2 < mid.d2 && mid.d2 < hi.d2);
        // Even the crude truncation satisfies its own tail bound.
        assert!((hi.a - lo.a).abs() < lo.tail_bound);
        assert!((hi.b - lo.b).abs() < lo.tail_bound);
        assert!((hi.d2 - lo.d2).abs() < lo.tail_bound);
    }

    #[test]
    fn tail_beyond_1e5_is_below_1e_6() {
        let a_1e5 = euler_constants(&sieve(100_000).unwrap()).unwrap().a;
        let a_2e5 = euler_constants(&sieve(200_000).unwrap()).unwrap().a;
        assert!((a_1e5 - 1.1863889853396141).abs() < 1e-12);
        assert!((a_2e5 - a_1e5).abs() < 1e-6);
    }

    #[test]
    fn rejects_tiny_truncation() {
        assert!(matches!(
            euler_constants(&sieve(50).unwrap()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn trace_weights_match_their_closed_forms() {
        assert_eq!(c_factor(1).unwrap(), 1.0);
        assert_eq!(c_factor(2).unwrap(), 1.0 + 4.0 / 7.0);
        assert_eq!(c_factor(3).unwrap(), 1.0 + 9.0 / 61.0);
        // Only the prime support matters.
        assert_eq!(c_factor(4).unwrap(), c_factor(2).unwrap());
        assert_eq!(c_factor(8).unwrap(), c_factor(2).unwrap());
        assert_eq!(
            c_factor(6).unwrap(),
            (1.0 + 4.0 / 7.0) * (1.0 + 9.0 / 61.0)
        );
        assert_eq!(c_factor(12).unwrap(), c_factor(6).unwrap());
        assert!(c_factor(0).is_err());
    }

    #[test]
    fn main_term_is_zero_at_zero_and_rejects_negatives() {
        let c = consts();
        assert_eq!(density_m(0.0, &c).unwrap(), 0.0);
        assert!(density_m(-0.1, &c).is_err());
        assert!(density_m(f64::NAN, &c).is_err());
    }

    #[test]
    fn below_one_quarter_the_r_sum_is_empty() {
        let c = consts();
        for &y in &[1e-6_f64, 0.01, 0.2, 0.2499] {
            let expected = c.c1 * y.sqrt() - c.c3 * y;
            assert_eq!(density_m(y, &c).unwrap(), expected);
        }
    }

    #[test]
    fn sign_changes_at_the_square_of_a_over_pi() {
        let c = consts();
        let root = (c.a / std::f64::consts::PI).powi(2);
        assert!((root - 0.14261168278839856).abs() < 1e-12);
        assert!(density_m(root - 1e-4, &c).unwrap() > 0.0);
        assert!(density_m(root + 1e-4, &c).unwrap() < 0.0);
    }

    #[test]
    fn each_r_threshold_switches_on_continuously() {
        let c = consts();
        // At y = r^2/4 the new summand is exactly sqrt(0); just below, it
        // is absent. Both sides agree to the order of sqrt of the step.
        for r in 1..=4u64 {
            let y = (r * r) as f64 / 4.0;
            let at = density_m(y, &c).unwrap();
            let below = density_m(y - 1e-12, &c).unwrap();
            let above = density_m(y + 1e-12, &c).unwrap();
            assert!((at - below).abs() < 1e-4, "r = {r}");
            assert!((at - above).abs() < 1e-4, "r = {r}");
        }
    }

    #[test]
    fn first_threshold_value_has_no_sum_contribution() {
        let c = consts();
        let expected = c.c1 * 0.5 - c.c3 * 0.25;
        assert_eq!(density_m(0.25, &c).unwrap(), expected);
    }

    #[test]
    fn value_at_one_includes_exactly_two_terms() {
        let c = consts();
        // 2*sqrt(1) = 2: r = 1 contributes sqrt(3), r = 2 contributes 0.
        let expected = c.c1 + c.c2 * 3.0_f64.sqrt() - c.c3;
        assert!((density_m(1.0, &c).unwrap() - expected).abs() < 1e-15);
    }
}

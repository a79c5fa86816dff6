//! Property tests for the structural invariants of the pipeline: trace
//! bounds, algorithm agreement, twist antisymmetry, multiplicativity of
//! the trace weight, branch continuity, classifier optimality, and
//! serialization round trips.

use std::sync::OnceLock;

use murmur_core::ap;
use murmur_core::classifier;
use murmur_core::dataset::{parse_curves, serialize_curves, CurveRecord};
use murmur_core::density::{c_factor, euler_constants, MurmurationConstants};
use murmur_core::nagao::{sb_trace, BGrid};
use murmur_core::primes::{sieve, PrimeTable};
use murmur_core::profile::MainTermModel;
use proptest::prelude::*;

fn table_10k() -> &'static PrimeTable {
    static TABLE: OnceLock<PrimeTable> = OnceLock::new();
    TABLE.get_or_init(|| sieve(10_000).unwrap())
}

fn shared_consts() -> &'static MurmurationConstants {
    static CONSTS: OnceLock<MurmurationConstants> = OnceLock::new();
    CONSTS.get_or_init(|| euler_constants(&sieve(10_000).unwrap()).unwrap())
}

/// Primes of the shared table restricted to `[lo, hi]`.
fn primes_between(lo: u64, hi: u64) -> Vec<u64> {
    table_10k()
        .primes()
        .iter()
        .copied()
        .filter(|&p| (lo..=hi).contains(&p))
        .collect()
}

/// A random nonsingular short Weierstrass curve. Conductor 1 is a
/// neutral stand-in: these tests pick good primes explicitly through
/// the discriminant.
fn short_curve() -> impl Strategy<Value = CurveRecord> {
    (-30i64..=30, -30i64..=30)
        .prop_filter("nonsingular", |&(a, b)| 4 * a * a * a + 27 * b * b != 0)
        .prop_map(|(a, b)| CurveRecord::new(None, [0, 0, 0, a, b], 1, 0).unwrap())
}

/// A random valid record in general form, with the conductor set to the
/// small-prime radical of the discriminant so every validation holds.
fn general_record() -> impl Strategy<Value = CurveRecord> {
    (
        proptest::option::of("[a-z][a-z0-9]{0,7}"),
        [-8i64..=8, -8i64..=8, -8i64..=8, -8i64..=8, -8i64..=8],
        0u8..2,
    )
        .prop_filter_map("nonsingular", |(label, coeffs, rank)| {
            let probe = CurveRecord::new(None, coeffs, 1, 0).ok()?;
            let radical: u64 = primes_between(2, 50)
                .iter()
                .filter(|&&p| probe.discriminant % p as i128 == 0)
                .product();
            CurveRecord::new(label, coeffs, radical.max(1), rank).ok()
        })
}

fn powmod(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let mut acc = 1u128;
    let mut b = base as u128 % modulus as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % modulus as u128;
        }
        b = b * b % modulus as u128;
        exp >>= 1;
    }
    acc as u64
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

proptest! {
    /// Every good-reduction trace respects the Weil bound.
    #[test]
    fn traces_respect_the_weil_bound(
        rec in short_curve(),
        idx in any::<prop::sample::Index>(),
    ) {
        let table = table_10k();
        let p = table.primes()[idx.index(table.count())];
        prop_assume!(rec.discriminant % p as i128 != 0);
        let t = ap::ap_value(&ap::reduce_curve(&rec, p)).unwrap();
        prop_assert!((t * t) as f64 <= 4.0 * p as f64, "a_{p} = {t}");
    }

    /// The baby-step giant-step count agrees with exhaustive counting
    /// wherever both apply.
    #[test]
    fn group_order_count_matches_exhaustive_count(
        rec in short_curve(),
        idx in any::<prop::sample::Index>(),
    ) {
        let eligible = primes_between(ap::P_SMALL + 1, 3000);
        let p = eligible[idx.index(eligible.len())];
        prop_assume!(rec.discriminant % p as i128 != 0);
        let red = ap::reduce_curve(&rec, p);
        prop_assert_eq!(ap::ap_bsgs(&red).unwrap(), ap::ap_naive(&red).unwrap());
    }

    /// Twisting by d multiplies the trace by the quadratic character
    /// of d: quadratic twists have opposite trace, square twists the
    /// same one.
    #[test]
    fn quadratic_twists_flip_the_trace(
        (a, b) in (-20i64..=20, -20i64..=20),
        d in 1i64..=12,
        idx in any::<prop::sample::Index>(),
    ) {
        prop_assume!(4 * a * a * a + 27 * b * b != 0);
        let eligible = primes_between(3, ap::P_SMALL);
        let p = eligible[idx.index(eligible.len())];
        let base = CurveRecord::new(None, [0, 0, 0, a, b], 1, 0).unwrap();
        prop_assume!(base.discriminant % p as i128 != 0 && !(d as u64).is_multiple_of(p));
        let twisted =
            CurveRecord::new(None, [0, 0, 0, a * d * d, b * d * d * d], 1, 0).unwrap();
        let t_base = ap::ap_naive(&ap::reduce_curve(&base, p)).unwrap();
        let t_twist = ap::ap_naive(&ap::reduce_curve(&twisted, p)).unwrap();
        let chi = powmod(d.unsigned_abs() % p, (p - 1) / 2, p);
        if chi == 1 {
            prop_assert_eq!(t_twist, t_base);
        } else {
            prop_assert_eq!(t_twist, -t_base);
        }
    }

    /// The trace weight is multiplicative on coprime arguments.
    #[test]
    fn trace_weight_is_multiplicative(r in 1u64..3000, s in 1u64..3000) {
        prop_assume!(gcd(r, s) == 1);
        let joint = c_factor(r * s).unwrap();
        let split = c_factor(r).unwrap() * c_factor(s).unwrap();
        prop_assert!((joint - split).abs() <= 1e-12 * split.abs());
    }

    /// The two main-term branches agree exactly at the branch point and
    /// join smoothly around it, at every scale.
    #[test]
    fn main_term_branches_join_at_one_quarter(
        mantissa in 1.0f64..10.0,
        exponent in 3i32..=7,
    ) {
        let n = mantissa * 10f64.powi(exponent);
        let model = MainTermModel::new(n, shared_consts().clone()).unwrap();
        let below = model.main_term_below(0.25).unwrap();
        let above = model.main_term_above(0.25).unwrap();
        prop_assert_eq!(below.to_bits(), above.to_bits());
        let left = model.main_term(0.25 - 1e-9).unwrap();
        let right = model.main_term(0.25 + 1e-9).unwrap();
        prop_assert!((left - below).abs() < 1e-7);
        prop_assert!((right - below).abs() < 1e-7);
    }

    /// The selected cutoff is exactly as accurate as the best of every
    /// achievable threshold partition, and never below the
    /// majority-class baseline.
    #[test]
    fn cutoff_search_is_exhaustively_optimal(
        raw in prop::collection::vec((-1000i32..1000, 0u8..2), 2..20),
    ) {
        let scores: Vec<(f64, u8)> =
            raw.iter().map(|&(s, r)| (s as f64 / 250.0, r)).collect();
        prop_assume!(scores.iter().any(|&(_, r)| r == 0));
        prop_assume!(scores.iter().any(|&(_, r)| r == 1));
        let opt = classifier::optimal_cutoff(&scores, 100.0).unwrap();

        // Thresholds just below, at, and beyond every score realize
        // every partition a threshold can produce.
        let mut best = 0.0f64;
        let mut candidates: Vec<f64> = scores
            .iter()
            .flat_map(|&(s, _)| [s - 1e-6, s])
            .collect();
        candidates.push(scores.iter().map(|&(s, _)| s).fold(f64::MIN, f64::max) + 1.0);
        for c in candidates {
            let rep = classifier::evaluate_cutoff(&scores, 100.0, c).unwrap();
            best = best.max(rep.accuracy);
        }
        prop_assert_eq!(opt.accuracy, best);

        let n0 = scores.iter().filter(|&&(_, r)| r == 0).count();
        let baseline = n0.max(scores.len() - n0) as f64 / scores.len() as f64;
        prop_assert!(opt.accuracy >= baseline);
    }

    /// Increasing affine maps of the scores change nothing about how
    /// well a threshold can separate them.
    #[test]
    fn cutoff_accuracy_is_invariant_under_increasing_maps(
        raw in prop::collection::vec((-1000i32..1000, 0u8..2), 2..20),
        alpha in 0.1f64..10.0,
        beta in -5.0f64..5.0,
    ) {
        let scores: Vec<(f64, u8)> =
            raw.iter().map(|&(s, r)| (s as f64 / 250.0, r)).collect();
        prop_assume!(scores.iter().any(|&(_, r)| r == 0));
        prop_assume!(scores.iter().any(|&(_, r)| r == 1));
        let mapped: Vec<(f64, u8)> =
            scores.iter().map(|&(s, r)| (alpha * s + beta, r)).collect();
        let original = classifier::optimal_cutoff(&scores, 100.0).unwrap();
        let transformed = classifier::optimal_cutoff(&mapped, 100.0).unwrap();
        prop_assert_eq!(original.accuracy, transformed.accuracy);
        prop_assert_eq!(original.n_rank0, transformed.n_rank0);
        prop_assert_eq!(original.n_rank1, transformed.n_rank1);
    }

    /// Writing records out and reading them back is the identity.
    #[test]
    fn serialization_round_trips(
        records in prop::collection::vec(general_record(), 1..8),
    ) {
        let mut buf = Vec::new();
        serialize_curves(&records, &mut buf).unwrap();
        let parsed = parse_curves(buf.as_slice()).unwrap();
        prop_assert_eq!(parsed, records);
    }

    /// A trace evaluated on a coarse grid is the exact prefix of the
    /// same trace on any refinement: accumulation is order-stable.
    #[test]
    fn trace_grids_are_prefix_stable(
        bounds in prop::collection::btree_set(3u32..1000, 3..10),
    ) {
        let table = table_10k();
        let rec =
            CurveRecord::new(Some("11a1".into()), [0, -1, 1, -10, -20], 11, 0).unwrap();
        let values: Vec<f64> = bounds.iter().map(|&b| b as f64).collect();
        let grid = BGrid::from_values(values.clone()).unwrap();
        let full = sb_trace(&rec, &grid, table).unwrap();
        for (k, &b) in values.iter().enumerate() {
            let single = BGrid::from_values(vec![b]).unwrap();
            let alone = sb_trace(&rec, &single, table).unwrap();
            prop_assert_eq!(alone.raw[0].to_bits(), full.raw[k].to_bits());
            prop_assert_eq!(alone.values[0].to_bits(), full.values[k].to_bits());
        }
    }
}

//! Frobenius traces `a_p = p + 1 - #E(F_p)`.
//!
//! Two independent point-counting strategies are provided:
//!
//! * [`ap_naive`] — exhaustive: a character sum over the short form for
//!   `p > 3` (using a table of squares mod `p`), or a direct affine count
//!   of the long Weierstrass equation for `p` in `{2, 3}`. `O(p)` time,
//!   always correct, used below [`P_SMALL`] and as the ground truth in
//!   equivalence tests.
//! * [`ap_bsgs`] — Shanks–Mestre: pick random points on the curve or its
//!   quadratic twist, find all multiples of the group order inside the
//!   Hasse interval with a baby-step/giant-step search, and intersect the
//!   candidate traces until a single value survives. `O(p^(1/4))`-ish per
//!   prime, which is what makes trace sweeps to `B ~ 10^5` feasible.
//!
//! Point sampling is deterministic: the RNG is seeded from the reduced
//! coefficients and `p`, so a trace computation is a pure function of the
//! curve and the prime, independent of threading or call order. In the
//! (rare, small-`p`) event that candidate intersection fails to reach a
//! unique trace, the implementation falls back to the exhaustive count,
//! so [`ap_bsgs`] never returns an unverified value.
//!
//! Reduction mod `p` assumes the input model is globally minimal: a prime
//! is bad exactly when it divides the conductor, and for good `p > 3` the
//! long model is converted to `y^2 = x^3 + Ax + B` with
//! `A = -27 c4`, `B = -54 c6` (a unimodular change of variables when
//! `gcd(p, 6) = 1`, so point counts are preserved).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::CurveRecord;
use crate::error::{Error, Result};
use crate::modular::{addmod, invmod, isqrt, legendre, modp_i64, mulmod, sqrtmod, submod};
use crate::primes::PrimeTable;

/// Largest prime handled by the exhaustive counter in [`ap_batch`];
/// beyond it the baby-step/giant-step path takes over.
pub const P_SMALL: u64 = 229;

/// Cap on point-sampling rounds before [`ap_bsgs`] falls back to the
/// exhaustive count. Reached only for small primes with very smooth
/// group orders.
const MAX_SAMPLING_ROUNDS: u32 = 48;

/// A curve reduced modulo a prime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReducedForm {
    /// `p` divides the conductor; the trace is not defined by counting.
    Bad,
    /// Short form `y^2 = x^3 + a x + b` over `F_p`, for good `p > 3`.
    Short { a: u64, b: u64 },
    /// Long form coefficients mod `p`, for good `p` in `{2, 3}` where the
    /// short-form substitution is not available.
    Long {
        a1: u64,
        a2: u64,
        a3: u64,
        a4: u64,
        a6: u64,
    },
}

/// A record reduced at one prime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedCurve {
    pub p: u64,
    pub form: ReducedForm,
}

impl ReducedCurve {
    /// True when `p` does not divide the conductor.
    pub fn is_good(&self) -> bool {
        !matches!(self.form, ReducedForm::Bad)
    }
}

/// Reduce a record at a prime. `p` must be prime; reduction type is read
/// off the conductor (the model is assumed globally minimal).
pub fn reduce_curve(rec: &CurveRecord, p: u64) -> ReducedCurve {
    debug_assert!(p >= 2);
    if rec.conductor.is_multiple_of(p) {
        return ReducedCurve {
            p,
            form: ReducedForm::Bad,
        };
    }
    let [a1, a2, a3, a4, a6] = rec.coeffs().map(|c| modp_i64(c, p));
    if p <= 3 {
        return ReducedCurve {
            p,
            form: ReducedForm::Long { a1, a2, a3, a4, a6 },
        };
    }
    // b-invariants mod p, then c4, c6, then the short model
    // y^2 = x^3 - 27 c4 x - 54 c6.
    let b2 = addmod(mulmod(a1, a1, p), mulmod(4, a2, p), p);
    let b4 = addmod(mulmod(2, a4, p), mulmod(a1, a3, p), p);
    let b6 = addmod(mulmod(a3, a3, p), mulmod(4, a6, p), p);
    let c4 = submod(mulmod(b2, b2, p), mulmod(24, b4, p), p);
    let c6 = submod(
        mulmod(36, mulmod(b2, b4, p), p),
        addmod(mulmod(mulmod(b2, b2, p), b2, p), mulmod(216, b6, p), p),
        p,
    );
    let a = submod(0, mulmod(27, c4, p), p);
    let b = submod(0, mulmod(54, c6, p), p);
    // Good reduction at a minimal model means p does not divide the
    // discriminant, so the short form must be non-singular.
    debug_assert_ne!(
        addmod(
            mulmod(4, mulmod(a, mulmod(a, a, p), p), p),
            mulmod(27, mulmod(b, b, p), p),
            p
        ),
        0,
        "good reduction produced a singular short form at p = {p}"
    );
    ReducedCurve {
        p,
        form: ReducedForm::Short { a, b },
    }
}

/// Table of quadratic characters mod `p`: `tab[v] = chi(v)` with
/// `chi(0) = 0`. Shared across curves when sweeping prime-major.
fn squares_table(p: u64) -> Vec<i8> {
    let mut tab = vec![-1i8; p as usize];
    tab[0] = 0;
    for y in 1..=(p - 1) / 2 {
        tab[mulmod(y, y, p) as usize] = 1;
    }
    tab
}

/// Character-sum trace for a short form, given a precomputed squares
/// table for the same `p`.
fn ap_charsum(a: u64, b: u64, p: u64, tab: &[i8]) -> i64 {
    debug_assert_eq!(tab.len(), p as usize);
    let mut sum: i64 = 0;
    for x in 0..p {
        let fx = addmod(mulmod(x, mulmod(x, x, p), p), addmod(mulmod(a, x, p), b, p), p);
        sum += i64::from(tab[fx as usize]);
    }
    -sum
}

/// Affine point count of the long form over `F_p` for `p` in `{2, 3}`.
fn ap_enumerate_long(red: &ReducedCurve) -> i64 {
    let p = red.p;
    let ReducedForm::Long { a1, a2, a3, a4, a6 } = red.form else {
        unreachable!("long-form enumeration called on a short form");
    };
    let mut affine = 0i64;
    for x in 0..p {
        let rhs = addmod(
            mulmod(x, mulmod(x, x, p), p),
            addmod(mulmod(a2, mulmod(x, x, p), p), addmod(mulmod(a4, x, p), a6, p), p),
            p,
        );
        for y in 0..p {
            let lhs = addmod(mulmod(y, y, p), addmod(mulmod(a1, mulmod(x, y, p), p), mulmod(a3, y, p), p), p);
            if lhs == rhs {
                affine += 1;
            }
        }
    }
    p as i64 - affine
}

/// Exhaustive trace computation. Errors on bad reduction.
pub fn ap_naive(red: &ReducedCurve) -> Result<i64> {
    match red.form {
        ReducedForm::Bad => Err(Error::BadReduction { p: red.p }),
        ReducedForm::Long { .. } => Ok(ap_enumerate_long(red)),
        ReducedForm::Short { a, b } => {
            let tab = squares_table(red.p);
            Ok(ap_charsum(a, b, red.p, &tab))
        }
    }
}

// ---------------------------------------------------------------------------
// Elliptic-curve group arithmetic in affine coordinates.

/// Affine point; `None` is the point at infinity.
type Point = Option<(u64, u64)>;

/// Group law on `y^2 = x^3 + ax + b` over `F_p`.
fn ec_add(lhs: Point, rhs: Point, a: u64, p: u64) -> Point {
    let (x1, y1) = match lhs {
        None => return rhs,
        Some(q) => q,
    };
    let (x2, y2) = match rhs {
        None => return lhs,
        Some(q) => q,
    };
    let lambda = if x1 == x2 {
        if addmod(y1, y2, p) == 0 {
            return None; // vertical: P + (-P) = O, covers 2-torsion
        }
        // Doubling: lambda = (3 x1^2 + a) / (2 y1).
        mulmod(
            addmod(mulmod(3, mulmod(x1, x1, p), p), a, p),
            invmod(mulmod(2, y1, p), p),
            p,
        )
    } else {
        mulmod(submod(y2, y1, p), invmod(submod(x2, x1, p), p), p)
    };
    let x3 = submod(mulmod(lambda, lambda, p), addmod(x1, x2, p), p);
    let y3 = submod(mulmod(lambda, submod(x1, x3, p), p), y1, p);
    Some((x3, y3))
}

/// `n * P` by double-and-add.
fn ec_mul(mut n: u64, base: Point, a: u64, p: u64) -> Point {
    let mut acc: Point = None;
    let mut granule = base;
    while n > 0 {
        if n & 1 == 1 {
            acc = ec_add(acc, granule, a, p);
        }
        granule = ec_add(granule, granule, a, p);
        n >>= 1;
    }
    acc
}

/// All `n` in `[lo, hi]` with `n * point = O`, ascending.
///
/// Baby-step/giant-step over the interval: with `m ~ sqrt(hi - lo)`,
/// write `n = lo + i*m + j` and match `(lo + i*m) * P` against `-(j * P)`
/// by x-coordinate. The result always contains the group order restricted
/// to the interval, and may contain several candidates when the order of
/// `point` is small; callers intersect across sample points.
fn order_candidates(point: (u64, u64), lo: u64, hi: u64, a: u64, p: u64) -> Vec<u64> {
    debug_assert!(lo <= hi);
    let width = hi - lo;
    let m = isqrt(width).max(1) + 1;

    // Baby table: j * P for j in 1..m, sorted by x-coordinate.
    // If a small multiple already hits O we know ord(point) exactly and
    // can enumerate the interval directly.
    let mut babies: Vec<(u64, u64, u64)> = Vec::with_capacity(m as usize);
    let mut cur: Point = Some(point);
    for j in 1..m {
        match cur {
            None => {
                let ord = j; // first return to O
                let mut n = lo.div_ceil(ord) * ord;
                let mut out = Vec::new();
                while n <= hi {
                    out.push(n);
                    n += ord;
                }
                return out;
            }
            Some((x, y)) => babies.push((x, y, j)),
        }
        cur = ec_add(cur, Some(point), a, p);
    }
    babies.sort_unstable();

    let giant = ec_mul(m, Some(point), a, p);
    let mut q = ec_mul(lo, Some(point), a, p);
    let mut out = Vec::new();
    let mut i = 0u64;
    loop {
        let n0 = lo + i * m;
        if n0 > hi {
            break;
        }
        match q {
            None => out.push(n0), // j = 0
            Some((xq, yq)) => {
                // Find babies with matching x; Q = -(jP) iff y_Q = -y_j.
                let start = babies.partition_point(|&(x, _, _)| x < xq);
                for &(x, y, j) in &babies[start..] {
                    if x != xq {
                        break;
                    }
                    if yq == submod(0, y, p) {
                        let n = n0 + j;
                        if n <= hi {
                            out.push(n);
                        }
                    }
                }
            }
        }
        q = ec_add(q, giant, a, p);
        i += 1;
    }
    out.sort_unstable();
    out
}

/// Deterministic 32-byte RNG seed derived from the reduced coefficients
/// and the prime, via a splitmix64 expansion.
fn trace_seed(a: u64, b: u64, p: u64) -> [u8; 32] {
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    let mut state = mix(p ^ 0x9E37_79B9_7F4A_7C15);
    state = mix(state.wrapping_add(a).rotate_left(17));
    state = mix(state.wrapping_add(b).rotate_left(31));
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        state = mix(state.wrapping_add(0x9E37_79B9_7F4A_7C15));
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    seed
}

/// Intersection of two ascending candidate lists.
fn intersect_sorted(a: &[i64], b: &[i64]) -> Vec<i64> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Baby-step/giant-step trace computation for a good short form (`p > 3`).
///
/// Samples points on the curve and on its quadratic twist with a
/// deterministic, `(curve, p)`-seeded RNG; each point restricts the trace
/// to the divisors pattern of its order inside the Hasse interval, and
/// the intersection of those restrictions almost always collapses to a
/// single value within a few rounds. Falls back to the exhaustive count
/// if the ambiguity survives (possible only for small `p`).
pub fn ap_bsgs(red: &ReducedCurve) -> Result<i64> {
    let p = red.p;
    let (a, b) = match red.form {
        ReducedForm::Bad => return Err(Error::BadReduction { p }),
        ReducedForm::Long { .. } => {
            return Err(Error::InvalidArgument(format!(
                "baby-step/giant-step needs a short form, hence p > 3; got p = {p}"
            )))
        }
        ReducedForm::Short { a, b } => (a, b),
    };
    let w = isqrt(4 * p); // floor(2 sqrt p): Hasse bound on |trace|
    let lo = p + 1 - w;
    let hi = p + 1 + w;

    // Smallest quadratic non-residue, for the twist.
    let d = (2..p).find(|&z| legendre(z, p) == -1).expect("p > 3 has a non-residue");
    let d2 = mulmod(d, d, p);
    let d3 = mulmod(d2, d, p);

    let mut rng = ChaCha8Rng::from_seed(trace_seed(a, b, p));
    let mut candidates: Option<Vec<i64>> = None;
    for _ in 0..MAX_SAMPLING_ROUNDS {
        let x = rng.gen_range(0..p);
        let fx = addmod(mulmod(x, mulmod(x, x, p), p), addmod(mulmod(a, x, p), b, p), p);
        if fx == 0 {
            continue; // x is a 2-torsion abscissa; sample again
        }
        let fresh: Vec<i64> = if legendre(fx, p) == 1 {
            // (x, sqrt(fx)) lies on E: group order n gives trace p + 1 - n.
            let y = sqrtmod(fx, p).expect("residue must have a root");
            order_candidates((x, y), lo, hi, a, p)
                .into_iter()
                .rev()
                .map(|n| (p + 1) as i64 - n as i64)
                .collect()
        } else {
            // (d x, sqrt(d^3 fx)) lies on the twist y^2 = x^3 + a d^2 x + b d^3,
            // whose order n' = p + 1 + trace.
            let y = sqrtmod(mulmod(d3, fx, p), p).expect("twisted value must be a residue");
            order_candidates((mulmod(d, x, p), y), lo, hi, mulmod(a, d2, p), p)
                .into_iter()
                .map(|n| n as i64 - (p + 1) as i64)
                .collect()
        };
        let merged = match &candidates {
            None => fresh,
            Some(old) => intersect_sorted(old, &fresh),
        };
        debug_assert!(
            !merged.is_empty(),
            "true trace eliminated during intersection at p = {p}"
        );
        if merged.len() == 1 {
            return Ok(merged[0]);
        }
        if merged.is_empty() {
            break; // release-mode safety net: recompute exhaustively
        }
        candidates = Some(merged);
    }
    ap_naive(red)
}

/// Trace at a single good prime, dispatching between the exhaustive and
/// baby-step/giant-step paths at [`P_SMALL`].
pub fn ap_value(red: &ReducedCurve) -> Result<i64> {
    if red.p <= P_SMALL || matches!(red.form, ReducedForm::Long { .. }) {
        ap_naive(red)
    } else {
        ap_bsgs(red)
    }
}

/// Traces for a family of curves at every good prime `<= table.limit()`.
///
/// Returns one ascending `(p, a_p)` list per input record, in input
/// order; primes dividing a record's conductor are omitted from its list.
/// Small primes are swept prime-major so the per-prime squares table is
/// built once and shared across all curves; larger primes use the
/// baby-step/giant-step path, parallelized over curves. Results are
/// deterministic and independent of the worker count.
pub fn ap_batch(records: &[CurveRecord], table: &PrimeTable) -> Vec<Vec<(u64, i64)>> {
    let primes = table.primes();
    let split = primes.partition_point(|&p| p <= P_SMALL);
    let mut out: Vec<Vec<(u64, i64)>> = records
        .iter()
        .map(|_| Vec::with_capacity(primes.len()))
        .collect();

    // Prime-major sweep of the small primes: one squares table per prime.
    for &p in &primes[..split] {
        let tab = if p > 3 { squares_table(p) } else { Vec::new() };
        for (rec, list) in records.iter().zip(out.iter_mut()) {
            let red = reduce_curve(rec, p);
            match red.form {
                ReducedForm::Bad => {}
                ReducedForm::Long { .. } => list.push((p, ap_enumerate_long(&red))),
                ReducedForm::Short { a, b } => list.push((p, ap_charsum(a, b, p, &tab))),
            }
        }
    }

    // Curve-major sweep of the large primes.
    let tails: Vec<Vec<(u64, i64)>> = records
        .par_iter()
        .map(|rec| {
            let mut list = Vec::with_capacity(primes.len() - split);
            for &p in &primes[split..] {
                let red = reduce_curve(rec, p);
                if red.is_good() {
                    let ap = ap_bsgs(&red).expect("good reduction cannot fail");
                    list.push((p, ap));
                }
            }
            list
        })
        .collect();
    for (list, tail) in out.iter_mut().zip(tails) {
        list.extend(tail);
    }
    out
}

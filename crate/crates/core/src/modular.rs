//! Modular arithmetic primitives used by the point-counting code.
//!
//! Everything here works on `u64` residues with `u128` intermediates, so
//! it is exact for any prime modulus below 2^63. All routines are
//! deterministic; the quadratic non-residue needed by Tonelli–Shanks is
//! found by scanning small candidates rather than sampling.

/// `(a * b) mod m` without overflow.
#[inline]
pub(crate) fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// `(a + b) mod m`; operands must already be reduced.
#[inline]
pub(crate) fn addmod(a: u64, b: u64, m: u64) -> u64 {
    let s = a + b; // both < m <= 2^63, no overflow
    if s >= m {
        s - m
    } else {
        s
    }
}

/// `(a - b) mod m`; operands must already be reduced.
#[inline]
pub(crate) fn submod(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + m - b
    }
}

/// `base^exp mod m` by square-and-multiply.
pub(crate) fn powmod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    debug_assert!(m > 0);
    base %= m;
    let mut acc = 1 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo a prime `p` (Fermat). `a` must not be divisible
/// by `p`.
#[inline]
pub(crate) fn invmod(a: u64, p: u64) -> u64 {
    debug_assert!(!a.is_multiple_of(p));
    powmod(a, p - 2, p)
}

/// Legendre symbol `(a/p)` for an odd prime `p`: `1` for a non-zero
/// square, `-1` for a non-square, `0` when `p | a`.
pub(crate) fn legendre(a: u64, p: u64) -> i32 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    let e = powmod(a, (p - 1) / 2, p);
    if e == 1 {
        1
    } else {
        -1
    }
}

/// Square root of `a` modulo an odd prime `p` (Tonelli–Shanks), or `None`
/// when `a` is a non-residue. Returns the root in `[0, p)`; the other root
/// is its negation.
pub(crate) fn sqrtmod(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if legendre(a, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(powmod(a, (p + 1) / 4, p));
    }
    // Tonelli–Shanks: write p - 1 = q * 2^s with q odd.
    let mut q = p - 1;
    let mut s = 0u32;
    while q.is_multiple_of(2) {
        q /= 2;
        s += 1;
    }
    // Deterministic non-residue scan.
    let mut z = 2;
    while legendre(z, p) != -1 {
        z += 1;
    }
    let mut m = s;
    let mut c = powmod(z, q, p);
    let mut t = powmod(a, q, p);
    let mut r = powmod(a, q.div_ceil(2), p);
    while t != 1 {
        // Find least i with t^(2^i) = 1.
        let mut i = 0u32;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mulmod(t2, t2, p);
            i += 1;
        }
        let b = powmod(c, 1 << (m - i - 1), p);
        m = i;
        c = mulmod(b, b, p);
        t = mulmod(t, c, p);
        r = mulmod(r, b, p);
    }
    Some(r)
}

/// Floor of the integer square root.
pub(crate) fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as u64;
    // Fix up the float estimate exactly.
    while x.checked_mul(x).is_none_or(|xx| xx > n) {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).is_some_and(|xx| xx <= n) {
        x += 1;
    }
    x
}

/// Canonical residue of a signed integer.
#[inline]
pub(crate) fn modp_i64(a: i64, p: u64) -> u64 {
    let r = a.rem_euclid(p as i64);
    r as u64
}

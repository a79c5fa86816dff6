//! Numerical core for studying murmurations of elliptic curves through
//! Mestre–Nagao sums.
//!
//! The pipeline implemented here starts from integral Weierstrass models
//! with known conductor and analytic rank, computes Frobenius traces
//! `a_p = p + 1 - #E(F_p)`, aggregates them into the partial sums
//!
//! ```text
//! S(B) = (1 / log B) * sum over good primes p < B of a_p * log(p) / p,
//! ```
//!
//! and studies two things built on top of those sums:
//!
//! * **Rank classification** — for a family of curves in a conductor window,
//!   a single cutoff `C` on `S(B)` separates rank 0 from rank 1 curves
//!   remarkably well, and the quality of the separation oscillates with `B`
//!   ([`classifier`], [`nagao`]).
//! * **The murmuration density** — the oscillation is explained by an
//!   explicit density `M(y)` whose weighted average
//!   `f(x) = (1/log(xN)) * sum over p < xN of M(p/N) log(p)/p` has local
//!   maxima at predictable values of `x = B/N` ([`density`], [`profile`]).
//!
//! Modules are arranged bottom-up: [`primes`] (sieving and Chebyshev
//! prefix sums), [`ap`] (trace computation, naive and baby-step/giant-step),
//! [`dataset`] (curve records), [`nagao`] (trace sums and family averages),
//! [`classifier`] (cutoff optimization), [`density`] (Euler-product
//! constants and `M(y)`), and [`profile`] (the average `f(x)`, its main
//! terms, and their local maxima).

pub mod ap;
pub mod classifier;
pub mod dataset;
pub mod density;
pub mod error;
pub mod nagao;
pub mod primes;
pub mod profile;

mod modular;
mod sum;

pub use error::{Error, Result};

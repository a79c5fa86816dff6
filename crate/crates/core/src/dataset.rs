//! Curve records: parsing, validation, serialization, and windowing.
//!
//! A record is an integral Weierstrass model `[a1, a2, a3, a4, a6]`
//! together with its conductor and analytic rank (restricted to 0 or 1,
//! the two classes the rank classifier separates). Models are assumed to
//! be globally minimal; the conductor is trusted as given and never
//! recomputed here, but every record is cross-checked at load time:
//!
//! * the discriminant (derived from the coefficients) must be non-zero,
//! * every prime dividing the conductor must divide the discriminant,
//! * the rank must be 0 or 1.
//!
//! The on-disk format is a plain CSV stream with the exact header
//! `label,a1,a2,a3,a4,a6,conductor,rank`, optional `#` comment lines, and
//! an optional per-row label (empty field = unlabeled). Parsing and
//! serialization round-trip exactly; duplicate rows are preserved.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};

/// Expected CSV header fields, in order.
const HEADER: [&str; 8] = ["label", "a1", "a2", "a3", "a4", "a6", "conductor", "rank"];

/// One elliptic curve with known conductor and rank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveRecord {
    /// Optional human-readable label (e.g. `"40005.1"`).
    pub label: Option<String>,
    pub a1: i64,
    pub a2: i64,
    pub a3: i64,
    pub a4: i64,
    pub a6: i64,
    /// Conductor, trusted as given.
    pub conductor: u64,
    /// Analytic rank, 0 or 1.
    pub rank: u8,
    /// Discriminant of the model, derived from the coefficients.
    pub discriminant: i128,
}

impl CurveRecord {
    /// Build and validate a record.
    ///
    /// `coeffs` is `[a1, a2, a3, a4, a6]`. Fails if the model is singular,
    /// the rank is not 0 or 1, the conductor is zero, a prime divides the
    /// conductor but not the discriminant, or the discriminant overflows
    /// 128-bit arithmetic.
    pub fn new(
        label: Option<String>,
        coeffs: [i64; 5],
        conductor: u64,
        rank: u8,
    ) -> Result<CurveRecord> {
        let discriminant = discriminant(coeffs).ok_or_else(|| {
            Error::InvalidArgument(
                "coefficients too large: discriminant overflows 128-bit arithmetic".into(),
            )
        })?;
        let rec = CurveRecord {
            label,
            a1: coeffs[0],
            a2: coeffs[1],
            a3: coeffs[2],
            a4: coeffs[3],
            a6: coeffs[4],
            conductor,
            rank,
            discriminant,
        };
        rec.validate()?;
        Ok(rec)
    }

    /// Coefficients as an array, in `[a1, a2, a3, a4, a6]` order.
    pub fn coeffs(&self) -> [i64; 5] {
        [self.a1, self.a2, self.a3, self.a4, self.a6]
    }

    /// Identifier used in error messages: the label when present,
    /// otherwise the coefficient tuple.
    pub fn ident(&self) -> String {
        match &self.label {
            Some(l) => l.clone(),
            None => format!(
                "[{},{},{},{},{}]",
                self.a1, self.a2, self.a3, self.a4, self.a6
            ),
        }
    }

    fn validate(&self) -> Result<()> {
        let fail = |message: String| Error::InvalidRecord {
            which: self.ident(),
            line: 0,
            message,
        };
        if self.discriminant == 0 {
            return Err(fail("singular model: discriminant is zero".into()));
        }
        if self.rank > 1 {
            return Err(fail(format!("rank must be 0 or 1, got {}", self.rank)));
        }
        if self.conductor == 0 {
            return Err(fail("conductor must be positive".into()));
        }
        for (p, _) in factor(self.conductor) {
            if self.discriminant % p as i128 != 0 {
                return Err(fail(format!(
                    "prime {p} divides the conductor {} but not the discriminant {}",
                    self.conductor, self.discriminant
                )));
            }
        }
        Ok(())
    }
}

/// Discriminant of `[a1, a2, a3, a4, a6]` in checked 128-bit arithmetic.
/// `None` on overflow (only reachable with coefficients near the `i64`
/// extremes).
fn discriminant(a: [i64; 5]) -> Option<i128> {
    let [a1, a2, a3, a4, a6] = a.map(i128::from);
    let b2 = a1.checked_mul(a1)?.checked_add(4 * a2)?;
    let b4 = a4.checked_mul(2)?.checked_add(a1.checked_mul(a3)?)?;
    let b6 = a3.checked_mul(a3)?.checked_add(a6.checked_mul(4)?)?;
    let b8 = a1
        .checked_mul(a1)?
        .checked_mul(a6)?
        .checked_add(a2.checked_mul(a6)?.checked_mul(4)?)?
        .checked_sub(a1.checked_mul(a3)?.checked_mul(a4)?)?
        .checked_add(a2.checked_mul(a3)?.checked_mul(a3)?)?
        .checked_sub(a4.checked_mul(a4)?)?;
    let t1 = b2.checked_mul(b2)?.checked_mul(b8)?;
    let t2 = b4.checked_mul(b4)?.checked_mul(b4)?.checked_mul(8)?;
    let t3 = b6.checked_mul(b6)?.checked_mul(27)?;
    let t4 = b2.checked_mul(b4)?.checked_mul(b6)?.checked_mul(9)?;
    t4.checked_sub(t1)?.checked_sub(t2)?.checked_sub(t3)
}

/// Prime factorization of `n >= 1` by trial division, `(prime, exponent)`
/// pairs in ascending order.
pub(crate) fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut push = |p: u64, n: &mut u64| {
        let mut e = 0;
        while (*n).is_multiple_of(p) {
            *n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    };
    push(2, &mut n);
    push(3, &mut n);
    let mut p = 5;
    while p * p <= n {
        push(p, &mut n);
        push(p + 2, &mut n);
        p += 6;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Parse a CSV stream of curve records.
///
/// The first significant line must be the exact header
/// `label,a1,a2,a3,a4,a6,conductor,rank`. Lines starting with `#` and
/// blank lines are ignored. Structural problems report the 1-based line
/// number; validation problems additionally identify the record.
pub fn parse_curves<R: Read>(reader: R) -> Result<Vec<CurveRecord>> {
    let mut records = Vec::new();
    let mut header_seen = false;
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if !header_seen {
            if fields != HEADER {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!(
                        "expected header '{}', found '{trimmed}'",
                        HEADER.join(",")
                    ),
                });
            }
            header_seen = true;
            continue;
        }
        if fields.len() != 8 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 8 fields, found {}", fields.len()),
            });
        }
        let label = if fields[0].is_empty() {
            None
        } else {
            Some(fields[0].to_string())
        };
        let mut coeffs = [0i64; 5];
        for (i, c) in coeffs.iter_mut().enumerate() {
            *c = parse_field(fields[i + 1], HEADER[i + 1], line_no)?;
        }
        let conductor: u64 = parse_field(fields[6], "conductor", line_no)?;
        let rank: u8 = parse_field(fields[7], "rank", line_no)?;
        let record = CurveRecord::new(label, coeffs, conductor, rank).map_err(|e| match e {
            Error::InvalidRecord { which, message, .. } => Error::InvalidRecord {
                which,
                line: line_no,
                message,
            },
            other => other,
        })?;
        records.push(record);
    }
    if !header_seen {
        return Err(Error::Parse {
            line: 0,
            message: "stream contains no header line".into(),
        });
    }
    Ok(records)
}

fn parse_field<T: std::str::FromStr>(s: &str, name: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("field '{name}' is not a valid {}: '{s}'", std::any::type_name::<T>()),
    })
}

/// Serialize records in the exact format accepted by [`parse_curves`].
pub fn serialize_curves<W: Write>(records: &[CurveRecord], mut writer: W) -> Result<()> {
    writeln!(writer, "{}", HEADER.join(","))?;
    for r in records {
        writeln!(
            writer,
            "{},{},{},{},{},{},{},{}",
            r.label.as_deref().unwrap_or(""),
            r.a1,
            r.a2,
            r.a3,
            r.a4,
            r.a6,
            r.conductor,
            r.rank
        )?;
    }
    Ok(())
}

/// Records whose conductor lies in `[lo, hi]` (inclusive), preserving the
/// input order. Duplicates are kept.
pub fn filter_conductor(records: &[CurveRecord], lo: u64, hi: u64) -> Result<Vec<CurveRecord>> {
    if lo > hi {
        return Err(Error::InvalidArgument(format!(
            "conductor window is empty: lo {lo} > hi {hi}"
        )));
    }
    Ok(records
        .iter()
        .filter(|r| (lo..=hi).contains(&r.conductor))
        .cloned()
        .collect())
}

//! Mestre–Nagao trace sums `S(B)` and their family statistics.
//!
//! For a curve with conductor `N`,
//!
//! ```text
//! S(B) = (1 / log B) * sum over good primes p < B of  a_p * log(p) / p,
//! ```
//!
//! with the sum strict at `B` and primes dividing `N` skipped. A trace is
//! evaluated over a read-out grid of `B` values at once: the underlying
//! prime sum is accumulated exactly once with compensated summation and
//! snapshotted at each grid point, so the value reported at a given `B`
//! is a pure function of the curve and `B` — refining the grid or
//! extending it never changes existing values, and prefixes of a longer
//! trace agree bitwise with a shorter one.
//!
//! Family statistics aggregate many traces: [`family_average`] produces
//! per-rank mean curves with 90% confidence half-widths, and
//! [`ap_average_profile`] the per-prime mean traces that exhibit the
//! murmuration oscillation directly.

use crate::ap;
use crate::dataset::CurveRecord;
use crate::error::{Error, Result};
use crate::primes::PrimeTable;
use crate::sum::NeumaierSum;

/// Normal quantile for two-sided 90% confidence.
const Z_90: f64 = 1.645;

/// Read-out grid of strictly increasing `B` values, all at least 3.
#[derive(Clone, Debug, PartialEq)]
pub struct BGrid {
    values: Vec<f64>,
}

impl BGrid {
    /// Validate an explicit grid: non-empty, strictly increasing, every
    /// value at least 3 and finite.
    pub fn from_values(values: Vec<f64>) -> Result<BGrid> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("grid must be non-empty".into()));
        }
        for (i, &b) in values.iter().enumerate() {
            if !b.is_finite() || b < 3.0 {
                return Err(Error::InvalidArgument(format!(
                    "grid value {b} at index {i} must be finite and >= 3"
                )));
            }
            if i > 0 && values[i - 1] >= b {
                return Err(Error::InvalidArgument(format!(
                    "grid must be strictly increasing, violated at index {i}"
                )));
            }
        }
        Ok(BGrid { values })
    }

    /// Geometric grid `start * ratio^k`, capped so the final point is
    /// exactly `cap`. Requires `start >= 3`, `ratio > 1`, `cap >= start`.
    pub fn geometric(start: f64, ratio: f64, cap: f64) -> Result<BGrid> {
        if !start.is_finite() || start < 3.0 {
            return Err(Error::InvalidArgument(format!(
                "grid start must be >= 3, got {start}"
            )));
        }
        if !ratio.is_finite() || ratio <= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "grid ratio must exceed 1, got {ratio}"
            )));
        }
        if !cap.is_finite() || cap < start {
            return Err(Error::InvalidArgument(format!(
                "grid cap {cap} must be at least the start {start}"
            )));
        }
        let mut values = Vec::new();
        let mut k = 0i32;
        loop {
            let b = start * ratio.powi(k);
            if b >= cap {
                break;
            }
            values.push(b);
            k += 1;
        }
        values.push(cap);
        Ok(BGrid { values })
    }

    /// Default trace grid: `3 * 1.05^k` capped at `cap`.
    pub fn default_grid(cap: f64) -> Result<BGrid> {
        BGrid::geometric(3.0, 1.05, cap)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("grid is non-empty")
    }
}

/// One curve's trace sums over a grid.
#[derive(Clone, Debug)]
pub struct SBTrace {
    pub grid: BGrid,
    /// Compensated prime sums `sum of a_p log(p)/p` for `p < B_k`.
    pub raw: Vec<f64>,
    /// `raw[k] / log(B_k)` — the values `S(B_k)`.
    pub values: Vec<f64>,
}

/// Trace sums from a precomputed ascending `(p, a_p)` list covering all
/// good primes below `prime_limit`.
///
/// The grid's last point must not exceed `prime_limit`: values past the
/// coverage of the list would be silently wrong, so they are rejected.
pub fn sb_trace_from_aps(aps: &[(u64, i64)], grid: &BGrid, prime_limit: u64) -> Result<SBTrace> {
    if grid.last() > prime_limit as f64 {
        return Err(Error::OutOfRange(format!(
            "grid reaches B = {} but traces only cover primes up to {prime_limit}",
            grid.last()
        )));
    }
    let mut acc = NeumaierSum::new();
    let mut raw = Vec::with_capacity(grid.len());
    let mut k = 0usize;
    for &(p, ap) in aps {
        let pf = p as f64;
        while k < grid.len() && grid.values[k] <= pf {
            raw.push(acc.value());
            k += 1;
        }
        if k == grid.len() {
            break;
        }
        acc.add(ap as f64 * pf.ln() / pf);
    }
    while k < grid.len() {
        raw.push(acc.value());
        k += 1;
    }
    let values = raw
        .iter()
        .zip(&grid.values)
        .map(|(&r, &b)| r / b.ln())
        .collect();
    Ok(SBTrace {
        grid: grid.clone(),
        raw,
        values,
    })
}

/// Trace sums for one record, computing the needed `a_p` on the fly.
pub fn sb_trace(rec: &CurveRecord, grid: &BGrid, table: &PrimeTable) -> Result<SBTrace> {
    if grid.last() > table.limit() as f64 {
        return Err(Error::OutOfRange(format!(
            "grid reaches B = {} but the prime table stops at {}",
            grid.last(),
            table.limit()
        )));
    }
    let top = grid.last();
    let mut aps = Vec::new();
    for &p in table.primes() {
        if (p as f64) >= top {
            break;
        }
        let red = ap::reduce_curve(rec, p);
        if red.is_good() {
            aps.push((p, ap::ap_value(&red)?));
        }
    }
    sb_trace_from_aps(&aps, grid, table.limit())
}

/// Traces for a whole family, sharing one batched `a_p` computation.
pub fn family_traces(
    records: &[CurveRecord],
    grid: &BGrid,
    table: &PrimeTable,
) -> Result<Vec<SBTrace>> {
    if grid.last() > table.limit() as f64 {
        return Err(Error::OutOfRange(format!(
            "grid reaches B = {} but the prime table stops at {}",
            grid.last(),
            table.limit()
        )));
    }
    let aps = ap::ap_batch(records, table);
    aps.iter()
        .map(|list| sb_trace_from_aps(list, grid, table.limit()))
        .collect()
}

/// Mean trace of a family with 90% confidence half-widths.
#[derive(Clone, Debug)]
pub struct FamilyCurve {
    pub grid: BGrid,
    pub mean: Vec<f64>,
    /// Half-width of the 90% confidence interval of the mean
    /// (`1.645 * s / sqrt(n)` with the sample standard deviation `s`);
    /// zero when `n = 1`.
    pub ci: Vec<f64>,
    pub n: usize,
}

fn average_class(traces: &[&SBTrace]) -> FamilyCurve {
    let grid = traces[0].grid.clone();
    let n = traces.len();
    let mut mean = Vec::with_capacity(grid.len());
    let mut ci = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let mut acc = NeumaierSum::new();
        for t in traces {
            acc.add(t.values[k]);
        }
        let m = acc.value() / n as f64;
        let hw = if n > 1 {
            let mut dev = NeumaierSum::new();
            for t in traces {
                let d = t.values[k] - m;
                dev.add(d * d);
            }
            let s = (dev.value() / (n - 1) as f64).sqrt();
            Z_90 * s / (n as f64).sqrt()
        } else {
            0.0
        };
        mean.push(m);
        ci.push(hw);
    }
    FamilyCurve { grid, mean, ci, n }
}

/// Per-rank mean curves (`[rank 0, rank 1]`) of a family of traces.
///
/// `ranks` runs parallel to `traces`; all traces must share one grid and
/// both classes must be inhabited.
pub fn family_average(traces: &[SBTrace], ranks: &[u8]) -> Result<[FamilyCurve; 2]> {
    if traces.len() != ranks.len() {
        return Err(Error::InvalidArgument(format!(
            "{} traces but {} rank labels",
            traces.len(),
            ranks.len()
        )));
    }
    if let Some(r) = ranks.iter().find(|&&r| r > 1) {
        return Err(Error::InvalidArgument(format!(
            "rank labels must be 0 or 1, got {r}"
        )));
    }
    if let Some(t) = traces.iter().find(|t| t.grid != traces[0].grid) {
        return Err(Error::InvalidArgument(format!(
            "traces disagree on the grid ({} vs {} points)",
            t.grid.len(),
            traces[0].grid.len()
        )));
    }
    let mut out = Vec::new();
    for class in 0..2u8 {
        let members: Vec<&SBTrace> = traces
            .iter()
            .zip(ranks)
            .filter(|&(_, &r)| r == class)
            .map(|(t, _)| t)
            .collect();
        if members.is_empty() {
            return Err(Error::EmptyClass(format!(
                "no curves with rank {class} in the family"
            )));
        }
        out.push(average_class(&members));
    }
    let [zero, one] = <[FamilyCurve; 2]>::try_from(out).expect("two classes");
    Ok([zero, one])
}

/// Pointwise difference of two family curves on the same grid
/// (mean of `a` minus mean of `b`; half-widths combined in quadrature).
pub fn family_difference(a: &FamilyCurve, b: &FamilyCurve) -> Result<FamilyCurve> {
    if a.grid != b.grid {
        return Err(Error::InvalidArgument(
            "family curves live on different grids".into(),
        ));
    }
    let mean = a.mean.iter().zip(&b.mean).map(|(x, y)| x - y).collect();
    let ci = a
        .ci
        .iter()
        .zip(&b.ci)
        .map(|(x, y)| (x * x + y * y).sqrt())
        .collect();
    Ok(FamilyCurve {
        grid: a.grid.clone(),
        mean,
        ci,
        n: a.n.min(b.n),
    })
}

/// Per-prime, per-rank means of `a_p` across a family.
#[derive(Clone, Debug)]
pub struct ApProfile {
    /// Primes where both rank classes have at least one good curve.
    pub primes: Vec<u64>,
    pub mean_rank0: Vec<f64>,
    pub mean_rank1: Vec<f64>,
}

/// Average `a_p` by rank class at every prime `<= table.limit()`,
/// excluding each curve from the primes dividing its conductor.
pub fn ap_average_profile(records: &[CurveRecord], table: &PrimeTable) -> Result<ApProfile> {
    for class in 0..2u8 {
        if !records.iter().any(|r| r.rank == class) {
            return Err(Error::EmptyClass(format!(
                "no curves with rank {class} in the family"
            )));
        }
    }
    let batch = ap::ap_batch(records, table);
    let np = table.count();
    let mut sums = [vec![0f64; np], vec![0f64; np]];
    let mut counts = [vec![0u32; np], vec![0u32; np]];
    for (rec, list) in records.iter().zip(&batch) {
        let class = rec.rank as usize;
        let mut idx = 0usize;
        for &(p, apv) in list {
            while table.primes()[idx] != p {
                idx += 1;
            }
            sums[class][idx] += apv as f64;
            counts[class][idx] += 1;
        }
    }
    let mut out = ApProfile {
        primes: Vec::new(),
        mean_rank0: Vec::new(),
        mean_rank1: Vec::new(),
    };
    for i in 0..np {
        if counts[0][i] > 0 && counts[1][i] > 0 {
            out.primes.push(table.primes()[i]);
            out.mean_rank0.push(sums[0][i] / f64::from(counts[0][i]));
            out.mean_rank1.push(sums[1][i] / f64::from(counts[1][i]));
        }
    }
    Ok(out)
}

/// Trace values of a family at a single `B`, paired with the rank labels
/// — the scores consumed by the cutoff classifier.
pub fn family_scores_at(
    records: &[CurveRecord],
    aps: &[Vec<(u64, i64)>],
    b: f64,
    prime_limit: u64,
) -> Result<Vec<(f64, u8)>> {
    let grid = BGrid::from_values(vec![b])?;
    records
        .iter()
        .zip(aps)
        .map(|(rec, list)| {
            let trace = sb_trace_from_aps(list, &grid, prime_limit)?;
            Ok((trace.values[0], rec.rank))
        })
        .collect()
}

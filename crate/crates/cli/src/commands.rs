//! Implementations of the subcommands: curve-level tables on stdout,
//! figure/table data files under the output directory, and constant or
//! maxima reports.
//!
//! Every command is deterministic for a given configuration; worker count
//! only changes wall-clock time, never output bytes.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use murmur_core::ap;
use murmur_core::classifier;
use murmur_core::dataset::{self, CurveRecord};
use murmur_core::density;
use murmur_core::nagao::{self, BGrid};
use murmur_core::primes::{sieve, PrimeTable};
use murmur_core::profile::{self, MainTermModel};

use crate::config::RunConfig;

/// Number of sample points in the exact-profile sweep.
const SWEEP_POINTS: usize = 2000;
/// Largest scale the exact-profile sweep will sieve to.
const SWEEP_SCALE_CAP: f64 = 1e8;

/// Parse `a1,a2,a3,a4,a6` into five integers.
fn parse_curve(spec: &str) -> Result<[i64; 5]> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 5 {
        bail!("curve must be five comma-separated integers a1,a2,a3,a4,a6, got `{spec}`");
    }
    let mut coeffs = [0i64; 5];
    for (slot, part) in coeffs.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| anyhow!("curve coefficient `{part}` is not an integer"))?;
    }
    Ok(coeffs)
}

/// Build a record for raw coefficients entered on the command line.
///
/// The true conductor is not computed; the product of the sieve primes
/// dividing the discriminant stands in for it, which marks exactly the
/// primes of bad reduction within the table. Good-reduction traces are
/// unaffected by this substitution.
fn synth_record(coeffs: [i64; 5], table: &PrimeTable) -> Result<CurveRecord> {
    let probe = CurveRecord::new(None, coeffs, 1, 0)?;
    let mut radical: u64 = 1;
    for &p in table.primes() {
        if probe.discriminant % p as i128 == 0 {
            radical = radical
                .checked_mul(p)
                .ok_or_else(|| anyhow!("discriminant has too many small prime factors"))?;
        }
    }
    Ok(CurveRecord::new(None, coeffs, radical, 0)?)
}

/// Load the dataset, apply the conductor window, and refuse empty families.
fn load_family(config: &RunConfig) -> Result<Vec<CurveRecord>> {
    let path = config
        .dataset
        .as_ref()
        .ok_or_else(|| anyhow!("this command needs --dataset FILE"))?;
    let file =
        File::open(path).with_context(|| format!("cannot open dataset {}", path.display()))?;
    let records = dataset::parse_curves(BufReader::new(file))
        .with_context(|| format!("cannot parse dataset {}", path.display()))?;
    let records = match config.window {
        Some((lo, hi)) => dataset::filter_conductor(&records, lo, hi)?,
        None => records,
    };
    if records.is_empty() {
        bail!("no curves selected; check --dataset and --window");
    }
    Ok(records)
}

/// Materialize the configured geometric B-grid, capped at the prime limit.
fn make_grid(config: &RunConfig) -> Result<BGrid> {
    Ok(BGrid::geometric(
        config.grid.start,
        config.grid.ratio,
        config.primes as f64,
    )?)
}

/// Resolve an output file path, honouring the overwrite protection.
fn output_path(config: &RunConfig, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(&config.out)
        .with_context(|| format!("cannot create output directory {}", config.out.display()))?;
    let path = config.out.join(name);
    if path.exists() && !config.force {
        bail!("{} already exists; pass --force to overwrite", path.display());
    }
    Ok(path)
}

fn write_text(path: &PathBuf, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Euler-product constants at the configured truncation.
fn constants_at_truncation(config: &RunConfig) -> Result<density::MurmurationConstants> {
    let table = sieve(config.trunc)?;
    Ok(density::euler_constants(&table)?)
}

/// Print the good-reduction traces `(p, a_p)` of one curve, for every
/// prime up to the configured limit.
pub fn cmd_ap(config: &RunConfig, curve: &str) -> Result<()> {
    let coeffs = parse_curve(curve)?;
    let table = sieve(config.primes)?;
    let rec = synth_record(coeffs, &table)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "p\ta_p")?;
    for &p in table.primes() {
        let red = ap::reduce_curve(&rec, p);
        if !red.is_good() {
            continue;
        }
        writeln!(out, "{p}\t{}", ap::ap_value(&red)?)?;
    }
    Ok(())
}

/// Print the running trace sum S(B) of one curve on the B-grid.
pub fn cmd_trace(config: &RunConfig, curve: &str) -> Result<()> {
    let coeffs = parse_curve(curve)?;
    let table = sieve(config.primes)?;
    let rec = synth_record(coeffs, &table)?;
    let grid = make_grid(config)?;
    let trace = nagao::sb_trace(&rec, &grid, &table)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "b\ts_b")?;
    for (b, s) in grid.values().iter().zip(&trace.values) {
        writeln!(out, "{b}\t{s}")?;
    }
    Ok(())
}

/// Emit the per-rank family averages of S(B) with confidence half-widths,
/// one CSV file per rank class.
pub fn cmd_figure1(config: &RunConfig) -> Result<()> {
    let records = load_family(config)?;
    let table = sieve(config.primes)?;
    let grid = make_grid(config)?;
    let traces = nagao::family_traces(&records, &grid, &table)?;
    let ranks: Vec<u8> = records.iter().map(|r| r.rank).collect();
    let families = nagao::family_average(&traces, &ranks)?;
    for (class, family) in families.iter().enumerate() {
        let path = output_path(config, &format!("figure1_rank{class}.csv"))?;
        let mut text = String::from("b,mean,ci\n");
        for ((b, mean), ci) in grid.values().iter().zip(&family.mean).zip(&family.ci) {
            text.push_str(&format!("{b},{mean},{ci}\n"));
        }
        write_text(&path, &text)?;
        println!(
            "wrote {} ({} curves, {} grid points)",
            path.display(),
            family.n,
            grid.len()
        );
    }
    Ok(())
}

/// Emit the per-prime trace averages by rank class as one CSV file.
pub fn cmd_figure2(config: &RunConfig) -> Result<()> {
    let records = load_family(config)?;
    let table = sieve(config.primes)?;
    let profile = nagao::ap_average_profile(&records, &table)?;
    let path = output_path(config, "figure2.csv")?;
    let mut text = String::from("p,mean_rank0,mean_rank1\n");
    for ((p, m0), m1) in profile
        .primes
        .iter()
        .zip(&profile.mean_rank0)
        .zip(&profile.mean_rank1)
    {
        text.push_str(&format!("{p},{m0},{m1}\n"));
    }
    write_text(&path, &text)?;
    println!(
        "wrote {} ({} curves, {} primes)",
        path.display(),
        records.len(),
        profile.primes.len()
    );
    Ok(())
}

/// Sample grid of the exact-profile sweep: `SWEEP_POINTS` evenly spaced
/// points from 0.005 to 1 inclusive.
pub fn sweep_grid() -> Vec<f64> {
    let step = 0.995 / (SWEEP_POINTS as f64 - 1.0);
    (0..SWEEP_POINTS).map(|j| 0.005 + j as f64 * step).collect()
}

/// Emit the exact density profile swept over x for one conductor scale.
pub fn cmd_figure3(config: &RunConfig, n: f64) -> Result<()> {
    if !n.is_finite() || n > SWEEP_SCALE_CAP {
        bail!("sweep scale must be at most {SWEEP_SCALE_CAP:e}, got {n}");
    }
    let consts = constants_at_truncation(config)?;
    let model = MainTermModel::new(n, consts)?;
    let table = sieve(n.ceil() as u64)?;
    let path = output_path(config, "figure3.csv")?;
    let mut text = String::from("x,f_exact\n");
    for x in sweep_grid() {
        let value = model.f_exact(x, &table)?;
        text.push_str(&format!("{x},{value}\n"));
    }
    write_text(&path, &text)?;
    println!("wrote {} ({} points at scale {n})", path.display(), SWEEP_POINTS);
    Ok(())
}

/// Classify ranks by the optimal score cutoff at each trace bound; print
/// the confusion tables and emit one CSV row per bound.
pub fn cmd_classify(config: &RunConfig, bounds: &[f64]) -> Result<()> {
    if bounds.is_empty() {
        bail!("classify needs at least one trace bound B");
    }
    for &b in bounds {
        if !b.is_finite() || b < 3.0 {
            bail!("trace bound must be at least 3, got {b}");
        }
        if b > config.primes as f64 {
            bail!("trace bound {b} exceeds the prime limit {}; raise --primes", config.primes);
        }
    }
    let records = load_family(config)?;
    let table = sieve(config.primes)?;
    let aps = ap::ap_batch(&records, &table);
    let path = output_path(config, "classify.csv")?;
    let mut text = String::from(
        "b,cutoff,accuracy,true_rank0,false_rank0,true_rank1,false_rank1,n_rank0,n_rank1\n",
    );
    for &b in bounds {
        let scores = nagao::family_scores_at(&records, &aps, b, table.limit())?;
        let report = classifier::optimal_cutoff(&scores, b)?;
        println!("B = {b}");
        println!("  cutoff   = {}", report.cutoff);
        println!(
            "  accuracy = {:.4} ({} of {})",
            report.accuracy,
            report.true_rank0 + report.true_rank1,
            report.n_rank0 + report.n_rank1
        );
        println!(
            "  rank 0: {} predicted 0, {} predicted 1 (n = {})",
            report.true_rank0, report.false_rank1, report.n_rank0
        );
        println!(
            "  rank 1: {} predicted 1, {} predicted 0 (n = {})",
            report.true_rank1, report.false_rank0, report.n_rank1
        );
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            report.b,
            report.cutoff,
            report.accuracy,
            report.true_rank0,
            report.false_rank0,
            report.true_rank1,
            report.false_rank1,
            report.n_rank0,
            report.n_rank1
        ));
    }
    write_text(&path, &text)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Scales of the maxima table: 10^4 through 10^8.
pub const TABLE_SCALES: [f64; 5] = [1e4, 1e5, 1e6, 1e7, 1e8];

/// Emit the main-term maxima locations across the five reference scales.
pub fn cmd_table1(config: &RunConfig) -> Result<()> {
    let consts = constants_at_truncation(config)?;
    let path = output_path(config, "table1.tsv")?;
    let mut text = String::from("n\tx1\tx2\n");
    for &n in &TABLE_SCALES {
        let report = MainTermModel::new(n, consts.clone())?.local_maxima(config.tol)?;
        text.push_str(&format!("{}\t{}\t{}\n", n as u64, report.x1, report.x2));
    }
    print!("{text}");
    write_text(&path, &text)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Print the Euler-product constants, the derived coefficients, and the
/// scale-independent maxima bounds.
pub fn cmd_constants(config: &RunConfig) -> Result<()> {
    let consts = constants_at_truncation(config)?;
    let limits = profile::limit_constants(&consts, config.tol)?;
    println!("A = {}", consts.a);
    println!("B = {}", consts.b);
    println!("D2 = {}", consts.d2);
    println!("C1 = {}", consts.c1);
    println!("C2 = {}", consts.c2);
    println!("C3 = {}", consts.c3);
    println!("A^2/pi^2 = {}", limits.first_max);
    println!("second-max bound = {}", limits.second_max_bound);
    println!("lambda = {}", limits.second_max);
    println!(
        "truncation: primes <= {} (tail bound {:e})",
        consts.truncation_limit, consts.tail_bound
    );
    Ok(())
}

/// Print the main-term maxima report for one conductor scale.
pub fn cmd_maxima(config: &RunConfig, n: f64) -> Result<()> {
    let consts = constants_at_truncation(config)?;
    let model = MainTermModel::new(n, consts)?;
    let report = model.local_maxima(config.tol)?;
    println!("n = {}", report.n);
    println!("x1 = {}", report.x1);
    println!("value1 = {}", report.value1);
    println!("x2 = {}", report.x2);
    println!("value2 = {}", report.value2);
    println!("first-max bound = {}", report.limits.first_max);
    println!("second-max bound = {}", report.limits.second_max_bound);
    println!("lambda = {}", report.limits.second_max);
    Ok(())
}

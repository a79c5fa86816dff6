//! Run configuration: defaults, the optional key = value config file, and
//! flag merging. Explicit command-line flags always win over file values.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

/// Default prime limit for commands that reduce curves.
pub const DEFAULT_PRIME_LIMIT: u64 = 10_000;
/// Default truncation for the Euler products behind the density constants.
pub const DEFAULT_TRUNCATION: u64 = 1_000_000;
/// Default tolerance for maxima searches and root solves.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Geometric B-grid description: `start` and `ratio`, capped at the prime
/// limit when the grid is materialized.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub start: f64,
    pub ratio: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { start: 3.0, ratio: 1.05 }
    }
}

/// Fully resolved configuration for one command invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub window: Option<(u64, u64)>,
    pub primes: u64,
    pub grid: GridSpec,
    pub trunc: u64,
    pub tol: f64,
    pub workers: usize,
    pub out: PathBuf,
    pub force: bool,
}

/// Raw option values as given on the command line, before file merging.
#[derive(Debug, Clone, Default)]
pub struct RawOptions {
    pub dataset: Option<PathBuf>,
    pub window: Option<String>,
    pub primes: Option<u64>,
    pub grid: Option<String>,
    pub trunc: Option<u64>,
    pub tol: Option<f64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub force: bool,
}

impl RawOptions {
    /// Fill unset fields from a TOML `key = value` file, then validate the
    /// combined result into a [`RunConfig`].
    pub fn resolve(mut self, config_file: Option<&Path>) -> Result<RunConfig> {
        if let Some(path) = config_file {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config file {}", path.display()))?;
            let table: toml::Table = text
                .parse()
                .with_context(|| format!("cannot parse config file {}", path.display()))?;
            self.merge_file(&table)?;
        }
        self.validate()
    }

    fn merge_file(&mut self, table: &toml::Table) -> Result<()> {
        for (key, value) in table {
            match key.as_str() {
                "dataset" => {
                    if self.dataset.is_none() {
                        self.dataset = Some(PathBuf::from(expect_str(key, value)?));
                    }
                }
                "window" => {
                    if self.window.is_none() {
                        self.window = Some(expect_str(key, value)?.to_string());
                    }
                }
                "primes" => {
                    if self.primes.is_none() {
                        self.primes = Some(expect_u64(key, value)?);
                    }
                }
                "grid" => {
                    if self.grid.is_none() {
                        self.grid = Some(expect_str(key, value)?.to_string());
                    }
                }
                "trunc" => {
                    if self.trunc.is_none() {
                        self.trunc = Some(expect_u64(key, value)?);
                    }
                }
                "tol" => {
                    if self.tol.is_none() {
                        self.tol = Some(expect_f64(key, value)?);
                    }
                }
                "workers" => {
                    if self.workers.is_none() {
                        self.workers = Some(expect_u64(key, value)? as usize);
                    }
                }
                "out" => {
                    if self.out.is_none() {
                        self.out = Some(PathBuf::from(expect_str(key, value)?));
                    }
                }
                "force" => {
                    let file_force = value
                        .as_bool()
                        .ok_or_else(|| anyhow!("config key `force` must be a boolean"))?;
                    self.force = self.force || file_force;
                }
                other => bail!("unknown config key `{other}`"),
            }
        }
        Ok(())
    }

    fn validate(self) -> Result<RunConfig> {
        let primes = self.primes.unwrap_or(DEFAULT_PRIME_LIMIT);
        if primes < 2 {
            bail!("prime limit must be at least 2, got {primes}");
        }
        let window = match &self.window {
            Some(spec) => Some(parse_window(spec)?),
            None => None,
        };
        // The materialized grid is capped at the prime limit, so every grid
        // bound automatically stays within the sieve; grid construction
        // itself rejects a start beyond the cap.
        let grid = match &self.grid {
            Some(spec) => parse_grid(spec)?,
            None => GridSpec::default(),
        };
        let tol = self.tol.unwrap_or(DEFAULT_TOL);
        if !tol.is_finite() || tol <= 0.0 {
            bail!("tolerance must be a positive finite number, got {tol}");
        }
        let workers = match self.workers {
            Some(0) => bail!("worker count must be at least 1"),
            Some(k) => k,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        Ok(RunConfig {
            dataset: self.dataset,
            window,
            primes,
            grid,
            trunc: self.trunc.unwrap_or(DEFAULT_TRUNCATION),
            tol,
            workers,
            out: self.out.unwrap_or_else(|| PathBuf::from(".")),
            force: self.force,
        })
    }
}

fn expect_str<'v>(key: &str, value: &'v toml::Value) -> Result<&'v str> {
    value
        .as_str()
        .ok_or_else(|| anyhow!("config key `{key}` must be a string"))
}

fn expect_u64(key: &str, value: &toml::Value) -> Result<u64> {
    let n = value
        .as_integer()
        .ok_or_else(|| anyhow!("config key `{key}` must be an integer"))?;
    u64::try_from(n).map_err(|_| anyhow!("config key `{key}` must be non-negative"))
}

fn expect_f64(key: &str, value: &toml::Value) -> Result<f64> {
    match value {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(n) => Ok(*n as f64),
        _ => bail!("config key `{key}` must be a number"),
    }
}

/// Parse a conductor window given as `LO:HI`.
pub fn parse_window(spec: &str) -> Result<(u64, u64)> {
    let (lo, hi) = spec
        .split_once(':')
        .ok_or_else(|| anyhow!("window must be LO:HI, got `{spec}`"))?;
    let lo: u64 = lo
        .trim()
        .parse()
        .map_err(|_| anyhow!("window lower bound `{lo}` is not an integer"))?;
    let hi: u64 = hi
        .trim()
        .parse()
        .map_err(|_| anyhow!("window upper bound `{hi}` is not an integer"))?;
    if lo > hi {
        bail!("window lower bound {lo} exceeds upper bound {hi}");
    }
    Ok((lo, hi))
}

/// Parse a B-grid given as `GEOM:START:RATIO`.
pub fn parse_grid(spec: &str) -> Result<GridSpec> {
    let mut parts = spec.split(':');
    let kind = parts.next().unwrap_or_default();
    if !kind.eq_ignore_ascii_case("geom") {
        bail!("unsupported grid kind `{kind}`; expected GEOM:START:RATIO");
    }
    let start = parts
        .next()
        .ok_or_else(|| anyhow!("grid spec `{spec}` is missing START"))?;
    let ratio = parts
        .next()
        .ok_or_else(|| anyhow!("grid spec `{spec}` is missing RATIO"))?;
    if parts.next().is_some() {
        bail!("grid spec `{spec}` has trailing fields; expected GEOM:START:RATIO");
    }
    let start: f64 = start
        .trim()
        .parse()
        .map_err(|_| anyhow!("grid start `{start}` is not a number"))?;
    let ratio: f64 = ratio
        .trim()
        .parse()
        .map_err(|_| anyhow!("grid ratio `{ratio}` is not a number"))?;
    if !start.is_finite() || start < 3.0 {
        bail!("grid start must be at least 3, got {start}");
    }
    if !ratio.is_finite() || ratio <= 1.0 {
        bail!("grid ratio must exceed 1, got {ratio}");
    }
    Ok(GridSpec { start, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_parse_and_validate() {
        assert_eq!(parse_window("7500:10000").unwrap(), (7500, 10000));
        assert_eq!(parse_window(" 40000 : 45000 ").unwrap(), (40000, 45000));
        assert!(parse_window("10:5").is_err());
        assert!(parse_window("10").is_err());
        assert!(parse_window("a:b").is_err());
    }

    #[test]
    fn grids_parse_and_validate() {
        let g = parse_grid("GEOM:3:1.05").unwrap();
        assert_eq!(g.start, 3.0);
        assert_eq!(g.ratio, 1.05);
        assert!(parse_grid("geom:600:2").is_ok());
        assert!(parse_grid("LIN:3:1.05").is_err());
        assert!(parse_grid("GEOM:2:1.05").is_err());
        assert!(parse_grid("GEOM:3:1").is_err());
        assert!(parse_grid("GEOM:3").is_err());
        assert!(parse_grid("GEOM:3:1.05:9").is_err());
    }

    #[test]
    fn defaults_fill_unset_fields() {
        let cfg = RawOptions::default().resolve(None).unwrap();
        assert_eq!(cfg.primes, DEFAULT_PRIME_LIMIT);
        assert_eq!(cfg.trunc, DEFAULT_TRUNCATION);
        assert_eq!(cfg.tol, DEFAULT_TOL);
        assert!(cfg.workers >= 1);
        assert!(cfg.window.is_none());
        assert!(!cfg.force);
    }

    #[test]
    fn zero_workers_are_rejected() {
        let raw = RawOptions { workers: Some(0), ..RawOptions::default() };
        assert!(raw.resolve(None).is_err());
    }

    #[test]
    fn config_file_fills_gaps_but_flags_win() {
        let dir = std::env::temp_dir().join("murmur-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(
            &path,
            "primes = 5000\ntol = 0.001\nwindow = \"100:200\"\nforce = true\n",
        )
        .unwrap();
        let raw = RawOptions { primes: Some(777), ..RawOptions::default() };
        let cfg = raw.resolve(Some(&path)).unwrap();
        assert_eq!(cfg.primes, 777, "explicit flag beats the file value");
        assert_eq!(cfg.tol, 0.001);
        assert_eq!(cfg.window, Some((100, 200)));
        assert!(cfg.force);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = std::env::temp_dir().join("murmur-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.toml");
        std::fs::write(&path, "primse = 5000\n").unwrap();
        let err = RawOptions::default().resolve(Some(&path)).unwrap_err();
        assert!(err.to_string().contains("primse"));
        std::fs::remove_file(&path).unwrap();
    }
}

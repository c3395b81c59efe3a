//! Run configuration: built-in defaults, then an optional `key = value` file,
//! then command-line flags.
//!
//! File format: one `key = value` per line, `#` starts a comment, blank lines
//! are ignored. Recognised keys:
//!
//! | key          | value                          | default                     |
//! |--------------|--------------------------------|-----------------------------|
//! | `work_limit` | positive integer               | 1000000000                  |
//! | `primes`     | comma list of primes           | `2,3,5,7,11,13`             |
//! | `budgets`    | comma list of `p:m`            | `2:5,3:4,5:3,7:3,11:2,13:2` |
//! | `q_values`   | comma list of positive ints    | `1,2,3,4`                   |
//! | `r_values`   | comma list, none divisible by 3| `1,2`                       |
//! | `k_values`   | comma list of nonnegative ints | `0,1,2,4,6`                 |
//! | `mode`       | `fast`, `full` or `measure`    | `fast`                      |
//! | `format`     | `text`, `json` or `csv`        | `text` (`json` for dumps)   |
//! | `output`     | path, `-` for stdout           | `-`                         |
//! | `jobs`       | positive integer               | all cores                   |
//! | `p_max`      | bound for `funceq`             | `50`                        |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use abzeta::oracle::{Mode, DEFAULT_WORK_LIMIT};
use abzeta::series::is_prime;
use anyhow::{bail, Context, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => bail!("unknown format {other:?}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub work_limit: u64,
    pub primes: Vec<u64>,
    /// Exponent budget per prime.
    pub budgets: BTreeMap<u64, usize>,
    pub q_values: Vec<i64>,
    pub r_values: Vec<i64>,
    pub k_values: Vec<i64>,
    pub mode: Mode,
    /// `None` lets each subcommand choose.
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub p_max: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            work_limit: DEFAULT_WORK_LIMIT,
            primes: vec![2, 3, 5, 7, 11, 13],
            budgets: [(2, 5), (3, 4), (5, 3), (7, 3), (11, 2), (13, 2)].into_iter().collect(),
            q_values: vec![1, 2, 3, 4],
            r_values: vec![1, 2],
            k_values: vec![0, 1, 2, 4, 6],
            mode: Mode::Fast,
            format: None,
            output: None,
            jobs: None,
            p_max: 50,
        }
    }
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<T>().map_err(|_| anyhow::anyhow!("{key}: cannot parse {s:?}")))
        .collect()
}

pub fn parse_budgets(v: &str) -> Result<BTreeMap<u64, usize>> {
    let mut out = BTreeMap::new();
    for item in v.split(',').filter(|s| !s.trim().is_empty()) {
        let (p, m) = item.split_once(':').with_context(|| format!("budget {item:?} is not p:m"))?;
        out.insert(p.trim().parse()?, m.trim().parse()?);
    }
    Ok(out)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "work_limit" => self.work_limit = value.parse()?,
            "primes" => self.primes = list(key, value)?,
            "budgets" => self.budgets = parse_budgets(value)?,
            "q_values" => self.q_values = list(key, value)?,
            "r_values" => self.r_values = list(key, value)?,
            "k_values" => self.k_values = list(key, value)?,
            "mode" => self.mode = value.parse().map_err(|e| anyhow::anyhow!("mode: {e}"))?,
            "format" => self.format = Some(value.parse()?),
            "output" => self.output = (value != "-").then(|| PathBuf::from(value)),
            "jobs" => self.jobs = Some(value.parse()?),
            "p_max" => self.p_max = value.parse()?,
            _ => bail!("unknown config key {key:?}"),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').with_context(|| format!("line {}: expected key = value", i + 1))?;
            self.set(k.trim(), v).with_context(|| format!("line {}", i + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.work_limit == 0 {
            bail!("work_limit must be positive");
        }
        if let Some(p) = self.primes.iter().find(|&&p| !is_prime(p)) {
            bail!("{p} is not prime");
        }
        if let Some((p, _)) = self.budgets.iter().find(|(&p, _)| !is_prime(p)) {
            bail!("budget for {p}: not prime");
        }
        if self.budgets.values().any(|&m| m == 0) {
            bail!("budgets must be positive");
        }
        if self.jobs == Some(0) {
            bail!("jobs must be positive");
        }
        Ok(())
    }

    /// Budget for `p`, falling back to 2 for primes without an entry.
    pub fn budget(&self, p: u64) -> usize {
        self.budgets.get(&p).copied().unwrap_or(2)
    }
}

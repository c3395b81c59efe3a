//! Euler products and coefficient tables.
//!
//! Global tables store `a_1..a_N` in a vector indexed from zero, so `a[n-1]`
//! is the number of subgroups of index `n`.

use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::oracle::CoeffTable;

/// Serialize `Vec<BigInt>` as decimal strings.
pub mod bigint_strings {
    use num_bigint::BigInt;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        let raw: Vec<String> = Vec::deserialize(d)?;
        raw.iter().map(|s| s.parse().map_err(D::Error::custom)).collect()
    }
}

/// Default upper bound for global tables.
pub const DEFAULT_GLOBAL_BOUND: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalCoeffs {
    pub n: usize,
    #[serde(with = "bigint_strings")]
    pub a: Vec<BigInt>,
    pub source: String,
}

impl GlobalCoeffs {
    pub fn new(a: Vec<BigInt>, source: impl Into<String>) -> Self {
        GlobalCoeffs { n: a.len(), a, source: source.into() }
    }

    /// `a_n`, 1-based.
    pub fn get(&self, n: usize) -> &BigInt {
        &self.a[n - 1]
    }

    pub fn partial_sums(&self) -> Vec<BigInt> {
        let mut acc = BigInt::zero();
        self.a
            .iter()
            .map(|x| {
                acc += x;
                acc.clone()
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), Error> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Parse(e.to_string());
        out.write_record(["n", "a_n"]).map_err(io)?;
        for (i, x) in self.a.iter().enumerate() {
            out.write_record([(i + 1).to_string(), x.to_string()]).map_err(io)?;
        }
        out.flush().map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    /// Two whitespace-separated columns `N  Σ_{n≤N} a_n`, one line per `N`.
    pub fn write_partial_sums<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (i, s) in self.partial_sums().iter().enumerate() {
            writeln!(w, "{} {}", i + 1, s)?;
        }
        Ok(())
    }
}

/// Smallest prime factor of every `n ≤ bound` (`spf[0] = spf[1] = 0`).
pub fn smallest_prime_factors(bound: usize) -> Vec<usize> {
    let mut spf = vec![0usize; bound + 1];
    for i in 2..=bound {
        if spf[i] == 0 {
            let mut j = i;
            while j <= bound {
                if spf[j] == 0 {
                    spf[j] = i;
                }
                j += i;
            }
        }
    }
    spf
}

pub fn primes_up_to(bound: usize) -> Vec<u64> {
    let spf = smallest_prime_factors(bound);
    (2..=bound).filter(|&i| spf[i] == i).map(|i| i as u64).collect()
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Largest `m` with `p^m ≤ n`.
pub fn depth_for(p: u64, n: usize) -> usize {
    let (mut m, mut q) = (0, p as u128);
    while q <= n as u128 {
        m += 1;
        q *= p as u128;
    }
    m
}

/// `a_n = Π_p a_{p^{v_p(n)}}` from per-prime local tables.
///
/// Every prime `p ≤ n` must be present with at least `⌊log_p n⌋ + 1` entries.
pub fn euler_assemble(tables: &BTreeMap<u64, Vec<BigInt>>, n: usize) -> Result<GlobalCoeffs, Error> {
    for p in primes_up_to(n) {
        let depth = depth_for(p, n);
        match tables.get(&p) {
            Some(t) if t.len() > depth => {}
            _ => return Err(Error::MissingPrime { prime: p, depth }),
        }
    }
    Ok(GlobalCoeffs::new(multiplicative(n, |p, e| tables[&p][e].clone()), "euler"))
}

/// Multiplicative function with prescribed prime-power values, `a_1 = 1`.
pub fn multiplicative(n: usize, mut at: impl FnMut(u64, usize) -> BigInt) -> Vec<BigInt> {
    let spf = smallest_prime_factors(n);
    let mut a = vec![BigInt::zero(); n + 1];
    if n >= 1 {
        a[1] = BigInt::one();
    }
    // Cache prime-power values; keyed by (p, e).
    let mut pp: BTreeMap<(u64, usize), BigInt> = BTreeMap::new();
    for i in 2..=n {
        let p = spf[i];
        let (mut rest, mut e) = (i, 0);
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        let v = pp.entry((p as u64, e)).or_insert_with(|| at(p as u64, e)).clone();
        a[i] = if rest == 1 { v } else { v * &a[rest] };
    }
    a.remove(0);
    a
}

pub fn dirichlet_mul(x: &[BigInt], y: &[BigInt]) -> Vec<BigInt> {
    let n = x.len().min(y.len());
    let mut out = vec![BigInt::zero(); n];
    for i in 1..=n {
        if x[i - 1].is_zero() {
            continue;
        }
        for j in 1..=n / i {
            if !y[j - 1].is_zero() {
                out[i * j - 1] += &x[i - 1] * &y[j - 1];
            }
        }
    }
    out
}

/// Dirichlet inverse; `x[0]` must be `±1`.
pub fn dirichlet_inverse(x: &[BigInt]) -> Result<Vec<BigInt>, Error> {
    let n = x.len();
    if n == 0 {
        return Ok(vec![]);
    }
    let a1 = &x[0];
    if !(a1.is_one() || (-a1).is_one()) {
        return Err(Error::BadFactor(format!("Dirichlet series with leading coefficient {a1} has no integral inverse")));
    }
    let mut inv = vec![BigInt::zero(); n];
    inv[0] = a1.clone();
    for m in 2..=n {
        let mut acc = BigInt::zero();
        let mut d = 1;
        while d * d <= m {
            if m % d == 0 {
                let e = m / d;
                if d < m {
                    acc += &x[e - 1] * &inv[d - 1];
                }
                if e != d && e < m {
                    acc += &x[d - 1] * &inv[e - 1];
                }
            }
            d += 1;
        }
        inv[m - 1] = -(acc * a1);
    }
    Ok(inv)
}

pub fn dirichlet_pow(x: &[BigInt], e: i32) -> Result<Vec<BigInt>, Error> {
    let base = if e < 0 { dirichlet_inverse(x)? } else { x.to_vec() };
    let mut out = unit(x.len());
    for _ in 0..e.unsigned_abs() {
        out = dirichlet_mul(&out, &base);
    }
    Ok(out)
}

/// The series `1`.
pub fn unit(n: usize) -> Vec<BigInt> {
    let mut v = vec![BigInt::zero(); n];
    if n > 0 {
        v[0] = BigInt::one();
    }
    v
}

/// `r^{-s} · f`: shift coefficients to multiples of `r`.
pub fn scale_index(x: &[BigInt], r: usize) -> Vec<BigInt> {
    let n = x.len();
    let mut out = vec![BigInt::zero(); n];
    for j in 1..=n / r {
        out[r * j - 1] = x[j - 1].clone();
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub slope: f64,
    pub stderr: f64,
    pub points: usize,
}

/// Least-squares slope of `log Σ_{n≤N} a_n` against `log N` on a log-spaced
/// grid of `N` from `10^3` (or `n/100` for short tables) up to the table length.
pub fn growth_exponent(g: &GlobalCoeffs) -> GrowthEstimate {
    let sums = g.partial_sums();
    let top = g.n as f64;
    let low = 1000f64.min(top / 100.0).max(2.0);
    let steps = 24;
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for i in 0..=steps {
        let nn = (low * (top / low).powf(i as f64 / steps as f64)).round() as usize;
        let nn = nn.clamp(1, g.n);
        let s = big_ln(&sums[nn - 1]);
        if s.is_finite() && pts.last().is_none_or(|&(x, _)| x < (nn as f64).ln()) {
            pts.push(((nn as f64).ln(), s));
        }
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let resid: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let stderr = if pts.len() > 2 { (resid / (k - 2.0) / sxx).sqrt() } else { f64::NAN };
    GrowthEstimate { slope, stderr, points: pts.len() }
}

fn big_ln(x: &BigInt) -> f64 {
    if let Some(f) = x.to_f64().filter(|f| f.is_finite() && *f > 0.0) {
        return f.ln();
    }
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    let shift = bits.saturating_sub(60);
    let top: BigInt = x >> shift;
    top.to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * std::f64::consts::LN_2
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum Comparison {
    Equal { len: usize },
    Differ {
        index: usize,
        #[serde(with = "display_string")]
        left: BigInt,
        #[serde(with = "display_string")]
        right: BigInt,
    },
    /// Tables agree on their common prefix but have different lengths.
    PrefixEqual { left_len: usize, right_len: usize },
    DifferentPrime { left: u64, right: u64 },
}

impl Comparison {
    pub fn is_equal(&self) -> bool {
        matches!(self, Comparison::Equal { .. })
    }
}

mod display_string {
    use num_bigint::BigInt;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

/// First index of disagreement between two coefficient sequences.
pub fn compare_counts(x: &[BigInt], y: &[BigInt]) -> Comparison {
    for (i, (a, b)) in x.iter().zip(y).enumerate() {
        if a != b {
            return Comparison::Differ { index: i, left: a.clone(), right: b.clone() };
        }
    }
    if x.len() == y.len() {
        Comparison::Equal { len: x.len() }
    } else {
        Comparison::PrefixEqual { left_len: x.len(), right_len: y.len() }
    }
}

pub fn table_compare(x: &CoeffTable, y: &CoeffTable) -> Comparison {
    if x.p != y.p {
        return Comparison::DifferentPrime { left: x.p, right: y.p };
    }
    compare_counts(&x.counts, &y.counts)
}

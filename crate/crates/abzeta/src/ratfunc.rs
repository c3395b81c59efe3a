//! Exact polynomials and rational functions in two formal variables.
//!
//! `u` stands for the prime `p` and `X` for `p^{-s}`, so a monomial `p^{a-bs}`
//! is `u^a X^b`. Every local factor in the catalog lives in this field.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Polynomial in `u` and `X` with rational coefficients, keyed by `(deg_u, deg_X)`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PolyUX {
    terms: BTreeMap<(u32, u32), BigRational>,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl PolyUX {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(rat(1), 0, 0)
    }

    pub fn constant(c: BigRational) -> Self {
        Self::monomial(c, 0, 0)
    }

    pub fn monomial(c: BigRational, du: u32, dx: u32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((du, dx), c);
        }
        PolyUX { terms }
    }

    /// `c * u^du * X^dx` with an integer coefficient.
    pub fn mono(c: i64, du: u32, dx: u32) -> Self {
        Self::monomial(rat(c), du, dx)
    }

    pub fn from_terms<I: IntoIterator<Item = ((u32, u32), BigRational)>>(it: I) -> Self {
        let mut p = PolyUX::zero();
        for (k, c) in it {
            p.add_term(k, c);
        }
        p
    }

    fn add_term(&mut self, key: (u32, u32), c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(key).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &BigRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, du: u32, dx: u32) -> BigRational {
        self.terms.get(&(du, dx)).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn deg_x(&self) -> Option<u32> {
        self.terms.keys().map(|k| k.1).max()
    }

    pub fn deg_u(&self) -> Option<u32> {
        self.terms.keys().map(|k| k.0).max()
    }

    /// Smallest exponents of `u` and `X` occurring in any term.
    pub fn min_degrees(&self) -> Option<(u32, u32)> {
        let mu = self.terms.keys().map(|k| k.0).min()?;
        let mx = self.terms.keys().map(|k| k.1).min()?;
        Some((mu, mx))
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return PolyUX::zero();
        }
        PolyUX { terms: self.terms.iter().map(|(k, v)| (*k, v * c)).collect() }
    }

    /// Multiply by `u^du X^dx`.
    pub fn shift(&self, du: u32, dx: u32) -> Self {
        PolyUX { terms: self.terms.iter().map(|((a, b), v)| ((a + du, b + dx), v.clone())).collect() }
    }

    /// Divide by `u^du X^dx`; every term must be divisible.
    fn unshift(&self, du: u32, dx: u32) -> Self {
        PolyUX {
            terms: self
                .terms
                .iter()
                .map(|((a, b), v)| ((a - du, b - dx), v.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = PolyUX::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// `u -> 1/u, X -> 1/X`, then multiply by `u^A X^B` with `A, B` the degrees.
    /// Returns the cleared polynomial together with `(A, B)`.
    pub fn reflect(&self) -> (Self, u32, u32) {
        let a = self.deg_u().unwrap_or(0);
        let b = self.deg_x().unwrap_or(0);
        let p = PolyUX { terms: self.terms.iter().map(|((i, j), v)| ((a - i, b - j), v.clone())).collect() };
        (p, a, b)
    }

    /// Specialize `u = p`, giving the coefficients of a polynomial in `X`.
    pub fn eval_u(&self, p: &BigRational) -> Vec<BigRational> {
        let len = self.deg_x().map(|d| d as usize + 1).unwrap_or(0);
        let mut out = vec![BigRational::zero(); len];
        for ((du, dx), c) in &self.terms {
            out[*dx as usize] += c * num_traits::pow(p.clone(), *du as usize);
        }
        out
    }

    /// Exact division by `1 - s * u^j X^a` (`s = ±1`, `a ≥ 1`) if it divides.
    fn div_binomial(&self, s: i64, j: u32, a: u32) -> Option<Self> {
        let dx = self.deg_x()?;
        if dx < a {
            return None;
        }
        // f / (1 - m) = f (1 + m + m^2 + ...) truncated at X-degree dx - a.
        let limit = dx - a;
        let m = PolyUX::mono(s, j, a);
        let mut q = PolyUX::zero();
        let mut term = self.clone();
        loop {
            let trimmed = PolyUX::from_terms(
                term.terms.iter().filter(|(k, _)| k.1 <= limit).map(|(k, v)| (*k, v.clone())),
            );
            if trimmed.is_zero() {
                break;
            }
            q = &q + &trimmed;
            term = &trimmed * &m;
        }
        let check = &q * &(&PolyUX::one() - &m);
        if &check == self {
            Some(q)
        } else {
            None
        }
    }

    fn fmt_terms(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((du, dx), c) in &self.terms {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let unit = mag.is_one();
            if !unit || (*du == 0 && *dx == 0) {
                write!(f, "{}", mag)?;
            }
            let mut wrote_factor = !unit;
            for (name, d) in [("u", *du), ("X", *dx)] {
                if d == 0 {
                    continue;
                }
                if wrote_factor {
                    write!(f, "*")?;
                }
                wrote_factor = true;
                if d == 1 {
                    write!(f, "{}", name)?;
                } else {
                    write!(f, "{}^{}", name, d)?;
                }
            }
        }
        Ok(())
    }

    /// Terms in `(deg_u, deg_X)` order as JSON-friendly records.
    pub fn to_records(&self) -> Vec<TermRecord> {
        self.terms
            .iter()
            .map(|((du, dx), c)| TermRecord { u: *du, x: *dx, c: c.to_string() })
            .collect()
    }
}

impl fmt::Display for PolyUX {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_terms(f)
    }
}

impl<'a> Add<&'a PolyUX> for &'a PolyUX {
    type Output = PolyUX;
    fn add(self, rhs: &PolyUX) -> PolyUX {
        let mut out = self.clone();
        for (k, v) in &rhs.terms {
            out.add_term(*k, v.clone());
        }
        out
    }
}

impl<'a> Sub<&'a PolyUX> for &'a PolyUX {
    type Output = PolyUX;
    fn sub(self, rhs: &PolyUX) -> PolyUX {
        let mut out = self.clone();
        for (k, v) in &rhs.terms {
            out.add_term(*k, -v.clone());
        }
        out
    }
}

impl<'a> Mul<&'a PolyUX> for &'a PolyUX {
    type Output = PolyUX;
    fn mul(self, rhs: &PolyUX) -> PolyUX {
        let mut out = PolyUX::zero();
        for ((a, b), v) in &self.terms {
            for ((c, d), w) in &rhs.terms {
                out.add_term((a + c, b + d), v * w);
            }
        }
        out
    }
}

impl Neg for &PolyUX {
    type Output = PolyUX;
    fn neg(self) -> PolyUX {
        PolyUX { terms: self.terms.iter().map(|(k, v)| (*k, -v.clone())).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolyOp {
    Add,
    Sub,
    Mul,
}

pub fn poly_arith(lhs: &PolyUX, rhs: &PolyUX, op: PolyOp) -> PolyUX {
    match op {
        PolyOp::Add => lhs + rhs,
        PolyOp::Sub => lhs - rhs,
        PolyOp::Mul => lhs * rhs,
    }
}

/// One term in the JSON dump: coefficient as an exact `p/q` string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRecord {
    pub u: u32,
    pub x: u32,
    pub c: String,
}

/// Quotient of two [`PolyUX`]. Equality is decided by cross-multiplication.
#[derive(Clone, Debug)]
pub struct RationalUX {
    num: PolyUX,
    den: PolyUX,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalRecord {
    pub numerator: Vec<TermRecord>,
    pub denominator: Vec<TermRecord>,
}

impl RationalUX {
    pub fn new(num: PolyUX, den: PolyUX) -> Result<Self, Error> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(RationalUX { num, den }.canonical())
    }

    pub fn from_poly(p: PolyUX) -> Self {
        RationalUX { num: p, den: PolyUX::one() }
    }

    pub fn one() -> Self {
        Self::from_poly(PolyUX::one())
    }

    pub fn zero() -> Self {
        Self::from_poly(PolyUX::zero())
    }

    /// `c u^du X^dx` as a rational function.
    pub fn mono(c: i64, du: u32, dx: u32) -> Self {
        Self::from_poly(PolyUX::mono(c, du, dx))
    }

    pub fn numerator(&self) -> &PolyUX {
        &self.num
    }

    pub fn denominator(&self) -> &PolyUX {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Cancel common binomial factors `1 ± u^j X^a` and make the denominator's
    /// lowest term positive. Best effort only.
    fn canonical(mut self) -> Self {
        if self.num.is_zero() {
            return RationalUX::zero();
        }
        // Pull out common monomials.
        if let (Some((nu, nx)), Some((du, dx))) = (self.num.min_degrees(), self.den.min_degrees()) {
            let (cu, cx) = (nu.min(du), nx.min(dx));
            if cu > 0 || cx > 0 {
                self.num = self.num.unshift(cu, cx);
                self.den = self.den.unshift(cu, cx);
            }
        }
        let mut changed = true;
        while changed {
            changed = false;
            'outer: for a in 1..=4u32 {
                for j in 0..=6u32 {
                    for s in [1i64, -1] {
                        if let (Some(n), Some(d)) =
                            (self.num.div_binomial(s, j, a), self.den.div_binomial(s, j, a))
                        {
                            self.num = n;
                            self.den = d;
                            changed = true;
                            break 'outer;
                        }
                    }
                }
            }
        }
        // Normalize so the denominator's first term (in key order) is positive.
        if let Some((_, c)) = self.den.terms.iter().next() {
            if c.is_negative() {
                self.num = -&self.num;
                self.den = -&self.den;
            }
        }
        self
    }

    pub fn inv(&self) -> Result<Self, Error> {
        RationalUX::new(self.den.clone(), self.num.clone())
    }

    pub fn pow(&self, n: i32) -> Result<Self, Error> {
        let base = if n < 0 { self.inv()? } else { self.clone() };
        let e = n.unsigned_abs();
        Ok(RationalUX { num: base.num.pow(e), den: base.den.pow(e) }.canonical())
    }

    pub fn div(&self, rhs: &RationalUX) -> Result<Self, Error> {
        Ok(self * &rhs.inv()?)
    }

    /// `u -> 1/u`, `X -> 1/X` with the resulting monomials cleared.
    pub fn substitute_inverse(&self) -> RationalUX {
        let (n, na, nb) = self.num.reflect();
        let (d, da, db) = self.den.reflect();
        // f(1/u,1/X) = (n / u^na X^nb) / (d / u^da X^db) = n u^da X^db / (d u^na X^nb)
        let (cu, cx) = (na.min(da), nb.min(db));
        let num = n.shift(da - cu, db - cx);
        let den = d.shift(na - cu, nb - cx);
        RationalUX { num, den }.canonical()
    }

    /// Expand at `u = p` as a power series in `X` up to `X^m`.
    pub fn series_expand(&self, p: u64, m: usize) -> Result<Vec<BigRational>, Error> {
        let pr = rat(p as i64);
        let num = self.num.eval_u(&pr);
        let den = self.den.eval_u(&pr);
        let d0 = den.first().cloned().unwrap_or_else(BigRational::zero);
        if d0.is_zero() {
            return Err(Error::SeriesPole { factor: self.to_string() });
        }
        let mut out: Vec<BigRational> = Vec::with_capacity(m + 1);
        for n in 0..=m {
            let mut acc = num.get(n).cloned().unwrap_or_else(BigRational::zero);
            for (i, di) in den.iter().enumerate().skip(1) {
                if i > n {
                    break;
                }
                acc -= di * &out[n - i];
            }
            out.push(acc / &d0);
        }
        Ok(out)
    }

    /// Same as [`series_expand`](Self::series_expand) but insists on integer coefficients.
    pub fn series_integers(&self, p: u64, m: usize) -> Result<Vec<BigInt>, Error> {
        self.series_expand(p, m)?
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                if c.is_integer() {
                    Ok(c.to_integer())
                } else {
                    Err(Error::NonIntegral { index: i, value: c.to_string() })
                }
            })
            .collect()
    }

    pub fn to_record(&self) -> RationalRecord {
        RationalRecord { numerator: self.num.to_records(), denominator: self.den.to_records() }
    }

    pub fn from_record(r: &RationalRecord) -> Result<Self, Error> {
        let parse = |ts: &[TermRecord]| -> Result<PolyUX, Error> {
            let mut p = PolyUX::zero();
            for t in ts {
                let c: BigRational = t.c.parse().map_err(|_| Error::Parse(t.c.clone()))?;
                p.add_term((t.u, t.x), c);
            }
            Ok(p)
        };
        RationalUX::new(parse(&r.numerator)?, parse(&r.denominator)?)
    }

    /// Evaluate numerically at real `u` and `X`; for diagnostics only.
    pub fn eval_f64(&self, u: f64, x: f64) -> f64 {
        let ev = |p: &PolyUX| -> f64 {
            p.terms
                .iter()
                .map(|((a, b), c)| c.to_f64().unwrap_or(f64::NAN) * u.powi(*a as i32) * x.powi(*b as i32))
                .sum()
        };
        ev(&self.num) / ev(&self.den)
    }
}

impl PartialEq for RationalUX {
    fn eq(&self, other: &Self) -> bool {
        &self.num * &other.den == &other.num * &self.den
    }
}

impl fmt::Display for RationalUX {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == PolyUX::one() {
            return write!(f, "{}", self.num);
        }
        write!(f, "({})/({})", self.num, self.den)
    }
}

impl<'a> Mul<&'a RationalUX> for &'a RationalUX {
    type Output = RationalUX;
    fn mul(self, rhs: &RationalUX) -> RationalUX {
        RationalUX { num: &self.num * &rhs.num, den: &self.den * &rhs.den }.canonical()
    }
}

impl<'a> Add<&'a RationalUX> for &'a RationalUX {
    type Output = RationalUX;
    fn add(self, rhs: &RationalUX) -> RationalUX {
        if self.den == rhs.den {
            return RationalUX { num: &self.num + &rhs.num, den: self.den.clone() }.canonical();
        }
        let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
        RationalUX { num, den: &self.den * &rhs.den }.canonical()
    }
}

impl<'a> Sub<&'a RationalUX> for &'a RationalUX {
    type Output = RationalUX;
    fn sub(self, rhs: &RationalUX) -> RationalUX {
        self + &(-rhs)
    }
}

impl Neg for &RationalUX {
    type Output = RationalUX;
    fn neg(self) -> RationalUX {
        RationalUX { num: -&self.num, den: self.den.clone() }
    }
}

/// Local factor `ζ_p(as + b) = 1/(1 - u^{-b} X^a)`.
pub fn zeta_factor(a: u32, b: i32) -> Result<RationalUX, Error> {
    if a == 0 {
        return Err(Error::BadFactor(format!("Z({a},{b}): a must be positive")));
    }
    if b > 0 {
        return Err(Error::BadFactor(format!("Z({a},{b}): b must be <= 0")));
    }
    let den = &PolyUX::one() - &PolyUX::mono(1, (-b) as u32, a);
    Ok(RationalUX { num: PolyUX::one(), den })
}

/// Local factor `L(as + b, χ, p) = 1/(1 - χ(p) u^{-b} X^a)` for a given `χ(p)`.
pub fn l_factor(a: u32, b: i32, chi_value: i8) -> Result<RationalUX, Error> {
    if a == 0 || b > 0 {
        return Err(Error::BadFactor(format!("L({a},{b}): need a > 0 and b <= 0")));
    }
    if !(-1..=1).contains(&chi_value) {
        return Err(Error::BadFactor(format!("character value {chi_value} not in {{-1,0,1}}")));
    }
    if chi_value == 0 {
        return Ok(RationalUX::one());
    }
    let den = &PolyUX::one() - &PolyUX::mono(chi_value as i64, (-b) as u32, a);
    Ok(RationalUX { num: PolyUX::one(), den })
}

/// Standalone form of [`RationalUX::series_expand`].
pub fn series_expand(f: &RationalUX, p: u64, m: usize) -> Result<Vec<BigRational>, Error> {
    f.series_expand(p, m)
}

/// Standalone form of [`RationalUX::substitute_inverse`].
pub fn substitute_inverse(f: &RationalUX) -> RationalUX {
    f.substitute_inverse()
}

/// Cauchy product of two truncated series.
pub fn convolve(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().min(b.len());
    (0..n)
        .map(|i| (0..=i).fold(BigRational::zero(), |acc, j| acc + &a[j] * &b[i - j]))
        .collect()
}

//! Families of groups with their presentations, local zeta functions,
//! global formulas and functional equations.
//!
//! Every entry carries the closed forms as they were printed and, where the
//! brute-force counts disagree, the confirmed form together with an
//! [`Erratum`] saying which printed display is wrong.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::groupalg::{self, Presentation};
use crate::membership::vp;
use crate::oracle::{CoeffTable, Provenance};
use crate::ratfunc::{l_factor, zeta_factor, PolyUX, RationalUX};
use crate::series::{self, depth_for, dirichlet_mul, dirichlet_pow, is_prime, multiplicative, GlobalCoeffs};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chi {
    Trivial,
    Chi3,
    Chi4,
}

impl Chi {
    /// Residue character value; ramified primes give 0.
    pub fn value(self, p: u64) -> i8 {
        match self {
            Chi::Trivial => 1,
            Chi::Chi3 => [0, 1, -1][(p % 3) as usize],
            Chi::Chi4 => [0, 1, 0, -1][(p % 4) as usize],
        }
    }
}

impl fmt::Display for Chi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Chi::Trivial => "1",
            Chi::Chi3 => "chi3",
            Chi::Chi4 => "chi4",
        })
    }
}

/// Which parameter a valuation `v` refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Val {
    K,
    Q,
}

/// Exponent `c + d·v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Affine {
    pub c: u32,
    pub d: u32,
}

impl Affine {
    pub const fn fixed(c: u32) -> Self {
        Affine { c, d: 0 }
    }

    fn at(self, v: u32) -> u32 {
        self.c + self.d * v
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.c, self.d) {
            (c, 0) => write!(f, "{c}"),
            (0, 1) => write!(f, "v"),
            (0, d) => write!(f, "{d}v"),
            (c, 1) => write!(f, "v+{c}"),
            (c, d) => write!(f, "{d}v+{c}"),
        }
    }
}

/// Symbolic local factor. Evaluates to a [`RationalUX`] once the prime, its
/// character values and the relevant valuations are known.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalExpr {
    /// `ζ_p(as + b) = 1/(1 - u^{-b} X^a)`.
    Zeta { a: u32, b: i32 },
    /// `L(as + b, χ, p)`.
    L { a: u32, b: i32, chi: Chi },
    /// `ζ_ℓ(as + b)` for a fixed prime `ℓ`, read as a series in the local `X`.
    /// Only used to record misprinted subscripts.
    ZetaAt { prime: u64, a: u32, b: i32 },
    /// `c u^{e_u} X^{e_x}` with exponents affine in a valuation. When that
    /// valuation is infinite (parameter 0) the monomial is 0.
    Mono { c: i64, u: Affine, x: Affine, val: Val },
    /// `χ(p) + add`.
    ChiShift { chi: Chi, add: i64 },
    Sum(Vec<LocalExpr>),
    Prod(Vec<LocalExpr>),
    Pow(Box<LocalExpr>, i32),
}

/// Everything a [`LocalExpr`] needs at one prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LocalCtx {
    pub p: u64,
    /// `v_p(k)`, `None` for `k = 0`.
    pub vk: Option<u32>,
    /// `v_p(q)`, `None` if `q = 0`.
    pub vq: Option<u32>,
}

impl LocalCtx {
    pub fn new(p: u64, k: i64, q: i64) -> Self {
        let v = |n: i64| if n == 0 { None } else { Some(vp(n.unsigned_abs() as u128, p)) };
        LocalCtx { p, vk: v(k), vq: v(q) }
    }
}

impl LocalExpr {
    pub fn eval(&self, cx: &LocalCtx) -> Result<RationalUX, Error> {
        Ok(match self {
            LocalExpr::Zeta { a, b } => zeta_factor(*a, *b)?,
            LocalExpr::L { a, b, chi } => l_factor(*a, *b, chi.value(cx.p))?,
            LocalExpr::ZetaAt { prime, a, b } => {
                let c = (*prime as i64).pow(b.unsigned_abs());
                RationalUX::new(PolyUX::one(), &PolyUX::one() - &PolyUX::mono(c, 0, *a))?
            }
            LocalExpr::Mono { c, u, x, val } => {
                let v = match val {
                    Val::K => cx.vk,
                    Val::Q => cx.vq,
                };
                match v {
                    Some(v) => RationalUX::mono(*c, u.at(v), x.at(v)),
                    None if u.d == 0 && x.d == 0 => RationalUX::mono(*c, u.c, x.c),
                    // X^{d v} -> 0 as v -> ∞.
                    None if x.d > 0 => RationalUX::zero(),
                    None => return Err(Error::BadFactor(format!("monomial {self} needs a finite valuation"))),
                }
            }
            LocalExpr::ChiShift { chi, add } => RationalUX::mono(chi.value(cx.p) as i64 + add, 0, 0),
            LocalExpr::Sum(xs) => {
                let mut acc = RationalUX::zero();
                for e in xs {
                    acc = &acc + &e.eval(cx)?;
                }
                acc
            }
            LocalExpr::Prod(xs) => {
                let mut acc = RationalUX::one();
                for e in xs {
                    acc = &acc * &e.eval(cx)?;
                }
                acc
            }
            LocalExpr::Pow(b, e) => b.eval(cx)?.pow(*e)?,
        })
    }

    /// True if the value depends on a valuation.
    fn uses_val(&self, which: Val) -> bool {
        match self {
            LocalExpr::Mono { val, u, x, .. } => *val == which && (u.d > 0 || x.d > 0),
            LocalExpr::Sum(xs) | LocalExpr::Prod(xs) => xs.iter().any(|e| e.uses_val(which)),
            LocalExpr::Pow(b, _) => b.uses_val(which),
            _ => false,
        }
    }

    fn chis(&self, out: &mut Vec<Chi>) {
        match self {
            LocalExpr::L { chi, .. } | LocalExpr::ChiShift { chi, .. } => {
                if !out.contains(chi) {
                    out.push(*chi)
                }
            }
            LocalExpr::Sum(xs) | LocalExpr::Prod(xs) => xs.iter().for_each(|e| e.chis(out)),
            LocalExpr::Pow(b, _) => b.chis(out),
            _ => {}
        }
    }
}

impl fmt::Display for LocalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalExpr::Zeta { a, b } => write!(f, "Z({a},{b})"),
            LocalExpr::L { a, b, chi } => write!(f, "L({a},{b};{chi})"),
            LocalExpr::ZetaAt { prime, a, b } => write!(f, "Z_{prime}({a},{b})"),
            LocalExpr::Mono { c, u, x, .. } => {
                let mut parts = vec![];
                if *c != 1 || (u.c == 0 && u.d == 0 && x.c == 0 && x.d == 0) {
                    parts.push(c.to_string());
                }
                if u.c != 0 || u.d != 0 {
                    parts.push(format!("u^{{{u}}}"));
                }
                if x.c != 0 || x.d != 0 {
                    parts.push(format!("X^{{{x}}}"));
                }
                f.write_str(&parts.join("*"))
            }
            LocalExpr::ChiShift { chi, add } => write!(f, "({chi}{add:+})"),
            LocalExpr::Sum(xs) => {
                let s: Vec<String> = xs.iter().map(|e| e.to_string()).collect();
                write!(f, "({})", s.join(" + "))
            }
            LocalExpr::Prod(xs) => {
                let s: Vec<String> = xs.iter().map(|e| e.to_string()).collect();
                f.write_str(&s.join("*"))
            }
            LocalExpr::Pow(b, e) => match **b {
                LocalExpr::Zeta { .. } | LocalExpr::L { .. } | LocalExpr::ZetaAt { .. } => write!(f, "{b}^{e}"),
                _ => write!(f, "[{b}]^{e}"),
            },
        }
    }
}

// Shorthand constructors. `z(a, j)` is `ζ_p(as - j)`.

pub fn z(a: u32, j: i32) -> LocalExpr {
    LocalExpr::Zeta { a, b: -j }
}

pub fn lchi(a: u32, j: i32, chi: Chi) -> LocalExpr {
    LocalExpr::L { a, b: -j, chi }
}

pub fn mono(c: i64, u: u32, x: u32) -> LocalExpr {
    LocalExpr::Mono { c, u: Affine::fixed(u), x: Affine::fixed(x), val: Val::K }
}

/// `c u^{uc + ud·v} X^{xc + xd·v}`.
pub fn vmono(c: i64, u: (u32, u32), x: (u32, u32), val: Val) -> LocalExpr {
    LocalExpr::Mono { c, u: Affine { c: u.0, d: u.1 }, x: Affine { c: x.0, d: x.1 }, val }
}

pub fn prod(xs: Vec<LocalExpr>) -> LocalExpr {
    LocalExpr::Prod(xs)
}

pub fn sum(xs: Vec<LocalExpr>) -> LocalExpr {
    LocalExpr::Sum(xs)
}

pub fn pow(b: LocalExpr, e: i32) -> LocalExpr {
    LocalExpr::Pow(Box::new(b), e)
}

pub fn one() -> LocalExpr {
    mono(1, 0, 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Guard {
    Prime(u64),
    Generic,
}

impl Guard {
    fn admits(self, p: u64) -> bool {
        match self {
            Guard::Prime(q) => p == q,
            Guard::Generic => true,
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::Prime(q) => write!(f, "p={q}"),
            Guard::Generic => f.write_str("otherwise"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub guard: Guard,
    pub expr: LocalExpr,
}

/// Piecewise local factor; the first branch whose guard admits `p` applies,
/// and the last branch is always `Generic`, so the branches partition the primes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalFactorRule {
    pub branches: Vec<Branch>,
}

impl LocalFactorRule {
    pub fn new(special: Vec<(u64, LocalExpr)>, generic: LocalExpr) -> Self {
        let mut branches: Vec<Branch> = special.into_iter().map(|(p, expr)| Branch { guard: Guard::Prime(p), expr }).collect();
        branches.push(Branch { guard: Guard::Generic, expr: generic });
        LocalFactorRule { branches }
    }

    pub fn generic(expr: LocalExpr) -> Self {
        Self::new(vec![], expr)
    }

    pub fn select(&self, p: u64) -> &LocalExpr {
        &self.branches.iter().find(|b| b.guard.admits(p)).expect("last branch is generic").expr
    }

    pub fn eval(&self, cx: &LocalCtx) -> Result<RationalUX, Error> {
        self.select(cx.p).eval(cx)
    }
}

/// `f(1/u, 1/X) = sign · χ(p) · u^c X^3 · f(u, X)` for almost all `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionalEquationRule {
    pub sign: i8,
    pub c: u32,
    pub chi: Chi,
}

impl FunctionalEquationRule {
    pub const fn new(c: u32, chi: Chi) -> Self {
        FunctionalEquationRule { sign: -1, c, chi }
    }
}

impl fmt::Display for FunctionalEquationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.sign < 0 { "-" } else { "" };
        match self.chi {
            Chi::Trivial => write!(f, "{s}u^{}X^3", self.c),
            chi => write!(f, "{s}{chi}(p)u^{}X^3", self.c),
        }
    }
}

/// Set of primes an Euler product runs over.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrimeSet {
    All,
    AllExcept(Vec<u64>),
    Only(Vec<u64>),
    /// Primes dividing the parameter, together with `also`, minus `except`.
    Dividing { of: Val, also: Vec<u64>, except: Vec<u64> },
}

impl PrimeSet {
    fn contains(&self, p: u64, k: i64, q: i64) -> bool {
        match self {
            PrimeSet::All => true,
            PrimeSet::AllExcept(xs) => !xs.contains(&p),
            PrimeSet::Only(xs) => xs.contains(&p),
            PrimeSet::Dividing { of, also, except } => {
                let n = match of {
                    Val::K => k,
                    Val::Q => q,
                };
                (n % p as i64 == 0 || also.contains(&p)) && !except.contains(&p)
            }
        }
    }
}

impl fmt::Display for PrimeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |xs: &[u64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            PrimeSet::All => f.write_str("all p"),
            PrimeSet::AllExcept(xs) => write!(f, "p∉{{{}}}", list(xs)),
            PrimeSet::Only(xs) => write!(f, "p∈{{{}}}", list(xs)),
            PrimeSet::Dividing { of, also, except } => {
                let n = if *of == Val::K { "k" } else { "q" };
                write!(f, "p|{n}")?;
                if !also.is_empty() {
                    write!(f, " or p∈{{{}}}", list(also))?;
                }
                if !except.is_empty() {
                    write!(f, ", p∉{{{}}}", list(except))?;
                }
                Ok(())
            }
        }
    }
}

/// One factor `(Π_{p ∈ primes} factor_p)^exp` of a global formula.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalTerm {
    pub primes: PrimeSet,
    pub factor: LocalExpr,
    pub exp: i32,
}

/// A global zeta function written as a product of Euler products.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalExpr {
    pub terms: Vec<GlobalTerm>,
}

impl GlobalExpr {
    pub fn new() -> Self {
        GlobalExpr { terms: vec![] }
    }

    /// `ζ(as - j)^e` over all primes.
    pub fn zeta(mut self, a: u32, j: i32, exp: i32) -> Self {
        self.terms.push(GlobalTerm { primes: PrimeSet::All, factor: z(a, j), exp });
        self
    }

    pub fn l(mut self, a: u32, j: i32, chi: Chi, exp: i32) -> Self {
        self.terms.push(GlobalTerm { primes: PrimeSet::All, factor: lchi(a, j, chi), exp });
        self
    }

    pub fn at(mut self, p: u64, factor: LocalExpr, exp: i32) -> Self {
        self.terms.push(GlobalTerm { primes: PrimeSet::Only(vec![p]), factor, exp });
        self
    }

    pub fn euler(mut self, primes: PrimeSet, factor: LocalExpr, exp: i32) -> Self {
        self.terms.push(GlobalTerm { primes, factor, exp });
        self
    }

    /// Dirichlet coefficients `a_1..a_n`, each term expanded separately and
    /// combined by Dirichlet convolution.
    pub fn expand(&self, k: i64, q: i64, n: usize) -> Result<Vec<BigInt>, Error> {
        let mut acc = series::unit(n);
        for t in &self.terms {
            let mut err = None;
            let a = multiplicative(n, |p, e| {
                if !t.primes.contains(p, k, q) {
                    return if e == 0 { BigInt::from(1) } else { BigInt::zero() };
                }
                let cx = LocalCtx::new(p, k, q);
                match t.factor.eval(&cx).and_then(|f| f.series_integers(p, e)) {
                    Ok(c) => c[e].clone(),
                    Err(x) => {
                        err.get_or_insert(x);
                        BigInt::zero()
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            acc = dirichlet_mul(&acc, &dirichlet_pow(&a, t.exp)?);
        }
        Ok(acc)
    }
}

impl Default for GlobalExpr {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Display for GlobalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| {
                let e = if t.exp == 1 { String::new() } else { format!("^{}", t.exp) };
                match &t.primes {
                    PrimeSet::All => match &t.factor {
                        LocalExpr::Zeta { a, b } => format!("zeta({a},{b}){e}"),
                        LocalExpr::L { a, b, chi } => format!("L({a},{b};{chi}){e}"),
                        other => format!("Prod_p[{other}]{e}"),
                    },
                    PrimeSet::Only(ps) if ps.len() == 1 => format!("[{}]_{}{e}", t.factor, ps[0]),
                    set => format!("Prod_{{{set}}}[{}]{e}", t.factor),
                }
            })
            .collect();
        f.write_str(&parts.join(" * "))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErratumScope {
    /// A printed local factor disagrees with the subgroup counts.
    LocalFactor,
    /// A printed global formula disagrees with the product of local factors.
    Global,
    /// A printed functional equation fails.
    FunctionalEquation,
    /// A printed relation had to be changed for the translated conditions to hold.
    Presentation,
    /// Typographical issue with no effect on any value (labels, missing prefactors).
    Notation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Erratum {
    pub scope: ErratumScope,
    /// The printed display, transcribed.
    pub printed: String,
    /// What the counts support instead.
    pub confirmed: String,
    pub note: String,
}

fn erratum(scope: ErratumScope, printed: &str, confirmed: &str, note: &str) -> Erratum {
    Erratum { scope, printed: printed.into(), confirmed: confirmed.into(), note: note.into() }
}

/// Static description of one family of groups, independent of its parameter.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FamilyKind {
    pub name: &'static str,
    pub display: &'static str,
    pub param: Option<&'static str>,
    pub k_shape: &'static str,
    pub holonomy: &'static str,
    pub holonomy_order: usize,
}

const fn kind(
    name: &'static str,
    display: &'static str,
    param: Option<&'static str>,
    k_shape: &'static str,
    holonomy: &'static str,
    holonomy_order: usize,
) -> FamilyKind {
    FamilyKind { name, display, param, k_shape, holonomy, holonomy_order }
}

pub const KINDS: &[FamilyKind] = &[
    kind("N", "N_k", Some("k"), "k≥0", "1", 1),
    kind("G2", "𝔊₂", None, "k=0", "C2", 2),
    kind("G3", "𝔊₃", None, "k=0", "C3", 3),
    kind("G4", "𝔊₄", None, "k=0", "C4", 4),
    kind("G5", "𝔊₅", None, "k=0", "C6", 6),
    kind("G6", "𝔊₆", None, "k=0", "C2xC2", 4),
    kind("B1", "𝔅₁", None, "k=0", "C2", 2),
    kind("B2", "𝔅₂", None, "k=0", "C2", 2),
    kind("B3", "𝔅₃", None, "k=0", "C2xC2", 4),
    kind("B4", "𝔅₄", None, "k=0", "C2xC2", 4),
    kind("p2", "Q=p2", Some("q"), "k=2q", "C2", 2),
    kind("pg", "Q=pg", Some("q"), "k=2q", "C2", 2),
    kind("p2gg", "Q=p2gg", Some("q"), "k=4q", "C2xC2", 4),
    kind("p4E", "Q=p4 E", Some("q"), "k=2q, ε=2", "C4", 4),
    kind("p4F", "Q=p4 F", Some("q"), "k=4q, ε=4", "C4", 4),
    kind("p3E", "Q=p3 E", Some("q"), "k=3q, ε=1", "C3", 3),
    kind("p3F", "Q=p3 F", Some("q"), "k=3q, ε=2", "C3", 3),
    kind("p3G", "Q=p3 G", Some("r"), "k=r, 3∤r, ε=1, δ=1", "C3", 3),
    kind("p6E", "Q=p6 E", Some("q"), "k=6q, ε=1", "C6", 6),
    kind("p6F", "Q=p6 F", Some("q"), "k=6q+4, ε=1", "C6", 6),
    kind("p6G", "Q=p6 G", Some("q"), "k=6q, ε=5", "C6", 6),
    kind("p6H", "Q=p6 H", Some("q"), "k=6q+2, ε=5", "C6", 6),
];

pub fn find_kind(name: &str) -> Option<&'static FamilyKind> {
    KINDS.iter().find(|k| k.name.eq_ignore_ascii_case(name))
}

/// One catalog entry: a family at a concrete parameter value.
#[derive(Clone, Debug, Serialize)]
pub struct FamilySpec {
    pub name: String,
    pub display: String,
    pub params: Vec<(String, i64)>,
    pub k: i64,
    /// The parameter the printed formulas call `q`; equals `k` where none is named.
    pub q: i64,
    pub holonomy: String,
    pub holonomy_order: usize,
    pub presentation: Presentation,
    /// Local factor of the relative zeta function, confirmed by the counts.
    pub local: LocalFactorRule,
    /// Local factor as printed, where it differs from `local`.
    pub printed_local: Option<LocalFactorRule>,
    pub fe: FunctionalEquationRule,
    pub printed_fe: Option<FunctionalEquationRule>,
    pub abscissa: u32,
    pub global: GlobalExpr,
    pub printed_global: GlobalExpr,
    pub errata: Vec<Erratum>,
}

impl FamilySpec {
    pub fn params_label(&self) -> String {
        self.params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",")
    }

    pub fn label(&self) -> String {
        if self.params.is_empty() {
            self.name.clone()
        } else {
            format!("{}[{}]", self.name, self.params_label())
        }
    }

    pub fn ctx(&self, p: u64) -> LocalCtx {
        LocalCtx::new(p, self.k, self.q)
    }

    pub fn printed_local_rule(&self) -> &LocalFactorRule {
        self.printed_local.as_ref().unwrap_or(&self.local)
    }

    pub fn printed_fe_rule(&self) -> FunctionalEquationRule {
        self.printed_fe.unwrap_or(self.fe)
    }

    pub fn errata_of(&self, scope: ErratumScope) -> impl Iterator<Item = &Erratum> {
        self.errata.iter().filter(move |e| e.scope == scope)
    }

    /// Good primes for the functional equation: `p ∤ 6k` (`p ∤ 6` when `k = 0`).
    pub fn fe_guard(&self, p: u64) -> bool {
        p > 3 && (self.k == 0 || self.k % p as i64 != 0)
    }

    pub fn characters(&self) -> Vec<Chi> {
        let mut v = vec![];
        for b in &self.local.branches {
            b.expr.chis(&mut v);
        }
        v
    }

    /// JSON record with both the expression trees and their text forms.
    pub fn to_json(&self) -> serde_json::Value {
        let rule_text = |r: &LocalFactorRule| -> Vec<serde_json::Value> {
            r.branches
                .iter()
                .map(|b| serde_json::json!({"guard": b.guard.to_string(), "factor": b.expr.to_string()}))
                .collect()
        };
        let mut v = serde_json::to_value(self).expect("plain data serializes");
        let obj = v.as_object_mut().expect("struct");
        obj.insert("k_shape".into(), find_kind(&self.name).map(|k| k.k_shape).into());
        obj.insert("local_text".into(), rule_text(&self.local).into());
        if let Some(r) = &self.printed_local {
            obj.insert("printed_local_text".into(), rule_text(r).into());
        }
        obj.insert("global_text".into(), self.global.to_string().into());
        obj.insert("printed_global_text".into(), self.printed_global.to_string().into());
        obj.insert("fe_text".into(), self.fe.to_string().into());
        obj.insert(
            "generic_local_record".into(),
            self.local.select(u64::MAX).eval(&LocalCtx { p: 5, vk: Some(0), vq: Some(0) }).map(|f| serde_json::to_value(f.to_record()).unwrap()).unwrap_or_default(),
        );
        v
    }
}

// Building blocks shared by several families.

/// `ζ_p(s-2)(ζ_p(s)ζ_p(s-1) - u^{2(v+1)} X^{v+1} ζ_p(2s-2)ζ_p(2s-3))`, the
/// local factor of `N_k` with `v = v_p(k)`.
fn nk_local(val: Val) -> LocalExpr {
    prod(vec![z(1, 2), nk_bracket(Some(val))])
}

/// `ζ_p(s)ζ_p(s-1) - u^{2(v+1)} X^{v+1} ζ_p(2s-2)ζ_p(2s-3)`; `None` means `v = 0`.
fn nk_bracket(val: Option<Val>) -> LocalExpr {
    let m = match val {
        Some(val) => vmono(-1, (2, 2), (1, 1), val),
        None => mono(-1, 2, 1),
    };
    sum(vec![prod(vec![z(1, 0), z(1, 1)]), prod(vec![m, z(2, 2), z(2, 3)])])
}

/// `ζ_p(s-1)ζ_p(s-2) - X^{v+1} ζ_p(2s-1)ζ_p(2s-2)`.
fn p2_bracket(val: Option<Val>) -> LocalExpr {
    let m = match val {
        Some(val) => vmono(-1, (0, 0), (1, 1), val),
        None => mono(-1, 0, 1),
    };
    sum(vec![prod(vec![z(1, 1), z(1, 2)]), prod(vec![m, z(2, 1), z(2, 2)])])
}

/// `ζ_p(s-1)^2 - u^{v+1} X^{v+1} ζ_p(2s-2)^2`.
fn p2gg_bracket(val: Option<Val>) -> LocalExpr {
    let m = match val {
        Some(val) => vmono(-1, (1, 1), (1, 1), val),
        None => mono(-1, 1, 1),
    };
    sum(vec![pow(z(1, 1), 2), prod(vec![m, pow(z(2, 2), 2)])])
}

/// `ζ_p(s)(ζ_p(2s-2) - X^{v+1}ζ_p(4s-2)) + (χ(p)+1)ζ_p(s) uX (ζ_p(s-1)ζ_p(2s-2) - X^{v+2}ζ_p(4s-2)ζ_p(2s-1))`,
/// the generic factor shared by the rotation families.
fn rotation_local(chi: Chi, val: Val) -> LocalExpr {
    let case1 = prod(vec![z(1, 0), sum(vec![z(2, 2), prod(vec![vmono(-1, (0, 0), (1, 1), val), z(4, 2)])])]);
    let case2 = prod(vec![
        LocalExpr::ChiShift { chi, add: 1 },
        z(1, 0),
        mono(1, 1, 1),
        sum(vec![prod(vec![z(1, 1), z(2, 2)]), prod(vec![vmono(-1, (0, 0), (2, 1), val), z(4, 2), z(2, 1)])]),
    ]);
    sum(vec![case1, case2])
}

/// `ζ_p(s-1)ζ_p(2s-1)L(s-1,χ,p)L(2s-1,χ,p)/L(3s-2,χ',p)`, the Euler factor of the
/// global expression for the rotation families. `chi_top` is the character in
/// the `3s-2` factor.
fn rotation_generic(chi: Chi, chi_top: Chi) -> LocalExpr {
    prod(vec![z(1, 1), z(2, 1), lchi(1, 1, chi), lchi(2, 1, chi), pow(lchi(3, 2, chi_top), -1)])
}

fn rotation_global(chi: Chi) -> GlobalExpr {
    GlobalExpr::new().zeta(1, 1, 1).zeta(2, 1, 1).l(1, 1, chi, 1).l(2, 1, chi, 1).l(3, 2, chi, -1)
}

fn ratio(num: LocalExpr, den: LocalExpr) -> LocalExpr {
    prod(vec![num, pow(den, -1)])
}

fn check_param(kind: &FamilyKind, param: Option<i64>) -> Result<i64, Error> {
    let bad = |reason: &str| Error::BadParams { family: kind.name.to_string(), reason: reason.to_string() };
    match (kind.param, param) {
        (None, None) => Ok(0),
        (None, Some(_)) => Err(bad("takes no parameter")),
        (Some(n), None) => Err(bad(&format!("needs parameter {n}"))),
        (Some("k"), Some(k)) if k < 0 => Err(bad("k must be nonnegative")),
        (Some("r"), Some(r)) if r < 1 || r % 3 == 0 => Err(bad("r must be positive and not divisible by 3")),
        (Some("q"), Some(q)) if q < 1 => Err(bad("q must be positive")),
        (Some(_), Some(v)) => Ok(v),
    }
}

/// Build the catalog entry for `name` at the given parameter.
pub fn family(name: &str, param: Option<i64>) -> Result<FamilySpec, Error> {
    let kind = find_kind(name).ok_or_else(|| Error::UnknownFamily(name.to_string()))?;
    let v = check_param(kind, param)?;
    let t = Chi::Trivial;
    use ErratumScope::*;

    let mut printed_local = None;
    let mut printed_fe = None;
    let mut errata = vec![];
    let mut global_fix: Option<GlobalExpr> = None;
    let (k, q) = match kind.name {
        "N" => (v, v),
        "p2" | "pg" => (2 * v, v),
        "p2gg" | "p4F" => (4 * v, v),
        "p4E" => (2 * v, v),
        "p3E" | "p3F" => (3 * v, v),
        "p3G" => (v, v),
        "p6E" | "p6G" => (6 * v, v),
        "p6F" => (6 * v + 4, v),
        "p6H" => (6 * v + 2, v),
        _ => (0, 0),
    };

    let (presentation, local, fe, abscissa, printed_global) = match kind.name {
        "N" => {
            let g = if k == 0 {
                GlobalExpr::new().zeta(1, 0, 1).zeta(1, 1, 1).zeta(1, 2, 1)
            } else {
                GlobalExpr::new()
                    .euler(PrimeSet::Dividing { of: Val::K, also: vec![], except: vec![] }, ratio(nk_bracket(Some(Val::K)), nk_bracket(None)), 1)
                    .zeta(1, 0, 1)
                    .zeta(1, 1, 1)
                    .zeta(2, 2, 1)
                    .zeta(2, 3, 1)
                    .zeta(3, 3, -1)
            };
            let a = if k == 0 { 3 } else { 2 };
            (groupalg::pres_nk(k), LocalFactorRule::generic(nk_local(Val::K)), FunctionalEquationRule::new(3, t), a, g)
        }
        "G2" => (
            groupalg::pres_g2(),
            LocalFactorRule::new(vec![(2, prod(vec![z(1, 1), z(1, 2)]))], prod(vec![z(1, 0), z(1, 1), z(1, 2)])),
            FunctionalEquationRule::new(3, t),
            3,
            GlobalExpr::new().zeta(1, 0, 1).zeta(1, 1, 1).zeta(1, 2, 1).at(2, z(1, 0), -1),
        ),
        "G3" => (
            groupalg::pres_g3(),
            LocalFactorRule::new(vec![(3, z(1, 1))], prod(vec![z(1, 0), z(1, 1), lchi(1, 1, Chi::Chi3)])),
            FunctionalEquationRule::new(2, Chi::Chi3),
            2,
            GlobalExpr::new().zeta(1, 0, 1).zeta(1, 1, 1).l(1, 1, Chi::Chi3, 1).at(3, z(1, 0), -1).at(3, lchi(1, 1, Chi::Chi3), -1),
        ),
        "G4" => {
            errata.push(erratum(
                Notation,
                "ζ_{𝔊₃,N_0}(s)=ζ(s)ζ(s-1)L(s-1,χ_4)/(ζ_2(s)L(s-1,χ_4,2))",
                "ζ_{𝔊₄,N_0}(s)=ζ(s)ζ(s-1)L(s-1,χ_4)/(ζ_2(s)L(s-1,χ_4,2))",
                "the global formula for 𝔊₄ is labelled 𝔊₃",
            ));
            (
                groupalg::pres_g4(),
                LocalFactorRule::new(vec![(2, z(1, 1))], prod(vec![z(1, 0), z(1, 1), lchi(1, 1, Chi::Chi4)])),
                FunctionalEquationRule::new(2, Chi::Chi4),
                2,
                GlobalExpr::new().zeta(1, 0, 1).zeta(1, 1, 1).l(1, 1, Chi::Chi4, 1).at(2, z(1, 0), -1).at(2, lchi(1, 1, Chi::Chi4), -1),
            )
        }
        "G5" => {
            let generic = prod(vec![z(1, 0), z(1, 1), lchi(1, 1, Chi::Chi3)]);
            printed_local = Some(LocalFactorRule::new(
                vec![(2, z(2, 2)), (3, LocalExpr::ZetaAt { prime: 2, a: 1, b: -1 })],
                generic.clone(),
            ));
            errata.push(erratum(
                LocalFactor,
                "ζ_{𝔊₅,N_0,3}(s)=(1+3^{1-s})ζ_3(2s-2)=ζ_2(s-1)",
                "ζ_{𝔊₅,N_0,3}(s)=ζ_3(s-1)",
                "the subscript 2 should be 3; the counts at p=3 are 1,3,9,27,...",
            ));
            errata.push(erratum(
                Presentation,
                "γ^6=1",
                "γ^6=x_1",
                "the translated relator condition x_1^{6v_1+1} ∈ B_t requires γ^6=x_1",
            ));
            (
                groupalg::pres_g5(),
                LocalFactorRule::new(vec![(2, z(2, 2)), (3, z(1, 1))], generic),
                FunctionalEquationRule::new(2, Chi::Chi3),
                2,
                GlobalExpr::new()
                    .zeta(1, 0, 1)
                    .zeta(1, 1, 1)
                    .l(1, 1, Chi::Chi3, 1)
                    .at(2, z(2, 2), 1)
                    .at(2, z(1, 0), -1)
                    .at(2, z(1, 1), -1)
                    .at(2, lchi(1, 1, Chi::Chi3), -1)
                    .at(3, z(1, 0), -1)
                    .at(3, lchi(1, 1, Chi::Chi3), -1),
            )
        }
        "G6" => {
            errata.push(erratum(
                Notation,
                "ζ_{𝔅₁,N_0,p}(s)=(1-p^{-1})^{-3}∫|t_{11}|^{s-2}|t_{22}|^{s-2}|t_{33}|^{s-2}dμ=ζ_p(s-1)^3",
                "ζ_{𝔊₆,N_0,p}(s)=ζ_p(s-1)^3",
                "the generic local factor of 𝔊₆ is labelled 𝔅₁",
            ));
            (
                groupalg::pres_g6(),
                LocalFactorRule::new(vec![(2, one())], pow(z(1, 1), 3)),
                FunctionalEquationRule::new(3, t),
                2,
                GlobalExpr::new().zeta(1, 1, 3).at(2, z(1, 1), -3),
            )
        }
        "B1" => (
            groupalg::pres_b1(),
            LocalFactorRule::new(vec![(2, prod(vec![sum(vec![one(), mono(1, 1, 1)]), pow(z(1, 1), 2)]))], prod(vec![z(1, 0), pow(z(1, 1), 2)])),
            FunctionalEquationRule::new(2, t),
            2,
            GlobalExpr::new().zeta(1, 1, 2).zeta(1, 0, 1).at(2, z(1, 0), -1).at(2, sum(vec![one(), mono(1, 1, 1)]), 1),
        ),
        "B2" => {
            let printed2 = sum(vec![one(), mono(1, 1, 1), mono(1, 3, 2)]);
            let fixed2 = sum(vec![one(), mono(-1, 1, 1), mono(1, 3, 2)]);
            printed_local = Some(LocalFactorRule::new(vec![(2, prod(vec![printed2.clone(), pow(z(1, 1), 2)]))], prod(vec![z(1, 0), pow(z(1, 1), 2)])));
            errata.push(erratum(
                LocalFactor,
                "ζ_{𝔅₂,N_0,2}(s)=1+2ζ_{𝔅₂,N,2}(s)=ζ(s-1)^2(1+2^{1-s}+2^{3-2s})",
                "ζ_{𝔅₂,N_0,2}(s)=ζ_2(s-1)^2(1-2^{1-s}+2^{3-2s})",
                "1+2·2^{-s}ζ_{𝔅₁,N_0,2}(s) expands to the confirmed form; counts at p=2 are 1,2,12,40,112,288",
            ));
            errata.push(erratum(
                Global,
                "ζ_{𝔅₂,N_0}(s)=ζ(s)ζ(s-1)^2(1+2^{1-s}+2^{3-2s})/ζ_2(s)",
                "ζ_{𝔅₂,N_0}(s)=ζ(s)ζ(s-1)^2(1-2^{1-s}+2^{3-2s})/ζ_2(s)",
                "inherits the sign slip of the local factor at 2",
            ));
            let g = |c: LocalExpr| GlobalExpr::new().zeta(1, 0, 1).zeta(1, 1, 2).at(2, c, 1).at(2, z(1, 0), -1);
            global_fix = Some(g(fixed2.clone()));
            (
                groupalg::pres_b2(),
                LocalFactorRule::new(vec![(2, prod(vec![fixed2, pow(z(1, 1), 2)]))], prod(vec![z(1, 0), pow(z(1, 1), 2)])),
                FunctionalEquationRule::new(2, t),
                2,
                g(printed2),
            )
        }
        "B3" => (
            groupalg::pres_b3(),
            LocalFactorRule::new(vec![(2, prod(vec![sum(vec![one(), mono(1, 1, 1)]), z(1, 1)]))], prod(vec![z(1, 0), pow(z(1, 1), 2)])),
            FunctionalEquationRule::new(2, t),
            2,
            GlobalExpr::new()
                .zeta(1, 0, 1)
                .zeta(1, 1, 2)
                .at(2, sum(vec![one(), mono(1, 1, 1)]), 1)
                .at(2, z(1, 0), -1)
                .at(2, z(1, 1), -1),
        ),
        "B4" => (
            groupalg::pres_b4(),
            LocalFactorRule::new(vec![(2, one())], prod(vec![z(1, 0), pow(z(1, 1), 2)])),
            FunctionalEquationRule::new(2, t),
            2,
            GlobalExpr::new().zeta(1, 0, 1).zeta(1, 1, 2).at(2, z(1, 0), -1).at(2, z(1, 1), -2),
        ),
        "p2" => (
            groupalg::pres_p2(q),
            LocalFactorRule::new(vec![(2, prod(vec![z(1, 1), z(1, 2)]))], prod(vec![z(1, 0), p2_bracket(Some(Val::K))])),
            FunctionalEquationRule::new(3, t),
            3,
            GlobalExpr::new()
                .at(2, z(3, 3), 1)
                .at(2, z(2, 1), -1)
                .at(2, z(2, 2), -1)
                .euler(PrimeSet::Dividing { of: Val::Q, also: vec![], except: vec![2] }, ratio(p2_bracket(Some(Val::Q)), p2_bracket(None)), 1)
                .zeta(1, 1, 1)
                .zeta(1, 2, 1)
                .zeta(2, 1, 1)
                .zeta(2, 2, 1)
                .zeta(3, 3, -1),
        ),
        "pg" => {
            // 2-local: ζ_2(s-2)(ζ_2(s-1) - 2^{-(s-2)(v_2(q)+1)} ζ_2(2s-3)).
            let two = prod(vec![z(1, 2), sum(vec![z(1, 1), prod(vec![vmono(-1, (2, 2), (1, 1), Val::Q), z(2, 3)])])]);
            let heis = prod(vec![z(1, 0), z(1, 1), z(2, 2), z(2, 3), pow(z(3, 3), -1)]);
            let g = |fix: bool| {
                let mut g = GlobalExpr::new().at(2, two.clone(), 1);
                if fix {
                    g = g.at(2, heis.clone(), -1);
                }
                g.euler(PrimeSet::Dividing { of: Val::Q, also: vec![], except: vec![2] }, ratio(nk_bracket(Some(Val::Q)), nk_bracket(None)), 1)
                    .zeta(1, 0, 1)
                    .zeta(1, 1, 1)
                    .zeta(2, 2, 1)
                    .zeta(2, 3, 1)
                    .zeta(3, 3, -1)
            };
            errata.push(erratum(
                Global,
                "ζ_{E,N}(s)=ζ_2(s-2)(ζ_2(s-1)-2^{-(s-2)(v_2(q)+1)}ζ_2(2s-3))·Π_{p≠2,p|q}[…]·ζ(s)ζ(s-1)ζ(2s-2)ζ(2s-3)/ζ(3s-3)",
                "the last quotient must omit its Euler factor at 2, i.e. be divided by ζ_2(s)ζ_2(s-1)ζ_2(2s-2)ζ_2(2s-3)/ζ_2(3s-3)",
                "as printed the prime 2 contributes twice",
            ));
            global_fix = Some(g(true));
            (
                groupalg::pres_pg(q),
                LocalFactorRule::new(vec![(2, two.clone())], nk_local(Val::K)),
                FunctionalEquationRule::new(3, t),
                2,
                g(false),
            )
        }
        "p2gg" => {
            let g = |fix: bool| {
                let mut g = GlobalExpr::new();
                if fix {
                    g = g.at(2, prod(vec![pow(z(1, 1), 2), pow(z(2, 2), 2), pow(z(3, 3), -1)]), -1);
                }
                g.euler(PrimeSet::Dividing { of: Val::Q, also: vec![], except: vec![2] }, ratio(p2gg_bracket(Some(Val::Q)), p2gg_bracket(None)), 1)
                    .zeta(1, 1, 2)
                    .zeta(2, 2, 2)
                    .zeta(3, 3, -1)
            };
            errata.push(erratum(
                Global,
                "ζ_{E,N}(s)=Π_{p≠2,p|q}[…]·ζ(s-1)^2ζ(2s-2)^2/ζ(3s-3)",
                "the quotient must omit its Euler factor at 2, where the local factor is 1",
                "as printed the coefficient of 2^{-s} is 2 although no subgroup of index 2 supplements N",
            ));
            global_fix = Some(g(true));
            (
                groupalg::pres_p2gg(q),
                LocalFactorRule::new(vec![(2, one())], prod(vec![z(1, 1), p2gg_bracket(Some(Val::K))])),
                FunctionalEquationRule::new(3, t),
                2,
                g(false),
            )
        }
        "p4E" | "p4F" => {
            let eps = if kind.name == "p4E" { 2 } else { 4 };
            let c4 = Chi::Chi4;
            printed_local = Some(LocalFactorRule::new(vec![(2, z(1, 1))], rotation_local(c4, Val::Q)));
            let g = |fix: bool| {
                let set = if fix { PrimeSet::Dividing { of: Val::Q, also: vec![], except: vec![2] } } else { PrimeSet::AllExcept(vec![2]) };
                GlobalExpr::new()
                    .at(2, z(1, 1), 1)
                    .euler(set, rotation_local(c4, Val::Q), 1)
                    .euler(PrimeSet::Dividing { of: Val::Q, also: vec![2], except: vec![] }, rotation_generic(c4, c4), -1)
                    .terms
                    .into_iter()
                    .chain(rotation_global(c4).terms)
                    .collect::<Vec<_>>()
            };
            errata.push(erratum(
                Global,
                "ζ_{G,N_{εq}}(s)=ζ_2(s-1)Π_{p≠2}[…]·Π_{p|2q}L(3s-2,χ_4,p)/(ζ_p(s-1)ζ_p(2s-1)L(s-1,χ_4,p)L(2s-1,χ_4,p))·ζ(s-1)ζ(2s-1)L(s-1,χ_4)L(2s-1,χ_4)/L(3s-2,χ_4)",
                "the bracket product runs over p|q, p≠2 only",
                "for p∤2q the bracket already equals the Euler factor of the last quotient, so the printed product counts it twice",
            ));
            errata.push(erratum(
                Notation,
                "ζ_{G,N,p}(s)|_{p→p^{-1}}=(-1)^3χ_4(p)p^{-3s+2}ζ_{G,N}(s)",
                "ζ_{G,N,p}(s)|_{p→p^{-1}}=(-1)^3χ_4(p)p^{-3s+2}ζ_{G,N,p}(s)",
                "the right-hand side lacks the subscript p; the integral display for this family also omits the factor (1-p^{-1})^{-3}",
            ));
            global_fix = Some(GlobalExpr { terms: g(true) });
            (
                groupalg::pres_p4(q, eps),
                LocalFactorRule::new(vec![(2, z(1, 1))], rotation_local(c4, Val::K)),
                FunctionalEquationRule::new(2, c4),
                2,
                GlobalExpr { terms: g(false) },
            )
        }
        "p3E" | "p3F" | "p3G" => {
            let c3 = Chi::Chi3;
            let variant = kind.name.chars().last().unwrap();
            printed_local = Some(LocalFactorRule::new(vec![(3, z(1, 1))], rotation_local(c3, Val::Q)));
            printed_fe = Some(FunctionalEquationRule::new(2, Chi::Chi4));
            errata.push(erratum(
                FunctionalEquation,
                "ζ_{G,N,p}(s)|_{p→p^{-1}}=(-1)^3p^{-3s+2}χ_4(p)ζ_{G,N,p}(s)",
                "ζ_{G,N,p}(s)|_{p→p^{-1}}=(-1)^3p^{-3s+2}χ_3(p)ζ_{G,N,p}(s)",
                "the character is χ_3; with χ_4 the equation fails at every p≡2 mod 3 with p≡1 mod 4 and vice versa",
            ));
            errata.push(erratum(
                Global,
                "ζ_{G,N}(s)=ζ_3(s-1)Π_{p≠3,p|k}ζ_p(s)[…]·Π_{p|k}L(3s-2,χ_4,p)/(ζ_p(s-1)ζ_p(2s-1)L(s-1,χ_3,p)L(2s-1,χ_3,p))·ζ(s-1)ζ(2s-1)L(s-1,χ_3)L(2s-1,χ_3)/L(3s-2,χ_3)",
                "L(3s-2,χ_3,p) in the middle product, which must run over p|3k",
                "χ_4 appears where χ_3 is meant; for G (3∤r) the generic factor at 3 is not divided out",
            ));
            if variant == 'G' {
                errata.push(erratum(
                    Notation,
                    "p^{-s(v_p(q)+1)}, p^{-s(v_p(q)+2)} in the local factor",
                    "v_p(k) with k=r",
                    "the group G has no parameter q",
                ));
            }
            let g = |fix: bool| {
                let (top, also) = if fix { (c3, vec![3]) } else { (Chi::Chi4, vec![]) };
                GlobalExpr::new()
                    .at(3, z(1, 1), 1)
                    .euler(PrimeSet::Dividing { of: Val::K, also: vec![], except: vec![3] }, rotation_local(c3, Val::K), 1)
                    .euler(PrimeSet::Dividing { of: Val::K, also, except: vec![] }, rotation_generic(c3, top), -1)
                    .terms
                    .into_iter()
                    .chain(rotation_global(c3).terms)
                    .collect::<Vec<_>>()
            };
            global_fix = Some(GlobalExpr { terms: g(true) });
            (
                groupalg::pres_p3(variant, v),
                LocalFactorRule::new(vec![(3, z(1, 1))], rotation_local(c3, Val::K)),
                FunctionalEquationRule::new(2, c3),
                2,
                GlobalExpr { terms: g(false) },
            )
        }
        "p6E" | "p6F" | "p6G" | "p6H" => {
            let c3 = Chi::Chi3;
            let variant = kind.name.chars().last().unwrap();
            printed_local = Some(LocalFactorRule::new(
                vec![(2, z(2, 2)), (3, LocalExpr::ZetaAt { prime: 2, a: 1, b: -1 })],
                rotation_local(c3, Val::Q),
            ));
            errata.push(erratum(
                LocalFactor,
                "ζ_{G,N,3}(s)=ζ_2(s-1)",
                "ζ_{G,N,3}(s)=ζ_3(s-1)",
                "the subscript 2 should be 3, as in the global formula",
            ));
            if matches!(variant, 'F' | 'H') {
                errata.push(erratum(
                    LocalFactor,
                    "p^{-s(v_p(q)+1)}, p^{-s(v_p(q)+2)} in the local factor for p≠2,3",
                    "v_p(k) with k=6q+4 (F) or k=6q+2 (H)",
                    "v_p(q) and v_p(k) differ at primes dividing 3q+2 or 3q+1",
                ));
            }
            errata.push(erratum(
                Global,
                "ζ_{G,N}(s)=ζ_2(2s-2)ζ_3(s-1)Π_{p≠2,3}ζ_p(s)[…]·Π_{p≠2,3;p|k}L(3s-2,χ_4,p)/(ζ_p(s-1)ζ_p(2s-1)L(s-1,χ_3,p)L(2s-1,χ_3,p))·ζ(s-1)ζ(2s-1)L(s-1,χ_3)L(2s-1,χ_3)/L(3s-2,χ_3)",
                "bracket product over p|k, p∤6; middle product with χ_3 over p|k and p∈{2,3}",
                "as printed every p∤6k is counted twice, χ_4 appears where χ_3 is meant and the factors at 2 and 3 are not divided out",
            ));
            let g = |fix: bool| {
                let (set, top, also, val) = if fix {
                    (PrimeSet::Dividing { of: Val::K, also: vec![], except: vec![2, 3] }, c3, vec![2, 3], Val::K)
                } else {
                    (PrimeSet::AllExcept(vec![2, 3]), Chi::Chi4, vec![], Val::Q)
                };
                let except = if fix { vec![] } else { vec![2, 3] };
                GlobalExpr::new()
                    .at(2, z(2, 2), 1)
                    .at(3, z(1, 1), 1)
                    .euler(set, rotation_local(c3, val), 1)
                    .euler(PrimeSet::Dividing { of: Val::K, also, except }, rotation_generic(c3, top), -1)
                    .terms
                    .into_iter()
                    .chain(rotation_global(c3).terms)
                    .collect::<Vec<_>>()
            };
            global_fix = Some(GlobalExpr { terms: g(true) });
            (
                groupalg::pres_p6(variant, v),
                LocalFactorRule::new(vec![(2, z(2, 2)), (3, z(1, 1))], rotation_local(c3, Val::K)),
                FunctionalEquationRule::new(2, c3),
                2,
                GlobalExpr { terms: g(false) },
            )
        }
        other => return Err(Error::UnknownFamily(other.to_string())),
    };

    let params = match kind.param {
        Some(n) => vec![(n.to_string(), v)],
        None => vec![],
    };
    Ok(FamilySpec {
        name: kind.name.to_string(),
        display: kind.display.to_string(),
        params,
        k,
        q,
        holonomy: kind.holonomy.to_string(),
        holonomy_order: kind.holonomy_order,
        presentation,
        local,
        printed_local,
        fe,
        printed_fe,
        abscissa,
        global: global_fix.unwrap_or_else(|| printed_global.clone()),
        printed_global,
        errata,
    })
}

/// The default parameter grid: `q ≤ 4`, `r ∈ {1, 2}` for p3 G, `k ∈ {0,1,2,4,6}` for `N_k`.
pub fn default_grid() -> Vec<FamilySpec> {
    grid(4, &[1, 2], &[0, 1, 2, 4, 6])
}

pub fn grid(q_max: i64, rs: &[i64], ks: &[i64]) -> Vec<FamilySpec> {
    let mut out = vec![];
    for kind in KINDS {
        let params: Vec<Option<i64>> = match kind.param {
            None => vec![None],
            Some("k") => ks.iter().map(|&k| Some(k)).collect(),
            Some("r") => rs.iter().map(|&r| Some(r)).collect(),
            Some(_) => (1..=q_max).map(Some).collect(),
        };
        for p in params {
            out.push(family(kind.name, p).expect("grid parameters are admissible"));
        }
    }
    out
}

/// Parse `"p6H"`, `"p6H:2"` or `"N:4"`.
pub fn parse_family(spec: &str) -> Result<FamilySpec, Error> {
    let (name, param) = match spec.split_once([':', '=']) {
        Some((n, v)) => (n, Some(v.trim().parse::<i64>().map_err(|_| Error::Parse(spec.to_string()))?)),
        None => (spec, None),
    };
    family(name.trim(), param)
}

fn check_prime(p: u64) -> Result<(), Error> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::NotPrime(p))
    }
}

/// Confirmed local factor of `ζ_{G,N}` at `p`, in generic `u` with the
/// character values and valuations at `p` substituted.
pub fn local_factor(fam: &FamilySpec, p: u64) -> Result<RationalUX, Error> {
    check_prime(p)?;
    fam.local.eval(&fam.ctx(p))
}

pub fn printed_local_factor(fam: &FamilySpec, p: u64) -> Result<RationalUX, Error> {
    check_prime(p)?;
    fam.printed_local_rule().eval(&fam.ctx(p))
}

/// Closed-form coefficient table `a_{p^0}..a_{p^m}`.
pub fn closed_form_table(fam: &FamilySpec, p: u64, m: usize) -> Result<CoeffTable, Error> {
    let counts = local_factor(fam, p)?.series_integers(p, m)?;
    Ok(CoeffTable {
        family: fam.name.clone(),
        params: fam.params_label(),
        p,
        m,
        mode: Provenance::ClosedForm,
        counts,
        elapsed_ms: 0,
    })
}

/// Does `f` satisfy the functional equation `rule` at `p`?
pub fn fe_holds(f: &RationalUX, rule: FunctionalEquationRule, p: u64) -> bool {
    let c = rule.sign as i64 * rule.chi.value(p) as i64;
    f.substitute_inverse() == f * &RationalUX::mono(c, rule.c, 3)
}

/// Checks the confirmed functional equation at `p`. Primes outside the
/// validity guard are reported as failures.
pub fn functional_equation_check(fam: &FamilySpec, p: u64) -> bool {
    fam.fe_guard(p) && local_factor(fam, p).is_ok_and(|f| fe_holds(&f, fam.fe, p))
}

/// Local factors for all primes up to `n`, evaluated once per distinct
/// (branch, character values, valuations).
pub fn local_tables(rule: &LocalFactorRule, k: i64, q: i64, n: usize) -> Result<BTreeMap<u64, Vec<BigInt>>, Error> {
    type Key = (usize, i8, i8, Option<u32>, Option<u32>);
    let mut cache: HashMap<Key, RationalUX> = HashMap::new();
    let mut out = BTreeMap::new();
    for p in series::primes_up_to(n) {
        let cx = LocalCtx::new(p, k, q);
        let bi = rule.branches.iter().position(|b| b.guard.admits(p)).expect("generic branch");
        let expr = &rule.branches[bi].expr;
        let key = (
            bi,
            Chi::Chi3.value(p),
            Chi::Chi4.value(p),
            cx.vk.filter(|_| expr.uses_val(Val::K)),
            cx.vq.filter(|_| expr.uses_val(Val::Q)),
        );
        let f = match cache.get(&key) {
            Some(f) => f.clone(),
            None => {
                let f = expr.eval(&cx)?;
                cache.insert(key, f.clone());
                f
            }
        };
        out.insert(p, f.series_integers(p, depth_for(p, n))?);
    }
    Ok(out)
}

/// `a_1..a_n` of `ζ_{G,N}` by Euler assembly of the confirmed local factors.
pub fn global_coeffs(fam: &FamilySpec, n: usize) -> Result<GlobalCoeffs, Error> {
    let mut g = series::euler_assemble(&local_tables(&fam.local, fam.k, fam.q, n)?, n)?;
    g.source = format!("{} closed-form", fam.label());
    Ok(g)
}

/// Full zeta function assembled from relative zeta functions of intermediate
/// subgroups: `ζ_G(s) = Σ_H [G:H]^{-s} ζ_{H,N}(s)`.
#[derive(Clone, Debug)]
pub struct FullZeta {
    /// `([G:H], local factor of ζ_{H,N}, k, q)` for every intermediate `H`.
    pub parts: Vec<(u64, LocalFactorRule, i64, i64)>,
}

impl FullZeta {
    /// Per-prime data: the local factor of each part at `p`, with its index.
    pub fn local_data(&self, p: u64) -> Result<Vec<(u64, RationalUX)>, Error> {
        self.parts.iter().map(|(idx, r, k, q)| Ok((*idx, r.eval(&LocalCtx::new(p, *k, *q))?))).collect()
    }

    pub fn coeffs(&self, n: usize) -> Result<GlobalCoeffs, Error> {
        let mut a = vec![BigInt::zero(); n];
        for (idx, rule, k, q) in &self.parts {
            let g = series::euler_assemble(&local_tables(rule, *k, *q, n)?, n)?;
            for (i, x) in series::scale_index(&g.a, *idx as usize).into_iter().enumerate() {
                a[i] += x;
            }
        }
        Ok(GlobalCoeffs::new(a, "full zeta"))
    }
}

/// Full zeta function for prime (or trivial) holonomy, where the only
/// intermediate subgroups are `N` and `G`. Non-prime holonomy needs the
/// intermediate subgroups identified by hand; pass them to [`full_zeta_with`].
pub fn full_zeta_prime_holonomy(fam: &FamilySpec) -> Result<FullZeta, Error> {
    let r = fam.holonomy_order as u64;
    if r == 1 {
        return Ok(FullZeta { parts: vec![(1, fam.local.clone(), fam.k, fam.q)] });
    }
    if !is_prime(r) {
        return Err(Error::NonPrimeHolonomy(fam.holonomy_order));
    }
    Ok(full_zeta_with(fam, &[(r, LocalFactorRule::generic(nk_local(Val::K)), fam.k, fam.k)]))
}

/// `ζ_{G,N}` plus user-supplied intermediate subgroups `(index, local rule, k, q)`.
pub fn full_zeta_with(fam: &FamilySpec, intermediates: &[(u64, LocalFactorRule, i64, i64)]) -> FullZeta {
    let mut parts = vec![(1, fam.local.clone(), fam.k, fam.q)];
    parts.extend(intermediates.iter().cloned());
    FullZeta { parts }
}

/// The rank-one analogue: the infinite dihedral group with `N = Z`, where
/// `ζ_{D∞,N,p} = ζ_p(s-1)` and `ζ_{Z,p} = ζ_p(s)`.
pub fn infinite_dihedral() -> FullZeta {
    FullZeta { parts: vec![(1, LocalFactorRule::generic(z(1, 1)), 0, 0), (2, LocalFactorRule::generic(z(1, 0)), 0, 0)] }
}

//! Brute-force subgroup counting at a prime.
//!
//! A subgroup `A` of `p`-power index with `AN = G` is described by a good
//! basis `t` of `B = A ∩ N` in reduced form together with one vector `v_j`
//! per holonomy generator, `γ_j x^{v_j} ∈ A`, reduced mod the diagonal of `t`.
//! `(t, v)` describes a subgroup iff every row of `t` conjugated by every
//! `γ_j x^{v_j}` stays in `B_t` and every relator of `G/N` evaluated at the
//! `γ_j x^{v_j}` lands in `B_t`.
//!
//! Three independent ways of counting are provided:
//! * `Full` enumerates every `(t, v)` and tests the conditions directly.
//! * `Fast` enumerates only what it must and counts the rest as solutions of
//!   linear congruences mod `p^c` (or mod `p^n` for abelian `N`).
//! * `Measure` sums Haar-measure weights of all residues of unnormalized
//!   `(t, v)`, the literal truncated integral.

use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::FamilySpec;
use crate::congruence::{count_solutions, enumerate_solutions, mod_inv, Congruence};
use crate::error::Error;
use crate::groupalg::{apply_images, nk_inv_raw, nk_mul_raw, GroupArith, Letter, Presentation, Triple, Word};
use crate::membership::{in_bt_raw, is_good_basis, GoodBasis};

pub const DEFAULT_WORK_LIMIT: u64 = 1_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    Fast,
    Measure,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::Fast => "fast",
            Mode::Measure => "measure",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "full" => Ok(Mode::Full),
            "fast" => Ok(Mode::Fast),
            "measure" => Ok(Mode::Measure),
            _ => Err(Error::Parse(format!("mode {s}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    OracleFull,
    OracleFast,
    OracleMeasure,
    ClosedForm,
}

impl From<Mode> for Provenance {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Full => Provenance::OracleFull,
            Mode::Fast => Provenance::OracleFast,
            Mode::Measure => Provenance::OracleMeasure,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OracleConfig {
    /// Maximum number of condition checks (or congruence solves) per call.
    pub work_limit: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { work_limit: DEFAULT_WORK_LIMIT }
    }
}

/// Coefficients `a_{p^0}, ..., a_{p^m}` of a local factor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoeffTable {
    pub family: String,
    pub params: String,
    pub p: u64,
    pub m: usize,
    pub mode: Provenance,
    #[serde(with = "crate::series::bigint_strings")]
    pub counts: Vec<BigInt>,
    pub elapsed_ms: u128,
}

/// One counted subgroup.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupWitness {
    pub t: GoodBasis,
    pub v: Vec<Triple<i128>>,
}

impl SubgroupWitness {
    /// CSV columns: `a,b,c,t12,t13,t23` then `v{j}1,v{j}2,v{j}3` per generator.
    pub fn csv_header(t: usize) -> Vec<String> {
        let mut h: Vec<String> = ["a", "b", "c", "t12", "t13", "t23"].iter().map(|s| s.to_string()).collect();
        for j in 1..=t {
            for i in 1..=3 {
                h.push(format!("v{j}{i}"));
            }
        }
        h
    }

    pub fn csv_record(&self) -> Vec<String> {
        let t = &self.t;
        let mut r = vec![t.a.to_string(), t.b.to_string(), t.c.to_string(), t.t12.to_string(), t.t13.to_string(), t.t23.to_string()];
        for v in &self.v {
            r.extend(v.iter().map(|x| x.to_string()));
        }
        r
    }
}

/// Per-presentation data for evaluating the subgroup conditions in `i128`.
pub struct Engine {
    pub ar: GroupArith<i128>,
    pub k: i128,
    pub t: usize,
    /// `y ↦ γ_j^{-1} y γ_j` as images of `x1, x2, x3`.
    inv_action: Vec<[Triple<i128>; 3]>,
    relators: Vec<Word>,
    /// Every generator sends `x3` to `x3^{±1}`.
    x3_line: bool,
    /// Every generator preserves the span of `x2, x3`.
    keeps_x23: bool,
    /// Relators grouped by the last generator they mention.
    relators_at: Vec<Vec<usize>>,
}

impl Engine {
    pub fn new(pres: &Presentation) -> Self {
        let ar = pres.arith::<i128>();
        let t = pres.t();
        let inv_action = (0..t)
            .map(|j| {
                let g = ar.generator(j);
                let gi = ar.inv(&g);
                let img = |i: usize| {
                    let mut e = [0i128; 3];
                    e[i] = 1;
                    ar.mul(&ar.mul(&gi, &ar.from_n(e)), &g).n
                };
                [img(0), img(1), img(2)]
            })
            .collect::<Vec<_>>();
        let x3_line = pres.gens.iter().all(|g| g.action.preserves_center_line());
        let keeps_x23 = pres.gens.iter().all(|g| g.action.images[1][0] == 0 && g.action.images[2][0] == 0);
        let mut relators_at = vec![Vec::new(); t.max(1)];
        for (i, w) in pres.relators.iter().enumerate() {
            let last = w.iter().filter_map(|l| match l {
                Letter::G(g, _) => Some(*g),
                Letter::X(..) => None,
            });
            relators_at[last.max().unwrap_or(0)].push(i);
        }
        Engine { k: pres.k as i128, t, inv_action, relators: pres.relators.clone(), ar, x3_line, keeps_x23, relators_at }
    }

    pub fn words_per_check(&self) -> u64 {
        (3 * self.t + self.relators.len()) as u64
    }

    /// `(γ_j x^v)^{-1} x^r (γ_j x^v) = x^{-v} ψ_j(r) x^v`.
    #[inline]
    pub fn conj(&self, j: usize, r: &Triple<i128>, v: &Triple<i128>) -> Triple<i128> {
        let k = &self.k;
        let moved = apply_images(k, &self.inv_action[j], r);
        nk_mul_raw(k, &nk_mul_raw(k, &nk_inv_raw(k, v), &moved), v)
    }

    pub fn relator(&self, idx: usize, vs: &[Triple<i128>]) -> Triple<i128> {
        self.ar.relation_word(&self.relators[idx], vs)
    }

    /// All subgroup conditions for `(t, v)`.
    pub fn check(&self, tb: &GoodBasis, vs: &[Triple<i128>]) -> bool {
        let rows = tb.rows();
        for (j, v) in vs.iter().enumerate() {
            for r in &rows {
                if !in_bt_raw(tb, &self.conj(j, r, v)) {
                    return false;
                }
            }
        }
        (0..self.relators.len()).all(|i| in_bt_raw(tb, &self.relator(i, vs)))
    }
}

/// Good cells `(a, b, c)` with `a + b + c = n`, in lexicographic order.
pub fn cells(p: u64, k: i64, n: u32) -> Vec<(u32, u32, u32)> {
    let mut out = Vec::new();
    for a in 0..=n {
        for b in 0..=n - a {
            let c = n - a - b;
            if is_good_basis(&GoodBasis::diagonal(p, k, a, b, c)) {
                out.push((a, b, c));
            }
        }
    }
    out
}

struct Budget {
    used: AtomicU64,
    limit: u64,
    blown: AtomicBool,
}

impl Budget {
    fn new(limit: u64) -> Self {
        Budget { used: AtomicU64::new(0), limit, blown: AtomicBool::new(false) }
    }

    /// Record work; false once the limit is exceeded.
    fn spend(&self, w: u64) -> bool {
        if self.blown.load(Ordering::Relaxed) {
            return false;
        }
        if self.used.fetch_add(w, Ordering::Relaxed) + w > self.limit {
            self.blown.store(true, Ordering::Relaxed);
            return false;
        }
        true
    }
}

fn check_prime(p: u64) -> Result<(), Error> {
    if p < 2 || (2..p).take_while(|d| d * d <= p).any(|d| p % d == 0) {
        return Err(Error::NotPrime(p));
    }
    Ok(())
}

/// Counts `a_{p^0..p^m}` for a presentation.
pub fn count_presentation(pres: &Presentation, p: u64, m: usize, mode: Mode, cfg: &OracleConfig) -> Result<Vec<BigInt>, Error> {
    check_prime(p)?;
    if mode == Mode::Measure {
        return measure_coefficients(pres, p, m, cfg)?
            .into_iter()
            .enumerate()
            .map(|(i, r)| if r.is_integer() { Ok(r.to_integer()) } else { Err(Error::NonIntegral { index: i, value: r.to_string() }) })
            .collect();
    }
    let engine = Engine::new(pres);
    let budget = Budget::new(cfg.work_limit);
    let mut counts = Vec::with_capacity(m + 1);
    for n in 0..=m as u32 {
        let cs = cells(p, pres.k, n);
        let parts: Vec<Option<u128>> = cs
            .par_iter()
            .map(|&(a, b, c)| match mode {
                Mode::Full => full_cell(&engine, p, pres.k, a, b, c, &budget, &mut |_, _| {}),
                _ => fast_cell(&engine, p, pres.k, a, b, c, &budget),
            })
            .collect();
        if parts.iter().any(Option::is_none) {
            return Err(Error::Budget { limit: cfg.work_limit, reached: n as usize });
        }
        counts.push(BigInt::from(parts.into_iter().map(|x| x.unwrap_or(0)).sum::<u128>()));
    }
    Ok(counts)
}

/// `oracle_count` for a catalog family.
pub fn oracle_count(fam: &FamilySpec, p: u64, m: usize, mode: Mode, cfg: &OracleConfig) -> Result<CoeffTable, Error> {
    let start = Instant::now();
    let counts = count_presentation(&fam.presentation, p, m, mode, cfg)?;
    Ok(CoeffTable {
        family: fam.name.clone(),
        params: fam.params_label(),
        p,
        m,
        mode: mode.into(),
        counts,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

fn box_size(tb: &GoodBasis) -> [i128; 3] {
    [tb.pa(), tb.pb(), tb.pc()]
}

/// Visits every witness of one cell in lexicographic `(t12, t13, t23, v)` order.
fn full_cell(
    engine: &Engine,
    p: u64,
    k: i64,
    a: u32,
    b: u32,
    c: u32,
    budget: &Budget,
    visit: &mut dyn FnMut(&GoodBasis, &[Triple<i128>]),
) -> Option<u128> {
    let base = GoodBasis::diagonal(p, k, a, b, c);
    let mut walk = FullWalk { engine, bx: box_size(&base), budget, pending: 0, count: 0, vs: vec![[0; 3]; engine.t], visit };
    for t12 in 0..base.pb() {
        for t13 in 0..base.pc() {
            for t23 in 0..base.pc() {
                let tb = base.with_offdiag(t12, t13, t23);
                if !walk.generator(&tb, 0) {
                    return None;
                }
            }
        }
    }
    budget.spend(walk.pending).then_some(walk.count)
}

/// Depth-first over `v_1, ..., v_t`; the conjugation conditions of `γ_j`
/// only involve `v_j`, so they are tested as soon as `v_j` is fixed.
struct FullWalk<'a> {
    engine: &'a Engine,
    bx: [i128; 3],
    budget: &'a Budget,
    pending: u64,
    count: u128,
    vs: Vec<Triple<i128>>,
    visit: &'a mut dyn FnMut(&GoodBasis, &[Triple<i128>]),
}

impl FullWalk<'_> {
    fn charge(&mut self, w: u64) -> bool {
        self.pending += w;
        if self.pending >= 1 << 14 {
            let w = std::mem::take(&mut self.pending);
            return self.budget.spend(w);
        }
        true
    }

    /// False once the budget is exhausted.
    fn generator(&mut self, tb: &GoodBasis, j: usize) -> bool {
        let e = self.engine;
        if j == e.t {
            self.count += 1;
            (self.visit)(tb, &self.vs);
            return true;
        }
        let rows = tb.rows();
        // In abelian N conjugation ignores v.
        let v_free = e.k == 0;
        if v_free {
            if !self.charge(3) {
                return false;
            }
            if !rows.iter().all(|r| in_bt_raw(tb, &e.conj(j, r, &[0; 3]))) {
                return true;
            }
        }
        let ready = &e.relators_at[j];
        for v1 in 0..self.bx[0] {
            for v2 in 0..self.bx[1] {
                // Conjugation by x^v only moves the x3 coordinate, by an amount free of v3.
                if !v_free {
                    if !self.charge(3) {
                        return false;
                    }
                    if !rows.iter().all(|r| in_bt_raw(tb, &e.conj(j, r, &[v1, v2, 0]))) {
                        continue;
                    }
                }
                for v3 in 0..self.bx[2] {
                    if !self.charge(ready.len() as u64 + 1) {
                        return false;
                    }
                    self.vs[j] = [v1, v2, v3];
                    if ready.iter().all(|&r| in_bt_raw(tb, &e.relator(r, &self.vs))) && !self.generator(tb, j + 1) {
                        return false;
                    }
                }
            }
        }
        self.vs[j] = [0; 3];
        true
    }
}

/// Every witness with `a + b + c ≤ m`, in lexicographic `(a, b, c, t12, t13, t23, v)` order.
pub fn witness_stream(pres: &Presentation, p: u64, m: usize, cfg: &OracleConfig) -> Result<Vec<SubgroupWitness>, Error> {
    check_prime(p)?;
    let engine = Engine::new(pres);
    let budget = Budget::new(cfg.work_limit);
    let mut all: Vec<(u32, u32, u32)> = (0..=m as u32).flat_map(|n| cells(p, pres.k, n)).collect();
    all.sort();
    let mut out = Vec::new();
    for (a, b, c) in all {
        let r = full_cell(&engine, p, pres.k, a, b, c, &budget, &mut |tb, vs| {
            out.push(SubgroupWitness { t: *tb, v: vs.to_vec() })
        });
        if r.is_none() {
            return Err(Error::Budget { limit: cfg.work_limit, reached: (a + b + c) as usize });
        }
    }
    Ok(out)
}

fn pw(p: u64, e: u32) -> u128 {
    (p as u128).pow(e)
}

fn fast_cell(engine: &Engine, p: u64, k: i64, a: u32, b: u32, c: u32, budget: &Budget) -> Option<u128> {
    if engine.t == 0 {
        // No conditions beyond the good-basis test.
        return Some(pw(p, b + 2 * c));
    }
    if k == 0 {
        abelian_cell(engine, p, a, b, c, budget)
    } else {
        assert!(engine.x3_line, "layered counting needs x3 ↦ x3^±1");
        layered_cell(engine, p, k, a, b, c, budget)
    }
}

/// Affine map `v ↦ R(v)` of a relator in abelian `N`, as `(base, columns)`.
fn affine_relators(engine: &Engine) -> Vec<(Triple<i128>, Vec<Triple<i128>>)> {
    let t = engine.t;
    (0..engine.relators.len())
        .map(|r| {
            let zero = vec![[0i128; 3]; t];
            let base = engine.relator(r, &zero);
            let cols = (0..3 * t)
                .map(|idx| {
                    let mut vs = zero.clone();
                    vs[idx / 3][idx % 3] = 1;
                    let e = engine.relator(r, &vs);
                    [e[0] - base[0], e[1] - base[1], e[2] - base[2]]
                })
                .collect();
            (base, cols)
        })
        .collect()
}

/// `k = 0`: membership is lattice membership, `x ∈ L_t ⇔ x·adj(t) ≡ 0 mod p^n`,
/// and relator words are affine in `v`. Conjugation conditions do not involve
/// `v`, so `v` is counted over `(Z/p^n)^{3t}` and divided by `[L_t : p^n Z^3]^t`.
fn abelian_cell(engine: &Engine, p: u64, a: u32, b: u32, c: u32, budget: &Budget) -> Option<u128> {
    let n = a + b + c;
    let base = GoodBasis::diagonal(p, 0, a, b, c);
    let (pa, pb, pc) = (base.pa(), base.pb(), base.pc());
    let t = engine.t;
    let zero = [0i128; 3];
    let rels = affine_relators(engine);
    let nvars = 3 * t;
    let pi = p as i128;
    let rows_ok = |tb: &GoodBasis, which: &[usize]| {
        let rows = tb.rows();
        (0..t).all(|j| which.iter().all(|&i| in_bt_raw(tb, &engine.conj(j, &rows[i], &zero))))
    };
    let mut count = 0u128;
    let mut pending = 0u64;
    for t23 in 0..pc {
        if engine.keeps_x23 && !rows_ok(&base.with_offdiag(0, 0, t23), &[1, 2]) {
            continue;
        }
        for t12 in 0..pb {
            for t13 in 0..pc {
                let tb = base.with_offdiag(t12, t13, t23);
                if !rows_ok(&tb, &[0, 1, 2]) {
                    continue;
                }
                pending += 1;
                if pending >= 1 << 12 {
                    if !budget.spend(pending * engine.words_per_check()) {
                        return None;
                    }
                    pending = 0;
                }
                // adj(t) for t = [[pa,t12,t13],[0,pb,t23],[0,0,pc]].
                let adj = [[pb * pc, -t12 * pc, t12 * t23 - t13 * pb], [0, pa * pc, -pa * t23], [0, 0, pa * pb]];
                let mut rows = Vec::new();
                let mut rhs = Vec::new();
                for (bse, cols) in &rels {
                    for l in 0..3 {
                        let coeffs: Vec<i128> = (0..nvars).map(|var| (0..3).map(|i| cols[var][i] * adj[i][l]).sum()).collect();
                        rows.push(coeffs);
                        rhs.push(-(0..3).map(|i| bse[i] * adj[i][l]).sum::<i128>());
                    }
                }
                if let Some(e) = count_solutions(&mut rows, &mut rhs, nvars, pi, n) {
                    let shift = 2 * n * t as u32;
                    assert!(e >= shift, "solution count not divisible by lattice index");
                    count += pw(p, e - shift);
                }
            }
        }
    }
    budget.spend(pending * engine.words_per_check()).then_some(count)
}

/// Stage-3 correction `k p^a t12 λ(λ-1)/2 mod p^c`.
#[inline]
fn k_term(k: i128, pa: i128, t12: i128, l1: i128, pc: i128) -> i128 {
    let binom = if l1 % 2 == 0 { (l1 / 2).rem_euclid(pc) * (l1 - 1).rem_euclid(pc) } else { l1.rem_euclid(pc) * ((l1 - 1) / 2).rem_euclid(pc) };
    (k * pa).rem_euclid(pc) * t12.rem_euclid(pc) % pc * (binom % pc) % pc
}

/// `k ≠ 0` with `x3 ↦ x3^{±1}`: the `x1, x2` coordinates of every word
/// depend only on `t12` and the `x1, x2` parts of `v`; the `x3` conditions are
/// affine in `w = (t13, t23, v_13, ..., v_t3)` mod `p^c`.
fn layered_cell(engine: &Engine, p: u64, k: i64, a: u32, b: u32, c: u32, budget: &Budget) -> Option<u128> {
    let base = GoodBasis::diagonal(p, k, a, b, c);
    let (pa, pb, pc) = (base.pa(), base.pb(), base.pc());
    let t = engine.t;
    let kk = k as i128;
    let pi = p as i128;
    let zero = [0i128; 3];
    let nrel = engine.relators.len();
    // Signs of x3 under ψ_j and v_j3-coefficients of relator x3-exponents.
    let sign: Vec<i128> = engine.inv_action.iter().map(|img| img[2][2]).collect();
    let rel_lin: Vec<(Triple<i128>, Vec<Triple<i128>>)> = affine_relators_xy(engine);
    let nv = 2 * t;
    let ranges: Vec<i128> = (0..nv).map(|i| if i % 2 == 0 { pa } else { pb }).collect();
    let nw = 2 + t;
    let mut count = 0u128;
    let mut pending = 0u64;
    let mut blown = false;
    for t12 in 0..pb {
        let tb0 = base.with_offdiag(t12, 0, 0);
        let rows0 = tb0.rows();
        // Stage 1-2 of conjugated rows does not see v.
        let stage12 = |e: &Triple<i128>| e[0] % pa == 0 && (pa * e[1] - t12 * e[0]).rem_euclid(pa * pb) == 0;
        if !(0..t).all(|j| (0..2).all(|i| stage12(&engine.conj(j, &rows0[i], &zero)))) {
            continue;
        }
        let mut congs = Vec::new();
        for (bse, cols) in &rel_lin {
            congs.push(Congruence { coeffs: cols.iter().map(|c| c[0]).collect(), constant: bse[0], modulus: pa });
            congs.push(Congruence {
                coeffs: cols.iter().map(|c| pa * c[1] - t12 * c[0]).collect(),
                constant: pa * bse[1] - t12 * bse[0],
                modulus: pa * pb,
            });
        }
        let mut vs = vec![zero; t];
        enumerate_solutions(&ranges, &congs, &mut |vbar| {
            if blown {
                return;
            }
            pending += 1;
            if pending >= 1 << 12 {
                if !budget.spend(pending * engine.words_per_check()) {
                    blown = true;
                    return;
                }
                pending = 0;
            }
            if pc == 1 {
                count += 1;
                return;
            }
            for j in 0..t {
                vs[j] = [vbar[2 * j], vbar[2 * j + 1], 0];
            }
            let mut rows: Vec<Vec<i128>> = Vec::with_capacity(3 * t + nrel);
            let mut rhs: Vec<i128> = Vec::with_capacity(3 * t + nrel);
            let mut push = |e: Triple<i128>, d13: i128, d23: i128, dv: &[i128]| {
                debug_assert!(e[0] % pa == 0);
                let l1 = e[0] / pa;
                let l2 = (e[1] - l1 * t12) / pb;
                let mut row = vec![0i128; nw];
                row[0] = d13 - l1;
                row[1] = d23 - l2;
                row[2..].copy_from_slice(dv);
                rows.push(row);
                rhs.push(-(e[2] - k_term(kk, pa, t12, l1, pc)));
            };
            let no_v = vec![0i128; t];
            for j in 0..t {
                for i in 0..3 {
                    let e = engine.conj(j, &rows0[i], &vs[j]);
                    let (d13, d23) = match i {
                        0 => (sign[j], 0),
                        1 => (0, sign[j]),
                        _ => (0, 0),
                    };
                    push(e, d13, d23, &no_v);
                }
            }
            for r in 0..nrel {
                let e = engine.relator(r, &vs);
                let dv: Vec<i128> = (0..t).map(|j| rel_lin[r].1[2 * t + j][2]).collect();
                push(e, 0, 0, &dv);
            }
            if let Some(e) = count_solutions(&mut rows, &mut rhs, nw, pi, c) {
                count += pw(p, e);
            }
        });
        if blown {
            return None;
        }
    }
    budget.spend(pending * engine.words_per_check()).then_some(count)
}

/// Relator words as affine functions of `(v_11, v_12, ..., v_t1, v_t2)`
/// for the first two coordinates, followed by the `v_j3` columns (whose
/// effect is only on the third coordinate, with constant coefficient).
fn affine_relators_xy(engine: &Engine) -> Vec<(Triple<i128>, Vec<Triple<i128>>)> {
    let t = engine.t;
    (0..engine.relators.len())
        .map(|r| {
            let zero = vec![[0i128; 3]; t];
            let base = engine.relator(r, &zero);
            let diff = |j: usize, i: usize| {
                let mut vs = zero.clone();
                vs[j][i] = 1;
                let e = engine.relator(r, &vs);
                [e[0] - base[0], e[1] - base[1], e[2] - base[2]]
            };
            let mut cols: Vec<Triple<i128>> = Vec::new();
            for j in 0..t {
                cols.push(diff(j, 0));
                cols.push(diff(j, 1));
            }
            for j in 0..t {
                cols.push(diff(j, 2));
            }
            (base, cols)
        })
        .collect()
}

/// The truncated integral: for each `n ≤ m`, the coefficient of `X^n` in
/// `(1-p^{-1})^{-3} ∫ |t11|^{s-1-t} |t22|^{s-2-t} |t33|^{s-3-t}` over the
/// `(t, v)` satisfying the conditions, with no normalization of `t` or `v`.
///
/// Each variable is enumerated over all residues mod the smallest power of
/// `p` that determines every condition; each residue class has measure
/// `p^{-precision}`.
pub fn measure_coefficients(pres: &Presentation, p: u64, m: usize, cfg: &OracleConfig) -> Result<Vec<BigRational>, Error> {
    check_prime(p)?;
    let engine = Engine::new(pres);
    let budget = Budget::new(cfg.work_limit);
    let t = engine.t as u32;
    let pi = p as i128;
    let mut out = Vec::new();
    let unit_factor = BigRational::new(BigInt::from(p), BigInt::from(p - 1)).pow(3);
    for n in 0..=m as u32 {
        let mut total = BigRational::zero();
        for (a, b, c) in cells(p, pres.k, n) {
            let hits = measure_cell(&engine, p, pres.k, a, b, c, &budget).ok_or(Error::Budget { limit: cfg.work_limit, reached: n as usize })?;
            let (count, precision_sum) = hits;
            let weight_exp = a * (1 + t) + b * (2 + t) + c * (3 + t);
            let w = BigRational::new(BigInt::from(count) * BigInt::from(pi).pow(weight_exp), BigInt::from(pi).pow(precision_sum));
            total += w;
        }
        out.push(total * &unit_factor);
    }
    Ok(out)
}

/// Residues of `x` mod `p^prec` with valuation exactly `e`.
fn residues_with_valuation(p: i128, e: u32, prec: u32) -> Vec<i128> {
    let pe = p.pow(e);
    (0..p.pow(prec - e)).filter(|u| u % p != 0).map(|u| u * pe).collect()
}

fn measure_cell(engine: &Engine, p: u64, k: i64, a: u32, b: u32, c: u32, budget: &Budget) -> Option<(u128, u32)> {
    let pi = p as i128;
    let n = a + b + c;
    let t = engine.t;
    let odd_k_at_2 = p == 2 && k % 2 != 0;
    let l = n + if odd_k_at_2 { 2 } else { 0 };
    let l = l.max(1);
    // Precisions: x1/x2 data needs p^l; central data only enters mod p^c,
    // unless some generator moves x3 off its line.
    let lc = if engine.x3_line { c } else { l };
    let p11 = l.max(a + 1);
    let p22 = l.max(b + 1);
    let p33 = lc.max(c + 1);
    let (p12, p13, p23) = (l, lc, lc);
    let (pv12, pv3) = (l, lc);
    let precision_sum = p11 + p22 + p33 + p12 + p13 + p23 + t as u32 * (2 * pv12 + pv3);
    let d1 = residues_with_valuation(pi, a, p11);
    let d2 = residues_with_valuation(pi, b, p22);
    let d3 = residues_with_valuation(pi, c, p33);
    let modk = pi.pow(l + 2);
    let pc = pi.pow(c);
    let kk = k as i128;
    let mut count = 0u128;
    let mut pending = 0u64;
    let vranges: Vec<i128> = (0..3 * t).map(|i| if i % 3 == 2 { pi.pow(pv3) } else { pi.pow(pv12) }).collect();
    let vtotal: i128 = vranges.iter().product();
    // Membership with arbitrary unit parts on the diagonal, via p-adic quotients.
    let member = |diag: [i128; 3], off: [i128; 3], e: &Triple<i128>| -> bool {
        let (pa, pb) = (pi.pow(a), pi.pow(b));
        if e[0].rem_euclid(pa) != 0 {
            return false;
        }
        let u1 = diag[0] / pa;
        let l1 = (e[0] / pa) * mod_inv(u1, modk) % modk;
        let r2 = e[1] - l1 * off[0];
        if r2.rem_euclid(pb) != 0 {
            return false;
        }
        if c == 0 {
            return true;
        }
        let u2 = diag[1] / pb;
        let l2 = (r2 / pb).rem_euclid(modk) * mod_inv(u2, modk) % modk;
        let rest = e[2] - l1 * off[1] - k_term(kk, diag[0], off[0], l1, pc) - l2 * off[2];
        rest.rem_euclid(pc) == 0
    };
    for &x11 in &d1 {
        for &x22 in &d2 {
            for &x33 in &d3 {
                for x12 in 0..pi.pow(p12) {
                    for x13 in 0..pi.pow(p13) {
                        for x23 in 0..pi.pow(p23) {
                            let diag = [x11, x22, x33];
                            let off = [x12, x13, x23];
                            let rows = [[x11, x12, x13], [0, x22, x23], [0, 0, x33]];
                            let zero = [0i128; 3];
                            let conj_free = engine.k == 0;
                            if conj_free
                                && !(0..t).all(|j| rows.iter().all(|r| member(diag, off, &engine.conj(j, r, &zero))))
                            {
                                continue;
                            }
                            let mut vs = vec![[0i128; 3]; t];
                            for idx in 0..vtotal {
                                let mut rem = idx;
                                for (q, range) in vranges.iter().enumerate() {
                                    vs[q / 3][q % 3] = rem % range;
                                    rem /= range;
                                }
                                pending += 1;
                                if pending >= 1 << 14 {
                                    if !budget.spend(pending) {
                                        return None;
                                    }
                                    pending = 0;
                                }
                                let ok = (0..t).all(|j| conj_free || rows.iter().all(|r| member(diag, off, &engine.conj(j, r, &vs[j]))))
                                    && (0..engine.relators.len()).all(|r| member(diag, off, &engine.relator(r, &vs)));
                                if ok {
                                    count += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    budget.spend(pending).then_some((count, precision_sum))
}

/// Result of re-representing witnesses and checking that outcomes do not move.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct AuditReport {
    pub trials: usize,
    pub witnesses_used: usize,
    pub violations: Vec<String>,
}

/// How `invariance_audit` perturbs a pair `(t, v)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shift {
    /// By elements of `B_t` and by row operations: outcomes must not change.
    Honest,
    /// By elements outside `B_t`: a negative control that should report violations.
    Broken,
}

/// Checks coset-representative independence of the conditions.
pub fn invariance_audit(pres: &Presentation, p: u64, trials: usize, seed: u64, shift: Shift) -> Result<AuditReport, Error> {
    check_prime(p)?;
    let engine = Engine::new(pres);
    let k = pres.k as i128;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // A pool of true witnesses plus random pairs so both outcomes occur.
    let depth = if p <= 3 { 2 } else { 1 };
    let pool = witness_stream(pres, p, depth, &OracleConfig::default())?;
    let mut report = AuditReport { trials, witnesses_used: pool.len(), violations: Vec::new() };
    let t = engine.t;
    for trial in 0..trials {
        let (tb, vs) = if !pool.is_empty() && rng.gen_bool(0.5) {
            let w = &pool[rng.gen_range(0..pool.len())];
            (w.t, w.v.clone())
        } else {
            let n = rng.gen_range(0..=depth as u32);
            let cs = cells(p, pres.k, n);
            let (a, b, c) = cs[rng.gen_range(0..cs.len())];
            let base = GoodBasis::diagonal(p, pres.k, a, b, c);
            let tb = base.with_offdiag(rng.gen_range(0..base.pb()), rng.gen_range(0..base.pc()), rng.gen_range(0..base.pc()));
            let vs = (0..t).map(|_| [rng.gen_range(0..tb.pa()), rng.gen_range(0..tb.pb()), rng.gen_range(0..tb.pc())]).collect();
            (tb, vs)
        };
        let before = engine.check(&tb, &vs);
        let rows = tb.rows();
        let random_member = |rng: &mut ChaCha8Rng| {
            let mut e = [0i128; 3];
            for _ in 0..3 {
                let r = rows[rng.gen_range(0..3)];
                let r = if rng.gen_bool(0.5) { r } else { nk_inv_raw(&k, &r) };
                e = nk_mul_raw(&k, &e, &r);
            }
            e
        };
        let (tb2, vs2) = match shift {
            Shift::Honest => {
                let mut vs2 = vs.clone();
                for v in vs2.iter_mut() {
                    *v = nk_mul_raw(&k, v, &random_member(&mut rng));
                }
                // Row operations r1 ← r1 r2^λ r3^μ and r2 ← r2 r3^ν keep B_t.
                let (l, mu, nu) = (rng.gen_range(-3i128..=3), rng.gen_range(-3i128..=3), rng.gen_range(-3i128..=3));
                let r1 = nk_mul_raw(&k, &nk_mul_raw(&k, &rows[0], &crate::groupalg::nk_pow_raw(&k, &rows[1], &l)), &crate::groupalg::nk_pow_raw(&k, &rows[2], &mu));
                let r2 = nk_mul_raw(&k, &rows[1], &crate::groupalg::nk_pow_raw(&k, &rows[2], &nu));
                let tb2 = GoodBasis { t12: r1[1], t13: r1[2], t23: r2[2], ..tb };
                (tb2, vs2)
            }
            Shift::Broken => {
                let mut vs2 = vs.clone();
                // x_i is outside B_t when the matching diagonal exponent is positive.
                let outside: Vec<usize> = [tb.a, tb.b, tb.c].iter().enumerate().filter(|(_, &e)| e > 0).map(|(i, _)| i).collect();
                if t > 0 && !outside.is_empty() {
                    let i = outside[rng.gen_range(0..outside.len())];
                    let j = rng.gen_range(0..t);
                    vs2[j][i] += 1;
                }
                (tb, vs2)
            }
        };
        let after = engine.check(&tb2, &vs2);
        if before != after {
            report.violations.push(format!("trial {trial}: t={tb:?} v={vs:?} -> t'={tb2:?} v'={vs2:?}: {before} vs {after}"));
        }
    }
    Ok(report)
}

/// `1/(1-p^{-1})^3`-free sanity: `a_1 = 1` always.
pub fn leading_is_one(counts: &[BigInt]) -> bool {
    counts.first().map_or(true, |c| c.is_one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupalg::*;

    fn counts(pres: &Presentation, p: u64, m: usize, mode: Mode) -> Vec<i64> {
        count_presentation(pres, p, m, mode, &OracleConfig::default())
            .unwrap()
            .iter()
            .map(|x| i64::try_from(x).unwrap())
            .collect()
    }

    #[test]
    fn heisenberg_index_p() {
        // Index-p subgroups of the Heisenberg group are the p+1 hyperplanes of its Frattini quotient.
        assert_eq!(counts(&pres_nk(1), 2, 1, Mode::Full), vec![1, 3]);
        assert_eq!(counts(&pres_nk(0), 2, 1, Mode::Full), vec![1, 7]);
    }

    #[test]
    fn g6_at_two_is_trivial() {
        assert_eq!(counts(&pres_g6(), 2, 3, Mode::Full), vec![1, 0, 0, 0]);
    }

    #[test]
    fn g2_at_three() {
        assert_eq!(counts(&pres_g2(), 3, 1, Mode::Full), vec![1, 13]);
    }

    #[test]
    fn p2_at_two_m1() {
        assert_eq!(counts(&pres_p2(1), 2, 1, Mode::Full), vec![1, 6]);
    }

    #[test]
    fn modes_agree_small() {
        for pres in [pres_g2(), pres_g3(), pres_b2(), pres_g6(), pres_p2(1), pres_pg(2), pres_p2gg(1), pres_p4(1, 4), pres_p3('G', 2), pres_p6('F', 1)] {
            for p in [2u64, 3] {
                let full = counts(&pres, p, 2, Mode::Full);
                assert_eq!(full, counts(&pres, p, 2, Mode::Fast), "k={} p={p}", pres.k);
            }
        }
    }
}

//! Membership in the open subgroup `B_t` spanned by the rows of an upper
//! triangular good basis `t`.
//!
//! Rows are `r1 = x1^{p^a} x2^{t12} x3^{t13}`, `r2 = x2^{p^b} x3^{t23}`,
//! `r3 = x3^{p^c}`. When `t` is a good basis every element of `B_t` is
//! `r1^λ1 r2^λ2 r3^λ3`, which unwinds to
//!
//! ```text
//! e1 = λ1 p^a
//! e2 = λ1 t12 + λ2 p^b
//! e3 = λ1 t13 + k p^a t12 λ1(λ1-1)/2 + λ2 t23 + λ3 p^c
//! ```
//!
//! and the test solves for `λ1`, `λ2` in turn.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::groupalg::{nk_inv_raw, nk_mul_raw, NkElement, Triple};

/// Upper triangular basis with diagonal `p^a, p^b, p^c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GoodBasis {
    pub p: u64,
    pub k: i64,
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub t12: i128,
    pub t13: i128,
    pub t23: i128,
}

impl GoodBasis {
    pub fn identity(p: u64, k: i64) -> Self {
        GoodBasis { p, k, a: 0, b: 0, c: 0, t12: 0, t13: 0, t23: 0 }
    }

    pub fn diagonal(p: u64, k: i64, a: u32, b: u32, c: u32) -> Self {
        GoodBasis { p, k, a, b, c, t12: 0, t13: 0, t23: 0 }
    }

    pub fn with_offdiag(mut self, t12: i128, t13: i128, t23: i128) -> Self {
        self.t12 = t12;
        self.t13 = t13;
        self.t23 = t23;
        self
    }

    pub fn pa(&self) -> i128 {
        (self.p as i128).pow(self.a)
    }

    pub fn pb(&self) -> i128 {
        (self.p as i128).pow(self.b)
    }

    pub fn pc(&self) -> i128 {
        (self.p as i128).pow(self.c)
    }

    /// Exponent `n = a + b + c`; the index of `B_t` is `p^n`.
    pub fn depth(&self) -> u32 {
        self.a + self.b + self.c
    }

    /// Reduce off-diagonal entries: `t12 mod p^b`, `t13` and `t23 mod p^c`.
    pub fn hnf_reduce(mut self) -> Self {
        self.t12 = self.t12.rem_euclid(self.pb());
        self.t13 = self.t13.rem_euclid(self.pc());
        self.t23 = self.t23.rem_euclid(self.pc());
        self
    }

    pub fn rows(&self) -> [Triple<i128>; 3] {
        [[self.pa(), self.t12, self.t13], [0, self.pb(), self.t23], [0, 0, self.pc()]]
    }
}

/// `t33 | k t11 t22`.
pub fn is_good_basis(t: &GoodBasis) -> bool {
    if t.k == 0 {
        return true;
    }
    // Compare valuations so large exponents cannot overflow.
    let vk = vp(t.k.unsigned_abs() as u128, t.p);
    t.c <= vk + t.a + t.b
}

pub fn vp(mut n: u128, p: u64) -> u32 {
    if n == 0 {
        return u32::MAX;
    }
    let p = p as u128;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

fn mulmod(a: i128, b: i128, m: i128) -> i128 {
    (a.rem_euclid(m) * b.rem_euclid(m)).rem_euclid(m)
}

/// Fast membership test on raw exponents.
#[inline]
pub fn in_bt_raw(t: &GoodBasis, e: &Triple<i128>) -> bool {
    let (pa, pb, pc) = (t.pa(), t.pb(), t.pc());
    if e[0].rem_euclid(pa) != 0 {
        return false;
    }
    let l1 = e[0] / pa;
    let r2 = e[1] - l1 * t.t12;
    if r2.rem_euclid(pb) != 0 {
        return false;
    }
    if pc == 1 {
        return true;
    }
    let l2 = r2 / pb;
    let binom = if l1 % 2 == 0 { mulmod(l1 / 2, l1 - 1, pc) } else { mulmod(l1, (l1 - 1) / 2, pc) };
    let kterm = mulmod(mulmod(t.k as i128 * pa % pc, t.t12, pc), binom, pc);
    let rest = (e[2].rem_euclid(pc) - mulmod(l1, t.t13, pc) - kterm - mulmod(l2, t.t23, pc)).rem_euclid(pc);
    rest == 0
}

/// Membership of an arbitrary-precision element.
pub fn in_bt(t: &GoodBasis, e: &NkElement<BigInt>) -> bool {
    let conv = |x: &BigInt| x.to_i128();
    match (conv(&e.e[0]), conv(&e.e[1]), conv(&e.e[2])) {
        (Some(a), Some(b), Some(c)) if a.abs() < 1 << 60 && b.abs() < 1 << 60 => in_bt_raw(t, &[a, b, c]),
        _ => in_bt_big(t, &e.e),
    }
}

fn in_bt_big(t: &GoodBasis, e: &Triple<BigInt>) -> bool {
    let (pa, pb, pc) = (BigInt::from(t.pa()), BigInt::from(t.pb()), BigInt::from(t.pc()));
    let md = |x: &BigInt, m: &BigInt| ((x % m) + m) % m;
    if !md(&e[0], &pa).is_zero() {
        return false;
    }
    let l1 = &e[0] / &pa;
    let r2 = &e[1] - &l1 * BigInt::from(t.t12);
    if !md(&r2, &pb).is_zero() {
        return false;
    }
    let l2 = &r2 / &pb;
    let binom = (&l1 * (&l1 - 1)) / 2;
    let rest = &e[2]
        - &l1 * BigInt::from(t.t13)
        - BigInt::from(t.k) * &pa * BigInt::from(t.t12) * binom
        - &l2 * BigInt::from(t.t23);
    md(&rest, &pc).is_zero()
}

/// Independent checker: the image of `B_t` in `N_k` modulo `p^{a+b+c}`
/// (coordinates mod `P`, multiplication mod `P`), built by closure.
/// The kernel of that reduction lies in `B_t`, so the test is exact.
pub struct ClosureChecker {
    modulus: i128,
    k: i128,
    members: HashSet<Triple<i128>>,
}

impl ClosureChecker {
    pub fn new(t: &GoodBasis) -> Self {
        let modulus = (t.p as i128).pow(t.depth()).max(1);
        let k = t.k as i128;
        let reduce = |x: Triple<i128>| x.map(|c| c.rem_euclid(modulus));
        let gens: Vec<Triple<i128>> = t.rows().iter().map(|r| reduce(*r)).collect();
        let mut members = HashSet::new();
        let id = [0i128; 3];
        members.insert(id);
        let mut frontier = vec![id];
        // Finite group, so closure under right multiplication by generators suffices.
        while let Some(g) = frontier.pop() {
            for h in &gens {
                let n = reduce(nk_mul_raw(&k, &g, h));
                if members.insert(n) {
                    frontier.push(n);
                }
            }
        }
        ClosureChecker { modulus, k, members }
    }

    pub fn contains(&self, e: &Triple<i128>) -> bool {
        self.members.contains(&e.map(|c| c.rem_euclid(self.modulus)))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn inverse_closed(&self) -> bool {
        self.members
            .iter()
            .all(|e| self.contains(&nk_inv_raw(&self.k, e)))
    }
}

//! Exact arithmetic in `N_k` and in the almost Bieberbach groups built on it.
//!
//! `N_k = <x1,x2,x3 : [x2,x1] = x3^k, x3 central>`. Elements are kept in the
//! normal form `x1^a1 x2^a2 x3^a3`, and collecting `x2 x1 = x1 x2 x3^k` gives
//!
//! `(a1,a2,a3)(b1,b2,b3) = (a1+b1, a2+b2, a3+b3 + k a2 b1)`.
//!
//! A group element is `x^n γ_q` where `γ_q` is a fixed coset representative of
//! the holonomy element `q` (a normal word `g1^e1 g2^e2` in at most two
//! generators). Multiplying moves `x`-letters leftwards through `γ`-letters with
//! the conjugation automorphisms and inserts the power/commutation cocycles.

use std::fmt::{self, Debug, Display};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Num, Signed};
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Integer types usable for exponent arithmetic (`i128` in hot loops, `BigInt` for the API).
pub trait Int:
    Clone + PartialEq + Eq + Debug + Display + Num + Signed + Integer + From<i64> + Send + Sync
{
}
impl Int for i128 {}
impl Int for i64 {}
impl Int for BigInt {}

pub type Triple<T> = [T; 3];

pub fn triple<T: Int>(v: [i64; 3]) -> Triple<T> {
    [T::from(v[0]), T::from(v[1]), T::from(v[2])]
}

pub fn nk_mul_raw<T: Int>(k: &T, a: &Triple<T>, b: &Triple<T>) -> Triple<T> {
    [
        a[0].clone() + b[0].clone(),
        a[1].clone() + b[1].clone(),
        a[2].clone() + b[2].clone() + k.clone() * a[1].clone() * b[0].clone(),
    ]
}

pub fn nk_inv_raw<T: Int>(k: &T, a: &Triple<T>) -> Triple<T> {
    [-a[0].clone(), -a[1].clone(), -a[2].clone() + k.clone() * a[0].clone() * a[1].clone()]
}

/// `a^n` for any integer `n`: `(n a1, n a2, n a3 + k a1 a2 n(n-1)/2)`.
pub fn nk_pow_raw<T: Int>(k: &T, a: &Triple<T>, n: &T) -> Triple<T> {
    let two = T::from(2);
    let binom = (n.clone() * (n.clone() - T::one())) / two;
    [
        n.clone() * a[0].clone(),
        n.clone() * a[1].clone(),
        n.clone() * a[2].clone() + k.clone() * a[0].clone() * a[1].clone() * binom,
    ]
}

pub fn nk_is_identity<T: Int>(a: &Triple<T>) -> bool {
    a.iter().all(|x| x.is_zero())
}

/// Element of `N_k` with its structure constant attached.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NkElement<T: Int = BigInt> {
    pub k: T,
    pub e: Triple<T>,
}

impl<T: Int> NkElement<T> {
    pub fn new(k: T, e: Triple<T>) -> Self {
        NkElement { k, e }
    }

    pub fn identity(k: T) -> Self {
        NkElement { k, e: [T::zero(), T::zero(), T::zero()] }
    }

    pub fn inv(&self) -> Self {
        NkElement { k: self.k.clone(), e: nk_inv_raw(&self.k, &self.e) }
    }

    pub fn pow(&self, n: &T) -> Self {
        NkElement { k: self.k.clone(), e: nk_pow_raw(&self.k, &self.e, n) }
    }
}

pub fn nk_mul<T: Int>(a: &NkElement<T>, b: &NkElement<T>) -> Result<NkElement<T>, Error> {
    if a.k != b.k {
        return Err(Error::MismatchedK(a.k.to_string(), b.k.to_string()));
    }
    Ok(NkElement { k: a.k.clone(), e: nk_mul_raw(&a.k, &a.e, &b.e) })
}

/// Images of `x1, x2, x3` under an automorphism of `N_k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutomorphismSpec {
    pub images: [[i64; 3]; 3],
}

impl AutomorphismSpec {
    pub fn identity() -> Self {
        AutomorphismSpec { images: [[1, 0, 0], [0, 1, 0], [0, 0, 1]] }
    }

    pub fn apply<T: Int>(&self, k: &T, a: &Triple<T>) -> Triple<T> {
        let imgs: [Triple<T>; 3] = [triple(self.images[0]), triple(self.images[1]), triple(self.images[2])];
        apply_images(k, &imgs, a)
    }

    /// Does the map send `x2 x1` and `x1 x2 x3^k` to the same element?
    pub fn respects_relation(&self, k: i64) -> bool {
        let k = BigInt::from(k);
        let [f1, f2, f3]: [Triple<BigInt>; 3] =
            [triple(self.images[0]), triple(self.images[1]), triple(self.images[2])];
        let lhs = nk_mul_raw(&k, &f2, &f1);
        let rhs = nk_mul_raw(&k, &nk_mul_raw(&k, &f1, &f2), &nk_pow_raw(&k, &f3, &k));
        // x3 must also stay central: its image commutes with both generators.
        let central = |g: &Triple<BigInt>| nk_mul_raw(&k, &f3, g) == nk_mul_raw(&k, g, &f3);
        lhs == rhs && central(&f1) && central(&f2)
    }

    /// Whether the image of `x3` is `x3^{±1}`.
    pub fn preserves_center_line(&self) -> bool {
        let z = self.images[2];
        z[0] == 0 && z[1] == 0 && z[2].abs() == 1
    }
}

pub fn apply_images<T: Int>(k: &T, imgs: &[Triple<T>; 3], a: &Triple<T>) -> Triple<T> {
    let p1 = nk_pow_raw(k, &imgs[0], &a[0]);
    let p2 = nk_pow_raw(k, &imgs[1], &a[1]);
    let p3 = nk_pow_raw(k, &imgs[2], &a[2]);
    nk_mul_raw(k, &nk_mul_raw(k, &p1, &p2), &p3)
}

fn compose_images<T: Int>(k: &T, outer: &[Triple<T>; 3], inner: &[Triple<T>; 3]) -> [Triple<T>; 3] {
    [apply_images(k, outer, &inner[0]), apply_images(k, outer, &inner[1]), apply_images(k, outer, &inner[2])]
}

/// A holonomy generator `g`: its order `o`, the element `g^o ∈ N`, and the
/// automorphism `y ↦ g y g^{-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HolonomyGen {
    pub name: String,
    pub order: u32,
    pub power: [i64; 3],
    pub action: AutomorphismSpec,
}

/// Letters of words in `G`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Letter {
    /// Holonomy generator `i` raised to a (possibly negative) exponent.
    G(usize, i32),
    /// `x_j^e` with `j ∈ {0,1,2}`.
    X(usize, i64),
}

pub type Word = Vec<Letter>;

/// A defining relation `lhs = rhs` of the presentation, kept as printed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub lhs: Word,
    pub rhs: Word,
}

/// Machine form of a presentation: `N_k` plus at most two holonomy generators.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Presentation {
    pub k: i64,
    pub gens: Vec<HolonomyGen>,
    /// For two generators, `g2 g1 = w g1 g2` with this `w ∈ N`.
    pub swap: Option<[i64; 3]>,
    pub relations: Vec<Relation>,
    /// Relators of `G/N` (words in holonomy letters only) used for subgroup conditions.
    pub relators: Vec<Word>,
}

impl Presentation {
    /// `t`: number of holonomy generators.
    pub fn t(&self) -> usize {
        self.gens.len()
    }

    /// `r = |G/N|`.
    pub fn order(&self) -> usize {
        self.gens.iter().map(|g| g.order as usize).product()
    }

    pub fn arith<T: Int>(&self) -> GroupArith<T> {
        GroupArith::new(self)
    }
}

/// `x^n γ_q` in the fixed normal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupElement<T: Int = BigInt> {
    pub holonomy: usize,
    pub n: Triple<T>,
}

impl<T: Int> GroupElement<T> {
    pub fn is_identity(&self) -> bool {
        self.holonomy == 0 && nk_is_identity(&self.n)
    }
}

impl<T: Int> fmt::Display for GroupElement<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x^({},{},{})·γ[{}]", self.n[0], self.n[1], self.n[2], self.holonomy)
    }
}

/// Precomputed multiplication data for one presentation.
#[derive(Clone, Debug)]
pub struct GroupArith<T: Int> {
    pub k: T,
    orders: Vec<u32>,
    /// Conjugation by `γ_q`, as images of `x1,x2,x3`.
    phi: Vec<[Triple<T>; 3]>,
    /// `γ_q γ_r = coc[q][r] γ_{prod[q][r]}`.
    coc: Vec<Vec<Triple<T>>>,
    prod: Vec<Vec<usize>>,
    inv_index: Vec<usize>,
    gen_index: Vec<usize>,
}

impl<T: Int> GroupArith<T> {
    pub fn new(pres: &Presentation) -> Self {
        let k = T::from(pres.k);
        let orders: Vec<u32> = pres.gens.iter().map(|g| g.order).collect();
        let size: usize = orders.iter().map(|&o| o as usize).product::<usize>().max(1);
        let id_imgs: [Triple<T>; 3] = [triple([1, 0, 0]), triple([0, 1, 0]), triple([0, 0, 1])];
        let gen_imgs: Vec<[Triple<T>; 3]> = pres
            .gens
            .iter()
            .map(|g| [triple(g.action.images[0]), triple(g.action.images[1]), triple(g.action.images[2])])
            .collect();
        let exps = |q: usize| -> (u32, u32) {
            match orders.len() {
                0 => (0, 0),
                1 => (q as u32, 0),
                _ => ((q % orders[0] as usize) as u32, (q / orders[0] as usize) as u32),
            }
        };
        let index = |e1: u32, e2: u32| -> usize {
            match orders.len() {
                0 => 0,
                1 => e1 as usize,
                _ => e1 as usize + orders[0] as usize * e2 as usize,
            }
        };
        let gen_pow = |i: usize, e: u32| -> [Triple<T>; 3] {
            let mut acc = id_imgs.clone();
            for _ in 0..e {
                acc = compose_images(&k, &gen_imgs[i], &acc);
            }
            acc
        };
        let phi: Vec<[Triple<T>; 3]> = (0..size)
            .map(|q| {
                let (e1, e2) = exps(q);
                match orders.len() {
                    0 => id_imgs.clone(),
                    1 => gen_pow(0, e1),
                    _ => compose_images(&k, &gen_pow(0, e1), &gen_pow(1, e2)),
                }
            })
            .collect();

        let zero: Triple<T> = triple([0, 0, 0]);
        let powers: Vec<Triple<T>> = pres.gens.iter().map(|g| triple(g.power)).collect();
        let swap: Triple<T> = triple(pres.swap.unwrap_or([0, 0, 0]));

        // Right-multiply the state x^n g1^e1 g2^e2 by a single generator.
        let mul_gen = |n: &Triple<T>, e1: u32, e2: u32, which: usize| -> (Triple<T>, u32, u32) {
            if which == 1 {
                if e2 + 1 < orders[1] {
                    return (n.clone(), e1, e2 + 1);
                }
                let z = apply_images(&k, &gen_pow(0, e1), &powers[1]);
                return (nk_mul_raw(&k, n, &z), e1, 0);
            }
            // g2^e2 g1 = y g1 g2^e2 with y = φ2^{e2-1}(w) ... φ2^0(w).
            let mut y = zero.clone();
            for j in 0..e2 {
                let wj = apply_images(&k, &gen_pow(1, j), &swap);
                y = nk_mul_raw(&k, &wj, &y);
            }
            let y = apply_images(&k, &gen_pow(0, e1), &y);
            let n2 = nk_mul_raw(&k, n, &y);
            if e1 + 1 < orders[0] {
                (n2, e1 + 1, e2)
            } else {
                (nk_mul_raw(&k, &n2, &powers[0]), 0, e2)
            }
        };

        let mut coc = vec![vec![zero.clone(); size]; size];
        let mut prod = vec![vec![0usize; size]; size];
        for q in 0..size {
            for r in 0..size {
                let (mut n, mut e1, mut e2) = (zero.clone(), exps(q).0, exps(q).1);
                let (f1, f2) = exps(r);
                for _ in 0..f1 {
                    let s = mul_gen(&n, e1, e2, 0);
                    n = s.0;
                    e1 = s.1;
                    e2 = s.2;
                }
                for _ in 0..f2 {
                    let s = mul_gen(&n, e1, e2, 1);
                    n = s.0;
                    e1 = s.1;
                    e2 = s.2;
                }
                coc[q][r] = n;
                prod[q][r] = index(e1, e2);
            }
        }
        let inv_index = (0..size).map(|q| (0..size).find(|&r| prod[q][r] == 0).unwrap_or(0)).collect();
        let gen_index = (0..orders.len()).map(|i| if i == 0 { index(1 % orders[0].max(1), 0) } else { index(0, 1) }).collect();
        GroupArith { k, orders, phi, coc, prod, inv_index, gen_index }
    }

    pub fn holonomy_size(&self) -> usize {
        self.prod.len()
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn identity(&self) -> GroupElement<T> {
        GroupElement { holonomy: 0, n: triple([0, 0, 0]) }
    }

    pub fn from_n(&self, n: Triple<T>) -> GroupElement<T> {
        GroupElement { holonomy: 0, n }
    }

    pub fn generator(&self, i: usize) -> GroupElement<T> {
        GroupElement { holonomy: self.gen_index[i], n: triple([0, 0, 0]) }
    }

    /// `y ↦ γ_q y γ_q^{-1}`.
    pub fn conj(&self, q: usize, y: &Triple<T>) -> Triple<T> {
        apply_images(&self.k, &self.phi[q], y)
    }

    pub fn mul(&self, a: &GroupElement<T>, b: &GroupElement<T>) -> GroupElement<T> {
        // x^n γ_q x^m γ_r = x^n φ_q(m) coc(q,r) γ_{qr}
        let moved = self.conj(a.holonomy, &b.n);
        let n = nk_mul_raw(&self.k, &nk_mul_raw(&self.k, &a.n, &moved), &self.coc[a.holonomy][b.holonomy]);
        GroupElement { holonomy: self.prod[a.holonomy][b.holonomy], n }
    }

    pub fn inv(&self, a: &GroupElement<T>) -> GroupElement<T> {
        let r = self.inv_index[a.holonomy];
        let c = &self.coc[a.holonomy][r];
        let inner = nk_mul_raw(&self.k, &nk_inv_raw(&self.k, c), &nk_inv_raw(&self.k, &a.n));
        GroupElement { holonomy: r, n: self.conj(r, &inner) }
    }

    pub fn pow(&self, a: &GroupElement<T>, n: i64) -> GroupElement<T> {
        let base = if n < 0 { self.inv(a) } else { a.clone() };
        let mut acc = self.identity();
        for _ in 0..n.unsigned_abs() {
            acc = self.mul(&acc, &base);
        }
        acc
    }

    /// Evaluate a word with holonomy generator `i` replaced by `subs[i]`.
    pub fn eval_word_with(&self, w: &[Letter], subs: &[GroupElement<T>]) -> GroupElement<T> {
        let mut acc = self.identity();
        for l in w {
            let f = match *l {
                Letter::G(i, e) => self.pow(&subs[i], e as i64),
                Letter::X(j, e) => {
                    let mut n: Triple<T> = triple([0, 0, 0]);
                    n[j] = T::from(e);
                    self.from_n(n)
                }
            };
            acc = self.mul(&acc, &f);
        }
        acc
    }

    pub fn eval_word(&self, w: &[Letter]) -> GroupElement<T> {
        let gens: Vec<_> = (0..self.orders.len()).map(|i| self.generator(i)).collect();
        self.eval_word_with(w, &gens)
    }

    /// `(γ_j x^v)^{-1} x^target (γ_j x^v)`, an element of `N`.
    pub fn conjugation_word(&self, gen: usize, target: &Triple<T>, v: &Triple<T>) -> Triple<T> {
        let g = self.mul(&self.generator(gen), &self.from_n(v.clone()));
        let r = self.mul(&self.mul(&self.inv(&g), &self.from_n(target.clone())), &g);
        debug_assert_eq!(r.holonomy, 0);
        r.n
    }

    /// Relator `w` of `G/N` evaluated at `γ_i x^{v_i}`.
    pub fn relation_word(&self, w: &[Letter], vs: &[Triple<T>]) -> Triple<T> {
        let subs: Vec<GroupElement<T>> = vs
            .iter()
            .enumerate()
            .map(|(i, v)| self.mul(&self.generator(i), &self.from_n(v.clone())))
            .collect();
        let r = self.eval_word_with(w, &subs);
        debug_assert_eq!(r.holonomy, 0);
        r.n
    }
}

/// Normal-form product in the family's group.
pub fn g_mul(pres: &Presentation, a: &GroupElement<BigInt>, b: &GroupElement<BigInt>) -> GroupElement<BigInt> {
    pres.arith::<BigInt>().mul(a, b)
}

pub fn conjugation_word(pres: &Presentation, gen_index: usize, target: &NkElement<BigInt>, v: [i64; 3]) -> NkElement<BigInt> {
    let ar = pres.arith::<BigInt>();
    NkElement::new(ar.k.clone(), ar.conjugation_word(gen_index, &target.e, &triple(v)))
}

pub fn relation_word(pres: &Presentation, relator_index: usize, v: &[[i64; 3]]) -> NkElement<BigInt> {
    let ar = pres.arith::<BigInt>();
    let vs: Vec<Triple<BigInt>> = v.iter().map(|x| triple(*x)).collect();
    NkElement::new(ar.k.clone(), ar.relation_word(&pres.relators[relator_index], &vs))
}

/// Relations of the presentation that fail in the constructed arithmetic.
pub fn failing_relations(pres: &Presentation) -> Vec<usize> {
    let ar = pres.arith::<BigInt>();
    pres.relations
        .iter()
        .enumerate()
        .filter(|(_, r)| ar.eval_word(&r.lhs) != ar.eval_word(&r.rhs))
        .map(|(i, _)| i)
        .collect()
}

// Presentation builders. `G(i,e)` is a holonomy letter, `X(j,e)` is x_{j+1}^e.

fn gen(name: &str, order: u32, power: [i64; 3], images: [[i64; 3]; 3]) -> HolonomyGen {
    HolonomyGen { name: name.to_string(), order, power, action: AutomorphismSpec { images } }
}

fn x(j: usize, e: i64) -> Letter {
    Letter::X(j, e)
}

fn g(i: usize, e: i32) -> Letter {
    Letter::G(i, e)
}

fn xw(v: [i64; 3]) -> Word {
    (0..3).filter(|&j| v[j] != 0).map(|j| x(j, v[j])).collect()
}

/// Relations common to a presentation: commutators in `N_k` plus each
/// generator's conjugation action and power.
fn standard_relations(k: i64, gens: &[HolonomyGen]) -> Vec<Relation> {
    let mut rels = vec![
        Relation { lhs: vec![x(1, 1), x(0, 1)], rhs: vec![x(0, 1), x(1, 1), x(2, k)] },
        Relation { lhs: vec![x(2, 1), x(0, 1)], rhs: vec![x(0, 1), x(2, 1)] },
        Relation { lhs: vec![x(2, 1), x(1, 1)], rhs: vec![x(1, 1), x(2, 1)] },
    ];
    for (i, hg) in gens.iter().enumerate() {
        rels.push(Relation { lhs: vec![g(i, hg.order as i32)], rhs: xw(hg.power) });
        for j in 0..3 {
            rels.push(Relation { lhs: vec![g(i, 1), x(j, 1), g(i, -1)], rhs: xw(hg.action.images[j]) });
        }
    }
    rels
}

fn cyclic(k: i64, hg: HolonomyGen) -> Presentation {
    let o = hg.order as i32;
    let relations = standard_relations(k, std::slice::from_ref(&hg));
    Presentation { k, gens: vec![hg], swap: None, relations, relators: vec![vec![g(0, o)]] }
}

pub fn pres_nk(k: i64) -> Presentation {
    Presentation { k, gens: vec![], swap: None, relations: standard_relations(k, &[]), relators: vec![] }
}

pub fn pres_g2() -> Presentation {
    cyclic(0, gen("γ", 2, [1, 0, 0], [[1, 0, 0], [0, -1, 0], [0, 0, -1]]))
}

pub fn pres_g3() -> Presentation {
    cyclic(0, gen("γ", 3, [1, 0, 0], [[1, 0, 0], [0, 0, 1], [0, -1, -1]]))
}

pub fn pres_g4() -> Presentation {
    cyclic(0, gen("γ", 4, [1, 0, 0], [[1, 0, 0], [0, 0, 1], [0, -1, 0]]))
}

/// The printed power relation is `γ^6 = 1`; the translated condition `x1^{6v1+1}`
/// only makes sense for `γ^6 = x1`, which is what is stored.
pub fn pres_g5() -> Presentation {
    cyclic(0, gen("γ", 6, [1, 0, 0], [[1, 0, 0], [0, 0, 1], [0, -1, 1]]))
}

pub fn pres_b1() -> Presentation {
    cyclic(0, gen("γ", 2, [1, 0, 0], [[1, 0, 0], [0, 1, 0], [0, 0, -1]]))
}

pub fn pres_b2() -> Presentation {
    cyclic(0, gen("γ", 2, [1, 0, 0], [[1, 0, 0], [0, 1, 0], [0, 1, -1]]))
}

fn two_gen(k: i64, a: HolonomyGen, b: HolonomyGen, swap: [i64; 3], extra: Vec<Relation>, relators: Vec<Word>) -> Presentation {
    let gens = vec![a, b];
    let mut relations = standard_relations(k, &gens);
    relations.extend(extra);
    Presentation { k, gens, swap: Some(swap), relations, relators }
}

pub fn pres_g6() -> Presentation {
    two_gen(
        0,
        gen("α", 2, [1, 0, 0], [[1, 0, 0], [0, -1, 0], [0, 0, -1]]),
        gen("β", 2, [0, 1, 0], [[-1, 0, 0], [0, 1, 0], [0, 0, -1]]),
        [-1, 1, 1],
        vec![Relation { lhs: vec![g(0, 1), g(1, 1), g(0, 1), g(1, 1)], rhs: vec![x(2, -1)] }],
        vec![vec![g(0, 2)], vec![g(1, 2)], vec![g(0, 1), g(1, 1), g(0, 1), g(1, 1)]],
    )
}

fn pres_b34(w: [i64; 3]) -> Presentation {
    two_gen(
        0,
        gen("α", 2, [1, 0, 0], [[1, 0, 0], [0, -1, 0], [0, 0, -1]]),
        gen("β", 2, [0, 1, 0], [[1, 0, 0], [0, 1, 0], [0, 0, -1]]),
        w,
        vec![Relation { lhs: vec![g(1, 1), g(0, 1), g(1, -1), g(0, -1)], rhs: xw(w) }],
        vec![vec![g(0, 2)], vec![g(1, 2)], vec![g(1, 1), g(0, 1), g(1, -1), g(0, -1)]],
    )
}

pub fn pres_b3() -> Presentation {
    pres_b34([0, 1, 0])
}

pub fn pres_b4() -> Presentation {
    pres_b34([0, 1, 1])
}

pub fn pres_p2(q: i64) -> Presentation {
    cyclic(2 * q, gen("γ", 2, [0, 0, 1], [[-1, 0, 0], [0, -1, 0], [0, 0, 1]]))
}

pub fn pres_pg(q: i64) -> Presentation {
    let mut p = cyclic(2 * q, gen("γ", 2, [1, 0, 0], [[1, 0, 0], [0, -1, q], [0, 0, -1]]));
    // As printed: γ x2 = x2^{-1} γ x3^{-q}.
    p.relations.push(Relation { lhs: vec![g(0, 1), x(1, 1)], rhs: vec![x(1, -1), g(0, 1), x(2, -q)] });
    p
}

pub fn pres_p2gg(q: i64) -> Presentation {
    let k = 4 * q;
    // γ2 γ1 = x2 x1 x3^{-(2q+1)} γ1 γ2; x2 x1 = x1 x2 x3^k.
    let w = [1, 1, k - (2 * q + 1)];
    let extra = vec![
        Relation { lhs: vec![g(0, 1), x(0, 1)], rhs: vec![x(0, -1), g(0, 1), x(2, 2 * q)] },
        Relation { lhs: vec![g(0, 1), x(1, 1)], rhs: vec![x(1, -1), g(0, 1), x(2, -2 * q)] },
        Relation { lhs: vec![g(1, 1), x(1, 1)], rhs: vec![x(1, -1), g(1, 1), x(2, -2 * q)] },
        Relation {
            lhs: vec![g(0, 1), g(1, 1)],
            rhs: vec![x(0, -1), x(1, -1), g(1, 1), g(0, 1), x(2, -(2 * q + 1))],
        },
    ];
    two_gen(
        k,
        gen("γ1", 2, [0, 0, 1], [[-1, 0, 2 * q], [0, -1, -2 * q], [0, 0, 1]]),
        gen("γ2", 2, [1, 0, 0], [[1, 0, 0], [0, -1, 2 * q], [0, 0, -1]]),
        w,
        extra,
        vec![vec![g(0, 2)], vec![g(1, 2)], vec![g(0, 1), g(1, 1), g(0, 1), g(1, 1)]],
    )
}

/// `ε = 2` gives E (`k = 2q`, `γ^4 = x3`), `ε = 4` gives F (`k = 4q`, `γ^4 = x3^3`).
pub fn pres_p4(q: i64, eps: i64) -> Presentation {
    let (k, pw) = if eps == 2 { (2 * q, 1) } else { (4 * q, 3) };
    cyclic(k, gen("γ", 4, [0, 0, pw], [[0, 1, 0], [-1, 0, 0], [0, 0, 1]]))
}

/// `variant`: 'E' (`k=3q`, `γ^3=x3`), 'F' (`k=3q`, `γ^3=x3^2`), 'G' (`k=r`, `γ x1 = x2 γ x3`).
pub fn pres_p3(variant: char, param: i64) -> Presentation {
    let (k, pw, delta) = match variant {
        'E' => (3 * param, 1, 0),
        'F' => (3 * param, 2, 0),
        _ => (param, 1, 1),
    };
    cyclic(k, gen("γ", 3, [0, 0, pw], [[0, 1, delta], [-1, -1, 0], [0, 0, 1]]))
}

/// 'E': `k=6q, γ^6=x3`; 'F': `k=6q+4, γ^6=x3`; 'G': `k=6q, γ^6=x3^5`; 'H': `k=6q+2, γ^6=x3^5`.
pub fn pres_p6(variant: char, q: i64) -> Presentation {
    let (k, pw) = match variant {
        'E' => (6 * q, 1),
        'F' => (6 * q + 4, 1),
        'G' => (6 * q, 5),
        _ => (6 * q + 2, 5),
    };
    cyclic(k, gen("γ", 6, [0, 0, pw], [[1, 1, 0], [-1, 0, 0], [0, 0, 1]]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nk(k: i64, e: [i64; 3]) -> NkElement<BigInt> {
        NkElement::new(BigInt::from(k), triple(e))
    }

    #[test]
    fn commutator_convention() {
        let x1 = nk(1, [1, 0, 0]);
        let x2 = nk(1, [0, 1, 0]);
        assert_eq!(nk_mul(&x2, &x1).unwrap(), nk(1, [1, 1, 1]));
        assert_eq!(nk_mul(&x1, &x2).unwrap(), nk(1, [1, 1, 0]));
        // [x2,x1] = x2^-1 x1^-1 x2 x1
        let c = [x2.inv(), x1.inv(), x2.clone(), x1.clone()]
            .iter()
            .skip(1)
            .fold(x2.inv(), |acc, y| nk_mul(&acc, y).unwrap());
        assert_eq!(c, nk(1, [0, 0, 1]));
    }

    #[test]
    fn abelian_and_k2_cases() {
        assert_eq!(nk_mul(&nk(0, [3, -2, 5]), &nk(0, [1, 7, -1])).unwrap(), nk(0, [4, 5, 4]));
        assert_eq!(nk_mul(&nk(2, [0, 1, 0]), &nk(2, [1, 0, 0])).unwrap(), nk(2, [1, 1, 2]));
        assert!(nk_mul(&nk(2, [0, 1, 0]), &nk(1, [1, 0, 0])).is_err());
    }

    #[test]
    fn power_formula_matches_repeated_product() {
        let k = 3i128;
        let a: Triple<i128> = [2, -5, 7];
        let mut acc: Triple<i128> = [0, 0, 0];
        for n in 0..6i128 {
            assert_eq!(nk_pow_raw(&k, &a, &n), acc);
            acc = nk_mul_raw(&k, &acc, &a);
        }
        let ainv = nk_inv_raw(&k, &a);
        assert_eq!(nk_pow_raw(&k, &a, &-3), nk_mul_raw(&k, &nk_mul_raw(&k, &ainv, &ainv), &ainv));
    }

    #[test]
    fn g2_conjugation_example() {
        let p = pres_g2();
        let ar = p.arith::<BigInt>();
        let gm = ar.generator(0);
        let x2 = ar.from_n(triple([0, 1, 0]));
        let r = ar.mul(&ar.mul(&gm, &x2), &ar.inv(&gm));
        assert_eq!(r, ar.from_n(triple([0, -1, 0])));
    }

    #[test]
    fn p2_gamma_squared() {
        let p = pres_p2(1);
        let ar = p.arith::<BigInt>();
        let gm = ar.generator(0);
        assert_eq!(ar.mul(&gm, &gm), ar.from_n(triple([0, 0, 1])));
    }

    #[test]
    fn conjugating_identity_is_identity() {
        let p = pres_p2gg(2);
        let ar = p.arith::<i128>();
        for j in 0..2 {
            assert_eq!(ar.conjugation_word(j, &[0, 0, 0], &[3, -4, 5]), [0, 0, 0]);
        }
    }
}

#[cfg(test)]
mod presentation_tests {
    use super::*;

    fn all() -> Vec<(String, Presentation)> {
        let mut v = vec![
            ("G2".into(), pres_g2()),
            ("G3".into(), pres_g3()),
            ("G4".into(), pres_g4()),
            ("G5".into(), pres_g5()),
            ("G6".into(), pres_g6()),
            ("B1".into(), pres_b1()),
            ("B2".into(), pres_b2()),
            ("B3".into(), pres_b3()),
            ("B4".into(), pres_b4()),
        ];
        for q in 1..4 {
            v.push((format!("p2 {q}"), pres_p2(q)));
            v.push((format!("pg {q}"), pres_pg(q)));
            v.push((format!("p2gg {q}"), pres_p2gg(q)));
            v.push((format!("p4E {q}"), pres_p4(q, 2)));
            v.push((format!("p4F {q}"), pres_p4(q, 4)));
            for c in ['E', 'F', 'G'] {
                v.push((format!("p3{c} {q}"), pres_p3(c, q)));
            }
            for c in ['E', 'F', 'G', 'H'] {
                v.push((format!("p6{c} {q}"), pres_p6(c, q)));
            }
        }
        v
    }

    #[test]
    fn relations_hold() {
        for (name, p) in all() {
            assert!(failing_relations(&p).is_empty(), "{name}: {:?}", failing_relations(&p));
            for g in &p.gens {
                assert!(g.action.respects_relation(p.k), "{name}");
            }
        }
    }

    #[test]
    fn relators_land_in_n() {
        for (name, p) in all() {
            let ar = p.arith::<i128>();
            for w in &p.relators {
                assert_eq!(ar.eval_word(w).holonomy, 0, "{name}");
            }
        }
    }
}

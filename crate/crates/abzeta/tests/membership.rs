use abzeta::groupalg::{nk_inv_raw, nk_mul_raw, nk_pow_raw};
use abzeta::membership::{in_bt_raw, is_good_basis, ClosureChecker, GoodBasis};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];

fn random_basis(rng: &mut ChaCha8Rng, p: u64, k: i64, max_depth: u32) -> GoodBasis {
    loop {
        let a = rng.gen_range(0..=max_depth);
        let b = rng.gen_range(0..=max_depth - a);
        let c = rng.gen_range(0..=max_depth - a - b);
        let t = GoodBasis::diagonal(p, k, a, b, c);
        if !is_good_basis(&t) {
            continue;
        }
        let t12 = rng.gen_range(0..t.pb());
        let t13 = rng.gen_range(0..t.pc());
        let t23 = rng.gen_range(0..t.pc());
        return t.with_offdiag(t12, t13, t23);
    }
}

#[test]
fn closure_checker_agrees_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0usize;
    // (p, max depth) keeps the quotient p^{3n} small.
    let cases = [(2u64, 4u32), (3, 3), (5, 2), (7, 2)];
    while checked < 12_000 {
        let (p, n) = cases[rng.gen_range(0..cases.len())];
        let k = rng.gen_range(0..=8);
        let t = random_basis(&mut rng, p, k, n);
        let slow = ClosureChecker::new(&t);
        assert_eq!(slow.len() as i128 * (p as i128).pow(t.depth()), (p as i128).pow(3 * t.depth()));
        for _ in 0..200 {
            let bound = (p as i128).pow(3 * n + 1);
            let e = [rng.gen_range(-bound..bound), rng.gen_range(-bound..bound), rng.gen_range(-bound..bound)];
            assert_eq!(in_bt_raw(&t, &e), slow.contains(&e), "t={t:?} e={e:?}");
            checked += 1;
        }
        // Bias toward members so both outcomes get exercised.
        for _ in 0..50 {
            let rows = t.rows();
            let mut e = [0i128; 3];
            for _ in 0..4 {
                let r = rows[rng.gen_range(0..3)];
                let r = if rng.gen_bool(0.5) { r } else { nk_inv_raw(&(k as i128), &r) };
                e = nk_mul_raw(&(k as i128), &e, &r);
            }
            assert!(in_bt_raw(&t, &e) && slow.contains(&e), "t={t:?} e={e:?}");
            checked += 1;
        }
    }
}

#[test]
fn index_is_p_to_depth() {
    for p in [2u64, 3, 5] {
        for k in [0i64, 1, 2, 3, 4] {
            for n in 0..=5u32 {
                if (p as u128).pow(3 * n) > 2_000_000 {
                    continue;
                }
                for a in 0..=n {
                    for b in 0..=n - a {
                        let c = n - a - b;
                        let base = GoodBasis::diagonal(p, k, a, b, c);
                        if !is_good_basis(&base) {
                            continue;
                        }
                        let t = base.with_offdiag(1 % base.pb(), (p as i128 + 1) % base.pc(), 1 % base.pc());
                        let pn = (p as i128).pow(n);
                        let mut hits = 0i128;
                        for e1 in 0..pn {
                            for e2 in 0..pn {
                                for e3 in 0..pn {
                                    hits += in_bt_raw(&t, &[e1, e2, e3]) as i128;
                                }
                            }
                        }
                        // The box (Z/p^n)^3 has p^{3n} residues and B_t has index p^n.
                        assert_eq!(hits * pn, pn * pn * pn, "t={t:?}");
                    }
                }
            }
        }
    }
}

fn basis_strategy() -> impl Strategy<Value = GoodBasis> {
    (0usize..6, 0i64..=8, 0u32..=3, 0u32..=3, 0u32..=3, any::<u64>()).prop_filter_map(
        "good basis",
        |(pi, k, a, b, c, seed)| {
            let t = GoodBasis::diagonal(PRIMES[pi], k, a, b, c);
            if !is_good_basis(&t) {
                return None;
            }
            let s = seed as i128;
            Some(t.with_offdiag(s.rem_euclid(t.pb()), (s / 7).rem_euclid(t.pc()), (s / 131).rem_euclid(t.pc())))
        },
    )
}

fn member(t: &GoodBasis, ls: [i64; 3]) -> [i128; 3] {
    let k = t.k as i128;
    let rows = t.rows();
    let mut e = [0i128; 3];
    for i in 0..3 {
        e = nk_mul_raw(&k, &e, &nk_pow_raw(&k, &rows[i], &(ls[i] as i128)));
    }
    e
}

proptest! {
    #[test]
    fn rows_are_members(t in basis_strategy()) {
        for r in t.rows() {
            prop_assert!(in_bt_raw(&t, &r));
        }
    }

    #[test]
    fn subgroup_property(t in basis_strategy(), l in prop::array::uniform3(-20i64..20), m in prop::array::uniform3(-20i64..20)) {
        let k = t.k as i128;
        let x = member(&t, l);
        let y = member(&t, m);
        prop_assert!(in_bt_raw(&t, &x));
        prop_assert!(in_bt_raw(&t, &nk_mul_raw(&k, &x, &y)));
        prop_assert!(in_bt_raw(&t, &nk_inv_raw(&k, &x)));
    }

    #[test]
    fn representative_invariance(t in basis_strategy(), e in prop::array::uniform3(-3000i128..3000), l in prop::array::uniform3(-10i64..10)) {
        let w = member(&t, l);
        let k = t.k as i128;
        prop_assert_eq!(in_bt_raw(&t, &e), in_bt_raw(&t, &nk_mul_raw(&k, &e, &w)));
        prop_assert_eq!(in_bt_raw(&t, &e), in_bt_raw(&t, &nk_mul_raw(&k, &w, &e)));
    }
}

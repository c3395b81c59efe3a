use abzeta::catalog::{self, global_coeffs, local_factor, Guard};
use abzeta::ratfunc::{PolyUX, RationalUX};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Signed;
use proptest::prelude::*;
use std::sync::OnceLock;

fn poly() -> impl Strategy<Value = PolyUX> {
    prop::collection::vec((-5i64..=5, 0u32..4, 0u32..4), 0..5).prop_map(|ts| {
        ts.into_iter().fold(PolyUX::zero(), |acc, (c, u, x)| &acc + &PolyUX::mono(c, u, x))
    })
}

fn grid() -> &'static Vec<catalog::FamilySpec> {
    static G: OnceLock<Vec<catalog::FamilySpec>> = OnceLock::new();
    G.get_or_init(catalog::default_grid)
}

fn cauchy(x: &[BigInt], y: &[BigInt]) -> Vec<BigInt> {
    (0..x.len()).map(|n| (0..=n).map(|i| &x[i] * &y[n - i]).sum()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(a in poly(), b in poly(), c in poly()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a * &PolyUX::one(), a.clone());
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn substitute_inverse_is_an_involution(i in 0usize..1000, p in prop::sample::select(vec![5u64, 7, 11, 13])) {
        let fam = &grid()[i % grid().len()];
        let f = local_factor(fam, p).unwrap();
        prop_assert_eq!(f.substitute_inverse().substitute_inverse(), f);
    }

    #[test]
    fn product_series_is_convolution(i in 0usize..1000, j in 0usize..1000, p in prop::sample::select(vec![2u64, 3, 5, 7])) {
        let (f, g) = (&grid()[i % grid().len()], &grid()[j % grid().len()]);
        let (f, g) = (local_factor(f, p).unwrap(), local_factor(g, p).unwrap());
        let fg: RationalUX = &f * &g;
        let m = 6;
        prop_assert_eq!(
            fg.series_integers(p, m).unwrap(),
            cauchy(&f.series_integers(p, m).unwrap(), &g.series_integers(p, m).unwrap())
        );
    }

    #[test]
    fn global_coefficients_are_multiplicative(i in 0usize..1000, a in 1usize..60, b in 1usize..60) {
        prop_assume!(a.gcd(&b) == 1);
        let fam = &grid()[i % grid().len()];
        let g = global_coeffs(fam, a * b).unwrap();
        prop_assert_eq!(g.get(a * b).clone(), g.get(a) * g.get(b));
    }
}

#[test]
fn local_coefficients_are_nonnegative_integers() {
    for fam in grid() {
        for p in [5, 7, 11, 13] {
            // series_integers refuses non-integral coefficients.
            let c = local_factor(fam, p).unwrap().series_integers(p, 7).unwrap();
            assert!(c.iter().all(|x| !x.is_negative()), "{} p={p}", fam.label());
            assert_eq!(c[0], BigInt::from(1));
        }
    }
}

#[test]
fn branches_partition_the_primes() {
    for fam in grid() {
        for rule in [&fam.local, fam.printed_local_rule()] {
            let b = &rule.branches;
            assert!(matches!(b.last().unwrap().guard, Guard::Generic), "{}", fam.label());
            let specials: Vec<u64> = b.iter().filter_map(|x| match x.guard {
                Guard::Prime(q) => Some(q),
                Guard::Generic => None,
            }).collect();
            let mut sorted = specials.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), specials.len(), "{}", fam.label());
            assert_eq!(b.iter().filter(|x| matches!(x.guard, Guard::Generic)).count(), 1);
        }
    }
}

//! Property batteries for the shift-polynomial algebra: ring laws, the
//! Lucas equivalences against a big-integer oracle, and bit-exact
//! agreement between closed-form powers and step-by-step iteration.

use lca_lab::lca_core::{
    lucas_binomial, lucas_support, BitWindow, ShiftPolynomial,
};
use num_bigint::BigUint;
use proptest::prelude::*;

fn arb_support() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-16i64..=16, 1..=5)
}

fn poly(offsets: &[i64]) -> ShiftPolynomial {
    ShiftPolynomial::new(offsets.iter().copied())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mul_is_commutative(a in arb_support(), b in arb_support()) {
        let (a, b) = (poly(&a), poly(&b));
        prop_assume!(!a.is_zero() && !b.is_zero());
        prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
    }

    #[test]
    fn mul_is_associative(a in arb_support(), b in arb_support(), c in arb_support()) {
        let (a, b, c) = (poly(&a), poly(&b), poly(&c));
        prop_assume!(!a.is_zero() && !b.is_zero() && !c.is_zero());
        prop_assert_eq!(
            a.mul(&b).unwrap().mul(&c).unwrap(),
            a.mul(&b.mul(&c).unwrap()).unwrap()
        );
    }

    #[test]
    fn add_is_its_own_inverse(a in arb_support(), b in arb_support()) {
        let (a, b) = (poly(&a), poly(&b));
        prop_assert_eq!(a.add(&b).add(&b), a.clone());
        prop_assert!(a.add(&a).is_zero());
    }

    #[test]
    fn identity_is_multiplicative_unit(a in arb_support()) {
        let a = poly(&a);
        prop_assume!(!a.is_zero());
        prop_assert_eq!(a.mul(&ShiftPolynomial::identity()).unwrap(), a);
    }

    #[test]
    fn power_equals_iterated_apply(
        support in arb_support(),
        n in 0u64..=12,
        pad in 0usize..8,
        seed_cells in prop::collection::vec(0u8..=1, 1..24),
        base in -20i64..20,
    ) {
        let p = poly(&support);
        prop_assume!(!p.is_zero());
        let pn = p.pow(n).unwrap();
        // size the window so both routes stay defined
        let need = (pn.span() + p.span() * n as i64) as usize + seed_cells.len() + pad;
        let cells: Vec<u8> = seed_cells.iter().cycle().take(need).copied().collect();
        let w = BitWindow::new(base, cells);

        let direct = p.apply_power(n, &w).unwrap();
        let mut iterated = w;
        for _ in 0..n {
            iterated = p.apply(&iterated).unwrap();
        }
        // same base; `direct` may keep extra trailing cells since
        // span(p^n) <= n*span(p) (iteration shrinks at least as much)
        prop_assert_eq!(direct.base(), iterated.base());
        prop_assert!(direct.len() >= iterated.len());
        prop_assert_eq!(iterated.cells(), &direct.cells()[..iterated.len()]);
    }

    #[test]
    fn apply_composes_like_mul(
        a in arb_support(),
        b in arb_support(),
        seed_cells in prop::collection::vec(0u8..=1, 1..24),
        base in -20i64..20,
    ) {
        let (a, b) = (poly(&a), poly(&b));
        prop_assume!(!a.is_zero() && !b.is_zero());
        let ab = a.mul(&b).unwrap();
        let need = (a.span() + b.span()) as usize + seed_cells.len();
        let cells: Vec<u8> = seed_cells.iter().cycle().take(need).copied().collect();
        let w = BitWindow::new(base, cells);

        let stepwise = b.apply(&a.apply(&w).unwrap()).unwrap();
        let direct = ab.apply(&w).unwrap();
        // min offsets add exactly, so the bases agree; span(ab) may be
        // smaller than span(a)+span(b), leaving `direct` longer
        prop_assert_eq!(direct.base(), stepwise.base());
        prop_assert!(direct.len() >= stepwise.len());
        prop_assert_eq!(stepwise.cells(), &direct.cells()[..stepwise.len()]);
    }
}

#[test]
fn lucas_support_equals_ledrappier_powers_up_to_512() {
    let led = ShiftPolynomial::ledrappier();
    for n in 0u64..=512 {
        let pn = led.pow(n).unwrap();
        let want = lucas_support(n);
        assert_eq!(pn.support(), &want[..], "n={n}");
        // membership agrees with the digit-domination test against n
        for l in 0..=n {
            assert_eq!(
                lucas_binomial(n, l),
                want.contains(&(l as i64)),
                "n={n} l={l}"
            );
        }
    }
}

/// Exact binomial parity by the Pascal recurrence in big integers.
fn pascal_parity(n: u64, k: u64) -> bool {
    let mut row = vec![BigUint::from(1u8)];
    for _ in 0..n {
        let mut next = vec![BigUint::from(1u8)];
        for i in 1..row.len() {
            next.push(&row[i - 1] + &row[i]);
        }
        next.push(BigUint::from(1u8));
        row = next;
    }
    (&row[k as usize] % 2u8) == BigUint::from(1u8)
}

#[test]
fn lucas_matches_bigint_pascal_oracle() {
    for n in 0u64..=64 {
        for k in 0..=n {
            assert_eq!(lucas_binomial(n, k), pascal_parity(n, k), "C({n},{k})");
        }
    }
}

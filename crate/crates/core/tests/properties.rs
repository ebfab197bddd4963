use ghk_core::check::rel_close;
use ghk_core::cube::FunctionTuple;
use ghk_core::dual::{dual_brute, dual_rec, lemma1_gap};
use ghk_core::exponents::{exponent_triple, holder_conjugate, to_f64};
use ghk_core::gowers::{csg_gap, gowers_norm_brute, gowers_norm_rec, gowers_norm_spectral_u2, gowers_power};
use ghk_core::io::{decode, from_ghk1, from_json, to_ghk1, to_json};
use ghk_core::{GridFunction, Rational};
use proptest::prelude::*;

fn grid_1d(signed: bool, max_n: usize) -> impl Strategy<Value = GridFunction> {
    let value = if signed { -1.0..1.0f64 } else { 0.0..1.0f64 };
    (prop::collection::vec(value, 1..=max_n), -4i64..4, prop::sample::select(vec![0.125, 0.25, 0.5, 1.0]))
        .prop_map(|(vals, lo, w)| GridFunction::new(w, &[lo], &[vals.len()], vals).unwrap())
}

fn grid_2d(signed: bool) -> impl Strategy<Value = GridFunction> {
    let value = if signed { -1.0..1.0f64 } else { 0.0..1.0f64 };
    (1usize..=3, 1usize..=3, -2i64..2, -2i64..2)
        .prop_flat_map(move |(a, b, x, y)| {
            prop::collection::vec(value.clone(), a * b)
                .prop_map(move |vals| GridFunction::new(0.5, &[x, y], &[a, b], vals).unwrap())
        })
}

fn tuple_of(k: u32, punctured: bool, n: usize) -> impl Strategy<Value = FunctionTuple> {
    let count = if punctured { (1usize << k) - 1 } else { 1 << k };
    prop::collection::vec(prop::collection::vec(0.0..1.0f64, n), count).prop_map(move |vs| {
        let fs = vs.into_iter().map(|v| GridFunction::new(0.25, &[0], &[n], v).unwrap()).collect();
        if punctured {
            FunctionTuple::punctured(k, fs).unwrap()
        } else {
            FunctionTuple::full(k, fs).unwrap()
        }
    })
}

fn same_grid(a: &GridFunction, b: &GridFunction, tol: f64) -> bool {
    let scale = a.max_abs().max(b.max_abs());
    let hull = a.bbox().hull(b.bbox());
    let ok = hull.cells().all(|c| (a.at(&c) - b.at(&c)).abs() <= tol * scale);
    ok
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recursion_matches_brute(f in grid_1d(true, 6), k in 2u32..=3) {
        let a = gowers_power(&f, k).unwrap();
        let b = gowers_norm_brute(&f, k).unwrap().powi(1 << k);
        prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(f.max_abs().powi(1 << k) * 1e-3));
    }

    #[test]
    fn recursion_matches_brute_in_2d(f in grid_2d(false)) {
        let a = gowers_norm_rec(&f, 2).unwrap();
        let b = gowers_norm_brute(&f, 2).unwrap();
        prop_assert!(rel_close(a, b, 1e-9));
    }

    #[test]
    fn spectral_matches_brute(f in grid_1d(true, 8)) {
        let a = gowers_norm_spectral_u2(&f).unwrap();
        let b = gowers_norm_brute(&f, 2).unwrap();
        prop_assert!(rel_close(a, b, 1e-8), "{} vs {}", a, b);
    }

    #[test]
    fn norm_is_absolutely_homogeneous(f in grid_1d(true, 6), t in -3.0..3.0f64, k in 2u32..=3) {
        let a = gowers_norm_rec(&f.scale(t), k).unwrap();
        let b = t.abs() * gowers_norm_rec(&f, k).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
    }

    #[test]
    fn norm_is_translation_invariant(f in grid_2d(true), x in -5i64..5, y in -5i64..5) {
        let a = gowers_norm_rec(&f, 2).unwrap();
        let b = gowers_norm_rec(&f.shift(&[x, y]), 2).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn dual_commutes_with_translation(f in grid_1d(true, 5), v in -6i64..6) {
        let a = dual_rec(&f.shift(&[v]), 3).unwrap();
        let b = dual_rec(&f, 3).unwrap().shift(&[v]);
        prop_assert!(same_grid(&a, &b, 0.0));
    }

    #[test]
    fn dual_recursion_matches_brute(f in grid_1d(true, 5), k in 2u32..=3) {
        let a = dual_rec(&f, k).unwrap();
        let b = dual_brute(&FunctionTuple::all_equal(k, &f, true).unwrap()).unwrap();
        prop_assert!(same_grid(&a, &b, 1e-12));
    }

    #[test]
    fn pairing_with_dual_is_norm_power(f in grid_1d(true, 6), k in 2u32..=3) {
        let lhs = f.inner(&dual_rec(&f, k).unwrap()).unwrap();
        let rhs = gowers_power(&f, k).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(f.max_abs().powi(1 << k) * 1e-3));
    }

    #[test]
    fn csg_chain_holds(fs in tuple_of(2, false, 4)) {
        prop_assert_eq!(csg_gap(&fs).unwrap().pass, Some(true));
    }

    #[test]
    fn csg_chain_holds_k3(fs in tuple_of(3, false, 3)) {
        prop_assert_eq!(csg_gap(&fs).unwrap().pass, Some(true));
    }

    #[test]
    fn dual_sup_bound_holds(fs in tuple_of(3, true, 4)) {
        prop_assert_eq!(lemma1_gap(&fs).unwrap().pass, Some(true));
    }

    #[test]
    fn ghk1_round_trips(f in grid_2d(true)) {
        prop_assert_eq!(from_ghk1(&to_ghk1(&f)).unwrap(), f.clone());
        prop_assert_eq!(decode(&to_ghk1(&f)).unwrap(), f);
    }

    #[test]
    fn json_round_trips(f in grid_1d(true, 9), b64 in any::<bool>()) {
        let back = from_json(&to_json(&f, b64)).unwrap();
        prop_assert!(back.values().iter().zip(f.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
        prop_assert_eq!(back, f);
    }

    #[test]
    fn truncated_ghk1_is_rejected(f in grid_1d(true, 4), cut in 1usize..16) {
        let bytes = to_ghk1(&f);
        let end = bytes.len().saturating_sub(cut);
        prop_assert!(from_ghk1(&bytes[..end]).is_err());
    }
}

#[test]
fn exponents_are_consistent() {
    for k in 2..=10u32 {
        let t = exponent_triple(k).unwrap();
        let two_k = 1i64 << k;
        assert_eq!(t.p, Rational::new(two_k, k as i64 + 1));
        assert_eq!(t.s, holder_conjugate(t.p).unwrap());
        assert_eq!(t.q, Rational::new(two_k - 1, k as i64));
        assert!((1.0 / to_f64(t.p) + 1.0 / to_f64(t.s) - 1.0).abs() < 1e-15);
    }
    assert!(exponent_triple(1).is_err());
}

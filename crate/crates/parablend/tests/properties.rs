mod common;

use std::sync::Arc;

use parablend::dynamics::{
    push_perturbation, CircleValue, Construction, FamilyHandle, FamilyParams, Perturbation, PlanePoint,
    PolynomialAmplitude,
};
use parablend::ifs_blender::{y_series, SymbolWord};
use parablend::jets::{Jet, SignedPolynomial};
use parablend::sweep::lattice_points;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn jet(coeffs: [f64; 6]) -> Jet {
    Jet::from_taylor(2, 2, coeffs.to_vec()).unwrap()
}

fn letter(bits: u8, len: usize) -> Vec<i8> {
    (0..len).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jet_product_commutes_and_distributes(a in prop::array::uniform6(-2.0..2.0f64),
                                            b in prop::array::uniform6(-2.0..2.0f64),
                                            c in prop::array::uniform6(-2.0..2.0f64)) {
        let (a, b, c) = (jet(a), jet(b), jet(c));
        let close = |l: &Jet, r: &Jet| l.taylor().iter().zip(r.taylor()).all(|(u, v)| (u - v).abs() <= 1e-12);
        prop_assert!(close(&(&a * &b), &(&b * &a)));
        prop_assert!(close(&(&a * &(&b + &c)), &(&(&a * &b) + &(&a * &c))));
    }

    #[test]
    fn random_expressions_match_finite_differences(seed in any::<u64>(), x in -1.0..1.0f64, y in -1.0..1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = common::random_expr(&mut rng, 2, 3);
        prop_assert!(common::finite_difference_error(&e, &[x, y], 1e-4) <= 1e-6);
    }

    #[test]
    fn circle_values_reduce_to_fundamental_domain(x in -1e3..1e3f64) {
        let v = CircleValue::new(x).value();
        prop_assert!((-3.0..3.0).contains(&v));
        let turns = (x - v) / 6.0;
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn lattice_is_symmetric_without_origin(depth in 1usize..8, alpha in 0.01..1.0f64) {
        let pts = lattice_points(alpha, depth, 1).unwrap();
        prop_assert_eq!(pts.len(), 1 << depth);
        prop_assert!(pts.iter().all(|p| p[0] != 0.0 && p[0].abs() <= alpha + 1e-15));
        for p in &pts {
            prop_assert!(pts.iter().any(|q| (q[0] + p[0]).abs() < 1e-15));
        }
    }

    #[test]
    fn series_obeys_the_branch_recursion(word in prop::collection::vec(0u8..8, 1..12), head in 0u8..8,
                                         eps in 0.0..0.2f64, a0 in -0.5..0.5f64) {
        let d = 2;
        let letters: Vec<Vec<i8>> = word.iter().map(|&b| letter(b, d + 1)).collect();
        let w = SymbolWord::new(letters).unwrap();
        let first = letter(head, d + 1);
        let a = Jet::parameters(d, &[a0]);
        let lhs = y_series(&w.prepend(first.clone()).unwrap(), eps, &a).unwrap().jet;
        let p = SignedPolynomial::new(1, d, first.clone()).unwrap();
        let rhs = &(&y_series(&w, eps, &a).unwrap().jet.scale(2.0 / 3.0) + &p.eval_jet(&a).unwrap().scale(eps))
            + first[0] as f64 / 3.0;
        for (u, v) in lhs.taylor().iter().zip(rhs.taylor()) {
            prop_assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_amplitude_layer_changes_nothing(x in -0.1..0.1f64, y in -0.1..0.1f64, a in -0.2..0.2f64) {
        let h = FamilyHandle::build(FamilyParams::new(Construction::Coupled, 1, 1)).unwrap();
        let layer = Perturbation::additive(
            "zero",
            PlanePoint::new(0.0, 0.0),
            0.25,
            vec![0.0],
            0.1,
            [1.0, 0.0],
            Arc::new(PolynomialAmplitude::constant(1, 0.0)),
        );
        let g = push_perturbation(&h, layer).unwrap();
        let z = PlanePoint::new(x, y);
        prop_assert_eq!(h.eval_point(&z, &[a]).unwrap(), g.eval_point(&z, &[a]).unwrap());
    }
}

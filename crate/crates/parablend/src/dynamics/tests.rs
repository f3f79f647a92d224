use super::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn base(k: usize, d: usize) -> FamilyHandle {
    FamilyHandle::build(FamilyParams::new(Construction::Base, k, d)).unwrap()
}

#[test]
fn base_map_fixes_saddle() {
    let h = base(1, 1).clone();
    let img = h.eval_point(&PlanePoint::new(3.0, 0.0), &[0.0]).unwrap();
    assert_eq!(img.x.value(), -3.0);
    assert_eq!(img.y, 0.0);
    let plain = FamilyHandle::build(FamilyParams::new(Construction::Base, 1, 1).unparametrized()).unwrap();
    let img = plain.eval_point(&PlanePoint::new(3.0, 0.0), &[0.4]).unwrap();
    assert_eq!(img.distance(&PlanePoint::new(3.0, 0.0)), 0.0);
}

#[test]
fn parameter_term_on_positive_branch() {
    let h = base(1, 1);
    let region = h.region_of(&[1, -1]).unwrap().clone();
    let x = 0.5 * (region.core.0 + region.core.1);
    let y = 0.3;
    let a = [0.2];
    let img = h.eval_point(&PlanePoint::new(x, y), &a).unwrap();
    let expected = 2.0 * y / 3.0 + 1.0 / 3.0 + 0.05 * region.poly.eval(&a);
    assert!((img.y - expected).abs() < 1e-15);
    assert!((region.poly.eval(&a) + 0.2).abs() < 1e-15);
}

#[test]
fn branch_images_fill_expected_rectangles() {
    let h = FamilyHandle::build(FamilyParams::new(Construction::Base, 1, 2).unparametrized()).unwrap();
    for r in h.regions() {
        let s = r.delta[0] as f64;
        let lo = h.eval_point(&PlanePoint::new(r.core.0, -1.5), &[0.0]).unwrap();
        let hi = h.eval_point(&PlanePoint::new(r.core.1, 1.5), &[0.0]).unwrap();
        let xs = [lo.x.value(), hi.x.value()];
        assert!(xs.iter().all(|v| (v.abs() - 1.0).abs() < 1e-12), "{xs:?}");
        assert!((lo.y - (-1.0 + s / 3.0)).abs() < 1e-12);
        assert!((hi.y - (1.0 + s / 3.0)).abs() < 1e-12);
    }
}

#[test]
fn saddle_jacobians() {
    let h = base(1, 1);
    let j = h.jacobian_at(&h.saddle(), &[0.0]).unwrap();
    assert_eq!(j, [[16.0, 0.0], [0.0, 2.0 / 3.0]]);
    let hd = FamilyHandle::build(FamilyParams::new(Construction::Dissipative, 1, 1)).unwrap();
    let j = hd.jacobian_at(&hd.saddle(), &[0.0]).unwrap();
    assert_eq!(j, [[16.0, 0.0], [0.0, 4f64.powi(-9)]]);
}

#[test]
fn affine_branch_has_no_curvature() {
    let h = base(1, 2);
    let r = &h.regions()[2];
    let z = PlanePoint::new(0.5 * (r.core.0 + r.core.1), 0.2);
    let a = Jet::parameters(2, &[0.1]);
    let jac = jacobian(&h, &z, &a, 2).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            for l in 0..2 {
                assert!(jac.second.as_ref().unwrap()[i][j][l].max_abs() < 1e-12);
            }
        }
    }
    assert!((jac.first[1][1].value() - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn seam_is_reported() {
    let h = base(1, 1);
    let r = &h.regions()[0];
    let z = PlanePoint::new(r.wide.1, 0.0);
    assert!(matches!(
        h.jacobian_at(&z, &[0.0]),
        Err(DynamicsError::Seam(_))
    ));
}

#[test]
fn coupled_fold_sends_origin_to_q() {
    let h = FamilyHandle::build(FamilyParams::new(Construction::Coupled, 1, 1)).unwrap();
    let img = h.eval_point(&PlanePoint::new(0.0, 0.0), &[0.0]).unwrap();
    assert_eq!(img.x.value(), -3.0);
    assert_eq!(img.y, 1.0);
    for x in [-0.3, -0.1, 0.05, 0.2, 0.7] {
        let t = x * h.eta();
        let p = h.eval_point(&PlanePoint::new(t, 2.0 * t * t), &[0.0]).unwrap();
        assert!(p.x.diff(&CircleValue::new(3.0)).abs() < 1e-18);
        let q = h.eval_point(&PlanePoint::new(t, 2.0 * t * t + 1e-3), &[0.0]).unwrap();
        assert!(q.x.diff(&CircleValue::new(3.0)).abs() > 0.0);
    }
}

#[test]
fn vertical_fibres_are_injective() {
    for c in [Construction::Base, Construction::Coupled] {
        let h = FamilyHandle::build(FamilyParams::new(c, 1, 1)).unwrap();
        for i in 0..60 {
            let x = -3.0 + 0.1 * i as f64 + 0.0123;
            let mut prev = f64::NEG_INFINITY;
            for j in 0..=40 {
                let y = -2.0 + 0.1 * j as f64;
                let v = h.eval_point(&PlanePoint::new(x, y), &[0.3]).unwrap().y;
                assert!(v > prev, "{c:?} x={x} y={y}");
                prev = v;
            }
        }
    }
}

#[test]
fn parameter_jets_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = base(1, 2);
    let step = 1e-4;
    for _ in 0..100 {
        let r = &h.regions()[rng.gen_range(0..h.regions().len())];
        let x = rng.gen_range(r.core.0..r.core.1);
        let y = rng.gen_range(-1.4..1.4);
        let a0 = rng.gen_range(-0.9..0.9);
        let z = PlanePoint::new(x, y);
        let jet = eval_family(&h, &z, &Jet::parameters(2, &[a0])).unwrap();
        let f = |a: f64| h.eval_point(&z, &[a]).unwrap().y;
        let d1 = (f(a0 + step) - f(a0 - step)) / (2.0 * step);
        let d2 = (f(a0 + step) - 2.0 * f(a0) + f(a0 - step)) / (step * step);
        let ds = jet.y.derivatives();
        assert!((ds[1] - d1).abs() <= 1e-6 * ds[1].abs().max(1.0));
        assert!((ds[2] - d2).abs() <= 1e-6 * ds[2].abs().max(1.0) + 1e-5);
    }
}

fn bump_at_origin(amp: PolynomialAmplitude, alpha: f64) -> Perturbation {
    Perturbation::additive(
        "test",
        PlanePoint::new(0.0, 0.0),
        0.25,
        vec![0.0],
        alpha,
        [1.0, 0.0],
        Arc::new(amp),
    )
}

#[test]
fn zero_amplitude_is_bit_identical() {
    let h = FamilyHandle::build(FamilyParams::new(Construction::Coupled, 1, 1)).unwrap();
    let p = push_perturbation(&h, bump_at_origin(PolynomialAmplitude::constant(1, 0.0), 0.1)).unwrap();
    for (x, y, a) in [(0.01, 0.02, 0.05), (0.1, -0.05, 0.0), (0.0, 0.0, 0.15)] {
        let z = PlanePoint::new(x, y);
        let a = Jet::parameters(1, &[a]);
        assert_eq!(eval_family(&h, &z, &a).unwrap(), eval_family(&p, &z, &a).unwrap());
    }
}

#[test]
fn localized_in_parameter() {
    let h = FamilyHandle::build(FamilyParams::new(Construction::Coupled, 1, 1)).unwrap();
    let alpha = 0.05;
    let p = push_perturbation(&h, bump_at_origin(PolynomialAmplitude::power(1, 2, 1.0), alpha)).unwrap();
    let z = PlanePoint::new(0.01, 0.0);
    for a in [0.1, 0.2, -0.1, -0.5] {
        let a = Jet::parameters(1, &[a]);
        assert_eq!(eval_family(&h, &z, &a).unwrap(), eval_family(&p, &z, &a).unwrap());
    }
    let inside = Jet::parameters(1, &[0.04]);
    assert_ne!(eval_family(&h, &z, &inside).unwrap(), eval_family(&p, &z, &inside).unwrap());
}

#[test]
fn disjoint_perturbations_commute() {
    let h = FamilyHandle::build(FamilyParams::new(Construction::Coupled, 1, 1)).unwrap();
    let p1 = bump_at_origin(PolynomialAmplitude::constant(1, 1e-3), 0.05);
    let mut p2 = bump_at_origin(PolynomialAmplitude::constant(1, -2e-3), 0.05);
    p2.center = PlanePoint::new(2.0, 0.0);
    let a = push_perturbation(&push_perturbation(&h, p1.clone()).unwrap(), p2.clone()).unwrap();
    let b = push_perturbation(&push_perturbation(&h, p2).unwrap(), p1).unwrap();
    for z in [PlanePoint::new(0.01, 0.01), PlanePoint::new(2.05, -0.1), PlanePoint::new(1.0, 0.0)] {
        let aj = Jet::parameters(1, &[0.01]);
        assert_eq!(eval_family(&a, &z, &aj).unwrap(), eval_family(&b, &z, &aj).unwrap());
    }
}

#[test]
fn support_crossing_a_region_is_refused() {
    let h = base(1, 1);
    let mut p = bump_at_origin(PolynomialAmplitude::constant(1, 1.0), 0.1);
    p.center = PlanePoint::new(h.regions()[0].wide.0, 0.0);
    assert!(matches!(push_perturbation(&h, p), Err(DynamicsError::Support(_))));
}

#[test]
fn config_round_trip() {
    let text = r#"
construction = "coupled"
k = 1
d = 1
epsilon = 0.05

[[perturbations]]
center = [0.0, 0.0]
radius = 0.25
a_center = [0.0]
alpha = 0.1
direction = [1.0, 0.0]
amplitude = { kind = "polynomial", terms = [[[2], 1.0]] }
"#;
    let cfg = FamilyConfig::from_toml(text).unwrap();
    let h = cfg.build().unwrap();
    assert_eq!(h.construction(), Construction::Coupled);
    assert_eq!(h.layers().len(), 1);
}

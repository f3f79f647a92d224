use super::*;
use crate::dynamics::{Construction, FamilyParams};
use crate::ifs_blender::y_series;

fn family(c: Construction, k: usize, d: usize) -> FamilyHandle {
    FamilyHandle::build(FamilyParams::new(c, k, d)).unwrap()
}

#[test]
fn saddle_is_parameter_independent() {
    let h = family(Construction::Base, 1, 1);
    let data = continue_fixed_point(&h, &PlanePoint::new(2.9, 0.05), &[0.3], 1).unwrap();
    assert!(data.point().distance(&PlanePoint::new(3.0, 0.0)) < 1e-14);
    assert!(data.location.y.taylor().iter().skip(1).all(|c| c.abs() < 1e-14));
    assert!((data.unstable_multiplier.value() - 16.0).abs() < 1e-12);
    assert!((data.stable_multiplier.value() - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn dissipative_saddle_multipliers() {
    let h = family(Construction::Dissipative, 1, 1);
    let data = continue_fixed_point(&h, &h.saddle(), &[0.0], 0).unwrap();
    assert!((data.unstable_multiplier.value() - 16.0).abs() < 1e-12);
    assert!((data.stable_multiplier.value() - 4f64.powi(-9)).abs() < 1e-20);
    let det = data.determinant().value();
    let prod = data.unstable_multiplier.value() * data.stable_multiplier.value();
    assert!((det - prod).abs() < 1e-12 * det.abs());
}

#[test]
fn branch_fixed_point_height() {
    let h = family(Construction::Base, 1, 1);
    let letter = vec![1i8, -1];
    let word = SymbolWord::constant(letter.clone(), 1).unwrap();
    let a0 = [0.2];
    let orbit = continue_coded_orbit(&h, &word, &a0, 1).unwrap();
    let poly = &h.region_of(&letter).unwrap().poly;
    let expected = 1.0 + 3.0 * h.epsilon() * poly.eval(&a0);
    let y = &orbit.point().y;
    assert!((y.value() - expected).abs() < 1e-13, "{} vs {expected}", y.value());
    // P_δ(a) = -a for this letter, so the parameter derivative is -3ε.
    assert!((y.taylor()[1] + 3.0 * h.epsilon()).abs() < 1e-12);
}

#[test]
fn period_two_orbit_heights() {
    let h = FamilyHandle::build(FamilyParams::new(Construction::Base, 1, 1).epsilon(0.0)).unwrap();
    let word = SymbolWord::new(vec![vec![1, 1], vec![-1, 1]]).unwrap();
    let orbit = continue_coded_orbit(&h, &word, &[0.0], 0).unwrap();
    assert_eq!(orbit.period(), 2);
    let ys: Vec<f64> = orbit.points.iter().map(|p| p.y.value()).collect();
    assert!((ys[0] - 0.2).abs() < 1e-14, "{ys:?}");
    assert!((ys[1] + 0.2).abs() < 1e-14, "{ys:?}");
    for j in 0..2 {
        let img = h.eval_point(&orbit.points[j].point(), &[0.0]).unwrap();
        assert!(img.distance(&orbit.points[(j + 1) % 2].point()) < 1e-13);
    }
}

#[test]
fn rotated_word_gives_the_other_point() {
    let h = family(Construction::Base, 1, 1);
    let w = vec![vec![1, 1], vec![-1, 1], vec![1, -1]];
    let rotated = vec![w[1].clone(), w[2].clone(), w[0].clone()];
    let a0 = [-0.1];
    let o1 = continue_coded_orbit(&h, &SymbolWord::new(w).unwrap(), &a0, 0).unwrap();
    let o2 = continue_coded_orbit(&h, &SymbolWord::new(rotated).unwrap(), &a0, 0).unwrap();
    // Dropping the most recent letter steps the orbit backwards by one.
    assert!(o1.points[2].point().distance(&o2.points[0].point()) < 1e-13);
}

#[test]
fn coded_unstable_height_matches_series() {
    let h = family(Construction::Base, 1, 1);
    let period = vec![vec![1i8, -1], vec![-1, -1]];
    let word = SymbolWord::new(period.clone()).unwrap();
    let a0 = [0.15];
    let orbit = continue_coded_orbit(&h, &word, &a0, 1).unwrap();
    let m = graph_transform_manifold(&h, ManifoldBase::Coded(&orbit), Side::Unstable, 1).unwrap();
    assert_eq!(m.axis, GraphAxis::OverX);
    let long = SymbolWord::periodic(&period, 120).unwrap();
    let series = y_series(&long, h.epsilon(), &Jet::parameters(1, &a0)).unwrap().jet;
    let height = m.height();
    for (a, b) in height.taylor().iter().zip(series.taylor()) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
    assert!(conjugation_residual(&h, &m, 9).unwrap() < 1e-9);
}

#[test]
fn dissipative_stable_manifold_is_vertical() {
    let h = family(Construction::Dissipative, 1, 1);
    let data = continue_fixed_point(&h, &h.saddle(), &[0.0], 0).unwrap();
    let m = graph_transform_manifold(&h, ManifoldBase::Fixed(&data), Side::Stable, 0).unwrap();
    assert_eq!(m.axis, GraphAxis::OverY);
    for t in [-0.2, -0.05, 0.0, 0.1, 0.2] {
        assert!(m.eval(t).abs() < 1e-12, "{}", m.eval(t));
    }
}

#[test]
fn adapted_chart_round_trip() {
    let h = family(Construction::Base, 1, 1);
    let word = SymbolWord::constant(vec![-1, 1], 1).unwrap();
    let orbit = continue_coded_orbit(&h, &word, &[0.1], 0).unwrap();
    let wu = graph_transform_manifold(&h, ManifoldBase::Coded(&orbit), Side::Unstable, 0).unwrap();
    let ws = graph_transform_manifold(&h, ManifoldBase::Coded(&orbit), Side::Stable, 0).unwrap();
    let chart = AdaptedChart::new(wu, ws).unwrap();
    for (u, v) in [(0.01, -0.03), (-0.05, 0.02), (0.0, 0.0)] {
        let p = chart.from_chart(u, v).unwrap();
        let (u2, v2) = chart.to_chart(&p);
        assert!((u - u2).abs() < 1e-13 && (v - v2).abs() < 1e-13);
    }
}

#[test]
fn inclination_contracts() {
    let h = family(Construction::Base, 1, 1);
    let data = continue_fixed_point(&h, &h.saddle(), &[0.0], 0).unwrap();
    let target = graph_transform_manifold(&h, ManifoldBase::Fixed(&data), Side::Unstable, 0).unwrap();
    let mut seed = target.clone();
    seed.coeffs[0] = Jet::constant(1, 0, 0.02);
    seed.coeffs[1] = Jet::constant(1, 0, 0.1);
    let steps = inclination_test(&h, &seed, &target, 6).unwrap();
    for pair in steps.windows(2) {
        let ratio = pair[1].distance.c1 / pair[0].distance.c1;
        assert!(ratio <= 0.75, "{ratio}");
    }
}

#[test]
fn stable_line_field_near_branch_point_is_vertical() {
    let h = family(Construction::Base, 1, 1);
    let word = SymbolWord::constant(vec![1, 1], 1).unwrap();
    let orbit = continue_coded_orbit(&h, &word, &[0.0], 0).unwrap();
    let domain = ChartBox {
        center: orbit.point().point(),
        half_x: 0.01,
        half_y: 0.1,
    };
    let a = constant_params(&[0.0]);
    let field = invariant_line_field(&h, &domain, 3, &a).unwrap();
    assert!(field.iter().all(|s| s.slope.value().abs() < 1e-12));
}


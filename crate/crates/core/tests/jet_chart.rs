//! Integration tests for jet arithmetic, chart curvature and the identity suites.

use proptest::prelude::*;
use quadflow::jet::{
    apply_operator, curvature_at_origin, jet_inverse_metric, scalar_curvature_derivative,
    verify_first_variations, verify_identities, Jet, JetMetric, JetOperator, JetSpace, JetTensor,
};

fn random_jet(space: &std::sync::Arc<JetSpace>, coeffs: &[f64]) -> Jet<f64> {
    let terms: Vec<(Vec<u8>, f64)> = space
        .monomials()
        .iter()
        .zip(coeffs)
        .map(|(m, &c)| (m.clone(), c))
        .collect();
    Jet::from_terms(space, &terms)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn products_are_associative(raw in prop::collection::vec(-1.0f64..1.0, 3 * 84)) {
        let space = JetSpace::new(3, 6);
        let a = random_jet(&space, &raw[..84]);
        let b = random_jet(&space, &raw[84..168]);
        let c = random_jet(&space, &raw[168..]);
        let left = a.mul(&b).mul(&c);
        let right = a.mul(&b.mul(&c));
        for k in 0..space.len() {
            prop_assert!((left.coeff(k) - right.coeff(k)).abs() <= 1e-14 * 64.0);
        }
    }

    #[test]
    fn inverse_metric_composes_to_identity(seed in any::<u64>(), n in 3usize..=4) {
        let m = JetMetric::random(seed, n, 6);
        let inv = jet_inverse_metric(&m).unwrap();
        for i in 0..n {
            for j in 0..n {
                let mut s = Jet::zero(m.space());
                for k in 0..n {
                    s.add_mul_assign(1.0, m.component(i, k), inv.get(&[k, j]));
                }
                let target = if i == j { 1.0 } else { 0.0 };
                prop_assert!((s.coeff(0) - target).abs() <= 1e-13);
                for c in 1..m.space().len() {
                    prop_assert!(s.coeff(c).abs() <= 1e-13);
                }
            }
        }
    }

    #[test]
    fn sphere_jet_has_constant_curvature(k in 0.1f64..3.0, n in 3usize..=4) {
        let m = JetMetric::sphere_normal(n, k, 4);
        let rm = &curvature_at_origin(&m, 0).unwrap()[0];
        for i in 0..n {
            for j in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        let d = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
                        let expect = k * (d(i, a) * d(j, b) - d(i, b) * d(j, a));
                        prop_assert!((rm.get(&[i, j, a, b]) - expect).abs() <= 1e-10);
                    }
                }
            }
        }
    }
}

#[test]
fn operator_names_parse() {
    for (name, op) in [
        ("delta", JetOperator::Delta),
        ("delta_tilde", JetOperator::DeltaTilde),
        ("D", JetOperator::D),
        ("D_tilde", JetOperator::DTilde),
        ("trace", JetOperator::Trace),
        ("laplacian", JetOperator::Laplacian),
    ] {
        assert_eq!(name.parse::<JetOperator>().unwrap(), op);
    }
    assert!("grad".parse::<JetOperator>().is_err());
}

#[test]
fn trace_of_metric_square_is_hand_value() {
    // tr(g∧g) = 2(n−1) g for the flat metric.
    let n = 4;
    let m = JetMetric::flat(n, 2);
    let g = m.tensor::<f64>();
    let chart = quadflow::jet::Chart::new(g.clone()).unwrap();
    let gg = chart.kulkarni_nomizu(&g, &g);
    let tr = apply_operator(JetOperator::Trace, &gg, &m).unwrap().at_origin().unwrap();
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { 2.0 * (n as f64 - 1.0) } else { 0.0 };
            assert_eq!(tr.get(&[i, j]), expect);
        }
    }
}

#[test]
fn valence_errors_are_reported() {
    let m = JetMetric::flat(3, 3);
    let f = JetTensor::from_components(3, 0, 0, vec![Jet::constant(m.space(), 1.0)]);
    assert!(apply_operator(JetOperator::Delta, &f, &m).is_err());
    assert!(apply_operator(JetOperator::Trace, &f, &m).is_err());
}

#[test]
fn second_bianchi_through_operator_interface() {
    let m = JetMetric::random(21, 4, 6);
    let chart = quadflow::jet::Chart::new(m.tensor::<f64>()).unwrap();
    let rm = chart.riemann();
    for op in [JetOperator::D, JetOperator::DTilde] {
        let out = apply_operator(op, &rm, &m).unwrap().at_origin().unwrap();
        assert!(out.max_abs() < 1e-12);
    }
}

#[test]
fn scalar_variation_along_metric_matches_scaling_law() {
    // R(cg) = R/c, so the derivative along h = g at c = 1 is −R.
    let m = JetMetric::random(5, 3, 6);
    let g = m.tensor::<f64>();
    let scal = curvature_at_origin(&m, 0).unwrap();
    let rm = &scal[0];
    let ginv = jet_inverse_metric(&m).unwrap().at_origin().unwrap();
    let mut r = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    r += ginv.get(&[i, k]) * ginv.get(&[j, l]) * rm.get(&[i, j, k, l]);
                }
            }
        }
    }
    let d = scalar_curvature_derivative(&m, &g).unwrap();
    assert!((d + r).abs() < 1e-12, "{d} vs {}", -r);
}

#[test]
fn identity_suites_hold_on_seeded_metrics() {
    for n in [3usize, 4] {
        for seed in 0..6u64 {
            let mut reports = verify_identities(seed, n, 6).unwrap();
            reports.extend(verify_first_variations(seed, n, 6).unwrap());
            for r in &reports {
                assert!(r.passed(1e-8), "{} failed: {:?}", r.name, r);
            }
        }
    }
}

#[test]
fn schematic_remainders_are_curvature_order() {
    // Bounded ratio against curvature size × field size across seeds.
    for seed in 0..8u64 {
        for r in quadflow::jet::schematic_identities(seed, 3, 6).unwrap() {
            let ratio = r.curvature_ratio.unwrap();
            assert!(ratio.is_finite() && ratio < 10.0, "{}: {ratio}", r.name);
        }
    }
}

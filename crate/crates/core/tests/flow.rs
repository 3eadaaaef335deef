use proptest::prelude::*;
use quadflow::catalog::VOL_S3;
use quadflow::flow::{
    blowup_rescale, detect_event, integrate, monitors, yamabe_upper, Energy, FamilyKind,
    FlowControls, FlowError, FlowEvent, ReducedFamily, Trajectory,
};

fn controls(horizon: f64) -> FlowControls {
    FlowControls {
        horizon,
        ..Default::default()
    }
}

fn run(kind: FamilyKind, energy: Energy, alpha: f64, theta: &[f64], horizon: f64) -> Trajectory {
    integrate(&ReducedFamily::new(kind, energy, alpha), theta, &controls(horizon)).unwrap()
}

#[test]
fn round_three_sphere_reduced_gradient_is_closed_form() {
    for alpha in [0.05, 0.1, 0.5] {
        let fam = ReducedFamily::new(FamilyKind::S3Round, Energy::GAlpha, alpha);
        for c in [0.5, 1.0, 3.0] {
            let gram = fam.gram(&[c]).unwrap();
            assert!((gram[(0, 0)] - 3.0 * VOL_S3 / c.sqrt()).abs() < 1e-12 * gram[(0, 0)]);
            let g = fam.reduced_gradient(&[c]).unwrap();
            let expected = 6.0 * alpha / c;
            assert!((g.theta_dot[0] - expected).abs() < 1e-9 * expected, "{g:?}");
        }
    }
}

#[test]
fn round_three_sphere_trajectory_matches_closed_form() {
    for alpha in [0.05, 0.1, 0.5] {
        let tr = run(FamilyKind::S3Round, Energy::GAlpha, alpha, &[1.0], 10.0);
        assert_eq!(tr.event, FlowEvent::HorizonReached);
        assert_eq!(tr.last().t, 10.0);
        for s in &tr.states {
            let exact = (1.0 + 12.0 * alpha * s.t).sqrt();
            assert!((s.theta[0] / exact - 1.0).abs() < 1e-6, "α={alpha} t={}", s.t);
        }
        assert!(monitors(&tr).all_passed);
    }
}

#[test]
fn fixed_points_stay_put() {
    let cases: Vec<(FamilyKind, Energy, Vec<f64>)> = vec![
        (FamilyKind::S4Round, Energy::FAlpha, vec![1.0]),
        (FamilyKind::S4Round, Energy::FAlpha, vec![2.5]),
        (FamilyKind::Torus3, Energy::FAlpha, vec![1.0, 2.0, 3.0]),
        (FamilyKind::Torus3, Energy::GAlpha, vec![1.0, 2.0, 3.0]),
        (FamilyKind::Torus4, Energy::FAlpha, vec![1.0, 0.5, 2.0, 4.0]),
        (FamilyKind::Torus4, Energy::GAlpha, vec![1.0, 0.5, 2.0, 4.0]),
    ];
    for (kind, energy, theta) in cases {
        for alpha in [0.0, 0.3, 1.0] {
            let tr = run(kind, energy, alpha, &theta, 1.0);
            assert_eq!(tr.event, FlowEvent::Converged, "{kind} {energy:?}");
            for s in &tr.states {
                for (a, b) in s.theta.iter().zip(&theta) {
                    assert!((a - b).abs() <= 1e-10 * b, "{kind}: {a} vs {b}");
                }
            }
        }
    }
    // The symmetric product is a critical point of the scale-invariant F^α.
    let tr = run(FamilyKind::S2xS2, Energy::FAlpha, 0.5, &[1.0, 1.0], 1.0);
    for s in &tr.states {
        assert!(s.theta.iter().all(|x| (x - 1.0).abs() < 1e-10));
    }
}

#[test]
fn sphere_product_flows_conserve_volume_and_decrease_energy() {
    for alpha in [0.1, 0.5, 0.9] {
        for theta in [[1.0, 2.0], [1.0, 0.5], [3.0, 1.0]] {
            let tr = run(FamilyKind::S2xS2, Energy::FAlpha, alpha, &theta, 5.0);
            let rep = monitors(&tr);
            assert!(rep.all_passed, "{alpha} {theta:?}: {rep:?}");
            let names: Vec<&str> = rep.checks.iter().map(|c| c.name.as_str()).collect();
            for required in ["volume_drift", "monotonicity", "dissipation", "weyl_energy_bound"] {
                assert!(names.contains(&required));
            }
            for w in tr.states.windows(2) {
                assert!(w[1].f <= w[0].f + 1e-9 * (1.0 + w[0].f.abs()));
            }
            // The flow pushes towards the symmetric product.
            let ratio = |s: &[f64]| (s[0] / s[1]).ln().abs();
            assert!(ratio(&tr.last().theta) < ratio(&theta));
        }
    }
}

#[test]
fn dissipation_ledger_balances_on_every_family() {
    let runs = [
        run(FamilyKind::S3Round, Energy::GAlpha, 0.1, &[1.0], 10.0),
        run(FamilyKind::S3Round, Energy::GAlpha, -0.1, &[1.0], 10.0),
        run(FamilyKind::Milnor, Energy::GAlpha, 0.1, &[1.0, 1.0, 1.5], 50.0),
        run(FamilyKind::Milnor, Energy::GAlpha, 0.1, &[1.0, 1.0, 1e-3], 100.0),
        run(FamilyKind::Milnor, Energy::GAlpha, 0.3, &[1.0, 2.0, 3.0], 20.0),
        run(FamilyKind::S2xS2, Energy::FAlpha, 0.5, &[1.0, 2.0], 10.0),
        run(FamilyKind::S4Round, Energy::FAlpha, 0.5, &[1.0], 1.0),
    ];
    for tr in &runs {
        let f0 = tr.first().f;
        let drop = f0 - tr.last().f;
        assert!(
            (tr.dissipation - drop).abs() <= 1e-6 * (1.0 + f0.abs()),
            "{}: ∫ = {}, drop = {drop}",
            tr.family,
            tr.dissipation
        );
    }
}

#[test]
fn berger_sphere_becomes_round() {
    let tr = run(FamilyKind::Milnor, Energy::GAlpha, 0.1, &[1.0, 1.0, 1.5], 1000.0);
    assert_eq!(tr.event, FlowEvent::HorizonReached);
    let aniso = |th: &[f64]| {
        let mx = th.iter().copied().fold(0.0, f64::max);
        let mn = th.iter().copied().fold(f64::INFINITY, f64::min);
        mx / mn - 1.0
    };
    let values: Vec<f64> = tr.states.iter().map(|s| aniso(&s.theta)).collect();
    // Monotone down to the rounding floor of the parameters.
    for w in values.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-9) || w[1] < 1e-12, "{} -> {}", w[0], w[1]);
    }
    let first_small = tr.states.iter().find(|s| aniso(&s.theta) < 1e-3).expect("becomes round");
    assert!(first_small.t < 1000.0);
    assert!(monitors(&tr).all_passed);
}

#[test]
fn isotropic_milnor_point_keeps_isotropy() {
    let fam = ReducedFamily::new(FamilyKind::Milnor, Energy::GAlpha, 0.2);
    let g = fam.reduced_gradient(&[2.0, 2.0, 2.0]).unwrap();
    let d = &g.theta_dot;
    assert!((d[0] - d[1]).abs() < 1e-10 * d[0].abs() && (d[0] - d[2]).abs() < 1e-10 * d[0].abs());
    // Permuting the parameters permutes the velocity.
    let g1 = fam.reduced_gradient(&[1.0, 2.0, 3.0]).unwrap().theta_dot;
    let g2 = fam.reduced_gradient(&[3.0, 1.0, 2.0]).unwrap().theta_dot;
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        assert!((g1[i] - g2[j]).abs() < 1e-9 * (1.0 + g1[i].abs()));
    }
}

#[test]
fn event_detection_examples() {
    let c = FlowControls::default();
    let milnor = ReducedFamily::new(FamilyKind::Milnor, Energy::GAlpha, 0.1);
    let s = milnor.state(0.0, &[1.0, 1.0, 1e-7]).unwrap();
    assert!(s.rm_sup < c.curvature_bound);
    assert_eq!(detect_event(&s, &c), Some(FlowEvent::Collapse));
    let round = ReducedFamily::new(FamilyKind::S3Round, Energy::GAlpha, 0.1);
    let s = round.state(0.0, &[1e-7]).unwrap();
    assert!((s.rm_sup - 1e7).abs() < 1.0);
    assert_eq!(detect_event(&s, &c), Some(FlowEvent::Blowup));
    let s4 = ReducedFamily::new(FamilyKind::S4Round, Energy::FAlpha, 0.5);
    let s = s4.state(0.0, &[1.0]).unwrap();
    assert_eq!(detect_event(&s, &c), Some(FlowEvent::Converged));
    // Blow-up wins over collapse.
    let mut s = milnor.state(0.0, &[1.0, 1.0, 1e-7]).unwrap();
    s.rm_sup = 1e7;
    assert_eq!(detect_event(&s, &c), Some(FlowEvent::Blowup));
}

#[test]
fn berger_collapse_is_classified_with_bounded_curvature() {
    for c0 in [1e-3, 1e-4] {
        let tr = run(FamilyKind::Milnor, Energy::GAlpha, 0.1, &[1.0, 1.0, c0], 100.0);
        assert_eq!(tr.event, FlowEvent::Collapse, "c0 = {c0}");
        assert!(tr.states.iter().all(|s| s.rm_sup < tr.controls.curvature_bound));
        assert!(tr.last().collapse_ratio() < 1e-6);
        assert!(monitors(&tr).all_passed);
    }
}

#[test]
fn shrinking_sphere_blows_up_and_rescales() {
    let fam = ReducedFamily::new(FamilyKind::S3Round, Energy::GAlpha, -0.1);
    let tr = integrate(&fam, &[1.0], &controls(10.0)).unwrap();
    assert_eq!(tr.event, FlowEvent::Blowup);
    assert!(!tr.alpha_in_range);
    // Singular time of c² = 1 − 1.2t.
    assert!((tr.last().t - 1.0 / 1.2).abs() < 1e-6);
    let seq = blowup_rescale(&fam, &tr, 12).unwrap();
    assert!(seq.len() >= 10);
    for w in seq.windows(2) {
        assert!(w[1].t > w[0].t && w[1].scale > w[0].scale);
    }
    for r in &seq {
        assert!((r.rescaled.rm_sup() - 1.0).abs() <= 1e-12);
        let y0 = yamabe_upper(&r.original);
        assert!((yamabe_upper(&r.rescaled) - y0).abs() <= 1e-12 * y0.abs());
        let vol_ratio = r.rescaled.volume() / r.original.volume();
        assert!((vol_ratio / r.scale.powf(1.5) - 1.0).abs() < 1e-12);
    }
    assert!(monitors(&tr).all_passed);
    let not_blowup = run(FamilyKind::S3Round, Energy::GAlpha, 0.1, &[1.0], 1.0);
    assert_eq!(blowup_rescale(&fam, &not_blowup, 3).unwrap_err(), FlowError::NoBlowup);
}

#[test]
fn four_dimensional_rescaling_preserves_l2_curvature() {
    // A synthetic shrinking trajectory of round four-spheres.
    let fam = ReducedFamily::new(FamilyKind::S4Round, Energy::FAlpha, 0.5);
    let mut tr = run(FamilyKind::S4Round, Energy::FAlpha, 0.5, &[1.0], 1.0);
    tr.states = (0..40)
        .map(|i| fam.state(i as f64, &[0.7f64.powi(i)]).unwrap())
        .collect();
    tr.event = FlowEvent::Blowup;
    let seq = blowup_rescale(&fam, &tr, 8).unwrap();
    assert_eq!(seq.len(), 8);
    for r in &seq {
        let l2 = |m: &quadflow::catalog::HomogeneousModel| (m.volume() * m.curvature().rm_norm_sq()).sqrt();
        assert!((l2(&r.rescaled) / l2(&r.original) - 1.0).abs() < 1e-12);
        assert!((r.rescaled.volume() / r.original.volume() / r.scale.powi(2) - 1.0).abs() < 1e-12);
        assert!((r.rescaled.rm_sup() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn halving_tolerances_converges() {
    let fam = ReducedFamily::new(FamilyKind::Milnor, Energy::GAlpha, 0.1);
    let base = integrate(&fam, &[1.0, 2.0, 3.0], &controls(5.0)).unwrap();
    let fine = integrate(
        &fam,
        &[1.0, 2.0, 3.0],
        &FlowControls {
            atol: 5e-10,
            rtol: 5e-10,
            ..controls(5.0)
        },
    )
    .unwrap();
    let diff = base
        .last()
        .theta
        .iter()
        .zip(&fine.last().theta)
        .map(|(a, b)| (a.ln() - b.ln()).abs())
        .fold(0.0, f64::max);
    assert!(diff <= 10.0 * base.local_error_sum, "{diff} vs {}", base.local_error_sum);
}

#[test]
fn runs_are_deterministic_and_csv_is_well_formed() {
    let a = run(FamilyKind::Milnor, Energy::GAlpha, 0.1, &[1.0, 1.0, 1.5], 2.0);
    let b = run(FamilyKind::Milnor, Energy::GAlpha, 0.1, &[1.0, 1.0, 1.5], 2.0);
    assert_eq!(a.to_csv(), b.to_csv());
    let csv = a.to_csv();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,theta_1,theta_2,theta_3,F,grad_norm,rm_sup,rm_l2,volume,min_eig"
    );
    for line in lines {
        let fields: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(fields.len(), 10);
    }
}

#[test]
fn bbs_monitor_vanishes_only_at_isotropic_points() {
    let iso = run(FamilyKind::Milnor, Energy::GAlpha, 0.1, &[1.0, 1.0, 1.0], 1.0);
    // ∇Rm = 0 at isotropic points, up to rounding in the frame connection.
    assert!(monitors(&iso).bbs_sup < 1e-20);
    let aniso = run(FamilyKind::Milnor, Energy::GAlpha, 0.1, &[1.0, 1.0, 1.5], 1.0);
    let b = monitors(&aniso).bbs_sup;
    assert!(b.is_finite() && b > 0.0);
}

#[test]
fn invalid_inputs_are_rejected() {
    let fam = ReducedFamily::new(FamilyKind::Milnor, Energy::GAlpha, 0.1);
    assert!(matches!(fam.model(&[1.0, 1.0]), Err(FlowError::ParamCount { .. })));
    assert!(matches!(fam.model(&[1.0, -1.0, 1.0]), Err(FlowError::Inadmissible(_))));
    assert!(matches!(
        integrate(&fam, &[1.0, 1.0, 1.0], &controls(-1.0)),
        Err(FlowError::InvalidControls(_))
    ));
    assert!("banana".parse::<FamilyKind>().is_err());
    for k in FamilyKind::ALL {
        assert_eq!(k.name().parse::<FamilyKind>().unwrap(), k);
    }
}

fn family_strategy() -> impl Strategy<Value = (ReducedFamily, Vec<f64>, Vec<f64>)> {
    (0usize..6, prop::bool::ANY, 0.0f64..1.0, any::<u64>()).prop_map(|(i, e, alpha, seed)| {
        use rand::{Rng, SeedableRng};
        let kind = FamilyKind::ALL[i];
        let energy = if e { Energy::FAlpha } else { Energy::GAlpha };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let k = kind.param_count();
        let theta: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..2.0)).collect();
        let v: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        (ReducedFamily::new(kind, energy, alpha), theta, v)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// dF(θ + εv)/dε at 0, by Richardson-extrapolated central differences,
    /// equals −⟨Gθ̇, v⟩/factor.
    #[test]
    fn reduced_gradient_is_consistent((fam, theta, v) in family_strategy()) {
        let g = fam.reduced_gradient(&theta).unwrap();
        let gram = fam.gram(&theta).unwrap();
        let k = theta.len();
        let mut pairing = 0.0;
        for i in 0..k {
            for j in 0..k {
                pairing += v[i] * gram[(i, j)] * g.theta_dot[j];
            }
        }
        let predicted = -pairing / fam.energy.factor();
        let f = |eps: f64| {
            let p: Vec<f64> = theta.iter().zip(&v).map(|(t, d)| t + eps * d).collect();
            fam.value(&p).unwrap()
        };
        let central = |eps: f64| (f(eps) - f(-eps)) / (2.0 * eps);
        let eps = 1e-3;
        let rich = (4.0 * central(eps / 2.0) - central(eps)) / 3.0;
        let scale = 1.0 + fam.value(&theta).unwrap().abs();
        prop_assert!((rich - predicted).abs() <= 1e-6 * scale, "{rich} vs {predicted}");
        // And dF/dt = −grad_norm² along the flow.
        let dfdt: f64 = g.dfdtheta.iter().zip(&g.theta_dot).map(|(a, b)| a * b).sum();
        prop_assert!((dfdt + g.grad_norm * g.grad_norm).abs() <= 1e-12 * (1.0 + dfdt.abs()));
    }

    #[test]
    fn scale_invariant_flows_preserve_volume_infinitesimally((fam, theta, _v) in family_strategy()) {
        prop_assume!(fam.n() == 4 && fam.energy == Energy::FAlpha);
        // d Vol/dt = ½ Vol Σ_blocks dim_i θ̇_i/θ_i.
        let g = fam.reduced_gradient(&theta).unwrap();
        let eig = fam.metric_eigenvalues(&theta);
        let mut rate = 0.0;
        let mut idx = 0;
        for (i, t) in theta.iter().enumerate() {
            let mult = eig.iter().skip(idx).take_while(|e| *e == t).count();
            rate += mult as f64 * g.theta_dot[i] / t;
            idx += mult;
        }
        prop_assert!(rate.abs() < 1e-8 * (1.0 + g.theta_dot.iter().map(|x| x.abs()).sum::<f64>()));
    }
}

//! Catalog models against independent oracles, and functional identities.

use std::f64::consts::PI;

use proptest::prelude::*;
use quadflow::catalog::{
    flat_torus, round_sphere, scaled, sphere_product, su2_milnor, yamabe_bracket,
    HomogeneousModel, VOL_S2XS2, VOL_S3, VOL_S4,
};
use quadflow::functionals::{
    evaluate, f_alpha_gradient_algebraic, gursky_bound, pinching_verdicts, sobolev_bound,
    trace_gradient_check,
};
use quadflow::tensor::{random_curvature, Metric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PI2: f64 = PI * PI;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Composite Simpson rule on `[a, b]`.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let h = (b - a) / intervals as f64;
    let mut s = f(a) + f(b);
    for k in 1..intervals {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn volume_constants_match_solid_angle_integrals() {
    // |S^k| = |S^{k−1}| ∫₀^π sin^{k−1}θ dθ, starting from |S¹| = 2π.
    let s1 = 2.0 * PI;
    let s2 = s1 * simpson(f64::sin, 0.0, PI, 2000);
    let s3 = s2 * simpson(|t| t.sin().powi(2), 0.0, PI, 2000);
    let s4 = s3 * simpson(|t| t.sin().powi(3), 0.0, PI, 2000);
    assert!(rel(VOL_S3, s3) < 1e-12, "{VOL_S3} vs {s3}");
    assert!(rel(VOL_S4, s4) < 1e-12, "{VOL_S4} vs {s4}");
    assert!(rel(VOL_S2XS2, s2 * s2) < 1e-12);
}

/// Riemann tensor of an orthonormal frame with constant structure constants,
/// computed from the Koszul formula alone.
fn oracle_curvature(a: f64, b: f64, c: f64) -> [[[[f64; 3]; 3]; 3]; 3] {
    let s = (a * b * c).sqrt();
    let lam = [2.0 * a / s, 2.0 * b / s, 2.0 * c / s];
    let eps = |i: usize, j: usize, k: usize| -> f64 {
        match (i, j, k) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    };
    // [e_i, e_j] = Σ_k ε_ijk λ_k e_k
    let cst = |i: usize, j: usize, k: usize| eps(i, j, k) * lam[k];
    let gam = |i: usize, j: usize, k: usize| 0.5 * (cst(i, j, k) - cst(j, k, i) + cst(k, i, j));
    let mut rm = [[[[0.0; 3]; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    // ⟨R(e_i,e_j)e_l, e_k⟩ with R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_[X,Y].
                    let mut v = 0.0;
                    for m in 0..3 {
                        v += gam(j, l, m) * gam(i, m, k) - gam(i, l, m) * gam(j, m, k)
                            - cst(i, j, m) * gam(m, l, k);
                    }
                    rm[i][j][k][l] = v;
                }
            }
        }
    }
    rm
}

#[test]
fn milnor_closed_form_matches_structure_constant_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let (a, b, c) = (
            rng.random_range(0.05..5.0),
            rng.random_range(0.05..5.0),
            rng.random_range(0.05..5.0),
        );
        let model = su2_milnor(a, b, c).unwrap();
        let oracle = oracle_curvature(a, b, c);
        let rm = model.curvature().rm();
        let scale = rm.max_abs().max(1.0);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let d = (rm.get(i, j, k, l) - oracle[i][j][k][l]).abs();
                        assert!(d <= 1e-10 * scale, "({a},{b},{c}) [{i}{j}{k}{l}] off by {d}");
                    }
                }
            }
        }
    }
}

#[test]
fn berger_spheres_have_two_ricci_eigenvalues() {
    for &(a, c) in &[(1.0, 0.3), (2.0, 5.0), (0.7, 0.01)] {
        let m = su2_milnor(a, a, c).unwrap();
        let s = c / a;
        let cp = m.curvature();
        assert!(rel(cp.ric().get(0, 0), (4.0 - 2.0 * s) / a) < 1e-12);
        assert!(rel(cp.ric().get(2, 2), 2.0 * s / a) < 1e-12);
        let mut eig = cp.ric().eigenvalues();
        eig.dedup_by(|x, y| (*x - *y).abs() < 1e-10);
        assert_eq!(eig.len(), 2);
        let expect = 32.0 / 3.0 * (1.0 - s).powi(2) / (a * a);
        assert!(rel(cp.ric0_norm_sq(), expect) < 1e-12);
        let alpha = 0.2;
        let g = evaluate(&m, alpha).g_alpha;
        let closed = 2.0 * PI2 / a.sqrt()
            * s.sqrt()
            * (32.0 / 3.0 * (1.0 - s).powi(2) + 4.0 * alpha * (4.0 - s).powi(2));
        assert!(rel(g, closed) < 1e-12);
    }
}

#[test]
fn berger_collapse_has_bounded_curvature() {
    let mut last_vol = f64::INFINITY;
    for k in 1..8 {
        let c = 10f64.powi(-k);
        let m = su2_milnor(1.0, 1.0, c).unwrap();
        assert!(m.rm_sup() < 4.0 + 1e-12, "sectional curvature grew: {}", m.rm_sup());
        assert!(m.volume() < last_vol);
        last_vol = m.volume();
    }
    assert!(last_vol < 1e-2);
}

fn dim4_models() -> Vec<HomogeneousModel> {
    let mut v = vec![
        round_sphere(4, 0.5).unwrap(),
        round_sphere(4, 1.0).unwrap(),
        round_sphere(4, 2.0).unwrap(),
        flat_torus(&[1.0, 2.0, 0.5, 1.5]).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        v.push(sphere_product(rng.random_range(0.2..3.0), rng.random_range(0.2..3.0)).unwrap());
    }
    v
}

fn all_models() -> Vec<HomogeneousModel> {
    let mut v = dim4_models();
    v.push(round_sphere(3, 1.0).unwrap());
    v.push(round_sphere(3, 0.3).unwrap());
    v.push(flat_torus(&[1.0, 2.0, 3.0]).unwrap());
    v.push(su2_milnor(1.0, 2.0, 0.5).unwrap());
    v.push(su2_milnor(1.0, 1.0, 0.1).unwrap());
    v
}

#[test]
fn gauss_bonnet_on_four_dimensional_models() {
    for m in dim4_models() {
        let chi = m.euler_char().unwrap() as f64;
        let r = evaluate(&m, 0.5).gb_residual.unwrap();
        assert!(r.abs() <= 1e-10 * 8.0 * PI2 * (chi.abs() + 1.0), "{}: {r}", m.name());
    }
}

#[test]
fn functional_oracles() {
    let s4 = evaluate(&round_sphere(4, 1.0).unwrap(), 0.0);
    assert!(rel(s4.f_rm, 16.0 * PI2) < 1e-10);
    assert!(rel(s4.f_r, 384.0 * PI2) < 1e-10);
    let p = evaluate(&sphere_product(1.0, 1.0).unwrap(), 0.5);
    assert!(rel(p.f_w, 64.0 * PI2 / 3.0) < 1e-10);
    assert!(rel(p.f_2, 32.0 * PI2 / 3.0) < 1e-10);
    assert!(rel(p.f_alpha, 32.0 * PI2 / 3.0) < 1e-10);
    let s3 = evaluate(&round_sphere(3, 1.0).unwrap(), 0.0);
    assert!(rel(s3.f_rm, 6.0 * PI2) < 1e-12);
    assert!(rel(s3.f_ric, 24.0 * PI2) < 1e-12);
    assert!(rel(s3.f_r, 72.0 * PI2) < 1e-12);
}

#[test]
fn decomposition_and_dimension_identities() {
    for m in all_models() {
        let r = evaluate(&m, 0.3);
        let n = m.n() as f64;
        let sum = r.f_w + r.f_ric0 / (n - 2.0) + r.f_r / (2.0 * n * (n - 1.0));
        assert!((r.f_rm - sum).abs() <= 1e-12 * r.f_rm.max(1.0), "{}", m.name());
        if m.n() == 3 {
            assert!((r.f_rm - (r.f_ric - 0.25 * r.f_r)).abs() <= 1e-12 * r.f_rm.max(1.0));
        }
        let sigma2 = m.curvature().sigma2_schouten() * m.volume();
        assert!((r.f_2 - sigma2).abs() <= 1e-12 * r.f_r.max(1.0), "{}", m.name());
        for v in [r.f_rm, r.f_ric, r.f_r, r.f_w, r.f_ric0] {
            assert!(v >= 0.0);
        }
    }
}

#[test]
fn scaling_laws() {
    for base in [round_sphere(3, 1.0).unwrap(), round_sphere(4, 1.0).unwrap(), su2_milnor(1.0, 2.0, 0.5).unwrap()] {
        let n = base.n() as f64;
        let r0 = evaluate(&base, 0.2);
        for c in [0.5, 2.0, 4.0] {
            let m = scaled(&base, c).unwrap();
            let r = evaluate(&m, 0.2);
            let k = c.powf((n - 4.0) / 2.0);
            for (x, y) in [(r.f_r, r0.f_r), (r.f_rm, r0.f_rm), (r.f_ric0, r0.f_ric0), (r.f_w, r0.f_w)] {
                assert!((x - k * y).abs() <= 1e-12 * (k * y).abs().max(1.0));
            }
            assert!(rel(m.volume(), base.volume() * c.powf(n / 2.0)) < 1e-14);
            if base.nabla_rm_norm_sq() > 0.0 {
                assert!(rel(m.nabla_rm_norm_sq(), base.nabla_rm_norm_sq() / c.powi(3)) < 1e-12);
            }
        }
    }
}

#[test]
fn scaled_sphere_has_expected_curvature() {
    let s = round_sphere(4, 2.0).unwrap();
    assert!(rel(s.curvature().scal(), 3.0) < 1e-14);
    assert!(rel(evaluate(&s, 0.0).f_rm, 16.0 * PI2) < 1e-12);
    let t = flat_torus(&[1.0, 1.0, 1.0]).unwrap();
    assert_eq!(evaluate(&t, 0.4).g_alpha, 0.0);
}

#[test]
fn gursky_equality_on_round_sphere() {
    let s4 = round_sphere(4, 1.0).unwrap();
    let g = gursky_bound(&s4, 0.0).unwrap();
    assert!(rel(g, 32.0 * PI2 / 3.0) < 1e-12);
    assert!(rel(g, evaluate(&s4, 0.0).f_r / 36.0) < 1e-12);
    let br = yamabe_bracket(&s4, 0.0);
    assert!(rel(br.lower.unwrap(), br.upper) < 1e-12);
}

#[test]
fn yamabe_bracket_examples() {
    let t4 = flat_torus(&[1.0; 4]).unwrap();
    assert_eq!(yamabe_bracket(&t4, 0.3).upper, 0.0);
    let p = sphere_product(1.0, 1.0).unwrap();
    let br = yamabe_bracket(&p, 0.25);
    assert!(rel(br.upper * br.upper, 256.0 * PI2 / 36.0) < 1e-12);
    let fa = evaluate(&p, 0.25).f_alpha;
    assert!(rel(br.lower.unwrap().powi(2), 2.0 / 3.0 * (0.75 * 32.0 * PI2 - fa)) < 1e-12);
    assert!(yamabe_bracket(&round_sphere(3, 1.0).unwrap(), 0.1).lower.is_none());
}

#[test]
fn pinching_examples() {
    for alpha in [0.1, 0.5, 0.9] {
        let v = pinching_verdicts(&round_sphere(4, 1.0).unwrap(), alpha).unwrap();
        assert!(v.rigidity.conservative.holds && v.rigidity.conservative.slack > 0.0);
        assert!(v.small_energy.holds && v.pinching.holds);
        assert!(v.conformally_flat.conservative.holds);
        assert!(v.equi_bounds.hypothesis.holds && v.equi_bounds.conclusion.holds);
        assert!(v.singularity_hypothesis.energy_form.holds);
    }
    let p = sphere_product(1.0, 1.0).unwrap();
    let v = pinching_verdicts(&p, 4.0 / 13.0).unwrap();
    assert!(!v.small_energy.holds);
    assert!(v.small_energy.slack < 0.0);
    assert!(pinching_verdicts(&round_sphere(3, 1.0).unwrap(), 0.5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn verdict_slack_signs_and_equivalences(r in 0.2f64..3.0, s in 0.2f64..3.0, alpha in 0.01f64..0.99) {
        let m = sphere_product(r, s).unwrap();
        let v = pinching_verdicts(&m, alpha).unwrap();
        for p in [v.small_energy, v.pinching, v.rigidity.conservative, v.rigidity.optimistic,
                  v.conformal_pinching.conservative, v.conformally_flat.optimistic] {
            prop_assert_eq!(p.holds, p.slack > 0.0);
        }
        let scale = evaluate(&m, alpha).f_r.max(1.0);
        prop_assert!(v.singularity_hypothesis.equivalence_residual <= 1e-12 * scale);
        if v.equi_bounds.hypothesis.holds {
            prop_assert!(v.equi_bounds.conclusion.holds, "{:?}", v.equi_bounds);
        }
    }

    #[test]
    fn scale_invariance_in_dimension_four(r in 0.2f64..3.0, s in 0.2f64..3.0, c in prop::sample::select(vec![0.5, 2.0])) {
        let m = sphere_product(r, s).unwrap();
        let a = evaluate(&m, 0.3);
        let b = evaluate(&scaled(&m, c).unwrap(), 0.3);
        for (x, y) in [(a.f_rm, b.f_rm), (a.f_ric, b.f_ric), (a.f_r, b.f_r), (a.f_w, b.f_w),
                       (a.f_ric0, b.f_ric0), (a.f_2, b.f_2), (a.f_alpha, b.f_alpha), (a.g_alpha, b.g_alpha)] {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn gradient_is_trace_free(seed in any::<u64>(), alpha in -1.0f64..2.0) {
        let cp = random_curvature(seed, 4);
        let grad = f_alpha_gradient_algebraic(&cp, alpha).unwrap();
        let tr = Metric::new(cp.g()).unwrap().trace(&grad);
        prop_assert!(tr.abs() <= 1e-12 * (1.0 + cp.ric0_norm_sq() + cp.scal().abs() * cp.ric0().max_abs()));
    }

    #[test]
    fn sobolev_bound_homogeneity(rp in 0.01f64..10.0, p in 2.1f64..20.0, a in 0.5f64..3.0) {
        let y = 2.0 / (a * a);
        let b1 = sobolev_bound(y, rp, p, a, 4).unwrap();
        let b2 = sobolev_bound(y, 2.0 * rp, p, a, 4).unwrap();
        prop_assert!((b2 / b1 - 2f64.powf(p / (2.0 * p - 4.0))).abs() <= 1e-12 * b2 / b1);
        let b3 = sobolev_bound(y, 1.5 * rp, p, a, 4).unwrap();
        prop_assert!(b3 > b1);
    }
}

#[test]
fn trace_gradient_on_models() {
    assert!(trace_gradient_check(&round_sphere(4, 1.0).unwrap(), 0.3).unwrap().abs() < 1e-12);
    assert!(trace_gradient_check(&sphere_product(1.0, 2.0).unwrap(), 0.5).unwrap().abs() < 1e-12);
}

#[test]
fn sobolev_infinite_exponent_is_linear() {
    let b1 = sobolev_bound(1.0, 1.0, f64::INFINITY, 2.0, 4).unwrap();
    let b2 = sobolev_bound(1.0, 3.0, f64::INFINITY, 2.0, 4).unwrap();
    assert!(rel(b2, 3.0 * b1) < 1e-14);
    assert!(rel(b1, (1.0f64 / 6.0).sqrt() * 4.0) < 1e-14);
}

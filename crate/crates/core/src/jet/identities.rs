//! Residual suites for the double-form identities and first-variation formulas.
//!
//! Every identity is evaluated at the chart origin of a seeded random metric.
//! Exact identities and identities with an explicitly written curvature
//! remainder must vanish up to floating point.  Identities whose remainder is
//! only known schematically are checked on a flat metric written in curved
//! coordinates (where the remainder vanishes) and, on the curved background,
//! reported as a ratio against curvature times the field size.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::chart::{Chart, JetMetric, JetTensor, OriginTensor};
use super::{dual_jet, Dual, Jet, JetError, JetSpace, Scalar};

/// Lowest jet degree that supports every identity in the suite.
pub const MIN_SUITE_DEGREE: usize = 6;

/// How an identity's right-hand side is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityKind {
    /// Holds with no remainder.
    Exact,
    /// Holds with a fully written curvature remainder.
    ExplicitRemainder,
    /// Holds up to an unspecified curvature-order remainder.
    Schematic,
}

/// Outcome of checking one identity on one background.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub name: String,
    pub kind: IdentityKind,
    /// Largest absolute residual component at the origin.  For schematic
    /// identities this is measured on the flat curvilinear background.
    pub max_abs_residual: f64,
    /// Largest absolute component among the terms being compared.
    pub scale: f64,
    /// Schematic identities only: curved-background residual divided by
    /// (curvature size × field size).
    pub curvature_ratio: Option<f64>,
    pub seed: u64,
    pub n: usize,
    pub degree: usize,
    pub background: String,
}

impl IdentityReport {
    /// Whether the residual is within `tol` (and the ratio, if any, finite).
    pub fn passed(&self, tol: f64) -> bool {
        self.max_abs_residual.is_finite()
            && self.max_abs_residual <= tol
            && self.curvature_ratio.is_none_or(f64::is_finite)
    }
}

struct Ctx {
    seed: u64,
    n: usize,
    degree: usize,
    background: String,
    out: Vec<IdentityReport>,
}

impl Ctx {
    fn push(&mut self, name: &str, kind: IdentityKind, lhs: &OriginTensor, rhs: &OriginTensor) {
        let scale = lhs.max_abs().max(rhs.max_abs());
        self.out.push(IdentityReport {
            name: name.to_string(),
            kind,
            max_abs_residual: lhs.max_abs_diff(rhs),
            scale,
            curvature_ratio: None,
            seed: self.seed,
            n: self.n,
            degree: self.degree,
            background: self.background.clone(),
        });
    }

    fn push_zero(&mut self, name: &str, kind: IdentityKind, lhs: &OriginTensor) {
        let zero = zeros_like(lhs);
        self.push(name, kind, lhs, &zero);
    }
}

fn zeros_like(t: &OriginTensor) -> OriginTensor {
    OriginTensor {
        n: t.n,
        p: t.p,
        q: t.q,
        comps: vec![0.0; t.comps.len()],
    }
}

fn origin_fn(n: usize, p: usize, q: usize, mut f: impl FnMut(&[usize]) -> f64) -> OriginTensor {
    let rank = p + q;
    let len = n.pow(rank as u32);
    let mut idx = vec![0usize; rank];
    let comps = (0..len)
        .map(|mut flat| {
            for k in (0..rank).rev() {
                idx[k] = flat % n;
                flat /= n;
            }
            f(&idx)
        })
        .collect();
    OriginTensor { n, p, q, comps }
}

fn lin(terms: &[(f64, &OriginTensor)]) -> OriginTensor {
    let mut out = zeros_like(terms[0].1);
    for (c, t) in terms {
        assert_eq!(t.comps.len(), out.comps.len(), "rank mismatch in combination");
        for (o, v) in out.comps.iter_mut().zip(&t.comps) {
            *o += c * v;
        }
    }
    out
}

fn random_scalar(seed: u64, space: &Arc<JetSpace>) -> JetTensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jet = Jet::zero(space);
    for k in 0..space.len() {
        jet.coeffs[k] = rng.random_range(-1.0..1.0);
    }
    JetTensor::from_components(space.n(), 0, 0, vec![jet])
}

/// Curvature tensors of a chart at jet level.
struct Curvature<S: Scalar> {
    rm: JetTensor<S>,
    ric: JetTensor<S>,
    scal: JetTensor<S>,
}

impl<S: Scalar> Curvature<S> {
    fn of(chart: &Chart<S>) -> Self {
        let rm = chart.riemann();
        let ric = chart.ricci_of(&rm);
        let scal = chart.scalar_of(&ric);
        Self { rm, ric, scal }
    }
}

fn field_seed(seed: u64, salt: u64) -> u64 {
    seed.wrapping_mul(0x2545_f491_4f6c_dd1d).wrapping_add(salt)
}

fn check_degree(degree: usize) -> Result<(), JetError> {
    if degree < MIN_SUITE_DEGREE {
        Err(JetError::InsufficientDegree {
            needed: MIN_SUITE_DEGREE,
            have: degree,
        })
    } else {
        Ok(())
    }
}

fn check_dimension(n: usize) -> Result<(), JetError> {
    if n < 3 {
        Err(JetError::UnsupportedDimension(n))
    } else {
        Ok(())
    }
}

/// Runs the exact and explicit-remainder identity suite on the seeded random
/// metric and the schematic identities on a flat curvilinear metric.
pub fn verify_identities(seed: u64, n: usize, degree: usize) -> Result<Vec<IdentityReport>, JetError> {
    check_dimension(n)?;
    check_degree(degree)?;
    let metric = JetMetric::random(seed, n, degree);
    let mut reports = identities_on(&metric, seed, "random")?;
    reports.extend(schematic_identities(seed, n, degree)?);
    Ok(reports)
}

/// Exact and explicit-remainder identities on a given background.
pub fn identities_on(
    metric: &JetMetric,
    seed: u64,
    background: &str,
) -> Result<Vec<IdentityReport>, JetError> {
    use IdentityKind::{ExplicitRemainder as Rem, Exact};
    let n = metric.n();
    let degree = metric.degree();
    check_dimension(n)?;
    check_degree(degree)?;
    let chart = Chart::new(metric.tensor::<f64>())?;
    let space = metric.space().clone();
    let mut ctx = Ctx {
        seed,
        n,
        degree,
        background: background.to_string(),
        out: Vec::new(),
    };
    let nf = n as f64;
    let curv = Curvature::of(&chart);
    let g = chart.metric().clone();
    let ginv0 = chart.inverse().at_origin()?;
    let gi = |a: usize, b: usize| ginv0.get(&[a, b]);
    let h = JetTensor::random_symmetric(field_seed(seed, 1), &space);

    // Second Bianchi identity and its contractions.
    ctx.push_zero("second_bianchi_D", Exact, &chart.d(&curv.rm).at_origin()?);
    ctx.push_zero("second_bianchi_D_tilde", Exact, &chart.d_tilde(&curv.rm).at_origin()?);
    let lhs = chart.delta_tilde(&curv.ric)?.at_origin()?;
    let rhs = chart.d(&curv.scal).scale(-0.5).at_origin()?;
    ctx.push("contracted_bianchi", Exact, &lhs, &rhs);
    let lhs = chart.delta_tilde(&curv.rm)?.at_origin()?;
    let rhs = chart.d(&curv.ric).scale(-1.0).at_origin()?;
    ctx.push("divergence_of_curvature", Exact, &lhs, &rhs);

    // Divergence of the Weyl tensor against the Schouten tensor.
    let scal_g = g.mul_scalar(&curv.scal.comps()[0]);
    let ric0 = curv.ric.add_scaled(-1.0 / nf, &scal_g);
    let gg = chart.kulkarni_nomizu(&g, &g);
    let weyl = curv
        .rm
        .add_scaled(-1.0 / (nf - 2.0), &chart.kulkarni_nomizu(&ric0, &g))
        .sub(&gg.mul_scalar(&curv.scal.comps()[0]).scale(1.0 / (2.0 * nf * (nf - 1.0))));
    let schouten = curv.ric.add_scaled(-1.0 / (2.0 * (nf - 1.0)), &scal_g);
    let lhs = chart.delta_tilde(&weyl)?.at_origin()?;
    let rhs = chart
        .d(&schouten)
        .scale(-(nf - 3.0) / (nf - 2.0))
        .at_origin()?;
    ctx.push("divergence_of_weyl", Exact, &lhs, &rhs);

    // Second-order operators applied to curvature.
    let lhs = chart.delta(&chart.d(&scal_g))?.at_origin()?;
    let lap_r = chart.laplacian(&curv.scal);
    let rhs = g
        .mul_scalar(&lap_r.comps()[0])
        .add(&chart.hessian(&curv.scal))
        .at_origin()?;
    ctx.push("delta_D_of_scalar_times_metric", Exact, &lhs, &rhs);
    let lhs = chart.delta(&chart.d(&curv.ric))?.at_origin()?;
    let rhs = chart
        .laplacian(&curv.ric)
        .add_scaled(0.5, &chart.hessian(&curv.scal))
        .add(&chart.compose(&curv.ric, &curv.ric))
        .sub(&chart.ring(&curv.rm, &curv.ric))
        .at_origin()?;
    ctx.push("delta_D_of_ricci", Exact, &lhs, &rhs);

    // Trace relations.
    let lhs = chart.trace(&chart.delta(&curv.rm)?)?.at_origin()?;
    let rhs = chart.delta(&chart.trace(&curv.rm)?)?.scale(-1.0).at_origin()?;
    ctx.push("trace_delta_anticommute_curvature", Exact, &lhs, &rhs);
    let dh = chart.d(&h);
    let lhs = chart.trace(&chart.delta(&dh)?)?.at_origin()?;
    let rhs = chart.delta(&chart.trace(&dh)?)?.scale(-1.0).at_origin()?;
    ctx.push("trace_delta_anticommute_D_h", Exact, &lhs, &rhs);
    let trh = chart.trace(&h)?;
    let lhs = chart
        .trace(&dh)?
        .add(&chart.d(&trh))
        .add(&chart.delta_tilde(&h)?)
        .at_origin()?;
    ctx.push_zero("trace_D_relation", Exact, &lhs);
    let dth = chart.d_tilde(&h);
    let lhs = chart
        .trace(&dth)?
        .add(&chart.d_tilde(&trh))
        .add(&chart.delta(&h)?)
        .at_origin()?;
    ctx.push_zero("trace_D_tilde_relation", Exact, &lhs);

    // Commutation identities with explicit curvature remainders.
    let comm = chart.ricci_commutator(&curv.rm, &h);
    let c = comm.at_origin()?;
    let nnh = chart.nabla(&chart.nabla(&h)).at_origin()?;
    let lhs = origin_fn(n, 2, 2, |i| nnh.get(i) - nnh.get(&[i[1], i[0], i[2], i[3]]));
    ctx.push("ricci_identity", Rem, &lhs, &c);

    let lhs = chart.d(&dth).sub(&chart.d_tilde(&dh)).at_origin()?;
    let rhs = origin_fn(n, 2, 2, |i| {
        let (a, b, k, l) = (i[0], i[1], i[2], i[3]);
        c.get(&[a, k, b, l]) - c.get(&[a, l, b, k]) - c.get(&[b, k, a, l]) + c.get(&[b, l, a, k])
    });
    ctx.push("D_D_tilde_commutator", Rem, &lhs, &rhs);

    let t22 = chart.kulkarni_nomizu(&h, &h);
    let ct = chart.ricci_commutator(&curv.rm, &t22).at_origin()?;
    let lhs = chart
        .delta(&chart.delta_tilde(&t22)?)?
        .sub(&chart.delta_tilde(&chart.delta(&t22)?)?)
        .at_origin()?;
    let rhs = origin_fn(n, 1, 1, |i| {
        let mut s = 0.0;
        for a in 0..n {
            for al in 0..n {
                for b in 0..n {
                    for be in 0..n {
                        s += gi(al, a) * gi(be, b) * ct.get(&[a, b, al, i[0], be, i[1]]);
                    }
                }
            }
        }
        s
    });
    ctx.push("delta_delta_tilde_commutator", Rem, &lhs, &rhs);

    let lap_h = chart.laplacian(&h);
    let delta_h = chart.delta(&h)?;
    let lhs = chart
        .delta(&dh)?
        .add(&chart.d(&delta_h))
        .sub(&lap_h)
        .at_origin()?;
    let rhs = origin_fn(n, 1, 1, |i| {
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += gi(a, b) * c.get(&[b, i[0], a, i[1]]);
            }
        }
        s
    });
    ctx.push("delta_D_weitzenbock", Rem, &lhs, &rhs);

    let delta_t_h = chart.delta_tilde(&h)?;
    let lhs = chart
        .delta_tilde(&dth)?
        .add(&chart.d_tilde(&delta_t_h))
        .sub(&lap_h)
        .at_origin()?;
    let rhs = origin_fn(n, 1, 1, |i| {
        let mut s = 0.0;
        for b in 0..n {
            for be in 0..n {
                s += gi(be, b) * c.get(&[b, i[1], i[0], be]);
            }
        }
        s
    });
    ctx.push("delta_tilde_D_tilde_weitzenbock", Rem, &lhs, &rhs);

    let lhs = chart.d(&dh).at_origin()?;
    let rhs = origin_fn(n, 3, 1, |i| {
        let (a, b, cc, k) = (i[0], i[1], i[2], i[3]);
        c.get(&[a, b, cc, k]) + c.get(&[b, cc, a, k]) + c.get(&[cc, a, b, k])
    });
    ctx.push("D_squared", Rem, &lhs, &rhs);

    let lhs = chart.d_tilde(&dth).at_origin()?;
    let rhs = origin_fn(n, 1, 3, |i| {
        let (ii, a, b, cc) = (i[0], i[1], i[2], i[3]);
        c.get(&[a, b, ii, cc]) + c.get(&[b, cc, ii, a]) + c.get(&[cc, a, ii, b])
    });
    ctx.push("D_tilde_squared", Rem, &lhs, &rhs);

    let cdh = chart.ricci_commutator(&curv.rm, &dh).at_origin()?;
    let lhs = chart.delta(&chart.delta(&dh)?)?.at_origin()?;
    let rhs = origin_fn(n, 0, 1, |i| {
        let mut s = 0.0;
        for a in 0..n {
            for al in 0..n {
                for b in 0..n {
                    for be in 0..n {
                        s += gi(b, be) * gi(a, al) * cdh.get(&[be, al, a, b, i[0]]);
                    }
                }
            }
        }
        0.5 * s
    });
    ctx.push("delta_squared_of_D", Rem, &lhs, &rhs);

    let cdth = chart.ricci_commutator(&curv.rm, &dth).at_origin()?;
    let lhs = chart.delta_tilde(&chart.delta_tilde(&dth)?)?.at_origin()?;
    let rhs = origin_fn(n, 1, 0, |i| {
        let mut s = 0.0;
        for b in 0..n {
            for be in 0..n {
                for cc in 0..n {
                    for ga in 0..n {
                        s += gi(cc, ga) * gi(b, be) * cdth.get(&[ga, be, i[0], b, cc]);
                    }
                }
            }
        }
        0.5 * s
    });
    ctx.push("delta_tilde_squared_of_D_tilde", Rem, &lhs, &rhs);

    let lhs = chart
        .d_tilde(&delta_h)
        .sub(&chart.delta(&dth)?)
        .at_origin()?;
    let rhs = origin_fn(n, 0, 2, |i| {
        let (l, k) = (i[0], i[1]);
        let mut s = 0.0;
        for a in 0..n {
            for al in 0..n {
                s += gi(a, al) * (c.get(&[k, al, a, l]) - c.get(&[l, al, a, k]));
            }
        }
        s
    });
    ctx.push("D_tilde_delta_commutator", Rem, &lhs, &rhs);

    let nh = chart.nabla(&h);
    let c3 = chart.ricci_commutator(&curv.rm, &nh).at_origin()?;
    let nc = chart.nabla(&comm).at_origin()?;
    let lhs = chart
        .delta(&lap_h)?
        .sub(&chart.laplacian(&delta_h))
        .at_origin()?;
    let rhs = origin_fn(n, 0, 1, |i| {
        let k = i[0];
        let mut s = 0.0;
        for a in 0..n {
            for al in 0..n {
                for b in 0..n {
                    for be in 0..n {
                        let w = gi(al, a) * gi(be, b);
                        s += w * (c3.get(&[a, b, be, al, k]) + nc.get(&[b, a, be, al, k]));
                    }
                }
            }
        }
        s
    });
    ctx.push("delta_laplacian_commutator", Rem, &lhs, &rhs);

    Ok(ctx.out)
}

/// Left-hand sides of the schematic identities, together with a size proxy
/// for the fields they act on.
fn schematic_terms(
    metric: &JetMetric,
    seed: u64,
) -> Result<Vec<(&'static str, OriginTensor, f64)>, JetError> {
    let chart = Chart::new(metric.tensor::<f64>())?;
    let space = metric.space().clone();
    let h = JetTensor::random_symmetric(field_seed(seed, 1), &space);
    let f = random_scalar(field_seed(seed, 2), &space);
    let size = |t: &JetTensor<f64>| -> Result<f64, JetError> {
        let nt = chart.nabla(t);
        let nnt = chart.nabla(&nt);
        Ok(t.at_origin()?.max_abs() + nt.at_origin()?.max_abs() + nnt.at_origin()?.max_abs())
    };

    let trh = chart.trace(&h)?;
    let dh = chart.d(&h);
    let delta_dh = chart.delta(&dh)?;
    let quartic = chart.trace(&chart.delta(&chart.d(&delta_dh))?)?;
    let bilap = chart.laplacian(&chart.laplacian(&trh));
    let mixed = chart.laplacian(&chart.trace(&chart.d(&chart.delta(&h)?))?);
    let lhs_h = quartic.sub(&bilap).add(&mixed).at_origin()?;

    let hess = chart.hessian(&f);
    let once = chart.delta(&hess)?.with_valence(1, 0);
    let twice = chart.delta(&once)?;
    let lhs_f = twice
        .sub(&chart.laplacian(&chart.laplacian(&f)))
        .at_origin()?;

    Ok(vec![
        ("fourth_order_trace_commutator", lhs_h, size(&h)?),
        ("bilaplacian_of_hessian", lhs_f, size(&f)?),
    ])
}

/// Schematic identities: residual on a flat metric in random curvilinear
/// coordinates, and curvature-normalized residual on the random metric.
pub fn schematic_identities(seed: u64, n: usize, degree: usize) -> Result<Vec<IdentityReport>, JetError> {
    check_dimension(n)?;
    check_degree(degree)?;
    let flat = JetMetric::flat_curvilinear(seed, n, degree);
    let curved = JetMetric::random(seed, n, degree);
    let flat_terms = schematic_terms(&flat, seed)?;
    let curved_terms = schematic_terms(&curved, seed)?;
    let chart = Chart::new(curved.tensor::<f64>())?;
    let mut rm = chart.riemann();
    let mut curv_size = 0.0;
    for _ in 0..3 {
        curv_size += rm.at_origin()?.max_abs();
        rm = chart.nabla(&rm);
    }
    Ok(flat_terms
        .into_iter()
        .zip(curved_terms)
        .map(|((name, flat_lhs, _), (_, curved_lhs, size))| IdentityReport {
            name: name.to_string(),
            kind: IdentityKind::Schematic,
            max_abs_residual: flat_lhs.max_abs(),
            scale: curved_lhs.max_abs(),
            curvature_ratio: Some(curved_lhs.max_abs() / (curv_size * size)),
            seed,
            n,
            degree,
            background: "flat_curvilinear".to_string(),
        })
        .collect())
}

fn dual_metric(metric: &JetMetric, h: &JetTensor<f64>) -> JetTensor<Dual> {
    let n = metric.n();
    let comps = (0..n * n)
        .map(|k| dual_jet(metric.component(k / n, k % n), &h.comps()[k]))
        .collect();
    JetTensor::from_components(n, 1, 1, comps)
}

fn eps_origin(t: &JetTensor<Dual>) -> Result<OriginTensor, JetError> {
    let (p, q) = t.valence();
    Ok(OriginTensor {
        n: t.n(),
        p,
        q,
        comps: t.origin_values()?.into_iter().map(|d| d.eps).collect(),
    })
}

fn det_generic<S: Scalar>(n: usize, a: &[S]) -> S {
    let mut m = a.to_vec();
    let mut det = S::from_f64(1.0);
    for col in 0..n {
        let piv = m[col * n + col];
        det = det * piv;
        let r = piv.recip();
        for row in col + 1..n {
            let f = m[row * n + col] * r;
            for k in col..n {
                let v = m[col * n + k];
                m[row * n + k] -= f * v;
            }
        }
    }
    det
}

/// Raises the first-group slots of a dual tensor with the varied inverse
/// metric, takes the ε-part at the origin and lowers those slots again with
/// the background metric `g0`.
fn varied_first_group_raised(
    dchart: &Chart<Dual>,
    t: &JetTensor<Dual>,
    g0: &OriginTensor,
) -> Result<OriginTensor, JetError> {
    let n = t.n();
    let (p, q) = t.valence();
    let ginv = dchart.inverse().origin_values()?;
    let mut cur = t.origin_values()?;
    let rank = p + q;
    let stride = |s: usize| n.pow((rank - 1 - s) as u32);
    for slot in 0..p {
        let st = stride(slot);
        let mut next = vec![Dual::default(); cur.len()];
        for (flat, out) in next.iter_mut().enumerate() {
            let i = (flat / st) % n;
            let base = flat - i * st;
            for a in 0..n {
                *out += ginv[i * n + a] * cur[base + a * st];
            }
        }
        cur = next;
    }
    let mut eps: Vec<f64> = cur.iter().map(|d| d.eps).collect();
    for slot in 0..p {
        let st = stride(slot);
        let mut next = vec![0.0; eps.len()];
        for (flat, out) in next.iter_mut().enumerate() {
            let i = (flat / st) % n;
            let base = flat - i * st;
            for a in 0..n {
                *out += g0.get(&[i, a]) * eps[base + a * st];
            }
        }
        eps = next;
    }
    Ok(OriginTensor { n, p, q, comps: eps })
}

/// `d/dε R(g + εh)` at the origin, computed with dual numbers.
pub fn scalar_curvature_derivative(metric: &JetMetric, h: &JetTensor<f64>) -> Result<f64, JetError> {
    if h.n() != metric.n() {
        return Err(JetError::DimensionMismatch(h.n(), metric.n()));
    }
    if h.valence() != (1, 1) {
        return Err(JetError::Valence("variation direction must be a (1,1) tensor".into()));
    }
    let chart = Chart::new(dual_metric(metric, h))?;
    let curv = Curvature::of(&chart);
    Ok(curv.scal.origin_values()?[0].eps)
}

/// Checks the first-variation formulas against dual-number derivatives, on
/// the seeded random metric and on a flat curvilinear metric.
pub fn verify_first_variations(
    seed: u64,
    n: usize,
    degree: usize,
) -> Result<Vec<IdentityReport>, JetError> {
    check_dimension(n)?;
    check_degree(degree)?;
    let metric = JetMetric::random(seed, n, degree);
    let h = JetTensor::random_symmetric(field_seed(seed, 3), metric.space());
    let mut out = first_variations_on(&metric, &h, seed, "random")?;

    // Variation along the metric itself.
    let g = metric.tensor::<f64>();
    let chart = Chart::new(g.clone())?;
    let scal = chart.scalar_of(&chart.ricci_of(&chart.riemann())).at_origin()?;
    let along_g = scalar_curvature_derivative(&metric, &g)?;
    let lhs = OriginTensor { n, p: 0, q: 0, comps: vec![along_g] };
    let mut ctx = Ctx {
        seed,
        n,
        degree,
        background: "random".into(),
        out: Vec::new(),
    };
    ctx.push("scalar_variation_along_metric", IdentityKind::Exact, &lhs, &scal.clone().scaled(-1.0));

    // Flat background: the curvature terms drop out.
    let flat = JetMetric::flat_curvilinear(seed, n, degree);
    let hf = JetTensor::random_symmetric(field_seed(seed, 4), flat.space());
    let fchart = Chart::new(flat.tensor::<f64>())?;
    let rhs = fchart
        .delta(&fchart.delta_tilde(&hf)?)?
        .add(&fchart.laplacian(&fchart.trace(&hf)?))
        .at_origin()?;
    let lhs = OriginTensor {
        n,
        p: 0,
        q: 0,
        comps: vec![scalar_curvature_derivative(&flat, &hf)?],
    };
    ctx.background = "flat_curvilinear".into();
    ctx.push("scalar_variation_flat", IdentityKind::Exact, &lhs, &rhs);
    out.extend(ctx.out);
    Ok(out)
}

impl OriginTensor {
    fn scaled(mut self, c: f64) -> Self {
        for v in &mut self.comps {
            *v *= c;
        }
        self
    }
}

/// First-variation formulas of a metric along a `(1,1)` direction `h`.
pub fn first_variations_on(
    metric: &JetMetric,
    h: &JetTensor<f64>,
    seed: u64,
    background: &str,
) -> Result<Vec<IdentityReport>, JetError> {
    use IdentityKind::Exact;
    let n = metric.n();
    let mut ctx = Ctx {
        seed,
        n,
        degree: metric.degree(),
        background: background.to_string(),
        out: Vec::new(),
    };
    let chart = Chart::new(metric.tensor::<f64>())?;
    let dchart = Chart::new(dual_metric(metric, h))?;
    let curv = Curvature::of(&chart);
    let dcurv = Curvature::of(&dchart);
    let g0 = metric.tensor::<f64>().at_origin()?;
    let ginv0 = chart.inverse().at_origin()?;
    let gi = |a: usize, b: usize| ginv0.get(&[a, b]);
    let h0 = h.at_origin()?;
    let rm0 = curv.rm.at_origin()?;
    // h_i^α = g^{αβ} h_{iβ}
    let hmix = origin_fn(n, 1, 1, |i| (0..n).map(|b| gi(i[1], b) * h0.get(&[i[0], b])).sum());

    // Volume density.
    let gd: Vec<Dual> = dchart.metric().origin_values()?;
    let vol = det_generic(n, &gd).sqrt();
    let trh0: f64 = (0..n * n).map(|k| ginv0.comps[k] * h0.comps[k]).sum();
    let lhs = OriginTensor { n, p: 0, q: 0, comps: vec![vol.eps] };
    let rhs = OriginTensor { n, p: 0, q: 0, comps: vec![0.5 * trh0 * vol.re] };
    ctx.push("volume_variation", Exact, &lhs, &rhs);

    // Inverse metric.
    let lhs = eps_origin(dchart.inverse())?;
    let rhs = chart.raise2(h).scale(-1.0).at_origin()?;
    ctx.push("inverse_metric_variation", Exact, &lhs, &rhs);

    // Christoffel symbols: Γ'^k_ij = ½ g^{kα}(∇_j h_{αi} + ∇_i h_{αj} − ∇_α h_{ij}).
    let lhs = origin_fn(n, 1, 2, |i| {
        dchart.christoffel(i[0], i[1], i[2]).value().map(|d| d.eps).unwrap_or(f64::NAN)
    });
    let nh = chart.nabla(h).at_origin()?;
    let rhs = origin_fn(n, 1, 2, |idx| {
        let (k, i, j) = (idx[0], idx[1], idx[2]);
        0.5 * (0..n)
            .map(|a| gi(k, a) * (nh.get(&[j, a, i]) + nh.get(&[i, a, j]) - nh.get(&[a, i, j])))
            .sum::<f64>()
    });
    ctx.push("christoffel_variation", Exact, &lhs, &rhs);

    // Curvature operator: first pair raised, varied, lowered again with g.
    let lhs = varied_first_group_raised(&dchart, &dcurv.rm, &g0)?;
    let ddt = chart.d_tilde(&chart.d(h)).at_origin()?;
    let rhs = origin_fn(n, 2, 2, |idx| {
        let (i, j, a, b) = (idx[0], idx[1], idx[2], idx[3]);
        let mut s = ddt.get(idx);
        for al in 0..n {
            s += rm0.get(&[al, j, a, b]) * hmix.get(&[i, al]);
            s += rm0.get(&[i, al, a, b]) * hmix.get(&[j, al]);
        }
        -0.5 * s
    });
    ctx.push("curvature_variation", Exact, &lhs, &rhs);

    // Ricci endomorphism: both written forms.
    let dric = varied_first_group_raised(&dchart, &dcurv.ric, &g0)?;
    let dh = chart.d(h);
    let trh = chart.trace(h)?;
    let h_ric = chart.compose(h, &curv.ric);
    let rm_h = chart.ring(&curv.rm, h);
    let form1 = chart
        .delta(&dh)?
        .add(&chart.d_tilde(&chart.trace(&dh)?))
        .sub(&h_ric)
        .sub(&rm_h)
        .scale(0.5)
        .at_origin()?;
    ctx.push("ricci_variation_divergence_form", Exact, &dric, &form1);

    let comm = chart.ricci_commutator(&curv.rm, h).at_origin()?;
    let e = origin_fn(n, 1, 1, |i| {
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += gi(a, b) * comm.get(&[b, i[0], a, i[1]]);
            }
        }
        s
    });
    let gauge1 = chart.delta(h)?.add_scaled(0.5, &chart.d_tilde(&trh));
    let gauge2 = chart.delta_tilde(h)?.add_scaled(0.5, &chart.d(&trh));
    let principal = chart
        .laplacian(h)
        .sub(&chart.d(&gauge1))
        .sub(&chart.d_tilde(&gauge2))
        .sub(&h_ric)
        .sub(&rm_h)
        .scale(0.5)
        .at_origin()?;
    let form2 = lin(&[(1.0, &principal), (0.5, &e)]);
    ctx.push("ricci_variation_laplacian_form", Exact, &dric, &form2);
    ctx.push("ricci_variation_forms_agree", Exact, &form1, &form2);

    // Scalar curvature, in both written forms.
    let dscal = eps_origin(&dcurv.scal)?;
    let ric_h = chart.inner2(&curv.ric, h);
    let lhs1 = chart.trace(&chart.delta(&dh)?)?.sub(&ric_h).at_origin()?;
    ctx.push("scalar_variation_trace_form", Exact, &dscal, &lhs1);
    let lhs2 = chart
        .delta(&chart.delta_tilde(h)?)?
        .add(&chart.laplacian(&trh))
        .sub(&ric_h)
        .at_origin()?;
    ctx.push("scalar_variation_divergence_form", Exact, &dscal, &lhs2);

    Ok(ctx.out)
}

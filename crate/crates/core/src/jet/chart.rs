//! Metrics, tensors and differential operators on a jet chart.
//!
//! Tensors are stored with all indices lowered.  A `(p, q)` valence marks a
//! double-form whose first `p` slots form the first group and whose last `q`
//! slots form the second.  Covariant derivatives place the new index first.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Jet, JetError, JetSpace, Scalar};

/// A metric given by its Taylor jet at the chart origin.
#[derive(Debug, Clone)]
pub struct JetMetric {
    space: Arc<JetSpace>,
    g: Vec<Jet<f64>>,
}

fn multi_indices(n: usize, degree: usize, space: &Arc<JetSpace>) -> Vec<Vec<u8>> {
    space
        .monomials()
        .iter()
        .filter(|m| m.iter().map(|&e| e as usize).sum::<usize>() <= degree && m.len() == n)
        .cloned()
        .collect()
}

impl JetMetric {
    /// Builds a metric from row-major component jets; checks symmetry and
    /// positive definiteness at the origin.
    pub fn from_components(space: Arc<JetSpace>, g: Vec<Jet<f64>>) -> Result<Self, JetError> {
        let n = space.n();
        if g.len() != n * n {
            return Err(JetError::DimensionMismatch(g.len(), n * n));
        }
        for i in 0..n {
            for j in 0..i {
                let a = &g[i * n + j];
                let b = &g[j * n + i];
                if (0..space.len()).any(|k| a.coeff(k) != b.coeff(k)) {
                    return Err(JetError::Valence("metric components are not symmetric".into()));
                }
            }
        }
        let g0: Vec<f64> = g.iter().map(|j| j.coeff(0)).collect();
        let m = nalgebra::DMatrix::from_row_slice(n, n, &g0);
        if m.cholesky().is_none() {
            return Err(JetError::SingularMetric);
        }
        Ok(Self { space, g })
    }

    /// The Euclidean metric.
    pub fn flat(n: usize, degree: usize) -> Self {
        let space = JetSpace::new(n, degree);
        let g = (0..n * n)
            .map(|k| Jet::constant(&space, if k / n == k % n { 1.0 } else { 0.0 }))
            .collect();
        Self { space, g }
    }

    /// `δ + amplitude·P(x)` with `P` a symmetric matrix of polynomials whose
    /// coefficients (all monomials up to `degree`) are uniform in `[−1, 1]`.
    pub fn random_with_amplitude(seed: u64, n: usize, degree: usize, amplitude: f64) -> Self {
        let space = JetSpace::new(n, degree);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = vec![Jet::zero(&space); n * n];
        for i in 0..n {
            for j in i..n {
                let mut jet = Jet::zero(&space);
                for k in 0..space.len() {
                    let c: f64 = rng.random_range(-1.0..1.0);
                    jet.coeffs[k] = amplitude * c;
                }
                if i == j {
                    jet.coeffs[0] += 1.0;
                }
                g[i * n + j] = jet.clone();
                g[j * n + i] = jet;
            }
        }
        Self { space, g }
    }

    /// Random metric with the default amplitude `0.1`.
    pub fn random(seed: u64, n: usize, degree: usize) -> Self {
        Self::random_with_amplitude(seed, n, degree, 0.1)
    }

    /// Normal-coordinate expansion of a space form of curvature `k`, to second
    /// order: `g_ij = δ_ij − (k/3)(δ_ij|x|² − x_i x_j)`.
    pub fn sphere_normal(n: usize, k: f64, degree: usize) -> Self {
        let space = JetSpace::new(n, degree);
        let mut g = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut jet = Jet::constant(&space, if i == j { 1.0 } else { 0.0 });
                for a in 0..n {
                    for b in 0..n {
                        let mut coef = 0.0;
                        if i == j && a == b {
                            coef -= k / 3.0;
                        }
                        if a == i && b == j {
                            coef += k / 3.0;
                        }
                        if coef != 0.0 {
                            let xa = Jet::variable(&space, a);
                            let xb = Jet::variable(&space, b);
                            jet.add_mul_assign(coef, &xa, &xb);
                        }
                    }
                }
                jet.valid = degree as i32;
                g.push(jet);
            }
        }
        Self { space, g }
    }

    /// A flat metric in curvilinear coordinates: the pull-back `JᵀJ` of the
    /// Euclidean metric by a random polynomial diffeomorphism germ
    /// `φ(x) = x + 0.1·(quadratic + cubic)`.
    pub fn flat_curvilinear(seed: u64, n: usize, degree: usize) -> Self {
        let space = JetSpace::new(n, degree);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let monos = multi_indices(n, 3, &space);
        let phi: Vec<Jet<f64>> = (0..n)
            .map(|a| {
                let mut terms: Vec<(Vec<u8>, f64)> = Vec::new();
                let mut lin = vec![0u8; n];
                lin[a] = 1;
                terms.push((lin, 1.0));
                for m in &monos {
                    let d: usize = m.iter().map(|&e| e as usize).sum();
                    if d >= 2 {
                        terms.push((m.clone(), 0.1 * rng.random_range(-1.0..1.0)));
                    }
                }
                Jet::from_terms(&space, &terms)
            })
            .collect();
        // Undo the validity loss of differentiation: φ is an exact polynomial.
        let jac: Vec<Jet<f64>> = (0..n * n)
            .map(|k| {
                let mut d = phi[k / n].deriv(k % n);
                d.valid = degree as i32;
                d
            })
            .collect();
        let mut g = vec![Jet::zero(&space); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = Jet::zero(&space);
                for a in 0..n {
                    s.add_mul_assign(1.0, &jac[a * n + i], &jac[a * n + j]);
                }
                g[i * n + j] = s;
            }
        }
        // Enforce bitwise symmetry.
        for i in 0..n {
            for j in 0..i {
                g[i * n + j] = g[j * n + i].clone();
            }
        }
        Self { space, g }
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    pub fn degree(&self) -> usize {
        self.space.degree()
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn component(&self, i: usize, j: usize) -> &Jet<f64> {
        &self.g[i * self.n() + j]
    }

    /// The metric as a `(1,1)` jet tensor over the scalar type `S`.
    pub fn tensor<S: Scalar>(&self) -> JetTensor<S> {
        JetTensor {
            n: self.n(),
            p: 1,
            q: 1,
            comps: self.g.iter().map(|j| j.lift::<S>()).collect(),
        }
    }
}

/// A tensor with jet components and a double-form valence `(p, q)`.
#[derive(Debug, Clone)]
pub struct JetTensor<S: Scalar> {
    n: usize,
    p: usize,
    q: usize,
    comps: Vec<Jet<S>>,
}

fn offset(n: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

fn unflatten(n: usize, rank: usize, mut flat: usize, out: &mut [usize]) {
    for k in (0..rank).rev() {
        out[k] = flat % n;
        flat /= n;
    }
}

impl<S: Scalar> JetTensor<S> {
    /// Builds a tensor by evaluating `f` on every multi-index.
    pub fn from_fn(
        n: usize,
        p: usize,
        q: usize,
        mut f: impl FnMut(&[usize]) -> Jet<S>,
    ) -> Self {
        let rank = p + q;
        let len = n.pow(rank as u32);
        let mut idx = vec![0usize; rank];
        let comps = (0..len)
            .map(|flat| {
                unflatten(n, rank, flat, &mut idx);
                f(&idx)
            })
            .collect();
        Self { n, p, q, comps }
    }

    pub fn from_components(n: usize, p: usize, q: usize, comps: Vec<Jet<S>>) -> Self {
        assert_eq!(comps.len(), n.pow((p + q) as u32));
        Self { n, p, q, comps }
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn valence(&self) -> (usize, usize) {
        (self.p, self.q)
    }
    pub fn rank(&self) -> usize {
        self.p + self.q
    }
    pub fn comps(&self) -> &[Jet<S>] {
        &self.comps
    }

    pub fn get(&self, idx: &[usize]) -> &Jet<S> {
        &self.comps[offset(self.n, idx)]
    }

    /// Same components, reinterpreted with another valence of equal rank.
    pub fn with_valence(mut self, p: usize, q: usize) -> Self {
        assert_eq!(p + q, self.p + self.q);
        self.p = p;
        self.q = q;
        self
    }

    fn space(&self) -> &Arc<JetSpace> {
        self.comps[0].space()
    }

    pub fn add(&self, o: &JetTensor<S>) -> Self {
        self.add_scaled(1.0, o)
    }

    pub fn sub(&self, o: &JetTensor<S>) -> Self {
        self.add_scaled(-1.0, o)
    }

    /// `self + c·o`.
    pub fn add_scaled(&self, c: f64, o: &JetTensor<S>) -> Self {
        assert_eq!(self.comps.len(), o.comps.len(), "tensor rank mismatch");
        let comps = self
            .comps
            .iter()
            .zip(&o.comps)
            .map(|(a, b)| {
                let mut r = a.clone();
                r.add_scaled_assign(c, b);
                r
            })
            .collect();
        Self {
            n: self.n,
            p: self.p,
            q: self.q,
            comps,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            n: self.n,
            p: self.p,
            q: self.q,
            comps: self.comps.iter().map(|j| j.scale(c)).collect(),
        }
    }

    /// Pointwise product with a scalar jet.
    pub fn mul_scalar(&self, f: &Jet<S>) -> Self {
        Self {
            n: self.n,
            p: self.p,
            q: self.q,
            comps: self.comps.iter().map(|j| j.mul(f)).collect(),
        }
    }

    /// Reorders slots: output slot `k` takes input slot `perm[k]`.
    pub fn permuted(&self, perm: &[usize], p: usize, q: usize) -> Self {
        let rank = self.rank();
        assert_eq!(perm.len(), rank);
        let mut src = vec![0usize; rank];
        JetTensor::from_fn(self.n, p, q, |idx| {
            for k in 0..rank {
                src[perm[k]] = idx[k];
            }
            self.get(&src).clone()
        })
    }

    /// Components at the origin.
    pub fn origin_values(&self) -> Result<Vec<S>, JetError> {
        self.comps.iter().map(|j| j.value()).collect()
    }

    /// Real parts of the components at the origin.
    pub fn at_origin(&self) -> Result<OriginTensor, JetError> {
        Ok(OriginTensor {
            n: self.n,
            p: self.p,
            q: self.q,
            comps: self.origin_values()?.into_iter().map(|s| s.re()).collect(),
        })
    }

    /// Largest absolute valid coefficient over all components (a size proxy
    /// for the jet, including derivatives).
    pub fn jet_scale(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, j| m.max(j.max_abs_valid()))
    }
}

impl JetTensor<f64> {
    /// A random symmetric `(1,1)` tensor field with coefficients uniform in
    /// `[−1, 1]` for every monomial.
    pub fn random_symmetric(seed: u64, space: &Arc<JetSpace>) -> Self {
        let n = space.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut comps = vec![Jet::zero(space); n * n];
        for i in 0..n {
            for j in i..n {
                let mut jet = Jet::zero(space);
                for k in 0..space.len() {
                    jet.coeffs[k] = rng.random_range(-1.0..1.0);
                }
                comps[i * n + j] = jet.clone();
                comps[j * n + i] = jet;
            }
        }
        Self { n, p: 1, q: 1, comps }
    }
}

/// Tensor components at the chart origin.
#[derive(Debug, Clone, PartialEq)]
pub struct OriginTensor {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub comps: Vec<f64>,
}

impl OriginTensor {
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.comps[offset(self.n, idx)]
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest absolute component of `self − o`.
    pub fn max_abs_diff(&self, o: &OriginTensor) -> f64 {
        assert_eq!(self.comps.len(), o.comps.len());
        self.comps
            .iter()
            .zip(&o.comps)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// First-order differential operators on double-forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOperator {
    /// `δT = −∇^α T_{α…}` (contracts the first slot of the first group).
    Delta,
    /// `δ̃T`: contracts the derivative with the first slot of the second group.
    DeltaTilde,
    /// Exterior covariant derivative on the first group.
    D,
    /// Exterior covariant derivative on the second group.
    DTilde,
    /// Contraction of the first slot of each group.
    Trace,
    /// `Δ = −∇^α∇_α`.
    Laplacian,
}

impl std::str::FromStr for JetOperator {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "delta" => Ok(Self::Delta),
            "delta_tilde" => Ok(Self::DeltaTilde),
            "D" => Ok(Self::D),
            "D_tilde" => Ok(Self::DTilde),
            "trace" => Ok(Self::Trace),
            "laplacian" => Ok(Self::Laplacian),
            other => Err(format!("unknown operator `{other}`")),
        }
    }
}

/// A jet metric with its inverse and Christoffel symbols.
#[derive(Debug, Clone)]
pub struct Chart<S: Scalar> {
    n: usize,
    space: Arc<JetSpace>,
    g: JetTensor<S>,
    ginv: JetTensor<S>,
    /// `Γ^k_ij` stored at `k·n² + i·n + j`.
    gamma: Vec<Jet<S>>,
}

fn invert_small<S: Scalar>(n: usize, a: &[S]) -> Result<Vec<S>, JetError> {
    let mut m = a.to_vec();
    let mut inv: Vec<S> = (0..n * n)
        .map(|k| S::from_f64(if k / n == k % n { 1.0 } else { 0.0 }))
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| m[x * n + col].re().abs().total_cmp(&m[y * n + col].re().abs()))
            .expect("non-empty range");
        if m[piv * n + col].re().abs() < 1e-300 {
            return Err(JetError::SingularMetric);
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
                inv.swap(piv * n + k, col * n + k);
            }
        }
        let r = m[col * n + col].recip();
        for k in 0..n {
            m[col * n + k] = m[col * n + k] * r;
            inv[col * n + k] = inv[col * n + k] * r;
        }
        for row in 0..n {
            if row != col {
                let f = m[row * n + col];
                for k in 0..n {
                    let mk = m[col * n + k];
                    let ik = inv[col * n + k];
                    m[row * n + k] -= f * mk;
                    inv[row * n + k] -= f * ik;
                }
            }
        }
    }
    Ok(inv)
}

impl<S: Scalar> Chart<S> {
    /// Builds the chart data from a `(1,1)` metric tensor.
    pub fn new(g: JetTensor<S>) -> Result<Self, JetError> {
        let n = g.n;
        if g.rank() != 2 {
            return Err(JetError::Valence("metric must have rank 2".into()));
        }
        let space = g.space().clone();
        let ginv = jet_inverse(&g)?;
        let dg: Vec<Jet<S>> = (0..n * n * n)
            .map(|k| g.comps[k % (n * n)].deriv(k / (n * n)))
            .collect();
        // dg[l·n² + i·n + j] = ∂_l g_ij
        let first = |i: usize, j: usize, l: usize| -> Jet<S> {
            let mut s = dg[i * n * n + j * n + l].clone();
            s.add_scaled_assign(1.0, &dg[j * n * n + i * n + l]);
            s.add_scaled_assign(-1.0, &dg[l * n * n + i * n + j]);
            s.scale(0.5)
        };
        let mut firsts = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    firsts.push(first(i, j, l));
                }
            }
        }
        let mut gamma = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = Jet::zero(&space);
                    for l in 0..n {
                        s.add_mul_assign(1.0, &ginv.comps[k * n + l], &firsts[(i * n + j) * n + l]);
                    }
                    gamma.push(s);
                }
            }
        }
        Ok(Self {
            n,
            space,
            g,
            ginv,
            gamma,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn metric(&self) -> &JetTensor<S> {
        &self.g
    }

    pub fn inverse(&self) -> &JetTensor<S> {
        &self.ginv
    }

    /// `Γ^k_ij`.
    pub fn christoffel(&self, k: usize, i: usize, j: usize) -> &Jet<S> {
        &self.gamma[(k * self.n + i) * self.n + j]
    }

    /// Covariant derivative; the derivative index is the new first slot and
    /// the result has valence `(p+1, q)`.
    pub fn nabla(&self, t: &JetTensor<S>) -> JetTensor<S> {
        let n = self.n;
        let r = t.rank();
        let strides: Vec<usize> = (0..r).map(|s| n.pow((r - 1 - s) as u32)).collect();
        let mut tidx = vec![0usize; r];
        JetTensor::from_fn(n, t.p + 1, t.q, |idx| {
            let a = idx[0];
            tidx.copy_from_slice(&idx[1..]);
            let base = offset(n, &tidx);
            let mut out = t.comps[base].deriv(a);
            for s in 0..r {
                let is = tidx[s];
                for m in 0..n {
                    let other = base + m * strides[s] - is * strides[s];
                    out.add_mul_assign(-1.0, &self.gamma[(m * n + a) * n + is], &t.comps[other]);
                }
            }
            out
        })
    }

    /// Contracts slots `a < b` of a tensor with the inverse metric, returning
    /// the remaining slots in order with the supplied valence.
    pub fn contract(&self, t: &JetTensor<S>, a: usize, b: usize, p: usize, q: usize) -> JetTensor<S> {
        assert!(a < b && b < t.rank());
        let n = self.n;
        let r = t.rank();
        let mut full = vec![0usize; r];
        JetTensor::from_fn(n, p, q, |rest| {
            let mut out = Jet::zero(&self.space);
            let mut k = 0;
            for (s, slot) in full.iter_mut().enumerate() {
                if s != a && s != b {
                    *slot = rest[k];
                    k += 1;
                }
            }
            for x in 0..n {
                for y in 0..n {
                    full[a] = x;
                    full[b] = y;
                    out.add_mul_assign(1.0, &self.ginv.comps[x * n + y], t.get(&full));
                }
            }
            out
        })
    }

    fn require(&self, cond: bool, what: &str) -> Result<(), JetError> {
        if cond {
            Ok(())
        } else {
            Err(JetError::Valence(what.to_string()))
        }
    }

    /// `(δT)_{i₂…; J} = −∇^α T_{α i₂…; J}`.
    pub fn delta(&self, t: &JetTensor<S>) -> Result<JetTensor<S>, JetError> {
        self.require(t.p >= 1, "delta needs p >= 1")?;
        let nt = self.nabla(t);
        Ok(self.contract(&nt, 0, 1, t.p - 1, t.q).scale(-1.0))
    }

    /// `(δ̃T)_{I; j₂…} = −∇^β T_{I; β j₂…}`.
    pub fn delta_tilde(&self, t: &JetTensor<S>) -> Result<JetTensor<S>, JetError> {
        self.require(t.q >= 1, "delta_tilde needs q >= 1")?;
        let nt = self.nabla(t);
        Ok(self.contract(&nt, 0, t.p + 1, t.p, t.q - 1).scale(-1.0))
    }

    /// `(DT)_{i₀…i_p; J} = Σ_k (−1)^k ∇_{i_k} T_{i₀…î_k…i_p; J}`.
    pub fn d(&self, t: &JetTensor<S>) -> JetTensor<S> {
        let nt = self.nabla(t);
        let (p, q) = (t.p, t.q);
        let mut src = vec![0usize; p + q + 1];
        JetTensor::from_fn(self.n, p + 1, q, |idx| {
            let mut out = Jet::zero(&self.space);
            for k in 0..=p {
                src[0] = idx[k];
                let mut m = 1;
                for (s, &v) in idx[..=p].iter().enumerate() {
                    if s != k {
                        src[m] = v;
                        m += 1;
                    }
                }
                src[p + 1..].copy_from_slice(&idx[p + 1..]);
                out.add_scaled_assign(if k % 2 == 0 { 1.0 } else { -1.0 }, nt.get(&src));
            }
            out
        })
    }

    /// `(D̃T)_{I; j₀…j_q} = Σ_k (−1)^k ∇_{j_k} T_{I; j₀…ĵ_k…j_q}`.
    pub fn d_tilde(&self, t: &JetTensor<S>) -> JetTensor<S> {
        let nt = self.nabla(t);
        let (p, q) = (t.p, t.q);
        let mut src = vec![0usize; p + q + 1];
        JetTensor::from_fn(self.n, p, q + 1, |idx| {
            let mut out = Jet::zero(&self.space);
            for k in 0..=q {
                src[0] = idx[p + k];
                src[1..=p].copy_from_slice(&idx[..p]);
                let mut m = p + 1;
                for (s, &v) in idx[p..].iter().enumerate() {
                    if s != k {
                        src[m] = v;
                        m += 1;
                    }
                }
                out.add_scaled_assign(if k % 2 == 0 { 1.0 } else { -1.0 }, nt.get(&src));
            }
            out
        })
    }

    /// `(tr T)_{i₂…; j₂…} = g^{αβ} T_{α i₂…; β j₂…}`.
    pub fn trace(&self, t: &JetTensor<S>) -> Result<JetTensor<S>, JetError> {
        self.require(t.p >= 1 && t.q >= 1, "trace needs p, q >= 1")?;
        Ok(self.contract(t, 0, t.p, t.p - 1, t.q - 1))
    }

    /// `ΔT = −g^{αβ} ∇_α∇_β T`.
    pub fn laplacian(&self, t: &JetTensor<S>) -> JetTensor<S> {
        let nnt = self.nabla(&self.nabla(t));
        self.contract(&nnt, 0, 1, t.p, t.q).scale(-1.0)
    }

    /// Hessian `∇_j∇_k f` of a scalar, as a `(1,1)` tensor.
    pub fn hessian(&self, f: &JetTensor<S>) -> JetTensor<S> {
        self.nabla(&self.nabla(f)).with_valence(1, 1)
    }

    pub fn apply(&self, op: JetOperator, t: &JetTensor<S>) -> Result<JetTensor<S>, JetError> {
        match op {
            JetOperator::Delta => self.delta(t),
            JetOperator::DeltaTilde => self.delta_tilde(t),
            JetOperator::D => Ok(self.d(t)),
            JetOperator::DTilde => Ok(self.d_tilde(t)),
            JetOperator::Trace => self.trace(t),
            JetOperator::Laplacian => Ok(self.laplacian(t)),
        }
    }

    /// `Rm_{ijkl} = g_{km}(∂_iΓ^m_{jl} − ∂_jΓ^m_{il} + Γ^p_{jl}Γ^m_{ip} − Γ^p_{il}Γ^m_{jp})`,
    /// so that `Rm_{1212}` is the sectional curvature of an orthonormal pair.
    pub fn riemann(&self) -> JetTensor<S> {
        let n = self.n;
        // Mixed R_{ijl}^m first.
        let mut mixed = Vec::with_capacity(n.pow(4));
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    for m in 0..n {
                        let mut s = self.christoffel(m, j, l).deriv(i);
                        s.add_scaled_assign(-1.0, &self.christoffel(m, i, l).deriv(j));
                        for p in 0..n {
                            s.add_mul_assign(1.0, self.christoffel(p, j, l), self.christoffel(m, i, p));
                            s.add_mul_assign(-1.0, self.christoffel(p, i, l), self.christoffel(m, j, p));
                        }
                        mixed.push(s);
                    }
                }
            }
        }
        JetTensor::from_fn(n, 2, 2, |idx| {
            let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
            let mut s = Jet::zero(&self.space);
            for m in 0..n {
                s.add_mul_assign(1.0, &self.g.comps[k * n + m], &mixed[((i * n + j) * n + l) * n + m]);
            }
            s
        })
    }

    /// `Ric_jl = g^{ik} Rm_{ijkl}`.
    pub fn ricci_of(&self, rm: &JetTensor<S>) -> JetTensor<S> {
        self.contract(rm, 0, 2, 1, 1)
    }

    /// `R = g^{jl} Ric_jl`, as a `(0,0)` tensor.
    pub fn scalar_of(&self, ric: &JetTensor<S>) -> JetTensor<S> {
        self.contract(ric, 0, 1, 0, 0)
    }

    /// Kulkarni–Nomizu product of two rank-2 tensors.
    pub fn kulkarni_nomizu(&self, u: &JetTensor<S>, v: &JetTensor<S>) -> JetTensor<S> {
        let n = self.n;
        JetTensor::from_fn(n, 2, 2, |idx| {
            let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
            let at = |t: &JetTensor<S>, a: usize, b: usize| t.comps[a * n + b].clone();
            let mut s = Jet::zero(&self.space);
            s.add_mul_assign(1.0, &at(u, i, k), &at(v, j, l));
            s.add_mul_assign(1.0, &at(u, j, l), &at(v, i, k));
            s.add_mul_assign(-1.0, &at(u, i, l), &at(v, j, k));
            s.add_mul_assign(-1.0, &at(u, j, k), &at(v, i, l));
            s
        })
    }

    /// `(u∘v)_{ij} = u_{im} g^{mp} v_{pj}` (not symmetrized).
    pub fn compose(&self, u: &JetTensor<S>, v: &JetTensor<S>) -> JetTensor<S> {
        let n = self.n;
        JetTensor::from_fn(n, 1, 1, |idx| {
            let mut s = Jet::zero(&self.space);
            for m in 0..n {
                for p in 0..n {
                    let up = u.comps[idx[0] * n + m].mul(&self.ginv.comps[m * n + p]);
                    s.add_mul_assign(1.0, &up, &v.comps[p * n + idx[1]]);
                }
            }
            s
        })
    }

    /// Raises both slots of a rank-2 tensor.
    pub fn raise2(&self, u: &JetTensor<S>) -> JetTensor<S> {
        let n = self.n;
        let half = JetTensor::from_fn(n, 1, 1, |idx| {
            let mut s = Jet::zero(&self.space);
            for m in 0..n {
                s.add_mul_assign(1.0, &self.ginv.comps[idx[0] * n + m], &u.comps[m * n + idx[1]]);
            }
            s
        });
        JetTensor::from_fn(n, 1, 1, |idx| {
            let mut s = Jet::zero(&self.space);
            for m in 0..n {
                s.add_mul_assign(1.0, &half.comps[idx[0] * n + m], &self.ginv.comps[m * n + idx[1]]);
            }
            s
        })
    }

    /// `(T̊u)_{ij} = T_{αiβj} u^{αβ}`.
    pub fn ring(&self, t: &JetTensor<S>, u: &JetTensor<S>) -> JetTensor<S> {
        let n = self.n;
        let up = self.raise2(u);
        JetTensor::from_fn(n, 1, 1, |idx| {
            let mut s = Jet::zero(&self.space);
            for a in 0..n {
                for b in 0..n {
                    s.add_mul_assign(1.0, t.get(&[a, idx[0], b, idx[1]]), &up.comps[a * n + b]);
                }
            }
            s
        })
    }

    /// `⟨u, v⟩ = u_{ij} v^{ij}` for rank-2 tensors, as a scalar tensor.
    pub fn inner2(&self, u: &JetTensor<S>, v: &JetTensor<S>) -> JetTensor<S> {
        let vu = self.raise2(v);
        let mut s = Jet::zero(&self.space);
        for k in 0..self.n * self.n {
            s.add_mul_assign(1.0, &u.comps[k], &vu.comps[k]);
        }
        JetTensor::from_components(self.n, 0, 0, vec![s])
    }

    /// Ricci-identity commutator `C_{ab I} = ([∇_a, ∇_b] T)_I
    /// = −Σ_s R_{ab i_s}{}^m T_{…m…}` written with the curvature tensor `rm`.
    pub fn ricci_commutator(&self, rm: &JetTensor<S>, t: &JetTensor<S>) -> JetTensor<S> {
        let n = self.n;
        let r = t.rank();
        // R_{abc}^m = g^{mk} Rm_{abkc}
        let mut rmix = Vec::with_capacity(n.pow(4));
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for m in 0..n {
                        let mut s = Jet::zero(&self.space);
                        for k in 0..n {
                            s.add_mul_assign(1.0, &self.ginv.comps[m * n + k], rm.get(&[a, b, k, c]));
                        }
                        rmix.push(s);
                    }
                }
            }
        }
        let strides: Vec<usize> = (0..r).map(|s| n.pow((r - 1 - s) as u32)).collect();
        let mut tidx = vec![0usize; r];
        JetTensor::from_fn(n, t.p + 2, t.q, |idx| {
            let (a, b) = (idx[0], idx[1]);
            tidx.copy_from_slice(&idx[2..]);
            let base = offset(n, &tidx);
            let mut out = Jet::zero(&self.space);
            for s in 0..r {
                let is = tidx[s];
                for m in 0..n {
                    let other = base + m * strides[s] - is * strides[s];
                    out.add_mul_assign(-1.0, &rmix[((a * n + b) * n + is) * n + m], &t.comps[other]);
                }
            }
            out
        })
    }
}

/// Inverse metric jet by the Neumann series around `g(0)`.
fn jet_inverse<S: Scalar>(g: &JetTensor<S>) -> Result<JetTensor<S>, JetError> {
    let n = g.n;
    let space = g.space().clone();
    let g0: Vec<S> = g.comps.iter().map(|j| j.coeff(0)).collect();
    let g0inv = invert_small(n, &g0)?;
    // M = −g0⁻¹ (g − g0)
    let mut e = g.comps.clone();
    for j in &mut e {
        j.coeffs[0] = S::default();
    }
    let mut m = vec![Jet::zero(&space); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = Jet::zero(&space);
            for k in 0..n {
                let c = Jet::constant(&space, -g0inv[i * n + k]);
                s.add_mul_assign(1.0, &c, &e[k * n + j]);
            }
            m[i * n + j] = s;
        }
    }
    let mut term: Vec<Jet<S>> = g0inv.iter().map(|&c| Jet::constant(&space, c)).collect();
    let valid = g.comps.iter().map(|j| j.valid()).min().unwrap_or(-1);
    for t in &mut term {
        t.valid = valid;
    }
    let mut sum = term.clone();
    for _ in 0..space.degree() {
        let mut next = vec![Jet::zero(&space); n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    next[i * n + j].add_mul_assign(1.0, &m[i * n + k], &term[k * n + j]);
                }
            }
        }
        for (s, t) in sum.iter_mut().zip(&next) {
            s.add_scaled_assign(1.0, t);
        }
        term = next;
    }
    // Symmetrize exactly.
    let comps = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            let mut s = sum[i * n + j].clone();
            s.add_scaled_assign(1.0, &sum[j * n + i]);
            s.scale(0.5)
        })
        .collect();
    Ok(JetTensor::from_components(n, 1, 1, comps))
}

/// Inverse metric of a jet metric.
pub fn jet_inverse_metric(m: &JetMetric) -> Result<JetTensor<f64>, JetError> {
    jet_inverse(&m.tensor::<f64>())
}

/// `Rm, ∇Rm, …, ∇^k Rm` at the chart origin.
pub fn curvature_at_origin(m: &JetMetric, k: usize) -> Result<Vec<OriginTensor>, JetError> {
    if m.degree() < k + 2 {
        return Err(JetError::InsufficientDegree {
            needed: k + 2,
            have: m.degree(),
        });
    }
    let chart = Chart::new(m.tensor::<f64>())?;
    let mut cur = chart.riemann();
    let mut out = vec![cur.at_origin()?];
    for _ in 0..k {
        cur = chart.nabla(&cur);
        out.push(cur.at_origin()?);
    }
    Ok(out)
}

/// Applies one of the double-form operators to a tensor field.
pub fn apply_operator(
    op: JetOperator,
    t: &JetTensor<f64>,
    m: &JetMetric,
) -> Result<JetTensor<f64>, JetError> {
    if t.n() != m.n() {
        return Err(JetError::DimensionMismatch(t.n(), m.n()));
    }
    Chart::new(m.tensor::<f64>())?.apply(op, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_conformal_line() {
        // g = (1 + x₁) δ to degree 3.
        let space = JetSpace::new(2, 3);
        let f = Jet::from_terms(&space, &[(vec![0, 0], 1.0), (vec![1, 0], 1.0)]);
        let zero = Jet::zero(&space);
        let m = JetMetric::from_components(space.clone(), vec![f.clone(), zero.clone(), zero, f])
            .unwrap();
        let inv = jet_inverse_metric(&m).unwrap();
        for (k, c) in [1.0, -1.0, 1.0, -1.0].iter().enumerate() {
            let idx = space.index_of(&[k as u8, 0]).unwrap();
            assert!((inv.get(&[0, 0]).coeff(idx) - c).abs() < 1e-15);
            assert_eq!(inv.get(&[0, 1]).coeff(idx), 0.0);
        }
    }

    #[test]
    fn inverse_times_metric_is_identity() {
        let m = JetMetric::random(3, 4, 6);
        let g = m.tensor::<f64>();
        let inv = jet_inverse_metric(&m).unwrap();
        let n = 4;
        for i in 0..n {
            for j in 0..n {
                let mut s = Jet::zero(m.space());
                for k in 0..n {
                    s.add_mul_assign(1.0, g.get(&[i, k]), inv.get(&[k, j]));
                }
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((s.coeff(0) - target).abs() < 1e-13);
                for c in 1..m.space().len() {
                    assert!(s.coeff(c).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn sphere_normal_coordinates() {
        for (n, k) in [(3usize, 1.0), (4, 0.5), (4, 2.0)] {
            let m = JetMetric::sphere_normal(n, k, 2);
            let rm = &curvature_at_origin(&m, 0).unwrap()[0];
            assert!((rm.get(&[0, 1, 0, 1]) - k).abs() < 1e-12);
            assert!((rm.get(&[1, 2, 1, 2]) - k).abs() < 1e-12);
            assert!((rm.get(&[0, 1, 1, 0]) + k).abs() < 1e-12);
            assert!(rm.get(&[0, 1, 2, 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_metric_has_no_curvature() {
        let m = JetMetric::flat(4, 4);
        for t in curvature_at_origin(&m, 2).unwrap() {
            assert_eq!(t.max_abs(), 0.0);
        }
        let c = JetMetric::flat_curvilinear(5, 3, 5);
        for t in curvature_at_origin(&c, 2).unwrap() {
            assert!(t.max_abs() < 1e-12, "{}", t.max_abs());
        }
    }

    #[test]
    fn insufficient_degree_is_reported() {
        let m = JetMetric::random(1, 3, 3);
        assert!(matches!(
            curvature_at_origin(&m, 2),
            Err(JetError::InsufficientDegree { .. })
        ));
    }

    #[test]
    fn random_rm_has_curvature_symmetries() {
        let m = JetMetric::random(11, 4, 6);
        let all = curvature_at_origin(&m, 2).unwrap();
        let rm = &all[0];
        let n = 4;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = rm.get(&[i, j, k, l]);
                        worst = worst.max((v + rm.get(&[j, i, k, l])).abs());
                        worst = worst.max((v - rm.get(&[k, l, i, j])).abs());
                        worst = worst
                            .max((v + rm.get(&[j, k, i, l]) + rm.get(&[k, i, j, l])).abs());
                    }
                }
            }
        }
        assert!(worst < 1e-12, "{worst}");
        let d2 = &all[2];
        assert!(d2.comps.iter().all(|c| c.is_finite()));
        let mut anti: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        anti = anti.max(
                            (d2.get(&[a, b, i, j, 0, 1]) + d2.get(&[a, b, j, i, 0, 1])).abs(),
                        );
                    }
                }
            }
        }
        assert!(anti < 1e-12);
    }
}

//! Pointwise multilinear algebra for curvature tensors.
//!
//! Two value types carry all pointwise data: [`Sym2`] (symmetric 2-tensors such
//! as metrics, Ricci tensors and variations) and [`DoubleForm22`] (tensors
//! antisymmetric in each index pair and symmetric under pair exchange, such as
//! Riemann and Weyl tensors).  All indices are covariant; a metric `g` is passed
//! explicitly whenever an index has to be raised.
//!
//! Norms follow the double-form convention: a `(p,q)` double-form carries the
//! factor `1/(p! q!)` in its inner product, so `‖Rm‖² = ¼ Rm_{ijkl} Rm^{ijkl}`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Absolute tolerance, scaled by `1 + magnitude`, used for algebraic identities.
pub const ALGEBRA_TOL: f64 = 1e-12;

/// Errors raised by the pointwise tensor algebra.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("expected {expected} components, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("components are not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("components violate the double-form symmetries")]
    NotDoubleForm,
    #[error("non-finite component")]
    NonFinite,
    #[error("metric is not positive definite")]
    NotPositiveDefinite,
    #[error("curvature tensor does not carry the first Bianchi identity")]
    MissingBianchi,
    #[error("dimension {0} is too small, need n >= 3")]
    DimensionTooSmall(usize),
    #[error("operation requires dimension {expected}, got {got}")]
    WrongDimension { expected: usize, got: usize },
}

fn check_dims(a: usize, b: usize) -> Result<(), TensorError> {
    if a == b {
        Ok(())
    } else {
        Err(TensorError::DimensionMismatch { left: a, right: b })
    }
}

/// A symmetric covariant 2-tensor in dimension `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sym2 {
    n: usize,
    comps: Vec<f64>,
}

impl Sym2 {
    /// Builds a tensor from row-major components, checking exact symmetry.
    pub fn new(n: usize, comps: Vec<f64>) -> Result<Self, TensorError> {
        if comps.len() != n * n {
            return Err(TensorError::BadLength {
                expected: n * n,
                got: comps.len(),
            });
        }
        if comps.iter().any(|c| !c.is_finite()) {
            return Err(TensorError::NonFinite);
        }
        for i in 0..n {
            for j in 0..i {
                if comps[i * n + j] != comps[j * n + i] {
                    return Err(TensorError::NotSymmetric { i, j });
                }
            }
        }
        Ok(Self { n, comps })
    }

    /// Builds a tensor from `f(i, j)` evaluated on the upper triangle `i <= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut comps = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                comps[i * n + j] = v;
                comps[j * n + i] = v;
            }
        }
        Self { n, comps }
    }

    /// Symmetrizes an arbitrary square array: `½(a_ij + a_ji)`.
    pub fn symmetrized(n: usize, raw: &[f64]) -> Self {
        Self::from_fn(n, |i, j| 0.5 * (raw[i * n + j] + raw[j * n + i]))
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            comps: vec![0.0; n * n],
        }
    }

    /// The Euclidean metric `δ_ij`.
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn comps(&self) -> &[f64] {
        &self.comps
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.comps[i * self.n + j]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            comps: self.comps.iter().map(|x| c * x).collect(),
        }
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, c: f64, other: &Sym2) -> Self {
        assert_eq!(self.n, other.n, "Sym2 dimension mismatch");
        Self {
            n: self.n,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.comps)
    }

    fn from_matrix(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        Self::from_fn(n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    /// Eigenvalues in ascending order (with respect to the Euclidean frame).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.to_matrix())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }
}

/// A positive definite metric together with its inverse.
#[derive(Debug, Clone)]
pub struct Metric {
    g: Sym2,
    inv: Sym2,
}

impl Metric {
    pub fn new(g: &Sym2) -> Result<Self, TensorError> {
        let chol = g
            .to_matrix()
            .cholesky()
            .ok_or(TensorError::NotPositiveDefinite)?;
        let inv = Sym2::from_matrix(&chol.inverse());
        Ok(Self { g: g.clone(), inv })
    }

    pub fn n(&self) -> usize {
        self.g.n
    }

    pub fn g(&self) -> &Sym2 {
        &self.g
    }

    pub fn inv(&self) -> &Sym2 {
        &self.inv
    }

    /// `g^{ij} u_ij`.
    pub fn trace(&self, u: &Sym2) -> f64 {
        contract2(&self.inv, u)
    }

    /// `u^{ij} = g^{ia} g^{jb} u_ab`.
    pub fn raise(&self, u: &Sym2) -> Sym2 {
        let n = self.n();
        let gi = &self.inv;
        Sym2::from_fn(n, |i, j| {
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    s += gi.get(i, a) * gi.get(j, b) * u.get(a, b);
                }
            }
            s
        })
    }

    /// `⟨u, v⟩ = g^{ia} g^{jb} u_ij v_ab`.
    pub fn inner(&self, u: &Sym2, v: &Sym2) -> f64 {
        contract2(&self.raise(u), v)
    }

    /// Fully raised components `T^{abcd}` of a 4-index array.
    fn raise4(&self, t: &[f64]) -> Vec<f64> {
        let n = self.n();
        let gi = &self.inv;
        let mut cur = t.to_vec();
        let mut next = vec![0.0; cur.len()];
        // Raise one slot at a time; `stride` is the stride of the slot.
        for slot in 0..4 {
            let stride = n.pow(3 - slot as u32);
            for (idx, out) in next.iter_mut().enumerate() {
                let a = (idx / stride) % n;
                let base = idx - a * stride;
                let mut s = 0.0;
                for m in 0..n {
                    s += gi.get(a, m) * cur[base + m * stride];
                }
                *out = s;
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }
}

fn contract2(a: &Sym2, b: &Sym2) -> f64 {
    a.comps.iter().zip(&b.comps).map(|(x, y)| x * y).sum()
}

/// A (2,2) double-form: antisymmetric in `(i,j)` and in `(k,l)`, symmetric under
/// `(ij) ↔ (kl)`.  The `bianchi` flag marks algebraic curvature tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleForm22 {
    n: usize,
    comps: Vec<f64>,
    bianchi: bool,
}

impl DoubleForm22 {
    /// Validates the double-form symmetries to [`ALGEBRA_TOL`] and detects the
    /// first Bianchi identity.
    pub fn new(n: usize, comps: Vec<f64>) -> Result<Self, TensorError> {
        let len = n.pow(4);
        if comps.len() != len {
            return Err(TensorError::BadLength {
                expected: len,
                got: comps.len(),
            });
        }
        if comps.iter().any(|c| !c.is_finite()) {
            return Err(TensorError::NonFinite);
        }
        let scale = 1.0 + comps.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let tol = ALGEBRA_TOL * scale;
        let at = |i: usize, j: usize, k: usize, l: usize| comps[((i * n + j) * n + k) * n + l];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = at(i, j, k, l);
                        if (v + at(j, i, k, l)).abs() > tol
                            || (v + at(i, j, l, k)).abs() > tol
                            || (v - at(k, l, i, j)).abs() > tol
                        {
                            return Err(TensorError::NotDoubleForm);
                        }
                    }
                }
            }
        }
        let mut t = Self {
            n,
            comps,
            bianchi: false,
        };
        t.bianchi = t.bianchi_residual() <= tol;
        Ok(t)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            comps: vec![0.0; n.pow(4)],
            bianchi: true,
        }
    }

    pub(crate) fn from_raw(n: usize, comps: Vec<f64>, bianchi: bool) -> Self {
        debug_assert_eq!(comps.len(), n.pow(4));
        Self { n, comps, bianchi }
    }

    /// Projects an arbitrary 4-index array onto the algebraic curvature tensors:
    /// antisymmetrize both pairs, symmetrize under pair exchange, then remove
    /// the totally antisymmetric part (first Bianchi projection).
    pub fn young_project(n: usize, raw: &[f64]) -> Self {
        assert_eq!(raw.len(), n.pow(4));
        let at = |t: &[f64], i: usize, j: usize, k: usize, l: usize| t[((i * n + j) * n + k) * n + l];
        let mut a = vec![0.0; raw.len()];
        for_each4(n, |i, j, k, l, idx| {
            a[idx] = 0.25
                * (at(raw, i, j, k, l) - at(raw, j, i, k, l) - at(raw, i, j, l, k)
                    + at(raw, j, i, l, k));
        });
        let mut s = vec![0.0; raw.len()];
        for_each4(n, |i, j, k, l, idx| {
            s[idx] = 0.5 * (at(&a, i, j, k, l) + at(&a, k, l, i, j));
        });
        let mut r = vec![0.0; raw.len()];
        for_each4(n, |i, j, k, l, idx| {
            let cyc = at(&s, i, j, k, l) + at(&s, j, k, i, l) + at(&s, k, i, j, l);
            r[idx] = at(&s, i, j, k, l) - cyc / 3.0;
        });
        Self {
            n,
            comps: r,
            bianchi: true,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn comps(&self) -> &[f64] {
        &self.comps
    }

    pub fn bianchi(&self) -> bool {
        self.bianchi
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        self.comps[((i * n + j) * n + k) * n + l]
    }

    /// Largest absolute value of the cyclic sum `T_ijkl + T_jkil + T_kijl`.
    pub fn bianchi_residual(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for_each4(n, |i, j, k, l, _| {
            let c = self.get(i, j, k, l) + self.get(j, k, i, l) + self.get(k, i, j, l);
            worst = worst.max(c.abs());
        });
        worst
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            comps: self.comps.iter().map(|x| c * x).collect(),
            bianchi: self.bianchi,
        }
    }

    /// `self + c·other`; the Bianchi flag survives only if both carry it.
    pub fn add_scaled(&self, c: f64, other: &DoubleForm22) -> Self {
        assert_eq!(self.n, other.n, "DoubleForm22 dimension mismatch");
        Self {
            n: self.n,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a + c * b)
                .collect(),
            bianchi: self.bianchi && other.bianchi,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

fn for_each4(n: usize, mut f: impl FnMut(usize, usize, usize, usize, usize)) {
    let mut idx = 0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    f(i, j, k, l, idx);
                    idx += 1;
                }
            }
        }
    }
}

/// Kulkarni–Nomizu product
/// `(u∧v)_{ijkl} = u_ik v_jl + u_jl v_ik − u_il v_jk − u_jk v_il`.
pub fn kulkarni_nomizu(u: &Sym2, v: &Sym2) -> Result<DoubleForm22, TensorError> {
    check_dims(u.n, v.n)?;
    let n = u.n;
    let mut comps = vec![0.0; n.pow(4)];
    for_each4(n, |i, j, k, l, idx| {
        comps[idx] = u.get(i, k) * v.get(j, l) + u.get(j, l) * v.get(i, k)
            - u.get(i, l) * v.get(j, k)
            - u.get(j, k) * v.get(i, l);
    });
    Ok(DoubleForm22::from_raw(n, comps, true))
}

/// Double-form inner product `¼ S_{ijkl} T^{ijkl}`.
pub fn df_inner(s: &DoubleForm22, t: &DoubleForm22, g: &Sym2) -> Result<f64, TensorError> {
    check_dims(s.n, t.n)?;
    check_dims(s.n, g.n)?;
    let metric = Metric::new(g)?;
    Ok(df_inner_with(&metric, s, t))
}

pub(crate) fn df_inner_with(metric: &Metric, s: &DoubleForm22, t: &DoubleForm22) -> f64 {
    let up = metric.raise4(&t.comps);
    0.25 * s.comps.iter().zip(&up).map(|(a, b)| a * b).sum::<f64>()
}

/// Ricci contraction `Ric_jl = g^{ik} T_ijkl`.
pub fn ricci_contraction(t: &DoubleForm22, g: &Sym2) -> Result<Sym2, TensorError> {
    check_dims(t.n, g.n)?;
    let metric = Metric::new(g)?;
    Ok(ricci_with(&metric, t))
}

fn ricci_with(metric: &Metric, t: &DoubleForm22) -> Sym2 {
    let n = t.n;
    let gi = metric.inv();
    Sym2::from_fn(n, |j, l| {
        let mut s = 0.0;
        for i in 0..n {
            for k in 0..n {
                s += gi.get(i, k) * t.get(i, j, k, l);
            }
        }
        s
    })
}

/// The ring action `(T̊u)_ij = T_{αiβj} u^{αβ}`.
pub fn ring_action(t: &DoubleForm22, u: &Sym2, g: &Sym2) -> Result<Sym2, TensorError> {
    check_dims(t.n, u.n)?;
    check_dims(t.n, g.n)?;
    let metric = Metric::new(g)?;
    Ok(ring_action_with(&metric, t, u))
}

pub(crate) fn ring_action_with(metric: &Metric, t: &DoubleForm22, u: &Sym2) -> Sym2 {
    let n = t.n;
    let up = metric.raise(u);
    Sym2::from_fn(n, |i, j| {
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += t.get(a, i, b, j) * up.get(a, b);
            }
        }
        s
    })
}

/// `(T∨T)_ij = T_{αβγi} T^{αβγ}{}_j`.
pub fn vee_square(t: &DoubleForm22, g: &Sym2) -> Result<Sym2, TensorError> {
    check_dims(t.n, g.n)?;
    let metric = Metric::new(g)?;
    let n = t.n;
    let gi = metric.inv();
    // Raise the first three slots only.
    let mut up = vec![0.0; n.pow(4)];
    for_each4(n, |a, b, c, j, idx| {
        let mut s = 0.0;
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    s += gi.get(a, x) * gi.get(b, y) * gi.get(c, z) * t.get(x, y, z, j);
                }
            }
        }
        up[idx] = s;
    });
    Ok(Sym2::from_fn(n, |i, j| {
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    s += t.get(a, b, c, i) * up[((a * n + b) * n + c) * n + j];
                }
            }
        }
        s
    }))
}

/// Endomorphism product `u ∘ v = u g⁻¹ v`, symmetrized so that the result is
/// symmetric; exact when `u` and `v` commute as endomorphisms.
pub fn compose(u: &Sym2, v: &Sym2, g: &Sym2) -> Result<Sym2, TensorError> {
    check_dims(u.n, v.n)?;
    check_dims(u.n, g.n)?;
    let metric = Metric::new(g)?;
    Ok(compose_with(&metric, u, v))
}

pub(crate) fn compose_with(metric: &Metric, u: &Sym2, v: &Sym2) -> Sym2 {
    let n = u.n;
    let gi = metric.inv();
    let prod = |a: &Sym2, b: &Sym2, i: usize, j: usize| {
        let mut s = 0.0;
        for m in 0..n {
            for p in 0..n {
                s += a.get(i, m) * gi.get(m, p) * b.get(p, j);
            }
        }
        s
    };
    Sym2::from_fn(n, |i, j| 0.5 * (prod(u, v, i, j) + prod(v, u, i, j)))
}

/// Pointwise curvature package in a fixed frame.
///
/// Built by [`decompose`]; the fields are the metric, the Riemann tensor, its
/// Ricci contraction, scalar curvature, Weyl part, traceless Ricci tensor and
/// the Schouten tensor `A = Ric − R g / (2(n−1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvaturePoint {
    g: Sym2,
    rm: DoubleForm22,
    ric: Sym2,
    scal: f64,
    weyl: DoubleForm22,
    ric0: Sym2,
    schouten: Sym2,
}

impl CurvaturePoint {
    pub fn n(&self) -> usize {
        self.g.n
    }
    pub fn g(&self) -> &Sym2 {
        &self.g
    }
    pub fn rm(&self) -> &DoubleForm22 {
        &self.rm
    }
    pub fn ric(&self) -> &Sym2 {
        &self.ric
    }
    pub fn scal(&self) -> f64 {
        self.scal
    }
    pub fn weyl(&self) -> &DoubleForm22 {
        &self.weyl
    }
    pub fn ric0(&self) -> &Sym2 {
        &self.ric0
    }
    pub fn schouten(&self) -> &Sym2 {
        &self.schouten
    }

    pub fn metric(&self) -> Metric {
        Metric::new(&self.g).expect("curvature point metric is positive definite")
    }

    /// `‖Rm‖²` in the double-form norm.
    pub fn rm_norm_sq(&self) -> f64 {
        df_inner_with(&self.metric(), &self.rm, &self.rm)
    }
    pub fn weyl_norm_sq(&self) -> f64 {
        df_inner_with(&self.metric(), &self.weyl, &self.weyl)
    }
    pub fn ric_norm_sq(&self) -> f64 {
        self.metric().inner(&self.ric, &self.ric)
    }
    pub fn ric0_norm_sq(&self) -> f64 {
        self.metric().inner(&self.ric0, &self.ric0)
    }

    /// `σ₂(A)`, the second elementary symmetric function of the eigenvalues of
    /// the Schouten endomorphism: `½((tr A)² − ‖A‖²)`.
    pub fn sigma2_schouten(&self) -> f64 {
        let m = self.metric();
        let tr = m.trace(&self.schouten);
        0.5 * (tr * tr - m.inner(&self.schouten, &self.schouten))
    }

    /// Same curvature data for the metric `c·g` (frame unchanged): components
    /// of `Rm` and `W` scale by `c`, Ricci-type tensors are unchanged, and the
    /// scalar curvature scales by `1/c`.
    pub fn scaled_metric(&self, c: f64) -> Result<CurvaturePoint, TensorError> {
        decompose(&self.rm.scaled(c), &self.g.scaled(c))
    }
}

/// Splits an algebraic curvature tensor into its orthogonal parts.
pub fn decompose(rm: &DoubleForm22, g: &Sym2) -> Result<CurvaturePoint, TensorError> {
    check_dims(rm.n, g.n)?;
    let n = rm.n;
    if n < 3 {
        return Err(TensorError::DimensionTooSmall(n));
    }
    if !rm.bianchi {
        return Err(TensorError::MissingBianchi);
    }
    let metric = Metric::new(g)?;
    let ric = ricci_with(&metric, rm);
    let scal = metric.trace(&ric);
    let nf = n as f64;
    let ric0 = ric.add_scaled(-scal / nf, g);
    let schouten = ric.add_scaled(-scal / (2.0 * (nf - 1.0)), g);
    let weyl = if n == 3 {
        DoubleForm22::zeros(3)
    } else {
        let ricg = kulkarni_nomizu(&ric0, g)?;
        let gg = kulkarni_nomizu(g, g)?;
        rm.add_scaled(-1.0 / (nf - 2.0), &ricg)
            .add_scaled(-scal / (2.0 * nf * (nf - 1.0)), &gg)
    };
    Ok(CurvaturePoint {
        g: g.clone(),
        rm: rm.clone(),
        ric,
        scal,
        weyl,
        ric0,
        schouten,
    })
}

/// The two sides of the pointwise estimate
/// `|⟨W + ½Ric̊∧g, Ric̊∧Ric̊⟩| ≤ (2/√3)‖Ric̊‖²(‖W‖² + ¼‖Ric̊‖²)^{1/2}`
/// in dimension four.
pub fn psmajor_sides(cp: &CurvaturePoint) -> Result<(f64, f64), TensorError> {
    if cp.n() != 4 {
        return Err(TensorError::WrongDimension {
            expected: 4,
            got: cp.n(),
        });
    }
    let metric = cp.metric();
    let rg = kulkarni_nomizu(&cp.ric0, &cp.g)?;
    let rr = kulkarni_nomizu(&cp.ric0, &cp.ric0)?;
    let left = cp.weyl.add_scaled(0.5, &rg);
    let lhs = df_inner_with(&metric, &left, &rr).abs();
    let r2 = cp.ric0_norm_sq();
    let rhs = (2.0 / 3f64.sqrt()) * r2 * (cp.weyl_norm_sq() + 0.25 * r2).sqrt();
    Ok((lhs, rhs))
}

/// Orthogonal parts `(T, V, U)` of `Ric̊∧Ric̊`: Weyl part, traceless-Ricci part
/// and scalar part, returned as squared norms.
pub fn ric0_square_split(cp: &CurvaturePoint) -> Result<(f64, f64, f64), TensorError> {
    let rr = kulkarni_nomizu(&cp.ric0, &cp.ric0)?;
    let parts = decompose(&rr, &cp.g)?;
    let metric = cp.metric();
    let nf = cp.n() as f64;
    let v = kulkarni_nomizu(&parts.ric0, &cp.g)?.scaled(1.0 / (nf - 2.0));
    let u = kulkarni_nomizu(&cp.g, &cp.g)?.scaled(parts.scal / (2.0 * nf * (nf - 1.0)));
    Ok((
        parts.weyl_norm_sq(),
        df_inner_with(&metric, &v, &v),
        df_inner_with(&metric, &u, &u),
    ))
}

/// A deterministic pseudo-random curvature point: a random positive definite
/// metric and a Young-projected random algebraic curvature tensor.
///
/// # Panics
///
/// Panics if `n < 3`.
pub fn random_curvature(seed: u64, n: usize) -> CurvaturePoint {
    assert!(n >= 3, "random_curvature needs n >= 3");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Diagonally dominant perturbation of the identity keeps g positive definite.
    let offdiag = 0.5 / (n as f64 - 1.0);
    let g = Sym2::from_fn(n, |i, j| {
        if i == j {
            1.0 + 0.5 * rng.random_range(-1.0..1.0)
        } else {
            offdiag * 0.9 * rng.random_range(-1.0..1.0)
        }
    });
    let raw: Vec<f64> = (0..n.pow(4)).map(|_| rng.random_range(-1.0..1.0)).collect();
    let rm = DoubleForm22::young_project(n, &raw);
    decompose(&rm, &g).expect("random curvature data is valid")
}

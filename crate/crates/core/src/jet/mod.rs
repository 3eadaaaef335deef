//! Truncated multivariate Taylor jets and exact covariant calculus at a point.
//!
//! A [`Jet`] is a polynomial in `n` variables truncated at a fixed total
//! degree.  Each jet also records the highest degree up to which its
//! coefficients are *valid*: differentiation lowers validity by one and
//! products inherit the smaller validity, so a value read at the origin is
//! always exact (up to floating point) or reported as unavailable.
//!
//! Jets are generic over a [`Scalar`], which is either `f64` or the dual
//! numbers [`Dual`]; the latter turn any curvature computation into an exact
//! first-variation computation.

mod chart;
mod identities;

pub use chart::{
    apply_operator, curvature_at_origin, jet_inverse_metric, Chart, JetMetric, JetOperator,
    JetTensor, OriginTensor,
};
pub use identities::{
    first_variations_on, identities_on, scalar_curvature_derivative, schematic_identities,
    verify_first_variations, verify_identities, IdentityKind, IdentityReport, MIN_SUITE_DEGREE,
};

use std::collections::HashMap;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use thiserror::Error;

/// Errors raised by jet computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("insufficient jet degree: need {needed}, have {have}")]
    InsufficientDegree { needed: usize, have: usize },
    #[error("metric is singular at the origin")]
    SingularMetric,
    #[error("valence mismatch: {0}")]
    Valence(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
}

/// Scalars usable as jet coefficients.
pub trait Scalar:
    Copy
    + Debug
    + Default
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    fn from_f64(x: f64) -> Self;
    /// Real (non-infinitesimal) part.
    fn re(self) -> f64;
    fn recip(self) -> Self;
    fn sqrt(self) -> Self;
    fn scale(self, c: f64) -> Self;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn re(self) -> f64 {
        self
    }
    fn recip(self) -> Self {
        1.0 / self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn scale(self, c: f64) -> Self {
        self * c
    }
}

/// A first-order dual number `re + eps·ε` with `ε² = 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    pub fn new(re: f64, eps: f64) -> Self {
        Self { re, eps }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.eps)
    }
}

impl AddAssign for Dual {
    fn add_assign(&mut self, o: Dual) {
        self.re += o.re;
        self.eps += o.eps;
    }
}

impl SubAssign for Dual {
    fn sub_assign(&mut self, o: Dual) {
        self.re -= o.re;
        self.eps -= o.eps;
    }
}

impl Scalar for Dual {
    fn from_f64(x: f64) -> Self {
        Dual::new(x, 0.0)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn recip(self) -> Self {
        let r = 1.0 / self.re;
        Dual::new(r, -self.eps * r * r)
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual::new(s, 0.5 * self.eps / s)
    }
    fn scale(self, c: f64) -> Self {
        Dual::new(self.re * c, self.eps * c)
    }
}

/// Monomial bookkeeping shared by all jets of a given `(n, degree)`.
#[derive(Debug)]
pub struct JetSpace {
    n: usize,
    degree: usize,
    monos: Vec<Vec<u8>>,
    mono_degree: Vec<usize>,
    lookup: HashMap<Vec<u8>, usize>,
    /// Number of monomials of degree `<= v`, indexed by `v`.
    count_upto: Vec<usize>,
    /// Product table `(a, b, a·b)`, sorted by the degree of the product.
    pairs: Vec<(u32, u32, u32)>,
    pair_upto: Vec<usize>,
    /// Per variable: `(source, target, factor)` for `∂_i x^src = factor x^target`,
    /// sorted by source degree.
    derivs: Vec<Vec<(u32, u32, f64)>>,
    deriv_upto: Vec<Vec<usize>>,
}

impl JetSpace {
    pub fn new(n: usize, degree: usize) -> Arc<Self> {
        let mut monos: Vec<Vec<u8>> = Vec::new();
        for d in 0..=degree {
            let mut cur = vec![0u8; n];
            enumerate_degree(n, d, 0, &mut cur, &mut monos);
        }
        let mono_degree: Vec<usize> = monos
            .iter()
            .map(|m| m.iter().map(|&e| e as usize).sum())
            .collect();
        let lookup: HashMap<Vec<u8>, usize> =
            monos.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let count_upto: Vec<usize> = (0..=degree)
            .map(|v| mono_degree.iter().filter(|&&d| d <= v).count())
            .collect();

        let mut pairs = Vec::new();
        for (a, ma) in monos.iter().enumerate() {
            for (b, mb) in monos.iter().enumerate() {
                if mono_degree[a] + mono_degree[b] > degree {
                    continue;
                }
                let prod: Vec<u8> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                pairs.push((a as u32, b as u32, lookup[&prod] as u32));
            }
        }
        pairs.sort_by_key(|&(_, _, c)| mono_degree[c as usize]);
        let pair_upto: Vec<usize> = (0..=degree)
            .map(|v| {
                pairs
                    .iter()
                    .filter(|&&(_, _, c)| mono_degree[c as usize] <= v)
                    .count()
            })
            .collect();

        let mut derivs = Vec::with_capacity(n);
        let mut deriv_upto = Vec::with_capacity(n);
        for i in 0..n {
            let mut list = Vec::new();
            for (src, m) in monos.iter().enumerate() {
                if m[i] > 0 {
                    let mut t = m.clone();
                    t[i] -= 1;
                    list.push((src as u32, lookup[&t] as u32, m[i] as f64));
                }
            }
            let upto: Vec<usize> = (0..=degree)
                .map(|v| {
                    list.iter()
                        .filter(|&&(s, _, _)| mono_degree[s as usize] <= v)
                        .count()
                })
                .collect();
            derivs.push(list);
            deriv_upto.push(upto);
        }
        Arc::new(Self {
            n,
            degree,
            monos,
            mono_degree,
            lookup,
            count_upto,
            pairs,
            pair_upto,
            derivs,
            deriv_upto,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of monomials of degree `<= degree`.
    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monos.is_empty()
    }

    /// Multi-indices in storage order (graded).
    pub fn monomials(&self) -> &[Vec<u8>] {
        &self.monos
    }

    pub fn monomial_degree(&self, idx: usize) -> usize {
        self.mono_degree[idx]
    }

    pub fn index_of(&self, multi: &[u8]) -> Option<usize> {
        self.lookup.get(multi).copied()
    }
}

fn enumerate_degree(n: usize, d: usize, pos: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if pos == n - 1 {
        cur[pos] = d as u8;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for e in (0..=d).rev() {
        cur[pos] = e as u8;
        enumerate_degree(n, d - e, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// A truncated Taylor polynomial with a validity degree.
#[derive(Debug, Clone)]
pub struct Jet<S: Scalar> {
    space: Arc<JetSpace>,
    coeffs: Vec<S>,
    valid: i32,
}

impl<S: Scalar> Jet<S> {
    pub fn zero(space: &Arc<JetSpace>) -> Self {
        Self {
            space: space.clone(),
            coeffs: vec![S::default(); space.len()],
            valid: space.degree as i32,
        }
    }

    pub fn constant(space: &Arc<JetSpace>, c: S) -> Self {
        let mut j = Self::zero(space);
        j.coeffs[0] = c;
        j
    }

    /// The coordinate function `x_i`.
    pub fn variable(space: &Arc<JetSpace>, i: usize) -> Self {
        let mut j = Self::zero(space);
        let mut m = vec![0u8; space.n];
        m[i] = 1;
        if let Some(idx) = space.index_of(&m) {
            j.coeffs[idx] = S::from_f64(1.0);
        }
        j
    }

    /// Builds a jet from `(multi-index, coefficient)` pairs; terms above the
    /// truncation degree are dropped.
    pub fn from_terms(space: &Arc<JetSpace>, terms: &[(Vec<u8>, S)]) -> Self {
        let mut j = Self::zero(space);
        for (m, c) in terms {
            if let Some(idx) = space.index_of(m) {
                j.coeffs[idx] += *c;
            }
        }
        j
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    /// Highest degree with valid coefficients (`-1` when nothing is known).
    pub fn valid(&self) -> i32 {
        self.valid
    }

    /// Coefficient of the monomial at storage index `idx`.
    pub fn coeff(&self, idx: usize) -> S {
        self.coeffs[idx]
    }

    /// Value at the origin.
    pub fn value(&self) -> Result<S, JetError> {
        if self.valid < 0 {
            Err(JetError::InsufficientDegree {
                needed: (self.space.degree as i32 - self.valid) as usize,
                have: self.space.degree,
            })
        } else {
            Ok(self.coeffs[0])
        }
    }

    /// Largest absolute real part among valid coefficients.
    pub fn max_abs_valid(&self) -> f64 {
        if self.valid < 0 {
            return 0.0;
        }
        let end = self.space.count_upto[self.valid as usize];
        self.coeffs[..end]
            .iter()
            .fold(0.0, |m, c| m.max(c.re().abs()))
    }

    fn valid_len(&self, v: i32) -> usize {
        if v < 0 {
            0
        } else {
            self.space.count_upto[v as usize]
        }
    }

    /// `∂/∂x_i`; validity drops by one.
    pub fn deriv(&self, i: usize) -> Self {
        let mut out = Self::zero(&self.space);
        out.valid = self.valid - 1;
        if self.valid >= 1 {
            let end = self.space.deriv_upto[i][self.valid as usize];
            for &(src, dst, f) in &self.space.derivs[i][..end] {
                out.coeffs[dst as usize] = self.coeffs[src as usize].scale(f);
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        let end = self.valid_len(self.valid);
        let mut out = Self::zero(&self.space);
        out.valid = self.valid;
        for k in 0..end {
            out.coeffs[k] = self.coeffs[k].scale(c);
        }
        out
    }

    pub fn scale_by(&self, c: S) -> Self {
        let end = self.valid_len(self.valid);
        let mut out = Self::zero(&self.space);
        out.valid = self.valid;
        for k in 0..end {
            out.coeffs[k] = self.coeffs[k] * c;
        }
        out
    }

    /// `self += c·a`.
    pub fn add_scaled_assign(&mut self, c: f64, a: &Jet<S>) {
        self.valid = self.valid.min(a.valid);
        let end = self.valid_len(self.valid);
        for k in 0..end {
            self.coeffs[k] += a.coeffs[k].scale(c);
        }
    }

    /// `self += c·a·b` (truncated product).
    pub fn add_mul_assign(&mut self, c: f64, a: &Jet<S>, b: &Jet<S>) {
        self.valid = self.valid.min(a.valid).min(b.valid);
        if self.valid < 0 {
            return;
        }
        let end = self.space.pair_upto[self.valid as usize];
        if c == 1.0 {
            for &(x, y, z) in &self.space.pairs[..end] {
                self.coeffs[z as usize] += a.coeffs[x as usize] * b.coeffs[y as usize];
            }
        } else {
            for &(x, y, z) in &self.space.pairs[..end] {
                self.coeffs[z as usize] += (a.coeffs[x as usize] * b.coeffs[y as usize]).scale(c);
            }
        }
    }

    pub fn mul(&self, o: &Jet<S>) -> Self {
        let mut out = Self::zero(&self.space);
        out.add_mul_assign(1.0, self, o);
        out
    }

    /// Drops validity to at most `v`.
    pub fn truncated(mut self, v: i32) -> Self {
        if v < self.valid {
            let start = self.valid_len(v);
            for c in &mut self.coeffs[start..] {
                *c = S::default();
            }
            self.valid = v;
        }
        self
    }

    /// Multiplicative inverse by the geometric series around the constant term.
    pub fn recip(&self) -> Result<Self, JetError> {
        let a0 = self.value()?;
        if a0.re() == 0.0 {
            return Err(JetError::SingularMetric);
        }
        let inv0 = a0.recip();
        // self = a0 (1 + r), r without constant term.
        let mut r = self.scale_by(inv0);
        r.coeffs[0] = S::default();
        let mut term = Jet::constant(&self.space, S::from_f64(1.0));
        term.valid = self.valid;
        let mut sum = term.clone();
        for k in 1..=self.space.degree {
            term = term.mul(&r);
            sum.add_scaled_assign(if k % 2 == 1 { -1.0 } else { 1.0 }, &term);
        }
        Ok(sum.scale_by(inv0))
    }

    /// Re-expresses a real jet over another scalar type.
    pub fn lift<T: Scalar>(&self) -> Jet<T>
    where
        S: Into<f64>,
    {
        Jet {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|&c| T::from_f64(c.into())).collect(),
            valid: self.valid,
        }
    }
}

impl<'a, S: Scalar> Add<&'a Jet<S>> for &'a Jet<S> {
    type Output = Jet<S>;
    fn add(self, o: &'a Jet<S>) -> Jet<S> {
        let mut out = self.clone();
        out.add_scaled_assign(1.0, o);
        out
    }
}

impl<'a, S: Scalar> Sub<&'a Jet<S>> for &'a Jet<S> {
    type Output = Jet<S>;
    fn sub(self, o: &'a Jet<S>) -> Jet<S> {
        let mut out = self.clone();
        out.add_scaled_assign(-1.0, o);
        out
    }
}

impl<'a, S: Scalar> Mul<&'a Jet<S>> for &'a Jet<S> {
    type Output = Jet<S>;
    fn mul(self, o: &'a Jet<S>) -> Jet<S> {
        Jet::mul(self, o)
    }
}

/// Builds the dual jet `a + ε b` from two real jets on the same space.
pub fn dual_jet(a: &Jet<f64>, b: &Jet<f64>) -> Jet<Dual> {
    Jet {
        space: a.space.clone(),
        coeffs: a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(&x, &y)| Dual::new(x, y))
            .collect(),
        valid: a.valid.min(b.valid),
    }
}

/// Splits a dual jet into its real and infinitesimal parts.
pub fn split_dual(j: &Jet<Dual>) -> (Jet<f64>, Jet<f64>) {
    let re = Jet {
        space: j.space.clone(),
        coeffs: j.coeffs.iter().map(|c| c.re).collect(),
        valid: j.valid,
    };
    let eps = Jet {
        space: j.space.clone(),
        coeffs: j.coeffs.iter().map(|c| c.eps).collect(),
        valid: j.valid,
    };
    (re, eps)
}

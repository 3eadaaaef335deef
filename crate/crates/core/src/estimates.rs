//! Numerical stress tests of interpolation and multiplicative Sobolev
//! inequalities on flat periodic grids.
//!
//! Fields live on the unit torus `[0,1)ⁿ`, `n ∈ {1, 2}`, sampled on a uniform
//! grid.  Derivatives are spectral and exact for band-limited fields; `Lᵖ`
//! norms use uniform quadrature weights (the torus has unit volume) and the
//! maximum for `p = ∞`.  Random fields are generated from their Fourier
//! coefficients, which depend only on the seed, the dimension and the band
//! limit, so the same field can be resampled on finer grids.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by the estimates lab.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatesError {
    #[error("periodic fields support n ∈ {{1, 2}}, got {0}")]
    InvalidDimension(usize),
    #[error("grid of {size} points cannot resolve band limit {band_limit} (need size > 2·band limit)")]
    GridTooSmall { size: usize, band_limit: usize },
    #[error("invalid exponents: {0}")]
    InvalidExponent(String),
    #[error("degenerate norms: {0}")]
    DegenerateNorm(&'static str),
    #[error("hypothesis violated at k = {k}: f(k) = {value} > C·√(f(k−1)f(k+1)) = {bound}")]
    HypothesisViolated { k: usize, value: f64, bound: f64 },
    #[error("sequence entries and the constant must be positive and finite")]
    NonPositive,
}

/// `Lᵖ` norm on the unit-volume torus with uniform weights (`p = ∞` allowed).
pub fn lp_norm(values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let mean = values.iter().map(|v| v.abs().powf(p)).sum::<f64>() / values.len() as f64;
    mean.powf(1.0 / p)
}

/// `1/x` with `1/0 = ∞`, for exponents given as reciprocals.
fn reciprocal(x: f64) -> f64 {
    if x == 0.0 {
        f64::INFINITY
    } else {
        1.0 / x
    }
}

fn frequency(i: usize, size: usize) -> i64 {
    if i <= size / 2 {
        i as i64
    } else {
        i as i64 - size as i64
    }
}

fn index_of(k: i64, size: usize) -> usize {
    k.rem_euclid(size as i64) as usize
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(size: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }
}

/// In-place transform of an `n`-dimensional row-major array along every axis.
fn transform(data: &mut [Complex64], n: usize, size: usize, fft: &Arc<dyn Fft<f64>>) {
    if n == 1 {
        fft.process(data);
        return;
    }
    for row in data.chunks_mut(size) {
        fft.process(row);
    }
    let mut col = vec![Complex64::default(); size];
    for j in 0..size {
        for i in 0..size {
            col[i] = data[i * size + j];
        }
        fft.process(&mut col);
        for i in 0..size {
            data[i * size + j] = col[i];
        }
    }
}

/// A real field on a periodic grid together with its spectrum.
#[derive(Debug, Clone)]
pub struct PeriodicField {
    n: usize,
    size: usize,
    band_limit: usize,
    values: Vec<f64>,
    /// Normalised Fourier coefficients (`û(k)`, so `u = Σ û(k)e^{2πik·x}`).
    spectrum: Vec<Complex64>,
}

impl PeriodicField {
    fn check_dims(n: usize, size: usize, band_limit: usize) -> Result<(), EstimatesError> {
        if !(1..=2).contains(&n) {
            return Err(EstimatesError::InvalidDimension(n));
        }
        if size <= 2 * band_limit {
            return Err(EstimatesError::GridTooSmall { size, band_limit });
        }
        Ok(())
    }

    fn len(n: usize, size: usize) -> usize {
        size.pow(n as u32)
    }

    fn from_spectrum(n: usize, size: usize, band_limit: usize, spectrum: Vec<Complex64>) -> Self {
        let plans = Plans::new(size);
        let mut data = spectrum.clone();
        transform(&mut data, n, size, &plans.inverse);
        let values = data.iter().map(|c| c.re).collect();
        Self {
            n,
            size,
            band_limit,
            values,
            spectrum,
        }
    }

    /// Samples `f` on the grid (points `x_i = i/size` per axis).
    pub fn from_fn(
        n: usize,
        size: usize,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self, EstimatesError> {
        Self::check_dims(n, size, 0)?;
        let h = 1.0 / size as f64;
        let values = (0..Self::len(n, size))
            .map(|idx| {
                if n == 1 {
                    f(&[idx as f64 * h])
                } else {
                    f(&[(idx / size) as f64 * h, (idx % size) as f64 * h])
                }
            })
            .collect();
        Self::from_values(n, size, values)
    }

    /// Wraps grid values (row-major for `n = 2`); the band limit is the
    /// largest frequency whose coefficient exceeds `10⁻¹²` of the largest one.
    pub fn from_values(n: usize, size: usize, values: Vec<f64>) -> Result<Self, EstimatesError> {
        Self::check_dims(n, size, 0)?;
        let len = Self::len(n, size);
        if values.len() != len {
            return Err(EstimatesError::InvalidExponent(format!(
                "expected {len} grid values, got {}",
                values.len()
            )));
        }
        let plans = Plans::new(size);
        let mut spec: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        transform(&mut spec, n, size, &plans.forward);
        let scale = 1.0 / len as f64;
        spec.iter_mut().for_each(|c| *c *= scale);
        let peak = spec.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let mut band = 0usize;
        for (idx, c) in spec.iter().enumerate() {
            if c.norm() > 1e-12 * peak {
                let kmax = Self::multi_index(n, size, idx)
                    .iter()
                    .map(|k| k.unsigned_abs() as usize)
                    .max()
                    .unwrap_or(0);
                band = band.max(kmax);
            }
        }
        if size <= 2 * band {
            return Err(EstimatesError::GridTooSmall {
                size,
                band_limit: band,
            });
        }
        Ok(Self {
            n,
            size,
            band_limit: band,
            values,
            spectrum: spec,
        })
    }

    /// The field multiplied by a constant.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| c * v).collect(),
            spectrum: self.spectrum.iter().map(|z| z * c).collect(),
            ..self.clone()
        }
    }

    /// A random real field with Fourier modes `|k_i| ≤ band_limit` and
    /// amplitudes decaying like `1/(1+|k|²)`.  The coefficients depend only on
    /// `(seed, n, band_limit)`, not on the grid size.
    pub fn random_band_limited(
        seed: u64,
        n: usize,
        size: usize,
        band_limit: usize,
    ) -> Result<Self, EstimatesError> {
        Self::check_dims(n, size, band_limit)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0000_0000_0000 ^ ((n as u64) << 32));
        let b = band_limit as i64;
        let mut spectrum = vec![Complex64::default(); Self::len(n, size)];
        let lattice: Vec<Vec<i64>> = if n == 1 {
            (0..=b).map(|k| vec![k]).collect()
        } else {
            (0..=b)
                .flat_map(|k0| (-b..=b).map(move |k1| vec![k0, k1]))
                .filter(|k| k[0] > 0 || k[1] >= 0)
                .collect()
        };
        for k in lattice {
            let k2: i64 = k.iter().map(|x| x * x).sum();
            let amp = 1.0 / (1.0 + k2 as f64);
            let re = rng.random_range(-1.0..1.0) * amp;
            let im = if k2 == 0 { 0.0 } else { rng.random_range(-1.0..1.0) * amp };
            let c = Complex64::new(re, im);
            let pos = Self::flat_index(n, size, &k);
            let neg_k: Vec<i64> = k.iter().map(|x| -x).collect();
            let neg = Self::flat_index(n, size, &neg_k);
            spectrum[pos] = c;
            spectrum[neg] = c.conj();
        }
        Ok(Self::from_spectrum(n, size, band_limit, spectrum))
    }

    /// The same field sampled on another grid (exact for band-limited fields).
    pub fn resampled(&self, size: usize) -> Result<Self, EstimatesError> {
        Self::check_dims(self.n, size, self.band_limit)?;
        let mut spectrum = vec![Complex64::default(); Self::len(self.n, size)];
        for (idx, c) in self.spectrum.iter().enumerate() {
            let k = Self::multi_index(self.n, self.size, idx);
            if k.iter().all(|x| x.unsigned_abs() as usize <= self.band_limit) {
                spectrum[Self::flat_index(self.n, size, &k)] = *c;
            }
        }
        Ok(Self::from_spectrum(self.n, size, self.band_limit, spectrum))
    }

    fn flat_index(n: usize, size: usize, k: &[i64]) -> usize {
        if n == 1 {
            index_of(k[0], size)
        } else {
            index_of(k[0], size) * size + index_of(k[1], size)
        }
    }

    fn multi_index(n: usize, size: usize, idx: usize) -> Vec<i64> {
        if n == 1 {
            vec![frequency(idx, size)]
        } else {
            vec![frequency(idx / size, size), frequency(idx % size, size)]
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn size(&self) -> usize {
        self.size
    }
    pub fn band_limit(&self) -> usize {
        self.band_limit
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Spectral partial derivative with the given order along each axis.
    pub fn partial(&self, orders: &[usize]) -> Vec<f64> {
        assert_eq!(orders.len(), self.n, "one order per axis");
        if orders.iter().all(|&o| o == 0) {
            return self.values.clone();
        }
        let b = self.band_limit as i64;
        let mut data: Vec<Complex64> = self
            .spectrum
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let k = Self::multi_index(self.n, self.size, idx);
                if k.iter().any(|x| x.abs() > b) {
                    return Complex64::default();
                }
                let mut factor = Complex64::new(1.0, 0.0);
                for (kk, &o) in k.iter().zip(orders) {
                    factor *= Complex64::new(0.0, 2.0 * PI * *kk as f64).powu(o as u32);
                }
                c * factor
            })
            .collect();
        let plans = Plans::new(self.size);
        transform(&mut data, self.n, self.size, &plans.inverse);
        data.iter().map(|c| c.re).collect()
    }

    /// Pointwise `|∇ᵏu|`, the norm of the full `k`-th derivative tensor
    /// (sum over ordered index tuples).
    pub fn derivative_norm(&self, k: usize) -> Vec<f64> {
        if self.n == 1 {
            return self.partial(&[k]).iter().map(|v| v.abs()).collect();
        }
        let mut acc = vec![0.0; self.values.len()];
        let mut binom = 1.0;
        for a in 0..=k {
            // Number of ordered tuples with `a` first-axis indices: C(k, a).
            if a > 0 {
                binom *= (k - a + 1) as f64 / a as f64;
            }
            let d = self.partial(&[a, k - a]);
            for (s, v) in acc.iter_mut().zip(&d) {
                *s += binom * v * v;
            }
        }
        acc.iter().map(|v| v.sqrt()).collect()
    }

    /// `‖∇ᵏu‖_p`.
    pub fn derivative_lp(&self, k: usize, p: f64) -> f64 {
        lp_norm(&self.derivative_norm(k), p)
    }
}

/// `γ_k = (1 − k/m)α + (k/m)β`.
pub fn interpolation_gamma(k: usize, m: usize, alpha: f64, beta: f64) -> f64 {
    let t = k as f64 / m as f64;
    (1.0 - t) * alpha + t * beta
}

fn check_interpolation(k: usize, m: usize, alpha: f64, beta: f64) -> Result<(), EstimatesError> {
    if m == 0 || k > m {
        return Err(EstimatesError::InvalidExponent(format!("need 0 ≤ k ≤ m, m ≥ 1 (k = {k}, m = {m})")));
    }
    if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) || (alpha == 0.0 && beta == 0.0) {
        return Err(EstimatesError::InvalidExponent(format!(
            "α, β must lie in [0, 1], not both 0 (α = {alpha}, β = {beta})"
        )));
    }
    Ok(())
}

/// `‖∇ᵏu‖_{1/γ_k} / (‖u‖_{1/α}^{1−k/m} ‖∇ᵐu‖_{1/β}^{k/m})`.
///
/// A vanishing left side gives ratio 0 (e.g. constant fields with `k ≥ 1`).
pub fn interpolation_ratio(
    field: &PeriodicField,
    k: usize,
    m: usize,
    alpha: f64,
    beta: f64,
) -> Result<f64, EstimatesError> {
    check_interpolation(k, m, alpha, beta)?;
    let base = field.derivative_lp(0, reciprocal(alpha));
    if base == 0.0 {
        return Err(EstimatesError::DegenerateNorm("zero field"));
    }
    let lhs = field.derivative_lp(k, reciprocal(interpolation_gamma(k, m, alpha, beta)));
    if lhs == 0.0 {
        return Ok(0.0);
    }
    let t = k as f64 / m as f64;
    let rhs = base.powf(1.0 - t) * field.derivative_lp(m, reciprocal(beta)).powf(t);
    if rhs == 0.0 {
        return Err(EstimatesError::DegenerateNorm("right-hand side vanishes"));
    }
    Ok(lhs / rhs)
}

/// The sequence `f(k) = ‖∇ᵏu‖_{1/γ_k}`, `k = 0…m`, to which the discrete
/// log-convexity lemma is applied in the interpolation argument.
pub fn interpolation_sequence(
    field: &PeriodicField,
    m: usize,
    alpha: f64,
    beta: f64,
) -> Result<Vec<f64>, EstimatesError> {
    check_interpolation(0, m, alpha, beta)?;
    Ok((0..=m)
        .map(|k| field.derivative_lp(k, reciprocal(interpolation_gamma(k, m, alpha, beta))))
        .collect())
}

/// Smallest `C` with `f(k) ≤ C·√(f(k−1)f(k+1))` for all interior `k`.
pub fn hamilton_constant(f: &[f64]) -> f64 {
    (1..f.len().saturating_sub(1))
        .map(|k| f[k] / (f[k - 1] * f[k + 1]).sqrt())
        .fold(0.0, f64::max)
}

/// Checks the hypothesis `f(k) ≤ C·√(f(k−1)f(k+1))` (0 < k < m), then returns
/// whether `f(k) ≤ C^{k(m−k)} f(0)^{1−k/m} f(m)^{k/m}` holds for every `k`,
/// both with relative tolerance `10⁻¹²` (compared in logarithms).
pub fn hamilton_sequence_check(f: &[f64], c: f64) -> Result<bool, EstimatesError> {
    if f.is_empty() || !(c.is_finite() && c > 0.0) || f.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(EstimatesError::NonPositive);
    }
    let m = f.len() - 1;
    let lf: Vec<f64> = f.iter().map(|v| v.ln()).collect();
    let lc = c.ln();
    let tol = |x: f64| 1e-12 * (1.0 + x.abs());
    for k in 1..m {
        let bound = lc + 0.5 * (lf[k - 1] + lf[k + 1]);
        if lf[k] > bound + tol(bound) {
            return Err(EstimatesError::HypothesisViolated {
                k,
                value: f[k],
                bound: bound.exp(),
            });
        }
    }
    if m == 0 {
        return Ok(true);
    }
    let mf = m as f64;
    Ok((0..=m).all(|k| {
        let kf = k as f64;
        let bound = kf * (mf - kf) * lc + (1.0 - kf / mf) * lf[0] + kf / mf * lf[m];
        lf[k] <= bound + tol(bound)
    }))
}

/// `α = (1/m − 1/p)/(1/m − 1/q + 1/n)`.
pub fn sobolev_alpha(n: usize, m: f64, p: f64, q: f64) -> f64 {
    (1.0 / m - reciprocal(p)) / (1.0 / m - 1.0 / q + 1.0 / n as f64)
}

/// Validates the exponent regime of the multiplicative Sobolev inequality:
/// `q ≥ 2`, `2 ≤ m ≤ p`, and `p ≤ nq/(n−q)` if `q < n`, `p < ∞` if `q = n`.
pub fn check_sobolev_regime(n: usize, m: f64, p: f64, q: f64) -> Result<(), EstimatesError> {
    let nf = n as f64;
    let bad = |msg: String| Err(EstimatesError::InvalidExponent(msg));
    if !(q >= 2.0) || q.is_infinite() {
        return bad(format!("need finite q ≥ 2, got {q}"));
    }
    if !(m >= 2.0 && m <= p) || m.is_infinite() {
        return bad(format!("need 2 ≤ m ≤ p with m finite, got m = {m}, p = {p}"));
    }
    if q < nf && p > nf * q / (nf - q) {
        return bad(format!("q < n requires p ≤ nq/(n−q) = {}", nf * q / (nf - q)));
    }
    if q == nf && p.is_infinite() {
        return bad("q = n requires p < ∞".into());
    }
    Ok(())
}

/// `‖u‖_p / (‖u‖_m^{1−α}(A‖∇u‖_q + B‖u‖_q)^α)` on the torus.
pub fn sobolev_chain_ratio(
    field: &PeriodicField,
    p: f64,
    q: f64,
    m: f64,
    a: f64,
    b: f64,
) -> Result<f64, EstimatesError> {
    let n = field.n();
    check_sobolev_regime(n, m, p, q)?;
    if !(a > 0.0) || !(b >= 0.0) {
        return Err(EstimatesError::InvalidExponent(format!("need A > 0, B ≥ 0 (A = {a}, B = {b})")));
    }
    let alpha = sobolev_alpha(n, m, p, q);
    let lhs = field.derivative_lp(0, p);
    let rhs = field.derivative_lp(0, m).powf(1.0 - alpha)
        * (a * field.derivative_lp(1, q) + b * field.derivative_lp(0, q)).powf(alpha);
    if rhs == 0.0 {
        return Err(EstimatesError::DegenerateNorm("right-hand side vanishes"));
    }
    Ok(lhs / rhs)
}

/// Critical Sobolev exponent `2n/(n−2)`, taken as `∞` for `n ≤ 2`.
pub fn critical_exponent(n: usize) -> f64 {
    if n <= 2 {
        f64::INFINITY
    } else {
        2.0 * n as f64 / (n as f64 - 2.0)
    }
}

/// Empirical best `B` with `‖u‖_{p*} ≤ A‖∇u‖₂ + B‖u‖₂` over the given fields
/// and the constants, which alone force `B ≥ 1` on the unit-volume torus.
pub fn calibrate_b(fields: &[PeriodicField], a: f64) -> f64 {
    fields
        .iter()
        .map(|f| {
            let ps = critical_exponent(f.n());
            (f.derivative_lp(0, ps) - a * f.derivative_lp(1, 2.0)) / f.derivative_lp(0, 2.0)
        })
        .fold(1.0, f64::max)
}

/// Residual of one integration by parts along `axis`:
/// `∫ ∂^{k}u · (∂^{i}v ∂^{j}w) = −∫ ∂^{k−1}u · ∂(∂^{i}v ∂^{j}w)`,
/// relative to the size of the terms.  The product is differentiated
/// spectrally, which is exact when the grid resolves the product's band.
pub fn integration_by_parts_residual(
    u: &PeriodicField,
    v: &PeriodicField,
    w: &PeriodicField,
    axis: usize,
    k: usize,
    i: usize,
    j: usize,
) -> Result<f64, EstimatesError> {
    let n = u.n();
    if v.n() != n || w.n() != n || v.size() != u.size() || w.size() != u.size() || axis >= n || k == 0 {
        return Err(EstimatesError::InvalidExponent("incompatible fields or orders".into()));
    }
    let band = u.band_limit().max(v.band_limit() + w.band_limit());
    if u.size() <= 2 * band {
        return Err(EstimatesError::GridTooSmall {
            size: u.size(),
            band_limit: band,
        });
    }
    let along = |order: usize| {
        let mut o = vec![0; n];
        o[axis] = order;
        o
    };
    let du = u.partial(&along(k));
    let du1 = u.partial(&along(k - 1));
    let prod: Vec<f64> = v
        .partial(&along(i))
        .iter()
        .zip(w.partial(&along(j)))
        .map(|(a, b)| a * b)
        .collect();
    let prod_field = PeriodicField::from_values(n, u.size(), prod.clone())?;
    let dprod = prod_field.partial(&along(1));
    let len = du.len() as f64;
    let lhs: f64 = du.iter().zip(&prod).map(|(a, b)| a * b).sum::<f64>() / len;
    let rhs: f64 = -du1.iter().zip(&dprod).map(|(a, b)| a * b).sum::<f64>() / len;
    let scale = lp_norm(&du, 2.0) * lp_norm(&prod, 2.0) + lp_norm(&du1, 2.0) * lp_norm(&dprod, 2.0);
    Ok(if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale })
}

/// Which inequality a corpus exercises.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Inequality {
    Interpolation { k: usize, m: usize, alpha: f64, beta: f64 },
    /// `B` is calibrated over the corpus itself before the ratios are taken.
    MultiplicativeSobolev { p: f64, q: f64, m: f64, a: f64 },
}

/// A seeded family of random band-limited fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub name: String,
    pub n: usize,
    pub size: usize,
    pub band_limit: usize,
    pub seeds: u64,
    pub inequality: Inequality,
}

/// Ratios of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusResult {
    pub name: String,
    pub size: usize,
    /// `(seed, ratio)`.
    pub ratios: Vec<(u64, f64)>,
    pub max: f64,
    pub argmax: u64,
    /// Calibrated Sobolev `B`, for Sobolev corpora.
    pub calibrated_b: Option<f64>,
}

impl CorpusResult {
    /// CSV with columns `seed,ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,ratio\n");
        for (s, r) in &self.ratios {
            out.push_str(&format!("{s},{r:e}\n"));
        }
        out
    }
}

/// Evaluates a corpus on its own grid size.
pub fn run_corpus(spec: &CorpusSpec) -> Result<CorpusResult, EstimatesError> {
    run_corpus_at(spec, spec.size)
}

/// Evaluates a corpus on a given grid size (for refinement studies).
pub fn run_corpus_at(spec: &CorpusSpec, size: usize) -> Result<CorpusResult, EstimatesError> {
    let fields = (0..spec.seeds)
        .map(|s| PeriodicField::random_band_limited(s, spec.n, size, spec.band_limit))
        .collect::<Result<Vec<_>, _>>()?;
    let (ratios, calibrated_b) = match spec.inequality {
        Inequality::Interpolation { k, m, alpha, beta } => {
            let r = fields
                .iter()
                .enumerate()
                .map(|(s, f)| Ok((s as u64, interpolation_ratio(f, k, m, alpha, beta)?)))
                .collect::<Result<Vec<_>, EstimatesError>>()?;
            (r, None)
        }
        Inequality::MultiplicativeSobolev { p, q, m, a } => {
            let b = calibrate_b(&fields, a);
            let r = fields
                .iter()
                .enumerate()
                .map(|(s, f)| Ok((s as u64, sobolev_chain_ratio(f, p, q, m, a, b)?)))
                .collect::<Result<Vec<_>, EstimatesError>>()?;
            (r, Some(b))
        }
    };
    let (argmax, max) = ratios
        .iter()
        .copied()
        .fold((0, f64::NEG_INFINITY), |acc, (s, r)| if r > acc.1 { (s, r) } else { acc });
    Ok(CorpusResult {
        name: spec.name.clone(),
        size,
        ratios,
        max,
        argmax,
        calibrated_b,
    })
}

/// The shipped corpora whose maxima are pinned as regression fixtures.
pub fn standard_corpora() -> Vec<CorpusSpec> {
    let interp = Inequality::Interpolation {
        k: 1,
        m: 2,
        alpha: 0.5,
        beta: 0.5,
    };
    vec![
        CorpusSpec {
            name: "interpolation_1d".into(),
            n: 1,
            size: 64,
            band_limit: 8,
            seeds: 1000,
            inequality: interp,
        },
        CorpusSpec {
            name: "interpolation_2d".into(),
            n: 2,
            size: 64,
            band_limit: 6,
            seeds: 1000,
            inequality: interp,
        },
        CorpusSpec {
            name: "interpolation_2d_mixed".into(),
            n: 2,
            size: 64,
            band_limit: 6,
            seeds: 200,
            inequality: Inequality::Interpolation {
                k: 2,
                m: 3,
                alpha: 0.25,
                beta: 0.5,
            },
        },
        CorpusSpec {
            name: "sobolev_1d".into(),
            n: 1,
            size: 64,
            band_limit: 8,
            seeds: 1000,
            inequality: Inequality::MultiplicativeSobolev {
                p: f64::INFINITY,
                q: 2.0,
                m: 2.0,
                a: 0.05,
            },
        },
        CorpusSpec {
            name: "sobolev_2d".into(),
            n: 2,
            size: 64,
            band_limit: 6,
            seeds: 1000,
            inequality: Inequality::MultiplicativeSobolev {
                p: 4.0,
                q: 2.0,
                m: 2.0,
                a: 0.05,
            },
        },
    ]
}

/// Bit pattern of a float as a `0x…` hex string (fixture format).
pub fn f64_to_hex(x: f64) -> String {
    format!("{:#018x}", x.to_bits())
}

/// Inverse of [`f64_to_hex`].
pub fn f64_from_hex(s: &str) -> Option<f64> {
    u64::from_str_radix(s.trim_start_matches("0x"), 16)
        .ok()
        .map(f64::from_bits)
}

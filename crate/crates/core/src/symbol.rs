//! Principal symbols of the gauged fourth-order curvature flows and the
//! strong-ellipticity trichotomy.
//!
//! The gauged linearization of `P(g) = δδ̃Rm + aΔR·g + b∇²R + Rm∗Rm` has
//! principal symbol `−½‖ξ‖⁴·Id + a⟨R_ξ,·⟩R_ξ` on symmetric 2-tensors, where
//! `R_ξ = ξ⊗ξ − ‖ξ‖²g`.  Since `‖R_ξ‖² = (n−1)‖ξ‖⁴`, the only non-trivial
//! eigenvalue is `(−½ + a(n−1))‖ξ‖⁴`, and the sign of `a − 1/(2(n−1))` decides
//! everything.  The coefficient `b` only enters the gauge field and never
//! affects the classification.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

use crate::tensor::Sym2;

/// Errors raised by the symbol analyzer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymbolError {
    #[error("dimension must be at least 3, got {0}")]
    DimensionTooSmall(usize),
    #[error("covector has {got} entries, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("the symbol is undefined at ξ = 0")]
    ZeroCovector,
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
}

/// `R_ξ = ξ⊗ξ − ‖ξ‖² g` for the Euclidean metric.
pub fn r_xi(xi: &[f64]) -> Sym2 {
    let n = xi.len();
    let norm2: f64 = xi.iter().map(|x| x * x).sum();
    Sym2::from_fn(n, |i, j| xi[i] * xi[j] - if i == j { norm2 } else { 0.0 })
}

/// Orthonormal coordinates of a symmetric tensor for `⟨u,v⟩ = u_ij v_ij`:
/// diagonal entries, then `√2·u_ij` for `i < j`.
pub fn sym2_coordinates(u: &Sym2) -> DVector<f64> {
    let n = u.n();
    let mut v = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        v.push(u.get(i, i));
    }
    for i in 0..n {
        for j in i + 1..n {
            v.push(std::f64::consts::SQRT_2 * u.get(i, j));
        }
    }
    DVector::from_vec(v)
}

/// Inverse of [`sym2_coordinates`].
pub fn sym2_from_coordinates(n: usize, v: &DVector<f64>) -> Sym2 {
    let mut comps = vec![0.0; n * n];
    for i in 0..n {
        comps[i * n + i] = v[i];
    }
    let mut k = n;
    for i in 0..n {
        for j in i + 1..n {
            let x = v[k] / std::f64::consts::SQRT_2;
            comps[i * n + j] = x;
            comps[j * n + i] = x;
            k += 1;
        }
    }
    Sym2::new(n, comps).expect("constructed symmetric")
}

/// The gauged principal symbol at a covector.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolOperator {
    n: usize,
    a: f64,
    xi: Vec<f64>,
    matrix: DMatrix<f64>,
}

impl SymbolOperator {
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }
    /// Matrix in the orthonormal basis of [`sym2_coordinates`].
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Applies the symbol to a symmetric tensor.
    pub fn apply(&self, u: &Sym2) -> Sym2 {
        sym2_from_coordinates(self.n, &(&self.matrix * sym2_coordinates(u)))
    }

    /// Eigenvalues from a dense symmetric eigensolve, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// Closed-form eigenvalues `(bulk, special)`: `−½‖ξ‖⁴` with multiplicity
    /// `n(n+1)/2 − 1`, and `(−½ + a(n−1))‖ξ‖⁴` on the span of `R_ξ`.
    pub fn closed_form_eigenvalues(&self) -> (f64, f64) {
        let x4 = self.xi.iter().map(|x| x * x).sum::<f64>().powi(2);
        (-0.5 * x4, (-0.5 + self.a * (self.n as f64 - 1.0)) * x4)
    }
}

fn check_n(n: usize) -> Result<(), SymbolError> {
    if n < 3 {
        Err(SymbolError::DimensionTooSmall(n))
    } else {
        Ok(())
    }
}

/// `−½‖ξ‖⁴·Id + a⟨R_ξ,·⟩R_ξ` on `Sym²(ℝⁿ)`.
pub fn symbol(n: usize, a: f64, xi: &[f64]) -> Result<SymbolOperator, SymbolError> {
    check_n(n)?;
    if xi.len() != n {
        return Err(SymbolError::DimensionMismatch {
            expected: n,
            got: xi.len(),
        });
    }
    let norm2: f64 = xi.iter().map(|x| x * x).sum();
    if norm2 == 0.0 {
        return Err(SymbolError::ZeroCovector);
    }
    let r = sym2_coordinates(&r_xi(xi));
    let dim = n * (n + 1) / 2;
    let matrix = DMatrix::identity(dim, dim) * (-0.5 * norm2 * norm2) + &r * r.transpose() * a;
    Ok(SymbolOperator {
        n,
        a,
        xi: xi.to_vec(),
        matrix,
    })
}

/// Outcome of the trichotomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EllipticityClass {
    StronglyElliptic,
    NotElliptic,
    NotStronglyElliptic,
}

/// Classification of a coefficient `a` in dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipticityVerdict {
    pub n: usize,
    pub a: f64,
    pub class: EllipticityClass,
    /// `1/(2(n−1))`.
    pub threshold: f64,
    /// `threshold − a`: positive exactly in the strongly elliptic case.
    pub margin: f64,
}

/// `1/(2(n−1))`.
pub fn threshold(n: usize) -> f64 {
    1.0 / (2.0 * (n as f64 - 1.0))
}

/// Exact trichotomy on the sign of `a − 1/(2(n−1))`.
pub fn classify(n: usize, a: f64) -> Result<EllipticityVerdict, SymbolError> {
    classify_with_tolerance(n, a, 0.0)
}

/// Trichotomy treating `|a − threshold| ≤ tol` as the degenerate case.
pub fn classify_with_tolerance(n: usize, a: f64, tol: f64) -> Result<EllipticityVerdict, SymbolError> {
    check_n(n)?;
    if !a.is_finite() {
        return Err(SymbolError::OutOfRange(format!("a = {a}")));
    }
    let t = threshold(n);
    let margin = t - a;
    let class = if margin.abs() <= tol {
        EllipticityClass::NotElliptic
    } else if margin > 0.0 {
        EllipticityClass::StronglyElliptic
    } else {
        EllipticityClass::NotStronglyElliptic
    };
    Ok(EllipticityVerdict {
        n,
        a,
        class,
        threshold: t,
        margin,
    })
}

/// Named gradient flows and the coefficient `a` of `ΔR·g` in their operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FlowFunctional {
    /// `(1−β)F_Rm + β(F_Ric − ¼F_R) − (a/2)F_R`, any `n ≥ 3`.
    CurvatureMix { beta: f64, a: f64 },
    /// `((n−2)/(n−3))βF_W − 2(1−β)F_2 + (α/(4(n−1)))F_R`, `n ≥ 4`.
    ConformalMix { n: usize, beta: f64, alpha: f64 },
    /// Dimension three: `−2F_2 + (α/8)F_R`.
    Dim3 { alpha: f64 },
    /// Dimension four: `2(1−α)F_W + αF_Ric0`.
    Dim4 { alpha: f64 },
}

impl FlowFunctional {
    /// Dimension the coefficient refers to, when fixed by the family.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            FlowFunctional::CurvatureMix { .. } => None,
            FlowFunctional::ConformalMix { n, .. } => Some(*n),
            FlowFunctional::Dim3 { .. } => Some(3),
            FlowFunctional::Dim4 { .. } => Some(4),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<(), SymbolError> {
    if alpha.is_finite() && alpha >= 0.0 {
        Ok(())
    } else {
        Err(SymbolError::OutOfRange(format!("alpha = {alpha} must be >= 0")))
    }
}

/// Coefficient `a` of `ΔR·g` (equal to the `∇²R` coefficient `b`) in the
/// operator of a named gradient flow.
pub fn flow_coefficient(f: FlowFunctional) -> Result<f64, SymbolError> {
    let check_beta = |beta: f64| {
        if (0.0..=1.0).contains(&beta) {
            Ok(())
        } else {
            Err(SymbolError::OutOfRange(format!("beta = {beta} not in [0, 1]")))
        }
    };
    match f {
        FlowFunctional::CurvatureMix { beta, a } => {
            check_beta(beta)?;
            if !a.is_finite() {
                return Err(SymbolError::OutOfRange(format!("a = {a}")));
            }
            Ok(a)
        }
        FlowFunctional::ConformalMix { n, beta, alpha } => {
            check_beta(beta)?;
            check_alpha(alpha)?;
            if n < 4 {
                return Err(SymbolError::OutOfRange(format!(
                    "conformal mix needs n >= 4, got {n}"
                )));
            }
            Ok((1.0 - alpha) / (2.0 * (n as f64 - 1.0)))
        }
        FlowFunctional::Dim3 { alpha } => {
            check_alpha(alpha)?;
            Ok((1.0 - alpha) / 4.0)
        }
        FlowFunctional::Dim4 { alpha } => {
            check_alpha(alpha)?;
            Ok((1.0 - alpha) / 6.0)
        }
    }
}

//! Closed-form homogeneous geometries.
//!
//! Every model is described in an orthonormal frame in which its curvature is
//! constant, so integrals of curvature quantities are the pointwise value
//! times the volume.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::functionals;
use crate::tensor::{decompose, kulkarni_nomizu, CurvaturePoint, DoubleForm22, Sym2, TensorError};

/// Errors raised by model constructors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("parameter `{name}` must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("Euler characteristic is unknown for model `{0}`")]
    MissingEulerCharacteristic(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Volume of the unit round 3-sphere.
pub const VOL_S3: f64 = 2.0 * PI * PI;
/// Volume of the unit round 4-sphere.
pub const VOL_S4: f64 = 8.0 * PI * PI / 3.0;
/// Volume of `S²(1) × S²(1)`.
pub const VOL_S2XS2: f64 = 16.0 * PI * PI;

/// A homogeneous geometry with constant curvature data in an orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousModel {
    name: String,
    curvature: CurvaturePoint,
    volume: f64,
    euler_char: Option<i32>,
    params: Vec<(String, f64)>,
    nabla_rm_norm_sq: f64,
}

impl HomogeneousModel {
    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn n(&self) -> usize {
        self.curvature.n()
    }
    pub fn curvature(&self) -> &CurvaturePoint {
        &self.curvature
    }
    pub fn volume(&self) -> f64 {
        self.volume
    }
    /// Euler characteristic, known for the four-dimensional closed models.
    pub fn euler_char(&self) -> Option<i32> {
        self.euler_char
    }
    /// Named construction parameters.
    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }
    /// `‖∇Rm‖²` (constant on a homogeneous space).
    pub fn nabla_rm_norm_sq(&self) -> f64 {
        self.nabla_rm_norm_sq
    }
    /// Largest absolute curvature component in the orthonormal frame, used as
    /// the sup-norm proxy `rm_sup`.
    pub fn rm_sup(&self) -> f64 {
        self.curvature.rm().max_abs()
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, CatalogError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(CatalogError::NonPositive { name, value })
    }
}

/// Curvature tensor with the given sectional curvatures on coordinate planes
/// spanned by pairs inside one block; zero across blocks.
fn block_space_forms(blocks: &[(usize, f64)]) -> DoubleForm22 {
    let n: usize = blocks.iter().map(|b| b.0).sum();
    let mut comps = vec![0.0; n.pow(4)];
    let mut start = 0;
    for &(dim, k) in blocks {
        for i in start..start + dim {
            for j in start..start + dim {
                if i == j {
                    continue;
                }
                let set = |c: &mut Vec<f64>, a: usize, b: usize, cc: usize, d: usize, v: f64| {
                    c[((a * n + b) * n + cc) * n + d] = v;
                };
                set(&mut comps, i, j, i, j, k);
                set(&mut comps, i, j, j, i, -k);
            }
        }
        start += dim;
    }
    DoubleForm22::new(n, comps).expect("block space form has curvature symmetries")
}

/// Round sphere `Sⁿ(r)`, `n ∈ {3, 4}`.
pub fn round_sphere(n: usize, r: f64) -> Result<HomogeneousModel, CatalogError> {
    let r = positive("r", r)?;
    let (vol, chi) = match n {
        3 => (VOL_S3 * r.powi(3), None),
        4 => (VOL_S4 * r.powi(4), Some(2)),
        _ => return Err(CatalogError::UnsupportedDimension(n)),
    };
    let rm = block_space_forms(&[(n, 1.0 / (r * r))]);
    Ok(HomogeneousModel {
        name: format!("S{n}"),
        curvature: decompose(&rm, &Sym2::identity(n))?,
        volume: vol,
        euler_char: chi,
        params: vec![("r".into(), r)],
        nabla_rm_norm_sq: 0.0,
    })
}

/// Flat torus with the given side lengths (`n = sides.len() ∈ {3, 4}`).
pub fn flat_torus(sides: &[f64]) -> Result<HomogeneousModel, CatalogError> {
    let n = sides.len();
    if !(3..=4).contains(&n) {
        return Err(CatalogError::UnsupportedDimension(n));
    }
    let mut params = Vec::with_capacity(n);
    for (i, &s) in sides.iter().enumerate() {
        positive("side", s)?;
        params.push((format!("side{}", i + 1), s));
    }
    Ok(HomogeneousModel {
        name: format!("T{n}"),
        curvature: decompose(&DoubleForm22::zeros(n), &Sym2::identity(n))?,
        volume: sides.iter().product(),
        euler_char: if n == 4 { Some(0) } else { None },
        params,
        nabla_rm_norm_sq: 0.0,
    })
}

/// Riemannian product `S²(r) × S²(s)`.
pub fn sphere_product(r: f64, s: f64) -> Result<HomogeneousModel, CatalogError> {
    let r = positive("r", r)?;
    let s = positive("s", s)?;
    let rm = block_space_forms(&[(2, 1.0 / (r * r)), (2, 1.0 / (s * s))]);
    Ok(HomogeneousModel {
        name: "S2xS2".into(),
        curvature: decompose(&rm, &Sym2::identity(4))?,
        volume: VOL_S2XS2 * r * r * s * s,
        euler_char: Some(4),
        params: vec![("r".into(), r), ("s".into(), s)],
        nabla_rm_norm_sq: 0.0,
    })
}

/// Structure constants `c_ijk = ⟨[e_i, e_j], e_k⟩` of the orthonormal Milnor
/// frame of the left-invariant metric `diag(a, b, c)` on SU(2), with the
/// bracket normalization `[X_i, X_j] = 2ε_ijk X_k`.
pub fn milnor_structure_constants(a: f64, b: f64, c: f64) -> [[[f64; 3]; 3]; 3] {
    let s = (a * b * c).sqrt();
    let lam = [2.0 * a / s, 2.0 * b / s, 2.0 * c / s];
    let mut out = [[[0.0; 3]; 3]; 3];
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        out[i][j][k] = lam[k];
        out[j][i][k] = -lam[k];
    }
    out
}

/// Connection coefficients `Γ_ijk = ⟨∇_{e_i} e_j, e_k⟩` of an orthonormal frame
/// with constant structure constants.
pub fn frame_connection(cst: &[[[f64; 3]; 3]; 3]) -> [[[f64; 3]; 3]; 3] {
    let mut g = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                g[i][j][k] = 0.5 * (cst[i][j][k] - cst[j][k][i] + cst[k][i][j]);
            }
        }
    }
    g
}

/// `‖∇Rm‖²` of a constant-coefficient curvature tensor in a frame with
/// connection coefficients `gamma`.
fn nabla_rm_norm_sq(rm: &DoubleForm22, gamma: &[[[f64; 3]; 3]; 3]) -> f64 {
    let r = |i: usize, j: usize, k: usize, l: usize| rm.get(i, j, k, l);
    let mut total = 0.0;
    for a in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let mut v = 0.0;
                        for m in 0..3 {
                            v -= gamma[a][i][m] * r(m, j, k, l)
                                + gamma[a][j][m] * r(i, m, k, l)
                                + gamma[a][k][m] * r(i, j, m, l)
                                + gamma[a][l][m] * r(i, j, k, m);
                        }
                        total += v * v;
                    }
                }
            }
        }
    }
    0.25 * total
}

/// Left-invariant metric `diag(a, b, c)` on SU(2) in a Milnor frame.
///
/// With the bracket `[X_i, X_j] = 2ε_ijk X_k`, `a = b = c = 1` is the unit
/// round 3-sphere and the volume is `2π²√(abc)`.  Ricci curvature follows
/// Milnor's closed form `Ric(e₁,e₁) = 2μ₂μ₃` (cyclically) with
/// `μ_i = ½(λ₁+λ₂+λ₃) − λ_i`, and in dimension three the full curvature is
/// `Rm = Ric∧g − (R/4) g∧g`.
pub fn su2_milnor(a: f64, b: f64, c: f64) -> Result<HomogeneousModel, CatalogError> {
    let a = positive("a", a)?;
    let b = positive("b", b)?;
    let c = positive("c", c)?;
    let s = (a * b * c).sqrt();
    // μ_i = (a_j + a_k − a_i)/s, subtracting the nearest pair first so that
    // strongly collapsed metrics (a ≈ b ≫ c) lose no accuracy.
    let mu_of = |ai: f64, aj: f64, ak: f64| ((aj.max(ak) - ai) + aj.min(ak)) / s;
    let mu = [mu_of(a, b, c), mu_of(b, c, a), mu_of(c, a, b)];
    let ric = Sym2::diagonal(&[2.0 * mu[1] * mu[2], 2.0 * mu[2] * mu[0], 2.0 * mu[0] * mu[1]]);
    let g = Sym2::identity(3);
    let scal: f64 = (0..3).map(|i| ric.get(i, i)).sum();
    let rm = kulkarni_nomizu(&ric, &g)?.add_scaled(-scal / 4.0, &kulkarni_nomizu(&g, &g)?);
    let gamma = frame_connection(&milnor_structure_constants(a, b, c));
    let nrm = nabla_rm_norm_sq(&rm, &gamma);
    Ok(HomogeneousModel {
        name: "SU2".into(),
        curvature: decompose(&rm, &g)?,
        volume: VOL_S3 * s,
        euler_char: None,
        params: vec![("a".into(), a), ("b".into(), b), ("c".into(), c)],
        nabla_rm_norm_sq: nrm,
    })
}

/// The model with metric `c·g`: frame components of `Rm` scale by `1/c`,
/// the volume by `c^{n/2}` and `‖∇Rm‖²` by `c⁻³`.
pub fn scaled(model: &HomogeneousModel, c: f64) -> Result<HomogeneousModel, CatalogError> {
    let c = positive("c", c)?;
    let n = model.n();
    let rm = model.curvature.rm().scaled(1.0 / c);
    let mut params = model.params.clone();
    params.push(("scale".into(), c));
    Ok(HomogeneousModel {
        name: model.name.clone(),
        curvature: decompose(&rm, &Sym2::identity(n))?,
        volume: model.volume * c.powf(n as f64 / 2.0),
        euler_char: model.euler_char,
        params,
        nabla_rm_norm_sq: model.nabla_rm_norm_sq / c.powi(3),
    })
}

/// Bracket on the Yamabe invariant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YamabeBracket {
    /// `√` of the Gursky-type lower bound on `Y²` (dimension four, known χ).
    pub lower: Option<f64>,
    /// Constant-test-function value `(n−2)/(4(n−1))·R·Vol^{2/n}`.
    pub upper: f64,
}

/// Lower and upper bounds on the Yamabe invariant of a model.
pub fn yamabe_bracket(model: &HomogeneousModel, alpha: f64) -> YamabeBracket {
    let n = model.n() as f64;
    let upper = (n - 2.0) / (4.0 * (n - 1.0))
        * model.curvature.scal()
        * model.volume.powf(2.0 / n);
    let lower = functionals::gursky_bound(model, alpha).ok().map(f64::sqrt);
    YamabeBracket { lower, upper }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_spheres() {
        let s4 = round_sphere(4, 1.0).unwrap();
        assert!((s4.curvature().scal() - 12.0).abs() < 1e-12);
        assert!((s4.curvature().rm_norm_sq() - 6.0).abs() < 1e-12);
        assert_eq!(s4.volume(), VOL_S4);
        let s3 = round_sphere(3, 1.0).unwrap();
        assert!((s3.curvature().scal() - 6.0).abs() < 1e-12);
        assert_eq!(s3.volume(), VOL_S3);
        assert!(round_sphere(4, 0.0).is_err());
        assert!(round_sphere(5, 1.0).is_err());
    }

    #[test]
    fn milnor_round_point() {
        let m = su2_milnor(1.0, 1.0, 1.0).unwrap();
        assert!(m.curvature().ric0().max_abs() < 1e-14);
        assert!((m.curvature().rm().get(0, 1, 0, 1) - 1.0).abs() < 1e-14);
        assert!(m.nabla_rm_norm_sq() < 1e-28);
    }

    #[test]
    fn torus_volume_scaling() {
        let t = flat_torus(&[1.0, 2.0, 1.0, 1.0]).unwrap();
        let t2 = flat_torus(&[2.0, 4.0, 2.0, 2.0]).unwrap();
        assert_eq!(t2.volume(), 16.0 * t.volume());
        assert!(flat_torus(&[1.0, -1.0, 1.0]).is_err());
    }
}

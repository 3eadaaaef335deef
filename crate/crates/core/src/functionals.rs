//! Quadratic curvature functionals on homogeneous models, Yamabe-type bounds
//! and the pinching predicates built from them.
//!
//! On a homogeneous model every integrand is constant, so each functional is
//! the pointwise value times the volume.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::catalog::HomogeneousModel;
use crate::tensor::{kulkarni_nomizu, ring_action, CurvaturePoint, Sym2, TensorError};

const PI2: f64 = PI * PI;

/// Errors raised by functional evaluations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionalsError {
    #[error("expected dimension {expected}, got {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("Euler characteristic of model `{0}` is unknown")]
    MissingEulerCharacteristic(String),
    #[error("Yamabe hypothesis violated: Y = {y} < 2/A² = {threshold}")]
    YamabeHypothesis { y: f64, threshold: f64 },
    #[error("invalid exponent p = {p} (need p > n/2 = {half_n})")]
    InvalidExponent { p: f64, half_n: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Integrated quadratic curvature functionals of a model.
///
/// Field names in serialized form follow the usual notation (`F_Rm`, `F_W`,
/// …); values are raw (not divided by π²).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub n: usize,
    pub alpha: f64,
    /// `false` when `alpha` lies outside `[0, 1]`.
    pub alpha_in_range: bool,
    pub volume: f64,
    #[serde(rename = "F_Rm")]
    pub f_rm: f64,
    #[serde(rename = "F_Ric")]
    pub f_ric: f64,
    #[serde(rename = "F_R")]
    pub f_r: f64,
    #[serde(rename = "F_W")]
    pub f_w: f64,
    #[serde(rename = "F_Ric0")]
    pub f_ric0: f64,
    /// `∫σ₂(A)`; sign-indefinite.
    #[serde(rename = "F_2")]
    pub f_2: f64,
    /// `(1−α)F_W + (α/2)F_Ric0`.
    #[serde(rename = "F_alpha")]
    pub f_alpha: f64,
    /// `F_Ric0 + αF_R`.
    #[serde(rename = "G_alpha")]
    pub g_alpha: f64,
    /// `F_W − ½F_Ric0 + F_R/24 − 8π²χ` in dimension four when χ is known.
    pub gb_residual: Option<f64>,
    /// Pointwise Q-curvature `R²/6 − ½‖Ric‖²` (the Laplacian term vanishes).
    pub q_curvature: f64,
}

impl FunctionalReport {
    /// `(name, value/π²)` pairs for tabular output.
    pub fn in_pi2_units(&self) -> Vec<(&'static str, f64)> {
        let mut v = vec![
            ("F_Rm", self.f_rm / PI2),
            ("F_Ric", self.f_ric / PI2),
            ("F_R", self.f_r / PI2),
            ("F_W", self.f_w / PI2),
            ("F_Ric0", self.f_ric0 / PI2),
            ("F_2", self.f_2 / PI2),
            ("F_alpha", self.f_alpha / PI2),
            ("G_alpha", self.g_alpha / PI2),
            ("volume", self.volume / PI2),
        ];
        if let Some(r) = self.gb_residual {
            v.push(("gb_residual", r / PI2));
        }
        v
    }
}

/// `F^α = (1−α)F_W + (α/2)F_Ric0`.
pub fn f_alpha(f_w: f64, f_ric0: f64, alpha: f64) -> f64 {
    (1.0 - alpha) * f_w + 0.5 * alpha * f_ric0
}

/// `G^α = F_Ric0 + αF_R`.
pub fn g_alpha(f_ric0: f64, f_r: f64, alpha: f64) -> f64 {
    f_ric0 + alpha * f_r
}

/// Evaluates every functional on a homogeneous model.
pub fn evaluate(model: &HomogeneousModel, alpha: f64) -> FunctionalReport {
    let cp = model.curvature();
    let n = cp.n();
    let nf = n as f64;
    let vol = model.volume();
    let f_rm = vol * cp.rm_norm_sq();
    let f_ric = vol * cp.ric_norm_sq();
    let f_r = vol * cp.scal() * cp.scal();
    let f_w = vol * cp.weyl_norm_sq();
    let f_ric0 = vol * cp.ric0_norm_sq();
    let f_2 = nf / (8.0 * (nf - 1.0)) * f_r - 0.5 * f_ric;
    let gb_residual = match (n, model.euler_char()) {
        (4, Some(chi)) => Some(f_w - 0.5 * f_ric0 + f_r / 24.0 - 8.0 * PI2 * chi as f64),
        _ => None,
    };
    FunctionalReport {
        n,
        alpha,
        alpha_in_range: (0.0..=1.0).contains(&alpha),
        volume: vol,
        f_rm,
        f_ric,
        f_r,
        f_w,
        f_ric0,
        f_2,
        f_alpha: f_alpha(f_w, f_ric0, alpha),
        g_alpha: g_alpha(f_ric0, f_r, alpha),
        gb_residual,
        q_curvature: cp.scal() * cp.scal() / 6.0 - 0.5 * cp.ric_norm_sq(),
    }
}

fn four_dim_chi(model: &HomogeneousModel) -> Result<f64, FunctionalsError> {
    if model.n() != 4 {
        return Err(FunctionalsError::WrongDimension {
            expected: 4,
            got: model.n(),
        });
    }
    model
        .euler_char()
        .map(f64::from)
        .ok_or_else(|| FunctionalsError::MissingEulerCharacteristic(model.name().to_string()))
}

/// Lower bound on `Y²`: `max(0, (2/3)((1−α)8π²χ − F^α))`.
pub fn gursky_bound(model: &HomogeneousModel, alpha: f64) -> Result<f64, FunctionalsError> {
    let chi = four_dim_chi(model)?;
    let r = evaluate(model, alpha);
    Ok(gursky_from(r.f_alpha, chi, alpha))
}

fn gursky_from(f_alpha: f64, chi: f64, alpha: f64) -> f64 {
    (2.0 / 3.0 * ((1.0 - alpha) * 8.0 * PI2 * chi - f_alpha)).max(0.0)
}

/// A predicate outcome; `slack > 0` iff it holds strictly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Predicate {
    pub holds: bool,
    pub slack: f64,
}

impl Predicate {
    fn strict(slack: f64) -> Self {
        Self {
            holds: slack > 0.0,
            slack,
        }
    }
    fn non_strict(slack: f64) -> Self {
        Self {
            holds: slack >= 0.0,
            slack,
        }
    }
}

/// A `Y`-dependent predicate evaluated with the conservative and the
/// optimistic end of the Yamabe bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketedPredicate {
    pub conservative: Predicate,
    pub optimistic: Predicate,
}

/// The energy-pinching conclusion attached to the small-energy hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquiBounds {
    /// Largest `ε` for which the small-energy hypothesis holds with margin `ε`.
    pub epsilon_max: f64,
    pub hypothesis: Predicate,
    /// `(3/16)Y²_lower − ε_max − (F_W + ¼F_Ric0)`.
    pub conclusion: Predicate,
}

/// Singularity-theorem hypothesis in its two equivalent forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularityHypothesis {
    /// `(1−α)8π²χ − F^α`.
    pub energy_form: Predicate,
    /// `((1−α)/12)F_R − F_Ric0`; equals twice the energy-form slack.
    pub integral_form: Predicate,
    /// `|integral slack − 2·energy slack|`.
    pub equivalence_residual: f64,
}

/// All pinching predicates for a dimension-four model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PinchingVerdict {
    pub alpha: f64,
    pub alpha_in_range: bool,
    /// Conservative (lower) and optimistic (upper) bounds on `Y²`.
    pub y2_lower: f64,
    pub y2_upper: f64,
    /// `F_W + ¼F_Ric0 < (3/16)Y²`.
    pub rigidity: BracketedPredicate,
    /// `F^α < 2απ²χ` for `α ≤ 4/13`, else `F^α < (8/9)(1−α)π²χ`.
    pub small_energy: Predicate,
    /// `F_W + (2/9)F_Ric0 < (8/9)π²χ`.
    pub pinching: Predicate,
    /// `F_W + (6/13)Y² < (40/13)π²χ`.
    pub conformal_pinching: BracketedPredicate,
    /// `F_W < (25/54)Y²`.
    pub conformally_flat: BracketedPredicate,
    pub equi_bounds: EquiBounds,
    pub singularity_hypothesis: SingularityHypothesis,
}

/// Threshold separating the two regimes of the small-energy condition.
pub const SMALL_ENERGY_SWITCH: f64 = 4.0 / 13.0;

/// Evaluates every pinching predicate.  `Y²` is bracketed by the larger of
/// the two Gursky-type lower bounds (at `α` and at `0`) and by the square of
/// the positive part of the constant-test-function upper bound.
pub fn pinching_verdicts(
    model: &HomogeneousModel,
    alpha: f64,
) -> Result<PinchingVerdict, FunctionalsError> {
    let chi = four_dim_chi(model)?;
    let r = evaluate(model, alpha);
    let r0 = evaluate(model, 0.0);
    let y2_lower = gursky_from(r.f_alpha, chi, alpha).max(gursky_from(r0.f_alpha, chi, 0.0));
    let upper = crate::catalog::yamabe_bracket(model, alpha).upper;
    let y2_upper = upper.max(0.0).powi(2).max(y2_lower);
    let pc = PI2 * chi;

    let bracket = |f: &dyn Fn(f64) -> f64, conservative_y2: f64, optimistic_y2: f64| {
        BracketedPredicate {
            conservative: Predicate::strict(f(conservative_y2)),
            optimistic: Predicate::strict(f(optimistic_y2)),
        }
    };
    let energy = r.f_w + 0.25 * r.f_ric0;
    let rigidity = bracket(&|y2| 3.0 / 16.0 * y2 - energy, y2_lower, y2_upper);
    // Y appears on the left-hand side: the conservative verdict uses the upper bound.
    let conformal_pinching = bracket(
        &|y2| 40.0 / 13.0 * pc - r.f_w - 6.0 / 13.0 * y2,
        y2_upper,
        y2_lower,
    );
    let conformally_flat = bracket(&|y2| 25.0 / 54.0 * y2 - r.f_w, y2_lower, y2_upper);

    let epsilon_max = if alpha <= SMALL_ENERGY_SWITCH {
        pc - r.f_alpha / (2.0 * alpha)
    } else {
        pc - 9.0 * r.f_alpha / (8.0 * (1.0 - alpha))
    };
    let small_energy_slack = if alpha <= SMALL_ENERGY_SWITCH {
        2.0 * alpha * pc - r.f_alpha
    } else {
        8.0 / 9.0 * (1.0 - alpha) * pc - r.f_alpha
    };
    let equi_bounds = EquiBounds {
        epsilon_max,
        hypothesis: Predicate::strict(epsilon_max),
        conclusion: Predicate::non_strict(3.0 / 16.0 * y2_lower - epsilon_max - energy),
    };

    let s1 = (1.0 - alpha) * 8.0 * pc - r.f_alpha;
    let s2 = (1.0 - alpha) / 12.0 * r.f_r - r.f_ric0;
    let singularity_hypothesis = SingularityHypothesis {
        energy_form: Predicate::non_strict(s1),
        integral_form: Predicate::non_strict(s2),
        equivalence_residual: (s2 - 2.0 * s1).abs(),
    };

    Ok(PinchingVerdict {
        alpha,
        alpha_in_range: r.alpha_in_range,
        y2_lower,
        y2_upper,
        rigidity,
        small_energy: Predicate::strict(small_energy_slack),
        pinching: Predicate::strict(8.0 / 9.0 * pc - r.f_w - 2.0 / 9.0 * r.f_ric0),
        conformal_pinching,
        conformally_flat,
        equi_bounds,
        singularity_hypothesis,
    })
}

/// Explicit constant `C(n, p)` of the scalar-curvature Sobolev bound,
/// `C² = 2(1 − n/2p)(n/p)^{n/(2p−n)}((n−2)/(8(n−1)))^{2p/(2p−n)}`, with the
/// `p = ∞` limit `C² = (n−2)/(4(n−1))`.
pub fn sobolev_constant(n: usize, p: f64) -> Result<f64, FunctionalsError> {
    let nf = n as f64;
    if n < 3 {
        return Err(FunctionalsError::InvalidArgument("dimension must be at least 3"));
    }
    if p.is_nan() || p <= nf / 2.0 {
        return Err(FunctionalsError::InvalidExponent { p, half_n: nf / 2.0 });
    }
    let base = (nf - 2.0) / (8.0 * (nf - 1.0));
    if p.is_infinite() {
        return Ok((2.0 * base).sqrt());
    }
    let c2 = 2.0
        * (1.0 - nf / (2.0 * p))
        * (nf / p).powf(nf / (2.0 * p - nf))
        * base.powf(2.0 * p / (2.0 * p - nf));
    Ok(c2.sqrt())
}

/// Upper bound `C·(A²‖R‖_p)^{p/(2p−n)}` on the best second Sobolev constant
/// relative to `A`, valid when `Y ≥ 2/A²`.
pub fn sobolev_bound(y: f64, r_p_norm: f64, p: f64, a: f64, n: usize) -> Result<f64, FunctionalsError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(FunctionalsError::InvalidArgument("A must be positive"));
    }
    if !(r_p_norm >= 0.0) {
        return Err(FunctionalsError::InvalidArgument("‖R‖_p must be non-negative"));
    }
    let threshold = 2.0 / (a * a);
    if !(y >= threshold) {
        return Err(FunctionalsError::YamabeHypothesis { y, threshold });
    }
    let c = sobolev_constant(n, p)?;
    let nf = n as f64;
    let exponent = if p.is_infinite() { 1.0 } else { p / (2.0 * p - nf) };
    Ok(c * (a * a * r_p_norm).powf(exponent))
}

/// Gradient of `F^α` at a metric of constant scalar curvature, without the
/// `½ΔRic0` term (which vanishes on locally symmetric models and is
/// trace-free in general):
/// `−(W + ½Ric0∧g)̊Ric0 + ¼‖Ric0‖²g + ((2−α)/12)R Ric0`.
pub fn f_alpha_gradient_algebraic(cp: &CurvaturePoint, alpha: f64) -> Result<Sym2, FunctionalsError> {
    if cp.n() != 4 {
        return Err(FunctionalsError::WrongDimension {
            expected: 4,
            got: cp.n(),
        });
    }
    let g = cp.g();
    let op = cp.weyl().add_scaled(0.5, &kulkarni_nomizu(cp.ric0(), g)?);
    let ring = ring_action(&op, cp.ric0(), g)?;
    Ok(ring
        .scaled(-1.0)
        .add_scaled(0.25 * cp.ric0_norm_sq(), g)
        .add_scaled((2.0 - alpha) / 12.0 * cp.scal(), cp.ric0()))
}

/// `tr_g ∇F^α` on a homogeneous four-dimensional model (must vanish).
pub fn trace_gradient_check(model: &HomogeneousModel, alpha: f64) -> Result<f64, FunctionalsError> {
    let cp = model.curvature();
    let grad = f_alpha_gradient_algebraic(cp, alpha)?;
    Ok(cp.metric().trace(&grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{round_sphere, sphere_product};

    #[test]
    fn s4_oracles() {
        let r = evaluate(&round_sphere(4, 1.0).unwrap(), 0.3);
        assert!((r.f_rm / PI2 - 16.0).abs() < 1e-12);
        assert!((r.f_r / PI2 - 384.0).abs() < 1e-10);
        assert!(r.gb_residual.unwrap().abs() < 1e-10);
    }

    #[test]
    fn gursky_examples() {
        let s4 = round_sphere(4, 1.0).unwrap();
        assert!((gursky_bound(&s4, 0.0).unwrap() / PI2 - 32.0 / 3.0).abs() < 1e-12);
        let p = sphere_product(1.0, 1.0).unwrap();
        assert!((gursky_bound(&p, 0.0).unwrap() / PI2 - 64.0 / 9.0).abs() < 1e-12);
        assert!(gursky_bound(&round_sphere(3, 1.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn sobolev_limits() {
        assert_eq!(sobolev_bound(1.0, 0.0, 3.0, 2.0, 4).unwrap(), 0.0);
        assert!(sobolev_bound(0.1, 1.0, 3.0, 2.0, 4).is_err());
        assert!(sobolev_bound(1.0, 1.0, 2.0, 2.0, 4).is_err());
        let c = sobolev_constant(4, f64::INFINITY).unwrap();
        assert!((c * c - 1.0 / 6.0).abs() < 1e-15);
        // p → ∞ continuity of the constant.
        let near = sobolev_constant(4, 1e9).unwrap();
        assert!((near - c).abs() < 1e-6);
    }
}

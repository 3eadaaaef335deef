//! Gradient flows of quadratic curvature functionals restricted to
//! flow-invariant finite-parameter families of homogeneous metrics.
//!
//! A family is a map `θ ↦ g_θ` whose isometry group forces the full flow to
//! stay inside it, so the flow equals the L²-projection of the gradient onto
//! the family's tangent space: `G(θ)·θ̇ = −factor·∇_θF`, with Gram matrix
//! `G_ij = ⟨h_i, h_j⟩_{L²(g_θ)}` and `h_i = ∂g/∂θ_i`.  The factor is 2 for the
//! four-dimensional `F^α` flow and 1 for the `G^α` flow.
//!
//! Integration uses a Dormand–Prince 5(4) pair on the state `(ln θ, q)`, where
//! `q = ∫ grad_norm² dt` is carried along so that the dissipation ledger is
//! integrated to the same accuracy as the trajectory itself.  Logarithmic
//! parameters keep the error control relative when a parameter collapses
//! towards zero, and keep every trial point inside the admissible domain.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{
    flat_torus, round_sphere, scaled, sphere_product, su2_milnor, yamabe_bracket, CatalogError,
    HomogeneousModel,
};
use crate::functionals::{evaluate, FunctionalReport};
use crate::tensor::Sym2;

/// Largest admissible (Jacobi-scaled) condition number of the Gram matrix.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Errors raised by the flow engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("unknown family `{0}` (expected s3-round, s4-round, milnor, s2xs2, t3 or t4)")]
    UnknownFamily(String),
    #[error("unknown functional `{0}` (expected f_alpha or g_alpha)")]
    UnknownEnergy(String),
    #[error("family `{family}` takes {expected} parameters, got {got}")]
    ParamCount {
        family: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("parameters outside the admissible domain: {0:?}")]
    Inadmissible(Vec<f64>),
    #[error("Gram matrix is singular or ill-conditioned (condition number {0:e})")]
    GramSingular(f64),
    #[error("invalid controls: {0}")]
    InvalidControls(String),
    #[error("trajectory did not end in a blow-up")]
    NoBlowup,
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

/// The finite-parameter families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FamilyKind {
    /// `c·g_{S³}`, `θ = [c]`.
    #[serde(rename = "s3-round")]
    S3Round,
    /// `c·g_{S⁴}`, `θ = [c]`.
    #[serde(rename = "s4-round")]
    S4Round,
    /// Left-invariant `diag(a, b, c)` on SU(2), `θ = [a, b, c]`.
    #[serde(rename = "milnor")]
    Milnor,
    /// `x·g_{S²} + y·g_{S²}`, `θ = [x, y]` (squared radii).
    #[serde(rename = "s2xs2")]
    S2xS2,
    /// Flat `T³`, `θ` = squared side lengths.
    #[serde(rename = "t3")]
    Torus3,
    /// Flat `T⁴`, `θ` = squared side lengths.
    #[serde(rename = "t4")]
    Torus4,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 6] = [
        FamilyKind::S3Round,
        FamilyKind::S4Round,
        FamilyKind::Milnor,
        FamilyKind::S2xS2,
        FamilyKind::Torus3,
        FamilyKind::Torus4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::S3Round => "s3-round",
            FamilyKind::S4Round => "s4-round",
            FamilyKind::Milnor => "milnor",
            FamilyKind::S2xS2 => "s2xs2",
            FamilyKind::Torus3 => "t3",
            FamilyKind::Torus4 => "t4",
        }
    }

    /// Dimensions of the blocks on which each parameter scales the metric.
    fn blocks(self) -> &'static [usize] {
        match self {
            FamilyKind::S3Round => &[3],
            FamilyKind::S4Round => &[4],
            FamilyKind::Milnor | FamilyKind::Torus3 => &[1, 1, 1],
            FamilyKind::S2xS2 => &[2, 2],
            FamilyKind::Torus4 => &[1, 1, 1, 1],
        }
    }

    pub fn dim(self) -> usize {
        self.blocks().iter().sum()
    }

    pub fn param_count(self) -> usize {
        self.blocks().len()
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = FlowError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FamilyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| FlowError::UnknownFamily(s.to_string()))
    }
}

/// Which functional drives the flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Energy {
    /// `∂_t g = −2∇F^α`.
    FAlpha,
    /// `∂_t g = −∇G^α`.
    GAlpha,
}

impl Energy {
    /// Multiplier in front of the gradient.
    pub fn factor(self) -> f64 {
        match self {
            Energy::FAlpha => 2.0,
            Energy::GAlpha => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Energy::FAlpha => "f_alpha",
            Energy::GAlpha => "g_alpha",
        }
    }

    /// The natural functional for a dimension: `F^α` in four, `G^α` otherwise.
    pub fn default_for(n: usize) -> Self {
        if n == 4 {
            Energy::FAlpha
        } else {
            Energy::GAlpha
        }
    }
}

impl FromStr for Energy {
    type Err = FlowError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f_alpha" => Ok(Energy::FAlpha),
            "g_alpha" => Ok(Energy::GAlpha),
            _ => Err(FlowError::UnknownEnergy(s.to_string())),
        }
    }
}

/// Reduced gradient at a parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedGradient {
    pub theta_dot: Vec<f64>,
    /// `∂F/∂θ_i`.
    pub dfdtheta: Vec<f64>,
    /// `√(factor)·‖∇F‖_{L²}`, so that `dF/dt = −grad_norm²`.
    pub grad_norm: f64,
    /// Jacobi-scaled condition number of the Gram matrix.
    pub gram_condition: f64,
}

/// A flow restricted to a family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedFamily {
    pub kind: FamilyKind,
    pub energy: Energy,
    pub alpha: f64,
}

impl ReducedFamily {
    pub fn new(kind: FamilyKind, energy: Energy, alpha: f64) -> Self {
        Self { kind, energy, alpha }
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn n(&self) -> usize {
        self.kind.dim()
    }

    pub fn param_count(&self) -> usize {
        self.kind.param_count()
    }

    fn check(&self, theta: &[f64]) -> Result<(), FlowError> {
        if theta.len() != self.param_count() {
            return Err(FlowError::ParamCount {
                family: self.name(),
                expected: self.param_count(),
                got: theta.len(),
            });
        }
        if theta.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(FlowError::Inadmissible(theta.to_vec()));
        }
        Ok(())
    }

    /// The homogeneous model `g_θ`.
    pub fn model(&self, theta: &[f64]) -> Result<HomogeneousModel, FlowError> {
        self.check(theta)?;
        let m = match self.kind {
            FamilyKind::S3Round => scaled(&round_sphere(3, 1.0)?, theta[0])?,
            FamilyKind::S4Round => scaled(&round_sphere(4, 1.0)?, theta[0])?,
            FamilyKind::Milnor => su2_milnor(theta[0], theta[1], theta[2])?,
            FamilyKind::S2xS2 => sphere_product(theta[0].sqrt(), theta[1].sqrt())?,
            FamilyKind::Torus3 | FamilyKind::Torus4 => {
                let sides: Vec<f64> = theta.iter().map(|t| t.sqrt()).collect();
                flat_torus(&sides)?
            }
        };
        Ok(m)
    }

    /// `h_i = ∂g/∂θ_i` in the orthonormal frame of `g_θ`: the identity on
    /// block `i` divided by `θ_i`.
    pub fn tangent_basis(&self, theta: &[f64]) -> Result<Vec<Sym2>, FlowError> {
        self.check(theta)?;
        let n = self.n();
        let mut start = 0;
        let mut out = Vec::with_capacity(theta.len());
        for (&dim, &t) in self.kind.blocks().iter().zip(theta) {
            let range = start..start + dim;
            out.push(Sym2::from_fn(n, |i, j| {
                if i == j && range.contains(&i) {
                    1.0 / t
                } else {
                    0.0
                }
            }));
            start += dim;
        }
        Ok(out)
    }

    /// `G_ij = Vol·⟨h_i, h_j⟩`.
    pub fn gram(&self, theta: &[f64]) -> Result<DMatrix<f64>, FlowError> {
        let basis = self.tangent_basis(theta)?;
        let vol = self.model(theta)?.volume();
        let k = basis.len();
        Ok(DMatrix::from_fn(k, k, |i, j| {
            let (u, v) = (&basis[i], &basis[j]);
            vol * u.comps().iter().zip(v.comps()).map(|(a, b)| a * b).sum::<f64>()
        }))
    }

    /// Eigenvalues of `g_θ` relative to the fixed reference metric.
    pub fn metric_eigenvalues(&self, theta: &[f64]) -> Vec<f64> {
        self.kind
            .blocks()
            .iter()
            .zip(theta)
            .flat_map(|(&d, &t)| std::iter::repeat_n(t, d))
            .collect()
    }

    fn energy_of(&self, report: &FunctionalReport) -> f64 {
        match self.energy {
            Energy::FAlpha => report.f_alpha,
            Energy::GAlpha => report.g_alpha,
        }
    }

    /// The driving functional at `θ`.
    pub fn value(&self, theta: &[f64]) -> Result<f64, FlowError> {
        Ok(self.energy_of(&evaluate(&self.model(theta)?, self.alpha)))
    }

    /// `∂F/∂θ` by fourth-order central differences with step `10⁻³·min_j θ_j`.
    ///
    /// The step follows the smallest parameter because near a collapse the
    /// functional varies on that scale in every direction (for Berger
    /// spheres, perturbing `a` by more than `c` changes the geometry at
    /// leading order).
    pub fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>, FlowError> {
        self.check(theta)?;
        let mut out = Vec::with_capacity(theta.len());
        let mut p = theta.to_vec();
        let h = 1e-3 * theta.iter().copied().fold(f64::INFINITY, f64::min);
        for i in 0..theta.len() {
            let mut f = |s: f64| {
                p[i] = theta[i] + s * h;
                self.value(&p)
            };
            let (f1, fm1, f2, fm2) = (f(1.0)?, f(-1.0)?, f(2.0)?, f(-2.0)?);
            p[i] = theta[i];
            out.push((8.0 * (f1 - fm1) - (f2 - fm2)) / (12.0 * h));
        }
        Ok(out)
    }

    /// Solves `G·θ̇ = −factor·∇_θF`.
    pub fn reduced_gradient(&self, theta: &[f64]) -> Result<ReducedGradient, FlowError> {
        let gram = self.gram(theta)?;
        let k = gram.nrows();
        let d = DVector::from_fn(k, |i, _| 1.0 / gram[(i, i)].sqrt());
        let scaled = DMatrix::from_fn(k, k, |i, j| d[i] * gram[(i, j)] * d[j]);
        let eig = SymmetricEigen::new(scaled).eigenvalues;
        let (lo, hi) = eig
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(l, h), &e| (l.min(e), h.max(e)));
        let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(cond <= MAX_GRAM_CONDITION) {
            return Err(FlowError::GramSingular(cond));
        }
        let dfdtheta = self.gradient(theta)?;
        let rhs = DVector::from_iterator(k, dfdtheta.iter().map(|g| -self.energy.factor() * g));
        let chol = gram.cholesky().ok_or(FlowError::GramSingular(cond))?;
        let theta_dot = chol.solve(&rhs);
        let gn2 = -theta_dot.iter().zip(&dfdtheta).map(|(a, b)| a * b).sum::<f64>();
        Ok(ReducedGradient {
            theta_dot: theta_dot.iter().copied().collect(),
            dfdtheta,
            grad_norm: gn2.max(0.0).sqrt(),
            gram_condition: cond,
        })
    }

    /// Snapshot of the flow at `θ`.
    pub fn state(&self, t: f64, theta: &[f64]) -> Result<FlowState, FlowError> {
        let grad = self.reduced_gradient(theta)?;
        self.state_with_grad(t, theta, grad.grad_norm)
    }

    fn state_with_grad(&self, t: f64, theta: &[f64], grad_norm: f64) -> Result<FlowState, FlowError> {
        let model = self.model(theta)?;
        let report = evaluate(&model, self.alpha);
        let eig = self.metric_eigenvalues(theta);
        Ok(FlowState {
            t,
            theta: theta.to_vec(),
            f: self.energy_of(&report),
            grad_norm,
            rm_sup: model.rm_sup(),
            rm_l2: report.f_rm.sqrt(),
            volume: model.volume(),
            min_metric_eig: eig.iter().copied().fold(f64::INFINITY, f64::min),
            max_metric_eig: eig.iter().copied().fold(0.0, f64::max),
            nabla_rm_l2_sq: model.nabla_rm_norm_sq() * model.volume(),
            f_w: report.f_w,
            f_ric0: report.f_ric0,
            f_r: report.f_r,
            f_rm: report.f_rm,
        })
    }
}

/// One sample of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowState {
    pub t: f64,
    pub theta: Vec<f64>,
    #[serde(rename = "F")]
    pub f: f64,
    pub grad_norm: f64,
    /// Sup-norm proxy of `Rm` (largest frame component).
    pub rm_sup: f64,
    /// `‖Rm‖_{L²}`.
    pub rm_l2: f64,
    pub volume: f64,
    /// Smallest eigenvalue of `g_θ` against the fixed reference metric.
    pub min_metric_eig: f64,
    pub max_metric_eig: f64,
    /// `‖∇Rm‖²_{L²}`.
    pub nabla_rm_l2_sq: f64,
    #[serde(rename = "F_W")]
    pub f_w: f64,
    #[serde(rename = "F_Ric0")]
    pub f_ric0: f64,
    #[serde(rename = "F_R")]
    pub f_r: f64,
    #[serde(rename = "F_Rm")]
    pub f_rm: f64,
}

impl FlowState {
    /// `min_eig / max_eig`: the collapse proxy.
    pub fn collapse_ratio(&self) -> f64 {
        self.min_metric_eig / self.max_metric_eig
    }
}

/// Terminal classification of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowEvent {
    Converged,
    Blowup,
    Collapse,
    HorizonReached,
}

impl fmt::Display for FlowEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlowEvent::Converged => "converged",
            FlowEvent::Blowup => "blowup",
            FlowEvent::Collapse => "collapse",
            FlowEvent::HorizonReached => "horizon_reached",
        })
    }
}

/// Integration and event controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowControls {
    pub horizon: f64,
    pub atol: f64,
    pub rtol: f64,
    pub blowup_threshold: f64,
    pub collapse_threshold: f64,
    pub curvature_bound: f64,
    pub conv_tol: f64,
    /// End the run at the first converged state instead of at the horizon.
    pub stop_on_converged: bool,
    pub max_steps: usize,
}

impl Default for FlowControls {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            atol: 1e-9,
            rtol: 1e-9,
            blowup_threshold: 1e6,
            collapse_threshold: 1e-6,
            curvature_bound: 1e3,
            conv_tol: 1e-10,
            stop_on_converged: false,
            max_steps: 1_000_000,
        }
    }
}

impl FlowControls {
    fn validate(&self) -> Result<(), FlowError> {
        let pos = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(FlowError::InvalidControls(format!("{name} must be positive, got {v}")))
            }
        };
        pos("horizon", self.horizon)?;
        pos("atol", self.atol)?;
        pos("rtol", self.rtol)?;
        pos("blowup_threshold", self.blowup_threshold)?;
        pos("collapse_threshold", self.collapse_threshold)?;
        pos("curvature_bound", self.curvature_bound)?;
        pos("conv_tol", self.conv_tol)?;
        if self.max_steps == 0 {
            return Err(FlowError::InvalidControls("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Classifies a single state; precedence blowup > collapse > converged.
pub fn detect_event(state: &FlowState, controls: &FlowControls) -> Option<FlowEvent> {
    if state.rm_sup > controls.blowup_threshold {
        Some(FlowEvent::Blowup)
    } else if state.collapse_ratio() < controls.collapse_threshold
        && state.rm_sup < controls.curvature_bound
    {
        Some(FlowEvent::Collapse)
    } else if state.grad_norm < controls.conv_tol {
        Some(FlowEvent::Converged)
    } else {
        None
    }
}

/// Details of the terminal event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventData {
    pub t: f64,
    pub reason: String,
    pub rm_sup: f64,
    pub collapse_ratio: f64,
    pub grad_norm: f64,
}

/// A time-ordered integration record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub family: FamilyKind,
    pub energy: Energy,
    pub alpha: f64,
    /// `false` when α lies outside `[0, 1]`.
    pub alpha_in_range: bool,
    pub controls: FlowControls,
    pub states: Vec<FlowState>,
    pub event: FlowEvent,
    pub event_data: EventData,
    /// `∫ grad_norm² dt`, integrated alongside the parameters.
    pub dissipation: f64,
    /// Largest accepted per-step increase of `F`.
    pub max_step_increase: f64,
    /// Sum of local error estimates of `ln θ` (relative parameter errors).
    pub local_error_sum: f64,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    /// `grad_norm < conv_tol` on the trailing tenth of the run.
    pub quasi_converged: bool,
}

impl Trajectory {
    pub fn first(&self) -> &FlowState {
        &self.states[0]
    }

    pub fn last(&self) -> &FlowState {
        self.states.last().expect("trajectory has at least one state")
    }

    /// CSV with columns `t, theta_1…, F, grad_norm, rm_sup, rm_l2, volume, min_eig`.
    pub fn to_csv(&self) -> String {
        let k = self.first().theta.len();
        let mut out = String::from("t");
        for i in 1..=k {
            out.push_str(&format!(",theta_{i}"));
        }
        out.push_str(",F,grad_norm,rm_sup,rm_l2,volume,min_eig\n");
        for s in &self.states {
            out.push_str(&format!("{:e}", s.t));
            for th in &s.theta {
                out.push_str(&format!(",{th:e}"));
            }
            out.push_str(&format!(
                ",{:e},{:e},{:e},{:e},{:e},{:e}\n",
                s.f, s.grad_norm, s.rm_sup, s.rm_l2, s.volume, s.min_metric_eig
            ));
        }
        out
    }
}

// Dormand–Prince 5(4) tableau (autonomous system, so the nodes are unused).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Rhs<'a> {
    family: &'a ReducedFamily,
    k: usize,
}

impl Rhs<'_> {
    /// Derivative of `(ln θ, q)`; `None` outside the admissible domain.
    fn eval(&self, y: &[f64]) -> Option<(Vec<f64>, f64)> {
        let theta: Vec<f64> = y[..self.k].iter().map(|u| u.exp()).collect();
        let g = self.family.reduced_gradient(&theta).ok()?;
        let mut d: Vec<f64> = g.theta_dot.iter().zip(&theta).map(|(v, t)| v / t).collect();
        d.push(g.grad_norm * g.grad_norm);
        if d.iter().all(|x| x.is_finite()) {
            Some((d, g.grad_norm))
        } else {
            None
        }
    }
}

/// Integrates the reduced flow from `theta0` until the horizon or a terminal
/// event.
pub fn integrate(
    family: &ReducedFamily,
    theta0: &[f64],
    controls: &FlowControls,
) -> Result<Trajectory, FlowError> {
    controls.validate()?;
    let k = family.param_count();
    let rhs = Rhs { family, k };
    let g0 = family.reduced_gradient(theta0)?;
    let mut states = vec![family.state_with_grad(0.0, theta0, g0.grad_norm)?];
    let mut y: Vec<f64> = theta0.iter().map(|t| t.ln()).chain([0.0]).collect();
    let mut f0: Vec<f64> = g0.theta_dot.iter().zip(theta0).map(|(v, t)| v / t).collect();
    f0.push(g0.grad_norm * g0.grad_norm);

    let dim = y.len();
    let norm = |v: &[f64], scale: &[f64]| {
        (v.iter().zip(scale).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / dim as f64).sqrt()
    };
    let scale0: Vec<f64> = y.iter().map(|v| controls.atol + controls.rtol * v.abs()).collect();
    let (d0, d1) = (norm(&y, &scale0), norm(&f0, &scale0));
    let h_max = controls.horizon / 10.0;
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(h_max);

    let mut t = 0.0;
    let mut event = None;
    let mut reason = String::new();
    let mut max_inc = f64::NEG_INFINITY;
    let mut err_sum = 0.0;
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut kst: Vec<Vec<f64>> = vec![f0; 1];

    let end_slack = 1e-12 * controls.horizon.max(1.0);
    while controls.horizon - t > end_slack {
        if accepted + rejected >= controls.max_steps {
            reason = "max_steps".into();
            break;
        }
        let last_step = t + h >= controls.horizon - end_slack;
        if last_step {
            h = controls.horizon - t;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            event = Some(FlowEvent::Blowup);
            reason = "step_underflow".into();
            break;
        }
        // Stages.
        kst.truncate(1);
        let mut ok = true;
        let mut y_new = y.clone();
        for s in 1..7 {
            let ys: Vec<f64> = (0..dim)
                .map(|i| y[i] + h * (0..s).map(|j| A[s][j] * kst[j][i]).sum::<f64>())
                .collect();
            match rhs.eval(&ys) {
                Some((d, _)) => {
                    if s == 6 {
                        y_new = ys;
                    }
                    kst.push(d);
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            rejected += 1;
            h *= 0.25;
            continue;
        }
        let err: Vec<f64> = (0..dim)
            .map(|i| h * (0..7).map(|j| E[j] * kst[j][i]).sum::<f64>())
            .collect();
        let mut sc: Vec<f64> = (0..dim)
            .map(|i| controls.atol + controls.rtol * y[i].abs().max(y_new[i].abs()))
            .collect();
        sc[k] = controls.atol + controls.rtol * (1.0 + states[0].f.abs());
        let en = norm(&err, &sc);
        if !(en <= 1.0) {
            rejected += 1;
            let fac = if en.is_finite() { (0.9 * en.powf(-0.2)).max(0.2) } else { 0.2 };
            h *= fac;
            continue;
        }
        let theta_new: Vec<f64> = y_new[..k].iter().map(|u| u.exp()).collect();
        let gn = kst[6][k].max(0.0).sqrt();
        let state = match family.state_with_grad(t + h, &theta_new, gn) {
            Ok(s) => s,
            Err(_) => {
                rejected += 1;
                h *= 0.25;
                continue;
            }
        };
        let prev = states.last().expect("nonempty");
        let inc = state.f - prev.f;
        if inc > 1e-9 * (1.0 + prev.f.abs()) {
            rejected += 1;
            h *= 0.5;
            continue;
        }
        max_inc = max_inc.max(inc);
        err_sum += err[..k].iter().map(|e| e * e).sum::<f64>().sqrt();
        accepted += 1;
        t = if last_step { controls.horizon } else { t + h };
        y = y_new;
        let f_last = kst.pop().expect("seven stages");
        kst = vec![f_last];
        let ev = detect_event(&state, controls);
        states.push(state);
        match ev {
            Some(FlowEvent::Blowup) => {
                event = Some(FlowEvent::Blowup);
                reason = "curvature_threshold".into();
                break;
            }
            Some(FlowEvent::Collapse) => {
                event = Some(FlowEvent::Collapse);
                reason = "collapse_threshold".into();
                break;
            }
            Some(FlowEvent::Converged) if controls.stop_on_converged => {
                event = Some(FlowEvent::Converged);
                reason = "gradient_tolerance".into();
                break;
            }
            _ => {}
        }
        let fac = if en > 0.0 { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) } else { 5.0 };
        h = (h * fac).min(h_max);
    }

    let last = states.last().expect("nonempty");
    let event = event.unwrap_or_else(|| {
        if last.grad_norm < controls.conv_tol {
            reason = "gradient_tolerance_at_horizon".into();
            FlowEvent::Converged
        } else {
            if reason.is_empty() {
                reason = "horizon".into();
            }
            FlowEvent::HorizonReached
        }
    });
    let t_end = last.t;
    let quasi_converged = states
        .iter()
        .filter(|s| s.t >= 0.9 * t_end)
        .all(|s| s.grad_norm < controls.conv_tol);
    let event_data = EventData {
        t: last.t,
        reason,
        rm_sup: last.rm_sup,
        collapse_ratio: last.collapse_ratio(),
        grad_norm: last.grad_norm,
    };
    Ok(Trajectory {
        family: family.kind,
        energy: family.energy,
        alpha: family.alpha,
        alpha_in_range: (0.0..=1.0).contains(&family.alpha),
        controls: controls.clone(),
        states,
        event,
        event_data,
        dissipation: y[k],
        max_step_increase: if max_inc.is_finite() { max_inc } else { 0.0 },
        local_error_sum: err_sum,
        steps_accepted: accepted,
        steps_rejected: rejected,
        quasi_converged,
    })
}

/// One member of a blow-up sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledState {
    pub t: f64,
    /// Metric scale `λ = rm_sup(t)`; the rescaled metric is `λ·g(t)`.
    pub scale: f64,
    pub original: HomogeneousModel,
    pub rescaled: HomogeneousModel,
}

/// Picks the states where the running supremum of `rm_sup` first reaches
/// `2^j·rm_sup(0)`, `j = 1…count`, and rescales each to unit `rm_sup`.
pub fn blowup_rescale(
    family: &ReducedFamily,
    traj: &Trajectory,
    count: usize,
) -> Result<Vec<RescaledState>, FlowError> {
    if traj.event != FlowEvent::Blowup {
        return Err(FlowError::NoBlowup);
    }
    let base = traj.first().rm_sup;
    let mut out = Vec::new();
    let mut j = 1;
    let mut running = 0.0f64;
    for s in &traj.states {
        running = running.max(s.rm_sup);
        let threshold = |j: usize| base * 2f64.powi(j as i32);
        if j <= count && running >= threshold(j) {
            let original = family.model(&s.theta)?;
            let rescaled = scaled(&original, s.rm_sup)?;
            out.push(RescaledState {
                t: s.t,
                scale: s.rm_sup,
                original,
                rescaled,
            });
            while j <= count && running >= threshold(j) {
                j += 1;
            }
        }
        if j > count {
            break;
        }
    }
    Ok(out)
}

/// A single pass/fail monitor with its worst margin (positive = slack).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorCheck {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    pub detail: String,
}

/// Monitors evaluated along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorReport {
    pub checks: Vec<MonitorCheck>,
    /// `∫grad_norm² dt` by the integrated quadrature.
    pub dissipation_quadrature: f64,
    /// Trapezoid rule on the sampled `grad_norm²` (informational).
    pub dissipation_trapezoid: f64,
    pub energy_drop: f64,
    /// `sup_t t·‖∇Rm‖²₂ / F_Rm(g₀)`.
    pub bbs_sup: f64,
    pub all_passed: bool,
}

/// Evaluates the monotonicity, dissipation, volume and energy-bound
/// monitors; the latter two only for four-dimensional `F^α` flows.
pub fn monitors(traj: &Trajectory) -> MonitorReport {
    let first = traj.first();
    let last = traj.last();
    let f0 = first.f;
    let mut checks = Vec::new();

    let tol_inc = 1e-9 * (1.0 + f0.abs());
    checks.push(MonitorCheck {
        name: "monotonicity".into(),
        passed: traj.max_step_increase <= tol_inc,
        margin: tol_inc - traj.max_step_increase,
        detail: format!("max per-step increase {:e}", traj.max_step_increase),
    });

    let drop = f0 - last.f;
    let resid = (traj.dissipation - drop).abs();
    let tol_diss = 1e-6 * (1.0 + f0.abs());
    checks.push(MonitorCheck {
        name: "dissipation".into(),
        passed: resid <= tol_diss,
        margin: tol_diss - resid,
        detail: format!("|∫grad² − ΔF| = {resid:e}"),
    });

    let four_dim_f = traj.family.dim() == 4 && traj.energy == Energy::FAlpha;
    if four_dim_f {
        let drift = traj
            .states
            .iter()
            .map(|s| (s.volume / first.volume - 1.0).abs())
            .fold(0.0, f64::max);
        checks.push(MonitorCheck {
            name: "volume_drift".into(),
            passed: drift <= 1e-6,
            margin: 1e-6 - drift,
            detail: format!("max relative drift {drift:e}"),
        });
        let a = traj.alpha;
        let mut bound = |name: &str, applicable: bool, f: &dyn Fn(&FlowState) -> f64| {
            if applicable {
                let m = traj.states.iter().map(f).fold(f64::INFINITY, f64::min);
                let scale = 1e-9 * (1.0 + f0.abs());
                checks.push(MonitorCheck {
                    name: name.into(),
                    passed: m >= -scale,
                    margin: m,
                    detail: String::new(),
                });
            }
        };
        bound("weyl_energy_bound", (0.0..1.0).contains(&a), &|s| {
            f0 / (1.0 - a) - s.f_w
        });
        bound("traceless_ricci_energy_bound", a > 0.0 && a <= 1.0, &|s| {
            2.0 / a * f0 - s.f_ric0
        });
        let chi = match traj.family {
            FamilyKind::S4Round => Some(2.0),
            FamilyKind::S2xS2 => Some(4.0),
            FamilyKind::Torus4 => Some(0.0),
            _ => None,
        };
        if let Some(chi) = chi {
            let pi2 = std::f64::consts::PI.powi(2);
            bound("scalar_energy_bound", a > 0.0 && a <= 1.0, &|s| {
                192.0 * pi2 * chi + 24.0 / a * f0 - s.f_r
            });
        }
    }

    let dissipation_trapezoid = traj
        .states
        .windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].grad_norm.powi(2) + w[1].grad_norm.powi(2)))
        .sum();
    let bbs_sup = if first.f_rm > 0.0 {
        traj.states
            .iter()
            .map(|s| s.t * s.nabla_rm_l2_sq / first.f_rm)
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    let all_passed = checks.iter().all(|c| c.passed);
    MonitorReport {
        checks,
        dissipation_quadrature: traj.dissipation,
        dissipation_trapezoid,
        energy_drop: drop,
        bbs_sup,
        all_passed,
    }
}

/// The Yamabe upper bracket, used to check scale invariance of rescalings.
pub fn yamabe_upper(model: &HomogeneousModel) -> f64 {
    yamabe_bracket(model, 0.0).upper
}

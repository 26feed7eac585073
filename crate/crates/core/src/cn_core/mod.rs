//! Lifted convex representations of nonconvex functions.
//!
//! A [`CnForm`] stores a convex objective `g(x, y)`, convex equality fields
//! `g_i(x, y) = 0`, optional inequality fields `h_k(x, y) <= 0`, and a lift
//! `x -> y` that picks a feasible, objective-minimizing `y`.

mod field;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CnError, Result};

pub use field::{EvalFn, GradFn, HessVecFn, ScalarField};

/// Membership tolerance for `X(g)`.
pub const FEAS_TOL: f64 = 1e-8;
/// Tolerance for value identities such as `f(x) = g(x, lift(x))`.
pub const VALUE_TOL: f64 = 1e-6;

/// Per-coordinate bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(CnError::DimensionMismatch { expected: lower.len(), got: upper.len(), context: "box bounds" });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(CnError::BadSpec("box lower bound exceeds upper bound".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Self {
        Self { lower: vec![lo; dim], upper: vec![hi; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(&l, &u)| if u > l { rng.gen_range(l..=u) } else { l }).collect()
    }
}

pub type BProvider = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Curvature information attached to the objective.
#[derive(Clone)]
pub enum ConvexityGrade {
    Plain,
    /// Lower curvature bound by a positive semidefinite `B(x, y)`.
    WeakUniform(BProvider),
    /// Same, with `B(x, y)` positive definite.
    StrongUniform(BProvider),
    /// Lower curvature bound `rho_bar * I`.
    Uniform(f64),
}

impl fmt::Debug for ConvexityGrade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Plain => write!(f, "Plain"),
            Self::WeakUniform(_) => write!(f, "WeakUniform(..)"),
            Self::StrongUniform(_) => write!(f, "StrongUniform(..)"),
            Self::Uniform(r) => write!(f, "Uniform({r})"),
        }
    }
}

impl ConvexityGrade {
    pub fn weak<F>(b: F) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self::WeakUniform(Arc::new(b))
    }

    pub fn strong<F>(b: F) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self::StrongUniform(Arc::new(b))
    }

    /// Weak grade with a point-independent `B`.
    pub fn constant(b: DMatrix<f64>) -> Self {
        Self::WeakUniform(Arc::new(move |_| b.clone()))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Plain => "Plain",
            Self::WeakUniform(_) => "WeakUniform",
            Self::StrongUniform(_) => "StrongUniform",
            Self::Uniform(_) => "Uniform",
        }
    }

    /// The curvature matrix at `w`, or `None` for `Plain`.
    pub fn b_matrix(&self, w: &[f64]) -> Option<DMatrix<f64>> {
        match self {
            Self::Plain => None,
            Self::WeakUniform(b) | Self::StrongUniform(b) => Some(b(w)),
            Self::Uniform(rho) => Some(DMatrix::identity(w.len(), w.len()) * *rho),
        }
    }
}

pub type LiftFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type BranchFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;

/// Closed-form lift `x -> y`.
///
/// `closed_form` returns the objective-minimizing feasible `y`. For forms
/// where `Y_g(x)` has several points, `branches` enumerates all of them.
#[derive(Clone)]
pub struct Lift {
    closed_form: LiftFn,
    branches: Option<BranchFn>,
}

impl fmt::Debug for Lift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lift").field("branches", &self.branches.is_some()).finish()
    }
}

impl Lift {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self { closed_form: Arc::new(f), branches: None }
    }

    pub fn with_branches<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static,
    {
        self.branches = Some(Arc::new(f));
        self
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (self.closed_form)(x)
    }

    /// Every feasible lift of `x`. Falls back to the single closed form.
    pub fn all(&self, x: &[f64]) -> Vec<Vec<f64>> {
        match &self.branches {
            Some(b) => b(x),
            None => vec![self.apply(x)],
        }
    }

    pub fn has_branches(&self) -> bool {
        self.branches.is_some()
    }
}

pub type DirectFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A lifted convex representation `[g : g_1, ..., g_r]` of some `f`.
#[derive(Clone)]
pub struct CnForm {
    pub(crate) n: usize,
    pub(crate) m: usize,
    pub(crate) objective: ScalarField,
    pub(crate) constraints: Vec<ScalarField>,
    pub(crate) ineq: Vec<ScalarField>,
    pub(crate) domain_box: Option<BoxBounds>,
    pub(crate) grade: ConvexityGrade,
    pub(crate) exact: bool,
    pub(crate) lift: Option<Lift>,
    pub(crate) f_direct: Option<DirectFn>,
    pub(crate) constraint_names: Vec<String>,
    pub(crate) y_labels: Vec<String>,
}

impl fmt::Debug for CnForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CnForm")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("r", &self.constraints.len())
            .field("ineq", &self.ineq.len())
            .field("grade", &self.grade)
            .field("exact", &self.exact)
            .finish()
    }
}

impl CnForm {
    /// Builds a form with `Plain` grade, no lift and `exact = false`.
    pub fn new(n: usize, m: usize, objective: ScalarField, constraints: Vec<ScalarField>) -> Result<Self> {
        let dim = n + m;
        if constraints.is_empty() {
            return Err(CnError::NoConstraints);
        }
        check_dim(&objective, dim, "objective")?;
        for c in &constraints {
            check_dim(c, dim, "constraint")?;
        }
        let r = constraints.len();
        Ok(Self {
            n,
            m,
            objective,
            constraints,
            ineq: Vec::new(),
            domain_box: None,
            grade: ConvexityGrade::Plain,
            exact: false,
            lift: None,
            f_direct: None,
            constraint_names: (1..=r).map(|i| format!("g{i}")).collect(),
            y_labels: (1..=m).map(|i| format!("y{i}")).collect(),
        })
    }

    pub fn with_ineq(mut self, ineq: Vec<ScalarField>) -> Result<Self> {
        for h in &ineq {
            check_dim(h, self.n + self.m, "inequality")?;
        }
        self.ineq = ineq;
        Ok(self)
    }

    pub fn with_domain_box(mut self, b: BoxBounds) -> Result<Self> {
        if b.dim() != self.n {
            return Err(CnError::DimensionMismatch { expected: self.n, got: b.dim(), context: "domain box" });
        }
        self.domain_box = Some(b);
        Ok(self)
    }

    pub fn with_grade(mut self, grade: ConvexityGrade) -> Result<Self> {
        if let ConvexityGrade::Uniform(rho) = grade {
            if !(rho > 0.0) {
                return Err(CnError::BadSpec(format!("uniform grade needs rho_bar > 0, got {rho}")));
            }
        }
        self.grade = grade;
        Ok(self)
    }

    pub fn with_exact(mut self, exact: bool) -> Self {
        self.exact = exact;
        self
    }

    pub fn with_lift(mut self, lift: Lift) -> Self {
        self.lift = Some(lift);
        self
    }

    pub fn with_f_direct<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.f_direct = Some(Arc::new(f));
        self
    }

    pub fn with_constraint_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.constraints.len() {
            return Err(CnError::DimensionMismatch {
                expected: self.constraints.len(),
                got: names.len(),
                context: "constraint names",
            });
        }
        self.constraint_names = names;
        Ok(self)
    }

    pub fn with_y_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.m {
            return Err(CnError::DimensionMismatch { expected: self.m, got: labels.len(), context: "y labels" });
        }
        self.y_labels = labels;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn dim(&self) -> usize {
        self.n + self.m
    }
    pub fn r(&self) -> usize {
        self.constraints.len()
    }
    pub fn objective(&self) -> &ScalarField {
        &self.objective
    }
    pub fn constraints(&self) -> &[ScalarField] {
        &self.constraints
    }
    pub fn ineq_constraints(&self) -> &[ScalarField] {
        &self.ineq
    }
    pub fn domain_box(&self) -> Option<&BoxBounds> {
        self.domain_box.as_ref()
    }
    pub fn grade(&self) -> &ConvexityGrade {
        &self.grade
    }
    pub fn is_exact(&self) -> bool {
        self.exact
    }
    pub fn lift_map(&self) -> Option<&Lift> {
        self.lift.as_ref()
    }
    pub fn constraint_names(&self) -> &[String] {
        &self.constraint_names
    }
    pub fn y_labels(&self) -> &[String] {
        &self.y_labels
    }
    pub fn has_f_direct(&self) -> bool {
        self.f_direct.is_some()
    }

    /// The original function, when the form carries it.
    pub fn f_direct(&self, x: &[f64]) -> Option<f64> {
        self.f_direct.as_ref().map(|f| f(x))
    }

    /// Box used for sampling `x`: the domain box or `[-5, 5]^n`.
    pub fn sampling_box(&self) -> BoxBounds {
        self.domain_box.clone().unwrap_or_else(|| BoxBounds::uniform(self.n, -5.0, 5.0))
    }

    /// Concatenates `x` and `y` into one lifted point.
    pub fn join(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.dim());
        w.extend_from_slice(x);
        w.extend_from_slice(y);
        w
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(CnError::DimensionMismatch { expected: self.n, got: x.len(), context: "x" });
        }
        Ok(())
    }
}

fn check_dim(f: &ScalarField, dim: usize, context: &'static str) -> Result<()> {
    if f.dim() != dim {
        return Err(CnError::DimensionMismatch { expected: dim, got: f.dim(), context });
    }
    Ok(())
}

/// Constraint values at a lifted point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintResidual {
    /// `g_i(x, y)` for each equality field.
    pub equality: Vec<f64>,
    /// `max(h_k(x, y), 0)` for each inequality field.
    pub hinge: Vec<f64>,
    /// Euclidean norm of the concatenation.
    pub norm: f64,
}

impl ConstraintResidual {
    pub fn equality_norm(&self) -> f64 {
        self.equality.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.equality.iter().chain(&self.hinge).fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// A point certifying that an optimality condition fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub direction: Option<Vec<f64>>,
    pub value: f64,
}

/// Three-valued outcome of a sufficient-condition check.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    /// The condition could not be established. May carry a descent
    /// direction or the best model value found.
    Inconclusive {
        hint: Option<Vec<f64>>,
    },
    Refuted(Witness),
}

impl Verdict {
    pub fn inconclusive() -> Self {
        Self::Inconclusive { hint: None }
    }
    pub fn is_certified(&self) -> bool {
        matches!(self, Self::Certified)
    }
    pub fn is_refuted(&self) -> bool {
        matches!(self, Self::Refuted(_))
    }
    pub fn is_inconclusive(&self) -> bool {
        matches!(self, Self::Inconclusive { .. })
    }
    pub fn label(&self) -> &'static str {
        match self {
            Self::Certified => "certified",
            Self::Inconclusive { .. } => "inconclusive",
            Self::Refuted(_) => "refuted",
        }
    }
}

/// Equality values, hinge values and the combined norm at `(x, y)`.
pub fn constraint_residual(form: &CnForm, x: &[f64], y: &[f64]) -> Result<ConstraintResidual> {
    form.check_x(x)?;
    if y.len() != form.m {
        return Err(CnError::DimensionMismatch { expected: form.m, got: y.len(), context: "y" });
    }
    let w = form.join(x, y);
    Ok(residual_at(form, &w))
}

/// Same as [`constraint_residual`] on a joined point.
pub fn residual_at(form: &CnForm, w: &[f64]) -> ConstraintResidual {
    let equality: Vec<f64> = form.constraints.iter().map(|c| c.value(w)).collect();
    let hinge: Vec<f64> = form.ineq.iter().map(|h| h.value(w).max(0.0)).collect();
    let norm = equality.iter().chain(&hinge).map(|v| v * v).sum::<f64>().sqrt();
    ConstraintResidual { equality, hinge, norm }
}

/// `y = lift(x)`, checked for feasibility.
pub fn lift(form: &CnForm, x: &[f64]) -> Result<Vec<f64>> {
    form.check_x(x)?;
    let l = form.lift.as_ref().ok_or(CnError::NoLift)?;
    let y = l.apply(x);
    if y.len() != form.m {
        return Err(CnError::DimensionMismatch { expected: form.m, got: y.len(), context: "lift output" });
    }
    let res = residual_at(form, &form.join(x, &y));
    if !(res.max_abs() <= VALUE_TOL) {
        return Err(CnError::LiftInfeasible { residual: res.norm });
    }
    Ok(y)
}

/// Every feasible lift branch of `x`, each as a `y` vector.
pub fn lift_branches(form: &CnForm, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    form.check_x(x)?;
    let l = form.lift.as_ref().ok_or(CnError::NoLift)?;
    Ok(l.all(x))
}

/// `f(x)` computed as `g(x, lift(x))`.
pub fn eval_f_via_form(form: &CnForm, x: &[f64]) -> Result<f64> {
    let y = lift(form, x)?;
    Ok(form.objective.value(&form.join(x, &y)))
}

/// Sampling refutation of the curvature bound `d' H d >= d' B d`.
///
/// Points are drawn with `x` in the sampling box and `y` uniform in
/// `[-3, 3]^m`; directions are uniform on the unit sphere. A clean run
/// returns `Inconclusive` since sampling cannot certify.
pub fn check_weak_uniform(form: &CnForm, samples: usize, seed: u64) -> Result<Verdict> {
    if matches!(form.grade, ConvexityGrade::Plain) {
        return Err(CnError::GradeMismatch { grade: form.grade.name() });
    }
    if !form.objective.has_hess_vec() {
        return Err(CnError::MissingHessian);
    }
    let dim = form.dim();
    let xbox = form.sampling_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let mut w = xbox.sample(&mut rng);
        w.extend((0..form.m).map(|_| rng.gen_range(-3.0..=3.0)));
        let d = unit_direction(&mut rng, dim);
        let hd = form.objective.hess_vec(&w, &d).expect("checked above");
        let curv: f64 = hd.iter().zip(&d).map(|(a, b)| a * b).sum();
        let b = form.grade.b_matrix(&w).expect("non-plain grade");
        let dv = DVector::from_column_slice(&d);
        let bound = dv.dot(&(&b * &dv));
        if curv < bound - 1e-8 {
            return Ok(Verdict::Refuted(Witness { point: w, direction: Some(d), value: curv - bound }));
        }
    }
    Ok(Verdict::inconclusive())
}

/// Sampled test that `b` is positive semidefinite.
pub fn sampled_psd(b: &DMatrix<f64>, samples: usize, seed: u64) -> Result<()> {
    let dim = b.nrows();
    if dim == 0 {
        return Ok(());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..samples + dim {
        // Coordinate axes first, then random directions.
        let d = if k < dim {
            let mut e = DVector::zeros(dim);
            e[k] = 1.0;
            e
        } else {
            DVector::from_vec(unit_direction(&mut rng, dim))
        };
        let q = d.dot(&(b * &d));
        if q < -1e-10 {
            return Err(CnError::NotPsd { value: q });
        }
    }
    Ok(())
}

/// Uniform direction on the unit sphere.
pub fn unit_direction<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        // Box-Muller pairs give Gaussian coordinates.
        let mut v: Vec<f64> = (0..dim)
            .map(|_| {
                let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                let u2: f64 = rng.gen::<f64>();
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-12 {
            v.iter_mut().for_each(|a| *a /= norm);
            return v;
        }
    }
}

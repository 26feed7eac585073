//! Global-optimality certificates at a lifted candidate point.
//!
//! All checks are sufficient conditions. A failed check yields
//! `Inconclusive`, never a claim that the candidate is not optimal; only the
//! K-set falsifier returns `Refuted`, and then only with a concrete witness
//! showing the K-set meets the feasible set.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cn_core::{
    lift_branches, residual_at, BoxBounds, CnForm, ConvexityGrade, Verdict, Witness, FEAS_TOL, VALUE_TOL,
};
use crate::convex_inner::{
    cone_lp_certificate, slater_direction, solve_cone_qp, ConeQpResult, ConeQpStatus, TRUST_RADIUS,
};
use crate::error::{CnError, Result};
use crate::solver::Partition;

/// Numerical zero for the "value is nonnegative" tests.
pub const CERT_TOL: f64 = -1e-9;
/// Strictness margin for K-set membership of a sample.
pub const WITNESS_TOL: f64 = -1e-10;
/// Inequalities with `h >= -ACTIVE_TOL` join the direction cone.
const ACTIVE_TOL: f64 = 1e-8;

/// A point of the feasible set, optionally verified to lie on the graph of
/// `f` (`g(x, y) = f(x)`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidatePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub in_xf: bool,
}

impl CandidatePoint {
    /// Checks feasibility to `1e-8` and whether the objective matches the
    /// direct function to `1e-6`. Forms without a direct function count as
    /// on the graph when they are exact.
    pub fn new(form: &CnForm, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != form.n() {
            return Err(CnError::DimensionMismatch { expected: form.n(), got: x.len(), context: "candidate x" });
        }
        if y.len() != form.m() {
            return Err(CnError::DimensionMismatch { expected: form.m(), got: y.len(), context: "candidate y" });
        }
        let w = form.join(&x, &y);
        let res = residual_at(form, &w);
        if res.max_abs() > FEAS_TOL {
            return Err(CnError::InfeasibleCandidate { residual: res.max_abs() });
        }
        let in_xf = match form.f_direct(&x) {
            Some(f) => (form.objective().value(&w) - f).abs() <= VALUE_TOL,
            None => form.is_exact(),
        };
        Ok(Self { x, y, in_xf })
    }

    /// Lifts `x` and keeps the branch with the smallest objective.
    pub fn from_x(form: &CnForm, x: &[f64]) -> Result<Self> {
        let branches = lift_branches(form, x)?;
        let best = branches
            .into_iter()
            .map(|y| (form.objective().value(&form.join(x, &y)), y))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, y)| y)
            .ok_or(CnError::NoLift)?;
        Self::new(form, x.to_vec(), best)
    }

    /// No checks; `in_xf` is `false`.
    pub fn unchecked(x: Vec<f64>, y: Vec<f64>) -> Self {
        Self { x, y, in_xf: false }
    }

    pub fn joined(&self) -> Vec<f64> {
        let mut w = self.x.clone();
        w.extend_from_slice(&self.y);
        w
    }
}

/// Linearized feasible directions `{d : A d <= 0}` at a candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionCone {
    /// One row per equality constraint: its gradient.
    pub a: DMatrix<f64>,
    /// Gradients of the active inequality constraints.
    pub active_ineq: DMatrix<f64>,
    /// When set, equality rows are enforced as `= 0` instead of `<= 0`.
    pub equality_mode: bool,
}

impl DirectionCone {
    pub fn at(form: &CnForm, pt: &CandidatePoint, equality_mode: bool) -> Self {
        let w = pt.joined();
        let dim = w.len();
        let rows: Vec<Vec<f64>> = form.constraints().iter().map(|c| c.gradient(&w)).collect();
        let active: Vec<Vec<f64>> =
            form.ineq_constraints().iter().filter(|h| h.value(&w) >= -ACTIVE_TOL).map(|h| h.gradient(&w)).collect();
        Self { a: stack(&rows, dim), active_ineq: stack(&active, dim), equality_mode }
    }

    /// The cone restricted to the coordinates of block `j`, built from the
    /// constraints the block owns and the active inequalities inside it.
    pub fn block(form: &CnForm, part: &Partition, pt: &CandidatePoint, j: usize, equality_mode: bool) -> Self {
        let full = Self::at(form, pt, false);
        let coords = part.block_coords(j, form.n());
        let owned = part.owned_constraints(j);
        let a = DMatrix::from_fn(owned.len(), coords.len(), |r, c| full.a[(owned[r], coords[c])]);
        let w = pt.joined();
        let inside: Vec<Vec<f64>> = form
            .ineq_constraints()
            .iter()
            .filter(|h| h.value(&w) >= -ACTIVE_TOL && h.support().iter().all(|i| coords.contains(i)))
            .map(|h| {
                let g = h.gradient(&w);
                coords.iter().map(|&c| g[c]).collect()
            })
            .collect();
        Self { a, active_ineq: stack(&inside, coords.len()), equality_mode }
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    /// All rows as `<=` constraints: equality rows appear twice with
    /// opposite signs in equality mode.
    pub fn inequality_matrix(&self) -> DMatrix<f64> {
        let mut blocks = vec![self.a.clone()];
        if self.equality_mode {
            blocks.push(-&self.a);
        }
        blocks.push(self.active_ineq.clone());
        let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
        let mut out = DMatrix::zeros(rows, self.dim());
        let mut at = 0;
        for b in blocks {
            out.view_mut((at, 0), (b.nrows(), b.ncols())).copy_from(&b);
            at += b.nrows();
        }
        out
    }

    pub fn contains(&self, d: &[f64], tol: f64) -> bool {
        let d = DVector::from_column_slice(d);
        let m = self.inequality_matrix();
        m.nrows() == 0 || (m * d).max() <= tol
    }
}

fn stack(rows: &[Vec<f64>], dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j])
}

fn grade_matrix(form: &CnForm, w: &[f64]) -> Result<DMatrix<f64>> {
    form.grade().b_matrix(w).ok_or(CnError::GradeMismatch { grade: form.grade().name() })
}

/// Second-order direction test.
///
/// The cone QP `min q'd + d'Bd/2` over the direction cone is solved first;
/// a nonnegative optimum certifies. Otherwise the same model is evaluated
/// on feasible lifted points `(x, lift(x)) - w*` (a grid for `n <= 3`,
/// random and coordinate-snapped samples beyond), refined by compass
/// search. A nonnegative minimum there also certifies: the direction set
/// of the test only needs to cover displacements to feasible points.
pub fn wcnp_condition(form: &CnForm, pt: &CandidatePoint) -> Result<(Verdict, ConeQpResult)> {
    let w = pt.joined();
    let b = grade_matrix(form, &w)?;
    let q = DVector::from_vec(form.objective().gradient(&w));
    let cone = DirectionCone::at(form, pt, false);
    let qp = solve_cone_qp(&q, &b, &cone.inequality_matrix(), TRUST_RADIUS)?;
    if !pt.in_xf {
        return Ok((Verdict::inconclusive(), qp));
    }
    if qp.is_optimal() && qp.value >= CERT_TOL {
        return Ok((Verdict::Certified, qp));
    }
    let verdict = match lifted_model_min(form, pt, &q, &b, &(0..form.n()).collect::<Vec<_>>(), 0)? {
        Some(min) if min.value >= CERT_TOL => Verdict::Certified,
        _ => Verdict::Inconclusive { hint: hint_of(&qp) },
    };
    Ok((verdict, qp))
}

fn hint_of(qp: &ConeQpResult) -> Option<Vec<f64>> {
    match &qp.status {
        ConeQpStatus::Unbounded { direction } => Some(direction.clone()),
        _ if qp.value < CERT_TOL => Some(qp.d_star.clone()),
        _ => None,
    }
}

/// First-order direction test: certifies when `q'd >= 0` on the whole cone.
pub fn lcnp_condition(form: &CnForm, pt: &CandidatePoint) -> Verdict {
    let w = pt.joined();
    let q = DVector::from_vec(form.objective().gradient(&w));
    let cone = DirectionCone::at(form, pt, false);
    match cone_lp_certificate(&q, &cone.inequality_matrix()) {
        Verdict::Certified if pt.in_xf => Verdict::Certified,
        Verdict::Refuted(wit) => Verdict::Inconclusive { hint: wit.direction },
        _ => Verdict::inconclusive(),
    }
}

/// Whether some direction satisfies every cone row strictly.
pub fn slater_holds(form: &CnForm, pt: &CandidatePoint) -> bool {
    slater_direction(&DirectionCone::at(form, pt, false).inequality_matrix()).is_some()
}

/// Norm of `grad g + sum alpha_i grad g_i` (plus `B d` when `d_star` is
/// given). The normalized variant divides by `1 + sum |alpha_i|`, the
/// scaling that puts `(eta, eta alpha)` on the unit simplex.
pub fn kkt_residual(
    form: &CnForm,
    pt: &CandidatePoint,
    alpha: &[f64],
    d_star: Option<&[f64]>,
    normalized: bool,
) -> Result<f64> {
    let w = pt.joined();
    if w.len() != form.dim() {
        return Err(CnError::DimensionMismatch { expected: form.dim(), got: w.len(), context: "candidate" });
    }
    if alpha.len() != form.r() {
        return Err(CnError::DimensionMismatch { expected: form.r(), got: alpha.len(), context: "multipliers" });
    }
    let mut v = DVector::from_vec(form.objective().gradient(&w));
    let mut buf = vec![0.0; w.len()];
    for (c, &a) in form.constraints().iter().zip(alpha) {
        if a != 0.0 {
            c.gradient_into(&w, &mut buf);
            v.axpy(a, &DVector::from_column_slice(&buf), 1.0);
        }
    }
    if let Some(d) = d_star {
        if d.len() != w.len() {
            return Err(CnError::DimensionMismatch { expected: w.len(), got: d.len(), context: "direction" });
        }
        let b = grade_matrix(form, &w)?;
        v += b * DVector::from_column_slice(d);
    }
    let r = v.norm();
    Ok(if normalized { r / (1.0 + alpha.iter().map(|a| a.abs()).sum::<f64>()) } else { r })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KSet {
    /// `q'd + d'Bd/2 < 0`.
    Kw,
    /// `q'd + rho/2 ||d||^2 < 0`.
    Ku,
    /// `q'd < 0`.
    Kc,
}

/// Searches for a feasible lifted point inside a K-set.
///
/// Samples `x` from `bounds` (the form's sampling box when `None`),
/// snapping each coordinate to `x*` with probability one half, and tries
/// every lift branch. Sample `i` draws from its own ChaCha stream, so the
/// result does not depend on the thread count.
pub fn falsify_k_set(
    form: &CnForm,
    pt: &CandidatePoint,
    kind: KSet,
    bounds: Option<&BoxBounds>,
    n_samples: usize,
    radius: Option<f64>,
    seed: u64,
) -> Result<Verdict> {
    if form.lift_map().is_none() {
        return Err(CnError::NoLift);
    }
    if let Some(r) = radius {
        if !(r > 0.0) {
            return Err(CnError::BadConfig(format!("radius must be positive, got {r}")));
        }
    }
    let w0 = pt.joined();
    let q = DVector::from_vec(form.objective().gradient(&w0));
    let model = match kind {
        KSet::Kw => Model::Quadratic(grade_matrix(form, &w0)?),
        KSet::Ku => match form.grade() {
            ConvexityGrade::Uniform(rho) => Model::Uniform(*rho),
            g => return Err(CnError::GradeMismatch { grade: g.name() }),
        },
        KSet::Kc => Model::Linear,
    };
    let mut sbox = bounds.cloned().unwrap_or_else(|| form.sampling_box());
    if sbox.dim() != form.n() {
        return Err(CnError::DimensionMismatch { expected: form.n(), got: sbox.dim(), context: "sampling box" });
    }
    if let Some(r) = radius {
        for i in 0..form.n() {
            sbox.lower[i] = sbox.lower[i].max(pt.x[i] - r);
            sbox.upper[i] = sbox.upper[i].min(pt.x[i] + r);
        }
    }
    let hit = (0..n_samples).into_par_iter().find_map_first(|i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut x = sbox.sample(&mut rng);
        for (k, xi) in x.iter_mut().enumerate() {
            if rng.gen_bool(0.5) {
                *xi = pt.x[k];
            }
        }
        let branches = lift_branches(form, &x).ok()?;
        branches.into_iter().find_map(|y| {
            let w = form.join(&x, &y);
            if residual_at(form, &w).max_abs() > FEAS_TOL {
                return None;
            }
            let d: Vec<f64> = w.iter().zip(&w0).map(|(a, b)| a - b).collect();
            if let Some(r) = radius {
                if d.iter().map(|v| v * v).sum::<f64>().sqrt() > r {
                    return None;
                }
            }
            let v = model.eval(&q, &d);
            (v < WITNESS_TOL).then_some(Witness { point: w, direction: Some(d), value: v })
        })
    });
    Ok(match hit {
        Some(w) => Verdict::Refuted(w),
        None => Verdict::inconclusive(),
    })
}

enum Model {
    Quadratic(DMatrix<f64>),
    Uniform(f64),
    Linear,
}

impl Model {
    fn eval(&self, q: &DVector<f64>, d: &[f64]) -> f64 {
        let dv = DVector::from_column_slice(d);
        let lin = q.dot(&dv);
        match self {
            Self::Quadratic(b) => lin + 0.5 * dv.dot(&(b * &dv)),
            Self::Uniform(rho) => lin + 0.5 * rho * dv.norm_squared(),
            Self::Linear => lin,
        }
    }
}

/// Best lifted point found by [`lifted_model_min`].
#[derive(Debug, Clone)]
struct ModelMin {
    value: f64,
}

/// Minimum of `q'd + d'Bd/2` over `d = (x, lift(x)) - w*` with only the `x`
/// coordinates in `free` varying. `None` when the form has no lift.
fn lifted_model_min(
    form: &CnForm,
    pt: &CandidatePoint,
    q: &DVector<f64>,
    b: &DMatrix<f64>,
    free: &[usize],
    seed: u64,
) -> Result<Option<ModelMin>> {
    if form.lift_map().is_none() || free.is_empty() {
        return Ok(None);
    }
    let w0 = pt.joined();
    let model = Model::Quadratic(b.clone());
    let bounds = search_box(form, &pt.x);
    let eval = |x: &[f64]| -> f64 {
        let Ok(branches) = lift_branches(form, x) else { return f64::INFINITY };
        branches
            .into_iter()
            .filter_map(|y| {
                let w = form.join(x, &y);
                if residual_at(form, &w).max_abs() > FEAS_TOL {
                    return None;
                }
                let d: Vec<f64> = w.iter().zip(&w0).map(|(a, b)| a - b).collect();
                Some(model.eval(q, &d))
            })
            .fold(f64::INFINITY, f64::min)
    };
    let place = |vals: &[f64]| -> Vec<f64> {
        let mut x = pt.x.clone();
        for (k, &i) in free.iter().enumerate() {
            x[i] = vals[k];
        }
        x
    };
    let k = free.len();
    let per_dim: usize = match k {
        1 | 2 => 201,
        3 => 41,
        _ => 0,
    };
    let mut points: Vec<Vec<f64>> = Vec::new();
    if per_dim > 0 {
        let total = per_dim.pow(k as u32);
        points.extend((0..total).map(|mut flat| {
            let mut v = vec![0.0; k];
            for (d, &i) in free.iter().enumerate().rev() {
                let t = (flat % per_dim) as f64 / (per_dim - 1) as f64;
                v[d] = bounds.lower[i] + t * (bounds.upper[i] - bounds.lower[i]);
                flat /= per_dim;
            }
            place(&v)
        }));
    }
    let random = if per_dim > 0 { 2000 } else { 20000 };
    points.extend((0..random).map(|s| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa11ce);
        rng.set_stream(s as u64);
        let v: Vec<f64> = free
            .iter()
            .map(|&i| if rng.gen_bool(0.5) { pt.x[i] } else { rng.gen_range(bounds.lower[i]..=bounds.upper[i]) })
            .collect();
        place(&v)
    }));
    let mut scored: Vec<(f64, usize)> = points.par_iter().enumerate().map(|(i, x)| (eval(x), i)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut best = scored.first().map_or(f64::INFINITY, |s| s.0);
    let step0 = free.iter().map(|&i| bounds.upper[i] - bounds.lower[i]).fold(0.0, f64::max) / 200.0;
    for &(_, idx) in scored.iter().take(3) {
        best = best.min(compass(&eval, points[idx].clone(), free, step0));
    }
    Ok(Some(ModelMin { value: best }))
}

fn search_box(form: &CnForm, x: &[f64]) -> BoxBounds {
    form.domain_box().cloned().unwrap_or_else(|| BoxBounds {
        lower: x.iter().map(|v| v.min(0.0) - 2.0).collect(),
        upper: x.iter().map(|v| v.max(0.0) + 2.0).collect(),
    })
}

fn compass<F: Fn(&[f64]) -> f64>(eval: &F, mut x: Vec<f64>, free: &[usize], mut step: f64) -> f64 {
    let mut fx = eval(&x);
    let mut iters = 0;
    while step > 1e-10 && iters < 2000 {
        iters += 1;
        let mut improved = false;
        for &i in free {
            for s in [step, -step] {
                let mut t = x.clone();
                t[i] += s;
                let ft = eval(&t);
                if ft < fx {
                    x = t;
                    fx = ft;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    fx
}

/// Per-block direction tests and their conjunction.
///
/// Block `j` sees the gradient, `B` and cone rows restricted to its own
/// coordinates. The lifted-model fallback varies only the block's `x`
/// coordinates, the rest stay at the candidate.
pub fn blockwise_condition(form: &CnForm, part: &Partition, pt: &CandidatePoint) -> Result<(Vec<Verdict>, Verdict)> {
    part.validate(form)?;
    if let Some(l) = part.overlap_links.first() {
        let c = form.constraints().iter().position(|c| c.support().contains(&l.coordinate)).unwrap_or(0);
        return Err(CnError::NotDecomposable { constraint: c });
    }
    let w = pt.joined();
    let b = grade_matrix(form, &w)?;
    let q = DVector::from_vec(form.objective().gradient(&w));
    let mut verdicts = Vec::with_capacity(part.p());
    for j in 0..part.p() {
        let coords = part.block_coords(j, form.n());
        let cone = DirectionCone::block(form, part, pt, j, false);
        let qj = DVector::from_iterator(coords.len(), coords.iter().map(|&c| q[c]));
        let bj = DMatrix::from_fn(coords.len(), coords.len(), |r, c| b[(coords[r], coords[c])]);
        let qp = solve_cone_qp(&qj, &bj, &cone.inequality_matrix(), TRUST_RADIUS)?;
        let v = if !pt.in_xf {
            Verdict::inconclusive()
        } else if qp.is_optimal() && qp.value >= CERT_TOL {
            Verdict::Certified
        } else {
            match lifted_model_min(form, pt, &q, &b, &part.x_blocks[j], j as u64)? {
                Some(m) if m.value >= CERT_TOL => Verdict::Certified,
                _ => Verdict::Inconclusive { hint: hint_of(&qp) },
            }
        };
        verdicts.push(v);
    }
    let agg = if verdicts.iter().all(Verdict::is_certified) { Verdict::Certified } else { Verdict::inconclusive() };
    Ok((verdicts, agg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cn_core::ScalarField;
    use crate::combinators::from_convex;
    use crate::problems::{make_problem, LsData, ProblemSpec};

    fn origin(form: &CnForm) -> CandidatePoint {
        CandidatePoint::from_x(form, &vec![0.0; form.n()]).unwrap()
    }

    #[test]
    fn ex42_qp_direction_and_multipliers() {
        let (f, _) = make_problem(&ProblemSpec::ex42(2.0)).unwrap();
        let pt = origin(&f);
        assert!(pt.in_xf);
        let (v, qp) = wcnp_condition(&f, &pt).unwrap();
        assert!(v.is_certified());
        assert!((qp.value + 1.0).abs() < 1e-6, "{}", qp.value);
        assert!((qp.d_star[0] + qp.d_star[1] - 1.0).abs() < 1e-6);
        assert!(qp.d_star[2..].iter().all(|d| d.abs() < 1e-6));
        let alpha = [0.0, 0.0, 2.0, 0.0, 0.0, 2.0];
        let r = kkt_residual(&f, &pt, &alpha, Some(&qp.d_star), false).unwrap();
        assert!(r < 1e-6, "{r}");
        let plain = kkt_residual(&f, &pt, &alpha, None, false).unwrap();
        assert!((plain - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ex42_first_order_is_inconclusive() {
        let (f, _) = make_problem(&ProblemSpec::ex42(2.0)).unwrap();
        let v = lcnp_condition(&f, &origin(&f));
        assert!(matches!(v, Verdict::Inconclusive { hint: Some(_) }));
    }

    #[test]
    fn zero_gradient_certifies() {
        let sq =
            ScalarField::new(1, |x| x[0] * x[0], |x, g| g[0] = 2.0 * x[0]).with_hess_vec(|_, v, o| o[0] = 2.0 * v[0]);
        let f = from_convex(sq, ConvexityGrade::constant(DMatrix::zeros(2, 2))).unwrap();
        let pt = CandidatePoint::new(&f, vec![0.0], vec![0.0]).unwrap();
        assert!(wcnp_condition(&f, &pt).unwrap().0.is_certified());
        assert!(lcnp_condition(&f, &pt).is_certified());
        assert_eq!(kkt_residual(&f, &pt, &[0.0], None, false).unwrap(), 0.0);
    }

    #[test]
    fn infeasible_candidate() {
        let (f, _) = make_problem(&ProblemSpec::ex42(2.0)).unwrap();
        let err = CandidatePoint::new(&f, vec![0.0, 0.0], vec![1.0; 6]).unwrap_err();
        assert!(matches!(err, CnError::InfeasibleCandidate { .. }));
    }

    #[test]
    fn zero_norm_k_sets() {
        let spec = |l| ProblemSpec::zero_norm(2, l, LsData::sum_to_one(2));
        let (f, _) = make_problem(&spec(1.0)).unwrap();
        let pt = origin(&f);
        assert_eq!(pt.y, vec![0.0, 0.0, 1.0, 1.0]);
        assert!(falsify_k_set(&f, &pt, KSet::Kc, None, 1000, None, 7).unwrap().is_refuted());
        assert!(falsify_k_set(&f, &pt, KSet::Kw, None, 5000, None, 7).unwrap().is_inconclusive());
        let (f, _) = make_problem(&spec(0.5)).unwrap();
        assert!(falsify_k_set(&f, &origin(&f), KSet::Kw, None, 5000, None, 7).unwrap().is_refuted());
        assert!(matches!(
            falsify_k_set(&f, &origin(&f), KSet::Ku, None, 10, None, 7),
            Err(CnError::GradeMismatch { .. })
        ));
    }

    #[test]
    fn straddling_partition_is_rejected() {
        let (f, _) = make_problem(&ProblemSpec::ex42(2.0)).unwrap();
        let bad =
            Partition::new(vec![vec![0, 1], vec![]], vec![vec![], (0..6).collect()], vec![0, 0, 0, 1, 1, 1], vec![]);
        let err = blockwise_condition(&f, &bad, &origin(&f)).unwrap_err();
        assert!(matches!(err, CnError::NotDecomposable { .. }));
    }

    #[test]
    fn ex42_blockwise_agrees() {
        let (f, p) = make_problem(&ProblemSpec::ex42(2.0)).unwrap();
        let (per, agg) = blockwise_condition(&f, &p, &origin(&f)).unwrap();
        assert!(per.iter().all(Verdict::is_certified));
        assert!(agg.is_certified());
    }
}

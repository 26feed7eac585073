//! Block Gauss–Seidel augmented-Lagrangian solver.
//!
//! Each outer iteration sweeps the blocks in ascending order, minimizing
//! `A_j = g + alpha_j' g_j + sigma/2 ||g_j||^2` (plus hinge and overlap
//! penalties) over block `j` with the other blocks frozen. Multipliers then
//! move by `sigma * g_j` and the penalty grows by the factor `N`.

mod partition;

use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cn_core::{unit_direction, CnForm, ScalarField, Verdict, FEAS_TOL, VALUE_TOL};
use crate::convex_inner::{minimize_smooth, InnerConfig};
use crate::error::{CnError, Result};

pub use partition::{OverlapLink, Partition};

/// Which value of a shared coordinate the later block is anchored to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorMode {
    /// The copy just produced by the earlier block in the same sweep.
    #[default]
    CurrentSweep,
    /// The copy from the previous sweep.
    PreviousSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub eps: f64,
    pub sigma1: f64,
    /// Penalty growth factor, must exceed 1.
    #[serde(rename = "big_n")]
    pub big_n: f64,
    /// Initial multipliers: empty means zero, one entry fills every
    /// constraint, otherwise one entry per constraint.
    pub alpha0: Vec<f64>,
    /// Initial joined point: empty means zero, one entry fills, otherwise
    /// `n + m` entries.
    pub w0: Vec<f64>,
    pub max_outer: usize,
    pub inner: InnerConfig,
    pub sigma_cap: f64,
    pub step3_convexity_samples: usize,
    pub anchor: AnchorMode,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps: 1e-4,
            sigma1: 5.0,
            big_n: 10.0,
            alpha0: Vec::new(),
            w0: Vec::new(),
            max_outer: 30,
            inner: InnerConfig::default(),
            sigma_cap: 1e12,
            step3_convexity_samples: 200,
            anchor: AnchorMode::CurrentSweep,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.eps) {
            return Err(CnError::BadConfig(format!("eps must be positive, got {}", self.eps)));
        }
        if !pos(self.sigma1) {
            return Err(CnError::BadConfig(format!("sigma1 must be positive, got {}", self.sigma1)));
        }
        if !(self.big_n > 1.0 && self.big_n.is_finite()) {
            return Err(CnError::BadConfig(format!("N must exceed 1, got {}", self.big_n)));
        }
        if !pos(self.sigma_cap) || self.sigma_cap < self.sigma1 {
            return Err(CnError::BadConfig(format!("sigma_cap {} is below sigma1", self.sigma_cap)));
        }
        if self.max_outer == 0 {
            return Err(CnError::BadConfig("max_outer must be at least 1".into()));
        }
        if self.alpha0.iter().chain(&self.w0).any(|v| !v.is_finite()) {
            return Err(CnError::BadConfig("alpha0 and w0 must be finite".into()));
        }
        self.inner.validate()
    }

    fn expand(v: &[f64], len: usize, what: &'static str) -> Result<Vec<f64>> {
        match v.len() {
            0 => Ok(vec![0.0; len]),
            1 => Ok(vec![v[0]; len]),
            l if l == len => Ok(v.to_vec()),
            l => Err(CnError::DimensionMismatch { expected: len, got: l, context: what }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverState {
    /// Outer iteration, starting at 1.
    pub k: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Multipliers of each block, in the order of `Partition::owned_constraints`.
    pub alpha: Vec<Vec<f64>>,
    pub sigma: f64,
    /// `sum_j ||g_j||` over the equality constraints.
    pub residual: f64,
    /// Largest inequality violation.
    pub hinge_violation: f64,
    pub hk: f64,
    pub g_value: f64,
    pub f_value: Option<f64>,
    /// Private copies of overlap coordinates, one per link.
    pub copies: Vec<f64>,
    /// Inner gradient norm reached by each block in the last sweep.
    pub block_grad_norms: Vec<f64>,
}

impl SolverState {
    /// Starting state built from the configuration.
    pub fn initial(form: &CnForm, part: &Partition, cfg: &SolverConfig) -> Result<Self> {
        let (n, m) = (form.n(), form.m());
        let w = SolverConfig::expand(&cfg.w0, n + m, "initial point w0")?;
        let a = SolverConfig::expand(&cfg.alpha0, form.r(), "initial multipliers alpha0")?;
        let alpha = (0..part.p()).map(|j| part.owned_constraints(j).iter().map(|&i| a[i]).collect()).collect();
        let copies = part.overlap_links.iter().map(|l| w[l.coordinate]).collect();
        let mut s = Self {
            k: 1,
            x: w[..n].to_vec(),
            y: w[n..].to_vec(),
            alpha,
            sigma: cfg.sigma1,
            residual: 0.0,
            hinge_violation: 0.0,
            hk: 0.0,
            g_value: 0.0,
            f_value: None,
            copies,
            block_grad_norms: vec![0.0; part.p()],
        };
        s.refresh(form, part);
        Ok(s)
    }

    pub fn joined(&self) -> Vec<f64> {
        let mut w = self.x.clone();
        w.extend_from_slice(&self.y);
        w
    }

    /// Recomputes the residual and diagnostics from the current point.
    pub fn refresh(&mut self, form: &CnForm, part: &Partition) {
        let w = self.joined();
        let gv: Vec<f64> = form.constraints().iter().map(|c| c.value(&w)).collect();
        self.residual =
            (0..part.p()).map(|j| part.owned_constraints(j).iter().map(|&i| gv[i] * gv[i]).sum::<f64>().sqrt()).sum();
        self.hinge_violation = form.ineq_constraints().iter().map(|h| h.value(&w).max(0.0)).fold(0.0, f64::max);
        self.g_value = form.objective().value(&w);
        self.hk = self.g_value + self.sigma * gv.iter().map(|v| v * v).sum::<f64>();
        self.f_value = form.f_direct(&self.x);
    }

    /// Multipliers scattered back to constraint order.
    pub fn alpha_global(&self, part: &Partition, r: usize) -> Vec<f64> {
        let mut a = vec![0.0; r];
        for j in 0..part.p() {
            for (k, &i) in part.owned_constraints(j).iter().enumerate() {
                a[i] = self.alpha[j][k];
            }
        }
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// The fixed-point test fired with a feasible, sampled-convex Lagrangian.
    Optimal,
    /// `sum_j ||g_j|| < eps`.
    Approximate,
    MaxOuterIters,
    /// The penalty reached its cap without meeting the stopping test.
    Diverged,
}

impl SolveStatus {
    pub fn is_success(&self) -> bool {
        matches!(self, Self::Optimal | Self::Approximate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub k: usize,
    pub sigma: f64,
    pub residual: f64,
    pub f_value: Option<f64>,
    pub g_value: f64,
    pub hk: f64,
    /// Seconds since the solve started. Not serialized, so reports stay
    /// byte-identical across runs.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub state: SolverState,
    pub trace: Vec<TraceEntry>,
    /// Largest objective value over the trace, a proxy for bounded level sets.
    pub max_g_value: f64,
    pub max_hk: f64,
    pub certificate: Option<Verdict>,
}

impl SolveReport {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

struct BlockCtx {
    base: Vec<f64>,
    coords: Vec<usize>,
    copies: Vec<usize>,
    objective: ScalarField,
    owned: Vec<(ScalarField, f64)>,
    hinges: Vec<ScalarField>,
    anchors: Vec<(usize, f64)>,
    sigma: f64,
}

impl BlockCtx {
    fn points(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut w = self.base.clone();
        for (k, &c) in self.coords.iter().enumerate() {
            w[c] = v[k];
        }
        let mut wc = w.clone();
        let nb = self.coords.len();
        for (k, &c) in self.copies.iter().enumerate() {
            wc[c] = v[nb + k];
        }
        (w, wc)
    }

    fn value(&self, v: &[f64]) -> f64 {
        let (w, wc) = self.points(v);
        let s = self.sigma;
        let mut val = self.objective.value(&wc);
        for (c, a) in &self.owned {
            let gi = c.value(&wc);
            val += a * gi + 0.5 * s * gi * gi;
        }
        for h in &self.hinges {
            let t = h.value(&wc).max(0.0);
            val += s * t * t;
        }
        for &(c, anchor) in &self.anchors {
            val += s * (anchor - w[c]).powi(2);
        }
        val
    }

    fn gradient(&self, v: &[f64], out: &mut [f64]) {
        let (w, wc) = self.points(v);
        let s = self.sigma;
        let nb = self.coords.len();
        let mut buf = vec![0.0; w.len()];
        out.fill(0.0);
        let gather = |scale: f64, buf: &[f64], out: &mut [f64]| {
            for (k, &c) in self.coords.iter().enumerate() {
                out[k] += scale * buf[c];
            }
            for (k, &c) in self.copies.iter().enumerate() {
                out[nb + k] += scale * buf[c];
            }
        };
        self.objective.gradient_into(&wc, &mut buf);
        gather(1.0, &buf, out);
        for (c, a) in &self.owned {
            let gi = c.value(&wc);
            c.gradient_into(&wc, &mut buf);
            gather(a + s * gi, &buf, out);
        }
        for h in &self.hinges {
            let t = h.value(&wc);
            if t > 0.0 {
                h.gradient_into(&wc, &mut buf);
                gather(2.0 * s * t, &buf, out);
            }
        }
        for &(c, anchor) in &self.anchors {
            if let Some(k) = self.coords.iter().position(|&i| i == c) {
                out[k] += -2.0 * s * (anchor - w[c]);
            }
        }
    }
}

fn touches(f: &ScalarField, coords: &[usize], copies: &[usize]) -> bool {
    f.support().iter().any(|i| coords.contains(i) || copies.contains(i))
}

/// The augmented Lagrangian of block `j` as a function of the block's own
/// coordinates followed by its overlap copies.
///
/// `w` is the joined point holding every other block; `copy_values` and
/// `anchor_values` give one entry per overlap link.
pub fn augmented_lagrangian(
    form: &CnForm,
    part: &Partition,
    j: usize,
    w: &[f64],
    alpha_j: &[f64],
    sigma: f64,
    anchor_values: &[f64],
) -> Result<ScalarField> {
    if j >= part.p() {
        return Err(CnError::BlockIndexOutOfRange { index: j, blocks: part.p() });
    }
    if w.len() != form.dim() {
        return Err(CnError::DimensionMismatch { expected: form.dim(), got: w.len(), context: "joined point" });
    }
    let owned = part.owned_constraints(j);
    if alpha_j.len() != owned.len() {
        return Err(CnError::DimensionMismatch {
            expected: owned.len(),
            got: alpha_j.len(),
            context: "block multipliers",
        });
    }
    if anchor_values.len() != part.overlap_links.len() {
        return Err(CnError::DimensionMismatch {
            expected: part.overlap_links.len(),
            got: anchor_values.len(),
            context: "overlap anchors",
        });
    }
    let coords = part.block_coords(j, form.n());
    let copies = part.copies_of(j);
    let hinges = form.ineq_constraints().iter().filter(|h| touches(h, &coords, &copies)).cloned().collect();
    let anchors = part
        .overlap_links
        .iter()
        .zip(anchor_values)
        .filter(|(l, _)| l.later == j)
        .map(|(l, &v)| (l.coordinate, v))
        .collect();
    let ctx = Arc::new(BlockCtx {
        base: w.to_vec(),
        owned: owned.iter().zip(alpha_j).map(|(&i, &a)| (form.constraints()[i].clone(), a)).collect(),
        objective: form.objective().clone(),
        coords,
        copies,
        hinges,
        anchors,
        sigma,
    });
    let dim = ctx.coords.len() + ctx.copies.len();
    let (c1, c2) = (Arc::clone(&ctx), ctx);
    Ok(ScalarField::new(dim, move |v| c1.value(v), move |v, g| c2.gradient(v, g)))
}

/// The sum of every block's penalty terms plus the objective, counting each
/// constraint and inequality once. Gauss–Seidel sweeps do not increase it on
/// partitions without overlap links.
pub fn full_augmented_value(form: &CnForm, part: &Partition, state: &SolverState) -> f64 {
    let w = state.joined();
    let s = state.sigma;
    let a = state.alpha_global(part, form.r());
    let mut val = form.objective().value(&w);
    for (c, ai) in form.constraints().iter().zip(&a) {
        let gi = c.value(&w);
        val += ai * gi + 0.5 * s * gi * gi;
    }
    for h in form.ineq_constraints() {
        let t = h.value(&w).max(0.0);
        val += s * t * t;
    }
    val
}

/// One Gauss–Seidel pass over the blocks in ascending order.
pub fn block_sweep(form: &CnForm, part: &Partition, state: &SolverState, cfg: &SolverConfig) -> Result<SolverState> {
    let n = form.n();
    let mut next = state.clone();
    let mut w = state.joined();
    let previous_copies = state.copies.clone();
    for j in 0..part.p() {
        let anchors: Vec<f64> = match cfg.anchor {
            AnchorMode::CurrentSweep => next.copies.clone(),
            AnchorMode::PreviousSweep => previous_copies.clone(),
        };
        let field = augmented_lagrangian(form, part, j, &w, &next.alpha[j], next.sigma, &anchors)?;
        let coords = part.block_coords(j, n);
        let link_idx: Vec<usize> =
            part.overlap_links.iter().enumerate().filter(|(_, l)| l.earlier == j).map(|(k, _)| k).collect();
        let mut v0: Vec<f64> = coords.iter().map(|&c| w[c]).collect();
        v0.extend(link_idx.iter().map(|&k| next.copies[k]));
        let res = minimize_smooth(&field, &v0, &cfg.inner)
            .map_err(|e| CnError::InnerFailure { block: j, reason: e.to_string() })?;
        for (k, &c) in coords.iter().enumerate() {
            w[c] = res.x[k];
        }
        for (k, &l) in link_idx.iter().enumerate() {
            next.copies[l] = res.x[coords.len() + k];
        }
        next.block_grad_norms[j] = res.grad_norm;
    }
    next.x = w[..n].to_vec();
    next.y = w[n..].to_vec();
    next.refresh(form, part);
    Ok(next)
}

/// `alpha_j += sigma g_j`, `sigma *= N` (capped), `k += 1`.
pub fn multiplier_update(state: &SolverState, form: &CnForm, part: &Partition, cfg: &SolverConfig) -> SolverState {
    let mut next = state.clone();
    let w = state.joined();
    for j in 0..part.p() {
        for (k, &i) in part.owned_constraints(j).iter().enumerate() {
            next.alpha[j][k] = state.alpha[j][k] + state.sigma * form.constraints()[i].value(&w);
        }
    }
    next.sigma = (state.sigma * cfg.big_n).min(cfg.sigma_cap);
    next.k = state.k + 1;
    next
}

/// Runs the outer loop until a stopping rule fires.
pub fn solve(form: &CnForm, part: &Partition, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    part.validate(form)?;
    let start = Instant::now();
    let mut state = SolverState::initial(form, part, cfg)?;
    let mut trace = Vec::new();
    let mut prev_w = state.joined();
    loop {
        state = block_sweep(form, part, &state, cfg)?;
        trace.push(TraceEntry {
            k: state.k,
            sigma: state.sigma,
            residual: state.residual,
            f_value: state.f_value,
            g_value: state.g_value,
            hk: state.hk,
            wall_time: start.elapsed().as_secs_f64(),
        });
        let w = state.joined();
        let fixed = w.iter().zip(&prev_w).all(|(a, b)| (a - b).abs() <= 1e-10);
        let status = if fixed && in_xf(form, &state) && lagrangian_sampled_convex(form, part, &state, cfg) {
            Some(SolveStatus::Optimal)
        } else if state.residual < cfg.eps {
            Some(SolveStatus::Approximate)
        } else if state.sigma >= cfg.sigma_cap {
            Some(SolveStatus::Diverged)
        } else if trace.len() >= cfg.max_outer {
            Some(SolveStatus::MaxOuterIters)
        } else {
            None
        };
        if let Some(status) = status {
            let max_g_value = trace.iter().map(|t| t.g_value).fold(f64::NEG_INFINITY, f64::max);
            let max_hk = trace.iter().map(|t| t.hk).fold(f64::NEG_INFINITY, f64::max);
            return Ok(SolveReport { status, state, trace, max_g_value, max_hk, certificate: None });
        }
        prev_w = w;
        state = multiplier_update(&state, form, part, cfg);
        state.refresh(form, part);
    }
}

fn in_xf(form: &CnForm, state: &SolverState) -> bool {
    let w = state.joined();
    let feasible = form.constraints().iter().all(|c| c.value(&w).abs() <= FEAS_TOL)
        && form.ineq_constraints().iter().all(|h| h.value(&w) <= FEAS_TOL);
    let value_ok = match state.f_value {
        Some(f) => (state.g_value - f).abs() <= VALUE_TOL,
        None => true,
    };
    feasible && value_ok
}

/// Hessian-vector product of a field, by central differences of the
/// gradient when no closed form is attached.
pub(crate) fn hess_vec_or_fd(f: &ScalarField, w: &[f64], d: &[f64]) -> Vec<f64> {
    if let Some(hv) = f.hess_vec(w, d) {
        return hv;
    }
    let scale = w.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    let h = 1e-6 * scale;
    let plus: Vec<f64> = w.iter().zip(d).map(|(a, b)| a + h * b).collect();
    let minus: Vec<f64> = w.iter().zip(d).map(|(a, b)| a - h * b).collect();
    let (gp, gm) = (f.gradient(&plus), f.gradient(&minus));
    gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
}

/// Samples `d' (grad^2 L) d` for `L = g + alpha' g` and requires every value
/// to be at least `-1e-8`. A necessary condition for convexity only.
pub fn lagrangian_sampled_convex(form: &CnForm, part: &Partition, state: &SolverState, cfg: &SolverConfig) -> bool {
    let w = state.joined();
    let alpha = state.alpha_global(part, form.r());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_c0de);
    (0..cfg.step3_convexity_samples).all(|_| {
        let d = unit_direction(&mut rng, w.len());
        let mut q: f64 = dot(&hess_vec_or_fd(form.objective(), &w, &d), &d);
        for (c, a) in form.constraints().iter().zip(&alpha) {
            if *a != 0.0 {
                q += a * dot(&hess_vec_or_fd(c, &w, &d), &d);
            }
        }
        q >= -1e-8
    })
}

/// Normalized stationarity at the final point, combined with the
/// blockwise direction check.
///
/// Returns the verdict and the residual, which doubles as a quality score
/// when the verdict is not `Certified`.
pub fn certify_solution(form: &CnForm, part: &Partition, report: &SolveReport) -> Result<(Verdict, f64)> {
    use crate::optimality::{blockwise_condition, kkt_residual, CandidatePoint};
    let s = &report.state;
    let w = s.joined();
    let mut alpha = s.alpha_global(part, form.r());
    // The final sweep was taken at these multipliers; the first-order
    // conditions of the sweep hold at the updated ones.
    for (a, c) in alpha.iter_mut().zip(form.constraints()) {
        *a += s.sigma * c.value(&w);
    }
    let pt = CandidatePoint::unchecked(s.x.clone(), s.y.clone());
    let residual = kkt_residual(form, &pt, &alpha, None, true)?;
    if !report.status.is_success() {
        return Ok((Verdict::inconclusive(), residual));
    }
    let verdict = match CandidatePoint::new(form, s.x.clone(), s.y.clone()) {
        Ok(pt) => match blockwise_condition(form, part, &pt) {
            Ok((_, agg)) if agg.is_certified() => Verdict::Certified,
            Ok(_) | Err(CnError::GradeMismatch { .. } | CnError::NotDecomposable { .. }) => Verdict::inconclusive(),
            Err(e) => return Err(e),
        },
        Err(CnError::InfeasibleCandidate { .. }) => Verdict::inconclusive(),
        Err(e) => return Err(e),
    };
    Ok((verdict, residual))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_problem, ProblemSpec};

    fn one_d() -> CnForm {
        let obj = ScalarField::new(
            2,
            |w| w[0] * w[0],
            |w, g| {
                g[0] = 2.0 * w[0];
                g[1] = 0.0;
            },
        );
        let c = ScalarField::affine(vec![1.0, 0.0], -1.0);
        CnForm::new(1, 1, obj, vec![c]).unwrap()
    }

    #[test]
    fn hand_evaluated_block_lagrangian() {
        let f = one_d();
        let p = Partition::monolithic(&f);
        let a = augmented_lagrangian(&f, &p, 0, &[0.0, 0.0], &[2.0], 4.0, &[]).unwrap();
        assert_eq!(a.value(&[0.0, 0.0]), 0.0);
        assert!(matches!(
            augmented_lagrangian(&f, &p, 3, &[0.0, 0.0], &[2.0], 4.0, &[]),
            Err(CnError::BlockIndexOutOfRange { index: 3, blocks: 1 })
        ));
    }

    #[test]
    fn block_gradient_matches_differences() {
        let (f, p) = make_problem(&ProblemSpec::ex45(6, 2)).unwrap();
        let w: Vec<f64> = (0..f.dim()).map(|i| 0.3 + 0.1 * i as f64).collect();
        let anchors = vec![0.7; p.overlap_links.len()];
        for j in 0..p.p() {
            let alpha = vec![0.5; p.owned_constraints(j).len()];
            let a = augmented_lagrangian(&f, &p, j, &w, &alpha, 3.0, &anchors).unwrap();
            let v: Vec<f64> = (0..a.dim()).map(|i| -0.2 + 0.15 * i as f64).collect();
            let g = a.gradient(&v);
            for i in 0..a.dim() {
                let mut vp = v.clone();
                let mut vm = v.clone();
                vp[i] += 1e-6;
                vm[i] -= 1e-6;
                let fd = (a.value(&vp) - a.value(&vm)) / 2e-6;
                assert!((fd - g[i]).abs() < 1e-5 * (1.0 + fd.abs()), "block {j} coord {i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn multiplier_rule() {
        let f = one_d();
        let p = Partition::monolithic(&f);
        let cfg = SolverConfig { w0: vec![1.2, 0.0], ..Default::default() };
        let s = SolverState::initial(&f, &p, &cfg).unwrap();
        let t = multiplier_update(&s, &f, &p, &cfg);
        assert_eq!(t.alpha[0][0], 5.0 * (1.2 - 1.0));
        assert_eq!(t.sigma, 50.0);
        assert_eq!(t.k, 2);
        let z = SolverConfig { w0: vec![1.0, 0.0], ..Default::default() };
        let s = SolverState::initial(&f, &p, &z).unwrap();
        assert_eq!(multiplier_update(&s, &f, &p, &z).alpha, s.alpha);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig { big_n: 1.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { eps: 0.0, ..Default::default() }.validate().is_err());
        let cfg: SolverConfig = serde_json::from_str(r#"{"eps": 1e-3, "big_n": 100}"#).unwrap();
        assert_eq!((cfg.eps, cfg.big_n, cfg.sigma1), (1e-3, 100.0, 5.0));
    }

    #[test]
    fn trivial_problem_solves() {
        let f = one_d();
        let p = Partition::monolithic(&f);
        let r = solve(&f, &p, &SolverConfig::default()).unwrap();
        assert!(r.status.is_success(), "{:?}", r.status);
        assert!((r.state.x[0] - 1.0).abs() < 1e-4);
        assert!(r.state.residual < 1e-4);
    }
}

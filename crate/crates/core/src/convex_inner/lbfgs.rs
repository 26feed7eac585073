use std::collections::VecDeque;

use crate::cn_core::ScalarField;
use crate::error::{CnError, Result};

use super::{newton, InnerConfig};

/// Outcome of [`minimize_smooth`].
#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iters: usize,
    /// `grad_norm <= tol_grad` was reached. `false` means the iteration cap
    /// was hit or the line search stalled at machine precision.
    pub converged: bool,
    /// Objective value after each accepted step, starting with `f(x0)`.
    pub history: Vec<f64>,
}

const UNBOUNDED: f64 = -1e30;

/// Limited-memory BFGS with Armijo backtracking.
///
/// A run that stops short of `tol_grad` (iteration cap or stalled line
/// search) finishes with damped Newton steps on a dense Hessian, which
/// handles the badly scaled penalty terms of large `sigma`.
pub fn minimize_smooth(field: &ScalarField, x0: &[f64], cfg: &InnerConfig) -> Result<InnerResult> {
    cfg.validate()?;
    let n = field.dim();
    if x0.len() != n {
        return Err(CnError::DimensionMismatch { expected: n, got: x0.len(), context: "initial point" });
    }
    let mut x = x0.to_vec();
    let mut f = field.value(&x);
    if !f.is_finite() {
        return Err(CnError::LineSearchFailed(format!("objective is {f} at the initial point")));
    }
    let mut g = field.gradient(&x);
    let mut history = vec![f];
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut iters = 0;

    loop {
        let gnorm = norm(&g);
        if gnorm <= cfg.tol_grad {
            return Ok(InnerResult { x, value: f, grad_norm: gnorm, iters, converged: true, history });
        }
        if iters >= cfg.max_iters {
            return Ok(finish(field, x, f, g, history, iters, cfg));
        }

        let mut dir = two_loop(&g, &mem);
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            mem.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }
        let first_step = if mem.is_empty() { (1.0 / gnorm).min(1.0) } else { 1.0 };

        let mut step = backtrack(field, &x, f, &dir, slope, capped(first_step, &dir, cfg), cfg);
        if mem.is_empty() {
            step = step.map(|s| expand(field, &x, &dir, s, cfg));
        }
        if step.is_none() && !mem.is_empty() {
            mem.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
            step = backtrack(field, &x, f, &dir, slope, capped((1.0 / gnorm).min(1.0), &dir, cfg), cfg);
        }
        let Some((t, x_new, f_new)) = step else {
            check_gradient(field, &x, f, &g)?;
            return Ok(finish(field, x, f, g, history, iters, cfg));
        };
        if f_new < UNBOUNDED {
            return Err(CnError::LineSearchFailed("objective unbounded below along the search ray".into()));
        }

        let g_new = field.gradient(&x_new);
        let s: Vec<f64> = dir.iter().map(|d| t * d).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if cfg.memory > 0 && sy > 1e-12 * norm(&s) * norm(&yv) && sy > 0.0 {
            if mem.len() == cfg.memory {
                mem.pop_front();
            }
            mem.push_back((s, yv, 1.0 / sy));
        }
        let stalled = f - f_new <= 1e-16 * f.abs().max(1.0) && x_new == x;
        x = x_new;
        f = f_new;
        g = g_new;
        history.push(f);
        iters += 1;
        if stalled {
            return Ok(finish(field, x, f, g, history, iters, cfg));
        }
    }
}

/// Hands an unconverged iterate to the Newton polish when the dimension
/// allows a dense Hessian.
fn finish(
    field: &ScalarField,
    mut x: Vec<f64>,
    mut f: f64,
    mut g: Vec<f64>,
    mut history: Vec<f64>,
    mut iters: usize,
    cfg: &InnerConfig,
) -> InnerResult {
    if norm(&g) > cfg.tol_grad && x.len() <= newton::MAX_DIM {
        iters += newton::polish(field, &mut x, &mut f, &mut g, &mut history, cfg);
    }
    let grad_norm = norm(&g);
    InnerResult { x, value: f, grad_norm, iters, converged: grad_norm <= cfg.tol_grad, history }
}

fn backtrack(
    field: &ScalarField,
    x: &[f64],
    f: f64,
    dir: &[f64],
    slope: f64,
    t0: f64,
    cfg: &InnerConfig,
) -> Option<(f64, Vec<f64>, f64)> {
    let mut t = t0;
    let mut trial = vec![0.0; x.len()];
    for _ in 0..80 {
        for i in 0..x.len() {
            trial[i] = x[i] + t * dir[i];
        }
        let ft = field.value(&trial);
        if ft.is_finite() && ft <= f + cfg.armijo_c * t * slope {
            if ft < f || (ft == f && trial.as_slice() != x) {
                return Some((t, trial, ft));
            }
            return None;
        }
        t *= cfg.backtrack;
        if t * dir.iter().fold(0.0_f64, |a, d| a.max(d.abs())) < 1e-300 {
            break;
        }
    }
    None
}

fn capped(t: f64, dir: &[f64], cfg: &InnerConfig) -> f64 {
    match cfg.max_step {
        Some(m) => t.min(m / dir.iter().fold(0.0_f64, |a, d| a.max(d.abs())).max(1e-300)),
        None => t,
    }
}

/// Doubles an accepted steepest-descent step while the value keeps
/// dropping. Without curvature pairs the first step is only a guess.
fn expand(
    field: &ScalarField,
    x: &[f64],
    dir: &[f64],
    accepted: (f64, Vec<f64>, f64),
    cfg: &InnerConfig,
) -> (f64, Vec<f64>, f64) {
    let (mut t, mut best_x, mut best_f) = accepted;
    for _ in 0..60 {
        let t2 = 2.0 * t;
        if capped(t2, dir, cfg) < t2 {
            break;
        }
        let trial: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + t2 * d).collect();
        let ft = field.value(&trial);
        if !(ft.is_finite() && ft < best_f) {
            break;
        }
        t = t2;
        best_x = trial;
        best_f = ft;
        if best_f < UNBOUNDED {
            break;
        }
    }
    (t, best_x, best_f)
}

/// Catches gradients that disagree with the function after a stall.
///
/// Only a finite-difference slope that is stable across two consecutive
/// step sizes counts as evidence; at large penalties the differences are
/// dominated by curvature or rounding and prove nothing.
fn check_gradient(field: &ScalarField, x: &[f64], f: f64, g: &[f64]) -> Result<()> {
    let gnorm = norm(g);
    if gnorm <= 1e-6 * f.abs().max(1.0) {
        return Ok(());
    }
    let scale = x.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    let unit: Vec<f64> = g.iter().map(|v| v / gnorm).collect();
    let mut slopes = Vec::new();
    for h in [1e-3, 1e-4, 1e-5, 1e-6, 1e-7] {
        let h = h * scale;
        // Below this the predicted change drowns in rounding of `f`.
        if gnorm * h <= 1e-11 * f.abs().max(1.0) {
            continue;
        }
        let plus: Vec<f64> = x.iter().zip(&unit).map(|(a, u)| a + h * u).collect();
        let minus: Vec<f64> = x.iter().zip(&unit).map(|(a, u)| a - h * u).collect();
        let fd = (field.value(&plus) - field.value(&minus)) / (2.0 * h);
        if fd > 0.1 * gnorm {
            return Ok(());
        }
        slopes.push(fd);
    }
    let stable = slopes.windows(2).any(|w| (w[0] - w[1]).abs() <= 0.01 * w[0].abs().max(w[1].abs()));
    if !stable {
        return Ok(());
    }
    Err(CnError::LineSearchFailed(format!(
        "gradient (norm {gnorm:.3e}) is inconsistent with finite differences of the objective"
    )))
}

fn two_loop(g: &[f64], mem: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y, rho) in mem.iter().rev() {
        let a = rho * dot(s, &q);
        for i in 0..q.len() {
            q[i] -= a * y[i];
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = mem.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for i in 0..q.len() {
            q[i] += (a - b) * s[i];
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

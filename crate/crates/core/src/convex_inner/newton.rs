use nalgebra::{DMatrix, DVector};

use crate::cn_core::ScalarField;

use super::InnerConfig;

/// Largest dimension for which a dense Hessian is formed.
pub(crate) const MAX_DIM: usize = 400;
const MAX_ITERS: usize = 50;

/// Damped Newton steps from a point where L-BFGS gave up.
///
/// The Hessian comes from `hess_vec` when the field has one, otherwise from
/// central differences of the gradient. An indefinite Hessian is shifted
/// until its Cholesky factor exists. Stops at the first step that fails to
/// decrease the value.
pub(crate) fn polish(
    field: &ScalarField,
    x: &mut Vec<f64>,
    f: &mut f64,
    g: &mut Vec<f64>,
    history: &mut Vec<f64>,
    cfg: &InnerConfig,
) -> usize {
    let n = x.len();
    let mut steps = 0;
    while steps < MAX_ITERS && norm(g) > cfg.tol_grad {
        let gnorm = norm(g);
        let h = hessian(field, x);
        let Some(p) = shifted_newton_step(&h, g) else { break };
        let mut t = match cfg.max_step {
            Some(m) => m / p.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-300),
            None => 1.0,
        }
        .min(1.0);
        let slope: f64 = g.iter().zip(p.iter()).map(|(a, b)| a * b).sum();
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = (0..n).map(|i| x[i] + t * p[i]).collect();
            let ft = field.value(&trial);
            if ft.is_finite() && ft < *f && ft <= *f + cfg.armijo_c * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            // Below the resolution of `f` only the gradient can tell
            // whether the step helped.
            if ft.is_finite()
                && (ft - *f).abs() <= 1e-13 * f.abs().max(1.0)
                && norm(&field.gradient(&trial)) < 0.9 * gnorm
            {
                accepted = Some((trial, ft));
                break;
            }
            t *= cfg.backtrack;
        }
        let Some((xn, fnew)) = accepted else { break };
        *x = xn;
        *f = fnew;
        *g = field.gradient(x);
        history.push(fnew);
        steps += 1;
    }
    steps
}

fn hessian(field: &ScalarField, x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut p = x.to_vec();
    for j in 0..n {
        let col = if field.has_hess_vec() {
            e[j] = 1.0;
            let c = field.hess_vec(x, &e).expect("checked");
            e[j] = 0.0;
            c
        } else {
            let step = 1e-6 * x[j].abs().max(1.0);
            p[j] = x[j] + step;
            let gp = field.gradient(&p);
            p[j] = x[j] - step;
            let gm = field.gradient(&p);
            p[j] = x[j];
            gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * step)).collect()
        };
        h.set_column(j, &DVector::from_vec(col));
    }
    (&h + h.transpose()) * 0.5
}

fn shifted_newton_step(h: &DMatrix<f64>, g: &[f64]) -> Option<Vec<f64>> {
    let scale = h.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-12);
    let rhs = -DVector::from_column_slice(g);
    let mut mu = 0.0;
    for _ in 0..60 {
        let shifted = h + DMatrix::identity(h.nrows(), h.ncols()) * mu;
        if let Some(ch) = shifted.cholesky() {
            let p = ch.solve(&rhs);
            if p.iter().all(|v| v.is_finite()) {
                return Some(p.as_slice().to_vec());
            }
        }
        mu = if mu == 0.0 { 1e-10 * scale } else { mu * 10.0 };
    }
    None
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

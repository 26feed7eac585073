use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::cn_core::{Verdict, Witness};
use crate::error::{CnError, Result};

use super::nnls::nnls;

/// Default half-width of the `l_inf` box used to keep the QP bounded.
pub const TRUST_RADIUS: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ConeQpStatus {
    Optimal,
    Unbounded { direction: Vec<f64> },
    MaxIters,
}

/// Solution of `min q'd + d'Bd/2` over `{A d <= 0, ||d||_inf <= R}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeQpResult {
    pub d_star: Vec<f64>,
    pub value: f64,
    /// Multipliers of the cone rows, one per row of `A`.
    pub multipliers: Vec<f64>,
    /// Multipliers of the trust box (signed: positive at the upper face).
    pub box_multipliers: Vec<f64>,
    /// `||B d + q + A' mu + box||`.
    pub stationarity: f64,
    /// `max_i |mu_i (A d)_i|`.
    pub complementarity: f64,
    pub status: ConeQpStatus,
}

impl ConeQpResult {
    pub fn is_optimal(&self) -> bool {
        matches!(self.status, ConeQpStatus::Optimal)
    }
}

/// Convex QP over a polyhedral cone, clipped to a trust box.
///
/// Unboundedness is decided exactly first: the QP is unbounded below iff
/// some `d` in the null space of `B` lies in the cone with `q'd < 0`, which
/// is a cone LP on the null-space coordinates. Bounded problems are solved
/// by an ADMM splitting followed by an active-set polish.
pub fn solve_cone_qp(q: &DVector<f64>, b: &DMatrix<f64>, a: &DMatrix<f64>, trust_radius: f64) -> Result<ConeQpResult> {
    let dim = q.len();
    if b.shape() != (dim, dim) {
        return Err(CnError::DimensionMismatch { expected: dim, got: b.nrows(), context: "cone QP matrix B" });
    }
    if a.ncols() != dim {
        return Err(CnError::DimensionMismatch { expected: dim, got: a.ncols(), context: "cone QP matrix A" });
    }
    if !(trust_radius > 0.0) {
        return Err(CnError::BadConfig("trust radius must be positive".into()));
    }
    let b = (b + b.transpose()) * 0.5;
    let eig = b.clone().symmetric_eigen();
    let bscale = eig.eigenvalues.amax().max(1.0);
    let min_eig = eig.eigenvalues.min();
    if min_eig < -1e-10 * bscale {
        return Err(CnError::NotPsd { value: min_eig });
    }

    // Recession test on null(B).
    let null_cols: Vec<usize> = (0..dim).filter(|&k| eig.eigenvalues[k].abs() <= 1e-10 * bscale).collect();
    if !null_cols.is_empty() {
        let basis = eig.eigenvectors.select_columns(&null_cols);
        let qz = basis.transpose() * q;
        let az = a * &basis;
        if let Verdict::Refuted(w) = cone_lp_certificate(&qz, &az) {
            let z = DVector::from_vec(w.direction.expect("refutations carry a direction"));
            let d = &basis * z;
            let d = &d / d.amax();
            if q.dot(&d) < -1e-8 && (&b * &d).norm() <= 1e-8 && max_or_zero(&(a * &d)) <= 1e-8 {
                return Ok(unbounded(q, &b, a, d, trust_radius));
            }
        }
    }

    let (d_admm, _, converged) = admm(q, &b, a, trust_radius);
    let (d, mu_rows, mu_box) = match polish(q, &b, a, &d_admm, trust_radius) {
        Some(p) => p,
        None => {
            // Nonnegative fit of the stationarity equation on the rows
            // active at the splitting iterate.
            let (mr, mb) = fit_multipliers(q, &b, a, &d_admm, trust_radius);
            (d_admm, mr, mb)
        }
    };
    let grad = &b * &d + q;
    let stat = (&grad + a.transpose() * &mu_rows + &mu_box).norm();
    let ad = a * &d;
    let comp = mu_rows.iter().zip(ad.iter()).fold(0.0_f64, |m, (u, v)| m.max((u * v).abs()));
    let value = q.dot(&d) + 0.5 * d.dot(&(&b * &d));
    let feasible = max_or_zero(&ad) <= 1e-8;
    let status = if feasible && (converged || stat <= 1e-6 * (1.0 + q.norm())) {
        ConeQpStatus::Optimal
    } else {
        ConeQpStatus::MaxIters
    };
    Ok(ConeQpResult {
        d_star: d.iter().copied().collect(),
        value,
        multipliers: mu_rows.iter().copied().collect(),
        box_multipliers: mu_box.iter().copied().collect(),
        stationarity: stat,
        complementarity: comp,
        status,
    })
}

fn unbounded(q: &DVector<f64>, b: &DMatrix<f64>, a: &DMatrix<f64>, dir: DVector<f64>, r: f64) -> ConeQpResult {
    let d = &dir * r;
    let value = q.dot(&d) + 0.5 * d.dot(&(b * &d));
    ConeQpResult {
        d_star: d.iter().copied().collect(),
        value,
        multipliers: vec![0.0; a.nrows()],
        box_multipliers: vec![0.0; q.len()],
        stationarity: f64::NAN,
        complementarity: 0.0,
        status: ConeQpStatus::Unbounded { direction: dir.iter().copied().collect() },
    }
}

fn max_or_zero(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |a, &b| a.max(b))
}

/// OSQP-style ADMM on `l <= C d <= u` with `C = [A; I]`.
fn admm(q: &DVector<f64>, b: &DMatrix<f64>, a: &DMatrix<f64>, r: f64) -> (DVector<f64>, DVector<f64>, bool) {
    let dim = q.len();
    let rows = a.nrows();
    let mut c = DMatrix::zeros(rows + dim, dim);
    c.view_mut((0, 0), (rows, dim)).copy_from(a);
    c.view_mut((rows, 0), (dim, dim)).fill_with_identity();
    let lo = |i: usize| if i < rows { f64::NEG_INFINITY } else { -r };
    let hi = |i: usize| if i < rows { 0.0 } else { r };
    let ctc = c.transpose() * &c;
    let sigma = 1e-6;
    let alpha = 1.6;
    let mut rho = 0.1;
    let factor = |rho: f64| {
        let k = b + DMatrix::identity(dim, dim) * sigma + &ctc * rho;
        k.cholesky().expect("regularized KKT matrix is positive definite")
    };
    let mut chol = factor(rho);
    let mut x = DVector::zeros(dim);
    let mut z = DVector::zeros(rows + dim);
    let mut y = DVector::zeros(rows + dim);
    let eps = 1e-10;
    for it in 0..20000 {
        let rhs = &x * sigma - q + c.transpose() * (&z * rho - &y);
        let xt = chol.solve(&rhs);
        let zt = &c * &xt;
        let x_new = &xt * alpha + &x * (1.0 - alpha);
        let zr = &zt * alpha + &z * (1.0 - alpha);
        let mut z_new = &zr + &y / rho;
        for i in 0..rows + dim {
            z_new[i] = z_new[i].clamp(lo(i), hi(i));
        }
        y += (&zr - &z_new) * rho;
        x = x_new;
        z = z_new;

        if it % 10 == 9 {
            let cx = &c * &x;
            let prim = (&cx - &z).amax();
            let bx = b * &x;
            let cty = c.transpose() * &y;
            let dual = (&bx + q + &cty).amax();
            let prim_scale = cx.amax().max(z.amax()).max(1.0);
            let dual_scale = bx.amax().max(q.amax()).max(cty.amax()).max(1.0);
            if prim <= eps * prim_scale && dual <= eps * dual_scale {
                return (x, y, true);
            }
            if it % 50 == 49 {
                let ratio = ((prim / prim_scale) / (dual / dual_scale).max(1e-300)).sqrt();
                let new_rho = (rho * ratio).clamp(1e-6, 1e6);
                if new_rho > 5.0 * rho || new_rho < rho / 5.0 {
                    rho = new_rho;
                    chol = factor(rho);
                }
            }
        }
    }
    (x, y, false)
}

/// Equality-constrained solve on a guessed active set, refined until the
/// guess is consistent.
fn polish(
    q: &DVector<f64>,
    b: &DMatrix<f64>,
    a: &DMatrix<f64>,
    d0: &DVector<f64>,
    r: f64,
) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
    let dim = q.len();
    let rows = a.nrows();
    let scale = d0.amax().max(1.0);
    let ad0 = a * d0;
    let mut active: Vec<bool> = (0..rows).map(|i| ad0[i] > -1e-6 * scale).collect();
    // Box faces: +1 upper, -1 lower, 0 free.
    let mut face: Vec<i8> = (0..dim)
        .map(|k| {
            if d0[k] >= r * (1.0 - 1e-7) {
                1
            } else if d0[k] <= -r * (1.0 - 1e-7) {
                -1
            } else {
                0
            }
        })
        .collect();

    for _ in 0..(rows + dim + 5) {
        let act: Vec<usize> = (0..rows).filter(|&i| active[i]).collect();
        let boxed: Vec<usize> = (0..dim).filter(|&k| face[k] != 0).collect();
        let ne = act.len() + boxed.len();
        let mut kkt = DMatrix::zeros(dim + ne, dim + ne);
        let mut rhs = DVector::zeros(dim + ne);
        let delta = 1e-10;
        kkt.view_mut((0, 0), (dim, dim)).copy_from(&(b + DMatrix::identity(dim, dim) * delta));
        for k in 0..dim {
            rhs[k] = -q[k];
        }
        for (e, &i) in act.iter().enumerate() {
            for k in 0..dim {
                kkt[(dim + e, k)] = a[(i, k)];
                kkt[(k, dim + e)] = a[(i, k)];
            }
            kkt[(dim + e, dim + e)] = -delta;
        }
        for (e, &k) in boxed.iter().enumerate() {
            let row = dim + act.len() + e;
            kkt[(row, k)] = 1.0;
            kkt[(k, row)] = 1.0;
            kkt[(row, row)] = -delta;
            rhs[row] = r * face[k] as f64;
        }
        let lu = kkt.clone().lu();
        let mut sol = lu.solve(&rhs)?;
        for _ in 0..3 {
            let res = &rhs - &kkt * &sol;
            if let Some(corr) = lu.solve(&res) {
                sol += corr;
            }
        }
        let d = sol.rows(0, dim).into_owned();
        let lam = sol.rows(dim, ne).into_owned();
        if !d.iter().all(|v| v.is_finite()) {
            return None;
        }

        let ad = a * &d;
        let tol = 1e-9 * d.amax().max(1.0);
        let mut changed = false;
        for i in 0..rows {
            if !active[i] && ad[i] > tol {
                active[i] = true;
                changed = true;
            }
        }
        for k in 0..dim {
            if face[k] == 0 && d[k].abs() > r * (1.0 + 1e-9) {
                face[k] = if d[k] > 0.0 { 1 } else { -1 };
                changed = true;
            }
        }
        // Drop the most negative wrong-signed multiplier.
        let mut worst: Option<(usize, f64)> = None;
        for (e, _) in act.iter().enumerate() {
            if lam[e] < -1e-9 * (1.0 + q.amax()) && worst.is_none_or(|(_, v)| lam[e] < v) {
                worst = Some((e, lam[e]));
            }
        }
        for (e, &k) in boxed.iter().enumerate() {
            let l = lam[act.len() + e] * face[k] as f64;
            if l < -1e-9 * (1.0 + q.amax()) && worst.is_none_or(|(_, v)| l < v) {
                worst = Some((act.len() + e, l));
            }
        }
        if !changed {
            if let Some((e, _)) = worst {
                if e < act.len() {
                    active[act[e]] = false;
                } else {
                    face[boxed[e - act.len()]] = 0;
                }
                continue;
            }
            let mut mu_rows = DVector::zeros(rows);
            for (e, &i) in act.iter().enumerate() {
                mu_rows[i] = lam[e].max(0.0);
            }
            let mut mu_box = DVector::zeros(dim);
            for (e, &k) in boxed.iter().enumerate() {
                mu_box[k] = lam[act.len() + e];
            }
            return Some((d, mu_rows, mu_box));
        }
    }
    None
}

fn fit_multipliers(
    q: &DVector<f64>,
    b: &DMatrix<f64>,
    a: &DMatrix<f64>,
    d: &DVector<f64>,
    r: f64,
) -> (DVector<f64>, DVector<f64>) {
    let dim = q.len();
    let ad = a * d;
    let scale = d.amax().max(1.0);
    let act: Vec<usize> = (0..a.nrows()).filter(|&i| ad[i] > -1e-6 * scale).collect();
    let boxed: Vec<usize> = (0..dim).filter(|&k| d[k].abs() >= r * (1.0 - 1e-6)).collect();
    let mut e = DMatrix::zeros(dim, act.len() + boxed.len());
    for (c, &i) in act.iter().enumerate() {
        e.set_column(c, &a.row(i).transpose());
    }
    for (c, &k) in boxed.iter().enumerate() {
        e[(k, act.len() + c)] = d[k].signum();
    }
    let target = -(b * d + q);
    let (mu, _) = nnls(&e, &target);
    let mut mu_rows = DVector::zeros(a.nrows());
    for (c, &i) in act.iter().enumerate() {
        mu_rows[i] = mu[c];
    }
    let mut mu_box = DVector::zeros(dim);
    for (c, &k) in boxed.iter().enumerate() {
        mu_box[k] = mu[act.len() + c] * d[k].signum();
    }
    (mu_rows, mu_box)
}

/// Decides whether `min q'd` over the cone `{A d <= 0}` is `0` or `-inf`.
///
/// By Farkas' lemma the value is `0` iff `-q` lies in the cone spanned by
/// the rows of `A`. The nonnegative fit `min ||A' mu + q||` either closes
/// that gap or its residual `r` gives `d = -r` with `A d <= 0` and
/// `q'd = -||r||^2`.
pub fn cone_lp_certificate(q: &DVector<f64>, a: &DMatrix<f64>) -> Verdict {
    let dim = q.len();
    if dim == 0 || q.amax() == 0.0 {
        return Verdict::Certified;
    }
    let at = a.transpose();
    let (_mu, resid) = nnls(&at, &(-q));
    let rmax = resid.amax();
    if rmax == 0.0 {
        return Verdict::Certified;
    }
    let d = -&resid / rmax;
    let value = q.dot(&d);
    let ad_max = if a.nrows() > 0 { (a * &d).max() } else { f64::NEG_INFINITY };
    if value < -1e-9 && ad_max <= 1e-9 * (1.0 + a.amax()) {
        Verdict::Refuted(Witness { point: vec![0.0; dim], direction: Some(d.iter().copied().collect()), value })
    } else {
        Verdict::Certified
    }
}

/// Checks for a strictly feasible direction `A d' < 0` with margin
/// `1e-6` after normalizing `||d'||_inf = 1`. Returns the direction found.
pub fn slater_direction(a: &DMatrix<f64>) -> Option<Vec<f64>> {
    let (rows, dim) = a.shape();
    if rows == 0 {
        return Some(vec![0.0; dim]);
    }
    // Gordan: no strict direction iff A' mu = 0 for some mu >= 0, sum mu = 1.
    let w = a.amax().max(1.0);
    let mut e = DMatrix::zeros(dim + 1, rows);
    e.view_mut((0, 0), (dim, rows)).copy_from(&a.transpose());
    for i in 0..rows {
        e[(dim, i)] = w;
    }
    let mut f = DVector::zeros(dim + 1);
    f[dim] = w;
    let (mu, _) = nnls(&e, &f);
    let d = -(a.transpose() * mu);
    let m = d.amax();
    if m <= 1e-300 {
        return None;
    }
    let d = d / m;
    if (a * &d).max() < -1e-6 {
        Some(d.iter().copied().collect())
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, v)
    }
    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn zero_gradient_gives_zero_direction() {
        let r = solve_cone_qp(&v(&[0.0, 0.0]), &DMatrix::identity(2, 2), &m(1, 2, &[1.0, -1.0]), TRUST_RADIUS).unwrap();
        assert!(r.is_optimal());
        assert!(r.value.abs() < 1e-12);
        assert!(r.d_star.iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn one_dimensional_interior_optimum() {
        let r = solve_cone_qp(&v(&[-1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[-1.0]), TRUST_RADIUS).unwrap();
        assert!(r.is_optimal());
        assert!((r.d_star[0] - 1.0).abs() < 1e-9);
        assert!((r.value + 0.5).abs() < 1e-9);
    }

    #[test]
    fn linear_descent_ray_is_unbounded() {
        let r = solve_cone_qp(&v(&[-1.0]), &m(1, 1, &[0.0]), &m(1, 1, &[-1.0]), TRUST_RADIUS).unwrap();
        match r.status {
            ConeQpStatus::Unbounded { direction } => assert!((direction[0] - 1.0).abs() < 1e-12),
            s => panic!("expected unbounded, got {s:?}"),
        }
    }

    #[test]
    fn active_constraint_multiplier() {
        // min (d1-1)^2/2 + (d2-1)^2/2 over d1 + d2 <= 0.
        let r =
            solve_cone_qp(&v(&[-1.0, -1.0]), &DMatrix::identity(2, 2), &m(1, 2, &[1.0, 1.0]), TRUST_RADIUS).unwrap();
        assert!(r.is_optimal());
        assert!(r.d_star.iter().all(|x| x.abs() < 1e-9));
        assert!((r.multipliers[0] - 1.0).abs() < 1e-8);
        assert!(r.stationarity < 1e-8);
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let err =
            solve_cone_qp(&v(&[0.0, 0.0]), &m(2, 2, &[1.0, 0.0, 0.0, -1.0]), &m(1, 2, &[1.0, 0.0]), 1e3).unwrap_err();
        assert!(matches!(err, CnError::NotPsd { .. }));
    }

    #[test]
    fn lp_certificates() {
        assert!(cone_lp_certificate(&v(&[1.0]), &m(1, 1, &[-1.0])).is_certified());
        match cone_lp_certificate(&v(&[-1.0]), &m(1, 1, &[-1.0])) {
            Verdict::Refuted(w) => {
                let d = w.direction.unwrap();
                assert!(d[0] > 0.0 && w.value < 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn slater_detects_opposite_rows() {
        assert!(slater_direction(&m(2, 1, &[1.0, -1.0])).is_none());
        let d = slater_direction(&m(2, 2, &[-1.0, 0.0, 0.0, -1.0])).unwrap();
        assert!(d[0] > 0.0 && d[1] > 0.0);
    }
}

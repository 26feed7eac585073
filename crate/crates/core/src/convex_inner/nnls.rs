use nalgebra::{DMatrix, DVector};

/// Nonnegative least squares: `min ||E mu - f||` subject to `mu >= 0`.
///
/// Lawson-Hanson active set method. Returns the solution and the residual
/// vector `E mu - f`.
pub fn nnls(e: &DMatrix<f64>, f: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let (rows, cols) = e.shape();
    assert_eq!(rows, f.len());
    let mut mu = DVector::zeros(cols);
    if cols == 0 {
        return (mu, -f.clone());
    }
    let mut passive = vec![false; cols];
    let scale = e.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1.0) * f.amax().max(1.0);
    let tol = 1e-12 * scale * (rows.max(cols) as f64);
    let max_outer = 3 * cols + 30;

    for _ in 0..max_outer {
        let resid = f - e * &mu;
        let w = e.transpose() * &resid;
        let pick = (0..cols).filter(|&j| !passive[j]).max_by(|&a, &b| w[a].total_cmp(&w[b]));
        match pick {
            Some(j) if w[j] > tol => passive[j] = true,
            _ => break,
        }
        // Inner loop keeps the passive solution strictly positive.
        for _ in 0..=cols {
            let idx: Vec<usize> = (0..cols).filter(|&j| passive[j]).collect();
            let z = solve_ls(e, f, &idx);
            if idx.iter().zip(z.iter()).all(|(_, &v)| v > 0.0) {
                for (k, &j) in idx.iter().enumerate() {
                    mu[j] = z[k];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (k, &j) in idx.iter().enumerate() {
                if z[k] <= 0.0 {
                    let denom = mu[j] - z[k];
                    if denom > 0.0 {
                        alpha = alpha.min(mu[j] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (k, &j) in idx.iter().enumerate() {
                mu[j] += alpha * (z[k] - mu[j]);
                if mu[j] <= tol * 1e-3 {
                    mu[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    let resid = e * &mu - f;
    (mu, resid)
}

fn solve_ls(e: &DMatrix<f64>, f: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    let sub = e.select_columns(idx);
    let svd = sub.svd(true, true);
    let cutoff = svd.singular_values.amax() * 1e-13;
    svd.solve(f, cutoff.max(1e-300)).unwrap_or_else(|_| DVector::zeros(idx.len()))
}

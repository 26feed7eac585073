//! Bundled benchmark problems with closed-form lifts and partitions.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cn_core::{BoxBounds, CnForm, ConvexityGrade, DirectFn, Lift, ScalarField};
use crate::error::{CnError, Result};
use crate::solver::{OverlapLink, Partition, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemName {
    /// `(x1 + x2 - 1)^2 + lambda (|x1|^(1/2) + |x2|^(1/2))`.
    Ex42,
    /// `||A x - b||^2 + lambda ||x||_0` with caller data.
    ZeroNormLs,
    /// Zero-norm least squares with the single row `(1, 2, ..., n)` and `b = 2n`.
    Ex43,
    /// `n max_i |x_i| - sum_i |x_i|`.
    Ex44,
    /// Chained `sum_i -x_i + 2 (x_i^2 + x_{i+1}^2 - 1) + 1.75 |x_i^2 + x_{i+1}^2 - 1|`.
    Ex45,
}

impl ProblemName {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '.'], "_").as_str() {
            "ex42" | "ex4_2" | "ex8" => Ok(Self::Ex42),
            "zero_norm_ls" | "zeronormls" | "zero_norm" | "ex9" => Ok(Self::ZeroNormLs),
            "ex43" | "ex4_3" => Ok(Self::Ex43),
            "ex44" | "ex4_4" => Ok(Self::Ex44),
            "ex45" | "ex4_5" => Ok(Self::Ex45),
            other => Err(CnError::BadSpec(format!("unknown problem '{other}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Ex42 => "ex42",
            Self::ZeroNormLs => "zero_norm_ls",
            Self::Ex43 => "ex43",
            Self::Ex44 => "ex44",
            Self::Ex45 => "ex45",
        }
    }
}

/// Least-squares data `(A, b)` stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsData {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl LsData {
    /// The data of the two-variable zero-norm example: `A = (1, 1)`, `b = 1`.
    pub fn sum_to_one(n: usize) -> Self {
        Self { a: vec![vec![1.0; n]], b: vec![1.0] }
    }

    fn matrices(&self, n: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let rows = self.a.len();
        if rows == 0 || rows != self.b.len() {
            return Err(CnError::BadSpec(format!("A has {rows} rows but b has {} entries", self.b.len())));
        }
        if self.a.iter().any(|r| r.len() != n) {
            return Err(CnError::BadSpec(format!("every row of A needs {n} entries")));
        }
        let flat: Vec<f64> = self.a.iter().flatten().copied().collect();
        Ok((DMatrix::from_row_slice(rows, n, &flat), DVector::from_column_slice(&self.b)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: ProblemName,
    pub n: usize,
    /// Block width.
    pub e: usize,
    pub lambda: Option<f64>,
    pub data: Option<LsData>,
}

impl ProblemSpec {
    pub fn ex42(lambda: f64) -> Self {
        Self { name: ProblemName::Ex42, n: 2, e: 1, lambda: Some(lambda), data: None }
    }
    pub fn zero_norm(n: usize, lambda: f64, data: LsData) -> Self {
        Self { name: ProblemName::ZeroNormLs, n, e: 1, lambda: Some(lambda), data: Some(data) }
    }
    pub fn ex43(n: usize, e: usize, lambda: f64) -> Self {
        Self { name: ProblemName::Ex43, n, e, lambda: Some(lambda), data: None }
    }
    pub fn ex44(n: usize, e: usize) -> Self {
        Self { name: ProblemName::Ex44, n, e, lambda: None, data: None }
    }
    pub fn ex45(n: usize, e: usize) -> Self {
        Self { name: ProblemName::Ex45, n, e, lambda: None, data: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(CnError::BadSpec("n must be positive".into()));
        }
        if self.e == 0 {
            return Err(CnError::BadSpec("block width e must be positive".into()));
        }
        let needs_lambda = matches!(self.name, ProblemName::Ex42 | ProblemName::ZeroNormLs | ProblemName::Ex43);
        if needs_lambda {
            match self.lambda {
                Some(l) if l > 0.0 && l.is_finite() => {}
                Some(l) => return Err(CnError::BadSpec(format!("lambda must be positive, got {l}"))),
                None => return Err(CnError::BadSpec(format!("{} needs lambda", self.name.as_str()))),
            }
        }
        match self.name {
            ProblemName::Ex42 => {
                if self.n != 2 {
                    return Err(CnError::BadSpec("ex42 has n = 2".into()));
                }
            }
            ProblemName::Ex45 => {
                if self.n < 2 {
                    return Err(CnError::BadSpec("ex45 needs n >= 2".into()));
                }
                if !self.n.is_multiple_of(self.e) {
                    return Err(CnError::BadSpec(format!("n = {} is not divisible by e = {}", self.n, self.e)));
                }
            }
            ProblemName::Ex43 | ProblemName::Ex44 | ProblemName::ZeroNormLs => {
                if !self.n.is_multiple_of(self.e) {
                    return Err(CnError::BadSpec(format!("n = {} is not divisible by e = {}", self.n, self.e)));
                }
            }
        }
        if self.name == ProblemName::ZeroNormLs && self.data.is_none() {
            return Err(CnError::BadSpec("zero_norm_ls needs (A, b) data".into()));
        }
        Ok(())
    }

    fn lambda(&self) -> f64 {
        self.lambda.unwrap_or(1.0)
    }
}

/// Builds the lifted form and its block partition.
pub fn make_problem(spec: &ProblemSpec) -> Result<(CnForm, Partition)> {
    spec.validate()?;
    let (form, part) = match spec.name {
        ProblemName::Ex42 => ex42(spec.lambda())?,
        ProblemName::ZeroNormLs => {
            let (a, b) = spec.data.as_ref().expect("validated").matrices(spec.n)?;
            zero_norm(spec.n, spec.e, spec.lambda(), a, b)?
        }
        ProblemName::Ex43 => {
            let n = spec.n;
            let a = DMatrix::from_fn(1, n, |_, j| (j + 1) as f64);
            let b = DVector::from_element(1, 2.0 * n as f64);
            zero_norm(n, spec.e, spec.lambda(), a, b)?
        }
        ProblemName::Ex44 => ex44(spec.n, spec.e)?,
        ProblemName::Ex45 => ex45(spec.n, spec.e)?,
    };
    part.validate(&form)?;
    Ok((form, part))
}

/// Field reading only `idx` of a `dim`-vector. The closures see the local
/// values in `idx` order.
fn local_field<E, G, H>(dim: usize, idx: Vec<usize>, eval: E, grad: G, hess: H) -> ScalarField
where
    E: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    H: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
{
    ScalarField::new(idx.len(), eval, grad).with_hess_vec(hess).pullback(dim, &idx)
}

/// `w[a]^k - w[b]` for even `k >= 2`.
fn power_minus(dim: usize, a: usize, b: usize, k: i32) -> ScalarField {
    let kf = k as f64;
    local_field(
        dim,
        vec![a, b],
        move |v| v[0].powi(k) - v[1],
        move |v, g| {
            g[0] = kf * v[0].powi(k - 1);
            g[1] = -1.0;
        },
        move |v, d, o| {
            o[0] = kf * (kf - 1.0) * v[0].powi(k - 2) * d[0];
            o[1] = 0.0;
        },
    )
}

/// `(x1 + x2 - 1)^2 + lambda (y1 + y4)` over `(x1, x2, y1, ..., y6)`.
fn ex42(lambda: f64) -> Result<(CnForm, Partition)> {
    let dim = 8;
    let obj = ScalarField::new(
        dim,
        move |w| (w[0] + w[1] - 1.0).powi(2) + lambda * (w[2] + w[5]),
        move |w, g| {
            g.fill(0.0);
            let s = 2.0 * (w[0] + w[1] - 1.0);
            g[0] = s;
            g[1] = s;
            g[2] = lambda;
            g[5] = lambda;
        },
    )
    .with_hess_vec(|_, v, o| {
        o.fill(0.0);
        let s = 2.0 * (v[0] + v[1]);
        o[0] = s;
        o[1] = s;
    })
    .with_support(vec![0, 1, 2, 5]);
    // Per coordinate: y_a = |x|^(1/2), y_b = |x|^(1/4), y_c = x^2.
    let mut cons = Vec::new();
    for (x, ya, yb, yc) in [(0, 2, 3, 4), (1, 5, 6, 7)] {
        cons.push(power_minus(dim, ya, yc, 4));
        cons.push(power_minus(dim, x, yc, 2));
        cons.push(power_minus(dim, yb, ya, 2));
    }
    let mut b = DMatrix::zeros(dim, dim);
    for i in 0..2 {
        for j in 0..2 {
            b[(i, j)] = 2.0;
        }
    }
    let names = ["y1^4-y3", "x1^2-y3", "y2^2-y1", "y4^4-y6", "x2^2-y6", "y5^2-y4"];
    let form = CnForm::new(2, 6, obj, cons)?
        .with_grade(ConvexityGrade::constant(b))?
        .with_exact(true)
        .with_domain_box(BoxBounds::uniform(2, -2.0, 2.0))?
        .with_constraint_names(names.iter().map(|s| s.to_string()).collect())?
        .with_lift(Lift::new(|x| {
            let mut y = Vec::with_capacity(6);
            for &v in x {
                let a = v.abs();
                y.extend([a.sqrt(), a.sqrt().sqrt(), v * v]);
            }
            y
        }))
        .with_f_direct(move |x| (x[0] + x[1] - 1.0).powi(2) + lambda * (x[0].abs().sqrt() + x[1].abs().sqrt()));
    let part =
        Partition::new(vec![vec![0], vec![1]], vec![vec![0, 1, 2], vec![3, 4, 5]], vec![0, 0, 0, 1, 1, 1], vec![]);
    Ok((form, part))
}

/// `||A x - b||^2 + lambda sum_i y_i^2` with per-coordinate constraints
/// `(x_i + y_i - 1)^2 - y_{i+n}`, `x_i^2 + (y_i - 1)^2 - y_{i+n}`,
/// `y_i^2 - y_i`. Constraint `k` of family `f` has index `f n + i`.
fn zero_norm(n: usize, e: usize, lambda: f64, a: DMatrix<f64>, b: DVector<f64>) -> Result<(CnForm, Partition)> {
    let dim = 3 * n;
    let ata = a.transpose() * &a;
    let (a1, b1) = (a.clone(), b.clone());
    let (a2, b2) = (a.clone(), b.clone());
    let ata2 = ata.clone();
    let obj = ScalarField::new(
        dim,
        move |w| {
            let x = DVector::from_column_slice(&w[..n]);
            let r = &a1 * x - &b1;
            r.norm_squared() + lambda * w[n..2 * n].iter().map(|v| v * v).sum::<f64>()
        },
        move |w, g| {
            let x = DVector::from_column_slice(&w[..n]);
            let gx = a2.transpose() * (&a2 * x - &b2) * 2.0;
            g.fill(0.0);
            g[..n].copy_from_slice(gx.as_slice());
            for i in 0..n {
                g[n + i] = 2.0 * lambda * w[n + i];
            }
        },
    )
    .with_hess_vec(move |_, v, o| {
        o.fill(0.0);
        let hx = &ata2 * DVector::from_column_slice(&v[..n]) * 2.0;
        o[..n].copy_from_slice(hx.as_slice());
        for i in 0..n {
            o[n + i] = 2.0 * lambda * v[n + i];
        }
    })
    .with_support((0..2 * n).collect());

    let mut cons: Vec<ScalarField> = Vec::with_capacity(3 * n);
    let mut names = Vec::with_capacity(3 * n);
    for i in 0..n {
        let (x, u, v) = (i, n + i, 2 * n + i);
        cons.push(local_field(
            dim,
            vec![x, u, v],
            |w| (w[0] + w[1] - 1.0).powi(2) - w[2],
            |w, g| {
                let s = 2.0 * (w[0] + w[1] - 1.0);
                g.copy_from_slice(&[s, s, -1.0]);
            },
            |_, d, o| {
                let s = 2.0 * (d[0] + d[1]);
                o.copy_from_slice(&[s, s, 0.0]);
            },
        ));
        names.push(format!("(x{0}+y{0}-1)^2-y{1}", i + 1, n + i + 1));
    }
    for i in 0..n {
        let (x, u, v) = (i, n + i, 2 * n + i);
        cons.push(local_field(
            dim,
            vec![x, u, v],
            |w| w[0] * w[0] + (w[1] - 1.0).powi(2) - w[2],
            |w, g| g.copy_from_slice(&[2.0 * w[0], 2.0 * (w[1] - 1.0), -1.0]),
            |_, d, o| o.copy_from_slice(&[2.0 * d[0], 2.0 * d[1], 0.0]),
        ));
        names.push(format!("x{0}^2+(y{0}-1)^2-y{1}", i + 1, n + i + 1));
    }
    for i in 0..n {
        let u = n + i;
        cons.push(local_field(
            dim,
            vec![u],
            |w| w[0] * w[0] - w[0],
            |w, g| g[0] = 2.0 * w[0] - 1.0,
            |_, d, o| o[0] = 2.0 * d[0],
        ));
        names.push(format!("y{0}^2-y{0}", i + 1));
    }

    let mut bm = DMatrix::zeros(dim, dim);
    bm.view_mut((0, 0), (n, n)).copy_from(&(&ata * 2.0));
    for i in 0..n {
        bm[(n + i, n + i)] = 2.0 * lambda;
    }
    let labels = (0..n).map(|i| format!("s{}", i + 1)).chain((0..n).map(|i| format!("q{}", i + 1))).collect();
    let (a3, b3) = (a, b);
    let form = CnForm::new(n, 2 * n, obj, cons)?
        .with_grade(ConvexityGrade::constant(bm))?
        .with_exact(false)
        .with_domain_box(BoxBounds::uniform(n, -3.0, 3.0))?
        .with_constraint_names(names)?
        .with_y_labels(labels)?
        .with_lift(zero_norm_lift(n))
        .with_f_direct(move |x| {
            let r = &a3 * DVector::from_column_slice(x) - &b3;
            r.norm_squared() + lambda * x.iter().filter(|v| **v != 0.0).count() as f64
        });

    let p = n / e;
    let x_blocks = (0..p).map(|j| (j * e..(j + 1) * e).collect()).collect();
    let y_blocks = (0..p).map(|j| (j * e..(j + 1) * e).chain(n + j * e..n + (j + 1) * e).collect()).collect();
    let owner = (0..3 * n).map(|k| (k % n) / e).collect();
    Ok((form, Partition::new(x_blocks, y_blocks, owner, vec![])))
}

/// Indicator lift: `(1, x^2)` for `x != 0`, `(0, 1)` at zero. The branch
/// `(1, 0)` is also feasible at zero and is listed by `branches`.
fn zero_norm_lift(n: usize) -> Lift {
    Lift::new(move |x| {
        let mut y = vec![0.0; 2 * n];
        for (i, &v) in x.iter().enumerate() {
            if v == 0.0 {
                y[n + i] = 1.0;
            } else {
                y[i] = 1.0;
                y[n + i] = v * v;
            }
        }
        y
    })
    .with_branches(move |x| {
        let zeros: Vec<usize> = (0..n).filter(|&i| x[i] == 0.0).collect();
        // Cap the enumeration; beyond 2^12 branches keep the minimizing one.
        let k = zeros.len().min(12);
        let mut base = vec![0.0; 2 * n];
        for (i, &v) in x.iter().enumerate() {
            if v == 0.0 {
                base[n + i] = 1.0;
            } else {
                base[i] = 1.0;
                base[n + i] = v * v;
            }
        }
        (0..1usize << k)
            .map(|mask| {
                let mut y = base.clone();
                for (bit, &i) in zeros.iter().take(k).enumerate() {
                    if mask >> bit & 1 == 1 {
                        y[i] = 1.0;
                        y[n + i] = 0.0;
                    }
                }
                y
            })
            .collect()
    })
}

/// `n t - sum_i y_i` with `y_i^2 - z_i`, `x_i^2 - z_i` and the set
/// `0 <= y_i <= t`. Layout: `y_i` at `i`, `z_i` at `n + i`, `t` at `2n`.
fn ex44(n: usize, e: usize) -> Result<(CnForm, Partition)> {
    let m = 2 * n + 1;
    let dim = n + m;
    let t = n + 2 * n;
    let nf = n as f64;
    let mut coeffs = vec![0.0; dim];
    for i in 0..n {
        coeffs[n + i] = -1.0;
    }
    coeffs[t] = nf;
    let obj = ScalarField::affine(coeffs, 0.0);

    let mut cons = Vec::with_capacity(2 * n);
    let mut names = Vec::with_capacity(2 * n);
    for i in 0..n {
        let (x, y, z) = (i, n + i, 2 * n + i);
        cons.push(power_minus(dim, y, z, 2));
        cons.push(power_minus(dim, x, z, 2));
        names.push(format!("y{0}^2-y{1}", i + 1, n + i + 1));
        names.push(format!("x{0}^2-y{1}", i + 1, n + i + 1));
    }
    let mut ineq = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mut c = vec![0.0; dim];
        c[n + i] = -1.0;
        ineq.push(ScalarField::affine(c, 0.0));
    }
    for i in 0..n {
        let mut c = vec![0.0; dim];
        c[n + i] = 1.0;
        c[t] = -1.0;
        ineq.push(ScalarField::affine(c, 0.0));
    }
    let labels = (0..n)
        .map(|i| format!("y{}", i + 1))
        .chain((0..n).map(|i| format!("y{}", n + i + 1)))
        .chain(std::iter::once(format!("y{}", 2 * n + 1)))
        .collect();
    let form = CnForm::new(n, m, obj, cons)?
        .with_ineq(ineq)?
        .with_grade(ConvexityGrade::constant(DMatrix::zeros(dim, dim)))?
        .with_exact(false)
        .with_domain_box(BoxBounds::uniform(n, -5.0, 5.0))?
        .with_constraint_names(names)?
        .with_y_labels(labels)?
        .with_lift(Lift::new(move |x| {
            let mut y = vec![0.0; m];
            for (i, &v) in x.iter().enumerate() {
                y[i] = v.abs();
                y[n + i] = v * v;
            }
            y[2 * n] = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            y
        }))
        .with_f_direct(move |x| {
            let mx = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            nf * mx - x.iter().map(|v| v.abs()).sum::<f64>()
        });

    let p = n / e;
    let x_blocks = (0..p).map(|j| (j * e..(j + 1) * e).collect()).collect();
    let y_blocks = (0..p)
        .map(|j| {
            let mut b: Vec<usize> = (j * e..(j + 1) * e).chain(n + j * e..n + (j + 1) * e).collect();
            if j == 0 {
                b.push(2 * n);
            }
            b
        })
        .collect();
    let owner = (0..2 * n).map(|k| (k / 2) / e).collect();
    Ok((form, Partition::new(x_blocks, y_blocks, owner, vec![])))
}

/// `sum_i -x_i + 2 a_i + 1.75 b_i` with `x_i^2 + x_{i+1}^2 - 1 - a_i`,
/// `b_i^2 - c_i`, `a_i^2 - c_i` for `i < n - 1`, plus `a_i >= -1`,
/// `b_i >= 0`, `c_i >= 0`. Layout: `a_i` at `i`, `b_i` at `(n-1) + i`,
/// `c_i` at `2(n-1) + i`.
fn ex45(n: usize, e: usize) -> Result<(CnForm, Partition)> {
    let k = n - 1;
    let m = 3 * k;
    let dim = n + m;
    let mut coeffs = vec![0.0; dim];
    for i in 0..k {
        coeffs[i] = -1.0;
        coeffs[n + i] = 2.0;
        coeffs[n + k + i] = 1.75;
    }
    let obj = ScalarField::affine(coeffs, 0.0);

    let mut cons = Vec::with_capacity(m);
    let mut names = Vec::with_capacity(m);
    for i in 0..k {
        let (a, b, c) = (n + i, n + k + i, n + 2 * k + i);
        cons.push(local_field(
            dim,
            vec![i, i + 1, a],
            |w| w[0] * w[0] + w[1] * w[1] - 1.0 - w[2],
            |w, g| g.copy_from_slice(&[2.0 * w[0], 2.0 * w[1], -1.0]),
            |_, d, o| o.copy_from_slice(&[2.0 * d[0], 2.0 * d[1], 0.0]),
        ));
        cons.push(power_minus(dim, b, c, 2));
        cons.push(power_minus(dim, a, c, 2));
        names.push(format!("x{}^2+x{}^2-1-y{}", i + 1, i + 2, i + 1));
        names.push(format!("y{}^2-y{}", k + i + 1, 2 * k + i + 1));
        names.push(format!("y{}^2-y{}", i + 1, 2 * k + i + 1));
    }
    let mut ineq = Vec::with_capacity(m);
    for i in 0..k {
        let mut c = vec![0.0; dim];
        c[n + i] = -1.0;
        ineq.push(ScalarField::affine(c, -1.0));
        let mut c = vec![0.0; dim];
        c[n + k + i] = -1.0;
        ineq.push(ScalarField::affine(c, 0.0));
        let mut c = vec![0.0; dim];
        c[n + 2 * k + i] = -1.0;
        ineq.push(ScalarField::affine(c, 0.0));
    }
    let form = CnForm::new(n, m, obj, cons)?
        .with_ineq(ineq)?
        .with_grade(ConvexityGrade::constant(DMatrix::zeros(dim, dim)))?
        .with_exact(true)
        .with_domain_box(BoxBounds::uniform(n, -2.0, 2.0))?
        .with_constraint_names(names)?
        .with_lift(Lift::new(move |x| {
            let mut y = vec![0.0; m];
            for i in 0..k {
                let a = x[i] * x[i] + x[i + 1] * x[i + 1] - 1.0;
                y[i] = a;
                y[k + i] = a.abs();
                y[2 * k + i] = a * a;
            }
            y
        }))
        .with_f_direct(ex45_direct);

    let p = n / e;
    let x_blocks = (0..p).map(|j| (j * e..(j + 1) * e).collect()).collect();
    let y_blocks = (0..p)
        .map(|j| {
            let idx: Vec<usize> = (j * e..((j + 1) * e).min(k)).collect();
            idx.iter().copied().chain(idx.iter().map(|i| k + i)).chain(idx.iter().map(|i| 2 * k + i)).collect()
        })
        .collect();
    let owner = (0..m).map(|c| (c / 3) / e).collect();
    let links =
        (0..p.saturating_sub(1)).map(|j| OverlapLink { coordinate: (j + 1) * e, earlier: j, later: j + 1 }).collect();
    Ok((form, Partition::new(x_blocks, y_blocks, owner, links)))
}

/// A start where every block's coordinates count up from 1 in
/// `Partition::block_coords` order, so all blocks begin alike.
pub fn block_ramp_start(form: &CnForm, part: &Partition) -> Vec<f64> {
    let mut w = vec![0.0; form.dim()];
    for j in 0..part.p() {
        for (k, c) in part.block_coords(j, form.n()).into_iter().enumerate() {
            w[c] = (k + 1) as f64;
        }
    }
    w
}

/// Solver parameters used for each bundled problem in the reference runs.
pub fn default_config(spec: &ProblemSpec) -> Result<SolverConfig> {
    let base = SolverConfig::default();
    Ok(match spec.name {
        ProblemName::Ex42 => SolverConfig { sigma1: 1000.0, big_n: 1000.0, alpha0: vec![2.0], w0: vec![2.0], ..base },
        ProblemName::ZeroNormLs | ProblemName::Ex43 => SolverConfig { sigma1: 5.0, big_n: 10.0, ..base },
        ProblemName::Ex44 => {
            let (form, part) = make_problem(spec)?;
            let mut cfg = SolverConfig { sigma1: 5.0, big_n: 10.0, w0: block_ramp_start(&form, &part), ..base };
            // Any (+-s, ..., +-s) is optimal; short steps keep each x_i on
            // the side it starts on.
            cfg.inner.max_step = Some(1.0);
            cfg
        }
        ProblemName::Ex45 => SolverConfig { sigma1: 5.0, big_n: 100.0, w0: vec![1.0], ..base },
    })
}

/// The chained objective evaluated directly.
pub fn ex45_direct(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| {
            let a = w[0] * w[0] + w[1] * w[1] - 1.0;
            -w[0] + 2.0 * a + 1.75 * a.abs()
        })
        .sum()
}

/// Exhaustive grid minimum of the direct objective for `n <= 3`.
///
/// Ties are broken toward the lexicographically smallest point, so the
/// result does not depend on the parallel schedule.
pub fn brute_force_oracle(
    spec: &ProblemSpec,
    bounds: &BoxBounds,
    grid_points_per_dim: usize,
) -> Result<(Vec<f64>, f64)> {
    if spec.n > 3 {
        return Err(CnError::TooLarge { n: spec.n });
    }
    if bounds.dim() != spec.n {
        return Err(CnError::DimensionMismatch { expected: spec.n, got: bounds.dim(), context: "oracle box" });
    }
    if grid_points_per_dim < 2 {
        return Err(CnError::BadSpec("oracle grid needs at least 2 points per dimension".into()));
    }
    let (form, _) = make_problem(spec)?;
    let f = form.f_direct.clone().ok_or_else(|| CnError::BadSpec("problem has no direct objective".into()))?;
    oracle_min(f, bounds, grid_points_per_dim)
}

pub(crate) fn oracle_min(f: DirectFn, bounds: &BoxBounds, k: usize) -> Result<(Vec<f64>, f64)> {
    let n = bounds.dim();
    let axis = |d: usize, i: usize| {
        let (lo, hi) = (bounds.lower[d], bounds.upper[d]);
        // Snap the midpoint of symmetric boxes to an exact zero.
        let v = lo + (hi - lo) * i as f64 / (k - 1) as f64;
        if v.abs() < 1e-12 * (hi - lo) {
            0.0
        } else {
            v
        }
    };
    let total = k.pow(n as u32);
    let best = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut x = vec![0.0; n];
            for d in (0..n).rev() {
                x[d] = axis(d, rem % k);
                rem /= k;
            }
            let v = f(&x);
            (v, flat, x)
        })
        .reduce_with(|a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
        .expect("grid is nonempty");
    Ok((best.2, best.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cn_core::{constraint_residual, eval_f_via_form, lift};

    #[test]
    fn ex42_shapes_and_lift() {
        let (f, p) = make_problem(&ProblemSpec::ex42(3.0)).unwrap();
        assert_eq!((f.n(), f.m(), f.r()), (2, 6, 6));
        assert_eq!(f.constraint_names()[0], "y1^4-y3");
        assert_eq!(lift(&f, &[1.0, 0.0]).unwrap(), vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        assert!((eval_f_via_form(&f, &[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(p.p(), 2);
    }

    #[test]
    fn zero_norm_lift_branches() {
        let spec = ProblemSpec::zero_norm(1, 5.0, LsData::sum_to_one(1));
        let (f, _) = make_problem(&spec).unwrap();
        assert_eq!(lift(&f, &[0.0]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(lift(&f, &[2.0]).unwrap(), vec![1.0, 4.0]);
        let r = constraint_residual(&f, &[1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(r.equality, vec![0.0, 0.0, 0.0]);
        let branches = crate::cn_core::lift_branches(&f, &[0.0]).unwrap();
        assert_eq!(branches.len(), 2);
        let val = |y: &Vec<f64>| f.objective().value(&f.join(&[0.0], y));
        assert!(val(&branches[0]) <= val(&branches[1]));
    }

    #[test]
    fn zero_norm_two_dims() {
        let spec = ProblemSpec::zero_norm(2, 5.0, LsData::sum_to_one(2));
        let (f, _) = make_problem(&spec).unwrap();
        assert_eq!((f.n(), f.m(), f.r()), (2, 4, 6));
        assert!((eval_f_via_form(&f, &[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((eval_f_via_form(&f, &[0.0, 2.0]).unwrap() - (1.0 + 5.0)).abs() < 1e-12);
    }

    #[test]
    fn ex44_value_at_equal_point() {
        let (f, p) = make_problem(&ProblemSpec::ex44(5, 5)).unwrap();
        assert_eq!((f.n(), f.m(), f.r(), f.ineq_constraints().len()), (5, 11, 10, 10));
        assert!(eval_f_via_form(&f, &[3.1448; 5]).unwrap().abs() < 1e-9);
        assert_eq!(p.p(), 1);
    }

    #[test]
    fn ex45_overlaps() {
        let (f, p) = make_problem(&ProblemSpec::ex45(10, 5)).unwrap();
        assert_eq!((f.n(), f.m(), f.r()), (10, 27, 27));
        assert_eq!(p.overlap_links, vec![OverlapLink { coordinate: 5, earlier: 0, later: 1 }]);
        let x: Vec<f64> = (0..10).map(|i| 0.1 * i as f64).collect();
        assert!((eval_f_via_form(&f, &x).unwrap() - ex45_direct(&x)).abs() < 1e-12);
    }

    #[test]
    fn bad_specs() {
        assert!(make_problem(&ProblemSpec::ex42(-1.0)).is_err());
        assert!(make_problem(&ProblemSpec::ex44(7, 5)).is_err());
        assert!(ProblemName::parse("nope").is_err());
    }

    #[test]
    fn tiny_oracle() {
        let spec = ProblemSpec::zero_norm(1, 10.0, LsData { a: vec![vec![1.0]], b: vec![1.0] });
        let (x, v) = brute_force_oracle(&spec, &BoxBounds::uniform(1, -3.0, 3.0), 401).unwrap();
        assert_eq!(x, vec![0.0]);
        assert!((v - 1.0).abs() < 1e-12);
        assert!(matches!(
            brute_force_oracle(&ProblemSpec::ex44(5, 5), &BoxBounds::uniform(5, -1.0, 1.0), 3),
            Err(CnError::TooLarge { n: 5 })
        ));
    }
}

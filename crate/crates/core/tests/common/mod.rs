#![allow(dead_code)]

use cnopt::cn_core::{BoxBounds, CnForm, ScalarField};
use cnopt::problems::{make_problem, LsData, ProblemSpec};
use cnopt::solver::Partition;

/// Central differences with a step scaled to the coordinate.
pub fn fd_gradient(f: &ScalarField, w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; w.len()];
    let mut p = w.to_vec();
    for i in 0..w.len() {
        let h = 1e-6 * w[i].abs().max(1.0);
        p[i] = w[i] + h;
        let fp = f.value(&p);
        p[i] = w[i] - h;
        let fm = f.value(&p);
        p[i] = w[i];
        out[i] = (fp - fm) / (2.0 * h);
    }
    out
}

/// Largest componentwise error relative to `max(1, |g_i|)`.
pub fn gradient_error(f: &ScalarField, w: &[f64]) -> f64 {
    let g = f.gradient(w);
    let fd = fd_gradient(f, w);
    g.iter().zip(&fd).map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1.0)).fold(0.0, f64::max)
}

/// Small instances of every bundled problem, with the box `x` is drawn from.
pub fn catalog() -> Vec<(String, CnForm, Partition, BoxBounds)> {
    let specs = vec![
        ProblemSpec::ex42(2.0),
        ProblemSpec::ex42(0.5),
        ProblemSpec::zero_norm(2, 1.0, LsData::sum_to_one(2)),
        ProblemSpec::zero_norm(
            3,
            0.7,
            LsData { a: vec![vec![1.0, -2.0, 0.5], vec![0.0, 1.0, 1.0]], b: vec![1.0, 2.0] },
        ),
        ProblemSpec::ex43(5, 5, 10.0),
        ProblemSpec::ex43(10, 5, 1.0),
        ProblemSpec::ex44(5, 5),
        ProblemSpec::ex44(6, 3),
        ProblemSpec::ex45(6, 3),
        ProblemSpec::ex45(6, 2),
    ];
    specs
        .into_iter()
        .map(|s| {
            let (form, part) = make_problem(&s).unwrap();
            let label = format!("{}(n={}, e={})", s.name.as_str(), s.n, s.e);
            let b = form.sampling_box();
            (label, form, part, b)
        })
        .collect()
}

/// Maps `u` in `[0, 1]^n` into the box.
pub fn in_box(b: &BoxBounds, u: &[f64]) -> Vec<f64> {
    b.lower.iter().zip(&b.upper).zip(u).map(|((l, h), t)| l + (h - l) * t).collect()
}

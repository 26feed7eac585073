//! Building new lifted forms from existing ones.
//!
//! Every combinator lays out the output variables as `x` followed by the
//! inputs' `y` blocks in argument order, then any fresh lifted scalars. The
//! output's `y_labels` record where each coordinate came from.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::cn_core::{BoxBounds, CnForm, ConvexityGrade, Lift, ScalarField};
use crate::error::{CnError, Result};

/// Wraps a smooth convex `f(x)` as the exact form `[f(x) : y]` with one
/// dummy lifted coordinate pinned to zero.
pub fn from_convex(f: ScalarField, grade: ConvexityGrade) -> Result<CnForm> {
    let n = f.dim();
    let idx: Vec<usize> = (0..n).collect();
    let objective = f.pullback(n + 1, &idx);
    let mut pin = vec![0.0; n + 1];
    pin[n] = 1.0;
    let grade = embed_grade(&grade, n, &idx, n + 1);
    let direct = f.clone();
    CnForm::new(n, 1, objective, vec![ScalarField::affine(pin, 0.0)])?
        .with_grade(grade)?
        .with_exact(true)
        .with_lift(Lift::new(|_| vec![0.0]))
        .with_f_direct(move |x| direct.value(x))
        .with_y_labels(vec!["pin".into()])
}

/// `a1 * f1 + a2 * f2`.
///
/// Nonpositive scalars are only allowed when both inputs are exact. The
/// grade of the result is the weaker of the two, with curvature matrices
/// summed over the shared `x` block.
pub fn scale_add(f1: &CnForm, f2: &CnForm, a1: f64, a2: f64) -> Result<CnForm> {
    same_n(f1, f2)?;
    let both_exact = f1.exact && f2.exact;
    for a in [a1, a2] {
        if !(a > 0.0) && !both_exact {
            return Err(CnError::NonExactNegativeScale { scale: a });
        }
    }
    let n = f1.n;
    let (m1, m2) = (f1.m, f2.m);
    let dim = n + m1 + m2;
    let map1: Vec<usize> = (0..n + m1).collect();
    let map2: Vec<usize> = (0..n).chain(n + m1..dim).collect();

    let objective = ScalarField::linear_combination(&[
        (a1, f1.objective.pullback(dim, &map1)),
        (a2, f2.objective.pullback(dim, &map2)),
    ]);
    let constraints =
        pull_all(&f1.constraints, dim, &map1).into_iter().chain(pull_all(&f2.constraints, dim, &map2)).collect();
    let ineq: Vec<ScalarField> =
        pull_all(&f1.ineq, dim, &map1).into_iter().chain(pull_all(&f2.ineq, dim, &map2)).collect();

    let grade = combine_grades(f1, f2, a1, a2, &map1, &map2, dim);
    let mut out = CnForm::new(n, m1 + m2, objective, constraints)?
        .with_ineq(ineq)?
        .with_grade(grade)?
        .with_exact(both_exact)
        .with_constraint_names(
            f1.constraint_names
                .iter()
                .map(|s| format!("a.{s}"))
                .chain(f2.constraint_names.iter().map(|s| format!("b.{s}")))
                .collect(),
        )?
        .with_y_labels(
            f1.y_labels.iter().map(|s| format!("a.{s}")).chain(f2.y_labels.iter().map(|s| format!("b.{s}"))).collect(),
        )?;
    if let Some(b) = intersect_boxes(f1.domain_box.as_ref(), f2.domain_box.as_ref()) {
        out = out.with_domain_box(b)?;
    }
    if let (Some(l1), Some(l2)) = (f1.lift.clone(), f2.lift.clone()) {
        out = out.with_lift(concat_lifts(l1, l2));
    }
    if let (Some(d1), Some(d2)) = (f1.f_direct.clone(), f2.f_direct.clone()) {
        out = out.with_f_direct(move |x| a1 * d1(x) + a2 * d2(x));
    }
    Ok(out)
}

/// `-f` for an exact form: negated objective, same constraints, grade
/// `Plain` since `-g` is concave.
pub fn negate_exact(f: &CnForm) -> Result<CnForm> {
    if !f.exact {
        return Err(CnError::NotExact);
    }
    let mut out = f.clone();
    out.objective = ScalarField::linear_combination(&[(-1.0, f.objective.clone())]);
    out.grade = ConvexityGrade::Plain;
    if let Some(d) = f.f_direct.clone() {
        out.f_direct = Some(Arc::new(move |x| -d(x)));
    }
    Ok(out)
}

/// `f1 * f2` for exact forms via polarization.
///
/// Fresh scalars `u1 = g1`, `u2 = g2`, `v1 = u1^2`, `v2 = u2^2` are appended
/// after both `y` blocks, and the objective is
/// `((u1 + u2)^2 - v1 - v2) / 2`, whose Hessian is the constant
/// `[[1, 1], [1, 1]]` on `(u1, u2)`. The result is graded weak uniform with
/// that matrix.
pub fn product_exact(f1: &CnForm, f2: &CnForm) -> Result<CnForm> {
    if !f1.exact || !f2.exact {
        return Err(CnError::NotExact);
    }
    same_n(f1, f2)?;
    let n = f1.n;
    let (m1, m2) = (f1.m, f2.m);
    let base = n + m1 + m2;
    let dim = base + 4;
    let (u1, u2, v1, v2) = (base, base + 1, base + 2, base + 3);
    let map1: Vec<usize> = (0..n + m1).collect();
    let map2: Vec<usize> = (0..n).chain(n + m1..base).collect();

    let objective = ScalarField::new(
        dim,
        move |w| 0.5 * ((w[u1] + w[u2]).powi(2) - w[v1] - w[v2]),
        move |w, g| {
            g.fill(0.0);
            let s = w[u1] + w[u2];
            g[u1] = s;
            g[u2] = s;
            g[v1] = -0.5;
            g[v2] = -0.5;
        },
    )
    .with_hess_vec(move |_, v, o| {
        o.fill(0.0);
        let s = v[u1] + v[u2];
        o[u1] = s;
        o[u2] = s;
    })
    .with_support(vec![u1, u2, v1, v2]);

    let link = |g: ScalarField, u: usize| {
        let mut e = vec![0.0; dim];
        e[u] = -1.0;
        ScalarField::linear_combination(&[(1.0, g), (1.0, ScalarField::affine(e, 0.0))])
    };
    let square = |u: usize, v: usize| {
        ScalarField::new(
            dim,
            move |w| w[u] * w[u] - w[v],
            move |w, g| {
                g.fill(0.0);
                g[u] = 2.0 * w[u];
                g[v] = -1.0;
            },
        )
        .with_hess_vec(move |_, d, o| {
            o.fill(0.0);
            o[u] = 2.0 * d[u];
        })
        .with_support(vec![u, v])
    };

    let mut constraints = pull_all(&f1.constraints, dim, &map1);
    constraints.extend(pull_all(&f2.constraints, dim, &map2));
    constraints.push(link(f1.objective.pullback(dim, &map1), u1));
    constraints.push(link(f2.objective.pullback(dim, &map2), u2));
    constraints.push(square(u1, v1));
    constraints.push(square(u2, v2));

    let ineq: Vec<ScalarField> =
        pull_all(&f1.ineq, dim, &map1).into_iter().chain(pull_all(&f2.ineq, dim, &map2)).collect();

    let mut b = DMatrix::zeros(dim, dim);
    for i in [u1, u2] {
        for j in [u1, u2] {
            b[(i, j)] = 1.0;
        }
    }
    let mut names: Vec<String> = f1
        .constraint_names
        .iter()
        .map(|s| format!("a.{s}"))
        .chain(f2.constraint_names.iter().map(|s| format!("b.{s}")))
        .collect();
    names.extend(["a.g-u1", "b.g-u2", "u1^2-v1", "u2^2-v2"].map(String::from));
    let mut labels: Vec<String> =
        f1.y_labels.iter().map(|s| format!("a.{s}")).chain(f2.y_labels.iter().map(|s| format!("b.{s}"))).collect();
    labels.extend(["u1", "u2", "v1", "v2"].map(String::from));

    let mut out = CnForm::new(n, dim - n, objective, constraints)?
        .with_ineq(ineq)?
        .with_grade(ConvexityGrade::constant(b))?
        .with_exact(true)
        .with_constraint_names(names)?
        .with_y_labels(labels)?;
    if let Some(bx) = intersect_boxes(f1.domain_box.as_ref(), f2.domain_box.as_ref()) {
        out = out.with_domain_box(bx)?;
    }
    if let (Some(l1), Some(l2)) = (f1.lift.clone(), f2.lift.clone()) {
        let (o1, o2) = (f1.objective.clone(), f2.objective.clone());
        out = out.with_lift(Lift::new(move |x| {
            let y1 = l1.apply(x);
            let y2 = l2.apply(x);
            let w1: Vec<f64> = x.iter().chain(&y1).copied().collect();
            let w2: Vec<f64> = x.iter().chain(&y2).copied().collect();
            let (a, b) = (o1.value(&w1), o2.value(&w2));
            let mut y = y1;
            y.extend(y2);
            y.extend([a, b, a * a, b * b]);
            y
        }));
    }
    if let (Some(d1), Some(d2)) = (f1.f_direct.clone(), f2.f_direct.clone()) {
        out = out.with_f_direct(move |x| d1(x) * d2(x));
    }
    Ok(out)
}

/// `phi(f)` for a convex, nondecreasing `phi`.
///
/// The caller attests the shape of `phi`; the attestation is spot-checked
/// by sampling slopes and midpoint convexity over the range of objective
/// values the form produces. The result is graded `Plain`.
pub fn compose_monotone(phi: &ScalarField, phi_convex_increasing: bool, f: &CnForm) -> Result<CnForm> {
    if !phi_convex_increasing {
        return Err(CnError::AttestationMissing);
    }
    if phi.dim() != 1 {
        return Err(CnError::DimensionMismatch { expected: 1, got: phi.dim(), context: "outer function" });
    }
    spot_check_phi(phi, f)?;
    let mut out = f.clone();
    out.objective = f.objective.compose_outer(phi);
    out.grade = ConvexityGrade::Plain;
    if let Some(d) = f.f_direct.clone() {
        let p = phi.clone();
        out.f_direct = Some(Arc::new(move |x| p.value(&[d(x)])));
    }
    Ok(out)
}

fn spot_check_phi(phi: &ScalarField, f: &CnForm) -> Result<()> {
    let mut ts: Vec<f64> = (0..=40).map(|k| -10.0 + 0.5 * k as f64).collect();
    if let Some(l) = &f.lift {
        let bx = f.sampling_box();
        for k in 0..=20 {
            let x: Vec<f64> = bx.lower.iter().zip(&bx.upper).map(|(lo, hi)| lo + (hi - lo) * k as f64 / 20.0).collect();
            let w = f.join(&x, &l.apply(&x));
            let t = f.objective.value(&w);
            if t.is_finite() {
                ts.push(t);
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    for &t in &ts {
        let slope = phi.gradient(&[t])[0];
        if slope < -1e-10 {
            return Err(CnError::MonotonicityRefuted { t, slope });
        }
    }
    for pair in ts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let mid = phi.value(&[0.5 * (a + b)]);
        let chord = 0.5 * (phi.value(&[a]) + phi.value(&[b]));
        if mid > chord + 1e-10 * chord.abs().max(1.0) {
            return Err(CnError::ConvexityRefuted { a, b });
        }
    }
    Ok(())
}

/// Lifted form of the difference of convex functions `d - c`.
///
/// One fresh scalar `z` carries `c`: the objective is `d - z` and the single
/// constraint is `c - z = 0`. `d_grade` is the grade of `d` over its own
/// coordinates and carries over since `-z` is linear.
pub fn from_dc(d: ScalarField, c: ScalarField, d_grade: ConvexityGrade) -> Result<CnForm> {
    let n = d.dim();
    if c.dim() != n {
        return Err(CnError::DimensionMismatch { expected: n, got: c.dim(), context: "convex part c" });
    }
    let dim = n + 1;
    let idx: Vec<usize> = (0..n).collect();
    let mut ez = vec![0.0; dim];
    ez[n] = -1.0;
    let objective =
        ScalarField::linear_combination(&[(1.0, d.pullback(dim, &idx)), (1.0, ScalarField::affine(ez.clone(), 0.0))]);
    let constraint =
        ScalarField::linear_combination(&[(1.0, c.pullback(dim, &idx)), (1.0, ScalarField::affine(ez, 0.0))]);
    let grade = embed_grade(&d_grade, n, &idx, dim);
    let (cl, dd, cc) = (c.clone(), d.clone(), c);
    CnForm::new(n, 1, objective, vec![constraint])?
        .with_grade(grade)?
        .with_exact(true)
        .with_lift(Lift::new(move |x| vec![cl.value(x)]))
        .with_f_direct(move |x| dd.value(x) - cc.value(x))
        .with_constraint_names(vec!["c-z".into()])?
        .with_y_labels(vec!["z".into()])
}

fn same_n(f1: &CnForm, f2: &CnForm) -> Result<()> {
    if f1.n != f2.n {
        return Err(CnError::DimensionMismatch { expected: f1.n, got: f2.n, context: "x dimension of second form" });
    }
    Ok(())
}

fn pull_all(fields: &[ScalarField], dim: usize, map: &[usize]) -> Vec<ScalarField> {
    fields.iter().map(|f| f.pullback(dim, map)).collect()
}

fn concat_lifts(l1: Lift, l2: Lift) -> Lift {
    let (a, b) = (l1.clone(), l2.clone());
    let mut out = Lift::new(move |x| {
        let mut y = a.apply(x);
        y.extend(b.apply(x));
        y
    });
    if l1.has_branches() || l2.has_branches() {
        out = out.with_branches(move |x| {
            let (b1, b2) = (l1.all(x), l2.all(x));
            let mut all = Vec::with_capacity(b1.len() * b2.len());
            for y1 in &b1 {
                for y2 in &b2 {
                    let mut y = y1.clone();
                    y.extend_from_slice(y2);
                    all.push(y);
                }
            }
            all
        });
    }
    out
}

fn intersect_boxes(a: Option<&BoxBounds>, b: Option<&BoxBounds>) -> Option<BoxBounds> {
    match (a, b) {
        (None, None) => None,
        (Some(x), None) | (None, Some(x)) => Some(x.clone()),
        (Some(x), Some(y)) => Some(BoxBounds {
            lower: x.lower.iter().zip(&y.lower).map(|(p, q)| p.max(*q)).collect(),
            upper: x.upper.iter().zip(&y.upper).map(|(p, q)| p.min(*q)).collect(),
        }),
    }
}

/// Re-expresses a grade over a larger coordinate space.
fn embed_grade(grade: &ConvexityGrade, _old_dim: usize, map: &[usize], new_dim: usize) -> ConvexityGrade {
    match grade {
        ConvexityGrade::Plain => ConvexityGrade::Plain,
        ConvexityGrade::Uniform(rho) if map.len() == new_dim => ConvexityGrade::Uniform(*rho),
        _ => {
            let embedded = embedded_b(grade, map, new_dim, 1.0);
            ConvexityGrade::WeakUniform(embedded)
        }
    }
}

/// `scale * B(local)` scattered into a `new_dim` square matrix.
fn embedded_b(grade: &ConvexityGrade, map: &[usize], new_dim: usize, scale: f64) -> crate::cn_core::BProvider {
    let grade = grade.clone();
    let map = map.to_vec();
    Arc::new(move |w: &[f64]| {
        let local: Vec<f64> = map.iter().map(|&i| w[i]).collect();
        let mut out = DMatrix::zeros(new_dim, new_dim);
        if let Some(b) = grade.b_matrix(&local) {
            for (a, &i) in map.iter().enumerate() {
                for (c, &j) in map.iter().enumerate() {
                    out[(i, j)] += scale * b[(a, c)];
                }
            }
        }
        out
    })
}

fn combine_grades(
    f1: &CnForm,
    f2: &CnForm,
    a1: f64,
    a2: f64,
    map1: &[usize],
    map2: &[usize],
    dim: usize,
) -> ConvexityGrade {
    use ConvexityGrade::*;
    if !(a1 > 0.0 && a2 > 0.0) {
        return Plain;
    }
    match (&f1.grade, &f2.grade) {
        (Plain, _) | (_, Plain) => Plain,
        (Uniform(r1), Uniform(r2)) => Uniform((a1 * r1).min(a2 * r2)),
        (g1, g2) => {
            let b1 = embedded_b(g1, map1, dim, a1);
            let b2 = embedded_b(g2, map2, dim, a2);
            let sum: crate::cn_core::BProvider = Arc::new(move |w: &[f64]| b1(w) + b2(w));
            let strong = |g: &ConvexityGrade| matches!(g, StrongUniform(_) | Uniform(_));
            if strong(g1) && strong(g2) {
                StrongUniform(sum)
            } else {
                WeakUniform(sum)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cn_core::eval_f_via_form;

    fn two_x1x2() -> CnForm {
        let obj = ScalarField::new(
            4,
            |w| (w[0] + w[1]).powi(2) - w[2] - w[3],
            |w, g| {
                let s = 2.0 * (w[0] + w[1]);
                g.copy_from_slice(&[s, s, -1.0, -1.0]);
            },
        );
        let c1 = ScalarField::new(4, |w| w[0] * w[0] - w[2], |w, g| g.copy_from_slice(&[2.0 * w[0], 0.0, -1.0, 0.0]));
        let c2 = ScalarField::new(4, |w| w[1] * w[1] - w[3], |w, g| g.copy_from_slice(&[0.0, 2.0 * w[1], 0.0, -1.0]));
        CnForm::new(2, 2, obj, vec![c1, c2])
            .unwrap()
            .with_exact(true)
            .with_lift(Lift::new(|x| vec![x[0] * x[0], x[1] * x[1]]))
            .with_f_direct(|x| 2.0 * x[0] * x[1])
    }

    fn identity_1d() -> CnForm {
        from_convex(ScalarField::affine(vec![1.0], 0.0), ConvexityGrade::Plain).unwrap()
    }

    #[test]
    fn sum_doubles_value() {
        let f = two_x1x2();
        let s = scale_add(&f, &f, 1.0, 1.0).unwrap();
        assert_eq!((s.n(), s.m(), s.r()), (2, 4, 4));
        assert!((eval_f_via_form(&s, &[1.0, 2.0]).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn exact_difference_vanishes() {
        let f = two_x1x2();
        let s = scale_add(&f, &f, 1.0, -1.0).unwrap();
        assert!(s.is_exact());
        assert!(eval_f_via_form(&s, &[0.7, -3.0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn negation_and_its_guard() {
        let f = two_x1x2();
        let g = negate_exact(&f).unwrap();
        assert!((eval_f_via_form(&g, &[1.0, 2.0]).unwrap() + 4.0).abs() < 1e-12);
        let non_exact = f.clone().with_exact(false);
        assert_eq!(negate_exact(&non_exact).unwrap_err(), CnError::NotExact);
        assert!(matches!(scale_add(&non_exact, &f, -1.0, 1.0), Err(CnError::NonExactNegativeScale { .. })));
    }

    #[test]
    fn products() {
        let x = identity_1d();
        let p = product_exact(&x, &x).unwrap();
        assert!((eval_f_via_form(&p, &[3.0]).unwrap() - 9.0).abs() < 1e-12);

        let shifted = from_convex(ScalarField::affine(vec![1.0], -1.0), ConvexityGrade::Plain).unwrap();
        let q = product_exact(&x, &shifted).unwrap();
        assert!((eval_f_via_form(&q, &[5.0]).unwrap() - 20.0).abs() < 1e-12);

        let f = two_x1x2();
        let one = from_convex(ScalarField::affine(vec![0.0, 0.0], 1.0), ConvexityGrade::Plain).unwrap();
        let r = product_exact(&f, &one).unwrap();
        assert!((eval_f_via_form(&r, &[1.0, 2.0]).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(r.r(), f.r() + 1 + 4);
    }

    #[test]
    fn compositions() {
        let f = two_x1x2();
        let exp = ScalarField::new(1, |t| t[0].exp(), |t, g| g[0] = t[0].exp())
            .with_hess_vec(|t, v, o| o[0] = t[0].exp() * v[0]);
        let e = compose_monotone(&exp, true, &f).unwrap();
        assert!((eval_f_via_form(&e, &[1.0, 2.0]).unwrap() - 4f64.exp()).abs() < 1e-9);

        let neg = ScalarField::affine(vec![-1.0], 0.0);
        assert!(matches!(compose_monotone(&neg, true, &f), Err(CnError::MonotonicityRefuted { .. })));
        assert_eq!(compose_monotone(&exp, false, &f).unwrap_err(), CnError::AttestationMissing);
    }

    #[test]
    fn dc_forms() {
        let sq = |k: f64, s: f64| {
            ScalarField::new(1, move |x| k * (x[0] - s).powi(2), move |x, g| g[0] = 2.0 * k * (x[0] - s))
        };
        let f = from_dc(sq(2.0, 0.0), sq(1.0, 0.0), ConvexityGrade::Plain).unwrap();
        assert!((eval_f_via_form(&f, &[3.0]).unwrap() - 9.0).abs() < 1e-12);
        let f = from_dc(sq(1.0, 0.0), sq(1.0, 1.0), ConvexityGrade::Plain).unwrap();
        assert!((eval_f_via_form(&f, &[0.0]).unwrap() + 1.0).abs() < 1e-12);
    }
}

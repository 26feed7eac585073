//! Property suites over the bundled problems and the building blocks.

mod common;

use std::sync::LazyLock;

use cnopt::cn_core::{
    constraint_residual, eval_f_via_form, lift, lift_branches, BoxBounds, CnForm, ConvexityGrade, Lift, ScalarField,
    Verdict,
};
use cnopt::combinators::{compose_monotone, from_convex, from_dc, negate_exact, product_exact, scale_add};
use cnopt::convex_inner::cone_lp_certificate;
use cnopt::convex_inner::{minimize_smooth, InnerConfig};
use cnopt::optimality::{falsify_k_set, wcnp_condition, CandidatePoint, DirectionCone, KSet};
use cnopt::problems::{brute_force_oracle, make_problem, LsData, ProblemSpec};
use cnopt::solver::{
    augmented_lagrangian, full_augmented_value, multiplier_update, Partition, SolverConfig, SolverState,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{catalog, gradient_error, in_box};

type Entry = (String, CnForm, Partition, BoxBounds);

static CATALOG: LazyLock<Vec<Entry>> = LazyLock::new(catalog);

fn unit_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..=1.0f64, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lift_lands_in_the_feasible_set(k in 0..10usize, u in unit_vec(10)) {
        let (label, form, _, b) = &CATALOG[k];
        let x = in_box(b, &u[..form.n()]);
        let y = lift(form, &x).unwrap();
        let r = constraint_residual(form, &x, &y).unwrap();
        prop_assert!(r.norm <= 1e-8, "{label}: residual {} at {x:?}", r.norm);
    }

    #[test]
    fn form_value_matches_direct_value(k in 0..10usize, u in unit_vec(10), snap in prop::collection::vec(any::<bool>(), 10)) {
        let (label, form, _, b) = &CATALOG[k];
        // Exact zeros exercise the second lift branch of the zero-norm forms.
        let x: Vec<f64> = in_box(b, &u[..form.n()]).into_iter().zip(&snap).map(|(v, s)| if *s { 0.0 } else { v }).collect();
        let via = eval_f_via_form(form, &x).unwrap();
        let direct = form.f_direct(&x).unwrap();
        prop_assert!((via - direct).abs() <= 1e-6 * direct.abs().max(1.0), "{label}: {via} vs {direct}");
    }

    #[test]
    fn gradients_match_finite_differences(k in 0..10usize, u in unit_vec(10), noise in prop::collection::vec(-0.5..0.5f64, 40)) {
        let (label, form, _, b) = &CATALOG[k];
        let x = in_box(b, &u[..form.n()]);
        let y: Vec<f64> = lift(form, &x).unwrap().iter().zip(&noise).map(|(a, e)| a + e).collect();
        let w = form.join(&x, &y);
        let err = gradient_error(form.objective(), &w);
        prop_assert!(err <= 1e-5, "{label} objective: {err:e}");
        for (i, c) in form.constraints().iter().enumerate() {
            let err = gradient_error(c, &w);
            prop_assert!(err <= 1e-5, "{label} constraint {i}: {err:e}");
        }
        for (i, h) in form.ineq_constraints().iter().enumerate() {
            let err = gradient_error(h, &w);
            prop_assert!(err <= 1e-5, "{label} inequality {i}: {err:e}");
        }
    }

    #[test]
    fn ex44_is_symmetric(x in prop::collection::vec(-5.0..5.0f64, 6), perm_seed in any::<u64>(), sign in any::<bool>()) {
        let (form, _) = make_problem(&ProblemSpec::ex44(6, 3)).unwrap();
        let base = form.f_direct(&x).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
        let mut p = x.clone();
        for i in (1..p.len()).rev() {
            p.swap(i, rng.gen_range(0..=i));
        }
        if sign {
            p.iter_mut().for_each(|v| *v = -*v);
        }
        let moved = form.f_direct(&p).unwrap();
        prop_assert!((base - moved).abs() <= 1e-12 * base.abs().max(1.0));
    }

    #[test]
    fn multiplier_recurrence_is_exact(
        k in 0..10usize,
        u in unit_vec(10),
        a0 in -3.0..3.0f64,
        sigma1 in 0.1..1e4f64,
        big_n in 1.5..1e3f64,
    ) {
        let (_, form, part, b) = &CATALOG[k];
        let x = in_box(b, &u[..form.n()]);
        let mut w0 = form.join(&x, &vec![0.3; form.m()]);
        w0[0] += 0.1;
        let cfg = SolverConfig { sigma1, big_n, alpha0: vec![a0], w0: w0.clone(), ..Default::default() };
        let s = SolverState::initial(form, part, &cfg).unwrap();
        let next = multiplier_update(&s, form, part, &cfg);
        for j in 0..part.p() {
            for (q, &i) in part.owned_constraints(j).iter().enumerate() {
                let g = form.constraints()[i].value(&w0);
                prop_assert_eq!(next.alpha[j][q].to_bits(), (s.alpha[j][q] + s.sigma * g).to_bits());
            }
        }
        prop_assert_eq!(next.sigma, (sigma1 * big_n).min(cfg.sigma_cap));
        prop_assert_eq!(next.k, s.k + 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Each block minimization inside a sweep never raises the full
    /// augmented Lagrangian.
    #[test]
    fn gauss_seidel_blocks_descend(
        lambda in 0.5..50.0f64,
        e in prop::sample::select(vec![1usize, 2, 5]),
        w0 in prop::collection::vec(-1.0..1.0f64, 30),
        a0 in -1.0..1.0f64,
        sigma in 1.0..100.0f64,
    ) {
        let (form, part) = make_problem(&ProblemSpec::ex43(10, e, lambda)).unwrap();
        let cfg = SolverConfig { alpha0: vec![a0], w0, sigma1: sigma, ..Default::default() };
        let mut state = SolverState::initial(&form, &part, &cfg).unwrap();
        let mut before = full_augmented_value(&form, &part, &state);
        for j in 0..part.p() {
            let w = state.joined();
            let field = augmented_lagrangian(&form, &part, j, &w, &state.alpha[j], state.sigma, &[]).unwrap();
            let coords = part.block_coords(j, form.n());
            let v0: Vec<f64> = coords.iter().map(|&c| w[c]).collect();
            let res = minimize_smooth(&field, &v0, &InnerConfig::default()).unwrap();
            let mut w = w;
            for (q, &c) in coords.iter().enumerate() {
                w[c] = res.x[q];
            }
            state.x = w[..form.n()].to_vec();
            state.y = w[form.n()..].to_vec();
            let after = full_augmented_value(&form, &part, &state);
            prop_assert!(after <= before + 1e-9 * before.abs().max(1.0), "block {j}: {before} -> {after}");
            before = after;
        }
    }

    /// `q'd < 0` whenever `q'd + d'Bd/2 < 0` and `B` is PSD, so every Kw
    /// witness is a Kc witness.
    #[test]
    fn kw_witnesses_are_kc_witnesses(lambda in 0.05..3.0f64, x in prop::collection::vec(-2.0..2.0f64, 2), seed in any::<u64>()) {
        for spec in [ProblemSpec::ex42(lambda), ProblemSpec::zero_norm(2, lambda, LsData::sum_to_one(2))] {
            let (form, _) = make_problem(&spec).unwrap();
            let pt = CandidatePoint::from_x(&form, &x).unwrap();
            if let Verdict::Refuted(wit) = falsify_k_set(&form, &pt, KSet::Kw, None, 400, None, seed).unwrap() {
                let w0 = pt.joined();
                let q = form.objective().gradient(&w0);
                let d: Vec<f64> = wit.point.iter().zip(&w0).map(|(a, b)| a - b).collect();
                let lin: f64 = q.iter().zip(&d).map(|(a, b)| a * b).sum();
                prop_assert!(lin < 0.0, "Kw witness with q'd = {lin}");
            }
        }
    }

    /// The cone LP verdict depends only on the cone and the ray of `q`.
    #[test]
    fn cone_lp_is_scale_invariant(
        q in prop::collection::vec(-1.0..1.0f64, 4),
        rows in prop::collection::vec(-1.0..1.0f64, 12),
        c in 0.01..100.0f64,
        d in prop::collection::vec(0.01..100.0f64, 3),
    ) {
        let q = DVector::from_vec(q);
        let a = DMatrix::from_row_slice(3, 4, &rows);
        let scaled_rows = DMatrix::from_fn(3, 4, |i, j| a[(i, j)] * d[i]);
        let base = cone_lp_certificate(&q, &a).label();
        prop_assert_eq!(base, cone_lp_certificate(&(&q * c), &a).label());
        prop_assert_eq!(base, cone_lp_certificate(&q, &scaled_rows).label());
    }

    /// Pointwise value of every combinator, relative error `1e-8`.
    #[test]
    fn combinators_are_pointwise(x in prop::collection::vec(-2.0..2.0f64, 2), a1 in -3.0..3.0f64, a2 in -3.0..3.0f64) {
        let f = two_x1x2();
        let g = from_convex(sum_squares(), ConvexityGrade::Plain).unwrap();
        let fv = 2.0 * x[0] * x[1];
        let gv = x[0] * x[0] + x[1] * x[1];
        let close = |got: f64, want: f64| (got - want).abs() <= 1e-8 * want.abs().max(1.0);

        let s = scale_add(&f, &g, a1, a2).unwrap();
        prop_assert!(close(eval_f_via_form(&s, &x).unwrap(), a1 * fv + a2 * gv));
        let nf = negate_exact(&f).unwrap();
        prop_assert!(close(eval_f_via_form(&nf, &x).unwrap(), -fv));
        let p = product_exact(&f, &g).unwrap();
        prop_assert!(close(eval_f_via_form(&p, &x).unwrap(), fv * gv));
        let exp = ScalarField::new(1, |t| t[0].exp(), |t, g| g[0] = t[0].exp());
        let c = compose_monotone(&exp, true, &f).unwrap();
        prop_assert!(close(eval_f_via_form(&c, &x).unwrap(), fv.exp()));
        let dc = from_dc(sum_squares(), sum_squares_shifted(), ConvexityGrade::Plain).unwrap();
        let want = gv - ((x[0] - 1.0).powi(2) + x[1] * x[1]);
        prop_assert!(close(eval_f_via_form(&dc, &x).unwrap(), want));
    }
}

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

fn sum_squares() -> ScalarField {
    ScalarField::new(
        2,
        |x| x[0] * x[0] + x[1] * x[1],
        |x, g| {
            g[0] = 2.0 * x[0];
            g[1] = 2.0 * x[1];
        },
    )
}

fn sum_squares_shifted() -> ScalarField {
    ScalarField::new(
        2,
        |x| (x[0] - 1.0).powi(2) + x[1] * x[1],
        |x, g| {
            g[0] = 2.0 * (x[0] - 1.0);
            g[1] = 2.0 * x[1];
        },
    )
}

/// Membership in the full direction cone agrees with membership of every
/// block slice in its block cone, over 1000 directions per problem.
#[test]
fn cone_is_the_product_of_block_cones() {
    let specs = [
        ProblemSpec::ex42(2.0),
        ProblemSpec::ex43(10, 5, 10.0),
        ProblemSpec::ex43(10, 2, 1.0),
        ProblemSpec::zero_norm(3, 1.0, LsData::sum_to_one(3)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for spec in specs {
        let (form, _) = make_problem(&spec).unwrap();
        let part = if spec.name == cnopt::problems::ProblemName::ZeroNormLs {
            Partition::finest(&form)
        } else {
            make_problem(&spec).unwrap().1
        };
        part.validate(&form).unwrap();
        let b = form.sampling_box();
        let (mut inside, mut outside) = (0, 0);
        for _ in 0..1000 {
            let x = b.sample(&mut rng);
            let pt = CandidatePoint::from_x(&form, &x).unwrap();
            let full = DirectionCone::at(&form, &pt, false);
            let mut d: Vec<f64> = (0..form.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            // Zeroing whole blocks keeps both outcomes frequent.
            for j in 0..part.p() {
                if rng.gen_bool(0.5) {
                    part.block_coords(j, form.n()).iter().for_each(|&c| d[c] = 0.0);
                }
            }
            let in_full = full.contains(&d, 0.0);
            let in_blocks = (0..part.p()).all(|j| {
                let coords = part.block_coords(j, form.n());
                let dj: Vec<f64> = coords.iter().map(|&c| d[c]).collect();
                DirectionCone::block(&form, &part, &pt, j, false).contains(&dj, 0.0)
            });
            assert_eq!(in_full, in_blocks, "{:?} at x = {x:?}, d = {d:?}", spec.name);
            if in_full {
                inside += 1;
            } else {
                outside += 1;
            }
        }
        assert!(inside > 0 && outside > 0, "{:?}: {inside} inside, {outside} outside", spec.name);
    }
}

/// The direction test never certifies a point whose value is more than
/// `1e-3` above the grid minimum.
#[test]
fn certificates_agree_with_the_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for lambda in [0.3, 0.8, 1.05, 1.2, 2.0, 4.0] {
        let spec = ProblemSpec::ex42(lambda);
        let (form, _) = make_problem(&spec).unwrap();
        let (_, fmin) = brute_force_oracle(&spec, &BoxBounds::uniform(2, -2.0, 2.0), 201).unwrap();
        let mut cands = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 0.5]];
        cands.extend((0..5).map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]));
        for x in cands {
            let pt = CandidatePoint::from_x(&form, &x).unwrap();
            let (v, _) = wcnp_condition(&form, &pt).unwrap();
            let fx = form.f_direct(&x).unwrap();
            if v.is_certified() {
                assert!(fx <= fmin + 1e-3, "lambda {lambda}: certified {x:?} with f = {fx}, grid min {fmin}");
            }
        }
    }
    for lambda in [0.2, 0.6, 1.0, 3.0] {
        let spec = ProblemSpec::zero_norm(2, lambda, LsData::sum_to_one(2));
        let (form, _) = make_problem(&spec).unwrap();
        let (_, fmin) = brute_force_oracle(&spec, &BoxBounds::uniform(2, -3.0, 3.0), 301).unwrap();
        for x in [vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0], vec![2.0, -1.0]] {
            for y in lift_branches(&form, &x).unwrap() {
                let Ok(pt) = CandidatePoint::new(&form, x.clone(), y) else { continue };
                let (v, _) = wcnp_condition(&form, &pt).unwrap();
                let fx = form.f_direct(&x).unwrap();
                if v.is_certified() {
                    assert!(fx <= fmin + 1e-3, "lambda {lambda}: certified {x:?} with f = {fx}, grid min {fmin}");
                }
            }
        }
    }
}

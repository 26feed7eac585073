use cnopt::cn_core::{constraint_residual, eval_f_via_form, lift, BoxBounds};
use cnopt::problems::{brute_force_oracle, make_problem, LsData, ProblemName, ProblemSpec};
use cnopt::CnError;

#[test]
fn dimension_table() {
    let (f, _) = make_problem(&ProblemSpec::ex42(1.0)).unwrap();
    assert_eq!((f.n(), f.m(), f.r()), (2, 6, 6));
    for n in [1, 2, 7] {
        let (f, _) = make_problem(&ProblemSpec::zero_norm(n, 1.0, LsData::sum_to_one(n))).unwrap();
        assert_eq!((f.n(), f.m(), f.r()), (n, 2 * n, 3 * n));
    }
    for (n, e) in [(5, 5), (10, 5), (6, 3)] {
        let (f, _) = make_problem(&ProblemSpec::ex44(n, e)).unwrap();
        assert_eq!((f.n(), f.m(), f.r(), f.ineq_constraints().len()), (n, 2 * n + 1, 2 * n, 2 * n));
    }
    for (n, e) in [(2, 1), (6, 3), (50, 5)] {
        let (f, _) = make_problem(&ProblemSpec::ex45(n, e)).unwrap();
        let k = n - 1;
        assert_eq!((f.n(), f.m(), f.r(), f.ineq_constraints().len()), (n, 3 * k, 3 * k, 3 * k));
    }
}

#[test]
fn half_power_constraint_order() {
    let (f, _) = make_problem(&ProblemSpec::ex42(1.0)).unwrap();
    assert_eq!(f.constraint_names(), ["y1^4-y3", "x1^2-y3", "y2^2-y1", "y4^4-y6", "x2^2-y6", "y5^2-y4"]);
}

#[test]
fn spot_values() {
    let (f, _) = make_problem(&ProblemSpec::ex42(3.0)).unwrap();
    assert_eq!(eval_f_via_form(&f, &[0.0, 0.0]).unwrap(), 1.0);
    assert_eq!(lift(&f, &[1.0, 0.0]).unwrap(), vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);

    let (z, _) = make_problem(&ProblemSpec::zero_norm(2, 5.0, LsData::sum_to_one(2))).unwrap();
    assert_eq!(eval_f_via_form(&z, &[0.0, 0.0]).unwrap(), 1.0);
    assert!((eval_f_via_form(&z, &[0.0, 2.0]).unwrap() - 6.0).abs() < 1e-12);
    assert_eq!(z.f_direct(&[0.0, 2.0]).unwrap(), 6.0);

    let (z1, _) = make_problem(&ProblemSpec::zero_norm(1, 5.0, LsData::sum_to_one(1))).unwrap();
    assert_eq!(lift(&z1, &[0.0]).unwrap(), vec![0.0, 1.0]);
    assert_eq!(lift(&z1, &[2.0]).unwrap(), vec![1.0, 4.0]);
    let r = constraint_residual(&z1, &[1.0], &[1.0, 1.0]).unwrap();
    assert_eq!(r.equality, vec![0.0, 0.0, 0.0]);

    let (e43, _) = make_problem(&ProblemSpec::ex43(5, 5, 7.0)).unwrap();
    assert!((e43.f_direct(&[0.0, 0.0, 0.0, 0.0, 2.0]).unwrap() - 7.0).abs() < 1e-12);
    assert_eq!(e43.f_direct(&[0.0; 5]).unwrap(), 100.0);

    let (e44, _) = make_problem(&ProblemSpec::ex44(5, 5)).unwrap();
    assert!(eval_f_via_form(&e44, &[3.1448; 5]).unwrap().abs() < 1e-9);
    assert!((e44.f_direct(&[1.0, -2.0, 0.0, 0.0, 0.0]).unwrap() - 7.0).abs() < 1e-12);
}

#[test]
fn every_bundled_partition_is_valid() {
    let specs = [
        ProblemSpec::ex42(1.0),
        ProblemSpec::zero_norm(4, 1.0, LsData::sum_to_one(4)),
        ProblemSpec::ex43(30, 5, 1.0),
        ProblemSpec::ex44(50, 5),
        ProblemSpec::ex44(90, 3),
        ProblemSpec::ex45(50, 2),
        ProblemSpec::ex45(50, 50),
    ];
    for s in specs {
        let (f, p) = make_problem(&s).unwrap();
        p.validate(&f).unwrap();
        assert_eq!(p.p(), s.n / s.e);
    }
}

#[test]
fn chained_partition_links_consecutive_blocks() {
    let (_, p) = make_problem(&ProblemSpec::ex45(50, 5)).unwrap();
    assert_eq!(p.overlap_links.len(), 9);
    for (j, l) in p.overlap_links.iter().enumerate() {
        assert_eq!((l.coordinate, l.earlier, l.later), (5 * (j + 1), j, j + 1));
    }
    let (_, p) = make_problem(&ProblemSpec::ex45(50, 50)).unwrap();
    assert!(p.overlap_links.is_empty());
}

#[test]
fn grid_oracle() {
    let b2 = BoxBounds::uniform(2, -2.0, 2.0);
    let (x, f) = brute_force_oracle(&ProblemSpec::ex42(2.0), &b2, 401).unwrap();
    assert_eq!(x, vec![0.0, 0.0]);
    assert_eq!(f, 1.0);
    let (_, f) = brute_force_oracle(&ProblemSpec::ex42(0.1), &b2, 401).unwrap();
    assert!(f < 1.0);

    let spec = ProblemSpec::zero_norm(1, 10.0, LsData { a: vec![vec![1.0]], b: vec![1.0] });
    let (x, f) = brute_force_oracle(&spec, &BoxBounds::uniform(1, -3.0, 3.0), 401).unwrap();
    assert_eq!((x, f), (vec![0.0], 1.0));

    let big = ProblemSpec::ex43(5, 5, 1.0);
    assert_eq!(brute_force_oracle(&big, &BoxBounds::uniform(5, -1.0, 1.0), 3).unwrap_err(), CnError::TooLarge { n: 5 });
}

#[test]
fn spec_validation() {
    assert!(matches!(make_problem(&ProblemSpec::ex42(-1.0)), Err(CnError::BadSpec(_))));
    assert!(matches!(make_problem(&ProblemSpec::ex43(10, 3, 1.0)), Err(CnError::BadSpec(_))));
    assert!(matches!(make_problem(&ProblemSpec::ex45(1, 1)), Err(CnError::BadSpec(_))));
    let mut s = ProblemSpec::zero_norm(2, 1.0, LsData::sum_to_one(2));
    s.data = None;
    assert!(matches!(make_problem(&s), Err(CnError::BadSpec(_))));
    s.data = Some(LsData { a: vec![vec![1.0]], b: vec![1.0] });
    assert!(matches!(make_problem(&s), Err(CnError::BadSpec(_))));
}

#[test]
fn names_and_serialization() {
    assert_eq!(ProblemName::parse("Ex4.2").unwrap(), ProblemName::Ex42);
    assert_eq!(ProblemName::parse("ex9").unwrap(), ProblemName::ZeroNormLs);
    assert!(ProblemName::parse("ex99").is_err());
    let spec = ProblemSpec::ex43(10, 5, 100.0);
    let json = serde_json::to_string(&spec).unwrap();
    assert!(json.contains("\"ex43\""));
    assert_eq!(serde_json::from_str::<ProblemSpec>(&json).unwrap(), spec);
}

use super::*;
use crate::corpus::{random_poly, rng};
use proptest::prelude::*;

fn line() -> ChartRef {
    Chart::from_names("M", &["x"])
}

/// Action algebroid of `sl2` on the line: `e1 ↦ ∂x, e2 ↦ x∂x, e3 ↦ x²∂x`.
fn sl2_action() -> AlgebroidData {
    let m = line();
    let p = |s: &str| ScalarFn::parse(&m, s).unwrap();
    let anchor = vec![vec![p("1")], vec![p("x")], vec![p("x^2")]];
    AlgebroidData::from_brackets(&m, 3, anchor, |i, j| match (i, j) {
        (0, 1) => vec![p("1"), p("0"), p("0")],
        (0, 2) => vec![p("0"), p("2"), p("0")],
        _ => vec![p("0"), p("0"), p("1")],
    })
    .unwrap()
}

fn random_section(seed: u64, a: &AlgebroidData, deg: u32) -> SectionExpr {
    let mut g = rng(seed);
    SectionExpr::new(
        a.base(),
        (0..a.rank())
            .map(|_| random_poly(&mut g, a.base(), deg, 0.6))
            .collect(),
    )
}

#[test]
fn zero_algebroid_brackets_vanish() {
    let a = AlgebroidData::zero(&Chart::from_names("M", &["x", "y"]), 2);
    let s = random_section(1, &a, 2);
    let t = random_section(2, &a, 2);
    assert!(a.bracket(&s, &t).is_zero());
    assert!(check_algebroid(&a).passed());
}

#[test]
fn tangent_bracket_is_vector_field_bracket() {
    let m = Chart::from_names("M", &["x", "y"]);
    let a = AlgebroidData::tangent(&m);
    let p = |s: &str| ScalarFn::parse(&m, s).unwrap();
    let s = SectionExpr::new(&m, vec![p("x"), p("0")]);
    let t = SectionExpr::new(&m, vec![p("0"), p("1")]);
    assert!(a.bracket(&s, &t).is_zero());
    let t = SectionExpr::new(&m, vec![p("x*y"), p("x^2")]);
    let expect = VectorField::new(&m, vec![p("x"), p("0")])
        .bracket(&VectorField::new(&m, vec![p("x*y"), p("x^2")]));
    assert_eq!(a.bracket(&s, &t).coeffs(), expect.comps());
    assert!(check_algebroid(&a).passed());
}

#[test]
fn algebroid_checker_detects_failures() {
    assert!(check_algebroid(&sl2_action()).passed());
    let m = line();
    let p = |s: &str| ScalarFn::parse(&m, s).unwrap();
    let bad = AlgebroidData::new(&m, 2, vec![vec![p("1")], vec![p("x")]], vec![p("0"); 8]).unwrap();
    let rep = check_algebroid(&bad);
    assert!(!rep.passes("anchor morphism"));
    assert!(rep.passes("Jacobi identity"));
    let not_skew = AlgebroidData::new(&m, 1, vec![vec![p("1")]], vec![p("1")]);
    assert!(matches!(not_skew, Err(AlgebroidError::NotSkew { .. })));
}

#[test]
fn jacobi_failure_is_located() {
    let m = line();
    let o = ScalarFn::one(&m);
    let z = ScalarFn::zero(&m);
    // [e1,e2] = e2, [e2,e3] = e1, [e1,e3] = 0 violates Jacobi on (e1,e2,e3).
    let a = AlgebroidData::from_brackets(&m, 3, vec![vec![z.clone()]; 3], |i, j| match (i, j) {
        (0, 1) => vec![z.clone(), o.clone(), z.clone()],
        (1, 2) => vec![o.clone(), z.clone(), z.clone()],
        _ => vec![z.clone(); 3],
    })
    .unwrap();
    let rep = check_algebroid(&a);
    let j = rep.equation("Jacobi identity").unwrap();
    assert_eq!(j.failed, 1);
    assert_eq!(j.samples[0].slots, "e1,e2,e3");
}

#[test]
fn prolongation_of_zero_and_tangent() {
    let m = line();
    let z = tangent_prolongation(&AlgebroidData::zero(&m, 2));
    assert_eq!(z.rank(), 4);
    assert!(z.structure().iter().all(|c| c.is_zero()));
    assert!(z.anchor_rows().iter().flatten().all(|c| c.is_zero()));
    assert!(check_algebroid(&tangent_prolongation(&AlgebroidData::tangent(&m))).passed());
    assert!(check_algebroid(&tangent_prolongation(&sl2_action())).passed());
}

#[test]
fn prolongation_matches_lifts_of_sections() {
    let a = sl2_action();
    let ta = tangent_prolongation(&a);
    let tm = ta.base().clone();
    let fam = jet_family(a.base(), a.rank(), 1);
    for s in &fam {
        let ts = tangent_lift_section(s, &tm);
        let ra = a.anchor_of(s);
        let complete = VectorField::new(
            &tm,
            ra.comps()
                .iter()
                .map(|c| lift_to_tangent(c, &tm))
                .chain(ra.comps().iter().map(|c| dot_lift(c, &tm)))
                .collect(),
        );
        assert_eq!(ta.anchor_of(&ts), complete);
        for t in &fam {
            let br = a.bracket(s, t);
            let tt = tangent_lift_section(t, &tm);
            let ct = core_lift_section(t, &tm);
            assert_eq!(ta.bracket(&ts, &tt), tangent_lift_section(&br, &tm));
            assert_eq!(ta.bracket(&ts, &ct), core_lift_section(&br, &tm));
            assert!(ta.bracket(&core_lift_section(s, &tm), &ct).is_zero());
        }
    }
}

#[test]
fn prolongation_contains_dotted_structure_block() {
    let m = line();
    let p = |s: &str| ScalarFn::parse(&m, s).unwrap();
    let a =
        AlgebroidData::from_brackets(&m, 2, vec![vec![p("0")]; 2], |_, _| vec![p("x^2"), p("3")])
            .unwrap();
    let ta = tangent_prolongation(&a);
    let tm = ta.base().clone();
    assert_eq!(ta.c(0, 1, 0), &ScalarFn::parse(&tm, "x^2").unwrap());
    assert_eq!(ta.c(0, 1, 2), &ScalarFn::parse(&tm, "2*x*x_dot").unwrap());
    assert_eq!(ta.c(0, 1, 3), &ScalarFn::zero(&tm));
    assert_eq!(ta.c(0, 3, 2), &ScalarFn::parse(&tm, "x^2").unwrap());
    assert_eq!(ta.c(3, 0, 3), &ScalarFn::parse(&tm, "-3").unwrap());
}

#[test]
fn zero_and_euler_fields_are_im() {
    for a in [
        AlgebroidData::tangent(&Chart::from_names("M", &["x", "y"])),
        sl2_action(),
    ] {
        let chart = total_space_chart(&a);
        let z = VectorField::zero(&chart);
        assert!(check_im_vector_field(&a, &z).unwrap().is_im);
        let (ta, eul) = euler_field_of_prolongation(&a);
        let rep = check_im_vector_field(&ta, &eul).unwrap();
        assert!(rep.is_im, "{}", rep.report);
    }
}

#[test]
fn fiber_scaling_field_is_not_a_bracket_derivation() {
    let a = sl2_action();
    let chart = total_space_chart(&a);
    let n = a.dim();
    let mut comps = vec![ScalarFn::zero(&chart); n];
    comps.extend((0..a.rank()).map(|k| ScalarFn::var(&chart, n + k)));
    let rep = check_im_vector_field(&a, &VectorField::new(&chart, comps)).unwrap();
    assert!(!rep.is_im);
    assert!(!rep.report.passes("bracket derivation"));
    assert!(!rep.report.passes("anchor compatibility"));
}

#[test]
fn tangent_lift_of_vector_field_is_im_on_tangent_algebroid() {
    let m = Chart::from_names("M", &["x", "y"]);
    let a = AlgebroidData::tangent(&m);
    let chart = total_space_chart(&a);
    let x = VectorField::new(
        &m,
        vec![
            ScalarFn::parse(&m, "x*y + 1").unwrap(),
            ScalarFn::parse(&m, "y^2").unwrap(),
        ],
    );
    let emb = |f: &ScalarFn| f.embed(&chart, &[0, 1]);
    let mut comps: Vec<ScalarFn> = x.comps().iter().map(emb).collect();
    for k in 0..2 {
        let mut acc = ScalarFn::zero(&chart);
        for nu in 0..2 {
            acc += &(&emb(&x.comp(k).diff(nu)) * &ScalarFn::var(&chart, 2 + nu));
        }
        comps.push(acc);
    }
    let z = VectorField::new(&chart, comps.clone());
    let rep = check_im_vector_field(&a, &z).unwrap();
    assert!(rep.is_im);
    let s = a.frame(0).mul_fn(&ScalarFn::parse(&m, "x").unwrap());
    assert_eq!(
        rep.linear.derivation(&s).coeffs(),
        x.bracket(&VectorField::new(&m, s.coeffs().to_vec()))
            .comps()
    );
    comps[3] = &comps[3] + &ScalarFn::var(&chart, 2);
    let rep = check_im_vector_field(&a, &VectorField::new(&chart, comps)).unwrap();
    assert!(!rep.is_im);
}

#[test]
fn nonlinear_fields_are_rejected() {
    let a = sl2_action();
    let chart = total_space_chart(&a);
    let mut comps = vec![ScalarFn::zero(&chart); 4];
    comps[1] = ScalarFn::parse(&chart, "w1^2").unwrap();
    assert!(matches!(
        check_im_vector_field(&a, &VectorField::new(&chart, comps.clone())),
        Err(AlgebroidError::NotLinear(_))
    ));
    comps[1] = ScalarFn::zero(&chart);
    comps[0] = ScalarFn::parse(&chart, "w2").unwrap();
    assert!(matches!(
        check_im_vector_field(&a, &VectorField::new(&chart, comps)),
        Err(AlgebroidError::NotLinear(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn leibniz_rule_holds(seed in 0u64..100_000) {
        let a = sl2_action();
        let s = random_section(seed, &a, 2);
        let t = random_section(seed + 1, &a, 2);
        let mut g = rng(seed + 2);
        let f = random_poly(&mut g, a.base(), 2, 0.7);
        let lhs = a.bracket(&s, &t.mul_fn(&f));
        let rhs = a.bracket(&s, &t).mul_fn(&f).add(&t.mul_fn(&a.anchor_of(&s).apply(&f)));
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(a.bracket(&s, &t), a.bracket(&t, &s).scale(&Rat::int(-1)));
    }

    #[test]
    fn prolongation_stays_an_algebroid(c in proptest::collection::vec(-2i64..=2, 2)) {
        // Two-dimensional algebras `[e1,e2] = α e1 + β e2` over the line.
        let m = line();
        let (al, be) = (Rat::int(c[0]), Rat::int(c[1]));
        let a = AlgebroidData::from_brackets(&m, 2, vec![vec![ScalarFn::zero(&m)]; 2], |_, _| {
            vec![ScalarFn::constant(&m, al.clone()), ScalarFn::constant(&m, be.clone())]
        }).unwrap();
        prop_assert!(check_algebroid(&a).passed());
        prop_assert!(check_algebroid(&tangent_prolongation(&a)).passed());
        let (ta, eul) = euler_field_of_prolongation(&a);
        prop_assert!(check_im_vector_field(&ta, &eul).unwrap().is_im);
    }
}

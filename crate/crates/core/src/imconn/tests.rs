use super::*;
use crate::corpus::{random_connection, random_poly, rng, small_rat};
use crate::symkernel::Rat;
use proptest::prelude::*;

fn plane() -> ChartRef {
    Chart::from_names("M", &["x", "y"])
}

/// Components of the tangent lift of `∇` to `TTM`, read on `A = TM`:
/// `∇ᴬ = ∇ᴹ = ∇`, `l = T`, `F^k_{iμν} = ∂_i Γ^k_{μν}`.
fn tangent_lift(nabla: &ConnectionData) -> IMConnComponents {
    let m = nabla.base().clone();
    let n = m.dim();
    let t = torsion_of(nabla).unwrap();
    let f = CompArray::from_fn(&[n, n, n, n], |ix| nabla.g(ix[1], ix[2], ix[3]).diff(ix[0]));
    let l = CompArray::from_fn(&[n, n, n], |ix| t.get(&[ix[0], ix[1], ix[2]]).clone());
    let comps = ConnComponents::new(f, nabla.clone(), nabla.clone(), l).unwrap();
    IMConnComponents::new(AlgebroidData::tangent(&m), comps).unwrap()
}

fn sample_connection(seed: u64, m: &ChartRef) -> ConnectionData {
    random_connection(&mut rng(seed), m, m.dim(), 1, 0.5)
}

#[test]
fn flat_tangent_components_are_im() {
    let m = plane();
    let c = IMConnComponents::zero(&AlgebroidData::tangent(&m));
    let rep = check_im_connection(&c).unwrap();
    assert!(rep.passed(), "{rep}");
    assert_eq!(
        rep.equations
            .iter()
            .map(|e| e.name.as_str())
            .collect::<Vec<_>>(),
        ["bracket_formula", "lie_nablaA", "F_bracket", "l_bracket"]
    );
    assert!(derived_identities_check(&c).unwrap().passed());
}

#[test]
fn nonabelian_lie_algebra_admits_no_zero_connection() {
    let pt = Chart::from_names("pt", &[]);
    let a = AlgebroidData::lie_algebra(&pt, 3, &so3_structure()).unwrap();
    let rep = check_im_connection(&IMConnComponents::zero(&a)).unwrap();
    assert!(!rep.passes("bracket_formula"));
    let abelian = AlgebroidData::zero(&pt, 3);
    assert!(check_im_connection(&IMConnComponents::zero(&abelian))
        .unwrap()
        .passed());
}

fn so3_structure() -> Vec<Rat> {
    let mut c = vec![Rat::zero(); 27];
    for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        c[(i * 3 + j) * 3 + k] = Rat::one();
        c[(j * 3 + i) * 3 + k] = -Rat::one();
    }
    c
}

#[test]
fn tangent_lift_of_a_connection_is_im() {
    let m = plane();
    for seed in [3, 11] {
        let c = tangent_lift(&sample_connection(seed, &m));
        let rep = check_im_connection(&c).unwrap();
        assert!(rep.passed(), "{rep}");
        let der = derived_identities_check(&c).unwrap();
        assert!(der.passed(), "{der}");
        let form = check_im_form(&im_torsion(&c).unwrap()).unwrap();
        assert!(form.passed(), "{form}");
    }
}

#[test]
fn perturbations_are_detected() {
    let m = plane();
    let c = tangent_lift(&sample_connection(5, &m));
    let x = ScalarFn::var(&m, 0);

    let mut bad = c.clone();
    bad.comps
        .f
        .set(&[0, 1, 0, 1], bad.comps.f.get(&[0, 1, 0, 1]) + &x);
    let rep = check_im_connection(&bad).unwrap();
    assert!(!rep.passes("lie_nablaA") && !rep.passes("F_bracket"));
    assert!(rep.passes("bracket_formula"));
    assert!(matches!(
        derived_identities_check(&bad),
        Err(ImError::Precondition(_))
    ));

    let mut bad = c.clone();
    bad.comps
        .l
        .set(&[1, 0, 0], bad.comps.l.get(&[1, 0, 0]) + &ScalarFn::one(&m));
    let rep = check_im_connection(&bad).unwrap();
    assert!(!rep.passes("bracket_formula"));
    let sample = &rep.equation("bracket_formula").unwrap().samples[0];
    assert!(sample.slots.starts_with("a="));

    let mut bad = c.clone();
    bad.comps.gamma_m = bad
        .comps
        .gamma_m
        .add_tensor(&CompArray::from_fn(&[2, 2, 2], |ix| {
            if ix == [0, 0, 1] {
                x.clone()
            } else {
                ScalarFn::zero(&m)
            }
        }));
    let rep = check_im_connection(&bad).unwrap();
    // ∇ᴹ enters only through the Leibniz extension of 𝓕.
    assert!(rep.passes("bracket_formula"));
    assert!(!rep.passes("lie_nablaA"));
    let der = derived_identities_unchecked(&bad, 2);
    assert!(!der.passes("anchor_parallel"));
}

#[test]
fn checker_requires_an_algebroid() {
    let m = Chart::from_names("M", &["x"]);
    let bad = AlgebroidData::new(
        &m,
        2,
        vec![vec![ScalarFn::one(&m)], vec![ScalarFn::var(&m, 0)]],
        vec![ScalarFn::zero(&m); 8],
    )
    .unwrap();
    assert!(matches!(
        check_im_connection(&IMConnComponents::zero(&bad)),
        Err(ImError::Precondition(_))
    ));
}

#[test]
fn fiberwise_linear_round_trip() {
    let m = plane();
    let c = tangent_lift(&sample_connection(7, &m)).comps;
    let nabla = fiberwise_linear_from_components(&c);
    assert_eq!(nabla.base().vars(), ["x", "y", "w1", "w2"]);
    let back = components_from_fiberwise_linear(&nabla, &m, 2).unwrap();
    assert_eq!(back, c);

    let mut g = rng(8);
    let m1 = Chart::from_names("M", &["x"]);
    let c = ConnComponents::new(
        CompArray::from_fn(&[2, 1, 1, 2], |_| random_poly(&mut g, &m1, 2, 0.6)),
        random_connection(&mut g, &m1, 2, 2, 0.6),
        random_connection(&mut g, &m1, 1, 2, 0.6),
        CompArray::from_fn(&[2, 1, 2], |_| random_poly(&mut g, &m1, 2, 0.6)),
    )
    .unwrap();
    assert_eq!(
        components_from_fiberwise_linear(&fiberwise_linear_from_components(&c), &m1, 2).unwrap(),
        c
    );
}

#[test]
fn non_linear_connection_is_rejected() {
    let m = plane();
    let c = ConnComponents::zero(&m, 2);
    let nabla = fiberwise_linear_from_components(&c);
    let chart = nabla.base().clone();
    let w1 = ScalarFn::var(&chart, 2);
    let mut gamma = nabla.gamma().to_vec();
    let n = 4;
    // ∇_{∂x}∂y acquires a base component of degree one in w.
    gamma[(0 * n + 1) * n] = w1.clone();
    let bent = ConnectionData::new(&chart, n, gamma.clone()).unwrap();
    assert!(matches!(
        components_from_fiberwise_linear(&bent, &m, 2),
        Err(ImError::NotFiberwiseLinear(_))
    ));
    gamma[(0 * n + 1) * n] = ScalarFn::zero(&chart);
    // ∇_{∂w1}∂w2 must vanish.
    gamma[(2 * n + 3) * n + 2] = ScalarFn::one(&chart);
    let bent = ConnectionData::new(&chart, n, gamma).unwrap();
    assert!(matches!(
        components_from_fiberwise_linear(&bent, &m, 2),
        Err(ImError::NotFiberwiseLinear(_))
    ));
}

#[test]
fn torsion_components_match_torsion_of_lift() {
    let m = plane();
    let c = tangent_lift(&sample_connection(9, &m));
    let nabla = fiberwise_linear_from_components(&c.comps);
    let from_tensor = form_components_from_linear(&torsion_of(&nabla).unwrap(), &m, 2).unwrap();
    assert_eq!(from_tensor, im_torsion(&c).unwrap().comps);
}

#[test]
fn spray_route_agrees_with_equations() {
    let m = Chart::from_names("M", &["x"]);
    let nab = ConnectionData::from_fn(&m, 1, |_, _, _| ScalarFn::parse(&m, "x^2 - 1").unwrap());
    let good = tangent_lift(&nab);
    let x = spray_crosscheck(&good).unwrap();
    assert!(
        x.bool_equations && x.bool_spray_route && x.agree,
        "{}\n{}\n{}",
        x.equations,
        x.torsion_form,
        x.spray.report
    );

    let mut bad = good.clone();
    bad.comps.f.set(
        &[0, 0, 0, 0],
        bad.comps.f.get(&[0, 0, 0, 0]) + &ScalarFn::var(&m, 0),
    );
    let x = spray_crosscheck(&bad).unwrap();
    assert!(!x.bool_equations && !x.bool_spray_route && x.agree);
}

#[test]
fn jet_degree_three_confirms_degree_two() {
    let m = Chart::from_names("M", &["x"]);
    let nab = ConnectionData::from_fn(&m, 1, |_, _, _| ScalarFn::parse(&m, "x^3 + 2*x").unwrap());
    let c = tangent_lift(&nab);
    assert!(check_im_connection_at(&c, 2).unwrap().passed());
    assert!(check_im_connection_at(&c, 3).unwrap().passed());
    let mut bad = c.clone();
    bad.comps.l.set(&[0, 0, 0], ScalarFn::var(&m, 0));
    assert!(!check_im_connection_at(&bad, 2).unwrap().passed());
    assert!(!check_im_connection_at(&bad, 3).unwrap().passed());
}

#[test]
fn lie_tensor_matches_definition_on_torsion() {
    // L_X T computed through the connection Lie derivative and through the tensor formula.
    let m = plane();
    let nab = sample_connection(13, &m);
    let x = VectorField::new(
        &m,
        vec![
            ScalarFn::parse(&m, "x*y").unwrap(),
            ScalarFn::parse(&m, "y + 1").unwrap(),
        ],
    );
    let lie_conn = lie_derivative_connection(&x, &nab).unwrap();
    let lhs = lie_tensor21(&x, &torsion_of(&nab).unwrap());
    for mu in 0..2 {
        for nu in 0..2 {
            for k in 0..2 {
                assert_eq!(
                    lhs.get(&[mu, nu, k]),
                    &(lie_conn.get(&[mu, nu, k]) - lie_conn.get(&[nu, mu, k]))
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]
    #[test]
    fn im_connections_form_an_affine_space(s1 in 0u64..10_000, s2 in 0u64..10_000, t in -3i64..=3) {
        let m = Chart::from_names("M", &["x"]);
        let c1 = tangent_lift(&sample_connection(s1, &m));
        let c2 = tangent_lift(&sample_connection(s2, &m));
        let mix = IMConnComponents::new(c1.algebroid.clone(), c1.comps.affine(&c2.comps, &Rat::new(t, 2))).unwrap();
        prop_assert!(check_im_connection(&mix).unwrap().passed());
        let mut g = rng(s1 ^ s2);
        let mut off = mix.clone();
        off.comps.f.set(&[0, 0, 0, 0], off.comps.f.get(&[0, 0, 0, 0]) + &ScalarFn::constant(&m, small_rat(&mut g)));
        prop_assert!(!check_im_connection(&off).unwrap().passed());
    }
}

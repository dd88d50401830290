use super::*;
use crate::corpus::{random_connection, random_poly, rng};
use crate::symkernel::{Chart, ChartRef, PolyMap, Rat, ScalarFn};
use proptest::prelude::*;

fn r2() -> ChartRef {
    Chart::from_names("M", &["x", "y"])
}

fn parse(c: &ChartRef, s: &str) -> ScalarFn {
    ScalarFn::parse(c, s).unwrap()
}

/// Connection on `chart` given as `(μ, b, c, text)` entries.
fn conn(chart: &ChartRef, entries: &[(usize, usize, usize, &str)]) -> ConnectionData {
    ConnectionData::from_fn(chart, chart.dim(), |mu, b, c| {
        entries
            .iter()
            .find(|e| (e.0, e.1, e.2) == (mu, b, c))
            .map(|e| parse(chart, e.3))
            .unwrap_or_else(|| ScalarFn::zero(chart))
    })
}

/// `ℝ² ×_ℝ ℝ²` for the projection `(p, q) ↦ p`.
fn submersion_square() -> FiberedChart {
    let m = Chart::from_names("M", &["p", "q"]);
    let b = Chart::from_names("B", &["p"]);
    let p = Chart::from_names("P", &["p", "q1", "q2"]);
    let prod = Chart::product(&m, &m);
    let v = |c: &ChartRef, i| ScalarFn::var(c, i);
    let embed = PolyMap::new(&p, &prod, vec![v(&p, 0), v(&p, 1), v(&p, 0), v(&p, 2)]).unwrap();
    let retract = PolyMap::select(&prod, &p, &[0, 1, 3]);
    let pi = PolyMap::select(&m, &b, &[0]);
    let sec = PolyMap::new(&b, &m, vec![v(&b, 0), ScalarFn::zero(&b)]).unwrap();
    FiberedChart::new(
        &p,
        &m,
        &m,
        &b,
        embed,
        retract,
        pi.clone(),
        pi,
        sec.clone(),
        sec,
    )
    .unwrap()
}

#[test]
fn torsion_examples() {
    let c = Chart::from_names("R3", &["x", "y", "z"]);
    assert!(torsion_of(&ConnectionData::flat_tangent(&c))
        .unwrap()
        .is_zero());
    let nab = conn(&c, &[(0, 1, 2, "1")]);
    let t = torsion_of(&nab).unwrap();
    assert!(t.is_skew());
    assert_eq!(t.get(&[0, 1, 2]), &ScalarFn::one(&c));
    assert_eq!(t.get(&[1, 0, 2]), &ScalarFn::int(&c, -1));
    assert!(torsion_of(&ConnectionData::zero(&c, 2)).is_err());
}

#[test]
fn flat_curvature_and_product_block_sum() {
    let m = r2();
    assert!(curvature_of(&ConnectionData::flat_tangent(&m)).is_zero());
    let mut g = rng(11);
    let a = Chart::from_names("A", &["u"]);
    let na = random_connection(&mut g, &a, 1, 2, 0.7);
    let nm = random_connection(&mut g, &m, 2, 1, 0.6);
    let prod = product_connection(&na, &nm).unwrap();
    let rp = curvature_of(&prod);
    let ra = curvature_of(&na);
    let rm = curvature_of(&nm);
    let pc = prod.base().clone();
    for ix in 0..rp.data().len() {
        let i = rp.unravel(ix);
        let expect = if i.iter().all(|&k| k < 1) {
            ra.get(&i).embed(&pc, &[0])
        } else if i.iter().all(|&k| k >= 1) {
            let j: Vec<usize> = i.iter().map(|k| k - 1).collect();
            rm.get(&j).embed(&pc, &[1, 2])
        } else {
            ScalarFn::zero(&pc)
        };
        assert_eq!(rp.get(&i), &expect, "index {i:?}");
    }
}

#[test]
fn spray_of_flat_connection() {
    let m = r2();
    let z = geodesic_spray(&ConnectionData::flat_tangent(&m)).unwrap();
    let tm = z.chart().clone();
    assert_eq!(z.comp(0), &ScalarFn::var(&tm, 2));
    assert_eq!(z.comp(1), &ScalarFn::var(&tm, 3));
    assert!(z.comp(2).is_zero() && z.comp(3).is_zero());
}

#[test]
fn spray_fiber_scaling_degree() {
    let m = r2();
    let mut g = rng(3);
    let nab = random_connection(&mut g, &m, 2, 2, 0.5);
    let z = geodesic_spray(&nab).unwrap();
    let t = Rat::int(3);
    let fiber = [2, 3];
    for i in 0..2 {
        assert_eq!(z.comp(i).scale_vars(&fiber, &t), z.comp(i).scale(&t));
        assert_eq!(
            z.comp(2 + i).scale_vars(&fiber, &t),
            z.comp(2 + i).scale(&t.pow(2))
        );
    }
}

#[test]
fn spray_bracket_identity_on_coordinate_fields() {
    let m = Chart::from_names("M", &["x", "y", "z"]);
    let mut g = rng(5);
    let nab = random_connection(&mut g, &m, 3, 1, 0.6);
    let z = geodesic_spray(&nab).unwrap();
    let tm = z.chart().clone();
    for a in 0..3 {
        for b in 0..3 {
            let xa = VectorField::coordinate(&m, a);
            let xb = VectorField::coordinate(&m, b);
            let lhs = z
                .bracket(&vertical_lift(&xa, &tm))
                .bracket(&vertical_lift(&xb, &tm));
            let sym = nab.covariant(&xa, &xb).add(&nab.covariant(&xb, &xa));
            let rhs = vertical_lift(&sym, &tm).scale(&Rat::int(-1));
            assert_eq!(lhs, rhs, "pair ({a},{b})");
        }
    }
}

#[test]
fn related_tensor_examples() {
    let m = r2();
    let b = Chart::from_names("B", &["u"]);
    let f = PolyMap::new(&m, &b, vec![parse(&m, "x^2 + y")]).unwrap();
    let r = check_related_tensors(
        &TensorField::zero(&m, 2, 1),
        &TensorField::zero(&b, 2, 1),
        &f,
    )
    .unwrap();
    assert!(r.related);
    let r =
        check_related_tensors(&TensorField::identity(&m), &TensorField::identity(&b), &f).unwrap();
    assert!(r.related);
    assert!(
        check_related_tensors(&TensorField::identity(&m), &TensorField::zero(&b, 2, 1), &f)
            .is_err()
    );
}

#[test]
fn projectable_torsion_is_related_to_projection() {
    let fib = submersion_square();
    let m = fib.left.clone();
    let nab = conn(
        &m,
        &[
            (0, 0, 0, "p^2"),
            (0, 1, 1, "q + p"),
            (1, 0, 1, "p*q"),
            (1, 1, 0, "0"),
            (0, 0, 1, "q^2"),
        ],
    );
    let nb = project_connection(&nab, &fib.sigma, &fib.sigma_section);
    let rel = check_related_connections(&nab, &nb, &fib.sigma).unwrap();
    assert!(rel.related && rel.agree);
    let r = check_related_tensors(
        &torsion_of(&nab).unwrap(),
        &torsion_of(&nb).unwrap(),
        &fib.sigma,
    )
    .unwrap();
    assert!(r.related);
}

#[test]
fn related_connection_examples() {
    let m = r2();
    let n = Chart::from_names("N", &["u", "v", "w"]);
    let lin = PolyMap::new(
        &m,
        &n,
        vec![parse(&m, "x + 2*y"), parse(&m, "y"), parse(&m, "3*x")],
    )
    .unwrap();
    let rel = check_related_connections(
        &ConnectionData::flat_tangent(&m),
        &ConnectionData::flat_tangent(&n),
        &lin,
    )
    .unwrap();
    assert!(rel.related && rel.route_spray && rel.agree);

    let mut g = rng(7);
    let a = Chart::from_names("A", &["s"]);
    let na = random_connection(&mut g, &a, 1, 2, 0.8);
    let nm = random_connection(&mut g, &m, 2, 1, 0.8);
    let prod = product_connection(&na, &nm).unwrap();
    let pc = prod.base().clone();
    let p1 = PolyMap::select(&pc, &a, &[0]);
    let p2 = PolyMap::select(&pc, &m, &[1, 2]);
    for (f, target) in [(&p1, &na), (&p2, &nm)] {
        let rel = check_related_connections(&prod, target, f).unwrap();
        assert!(rel.related && rel.agree);
    }

    let fib = submersion_square();
    let mm = fib.left.clone();
    let bad = conn(&mm, &[(0, 0, 0, "q")]);
    let nb = project_connection(&bad, &fib.sigma, &fib.sigma_section);
    let rel = check_related_connections(&bad, &nb, &fib.sigma).unwrap();
    assert!(!rel.related && !rel.defect.is_zero() && rel.agree);
}

#[test]
fn restriction_to_submersion_fiber_product() {
    let fib = submersion_square();
    let m = fib.left.clone();
    let flat = ConnectionData::flat_tangent(&m);
    let r = restrict_to_fibered(&flat, &flat, &fib).unwrap();
    assert!(r.is_flat_coefficients());
    let proj = conn(
        &m,
        &[
            (0, 0, 0, "p"),
            (1, 1, 1, "q*p"),
            (0, 1, 1, "q^2"),
            (1, 0, 1, "1"),
        ],
    );
    let r = restrict_to_fibered(&proj, &proj, &fib).unwrap();
    let prod = product_connection(&proj, &proj).unwrap();
    let prod = ConnectionData::new(
        &fib.product,
        4,
        prod.gamma()
            .iter()
            .map(|g| g.rechart(&fib.product))
            .collect(),
    )
    .unwrap();
    assert!(
        check_related_connections(&r, &prod, &fib.embed)
            .unwrap()
            .related
    );
    let bad = conn(&m, &[(1, 1, 0, "q")]);
    assert!(matches!(
        restrict_to_fibered(&bad, &bad, &fib),
        Err(GeomError::Hypothesis(_))
    ));
}

#[test]
fn restricted_tensor_and_vector_field() {
    let fib = submersion_square();
    let m = fib.left.clone();
    let nab = conn(&m, &[(0, 1, 1, "q"), (1, 0, 1, "p")]);
    let t = torsion_of(&nab).unwrap();
    let tr = restrict_tensor(&t, &t, &fib);
    // Torsion of the restricted connection is the restricted torsion.
    let r = restrict_to_fibered(&nab, &nab, &fib).unwrap();
    assert_eq!(torsion_of(&r).unwrap().comps(), tr.comps());
    let x = VectorField::new(&m, vec![parse(&m, "p"), parse(&m, "q^2")]);
    let y = VectorField::new(&m, vec![parse(&m, "p"), parse(&m, "1")]);
    let v = restrict_vector_field(&x, &y, &fib);
    let p = fib.chart.clone();
    assert_eq!(
        v.comps(),
        &[parse(&p, "p"), parse(&p, "q1^2"), parse(&p, "1")]
    );
}

#[test]
fn lie_derivative_examples() {
    let m = r2();
    let mut g = rng(9);
    let nab = random_connection(&mut g, &m, 2, 2, 0.6);
    assert!(lie_derivative_connection(&VectorField::zero(&m), &nab)
        .unwrap()
        .is_zero());
    let flat = ConnectionData::flat_tangent(&m);
    let x = VectorField::new(&m, vec![parse(&m, "2*x - y + 1"), parse(&m, "3*y")]);
    assert!(lie_derivative_connection(&x, &flat).unwrap().is_zero());
}

#[test]
fn lie_derivative_is_tensorial_on_jets() {
    let m = r2();
    let mut g = rng(13);
    let nab = random_connection(&mut g, &m, 2, 1, 0.6);
    let x = VectorField::new(
        &m,
        vec![
            random_poly(&mut g, &m, 2, 0.5),
            random_poly(&mut g, &m, 2, 0.5),
        ],
    );
    let l = lie_derivative_connection(&x, &nab).unwrap();
    for f in crate::symkernel::monomials_up_to(2, 2) {
        let f = ScalarFn::monomial(&m, &f, Rat::one());
        for a in 0..2 {
            for b in 0..2 {
                let y = VectorField::coordinate(&m, a).mul_fn(&f);
                let z = VectorField::coordinate(&m, b);
                let direct = lie_derivative_connection_on(&x, &nab, &y, &z.mul_fn(&f), None);
                let expect = l.apply2(&y, &z.mul_fn(&f));
                assert_eq!(direct, expect);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn symmetric_part_is_torsion_free(seed in 0u64..10_000) {
        let c = Chart::from_names("M", &["x", "y", "z"]);
        let mut g = rng(seed);
        let nab = random_connection(&mut g, &c, 3, 2, 0.4);
        prop_assert!(torsion_of(&symmetric_part(&nab).unwrap()).unwrap().is_zero());
        let r = curvature_of(&nab);
        for mu in 0..3 {
            for nu in 0..3 {
                for b in 0..3 {
                    for cc in 0..3 {
                        prop_assert_eq!(r.get(&[mu, nu, b, cc]), &-r.get(&[nu, mu, b, cc]));
                    }
                }
            }
        }
    }

    #[test]
    fn two_routes_agree_on_random_maps(seed in 0u64..10_000) {
        let m = r2();
        let b = Chart::from_names("B", &["u"]);
        let mut g = rng(seed);
        let f = PolyMap::new(&m, &b, vec![random_poly(&mut g, &m, 2, 0.5)]).unwrap();
        let nm = random_connection(&mut g, &m, 2, 1, 0.3);
        let nb = random_connection(&mut g, &b, 1, 1, 0.3);
        let rel = check_related_connections(&nm, &nb, &f).unwrap();
        prop_assert!(rel.agree);
    }
}

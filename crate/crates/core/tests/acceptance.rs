//! Acceptance suite: one PASS/FAIL line per criterion, plus end-to-end CLI checks.

use std::io::Write;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use imconnect::algebroid::{check_algebroid, AlgebroidData};
use imconnect::constructors::{
    check_flat_a_im_at, covariant_exterior_derivative, flat_anchor_construct, heisenberg_group,
    heisenberg_structure, heisenberg_toy, parse_r_matrix, secondary_to_plain,
    transitive_abelian_im, vertical_bundle_im, ConstructError, CoordSubmersion,
    SecondaryComponents, TransitiveAbelianData,
};
use imconnect::corpus::{
    random_array, random_connection, random_poly, random_projectable_array,
    random_projectable_connection, rng,
};
use imconnect::geometry::{torsion_of, CompArray, ConnectionData};
use imconnect::groupoid::{
    atiyah_cocycle, check_multiplicative, connection_difference, deformation_differential,
    lie_functor, s_projection, solve_atiyah_coboundary, space, Builtin, CoboundarySolution,
    CoordGroupoid, DefCochain,
};
use imconnect::imconn::{
    check_im_connection_at, components_from_fiberwise_linear, fiberwise_linear_from_components,
    form_components_from_linear, im_torsion, spray_crosscheck_at, ConnComponents, IMConnComponents,
};
use imconnect::symkernel::{Chart, ChartRef, Rat, ScalarFn};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn plane() -> ChartRef {
    Chart::from_names("M", &["x", "y"])
}

fn parse(chart: &ChartRef, s: &str) -> ScalarFn {
    ScalarFn::parse(chart, s).unwrap()
}

fn heis(r: &str) -> imconnect::constructors::HeisenbergToy {
    heisenberg_toy(parse_r_matrix(r).unwrap()).unwrap()
}

fn area_form(m: &ChartRef, k: usize, coef: ScalarFn) -> CompArray {
    CompArray::from_fn(&[m.dim(), m.dim(), k], |ix| match (ix[0], ix[1], ix[2]) {
        (0, 1, 0) => coef.clone(),
        (1, 0, 0) => -&coef,
        _ => ScalarFn::zero(m),
    })
}

fn bump(a: &mut CompArray, ix: &[usize], by: &ScalarFn) {
    let v = a.get(ix) + by;
    a.set(ix, v);
}

const EQUATIONS: [&str; 4] = ["bracket_formula", "lie_nablaA", "F_bracket", "l_bracket"];

fn criterion_1() -> Verdict {
    let toy = heis("e3*e2^*");
    let rep = check_im_connection_at(&toy.im, 2).unwrap();
    let nonzero: Vec<&str> = EQUATIONS
        .iter()
        .copied()
        .filter(|e| !rep.passes(e))
        .collect();
    let all_four_zero = nonzero.is_empty() && rep.equations.len() == 4;
    let identity = matches!(
        heisenberg_toy(parse_r_matrix("id").unwrap()),
        Err(ConstructError::Condition { ref condition, .. }) if condition == "[g,g] ⊆ ker r"
    );
    let central = check_im_connection_at(&heis("e1*e2^*").im, 2)
        .unwrap()
        .passed();
    let detail = format!(
        "r = e3 (x) e2^*: nonzero defects {:?}, anchor not parallel at {:?}; r = id rejected by [g,g] in ker r: {identity}; \
         central-image r = e1 (x) e2^* has all four defects zero: {central}",
        nonzero, toy.anchor_parallel_violations
    );
    verdict(all_four_zero && identity, detail)
}

/// `[[e_i, e_j], e_k]` components from the structure constants.
fn double_bracket(c: &[Rat]) -> Vec<Rat> {
    let mut out = vec![Rat::zero(); 81];
    for i in 0..3 {
        for j in 0..3 {
            for l in 0..3 {
                for k in 0..3 {
                    for m in 0..3 {
                        let v = c[(i * 3 + j) * 3 + l].clone() * c[(l * 3 + k) * 3 + m].clone();
                        out[((i * 3 + j) * 3 + k) * 3 + m] += v;
                    }
                }
            }
        }
    }
    out
}

fn criterion_2() -> Verdict {
    let h = heisenberg_group();
    let d = h.d_vec();
    let b = h.b_vec();
    let torsion = torsion_of(&d).unwrap();
    let t_is_minus_b = (0..27).all(|o| {
        let ix = [o / 9, (o / 3) % 3, o % 3];
        torsion.get(&ix) == &-b.get(&ix)
    });
    let shifted = |t: Rat| {
        ConnectionData::from_fn(&h.chart, 3, |mu, nu, lam| {
            d.g(mu, nu, lam) + &b.get(&[mu, nu, lam]).scale(&t)
        })
    };
    let expected = double_bracket(&heisenberg_structure());
    let matches = |nabla: &ConnectionData, factor: Rat| -> usize {
        let r = h.curvature_in_frame(nabla);
        (0..27)
            .filter(|t| {
                (0..3).all(|m| {
                    r.data()[t * 3 + m]
                        == ScalarFn::constant(
                            &h.chart,
                            expected[t * 3 + m].clone() * factor.clone(),
                        )
                })
            })
            .count()
    };
    let quarter = -Rat::new(1, 4);
    let literal = matches(&shifted(-Rat::new(1, 2)), quarter.clone());
    let literal_three_quarters = matches(&shifted(-Rat::new(1, 2)), Rat::new(3, 4));
    let sym = shifted(Rat::new(1, 2));
    let sym_is_torsion_free = torsion_of(&sym).unwrap().is_zero();
    let symmetric = matches(&sym, quarter);
    let vanishing = (0..81).filter(|i| expected[*i] == Rat::zero()).count();
    // The frame curvature is not identically zero: a coordinate-dependent probe is detected.
    let probe = ConnectionData::from_fn(&h.chart, 3, |mu, nu, lam| {
        let base = d.g(mu, nu, lam).clone();
        if (mu, nu, lam) == (1, 1, 2) {
            &base + &ScalarFn::var(&h.chart, 0)
        } else {
            base
        }
    });
    let probe_detected = !h.curvature_in_frame(&probe).is_zero();
    let detail = format!(
        "torsion of D = -B: {t_is_minus_b}; D - B/2 matches -1/4[[v,w],z] on {literal}/27 triples; \
         [[v,w],z] vanishes in {vanishing}/81 components (2-step nilpotent), so D - B/2 also matches +3/4[[v,w],z] \
         on {literal_three_quarters}/27 and the torsion-free D + B/2 ({sym_is_torsion_free}) on {symmetric}/27; \
         nonzero probe curvature detected: {probe_detected}"
    );
    verdict(literal == 27 && probe_detected, detail)
}

struct ImInstance {
    name: String,
    im: IMConnComponents,
    perturbed: bool,
}

fn vertical_instances() -> Vec<(String, IMConnComponents)> {
    let mut out = Vec::new();
    for (dim, seed) in [(2, 1u64), (2, 2), (3, 3)] {
        let sub = CoordSubmersion::new(&space("M", dim), 1).unwrap();
        let nm = random_projectable_connection(&mut rng(seed), &sub.total, 1, 1, 0.5);
        out.push((
            format!("vertical:{dim}:{seed}"),
            vertical_bundle_im(&sub, &nm).unwrap(),
        ));
    }
    out
}

fn transitive_instance(seed: u64) -> IMConnComponents {
    let m = plane();
    let mut g = rng(seed);
    let nm = random_connection(&mut g, &m, 2, 1, 0.5);
    let theta = random_array(&mut g, &m, &[2, 2, 1], 1, 0.6);
    let c = area_form(&m, 1, random_poly(&mut g, &m, 1, 0.6));
    let d = TransitiveAbelianData::new(ConnectionData::zero(&m, 1), c, nm, theta).unwrap();
    transitive_abelian_im(&d).unwrap().1
}

fn im_corpus() -> Vec<ImInstance> {
    let mut out: Vec<ImInstance> = Vec::new();
    let mut push = |name: String, im: IMConnComponents, perturbed: bool| {
        out.push(ImInstance {
            name,
            im,
            perturbed,
        })
    };
    let verticals = vertical_instances();
    for (n, im) in &verticals {
        push(n.clone(), im.clone(), false);
    }
    for seed in [11, 12] {
        push(
            format!("transitive:{seed}"),
            transitive_instance(seed),
            false,
        );
    }
    for r in ["e1*e2^*", "e1*e2^* + 2*e1*e3^*", "e3*e2^*"] {
        push(format!("heisenberg:{r}"), heis(r).im, false);
    }

    let mut v = verticals[0].1.clone();
    let x = ScalarFn::var(v.algebroid.base(), 0);
    bump(&mut v.comps.f, &[0, 0, 1, 0], &x);
    push("perturbed vertical F".into(), v, true);

    let mut t = transitive_instance(11);
    let y = ScalarFn::var(t.algebroid.base(), 1);
    bump(&mut t.comps.l, &[2, 0, 0], &y);
    push("perturbed transitive l".into(), t, true);

    let mut h = heis("e1*e2^*").im;
    let a = ScalarFn::var(h.algebroid.base(), 0);
    let mut ga = h.comps.gamma_a.gamma().to_vec();
    ga[(1 * 3 + 2) * 3 + 1] += &a;
    h.comps.gamma_a = ConnectionData::new(h.algebroid.base(), 3, ga).unwrap();
    push("perturbed heisenberg gammaA".into(), h, true);
    out
}

fn criterion_3() -> Verdict {
    let corpus = im_corpus();
    let mut bad = Vec::new();
    let (mut positives, mut negatives, mut perturbed_negatives) = (0, 0, 0);
    for inst in &corpus {
        let x = spray_crosscheck_at(&inst.im, 2).unwrap();
        if x.bool_equations != x.bool_spray_route {
            bad.push(inst.name.clone());
        }
        if x.bool_equations {
            positives += 1;
        } else {
            negatives += 1;
            perturbed_negatives += inst.perturbed as usize;
        }
    }
    let detail = format!(
        "{} instances ({positives} IM, {negatives} not IM, {perturbed_negatives} perturbed negatives); disagreements: {bad:?}",
        corpus.len()
    );
    verdict(
        bad.is_empty() && corpus.len() >= 10 && perturbed_negatives >= 3,
        detail,
    )
}

fn flat_a_corpus() -> Vec<(String, SecondaryComponents, AlgebroidData)> {
    let mut out = Vec::new();
    for r in [
        "e1*e2^*",
        "e1*e2^* + 2*e1*e3^*",
        "-1/2*e1*e3^*",
        "e3*e2^*",
        "e2*e3^*",
    ] {
        let toy = heis(r);
        out.push((format!("heisenberg:{r}"), toy.secondary, toy.algebroid));
    }
    let m = plane();
    for (name, rows) in [
        ("constant anchor", [["1", "0"], ["2", "0"]]),
        ("rank-one anchor", [["1", "1"], ["0", "0"]]),
    ] {
        let anchor = rows
            .iter()
            .map(|r| r.iter().map(|s| parse(&m, s)).collect())
            .collect();
        let (a, sec) = flat_anchor_construct(
            &ConnectionData::zero(&m, 2),
            &ConnectionData::flat_tangent(&m),
            anchor,
        )
        .unwrap();
        out.push((name.to_string(), sec.clone(), a.clone()));
        let mut skew = sec;
        skew.fmap.set(&[1, 0, 0, 1], ScalarFn::one(&m));
        out.push((format!("{name}, F not orthogonal"), skew, a));
    }
    out
}

fn criterion_4() -> Verdict {
    let corpus = flat_a_corpus();
    let mut bad = Vec::new();
    let (mut pos, mut neg) = (0, 0);
    for (name, sec, a) in &corpus {
        let flat = check_flat_a_im_at(sec, a, 2).unwrap();
        let plain = IMConnComponents::new(a.clone(), secondary_to_plain(sec)).unwrap();
        let im = check_im_connection_at(&plain, 2).unwrap().passed();
        if flat.route_conditions != im {
            bad.push(name.clone());
        }
        if im {
            pos += 1;
        } else {
            neg += 1;
        }
    }
    let detail = format!(
        "{} instances ({pos} positive, {neg} negative); disagreements: {bad:?}",
        corpus.len()
    );
    verdict(
        bad.is_empty() && corpus.len() >= 6 && pos > 0 && neg > 0,
        detail,
    )
}

fn criterion_5() -> Verdict {
    let m = plane();
    let mut failures = Vec::new();
    let draws = 6;
    for seed in 0..draws {
        let mut g = rng(500 + seed);
        let nm = random_connection(&mut g, &m, 2, 1, 0.6);
        let theta = random_array(&mut g, &m, &[2, 2, 1], 1, 0.7);
        let c = area_form(&m, 1, random_poly(&mut g, &m, 1, 0.6));
        let d = TransitiveAbelianData::new(ConnectionData::zero(&m, 1), c, nm, theta).unwrap();
        let (alg, im) = transitive_abelian_im(&d).unwrap();
        if !check_im_connection_at(&im, 2).unwrap().passed() || !check_algebroid(&alg).passed() {
            failures.push(seed);
        }
    }
    // Jacobi against d^∇C on ℝ³: one closed and one non-closed isotropy form.
    let p = Chart::from_names("P", &["x", "y", "z"]);
    let nk = ConnectionData::zero(&p, 1);
    let nm = ConnectionData::flat_tangent(&p);
    let theta = CompArray::zeros(&p, &[3, 3, 1]);
    let mut mismatch = Vec::new();
    let mut control_jacobi_fails = false;
    for (name, coef) in [("closed x dx^dy", "x"), ("non-closed z dx^dy", "z")] {
        let c = area_form(&p, 1, parse(&p, coef));
        let closed = covariant_exterior_derivative(&nk, &c).is_zero();
        let d = TransitiveAbelianData::unchecked(nk.clone(), c.clone(), nm.clone(), theta.clone())
            .unwrap();
        let jacobi = check_algebroid(&d.algebroid()).passes("Jacobi identity");
        if jacobi != closed {
            mismatch.push(name);
        }
        if !closed {
            control_jacobi_fails = !jacobi;
            let rejected = matches!(
                TransitiveAbelianData::new(nk.clone(), c, nm.clone(), theta.clone()),
                Err(ConstructError::Condition { ref condition, .. }) if condition.contains("d^{∇ᴷ}C")
            );
            control_jacobi_fails &= rejected;
        }
    }
    let detail = format!(
        "{draws} random draws, failing: {failures:?}; Jacobi vs closedness mismatches: {mismatch:?}; control fails Jacobi and is rejected: {control_jacobi_fails}"
    );
    verdict(
        failures.is_empty() && mismatch.is_empty() && control_jacobi_fails,
        detail,
    )
}

/// `ρ ∘ U = dt|_{u(x)} ∘ U` from the jacobian of `t` at the units.
fn anchor_of_minus_one(g: &CoordGroupoid, u: &CompArray) -> CompArray {
    let (m, n) = (g.objects.dim(), g.arrows.dim());
    let jt = g.t.jacobian();
    CompArray::from_fn(&[m, m, m], |ix| {
        let mut acc = ScalarFn::zero(&g.objects);
        for c in 0..n {
            let j = g.u.pull(&jt[ix[2]][c]);
            acc += &(&j * u.get(&[ix[0], ix[1], c]));
        }
        acc
    })
}

fn criterion_6() -> Verdict {
    let g = Builtin::parse("pair:2").unwrap().build().unwrap();
    let (m, n) = (g.objects.dim(), g.arrows.dim());
    let a = g.isotropy_coords().to_vec();
    let (mut dd_minus_one, mut dd_zero, mut rho_ok, mut nontrivial) = (0, 0, 0, 0);
    let cochains = 6;
    for seed in 0..cochains {
        let vals = random_array(&mut rng(600 + seed), &g.objects, &[m, m, n], 2, 0.5);
        let comps = CompArray::from_fn(&[m, m, n], |ix| {
            if a.contains(&ix[2]) {
                vals.get(ix).clone()
            } else {
                ScalarFn::zero(&g.objects)
            }
        });
        let u = DefCochain::degree_minus_one(&g, comps.clone()).unwrap();
        let du = deformation_differential(&g, &u).unwrap();
        dd_minus_one += deformation_differential(&g, &du).unwrap().is_zero() as usize;
        rho_ok += (du.m_comps == anchor_of_minus_one(&g, &comps)) as usize;

        let arr =
            random_projectable_array(&mut rng(700 + seed), &g.arrows, g.s_selection(), 2, 0.4);
        let v = DefCochain::from_tensor(&g, arr).unwrap();
        let dv = deformation_differential(&g, &v).unwrap();
        nontrivial += (!du.is_zero() && !dv.is_zero()) as usize;
        dd_zero += deformation_differential(&g, &dv).unwrap().is_zero() as usize;
    }
    let detail = format!(
        "degree -1: dd = 0 on {dd_minus_one}/{cochains}, (dU)^M = rho U on {rho_ok}/{cochains}; degree 0: dd = 0 on {dd_zero}/{cochains}; nonzero first differentials {nontrivial}/{cochains}"
    );
    let c = cochains as usize;
    verdict(
        dd_minus_one == c && dd_zero == c && rho_ok == c && nontrivial == c,
        detail,
    )
}

fn criterion_7() -> Verdict {
    let g = Builtin::parse("pair:2").unwrap().build().unwrap();
    let good = g
        .restricted_product(&random_connection(&mut rng(70), &g.objects, 2, 1, 0.6))
        .unwrap();
    let conns: Vec<ConnectionData> = (0..4)
        .map(|s| {
            good.add_tensor(&random_projectable_array(
                &mut rng(71 + s),
                &g.arrows,
                g.s_selection(),
                1,
                0.4,
            ))
        })
        .collect();
    let mut cocycle = 0;
    for c in &conns[..3] {
        let at = atiyah_cocycle(&g, c).unwrap().cochain;
        cocycle += deformation_differential(&g, &at).unwrap().is_zero() as usize;
    }
    let mut coboundary = 0;
    for (c1, c2) in [
        (&conns[0], &conns[1]),
        (&conns[2], &conns[3]),
        (&conns[1], &good),
    ] {
        let lhs = atiyah_cocycle(&g, c1)
            .unwrap()
            .cochain
            .sub(&atiyah_cocycle(&g, c2).unwrap().cochain);
        let rhs =
            deformation_differential(&g, &connection_difference(&g, c1, c2).unwrap()).unwrap();
        coboundary += (lhs == rhs) as usize;
    }
    // Multiplicative instances across the built-in families.
    let mut vanish = Vec::new();
    let sub = Builtin::parse("submersion:2:1").unwrap().build().unwrap();
    let nm_sub = random_projectable_connection(&mut rng(77), &sub.objects, 1, 1, 0.6);
    let ab = Builtin::parse("abelian:2").unwrap().build().unwrap();
    for (name, grp, nabla) in [
        ("pair", &g, good.clone()),
        ("submersion", &sub, sub.restricted_product(&nm_sub).unwrap()),
        ("abelian", &ab, ConnectionData::flat_tangent(&ab.arrows)),
    ] {
        let multiplicative = check_multiplicative(grp, &nabla).unwrap().route_m;
        let zero = atiyah_cocycle(grp, &nabla).unwrap().cochain.is_zero();
        vanish.push((name, multiplicative && zero));
    }
    // Linear solve on the pair groupoid of ℝ.
    let p1 = Builtin::parse("pair:1").unwrap().build().unwrap();
    let start = ConnectionData::from_fn(&p1.arrows, 2, |a, b, c| {
        if (a, b, c) == (0, 0, 0) {
            parse(&p1.arrows, "x_s")
        } else {
            ScalarFn::zero(&p1.arrows)
        }
    });
    let start_mult = check_multiplicative(&p1, &start).unwrap().route_m;
    let solved = match solve_atiyah_coboundary(&p1, &start, 1).unwrap() {
        CoboundarySolution::Solved { corrected, .. } => {
            check_multiplicative(&p1, &corrected).unwrap().route_m
                && atiyah_cocycle(&p1, &corrected).unwrap().cochain.is_zero()
        }
        CoboundarySolution::Inconclusive { .. } => false,
    };
    let all_vanish = vanish.iter().all(|(_, v)| *v);
    let detail = format!(
        "cocycle on {cocycle}/3; difference identity on {coboundary}/3; vanishing on multiplicative {vanish:?}; \
         solve from non-multiplicative start ({}) yields multiplicative: {solved}",
        !start_mult
    );
    verdict(
        cocycle == 3 && coboundary == 3 && all_vanish && !start_mult && solved,
        detail,
    )
}

fn criterion_8() -> Verdict {
    let mut disagreements = Vec::new();
    let (mut pos, mut neg, mut total) = (0, 0, 0);
    for spec in ["pair:1", "pair:2", "submersion:2:1", "abelian:2"] {
        let g = Builtin::parse(spec).unwrap().build().unwrap();
        let n = g.arrows.dim();
        let mut conns = vec![ConnectionData::flat_tangent(&g.arrows)];
        if g.objects.dim() > 0 {
            let mut r = rng(80 + n as u64);
            let nm = if spec.starts_with("submersion") {
                random_projectable_connection(&mut r, &g.objects, 1, 1, 0.6)
            } else {
                random_connection(&mut r, &g.objects, g.objects.dim(), 1, 0.6)
            };
            let good = g.restricted_product(&nm).unwrap();
            let twist = random_projectable_array(
                &mut rng(90 + n as u64),
                &g.arrows,
                g.s_selection(),
                1,
                0.5,
            );
            conns.push(good.clone());
            conns.push(good.add_tensor(&twist));
        } else {
            conns.push(ConnectionData::from_fn(&g.arrows, n, |a, b, c| {
                if (a, b, c) == (0, 0, 0) {
                    ScalarFn::one(&g.arrows)
                } else {
                    ScalarFn::zero(&g.arrows)
                }
            }));
        }
        // Not s-projectable: Γ depends on a non-source coordinate along a base direction.
        let t = g.t_selection().to_vec();
        if let (Some(&ti), Some(&si)) = (
            t.iter().find(|i| !g.s_selection().contains(i)),
            g.s_selection().first(),
        ) {
            conns.push(ConnectionData::from_fn(&g.arrows, n, |a, b, c| {
                if (a, b, c) == (si, si, si) {
                    ScalarFn::var(&g.arrows, ti)
                } else {
                    ScalarFn::zero(&g.arrows)
                }
            }));
        }
        for (k, c) in conns.iter().enumerate() {
            let mc = check_multiplicative(&g, c).unwrap();
            total += 1;
            if !mc.agree || mc.route_m != mc.route_div || mc.route_m != mc.route_spray {
                disagreements.push(format!("{spec}#{k}"));
            }
            if mc.route_m {
                pos += 1;
            } else {
                neg += 1;
            }
        }
    }
    let detail = format!(
        "{total} instances ({pos} multiplicative, {neg} not); disagreements: {disagreements:?}"
    );
    verdict(disagreements.is_empty() && pos > 0 && neg > 0, detail)
}

fn criterion_9() -> Verdict {
    let g = Builtin::parse("submersion:2:1").unwrap().build().unwrap();
    let sub = CoordSubmersion::new(&g.objects, 1).unwrap();
    let mut mismatches = Vec::new();
    let seeds = [91u64, 92, 93];
    for seed in seeds {
        let nm = random_projectable_connection(&mut rng(seed), &sub.total, 1, 1, 0.6);
        let nabla = g.restricted_product(&nm).unwrap();
        assert!(check_multiplicative(&g, &nabla).unwrap().route_m);
        let projection = s_projection(&g, &nabla)
            .unwrap()
            .expect("multiplicative connections project");
        let lie = lie_functor(&g, &nabla).unwrap();
        let vb = vertical_bundle_im(&sub, &projection).unwrap();
        for (name, same) in [
            ("algebroid", lie.algebroid == vb.algebroid),
            ("F", lie.comps.f == vb.comps.f),
            ("gammaA", lie.comps.gamma_a == vb.comps.gamma_a),
            ("gammaM", lie.comps.gamma_m == vb.comps.gamma_m),
            ("l", lie.comps.l == vb.comps.l),
        ] {
            if !same {
                mismatches.push(format!("seed {seed}: {name}"));
            }
        }
    }
    verdict(
        mismatches.is_empty(),
        format!(
            "{} connections compared component by component; mismatches: {mismatches:?}",
            seeds.len()
        ),
    )
}

fn criterion_10() -> Verdict {
    let mut round_trip = 0;
    let mut torsion = 0;
    let tuples = 12;
    for seed in 0..tuples {
        let (m, r) = if seed % 3 == 2 {
            (Chart::from_names("M", &["x"]), 2)
        } else {
            (plane(), 1 + (seed as usize % 2))
        };
        let n = m.dim();
        let mut g = rng(1000 + seed);
        let comps = ConnComponents::new(
            random_array(&mut g, &m, &[r, n, n, r], 2, 0.5),
            random_connection(&mut g, &m, r, 2, 0.5),
            random_connection(&mut g, &m, n, 2, 0.5),
            random_array(&mut g, &m, &[r, n, r], 2, 0.5),
        )
        .unwrap();
        let nabla = fiberwise_linear_from_components(&comps);
        round_trip += (components_from_fiberwise_linear(&nabla, &m, r).unwrap() == comps) as usize;
        let from_tensor = form_components_from_linear(&torsion_of(&nabla).unwrap(), &m, r).unwrap();
        let im = IMConnComponents::new(AlgebroidData::zero(&m, r), comps).unwrap();
        torsion += (from_tensor == im_torsion(&im).unwrap().comps) as usize;
    }
    let t = tuples as usize;
    verdict(
        round_trip == t && torsion == t,
        format!("round trip exact on {round_trip}/{t}; torsion components match on {torsion}/{t}"),
    )
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_imconnect")
}

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("imconnect-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Status, facts and equation verdicts of every check in a CLI run.
fn cli_booleans(file: &PathBuf, degree: u32) -> Vec<String> {
    let json = scratch(&format!(
        "{}-{degree}.json",
        file.file_stem().unwrap().to_string_lossy()
    ));
    let status = Command::new(bin())
        .args(["--jet-degree", &degree.to_string(), "--json"])
        .arg(&json)
        .arg("check")
        .arg(file)
        .output()
        .unwrap();
    assert!(status.status.code().is_some_and(|c| c < 2));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let mut out = Vec::new();
    for c in v["checks"].as_array().unwrap() {
        out.push(format!("{} status {}", c["name"], c["status"]));
        for (k, f) in c["facts"].as_object().unwrap() {
            out.push(format!("{} {k} {f}", c["name"]));
        }
        for e in c["equations"].as_array().unwrap() {
            out.push(format!("{} {} {}", c["name"], e["equation"], e["status"]));
        }
    }
    out
}

fn criterion_11() -> Verdict {
    let mut changed = Vec::new();
    let mut count = 0;
    for file in ["acceptance.imc", "negative_control.imc"] {
        let path = corpus(file);
        let (two, three) = (cli_booleans(&path, 2), cli_booleans(&path, 3));
        count += two.len();
        if two != three {
            changed.push(file.to_string());
        }
    }
    for inst in im_corpus() {
        let (a, b) = (
            spray_crosscheck_at(&inst.im, 2).unwrap(),
            spray_crosscheck_at(&inst.im, 3).unwrap(),
        );
        count += 3;
        if (a.bool_equations, a.bool_spray_route, a.agree)
            != (b.bool_equations, b.bool_spray_route, b.agree)
        {
            changed.push(inst.name);
        }
    }
    for (name, sec, a) in flat_a_corpus() {
        let (x, y) = (
            check_flat_a_im_at(&sec, &a, 2).unwrap(),
            check_flat_a_im_at(&sec, &a, 3).unwrap(),
        );
        count += 2;
        if (x.route_conditions, x.route_im) != (y.route_conditions, y.route_im) {
            changed.push(name);
        }
    }
    verdict(
        changed.is_empty(),
        format!("{count} booleans compared at degrees 2 and 3; changed: {changed:?}"),
    )
}

fn emit(line: &str) {
    // Written past the test harness capture so the lines always appear.
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

#[test]
fn acceptance_criteria() {
    let criteria: [(u32, &str, fn() -> Verdict); 11] = [
        (
            1,
            "Heisenberg pipeline with r = e3 (x) e2^*, and r = id rejected",
            criterion_1,
        ),
        (
            2,
            "curvature of D - B/2 on the Heisenberg group is -1/4[[v,w],z]",
            criterion_2,
        ),
        (3, "IM equations agree with the spray route", criterion_3),
        (
            4,
            "flat-connection conditions agree with the IM equations",
            criterion_4,
        ),
        (
            5,
            "transitive abelian draws are IM; Jacobi fails exactly off closed forms",
            criterion_5,
        ),
        (
            6,
            "deformation differential squares to zero on the pair groupoid",
            criterion_6,
        ),
        (
            7,
            "Atiyah cocycle, difference identity, vanishing and linear solve",
            criterion_7,
        ),
        (
            8,
            "multiplicativity routes agree on built-in groupoids",
            criterion_8,
        ),
        (
            9,
            "Lie functor on the submersion groupoid equals the vertical bundle IM connection",
            criterion_9,
        ),
        (
            10,
            "components round trip and torsion components",
            criterion_10,
        ),
        (11, "jet degree 3 changes no boolean", criterion_11),
    ];
    let mut failed = Vec::new();
    emit("");
    for (n, title, run) in criteria {
        let start = Instant::now();
        let v = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        let label = if v.pass { "PASS" } else { "FAIL" };
        emit(&format!(
            "{label} criterion {n}: {title}: {} [{} ms]",
            v.detail,
            start.elapsed().as_millis()
        ));
        if !v.pass {
            failed.push(n);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}

fn run(args: &[&str]) -> (i32, String, String) {
    let o = Command::new(bin()).args(args).output().unwrap();
    (
        o.status.code().unwrap(),
        String::from_utf8_lossy(&o.stdout).into_owned(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

fn path(p: &PathBuf) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn cli_reports_and_exit_codes() {
    let (code, out, _) = run(&["report", &path(&corpus("acceptance.imc"))]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("0 fail"));

    let (code, out, _) = run(&["check", &path(&corpus("negative_control.imc"))]);
    assert_eq!(code, 1);
    let failing: Vec<&str> = out.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert_eq!(failing.len(), 1, "{out}");
    assert!(failing[0].contains("control"));
    assert!(out.contains("fail lie_nablaA"));

    let (code, out, _) = run(&[
        "check",
        &path(&corpus("acceptance.imc")),
        "--target",
        "heis_check_im",
    ]);
    assert_eq!(code, 0, "{out}");

    let empty = scratch("empty.imc");
    std::fs::write(&empty, "# no declarations\n").unwrap();
    let (code, out, _) = run(&["report", &path(&empty)]);
    assert_eq!(code, 0);
    assert!(out.contains("warning: document contains zero checks"));

    let bad = scratch("bad.imc");
    std::fs::write(&bad, "chart M vars=x\n  = 1\n").unwrap();
    assert_eq!(run(&["check", &path(&bad)]).0, 2);
    assert_eq!(run(&["check", "/nonexistent/file.imc"]).0, 2);
    assert_eq!(run(&["explode"]).0, 2);

    let o = Command::new(bin())
        .env("IMCONNECT_THREADS", "0")
        .args(["check", &path(&corpus("acceptance.imc"))])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(bin())
        .env("IMCONNECT_THREADS", "2")
        .args([
            "check",
            &path(&corpus("acceptance.imc")),
            "--target",
            "pair_axioms",
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn cli_construct_round_trips() {
    let recipes = path(&corpus("recipes.imc"));
    for recipe in ["heis", "vert", "vert_flat", "trans"] {
        let out = scratch(&format!("{recipe}.imc"));
        let (code, stdout, stderr) = run(&[
            "construct",
            &recipes,
            "--recipe",
            recipe,
            "--out",
            &path(&out),
        ]);
        assert_eq!(code, 0, "{recipe}: {stdout}{stderr}");
        let text = std::fs::read_to_string(&out).unwrap();
        let (code, _, _) = run(&["check", &path(&out)]);
        assert_eq!(code, 0, "{recipe}");
        // The written document is already in canonical form.
        let doc = imconnect::cli::Document::load(&text).unwrap();
        assert_eq!(doc.format(), text);
    }
    let flat = std::fs::read_to_string(scratch("vert_flat.imc")).unwrap();
    let im = flat.split("\n\n").find(|b| b.starts_with("im ")).unwrap();
    assert_eq!(im.lines().count(), 1, "flat case has trivial components");

    let (code, _, err) = run(&[
        "construct",
        &recipes,
        "--recipe",
        "trans_open",
        "--out",
        &path(&scratch("x.imc")),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("d^{∇ᴷ}C = 0"), "{err}");
    let (code, _, err) = run(&[
        "construct",
        &recipes,
        "--recipe",
        "heis_id",
        "--out",
        &path(&scratch("y.imc")),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("ker r"), "{err}");
}

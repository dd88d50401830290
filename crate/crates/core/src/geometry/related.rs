use super::{
    geodesic_spray, lift_to_tangent, torsion_of, CompArray, ConnectionData, GeomError, TensorField,
    VectorField,
};
use crate::symkernel::{Chart, PolyMap, ScalarFn};

/// Pulls back the first `p` covariant slots of `arr` (shape `[dim N; p] ++ rest`)
/// along `f: M → N`, leaving the remaining slots untouched.
pub fn pull_covariant(arr: &CompArray, p: usize, f: &PolyMap) -> CompArray {
    let m = f.source().dim();
    let n = f.target().dim();
    let shape = arr.shape().to_vec();
    assert!(
        shape.len() >= p && shape[..p].iter().all(|&d| d == n),
        "covariant slots must have the target dimension"
    );
    let jac = f.jacobian();
    let pulled: Vec<ScalarFn> = arr
        .data()
        .iter()
        .map(|c| {
            if c.is_zero() {
                ScalarFn::zero(f.source())
            } else {
                f.pull(c)
            }
        })
        .collect();
    let mut cur = CompArray::from_vec(&shape, pulled);
    // Contract one slot at a time: slot k goes from dimension n to m.
    for k in 0..p {
        let mut new_shape = cur.shape().to_vec();
        new_shape[k] = m;
        let src = &cur;
        let next = CompArray::from_fn(&new_shape, |ix| {
            let mut acc = ScalarFn::zero(f.source());
            let mut jx = ix.to_vec();
            for a in 0..n {
                let jac_ai = &jac[a][ix[k]];
                if jac_ai.is_zero() {
                    continue;
                }
                jx[k] = a;
                let v = src.get(&jx);
                if !v.is_zero() {
                    acc += &(jac_ai * v);
                }
            }
            acc
        });
        cur = next;
    }
    cur
}

#[derive(Clone, Debug)]
pub struct TensorRelatedness {
    pub related: bool,
    /// `dF ∘ 𝒯ᴹ − 𝒯ᴺ ∘ (dF)^{⊗p}`, indexed `[i_1..i_p][a]` on the source chart.
    pub defect: CompArray,
}

/// Relatedness of two `(p,1)` tensors along `f`.
pub fn check_related_tensors(
    tm: &TensorField,
    tn: &TensorField,
    f: &PolyMap,
) -> Result<TensorRelatedness, GeomError> {
    let (p, q) = tm.valence();
    if tn.valence() != (p, q) || q != 1 {
        return Err(GeomError::Shape(format!(
            "relatedness needs equal (p,1) valences, got {:?} and {:?}",
            tm.valence(),
            tn.valence()
        )));
    }
    if !Chart::same(tm.chart(), f.source()) || !Chart::same(tn.chart(), f.target()) {
        return Err(GeomError::Shape(
            "tensor charts do not match the map".into(),
        ));
    }
    let m = f.source().dim();
    let n = f.target().dim();
    let jac = f.jacobian();
    let pulled = pull_covariant(tn.comps(), p, f);
    let mut shape = vec![m; p];
    shape.push(n);
    let defect = CompArray::from_fn(&shape, |ix| {
        let a = ix[p];
        let mut acc = ScalarFn::zero(f.source());
        let mut jx = ix.to_vec();
        for lam in 0..m {
            if jac[a][lam].is_zero() {
                continue;
            }
            jx[p] = lam;
            let t = tm.get(&jx);
            if !t.is_zero() {
                acc += &(&jac[a][lam] * t);
            }
        }
        &acc - pulled.get(ix)
    });
    Ok(TensorRelatedness {
        related: defect.is_zero(),
        defect,
    })
}

/// `∇ᴹ(F*dx^a) − F*(∇ᴺ dx^a)` indexed `[μ][ν][a]`.
pub fn related_connections_defect(
    nm: &ConnectionData,
    nn: &ConnectionData,
    f: &PolyMap,
) -> CompArray {
    let m = f.source().dim();
    let n = f.target().dim();
    assert!(
        Chart::same(nm.base(), f.source()) && Chart::same(nn.base(), f.target()),
        "connection charts do not match the map"
    );
    let jac = f.jacobian();
    let gn = CompArray::from_fn(&[n, n, n], |ix| nn.g(ix[0], ix[1], ix[2]).clone());
    let pulled = pull_covariant(&gn, 2, f);
    CompArray::from_fn(&[m, m, n], |ix| {
        let (mu, nu, a) = (ix[0], ix[1], ix[2]);
        let mut acc = jac[a][nu].diff(mu);
        for lam in 0..m {
            let g = nm.g(mu, nu, lam);
            if !g.is_zero() && !jac[a][lam].is_zero() {
                acc -= &(g * &jac[a][lam]);
            }
        }
        &acc + pulled.get(ix)
    })
}

/// `dF ∘ X − Y ∘ F` for vector fields `X` on the source and `Y` on the target.
pub fn vector_fields_defect(x: &VectorField, y: &VectorField, f: &PolyMap) -> Vec<ScalarFn> {
    let jac = f.jacobian();
    (0..f.target().dim())
        .map(|a| {
            let mut acc = ScalarFn::zero(f.source());
            for (i, xi) in x.comps().iter().enumerate() {
                if !xi.is_zero() && !jac[a][i].is_zero() {
                    acc += &(&jac[a][i] * xi);
                }
            }
            &acc - &f.pull(y.comp(a))
        })
        .collect()
}

/// Tangent map `dF: (x, ẋ) ↦ (F(x), J_F(x) ẋ)` between tangent charts.
pub fn tangent_map(f: &PolyMap) -> PolyMap {
    let tm = Chart::tangent(f.source());
    let tn = Chart::tangent(f.target());
    let m = f.source().dim();
    let jac = f.jacobian();
    let mut comps: Vec<ScalarFn> = f.comps().iter().map(|c| lift_to_tangent(c, &tm)).collect();
    for row in &jac {
        let mut acc = ScalarFn::zero(&tm);
        for (i, d) in row.iter().enumerate() {
            if !d.is_zero() {
                acc += &(&lift_to_tangent(d, &tm) * &ScalarFn::var(&tm, m + i));
            }
        }
        comps.push(acc);
    }
    PolyMap::new(&tm, &tn, comps).unwrap()
}

#[derive(Clone, Debug)]
pub struct ConnectionRelatedness {
    /// Route through coordinate 1-forms.
    pub related: bool,
    pub defect: CompArray,
    /// Route through torsions and geodesic sprays.
    pub route_spray: bool,
    pub agree: bool,
}

/// Relatedness of tangent connections along `f`, decided by two routes.
pub fn check_related_connections(
    nm: &ConnectionData,
    nn: &ConnectionData,
    f: &PolyMap,
) -> Result<ConnectionRelatedness, GeomError> {
    if !nm.is_tangent() || !nn.is_tangent() {
        return Err(GeomError::NotTangent {
            rank: nm.rank(),
            dim: nm.dim(),
        });
    }
    if !Chart::same(nm.base(), f.source()) || !Chart::same(nn.base(), f.target()) {
        return Err(GeomError::Shape(
            "connection charts do not match the map".into(),
        ));
    }
    let defect = related_connections_defect(nm, nn, f);
    let related = defect.is_zero();
    let tors = check_related_tensors(&torsion_of(nm)?, &torsion_of(nn)?, f)?;
    let zm = geodesic_spray(nm)?;
    let zn = geodesic_spray(nn)?;
    let df = tangent_map(f);
    let sprays = vector_fields_defect(&zm, &zn, &df)
        .iter()
        .all(|c| c.is_zero());
    let route_spray = tors.related && sprays;
    Ok(ConnectionRelatedness {
        related,
        defect,
        route_spray,
        agree: related == route_spray,
    })
}

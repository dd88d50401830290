//! The deformation complex of `G ⋉ G ⇒ G` in degrees `-1..=2`, the Atiyah
//! cocycle of an `s`-projectable connection and its coboundary solve.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{
    array_equation, check_multiplicative, jac_along, matmul, push_last, s_projection,
    CoordGroupoid, GroupoidError, MultiplicativeCheck,
};
use crate::geometry::{
    check_related_tensors, pull_covariant, related_connections_defect, restrict_tensor,
    restrict_to_fibered, CompArray, ConnectionData, TensorField,
};
use crate::report::{DefectReport, EquationDefect};
use crate::symkernel::{monomials_up_to, solve_linear, ChartRef, Exps, PolyMap, Rat, ScalarFn};

/// A cochain `U` of degree `k` together with its `M`-projection `Uᴹ`.
///
/// Degree `-1`: `comps[α][β][a]` on the objects chart, values in `ker ds`
/// at the units, written in the coordinates of `G`; `m_comps = ρ ∘ U`.
/// Degree `k ≥ 0`: `comps[α][β][a]` on nerve level `k+1`, valued at the
/// base arrow `m̄(g₁, g₂)` (or `g` for `k = 0`); `m_comps` on level `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct DefCochain {
    pub degree: i32,
    pub comps: CompArray,
    pub m_comps: CompArray,
}

fn pull2(arr: &CompArray, f: &PolyMap) -> CompArray {
    pull_covariant(arr, 2, f)
}

fn sign(e: usize) -> Rat {
    if e % 2 == 0 {
        Rat::one()
    } else {
        -Rat::one()
    }
}

fn scale(arr: &CompArray, c: &Rat) -> CompArray {
    CompArray::from_vec(arr.shape(), arr.data().iter().map(|x| x.scale(c)).collect())
}

impl CoordGroupoid {
    fn chart_for_degree(&self, degree: i32) -> Result<&ChartRef, GroupoidError> {
        match degree {
            -1..=2 => Ok(self.level_chart((degree + 1) as usize)),
            d => Err(GroupoidError::UnsupportedDegree(d)),
        }
    }

    /// The arrow a degree-`k` cochain is valued at: `id` for `k = 0`, `m̄ ∘ (pr₁, pr₂)` after.
    fn base_point(&self, k: usize) -> Result<PolyMap, GroupoidError> {
        if k == 0 {
            return Ok(PolyMap::identity(&self.arrows));
        }
        let p = self.projections(k + 1);
        Ok(self.div.compose(&self.tuple(&p[..2])?))
    }

    /// Level `k+1 → k`: `s` for `k = 0`, otherwise drop the first arrow.
    fn down_map(&self, k: usize) -> Result<PolyMap, GroupoidError> {
        if k == 0 {
            return Ok(self.s.clone());
        }
        self.tuple(&self.projections(k + 1)[1..])
    }
}

impl DefCochain {
    /// Validates shapes, charts and the commuting square `ds ∘ U = Uᴹ ∘ down`.
    pub fn new(
        g: &CoordGroupoid,
        degree: i32,
        comps: CompArray,
        m_comps: CompArray,
    ) -> Result<DefCochain, GroupoidError> {
        let chart = g.chart_for_degree(degree)?;
        let (n, m) = (g.arrows.dim(), g.objects.dim());
        let (d, dm) = if degree < 0 {
            (m, m)
        } else {
            (chart.dim(), g.level_chart(degree as usize).dim())
        };
        let mshape = if degree < 0 { [m, m, m] } else { [dm, dm, m] };
        if comps.shape() != [d, d, n] || m_comps.shape() != mshape {
            return Err(GroupoidError::InvalidParams(format!(
                "degree {degree} cochain has shapes {:?} / {:?}",
                comps.shape(),
                m_comps.shape()
            )));
        }
        let mchart = if degree < 0 {
            &g.objects
        } else {
            g.level_chart(degree as usize)
        };
        if comps
            .data()
            .iter()
            .any(|x| !crate::symkernel::Chart::same(x.chart(), chart))
            || m_comps
                .data()
                .iter()
                .any(|x| !crate::symkernel::Chart::same(x.chart(), mchart))
        {
            return Err(GroupoidError::InvalidParams(format!(
                "degree {degree} cochain lives on the wrong charts"
            )));
        }
        let c = DefCochain {
            degree,
            comps,
            m_comps,
        };
        if !c.square_defect(g)?.is_zero() {
            return Err(GroupoidError::Precondition(format!(
                "degree {degree} cochain does not cover its M-projection"
            )));
        }
        Ok(c)
    }

    /// Degree `-1` cochain; `comps` must take values in `ker ds`.
    pub fn degree_minus_one(
        g: &CoordGroupoid,
        comps: CompArray,
    ) -> Result<DefCochain, GroupoidError> {
        let m_comps = push_last(&jac_along(&g.t, &g.u), &comps, &g.objects);
        DefCochain::new(g, -1, comps, m_comps)
    }

    /// Degree `0` cochain of an `s`-projectable `(2,1)` tensor `[α][β][a]` on `G`.
    pub fn from_tensor(g: &CoordGroupoid, comps: CompArray) -> Result<DefCochain, GroupoidError> {
        let pushed = push_last(&g.s.jacobian(), &comps, &g.arrows);
        let m_comps = pull2(&pushed, &g.u);
        DefCochain::new(g, 0, comps, m_comps)
    }

    pub fn zero(g: &CoordGroupoid, degree: i32) -> Result<DefCochain, GroupoidError> {
        let chart = g.chart_for_degree(degree)?;
        let (n, m) = (g.arrows.dim(), g.objects.dim());
        let (d, mchart) = if degree < 0 {
            (m, &g.objects)
        } else {
            (chart.dim(), g.level_chart(degree as usize))
        };
        let dm = if degree < 0 { m } else { mchart.dim() };
        Ok(DefCochain {
            degree,
            comps: CompArray::zeros(chart, &[d, d, n]),
            m_comps: CompArray::zeros(mchart, &[dm, dm, m]),
        })
    }

    /// `ds ∘ U − Uᴹ ∘ down` (degree `≥ 0`) or `ds ∘ U` at the units (degree `-1`).
    pub fn square_defect(&self, g: &CoordGroupoid) -> Result<CompArray, GroupoidError> {
        if self.degree < 0 {
            return Ok(push_last(&jac_along(&g.s, &g.u), &self.comps, &g.objects));
        }
        let k = self.degree as usize;
        let chart = g.level_chart(k + 1);
        let bp = g.base_point(k)?;
        let lhs = push_last(&jac_along(&g.s, &bp), &self.comps, chart);
        Ok(lhs.sub(&pull2(&self.m_comps, &g.down_map(k)?)))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_zero() && self.m_comps.is_zero()
    }

    pub fn add(&self, o: &DefCochain) -> DefCochain {
        assert_eq!(self.degree, o.degree);
        DefCochain {
            degree: self.degree,
            comps: self.comps.add(&o.comps),
            m_comps: self.m_comps.add(&o.m_comps),
        }
    }

    pub fn sub(&self, o: &DefCochain) -> DefCochain {
        assert_eq!(self.degree, o.degree);
        DefCochain {
            degree: self.degree,
            comps: self.comps.sub(&o.comps),
            m_comps: self.m_comps.sub(&o.m_comps),
        }
    }

    pub fn scale(&self, c: &Rat) -> DefCochain {
        DefCochain {
            degree: self.degree,
            comps: scale(&self.comps, c),
            m_comps: scale(&self.m_comps, c),
        }
    }
}

/// `δ̄: C^k → C^{k+1}` for `k ∈ {-1, 0, 1}`, output validated against its square.
pub fn deformation_differential(
    g: &CoordGroupoid,
    u: &DefCochain,
) -> Result<DefCochain, GroupoidError> {
    if !u.square_defect(g)?.is_zero() {
        return Err(GroupoidError::Precondition(
            "input cochain does not cover its M-projection".into(),
        ));
    }
    let (comps, m_comps) = match u.degree {
        -1 => delta_minus_one(g, u)?,
        0 | 1 => delta_positive(g, u, u.degree as usize)?,
        d => return Err(GroupoidError::UnsupportedDegree(d)),
    };
    DefCochain::new(g, u.degree + 1, comps, m_comps).map_err(|e| match e {
        GroupoidError::Precondition(m) => GroupoidError::PostCheck(m),
        e => e,
    })
}

/// `dR_g` and `dL_g ∘ di` on `ker ds` at the units, as `n × n` matrices on `G`.
fn translation_differentials(
    g: &CoordGroupoid,
) -> Result<(Vec<Vec<ScalarFn>>, Vec<Vec<ScalarFn>>), GroupoidError> {
    let n = g.arrows.dim();
    let id = PolyMap::identity(&g.arrows);
    let ut = g.u.compose(&g.t);
    let us = g.u.compose(&g.s);
    let block = |f: &PolyMap,
                 h: &PolyMap,
                 cols: std::ops::Range<usize>|
     -> Result<Vec<Vec<ScalarFn>>, GroupoidError> {
        let q = g.into_composable(f, h)?;
        let jm = jac_along(&g.mult, &q);
        let jr = jac_along(
            &g.composable.retract,
            &PolyMap::pair(f, h, &g.composable.product),
        );
        let jr: Vec<Vec<ScalarFn>> = jr
            .into_iter()
            .map(|row| row[cols.clone()].to_vec())
            .collect();
        Ok(matmul(&jm, &jr, &g.arrows))
    };
    let dr = block(&ut, &id, 0..n)?;
    let dl = block(&id, &us, n..2 * n)?;
    let di = jac_along(&g.inv, &us);
    Ok((dr, matmul(&dl, &di, &g.arrows)))
}

pub(crate) fn right_translation(g: &CoordGroupoid) -> Result<Vec<Vec<ScalarFn>>, GroupoidError> {
    Ok(translation_differentials(g)?.0)
}

fn delta_minus_one(
    g: &CoordGroupoid,
    u: &DefCochain,
) -> Result<(CompArray, CompArray), GroupoidError> {
    let (dr, dl_inv) = translation_differentials(g)?;
    let right = push_last(&dr, &pull2(&u.comps, &g.t), &g.arrows);
    let left = push_last(&dl_inv, &pull2(&u.comps, &g.s), &g.arrows);
    let m_comps = push_last(&jac_along(&g.t, &g.u), &u.comps, &g.objects);
    Ok((right.add(&left), m_comps))
}

fn delta_positive(
    g: &CoordGroupoid,
    u: &DefCochain,
    k: usize,
) -> Result<(CompArray, CompArray), GroupoidError> {
    let n = g.arrows.dim();
    let level = k + 2;
    let chart = g.level_chart(level).clone();
    let prs = g.projections(level);
    let bp = g.base_point(k)?;

    let phi1: Vec<PolyMap> = std::iter::once(prs[0].clone())
        .chain(prs[2..].iter().cloned())
        .collect();
    let phi1 = g.tuple(&phi1)?;
    let phi2 = g.tuple(&prs[1..])?;
    let (p1, p2) = (bp.compose(&phi1), bp.compose(&phi2));
    let q = g.tuple(&[p1.clone(), p2.clone()])?;
    let jd = jac_along(&g.div, &q);
    let jr = jac_along(
        &g.divided.retract,
        &PolyMap::pair(&p1, &p2, &g.divided.product),
    );
    let dm = matmul(&jd, &jr, &chart);
    let first: Vec<Vec<ScalarFn>> = dm.iter().map(|r| r[..n].to_vec()).collect();
    let second: Vec<Vec<ScalarFn>> = dm.iter().map(|r| r[n..].to_vec()).collect();
    let mut out = push_last(&first, &pull2(&u.comps, &phi1), &chart);
    out = scale(
        &out.add(&push_last(&second, &pull2(&u.comps, &phi2), &chart)),
        &-Rat::one(),
    );

    for i in 3..=level {
        let keep: Vec<PolyMap> = prs
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i - 1)
            .map(|(_, p)| p.clone())
            .collect();
        out = out.add(&scale(&pull2(&u.comps, &g.tuple(&keep)?), &sign(i + 1)));
    }
    let last = &prs[level - 1];
    let shifted: Vec<PolyMap> = (0..=k)
        .map(|j| Ok(g.div.compose(&g.tuple(&[prs[j].clone(), last.clone()])?)))
        .collect::<Result<_, GroupoidError>>()?;
    out = out.add(&scale(&pull2(&u.comps, &g.tuple(&shifted)?), &sign(k)));

    // M-projection on level k+1.
    let mchart = g.level_chart(k + 1).clone();
    let prs1 = g.projections(k + 1);
    let mut m_out = scale(
        &push_last(&jac_along(&g.t, &bp), &u.comps, &mchart),
        &-Rat::one(),
    );
    for i in 3..=level {
        let keep: Vec<PolyMap> = prs1
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i - 2)
            .map(|(_, p)| p.clone())
            .collect();
        m_out = m_out.add(&scale(&pull2(&u.m_comps, &g.tuple(&keep)?), &sign(i + 1)));
    }
    let psi = if k == 0 {
        g.t.compose(&prs1[0])
    } else {
        let parts: Vec<PolyMap> = (0..k)
            .map(|j| {
                Ok(g.div
                    .compose(&g.tuple(&[prs1[j].clone(), prs1[k].clone()])?))
            })
            .collect::<Result<_, GroupoidError>>()?;
        g.tuple(&parts)?
    };
    m_out = m_out.add(&scale(&pull2(&u.m_comps, &psi), &sign(k)));
    Ok((out, m_out))
}

/// The Atiyah cocycle `At_∇` (degree 1) and the projection `∇ᴹ` it is built over.
#[derive(Clone, Debug)]
pub struct Atiyah {
    pub cochain: DefCochain,
    pub nabla_m: ConnectionData,
}

/// `At_∇ = −(∇^{[2]} vs ∇ along m̄)` with `M`-projection `−(∇ vs ∇ᴹ along t)`.
pub fn atiyah_cocycle(g: &CoordGroupoid, nabla: &ConnectionData) -> Result<Atiyah, GroupoidError> {
    let nm = s_projection(g, nabla)?
        .ok_or_else(|| GroupoidError::Precondition("connection is not s-projectable".into()))?;
    let n2 = restrict_to_fibered(nabla, nabla, &g.divided)?;
    let at = scale(
        &related_connections_defect(&n2, nabla, &g.div),
        &-Rat::one(),
    );
    let tm = scale(&related_connections_defect(nabla, &nm, &g.t), &-Rat::one());
    let cochain = DefCochain::new(g, 1, at, tm)
        .map_err(|e| GroupoidError::PostCheck(format!("Atiyah diagram: {e}")))?;
    Ok(Atiyah {
        cochain,
        nabla_m: nm,
    })
}

/// Degree-0 cochain `Γ′ − Γ` of two `s`-projectable connections, so that
/// `At_∇ − At_∇′ = δ̄(Γ′ − Γ)`.
pub fn connection_difference(
    g: &CoordGroupoid,
    nabla: &ConnectionData,
    nabla_p: &ConnectionData,
) -> Result<DefCochain, GroupoidError> {
    g.require_connection(nabla)?;
    g.require_connection(nabla_p)?;
    DefCochain::from_tensor(g, nabla_p.difference(nabla))
}

/// For a degree-0 cochain: `(δ̄U = 0, U is m̄-related to itself, δ̄U = −defect)`.
pub fn tensor_cocycle_crosscheck(
    g: &CoordGroupoid,
    u: &DefCochain,
) -> Result<(bool, bool, bool), GroupoidError> {
    if u.degree != 0 {
        return Err(GroupoidError::Precondition(
            "expected a degree-0 cochain".into(),
        ));
    }
    let du = deformation_differential(g, u)?;
    let t = TensorField::new(&g.arrows, 2, 1, u.comps.clone())?;
    let t2 = TensorField::new(
        &g.divided.chart,
        2,
        1,
        restrict_tensor(&t, &t, &g.divided).comps().clone(),
    )?;
    let rel = check_related_tensors(&t2, &t, &g.div)?;
    let same = du.comps == scale(&rel.defect, &-Rat::one());
    Ok((du.comps.is_zero(), rel.related, same))
}

/// Cocycle, coboundary and vanishing properties of the Atiyah class for two connections.
pub fn obstruction_tests(
    g: &CoordGroupoid,
    nabla: &ConnectionData,
    nabla_p: &ConnectionData,
) -> Result<DefectReport, GroupoidError> {
    let a1 = atiyah_cocycle(g, nabla)?;
    let a2 = atiyah_cocycle(g, nabla_p)?;
    let mut rep = DefectReport::new();
    let s1 = a1.cochain.square_defect(g)?;
    let s2 = a2.cochain.square_defect(g)?;
    rep.push(array_equation("diagram", &[&s1, &s2]));
    let d1 = deformation_differential(g, &a1.cochain)?;
    let d2 = deformation_differential(g, &a2.cochain)?;
    rep.push(array_equation(
        "cocycle",
        &[&d1.comps, &d1.m_comps, &d2.comps, &d2.m_comps],
    ));
    let v = connection_difference(g, nabla, nabla_p)?;
    let dv = deformation_differential(g, &v)?;
    let gap = a1.cochain.sub(&a2.cochain).sub(&dv);
    rep.push(array_equation("coboundary", &[&gap.comps, &gap.m_comps]));
    let mut vanish = Vec::new();
    for (nab, at) in [(nabla, &a1), (nabla_p, &a2)] {
        if check_multiplicative(g, nab)?.route_m {
            vanish.push(at.cochain.comps.clone());
            vanish.push(at.cochain.m_comps.clone());
        }
    }
    rep.push(array_equation(
        "multiplicative_vanishing",
        &vanish.iter().collect::<Vec<_>>(),
    ));
    let (closed, related, same) = tensor_cocycle_crosscheck(g, &v)?;
    let mut e = EquationDefect::new("difference_cocycle_iff_related");
    let flag = |b: bool| {
        if b {
            ScalarFn::zero(&g.arrows)
        } else {
            ScalarFn::one(&g.arrows)
        }
    };
    e.record(
        || format!("closed={closed}, related={related}"),
        vec![flag(closed == related)],
    );
    e.record(
        || "differential equals relatedness defect".into(),
        vec![flag(same)],
    );
    rep.push(e);
    Ok(rep)
}

#[derive(Clone, Debug)]
pub enum CoboundarySolution {
    /// `δ̄V = At_∇`; the connection `Γ + V` is multiplicative.
    Solved {
        correction: DefCochain,
        corrected: ConnectionData,
        check: MultiplicativeCheck,
    },
    /// No `s`-projectable correction with polynomial degree `≤ degree` exists.
    Inconclusive { degree: u32 },
}

impl std::fmt::Display for CoboundarySolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoboundarySolution::Solved { check, .. } => write!(
                f,
                "solved; corrected connection multiplicative: {}",
                check.route_m
            ),
            CoboundarySolution::Inconclusive { degree } => {
                write!(f, "inconclusive at degree {degree}")
            }
        }
    }
}

/// `s`-projectable `(2,1)` monomial tensors of degree `≤ deg`.
fn projectable_basis(g: &CoordGroupoid, deg: u32) -> Vec<CompArray> {
    let n = g.arrows.dim();
    let s_sel = g.s_selection();
    let all = monomials_up_to(n, deg);
    let base_only: Vec<&Exps> = all
        .iter()
        .filter(|e| {
            e.iter()
                .enumerate()
                .all(|(i, &x)| x == 0 || s_sel.contains(&i))
        })
        .collect();
    let mut out = Vec::new();
    for a in 0..n {
        for al in 0..n {
            for be in 0..n {
                let monos: Vec<&Exps> = if !s_sel.contains(&a) {
                    all.iter().collect()
                } else if s_sel.contains(&al) && s_sel.contains(&be) {
                    base_only.clone()
                } else {
                    continue;
                };
                for e in monos {
                    let mut arr = CompArray::zeros(&g.arrows, &[n, n, n]);
                    arr.set(&[al, be, a], ScalarFn::monomial(&g.arrows, e, Rat::one()));
                    out.push(arr);
                }
            }
        }
    }
    out
}

type Key = (u8, usize, Exps);

fn coefficients(c: &DefCochain) -> BTreeMap<Key, Rat> {
    let mut out = BTreeMap::new();
    for (tag, arr) in [(0u8, &c.comps), (1u8, &c.m_comps)] {
        for (o, f) in arr.data().iter().enumerate() {
            for (e, r) in f.terms() {
                out.insert((tag, o, e.clone()), r.clone());
            }
        }
    }
    out
}

/// Solves `δ̄V = At_∇` over `s`-projectable polynomial tensors of degree
/// `≤ degree` by exact linear algebra and post-checks `Γ + V`.
pub fn solve_atiyah_coboundary(
    g: &CoordGroupoid,
    nabla: &ConnectionData,
    degree: u32,
) -> Result<CoboundarySolution, GroupoidError> {
    let at = atiyah_cocycle(g, nabla)?.cochain;
    let basis = projectable_basis(g, degree);
    let images: Vec<BTreeMap<Key, Rat>> = basis
        .par_iter()
        .map(|b| {
            Ok(coefficients(&deformation_differential(
                g,
                &DefCochain::from_tensor(g, b.clone())?,
            )?))
        })
        .collect::<Result<_, GroupoidError>>()?;
    let rhs = coefficients(&at);
    let mut rows: BTreeMap<&Key, usize> = BTreeMap::new();
    for k in images.iter().flat_map(|m| m.keys()).chain(rhs.keys()) {
        let next = rows.len();
        rows.entry(k).or_insert(next);
    }
    let mut a = vec![vec![Rat::zero(); basis.len()]; rows.len()];
    for (j, img) in images.iter().enumerate() {
        for (k, r) in img {
            a[rows[k]][j] = r.clone();
        }
    }
    let mut b = vec![Rat::zero(); rows.len()];
    for (k, r) in &rhs {
        b[rows[k]] = r.clone();
    }
    let Some(x) = solve_linear(&a, &b, basis.len()) else {
        return Ok(CoboundarySolution::Inconclusive { degree });
    };
    let mut v = CompArray::zeros(&g.arrows, &[g.arrows.dim(); 3]);
    for (c, arr) in x.iter().zip(&basis) {
        if !c.is_zero() {
            v = v.add(&scale(arr, c));
        }
    }
    let correction = DefCochain::from_tensor(g, v)?;
    if deformation_differential(g, &correction)? != at {
        return Err(GroupoidError::PostCheck(
            "solution does not reproduce the Atiyah cocycle".into(),
        ));
    }
    let corrected = nabla.add_tensor(&correction.comps);
    let check = check_multiplicative(g, &corrected)?;
    if !check.route_m {
        return Err(GroupoidError::PostCheck(
            "corrected connection is not multiplicative".into(),
        ));
    }
    Ok(CoboundarySolution::Solved {
        correction,
        corrected,
        check,
    })
}

//! Coordinate Lie groupoids with polynomial structure maps: axioms,
//! multiplicative connections, the deformation complex and the Lie functor.

mod complex;
mod lie;

pub use complex::{
    atiyah_cocycle, connection_difference, deformation_differential, obstruction_tests,
    solve_atiyah_coboundary, tensor_cocycle_crosscheck, Atiyah, CoboundarySolution, DefCochain,
};
pub use lie::lie_functor;

use thiserror::Error;

use crate::algebroid::AlgebroidError;
use crate::constructors::{heisenberg_group, ConstructError, CoordSubmersion};
use crate::geometry::{
    check_related_tensors, geodesic_spray, project_connection, pull_covariant,
    related_connections_defect, restrict_tensor, restrict_to_fibered, restrict_vector_field,
    tangent_map, torsion_of, vector_fields_defect, CompArray, ConnectionData, FiberedChart,
    GeomError, TensorField, VectorField,
};
use crate::imconn::ImError;
use crate::report::{DefectReport, EquationDefect};
use crate::symkernel::{Chart, ChartRef, PolyMap, Rat, ScalarFn, SymError};

#[derive(Debug, Error)]
pub enum GroupoidError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("groupoid axioms fail: {0}")]
    Axioms(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unsupported cochain degree {0}")]
    UnsupportedDegree(i32),
    #[error("post-check failed: {0}")]
    PostCheck(String),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Algebroid(#[from] AlgebroidError),
    #[error(transparent)]
    Im(#[from] ImError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
}

/// Built-in groupoid families, addressable by name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Builtin {
    /// `ℝⁿ × ℝⁿ ⇒ ℝⁿ`.
    Pair { dim: usize },
    /// `ℝ^{b+f} ×_{ℝ^b} ℝ^{b+f} ⇒ ℝ^{b+f}`.
    Submersion { total: usize, base: usize },
    /// `(ℝⁿ, +) ⇒ pt`.
    Abelian { dim: usize },
    /// Heisenberg group `⇒ pt`.
    Heisenberg,
}

impl Builtin {
    /// Parses `pair:N`, `submersion:T:B`, `abelian:N` or `heisenberg`.
    pub fn parse(s: &str) -> Result<Builtin, GroupoidError> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| {
            p.parse::<usize>()
                .map_err(|_| GroupoidError::InvalidParams(format!("bad dimension `{p}` in `{s}`")))
        };
        match parts.as_slice() {
            ["pair", n] => Ok(Builtin::Pair { dim: num(n)? }),
            ["submersion", t, b] => Ok(Builtin::Submersion {
                total: num(t)?,
                base: num(b)?,
            }),
            ["abelian", n] => Ok(Builtin::Abelian { dim: num(n)? }),
            ["heisenberg"] => Ok(Builtin::Heisenberg),
            _ => Err(GroupoidError::InvalidParams(format!(
                "unknown groupoid `{s}`"
            ))),
        }
    }

    pub fn build(&self) -> Result<CoordGroupoid, GroupoidError> {
        match *self {
            Builtin::Pair { dim } => CoordGroupoid::pair(&space("M", dim)),
            Builtin::Submersion { total, base } => {
                if base > total {
                    return Err(GroupoidError::InvalidParams(
                        "base dimension exceeds total dimension".into(),
                    ));
                }
                CoordGroupoid::submersion(&CoordSubmersion::new(&space("M", total), base)?)
            }
            Builtin::Abelian { dim } => CoordGroupoid::abelian_group(dim),
            Builtin::Heisenberg => CoordGroupoid::heisenberg(),
        }
    }
}

impl std::fmt::Display for Builtin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Builtin::Pair { dim } => write!(f, "pair:{dim}"),
            Builtin::Submersion { total, base } => write!(f, "submersion:{total}:{base}"),
            Builtin::Abelian { dim } => write!(f, "abelian:{dim}"),
            Builtin::Heisenberg => write!(f, "heisenberg"),
        }
    }
}

/// `x`, `x,y`, `x,y,z`, then `x1..xn`.
pub fn space(name: &str, dim: usize) -> ChartRef {
    match dim {
        0..=3 => Chart::from_names(name, &["x", "y", "z"][..dim]),
        _ => Chart::numbered(name, "x", dim),
    }
}

/// A Lie groupoid `G ⇒ M` on single charts whose source and target are
/// coordinate selections, together with its nerve charts:
/// `G^{(2)} = G ×_{s,t} G`, `G^{[2]} = G ×_{s,s} G` and
/// `G^{[3]} = G^{[2]} ×_{s∘pr₁,s} G`.
#[derive(Clone, Debug)]
pub struct CoordGroupoid {
    pub name: String,
    pub arrows: ChartRef,
    pub objects: ChartRef,
    pub s: PolyMap,
    pub t: PolyMap,
    pub u: PolyMap,
    pub inv: PolyMap,
    pub composable: FiberedChart,
    pub mult: PolyMap,
    pub divided: FiberedChart,
    /// `m̄(g, h) = g h⁻¹`.
    pub div: PolyMap,
    pub triples: FiberedChart,
    s_sel: Vec<usize>,
    t_sel: Vec<usize>,
    a_coords: Vec<usize>,
    pair_chart: Option<FiberedChart>,
}

struct Parts {
    name: String,
    arrows: ChartRef,
    objects: ChartRef,
    s_sel: Vec<usize>,
    t_sel: Vec<usize>,
    u: PolyMap,
    inv: PolyMap,
    a_coords: Vec<usize>,
    pair_chart: Option<FiberedChart>,
}

/// Fiber product `left ×_{σ,τ} right` where `τ` selects the coordinates
/// `tau_sel` of `right`; parametrized by `left` and the unselected coordinates.
#[allow(clippy::too_many_arguments)]
fn fiber_by_selection(
    name: &str,
    left: &ChartRef,
    left_names: Vec<String>,
    right: &ChartRef,
    right_suffix: &str,
    base: &ChartRef,
    sigma: PolyMap,
    tau_sel: &[usize],
    sigma_section: PolyMap,
    tau_section: PolyMap,
) -> Result<FiberedChart, GroupoidError> {
    let ld = left.dim();
    let rest: Vec<usize> = (0..right.dim()).filter(|i| !tau_sel.contains(i)).collect();
    let mut vars = left_names;
    vars.extend(
        rest.iter()
            .map(|&i| format!("{}{right_suffix}", right.vars()[i])),
    );
    let chart = Chart::new(name, vars)?;
    let product = Chart::product(left, right);
    let left_idx: Vec<usize> = (0..ld).collect();
    let mut comps: Vec<ScalarFn> = (0..ld).map(|i| ScalarFn::var(&chart, i)).collect();
    for c in 0..right.dim() {
        comps.push(match tau_sel.iter().position(|&k| k == c) {
            Some(k) => sigma.comp(k).embed(&chart, &left_idx),
            None => ScalarFn::var(
                &chart,
                ld + rest.iter().position(|&r| r == c).expect("unselected"),
            ),
        });
    }
    let embed = PolyMap::new(&chart, &product, comps)?;
    let mut keep = left_idx;
    keep.extend(rest.iter().map(|&r| ld + r));
    let retract = PolyMap::select(&product, &chart, &keep);
    let tau = PolyMap::select(right, base, tau_sel);
    Ok(FiberedChart::new(
        &chart,
        left,
        right,
        base,
        embed,
        retract,
        sigma,
        tau,
        sigma_section,
        tau_section,
    )?)
}

/// `σ ∘ f − τ ∘ g`.
fn landing_defect(fib: &FiberedChart, f: &PolyMap, g: &PolyMap) -> Vec<ScalarFn> {
    let a = fib.sigma.compose(f);
    let b = fib.tau.compose(g);
    a.comps()
        .iter()
        .zip(b.comps())
        .map(|(x, y)| x - y)
        .collect()
}

/// The map `(f, g)` into the fiber product chart.
pub fn into_fibered(
    fib: &FiberedChart,
    f: &PolyMap,
    g: &PolyMap,
) -> Result<PolyMap, GroupoidError> {
    if landing_defect(fib, f, g).iter().any(|d| !d.is_zero()) {
        return Err(GroupoidError::Precondition(format!(
            "maps do not land in {}",
            fib.chart.name()
        )));
    }
    Ok(fib.retract.compose(&PolyMap::pair(f, g, &fib.product)))
}

/// Jacobian of `map` evaluated along `point`.
pub(crate) fn jac_along(map: &PolyMap, point: &PolyMap) -> Vec<Vec<ScalarFn>> {
    map.jacobian()
        .iter()
        .map(|row| row.iter().map(|x| point.pull(x)).collect())
        .collect()
}

pub(crate) fn matmul(
    a: &[Vec<ScalarFn>],
    b: &[Vec<ScalarFn>],
    chart: &ChartRef,
) -> Vec<Vec<ScalarFn>> {
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    let mut acc = ScalarFn::zero(chart);
                    for (x, brow) in row.iter().zip(b) {
                        if !x.is_zero() && !brow[j].is_zero() {
                            acc += &(x * &brow[j]);
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Applies the matrix `j` (rows indexed by the new value slot) to the last slot of `arr`.
pub(crate) fn push_last(j: &[Vec<ScalarFn>], arr: &CompArray, chart: &ChartRef) -> CompArray {
    let mut shape = arr.shape().to_vec();
    let last = shape.len() - 1;
    shape[last] = j.len();
    CompArray::from_fn(&shape, |ix| {
        let mut acc = ScalarFn::zero(chart);
        let mut jx = ix.to_vec();
        for (a, x) in j[ix[last]].iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            jx[last] = a;
            let v = arr.get(&jx);
            if !v.is_zero() {
                acc += &(x * v);
            }
        }
        acc
    })
}

/// One equation row per nonzero entry of a defect array.
pub(crate) fn array_equation(name: &str, arrays: &[&CompArray]) -> EquationDefect {
    let mut e = EquationDefect::new(name);
    for (k, arr) in arrays.iter().enumerate() {
        for (o, v) in arr.data().iter().enumerate() {
            e.record(|| format!("#{k} {:?}", arr.unravel(o)), vec![v.clone()]);
        }
    }
    e
}

fn map_equation(name: &str, lhs: &PolyMap, rhs: &PolyMap) -> EquationDefect {
    let results = lhs
        .comps()
        .iter()
        .zip(rhs.comps())
        .enumerate()
        .map(|(k, (a, b))| (format!("component {k}"), vec![a - b]))
        .collect();
    EquationDefect::from_results(name, results)
}

impl CoordGroupoid {
    fn assemble<F>(p: Parts, mult: F) -> Result<CoordGroupoid, GroupoidError>
    where
        F: FnOnce(&FiberedChart) -> Result<PolyMap, GroupoidError>,
    {
        let s = PolyMap::select(&p.arrows, &p.objects, &p.s_sel);
        let t = PolyMap::select(&p.arrows, &p.objects, &p.t_sel);
        if !Chart::same(p.u.source(), &p.objects) || !Chart::same(p.u.target(), &p.arrows) {
            return Err(GroupoidError::InvalidParams("unit map charts".into()));
        }
        let names1: Vec<String> = p.arrows.vars().iter().map(|v| format!("{v}_1")).collect();
        let composable = fiber_by_selection(
            &format!("{}2", p.name),
            &p.arrows,
            names1.clone(),
            &p.arrows,
            "_2",
            &p.objects,
            s.clone(),
            &p.t_sel,
            p.u.clone(),
            p.u.clone(),
        )?;
        let mult = mult(&composable)?;
        let divided = fiber_by_selection(
            &format!("{}_div", p.name),
            &p.arrows,
            names1,
            &p.arrows,
            "_2",
            &p.objects,
            s.clone(),
            &p.s_sel,
            p.u.clone(),
            p.u.clone(),
        )?;
        let pre = into_fibered(&composable, &divided.pr1(), &p.inv.compose(&divided.pr2()))?;
        let div = mult.compose(&pre);
        let diag = into_fibered(&divided, &p.u, &p.u)?;
        let triples = fiber_by_selection(
            &format!("{}_div3", p.name),
            &divided.chart,
            divided.chart.vars().to_vec(),
            &p.arrows,
            "_3",
            &p.objects,
            s.compose(&divided.pr1()),
            &p.s_sel,
            diag,
            p.u.clone(),
        )?;
        let n = p.arrows.dim();
        let m = p.objects.dim();
        if p.a_coords.len() + m != n || p.a_coords.iter().any(|&a| a >= n) {
            return Err(GroupoidError::InvalidParams(
                "isotropy coordinates must complement the objects".into(),
            ));
        }
        let js_u = jac_along(&s, &p.u);
        if p.a_coords
            .iter()
            .any(|&a| js_u.iter().any(|row| !row[a].is_zero()))
        {
            return Err(GroupoidError::InvalidParams(
                "isotropy coordinates must span ker ds at the units".into(),
            ));
        }
        let g = CoordGroupoid {
            name: p.name,
            arrows: p.arrows,
            objects: p.objects,
            s,
            t,
            u: p.u,
            inv: p.inv,
            composable,
            mult,
            divided,
            div,
            triples,
            s_sel: p.s_sel,
            t_sel: p.t_sel,
            a_coords: p.a_coords,
            pair_chart: p.pair_chart,
        };
        let rep = g.check_axioms();
        if !rep.passed() {
            return Err(GroupoidError::Axioms(rep.failing().join(", ")));
        }
        Ok(g)
    }

    /// Submersion groupoid `M ×_B M ⇒ M` of the coordinate projection.
    /// Arrows are `(z, w, w_s)` with `t = (z, w)` and `s = (z, w_s)`.
    pub fn submersion(sub: &CoordSubmersion) -> Result<CoordGroupoid, GroupoidError> {
        let m = &sub.total;
        let (b, f) = (sub.base_dim(), sub.fiber_dim());
        let pair = fiber_by_selection(
            &format!("{}x{}", m.name(), m.name()),
            m,
            m.vars().to_vec(),
            m,
            "_s",
            &sub.base,
            sub.pi(),
            &(0..b).collect::<Vec<_>>(),
            sub.section(),
            sub.section(),
        )?;
        let arrows = pair.chart.clone();
        let n = b + 2 * f;
        let t_sel: Vec<usize> = (0..b + f).collect();
        let s_sel: Vec<usize> = (0..b).chain(b + f..n).collect();
        let u_comps = (0..n)
            .map(|i| ScalarFn::var(m, if i < b + f { i } else { i - f }))
            .collect();
        let u = PolyMap::new(m, &arrows, u_comps)?;
        let inv_idx: Vec<usize> = (0..b).chain(b + f..n).chain(b..b + f).collect();
        let inv = PolyMap::select(&arrows, &arrows, &inv_idx);
        let parts = Parts {
            name: format!("Sub({}->{})", m.name(), sub.base.name()),
            arrows: arrows.clone(),
            objects: m.clone(),
            s_sel,
            t_sel: t_sel.clone(),
            u,
            inv,
            a_coords: (b..b + f).collect(),
            pair_chart: Some(pair),
        };
        CoordGroupoid::assemble(parts, |comp| {
            // t-coordinates from the left factor, the rest from the right one.
            let comps = (0..n)
                .map(|k| {
                    if t_sel.contains(&k) {
                        ScalarFn::var(&comp.chart, k)
                    } else {
                        comp.embed.comp(n + k).clone()
                    }
                })
                .collect();
            Ok(PolyMap::new(&comp.chart, &arrows, comps)?)
        })
    }

    /// Pair groupoid `M × M ⇒ M`, arrows `(x, x_s)` with `t = x`, `s = x_s`.
    pub fn pair(m: &ChartRef) -> Result<CoordGroupoid, GroupoidError> {
        let mut g = CoordGroupoid::submersion(&CoordSubmersion::new(m, 0)?)?;
        g.name = format!("Pair({})", m.name());
        Ok(g)
    }

    /// A Lie group over a point. `mult` is given on any chart of dimension `2n`
    /// whose first `n` coordinates are the left factor.
    pub fn group(
        name: &str,
        chart: &ChartRef,
        mult: &PolyMap,
        inv: &PolyMap,
        unit: &[Rat],
        a_coords: Vec<usize>,
    ) -> Result<CoordGroupoid, GroupoidError> {
        let n = chart.dim();
        if mult.source().dim() != 2 * n || mult.target().dim() != n || unit.len() != n {
            return Err(GroupoidError::InvalidParams(
                "group data has the wrong dimensions".into(),
            ));
        }
        let pt = Chart::from_names("pt", &[]);
        let u = PolyMap::new(
            &pt,
            chart,
            unit.iter()
                .map(|c| ScalarFn::constant(&pt, c.clone()))
                .collect(),
        )?;
        let parts = Parts {
            name: name.into(),
            arrows: chart.clone(),
            objects: pt,
            s_sel: vec![],
            t_sel: vec![],
            u,
            inv: inv.with_charts(chart, chart),
            a_coords,
            pair_chart: None,
        };
        let chart = chart.clone();
        CoordGroupoid::assemble(parts, |comp| Ok(mult.with_charts(&comp.chart, &chart)))
    }

    /// `(ℝⁿ, +)` with coordinates `g1..gn`.
    pub fn abelian_group(n: usize) -> Result<CoordGroupoid, GroupoidError> {
        let chart = Chart::numbered(&format!("R{n}"), "g", n);
        let pair = Chart::product(&chart, &chart);
        let mult = PolyMap::new(
            &pair,
            &chart,
            (0..n)
                .map(|i| ScalarFn::var(&pair, i) + ScalarFn::var(&pair, n + i))
                .collect(),
        )?;
        let inv = PolyMap::new(
            &chart,
            &chart,
            (0..n).map(|i| -ScalarFn::var(&chart, i)).collect(),
        )?;
        CoordGroupoid::group(
            &format!("R{n}"),
            &chart,
            &mult,
            &inv,
            &vec![Rat::zero(); n],
            (0..n).collect(),
        )
    }

    /// The Heisenberg group on `(a, b, c)`; `A` is framed by `∂c, ∂b, ∂a`.
    pub fn heisenberg() -> Result<CoordGroupoid, GroupoidError> {
        let h = heisenberg_group();
        CoordGroupoid::group(
            "Heis",
            &h.chart,
            &h.mult,
            &h.inverse,
            &[Rat::zero(), Rat::zero(), Rat::zero()],
            vec![2, 1, 0],
        )
    }

    pub fn s_selection(&self) -> &[usize] {
        &self.s_sel
    }

    pub fn t_selection(&self) -> &[usize] {
        &self.t_sel
    }

    /// Coordinates of `G` whose coordinate vectors at the units frame `A = ker ds`.
    pub fn isotropy_coords(&self) -> &[usize] {
        &self.a_coords
    }

    pub fn rank(&self) -> usize {
        self.a_coords.len()
    }

    /// `M ×_B M` as a fiber product, for submersion groupoids.
    pub fn pair_chart(&self) -> Option<&FiberedChart> {
        self.pair_chart.as_ref()
    }

    /// Level `k` of the nerve of `G ⋉ G ⇒ G`: objects, arrows, pairs, triples.
    pub fn level_chart(&self, k: usize) -> &ChartRef {
        match k {
            0 => &self.objects,
            1 => &self.arrows,
            2 => &self.divided.chart,
            3 => &self.triples.chart,
            _ => panic!("nerve level {k} is not built"),
        }
    }

    /// `pr_i: G^{[k]} → G` for `i = 1..k`.
    pub fn projections(&self, k: usize) -> Vec<PolyMap> {
        match k {
            1 => vec![PolyMap::identity(&self.arrows)],
            2 => vec![self.divided.pr1(), self.divided.pr2()],
            3 => {
                let p = self.triples.pr1();
                vec![
                    self.divided.pr1().compose(&p),
                    self.divided.pr2().compose(&p),
                    self.triples.pr2(),
                ]
            }
            _ => panic!("nerve level {k} is not built"),
        }
    }

    /// `(f_1, …, f_k)` into `G^{[k]}` for maps with equal sources.
    pub fn tuple(&self, maps: &[PolyMap]) -> Result<PolyMap, GroupoidError> {
        match maps {
            [f] => Ok(f.clone()),
            [f, g] => into_fibered(&self.divided, f, g),
            [f, g, h] => into_fibered(&self.triples, &into_fibered(&self.divided, f, g)?, h),
            _ => Err(GroupoidError::Precondition(format!(
                "tuples of length {} are not built",
                maps.len()
            ))),
        }
    }

    /// `(g, h) ↦ (g, h)` into `G^{(2)}` for `s ∘ f = t ∘ g`.
    pub fn into_composable(&self, f: &PolyMap, g: &PolyMap) -> Result<PolyMap, GroupoidError> {
        into_fibered(&self.composable, f, g)
    }

    /// `ε₁(g) = (u(t g), g)` and `ε₂(g) = (g, u(s g))` into `G^{(2)}`.
    pub fn epsilons(&self) -> Result<(PolyMap, PolyMap), GroupoidError> {
        let id = PolyMap::identity(&self.arrows);
        let e1 = self.into_composable(&self.u.compose(&self.t), &id)?;
        let e2 = self.into_composable(&id, &self.u.compose(&self.s))?;
        Ok((e1, e2))
    }

    /// Unit, source/target, associativity, inverse and division laws.
    pub fn check_axioms(&self) -> DefectReport {
        let mut rep = DefectReport::new();
        let id_m = PolyMap::identity(&self.objects);
        let id_g = PolyMap::identity(&self.arrows);
        rep.push(map_equation(
            "source_of_unit",
            &self.s.compose(&self.u),
            &id_m,
        ));
        rep.push(map_equation(
            "target_of_unit",
            &self.t.compose(&self.u),
            &id_m,
        ));
        let (p1, p2) = (self.composable.pr1(), self.composable.pr2());
        rep.push(map_equation(
            "source_of_product",
            &self.s.compose(&self.mult),
            &self.s.compose(&p2),
        ));
        rep.push(map_equation(
            "target_of_product",
            &self.t.compose(&self.mult),
            &self.t.compose(&p1),
        ));
        rep.push(self.associativity());
        match self.epsilons() {
            Ok((e1, e2)) => {
                rep.push(map_equation("left_unit", &self.mult.compose(&e1), &id_g));
                rep.push(map_equation("right_unit", &self.mult.compose(&e2), &id_g));
            }
            Err(e) => rep.push(EquationDefect::from_failures(
                "unit_laws",
                1,
                vec![(e.to_string(), vec![ScalarFn::one(&self.arrows)])],
            )),
        }
        rep.push(map_equation(
            "inverse_involution",
            &self.inv.compose(&self.inv),
            &id_g,
        ));
        let inverse_laws = (|| -> Result<(PolyMap, PolyMap), GroupoidError> {
            let gi = self.into_composable(&id_g, &self.inv)?;
            let ig = self.into_composable(&self.inv, &id_g)?;
            Ok((self.mult.compose(&gi), self.mult.compose(&ig)))
        })();
        match inverse_laws {
            Ok((a, b)) => {
                rep.push(map_equation("right_inverse", &a, &self.u.compose(&self.t)));
                rep.push(map_equation("left_inverse", &b, &self.u.compose(&self.s)));
            }
            Err(e) => rep.push(EquationDefect::from_failures(
                "inverse_laws",
                1,
                vec![(e.to_string(), vec![ScalarFn::one(&self.arrows)])],
            )),
        }
        rep.push(map_equation(
            "source_of_division",
            &self.s.compose(&self.div),
            &self.t.compose(&self.divided.pr2()),
        ));
        rep.push(self.division_compatibility());
        rep
    }

    fn associativity(&self) -> EquationDefect {
        let res = (|| -> Result<(PolyMap, PolyMap), GroupoidError> {
            // G^{(3)} = G^{(2)} ×_{s∘pr₂,t} G.
            let names: Vec<String> = self.composable.chart.vars().to_vec();
            let trip = fiber_by_selection(
                &format!("{}3", self.name),
                &self.composable.chart,
                names,
                &self.arrows,
                "_3",
                &self.objects,
                self.s.compose(&self.composable.pr2()),
                &self.t_sel,
                self.into_composable(&self.u, &self.u)?,
                self.u.clone(),
            )?;
            let gh = trip.pr1();
            let (g, h, k) = (
                self.composable.pr1().compose(&gh),
                self.composable.pr2().compose(&gh),
                trip.pr2(),
            );
            let left = self
                .mult
                .compose(&self.into_composable(&self.mult.compose(&gh), &k)?);
            let hk = self.mult.compose(&self.into_composable(&h, &k)?);
            let right = self.mult.compose(&self.into_composable(&g, &hk)?);
            Ok((left, right))
        })();
        match res {
            Ok((l, r)) => map_equation("associativity", &l, &r),
            Err(e) => EquationDefect::from_failures(
                "associativity",
                1,
                vec![(e.to_string(), vec![ScalarFn::one(&self.arrows)])],
            ),
        }
    }

    /// `m̄(m̄(g₁, g₃), m̄(g₂, g₃)) = m̄(g₁, g₂)` on `G^{[3]}`.
    fn division_compatibility(&self) -> EquationDefect {
        let res = (|| -> Result<(PolyMap, PolyMap), GroupoidError> {
            let p = self.projections(3);
            let d13 = self
                .div
                .compose(&self.tuple(&[p[0].clone(), p[2].clone()])?);
            let d23 = self
                .div
                .compose(&self.tuple(&[p[1].clone(), p[2].clone()])?);
            let lhs = self.div.compose(&self.tuple(&[d13, d23])?);
            let rhs = self
                .div
                .compose(&self.tuple(&[p[0].clone(), p[1].clone()])?);
            Ok((lhs, rhs))
        })();
        match res {
            Ok((l, r)) => map_equation("division_compatibility", &l, &r),
            Err(e) => EquationDefect::from_failures(
                "division_compatibility",
                1,
                vec![(e.to_string(), vec![ScalarFn::one(&self.arrows)])],
            ),
        }
    }

    /// `∇ᴹ ×_M ∇ᴹ` restricted to the arrows of a submersion groupoid.
    pub fn restricted_product(
        &self,
        nabla_m: &ConnectionData,
    ) -> Result<ConnectionData, GroupoidError> {
        let fib = self.pair_chart.as_ref().ok_or_else(|| {
            GroupoidError::Precondition(format!("{} is not a submersion groupoid", self.name))
        })?;
        Ok(restrict_to_fibered(nabla_m, nabla_m, fib)?)
    }

    fn require_connection(&self, nabla: &ConnectionData) -> Result<(), GroupoidError> {
        if !nabla.is_tangent() || !Chart::same(nabla.base(), &self.arrows) {
            return Err(GroupoidError::Precondition(format!(
                "expected a tangent connection on the arrows chart {}",
                self.arrows.name()
            )));
        }
        Ok(())
    }
}

/// `ds ∘ T` restricted to the units: the candidate `(2,1)` tensor on `M`.
pub fn project_tensor(
    t: &TensorField,
    sigma: &PolyMap,
    section: &PolyMap,
) -> Result<TensorField, GroupoidError> {
    let js = sigma.jacobian();
    let pushed = push_last(&js, t.comps(), t.chart());
    Ok(TensorField::new(
        sigma.target(),
        2,
        1,
        pull_covariant(&pushed, 2, section),
    )?)
}

/// `dσ ∘ X` restricted to `section`.
fn project_vector_field(x: &VectorField, sigma: &PolyMap, section: &PolyMap) -> VectorField {
    let js = sigma.jacobian();
    let comps = js
        .iter()
        .map(|row| {
            let mut acc = ScalarFn::zero(x.chart());
            for (j, xi) in row.iter().zip(x.comps()) {
                if !j.is_zero() && !xi.is_zero() {
                    acc += &(j * xi);
                }
            }
            section.pull(&acc)
        })
        .collect();
    VectorField::new(sigma.target(), comps)
}

/// `T(M ×_B N)` as a fiber product `TM ×_{TB} TN`.
fn tangent_fibered(fib: &FiberedChart) -> Result<FiberedChart, GroupoidError> {
    let (a, b) = (fib.left.dim(), fib.right.dim());
    let tl = Chart::tangent(&fib.left);
    let tr = Chart::tangent(&fib.right);
    let tprod = Chart::product(&tl, &tr);
    let t_of_prod = Chart::tangent(&fib.product);
    // T(M × N) orders (x_M, x_N, ẋ_M, ẋ_N); TM × TN orders (x_M, ẋ_M, x_N, ẋ_N).
    let to_pairs: Vec<usize> = (0..a)
        .chain(a + b..2 * a + b)
        .chain(a..a + b)
        .chain(2 * a + b..2 * a + 2 * b)
        .collect();
    let from_pairs: Vec<usize> = (0..a)
        .chain(2 * a..2 * a + b)
        .chain(a..2 * a)
        .chain(2 * a + b..2 * a + 2 * b)
        .collect();
    let embed = PolyMap::select(&t_of_prod, &tprod, &to_pairs).compose(&tangent_map(&fib.embed));
    let retract =
        tangent_map(&fib.retract).compose(&PolyMap::select(&tprod, &t_of_prod, &from_pairs));
    Ok(FiberedChart::new(
        &Chart::tangent(&fib.chart),
        &tl,
        &tr,
        &Chart::tangent(&fib.base),
        embed,
        retract,
        tangent_map(&fib.sigma),
        tangent_map(&fib.tau),
        tangent_map(&fib.sigma_section),
        tangent_map(&fib.tau_section),
    )?)
}

/// The `s`-projection `∇ᴹ` of `∇` when `∇` is `s`-projectable.
pub fn s_projection(
    g: &CoordGroupoid,
    nabla: &ConnectionData,
) -> Result<Option<ConnectionData>, GroupoidError> {
    g.require_connection(nabla)?;
    let nm = project_connection(nabla, &g.s, &g.u);
    Ok(related_connections_defect(nabla, &nm, &g.s)
        .is_zero()
        .then_some(nm))
}

/// Whether `∇` is both `s`- and `t`-projectable to one connection `∇ᴹ`.
pub fn check_st_projectable(
    g: &CoordGroupoid,
    nabla: &ConnectionData,
) -> Result<(bool, Option<ConnectionData>), GroupoidError> {
    match s_projection(g, nabla)? {
        Some(nm) if related_connections_defect(nabla, &nm, &g.t).is_zero() => Ok((true, Some(nm))),
        _ => Ok((false, None)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct MultiplicativeCheck {
    /// `(s,t)`-projectable and `∇^{(2)}` is `m`-related to `∇`.
    pub route_m: bool,
    /// `s`-projectable and `∇^{[2]}` is `m̄`-related to `∇`.
    pub route_div: bool,
    /// Torsion and geodesic spray are multiplicative.
    pub route_spray: bool,
    pub agree: bool,
}

pub fn check_multiplicative(
    g: &CoordGroupoid,
    nabla: &ConnectionData,
) -> Result<MultiplicativeCheck, GroupoidError> {
    let (st, _) = check_st_projectable(g, nabla)?;
    let route_m = st && {
        let n2 = restrict_to_fibered(nabla, nabla, &g.composable)?;
        related_connections_defect(&n2, nabla, &g.mult).is_zero()
    };
    let route_div = s_projection(g, nabla)?.is_some() && {
        let n2 = restrict_to_fibered(nabla, nabla, &g.divided)?;
        related_connections_defect(&n2, nabla, &g.div).is_zero()
    };
    let route_spray = tensor_multiplicative(g, &torsion_of(nabla)?)?
        && spray_multiplicative(g, &geodesic_spray(nabla)?)?;
    Ok(MultiplicativeCheck {
        route_m,
        route_div,
        route_spray,
        agree: route_m == route_div && route_div == route_spray,
    })
}

/// A `(2,1)` tensor on `G` that is `s`- and `t`-related to one tensor on `M`
/// and whose restriction to `G^{(2)}` is `m`-related to itself.
pub fn tensor_multiplicative(g: &CoordGroupoid, t: &TensorField) -> Result<bool, GroupoidError> {
    if !Chart::same(t.chart(), &g.arrows) || t.valence() != (2, 1) {
        return Err(GroupoidError::Precondition(
            "expected a (2,1) tensor on the arrows chart".into(),
        ));
    }
    let tm = project_tensor(t, &g.s, &g.u)?;
    if !check_related_tensors(t, &tm, &g.s)?.related
        || !check_related_tensors(t, &tm, &g.t)?.related
    {
        return Ok(false);
    }
    let t2 = TensorField::new(
        &g.composable.chart,
        2,
        1,
        restrict_tensor(t, t, &g.composable).comps().clone(),
    )?;
    Ok(check_related_tensors(&t2, t, &g.mult)?.related)
}

/// A vector field on `TG` that is `ds`- and `dt`-related to one field on `TM`
/// and whose restriction to `TG^{(2)}` is `dm`-related to itself.
pub fn spray_multiplicative(g: &CoordGroupoid, z: &VectorField) -> Result<bool, GroupoidError> {
    let (ts, tt, tu) = (tangent_map(&g.s), tangent_map(&g.t), tangent_map(&g.u));
    let zm = project_vector_field(z, &ts, &tu);
    if vector_fields_defect(z, &zm, &ts)
        .iter()
        .any(|d| !d.is_zero())
        || vector_fields_defect(z, &zm, &tt)
            .iter()
            .any(|d| !d.is_zero())
    {
        return Ok(false);
    }
    let tfib = tangent_fibered(&g.composable)?;
    let z2 = restrict_vector_field(z, z, &tfib);
    Ok(vector_fields_defect(&z2, z, &tangent_map(&g.mult))
        .iter()
        .all(|d| d.is_zero()))
}

/// Conditions for a multiplicative `∇` to come from a connection on the
/// simplicial manifold: `u`, `ε₁`, `ε₂` and `i` relatedness.
pub fn check_simpl_conn(
    g: &CoordGroupoid,
    nabla: &ConnectionData,
) -> Result<DefectReport, GroupoidError> {
    if !check_multiplicative(g, nabla)?.route_m {
        return Err(GroupoidError::Precondition(
            "connection is not multiplicative".into(),
        ));
    }
    let nm = s_projection(g, nabla)?.expect("multiplicative connections are s-projectable");
    let n2 = restrict_to_fibered(nabla, nabla, &g.composable)?;
    let (e1, e2) = g.epsilons()?;
    let mut rep = DefectReport::new();
    rep.push(array_equation(
        "unit_related",
        &[&related_connections_defect(&nm, nabla, &g.u)],
    ));
    rep.push(array_equation(
        "eps1_related",
        &[&related_connections_defect(nabla, &n2, &e1)],
    ));
    rep.push(array_equation(
        "eps2_related",
        &[&related_connections_defect(nabla, &n2, &e2)],
    ));
    rep.push(array_equation(
        "inverse_related",
        &[&related_connections_defect(nabla, nabla, &g.inv)],
    ));
    Ok(rep)
}

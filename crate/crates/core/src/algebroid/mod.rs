//! Lie algebroids on a single chart with a global frame.

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{lift_to_tangent, VectorField};
use crate::report::{DefectReport, EquationDefect};
use crate::symkernel::{monomials_up_to, Chart, ChartRef, Rat, ScalarFn};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebroidError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("structure functions not antisymmetric at c^{k}_{{{i}{j}}}")]
    NotSkew { i: usize, j: usize, k: usize },
    #[error("vector field is not linear: {0}")]
    NotLinear(String),
}

/// Section `a = a^i e_i` in the global frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionExpr {
    chart: ChartRef,
    coeffs: Vec<ScalarFn>,
}

impl SectionExpr {
    pub fn new(chart: &ChartRef, coeffs: Vec<ScalarFn>) -> SectionExpr {
        assert!(
            coeffs.iter().all(|c| Chart::same(c.chart(), chart)),
            "section coefficients on wrong chart"
        );
        SectionExpr {
            chart: chart.clone(),
            coeffs,
        }
    }

    pub fn zero(chart: &ChartRef, rank: usize) -> SectionExpr {
        SectionExpr {
            chart: chart.clone(),
            coeffs: vec![ScalarFn::zero(chart); rank],
        }
    }

    pub fn frame(chart: &ChartRef, rank: usize, i: usize) -> SectionExpr {
        let mut s = SectionExpr::zero(chart, rank);
        s.coeffs[i] = ScalarFn::one(chart);
        s
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn rank(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[ScalarFn] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> &ScalarFn {
        &self.coeffs[i]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, o: &SectionExpr) -> SectionExpr {
        SectionExpr {
            chart: self.chart.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&o.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, o: &SectionExpr) -> SectionExpr {
        SectionExpr {
            chart: self.chart.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&o.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, c: &Rat) -> SectionExpr {
        SectionExpr {
            chart: self.chart.clone(),
            coeffs: self.coeffs.iter().map(|a| a.scale(c)).collect(),
        }
    }

    pub fn mul_fn(&self, f: &ScalarFn) -> SectionExpr {
        SectionExpr {
            chart: self.chart.clone(),
            coeffs: self.coeffs.iter().map(|a| a * f).collect(),
        }
    }

    pub fn into_coeffs(self) -> Vec<ScalarFn> {
        self.coeffs
    }
}

/// `(A ⇒ M, ρ, [·,·])` with `ρ(e_i) = ρ^μ_i ∂_μ` and `[e_i, e_j] = c^k_{ij} e_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebroidData {
    base: ChartRef,
    rank: usize,
    /// `anchor[i][μ]`.
    anchor: Vec<Vec<ScalarFn>>,
    /// `c^k_{ij}` at `(i * rank + j) * rank + k`.
    structure: Vec<ScalarFn>,
}

impl AlgebroidData {
    pub fn new(
        base: &ChartRef,
        rank: usize,
        anchor: Vec<Vec<ScalarFn>>,
        structure: Vec<ScalarFn>,
    ) -> Result<AlgebroidData, AlgebroidError> {
        let n = base.dim();
        if anchor.len() != rank || anchor.iter().any(|row| row.len() != n) {
            return Err(AlgebroidError::Shape(format!("anchor must be {rank}×{n}")));
        }
        if structure.len() != rank * rank * rank {
            return Err(AlgebroidError::Shape(format!(
                "structure needs {} entries",
                rank * rank * rank
            )));
        }
        if anchor
            .iter()
            .flatten()
            .chain(&structure)
            .any(|f| !Chart::same(f.chart(), base))
        {
            return Err(AlgebroidError::Shape(
                "algebroid data must live on the base chart".into(),
            ));
        }
        let a = AlgebroidData {
            base: base.clone(),
            rank,
            anchor,
            structure,
        };
        for i in 0..rank {
            for j in i..rank {
                for k in 0..rank {
                    if a.c(i, j, k) != &-a.c(j, i, k) {
                        return Err(AlgebroidError::NotSkew { i, j, k });
                    }
                }
            }
        }
        Ok(a)
    }

    /// Builds from a function `(i, j) ↦ [e_i, e_j]` evaluated for `i < j`.
    pub fn from_brackets<F>(
        base: &ChartRef,
        rank: usize,
        anchor: Vec<Vec<ScalarFn>>,
        mut br: F,
    ) -> Result<AlgebroidData, AlgebroidError>
    where
        F: FnMut(usize, usize) -> Vec<ScalarFn>,
    {
        let mut structure = vec![ScalarFn::zero(base); rank * rank * rank];
        for i in 0..rank {
            for j in i + 1..rank {
                let v = br(i, j);
                for (k, x) in v.into_iter().enumerate() {
                    structure[(j * rank + i) * rank + k] = -&x;
                    structure[(i * rank + j) * rank + k] = x;
                }
            }
        }
        AlgebroidData::new(base, rank, anchor, structure)
    }

    /// `TM ⇒ M` with the coordinate frame.
    pub fn tangent(base: &ChartRef) -> AlgebroidData {
        let n = base.dim();
        let anchor = (0..n)
            .map(|i| {
                (0..n)
                    .map(|mu| {
                        if i == mu {
                            ScalarFn::one(base)
                        } else {
                            ScalarFn::zero(base)
                        }
                    })
                    .collect()
            })
            .collect();
        AlgebroidData::new(base, n, anchor, vec![ScalarFn::zero(base); n * n * n]).unwrap()
    }

    /// Zero anchor and zero bracket.
    pub fn zero(base: &ChartRef, rank: usize) -> AlgebroidData {
        let n = base.dim();
        AlgebroidData::new(
            base,
            rank,
            vec![vec![ScalarFn::zero(base); n]; rank],
            vec![ScalarFn::zero(base); rank * rank * rank],
        )
        .unwrap()
    }

    /// Lie algebra with constant structure constants over `base`.
    pub fn lie_algebra(
        base: &ChartRef,
        rank: usize,
        consts: &[Rat],
    ) -> Result<AlgebroidData, AlgebroidError> {
        let n = base.dim();
        let structure = consts
            .iter()
            .map(|c| ScalarFn::constant(base, c.clone()))
            .collect();
        AlgebroidData::new(
            base,
            rank,
            vec![vec![ScalarFn::zero(base); n]; rank],
            structure,
        )
    }

    pub fn base(&self) -> &ChartRef {
        &self.base
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn anchor(&self, i: usize, mu: usize) -> &ScalarFn {
        &self.anchor[i][mu]
    }

    pub fn anchor_rows(&self) -> &[Vec<ScalarFn>] {
        &self.anchor
    }

    pub fn c(&self, i: usize, j: usize, k: usize) -> &ScalarFn {
        &self.structure[(i * self.rank + j) * self.rank + k]
    }

    pub fn structure(&self) -> &[ScalarFn] {
        &self.structure
    }

    pub fn frame(&self, i: usize) -> SectionExpr {
        SectionExpr::frame(&self.base, self.rank, i)
    }

    pub fn zero_section(&self) -> SectionExpr {
        SectionExpr::zero(&self.base, self.rank)
    }

    /// `ρ(a)`.
    pub fn anchor_of(&self, a: &SectionExpr) -> VectorField {
        let comps = (0..self.dim())
            .map(|mu| {
                let mut acc = ScalarFn::zero(&self.base);
                for (i, ai) in a.coeffs().iter().enumerate() {
                    if !ai.is_zero() && !self.anchor[i][mu].is_zero() {
                        acc += &(ai * &self.anchor[i][mu]);
                    }
                }
                acc
            })
            .collect();
        VectorField::new(&self.base, comps)
    }

    /// `X(a^k) e_k`, the derivative of the frame coefficients of `a`.
    pub fn apply_field(x: &VectorField, a: &SectionExpr) -> SectionExpr {
        SectionExpr::new(a.chart(), a.coeffs().iter().map(|c| x.apply(c)).collect())
    }

    /// `[a,b]^k = ρ(a)(b^k) − ρ(b)(a^k) + c^k_{ij} a^i b^j`.
    pub fn bracket(&self, a: &SectionExpr, b: &SectionExpr) -> SectionExpr {
        let ra = self.anchor_of(a);
        let rb = self.anchor_of(b);
        let r = self.rank;
        let mut out: Vec<ScalarFn> = (0..r)
            .map(|k| &ra.apply(b.coeff(k)) - &rb.apply(a.coeff(k)))
            .collect();
        for i in 0..r {
            if a.coeff(i).is_zero() {
                continue;
            }
            for j in 0..r {
                if b.coeff(j).is_zero() {
                    continue;
                }
                let ab = a.coeff(i) * b.coeff(j);
                for (k, o) in out.iter_mut().enumerate() {
                    let c = self.c(i, j, k);
                    if !c.is_zero() {
                        *o += &(c * &ab);
                    }
                }
            }
        }
        SectionExpr::new(&self.base, out)
    }

    /// Same base chart and rank.
    pub fn same_shape(&self, o: &AlgebroidData) -> bool {
        Chart::same(&self.base, &o.base) && self.rank == o.rank
    }
}

/// Free function form of [`AlgebroidData::bracket`].
pub fn bracket_sections(a: &AlgebroidData, x: &SectionExpr, y: &SectionExpr) -> SectionExpr {
    a.bracket(x, y)
}

/// Sections `m(x) e_i` for every monomial `m` of degree ≤ `degree`.
pub fn jet_family(chart: &ChartRef, rank: usize, degree: u32) -> Vec<SectionExpr> {
    let monos = monomials_up_to(chart.dim(), degree);
    let mut out = Vec::with_capacity(monos.len() * rank);
    for m in &monos {
        let f = ScalarFn::monomial(chart, m, Rat::one());
        for i in 0..rank {
            out.push(SectionExpr::frame(chart, rank, i).mul_fn(&f));
        }
    }
    out
}

/// Anchor-morphism and Jacobi defects on frame pairs and triples.
pub fn check_algebroid(a: &AlgebroidData) -> DefectReport {
    let r = a.rank;
    let frame: Vec<SectionExpr> = (0..r).map(|i| a.frame(i)).collect();
    let pairs: Vec<(usize, usize)> = (0..r)
        .flat_map(|i| (i + 1..r).map(move |j| (i, j)))
        .collect();
    let brackets: Vec<SectionExpr> = (0..r * r)
        .map(|ij| a.bracket(&frame[ij / r], &frame[ij % r]))
        .collect();
    let anchors: Vec<VectorField> = frame.iter().map(|e| a.anchor_of(e)).collect();
    let morph = pairs
        .par_iter()
        .map(|&(i, j)| {
            let d = a
                .anchor_of(&brackets[i * r + j])
                .sub(&anchors[i].bracket(&anchors[j]));
            (format!("e{},e{}", i + 1, j + 1), d.into_comps())
        })
        .collect();
    let triples: Vec<(usize, usize, usize)> = (0..r)
        .flat_map(|i| (i + 1..r).flat_map(move |j| (j + 1..r).map(move |k| (i, j, k))))
        .collect();
    let jac = triples
        .par_iter()
        .map(|&(i, j, k)| {
            let t1 = a.bracket(&frame[i], &brackets[j * r + k]);
            let t2 = a.bracket(&frame[j], &brackets[k * r + i]);
            let t3 = a.bracket(&frame[k], &brackets[i * r + j]);
            (
                format!("e{},e{},e{}", i + 1, j + 1, k + 1),
                t1.add(&t2).add(&t3).into_coeffs(),
            )
        })
        .collect();
    let mut rep = DefectReport::new();
    rep.push(EquationDefect::from_results("anchor morphism", morph));
    rep.push(EquationDefect::from_results("Jacobi identity", jac));
    rep
}

/// `ẋ^ν ∂_ν f` on the tangent chart.
pub fn dot_lift(f: &ScalarFn, tm: &ChartRef) -> ScalarFn {
    let n = f.chart().dim();
    let mut acc = ScalarFn::zero(tm);
    for nu in 0..n {
        let d = f.diff(nu);
        if !d.is_zero() {
            acc += &(&lift_to_tangent(&d, tm) * &ScalarFn::var(tm, n + nu));
        }
    }
    acc
}

/// `TA ⇒ TM` on the chart `(x, ẋ)` with frame `Te_1..Te_r, ê_1..ê_r`.
pub fn tangent_prolongation(a: &AlgebroidData) -> AlgebroidData {
    let n = a.dim();
    let r = a.rank;
    let tm = Chart::tangent(&a.base);
    let lift = |f: &ScalarFn| lift_to_tangent(f, &tm);
    let mut anchor = Vec::with_capacity(2 * r);
    for i in 0..r {
        let mut row: Vec<ScalarFn> = (0..n).map(|mu| lift(&a.anchor[i][mu])).collect();
        row.extend((0..n).map(|mu| dot_lift(&a.anchor[i][mu], &tm)));
        anchor.push(row);
    }
    for i in 0..r {
        let mut row = vec![ScalarFn::zero(&tm); n];
        row.extend((0..n).map(|mu| lift(&a.anchor[i][mu])));
        anchor.push(row);
    }
    let rr = 2 * r;
    let structure = (0..rr * rr * rr)
        .map(|ix| {
            let (i, j, k) = (ix / (rr * rr), (ix / rr) % rr, ix % rr);
            match (i < r, j < r, k < r) {
                (true, true, true) => lift(a.c(i, j, k)),
                (true, true, false) => dot_lift(a.c(i, j, k - r), &tm),
                (true, false, false) => lift(a.c(i, j - r, k - r)),
                (false, true, false) => lift(a.c(i - r, j, k - r)),
                _ => ScalarFn::zero(&tm),
            }
        })
        .collect();
    AlgebroidData::new(&tm, rr, anchor, structure).expect("prolongation of a valid algebroid")
}

/// Tangent lift `T(a) = a^i Te_i + ẋ(a^i) ê_i` as a section of `TA ⇒ TM`.
pub fn tangent_lift_section(a: &SectionExpr, tm: &ChartRef) -> SectionExpr {
    let mut c: Vec<ScalarFn> = a.coeffs().iter().map(|f| lift_to_tangent(f, tm)).collect();
    c.extend(a.coeffs().iter().map(|f| dot_lift(f, tm)));
    SectionExpr::new(tm, c)
}

/// Core lift `â = a^i ê_i` as a section of `TA ⇒ TM`.
pub fn core_lift_section(a: &SectionExpr, tm: &ChartRef) -> SectionExpr {
    let mut c = vec![ScalarFn::zero(tm); a.rank()];
    c.extend(a.coeffs().iter().map(|f| lift_to_tangent(f, tm)));
    SectionExpr::new(tm, c)
}

/// Chart `(x, w)` on the total space of `A`, base variables first.
pub fn total_space_chart(a: &AlgebroidData) -> ChartRef {
    fiber_chart(a.base(), a.rank())
}

/// Chart `(x, w_1..w_rank)` over `base` with fresh fiber variable names.
pub fn fiber_chart(base: &ChartRef, rank: usize) -> ChartRef {
    let prefix = ["w", "u", "v", "fw"]
        .iter()
        .find(|p| (1..=rank).all(|i| base.var_index(&format!("{p}{i}")).is_none()))
        .copied()
        .unwrap_or("fiber_w");
    let mut vars: Vec<String> = base.vars().to_vec();
    vars.extend((1..=rank).map(|i| format!("{prefix}{i}")));
    Chart::new(format!("E{}", base.name()), vars).expect("fresh fiber variable names")
}

/// Linear vector field `σ^μ(x) ∂_μ + M^k_j(x) w^j ∂_{w^k}` on the total space of `A`.
#[derive(Clone, Debug)]
pub struct LinearVectorField {
    pub sigma: VectorField,
    /// `matrix[k][j] = M^k_j`.
    pub matrix: Vec<Vec<ScalarFn>>,
}

impl LinearVectorField {
    /// Splits a field on a chart whose first `dim M` variables are the base.
    pub fn from_field(
        a: &AlgebroidData,
        z: &VectorField,
    ) -> Result<LinearVectorField, AlgebroidError> {
        let n = a.dim();
        let r = a.rank;
        if z.chart().dim() != n + r {
            return Err(AlgebroidError::Shape(format!(
                "field lives on a chart of dim {}, expected {}",
                z.chart().dim(),
                n + r
            )));
        }
        let base_vars: Vec<usize> = (0..n).collect();
        let fiber: Vec<usize> = (n..n + r).collect();
        let mut sigma = Vec::with_capacity(n);
        for mu in 0..n {
            match z.comp(mu).restrict(&a.base, &base_vars) {
                Some(f) => sigma.push(f),
                None => {
                    return Err(AlgebroidError::NotLinear(format!(
                        "base component {mu} depends on fiber variables"
                    )))
                }
            }
        }
        let mut matrix = vec![vec![ScalarFn::zero(&a.base); r]; r];
        for k in 0..r {
            for (key, coeff) in z.comp(n + k).split_by(&fiber) {
                let j = match key.iter().position(|&e| e == 1) {
                    Some(j) if key.iter().map(|&e| e as u32).sum::<u32>() == 1 => j,
                    _ => {
                        return Err(AlgebroidError::NotLinear(format!(
                            "fiber component {k} is not linear in the fiber"
                        )))
                    }
                };
                matrix[k][j] = coeff
                    .restrict(&a.base, &base_vars)
                    .expect("fiber variables split off");
            }
        }
        Ok(LinearVectorField {
            sigma: VectorField::new(&a.base, sigma),
            matrix,
        })
    }

    /// `(D a)^k = σ(a^k) − M^k_j a^j`, the vertical part of `[Z, a↑]`.
    pub fn derivation(&self, a: &SectionExpr) -> SectionExpr {
        let coeffs = (0..a.rank())
            .map(|k| {
                let mut acc = self.sigma.apply(a.coeff(k));
                for (j, aj) in a.coeffs().iter().enumerate() {
                    if !aj.is_zero() && !self.matrix[k][j].is_zero() {
                        acc -= &(&self.matrix[k][j] * aj);
                    }
                }
                acc
            })
            .collect();
        SectionExpr::new(a.chart(), coeffs)
    }
}

#[derive(Clone, Debug)]
pub struct ImVectorFieldReport {
    pub is_im: bool,
    pub linear: LinearVectorField,
    pub report: DefectReport,
}

/// IM test with the default 2-jet family.
pub fn check_im_vector_field(
    a: &AlgebroidData,
    z: &VectorField,
) -> Result<ImVectorFieldReport, AlgebroidError> {
    check_im_vector_field_at(a, z, 2)
}

/// Bracket-derivation and anchor defects of the derivation induced by `z`.
pub fn check_im_vector_field_at(
    a: &AlgebroidData,
    z: &VectorField,
    degree: u32,
) -> Result<ImVectorFieldReport, AlgebroidError> {
    let lin = LinearVectorField::from_field(a, z)?;
    let fam = jet_family(&a.base, a.rank, degree);
    let frame: Vec<SectionExpr> = (0..a.rank).map(|i| a.frame(i)).collect();
    let d_fam: Vec<SectionExpr> = fam.par_iter().map(|s| lin.derivation(s)).collect();
    let d_frame: Vec<SectionExpr> = frame.iter().map(|s| lin.derivation(s)).collect();
    let anchor = (0..fam.len())
        .into_par_iter()
        .map(|p| {
            let d = a
                .anchor_of(&d_fam[p])
                .sub(&lin.sigma.bracket(&a.anchor_of(&fam[p])));
            (format!("a={}", section_label(&fam[p])), d.into_comps())
        })
        .collect();
    let pairs: Vec<(usize, usize)> = (0..fam.len())
        .flat_map(|p| (0..a.rank).map(move |j| (p, j)))
        .collect();
    let deriv = pairs
        .par_iter()
        .map(|&(p, j)| {
            let (s, e) = (&fam[p], &frame[j]);
            let lhs = lin.derivation(&a.bracket(s, e));
            let rhs = a.bracket(&d_fam[p], e).add(&a.bracket(s, &d_frame[j]));
            (
                format!("a={}, b=e{}", section_label(s), j + 1),
                lhs.sub(&rhs).into_coeffs(),
            )
        })
        .collect();
    let mut report = DefectReport::new();
    report.push(EquationDefect::from_results("bracket derivation", deriv));
    report.push(EquationDefect::from_results("anchor compatibility", anchor));
    Ok(ImVectorFieldReport {
        is_im: report.passed(),
        linear: lin,
        report,
    })
}

/// Euler field `ẋ ∂_ẋ + ẇ ∂_ẇ` of `TA → A`, as a linear vector field on the
/// total space of `TA ⇒ TM` (chart of [`total_space_chart`] of the prolongation).
pub fn euler_field_of_prolongation(a: &AlgebroidData) -> (AlgebroidData, VectorField) {
    let ta = tangent_prolongation(a);
    let chart = total_space_chart(&ta);
    let n = a.dim();
    let r = a.rank;
    let mut comps = vec![ScalarFn::zero(&chart); n];
    comps.extend((0..n).map(|mu| ScalarFn::var(&chart, n + mu)));
    comps.extend((0..r).map(|_| ScalarFn::zero(&chart)));
    comps.extend((0..r).map(|k| ScalarFn::var(&chart, 2 * n + r + k)));
    (ta, VectorField::new(&chart, comps))
}

/// Compact label such as `x*y e2` for diagnostics.
pub fn section_label(s: &SectionExpr) -> String {
    let parts: Vec<String> = s
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| {
            if c.as_constant().is_some_and(|k| k.is_one()) {
                format!("e{}", i + 1)
            } else {
                format!("({c}) e{}", i + 1)
            }
        })
        .collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

#[cfg(test)]
mod tests;

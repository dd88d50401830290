//! IM connections and IM vector valued 2-forms in frame components.

use rayon::prelude::*;
use thiserror::Error;

use crate::algebroid::{
    check_algebroid, check_im_vector_field_at, fiber_chart, jet_family, section_label,
    tangent_prolongation, total_space_chart, AlgebroidData, AlgebroidError, ImVectorFieldReport,
    SectionExpr,
};
use crate::geometry::{
    geodesic_spray, lie_derivative_connection, lie_derivative_connection_on, torsion_of, CompArray,
    ConnectionData, GeomError, TensorField, VectorField,
};
use crate::report::{DefectReport, EquationDefect};
use crate::symkernel::{Chart, ChartRef, Rat, ScalarFn};

pub use crate::report::DefectReport as Report;

/// Default degree of the jet test family.
pub const DEFAULT_JET_DEGREE: u32 = 2;

#[derive(Debug, Error)]
pub enum ImError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("not fiber-wise linear: {0}")]
    NotFiberwiseLinear(String),
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Algebroid(#[from] AlgebroidError),
}

/// The four components `(𝓕, ∇ᴬ, ∇ᴹ, l)` of a fiber-wise linear connection
/// on `TA → A`, without reference to a bracket on `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnComponents {
    /// `F^k_{iμν}` at `[i][μ][ν][k]`: frame values of `𝓕`.
    pub f: CompArray,
    pub gamma_a: ConnectionData,
    pub gamma_m: ConnectionData,
    /// `l^k_{iν}` at `[i][ν][k]`.
    pub l: CompArray,
}

impl ConnComponents {
    pub fn new(
        f: CompArray,
        gamma_a: ConnectionData,
        gamma_m: ConnectionData,
        l: CompArray,
    ) -> Result<ConnComponents, ImError> {
        let n = gamma_m.dim();
        let r = gamma_a.rank();
        if !gamma_m.is_tangent() {
            return Err(ImError::Shape(
                "the base connection must live on the tangent bundle".into(),
            ));
        }
        if !Chart::same(gamma_a.base(), gamma_m.base()) {
            return Err(ImError::Shape(
                "the two connections live on different charts".into(),
            ));
        }
        if f.shape() != [r, n, n, r] || l.shape() != [r, n, r] {
            return Err(ImError::Shape(format!(
                "F must be {r}×{n}×{n}×{r} and l must be {r}×{n}×{r}"
            )));
        }
        if f.data()
            .iter()
            .chain(l.data())
            .any(|x| !Chart::same(x.chart(), gamma_m.base()))
        {
            return Err(ImError::Shape("component on the wrong chart".into()));
        }
        Ok(ConnComponents {
            f,
            gamma_a,
            gamma_m,
            l,
        })
    }

    /// Flat connections and vanishing `F`, `l`.
    pub fn zero(base: &ChartRef, rank: usize) -> ConnComponents {
        let n = base.dim();
        ConnComponents {
            f: CompArray::zeros(base, &[rank, n, n, rank]),
            gamma_a: ConnectionData::zero(base, rank),
            gamma_m: ConnectionData::flat_tangent(base),
            l: CompArray::zeros(base, &[rank, n, rank]),
        }
    }

    pub fn base(&self) -> &ChartRef {
        self.gamma_m.base()
    }

    pub fn dim(&self) -> usize {
        self.gamma_m.dim()
    }

    pub fn rank(&self) -> usize {
        self.gamma_a.rank()
    }

    /// `∇ᴬ_{∂_μ} a` for every `μ`.
    pub fn nabla_a(&self, a: &SectionExpr) -> Vec<SectionExpr> {
        (0..self.dim())
            .map(|mu| SectionExpr::new(self.base(), self.gamma_a.derivative_coord(mu, a.coeffs())))
            .collect()
    }

    /// `l(a)(∂_ν)` for every `ν`.
    pub fn l_of(&self, a: &SectionExpr) -> Vec<SectionExpr> {
        let (n, r) = (self.dim(), self.rank());
        (0..n)
            .map(|nu| {
                let coeffs = (0..r)
                    .map(|k| {
                        let mut acc = ScalarFn::zero(self.base());
                        for (i, ai) in a.coeffs().iter().enumerate() {
                            let l = self.l.get(&[i, nu, k]);
                            if !ai.is_zero() && !l.is_zero() {
                                acc += &(ai * l);
                            }
                        }
                        acc
                    })
                    .collect();
                SectionExpr::new(self.base(), coeffs)
            })
            .collect()
    }

    /// `𝓕(a)(∂_μ, ∂_ν)` at `μ n + ν`, extended from frame values by the
    /// second-order Leibniz rule
    /// `𝓕(fa) = f𝓕(a) + ∇ᴹdf ⊗ a + df ⊙ ∇ᴬa + df ⊗ l(a)`.
    pub fn calf(&self, a: &SectionExpr) -> Vec<SectionExpr> {
        let (n, r) = (self.dim(), self.rank());
        let base = self.base();
        let da: Vec<Vec<ScalarFn>> = a
            .coeffs()
            .iter()
            .map(|c| (0..n).map(|mu| c.diff(mu)).collect())
            .collect();
        let mut out = Vec::with_capacity(n * n);
        for mu in 0..n {
            for nu in 0..n {
                let coeffs = (0..r)
                    .map(|k| {
                        let mut acc = da[k][nu].diff(mu);
                        for lam in 0..n {
                            let g = self.gamma_m.g(mu, nu, lam);
                            if !g.is_zero() && !da[k][lam].is_zero() {
                                acc -= &(g * &da[k][lam]);
                            }
                        }
                        for i in 0..r {
                            let ai = a.coeff(i);
                            if !ai.is_zero() {
                                let f = self.f.get(&[i, mu, nu, k]);
                                if !f.is_zero() {
                                    acc += &(ai * f);
                                }
                            }
                            if !da[i][mu].is_zero() {
                                let t = self.gamma_a.g(nu, i, k) + self.l.get(&[i, nu, k]);
                                if !t.is_zero() {
                                    acc += &(&da[i][mu] * &t);
                                }
                            }
                            if !da[i][nu].is_zero() {
                                let g = self.gamma_a.g(mu, i, k);
                                if !g.is_zero() {
                                    acc += &(&da[i][nu] * g);
                                }
                            }
                        }
                        acc
                    })
                    .collect();
                out.push(SectionExpr::new(base, coeffs));
            }
        }
        out
    }

    /// Frame values `D^k_{iμν} = F^k_{iμν} − F^k_{iνμ}` of the IM torsion operator.
    pub fn torsion_frame_values(&self) -> CompArray {
        let (n, r) = (self.dim(), self.rank());
        CompArray::from_fn(&[r, n, n, r], |ix| {
            self.f.get(&[ix[0], ix[1], ix[2], ix[3]]) - self.f.get(&[ix[0], ix[2], ix[1], ix[3]])
        })
    }

    /// `(1 − t) self + t o`, entry by entry.
    pub fn affine(&self, o: &ConnComponents, t: &Rat) -> ConnComponents {
        let s = Rat::one() - t.clone();
        let mix = |x: &ScalarFn, y: &ScalarFn| &x.scale(&s) + &y.scale(t);
        let arr = |x: &CompArray, y: &CompArray| {
            CompArray::from_vec(
                x.shape(),
                x.data()
                    .iter()
                    .zip(y.data())
                    .map(|(a, b)| mix(a, b))
                    .collect(),
            )
        };
        let conn = |x: &ConnectionData, y: &ConnectionData| {
            ConnectionData::from_fn(x.base(), x.rank(), |m, b, c| {
                mix(x.g(m, b, c), y.g(m, b, c))
            })
        };
        ConnComponents {
            f: arr(&self.f, &o.f),
            gamma_a: conn(&self.gamma_a, &o.gamma_a),
            gamma_m: conn(&self.gamma_m, &o.gamma_m),
            l: arr(&self.l, &o.l),
        }
    }

    /// Component-wise difference, as a tuple of tensors.
    pub fn difference(&self, o: &ConnComponents) -> ComponentDifference {
        ComponentDifference {
            f: self.f.sub(&o.f),
            gamma_a: self.gamma_a.difference(&o.gamma_a),
            gamma_m: self.gamma_m.difference(&o.gamma_m),
            l: self.l.sub(&o.l),
        }
    }
}

/// Difference of two component tuples: every entry is tensorial.
#[derive(Clone, Debug)]
pub struct ComponentDifference {
    pub f: CompArray,
    pub gamma_a: CompArray,
    pub gamma_m: CompArray,
    pub l: CompArray,
}

/// Components together with the algebroid they are meant for.
#[derive(Clone, Debug, PartialEq)]
pub struct IMConnComponents {
    pub algebroid: AlgebroidData,
    pub comps: ConnComponents,
}

impl IMConnComponents {
    pub fn new(
        algebroid: AlgebroidData,
        comps: ConnComponents,
    ) -> Result<IMConnComponents, ImError> {
        if !Chart::same(algebroid.base(), comps.base()) || algebroid.rank() != comps.rank() {
            return Err(ImError::Shape(
                "components do not match the algebroid".into(),
            ));
        }
        Ok(IMConnComponents { algebroid, comps })
    }

    pub fn zero(algebroid: &AlgebroidData) -> IMConnComponents {
        IMConnComponents {
            comps: ConnComponents::zero(algebroid.base(), algebroid.rank()),
            algebroid: algebroid.clone(),
        }
    }
}

/// Components `(𝓓, l, 𝒯ᴹ)` of a linear vector valued 2-form on `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormComponents {
    /// `D^k_{iμν}` at `[i][μ][ν][k]`, skew in `μν`.
    pub d: CompArray,
    pub l: CompArray,
    pub tm: TensorField,
}

impl FormComponents {
    pub fn new(d: CompArray, l: CompArray, tm: TensorField) -> Result<FormComponents, ImError> {
        let n = tm.chart().dim();
        let r = l.shape().first().copied().unwrap_or(0);
        if tm.valence() != (2, 1) || d.shape() != [r, n, n, r] || l.shape() != [r, n, r] {
            return Err(ImError::Shape(
                "form components have inconsistent shapes".into(),
            ));
        }
        for i in 0..r {
            for mu in 0..n {
                for nu in 0..n {
                    for k in 0..r {
                        if d.get(&[i, mu, nu, k]) != &-d.get(&[i, nu, mu, k]) {
                            return Err(ImError::Shape(format!(
                                "D is not skew at e{} (d{mu}, d{nu})",
                                i + 1
                            )));
                        }
                    }
                }
            }
        }
        Ok(FormComponents { d, l, tm })
    }

    pub fn zero(base: &ChartRef, rank: usize) -> FormComponents {
        let n = base.dim();
        FormComponents {
            d: CompArray::zeros(base, &[rank, n, n, rank]),
            l: CompArray::zeros(base, &[rank, n, rank]),
            tm: TensorField::zero(base, 2, 1),
        }
    }

    pub fn base(&self) -> &ChartRef {
        self.tm.chart()
    }

    pub fn dim(&self) -> usize {
        self.base().dim()
    }

    pub fn rank(&self) -> usize {
        self.l.shape()[0]
    }

    fn l_of(&self, a: &SectionExpr) -> Vec<SectionExpr> {
        contract_frame(self.base(), &self.l, a, self.dim())
    }

    /// `𝓓(a)(∂_μ, ∂_ν)` at `μ n + ν`, extended by
    /// `𝓓(fa) = f𝓓(a) + df ∧ l(a) − ⟨df, 𝒯ᴹ⟩ a`.
    pub fn cald(&self, a: &SectionExpr) -> Vec<SectionExpr> {
        let (n, r) = (self.dim(), self.rank());
        let base = self.base();
        let da: Vec<Vec<ScalarFn>> = a
            .coeffs()
            .iter()
            .map(|c| (0..n).map(|mu| c.diff(mu)).collect())
            .collect();
        let mut out = Vec::with_capacity(n * n);
        for mu in 0..n {
            for nu in 0..n {
                let coeffs = (0..r)
                    .map(|k| {
                        let mut acc = ScalarFn::zero(base);
                        for lam in 0..n {
                            let t = self.tm.get(&[mu, nu, lam]);
                            if !t.is_zero() && !da[k][lam].is_zero() {
                                acc -= &(t * &da[k][lam]);
                            }
                        }
                        for i in 0..r {
                            let ai = a.coeff(i);
                            if !ai.is_zero() {
                                let d = self.d.get(&[i, mu, nu, k]);
                                if !d.is_zero() {
                                    acc += &(ai * d);
                                }
                            }
                            let lnu = self.l.get(&[i, nu, k]);
                            if !da[i][mu].is_zero() && !lnu.is_zero() {
                                acc += &(&da[i][mu] * lnu);
                            }
                            let lmu = self.l.get(&[i, mu, k]);
                            if !da[i][nu].is_zero() && !lmu.is_zero() {
                                acc -= &(&da[i][nu] * lmu);
                            }
                        }
                        acc
                    })
                    .collect();
                out.push(SectionExpr::new(base, coeffs));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IMFormComponents {
    pub algebroid: AlgebroidData,
    pub comps: FormComponents,
}

/// `a^i x[i][ν][k]` for every `ν`.
fn contract_frame(base: &ChartRef, x: &CompArray, a: &SectionExpr, n: usize) -> Vec<SectionExpr> {
    let r = a.rank();
    (0..n)
        .map(|nu| {
            let coeffs = (0..r)
                .map(|k| {
                    let mut acc = ScalarFn::zero(base);
                    for (i, ai) in a.coeffs().iter().enumerate() {
                        let v = x.get(&[i, nu, k]);
                        if !ai.is_zero() && !v.is_zero() {
                            acc += &(ai * v);
                        }
                    }
                    acc
                })
                .collect();
            SectionExpr::new(base, coeffs)
        })
        .collect()
}

/// `Σ_μ v^μ s_μ`.
fn contract(v: &VectorField, s: &[SectionExpr], base: &ChartRef, r: usize) -> SectionExpr {
    let mut coeffs = vec![ScalarFn::zero(base); r];
    for (mu, vm) in v.comps().iter().enumerate() {
        if vm.is_zero() {
            continue;
        }
        for (c, x) in coeffs.iter_mut().zip(s[mu].coeffs()) {
            if !x.is_zero() {
                *c += &(vm * x);
            }
        }
    }
    SectionExpr::new(base, coeffs)
}

/// Per-section data reused across every slot assignment.
struct Jet {
    s: SectionExpr,
    rho: VectorField,
    /// `∂_μ ρ(a)^λ` at `[μ][λ]`.
    drho: Vec<Vec<ScalarFn>>,
    label: String,
}

impl Jet {
    fn new(alg: &AlgebroidData, s: SectionExpr) -> Jet {
        let rho = alg.anchor_of(&s);
        let n = alg.dim();
        let drho = (0..n)
            .map(|mu| rho.comps().iter().map(|c| c.diff(mu)).collect())
            .collect();
        let label = section_label(&s);
        Jet {
            s,
            rho,
            drho,
            label,
        }
    }

    /// `(L_a S)` for an `A`-valued tensor with `p` coordinate slots stored
    /// row-major: `[a, S_{..}] + Σ_slots ∂_{slot}ρ(a)^λ S_{..λ..}`.
    fn lie(&self, alg: &AlgebroidData, s: &[SectionExpr], p: usize) -> Vec<SectionExpr> {
        let n = alg.dim();
        let r = alg.rank();
        let total = n.pow(p as u32);
        (0..total)
            .map(|ix| {
                let mut acc = alg.bracket(&self.s, &s[ix]);
                let mut stride = 1;
                for _slot in 0..p {
                    let mu = (ix / stride) % n;
                    let base_ix = ix - mu * stride;
                    for lam in 0..n {
                        let d = &self.drho[mu][lam];
                        if d.is_zero() {
                            continue;
                        }
                        acc = acc.add(&s[base_ix + lam * stride].mul_fn(d));
                    }
                    stride *= n;
                }
                debug_assert_eq!(acc.rank(), r);
                acc
            })
            .collect()
    }
}

fn vec_label(chart: &ChartRef, mu: usize) -> String {
    format!("d{}", chart.vars()[mu])
}

fn require_algebroid(a: &AlgebroidData) -> Result<(), ImError> {
    let rep = check_algebroid(a);
    if rep.passed() {
        Ok(())
    } else {
        Err(ImError::Precondition(format!(
            "algebroid axioms fail: {}",
            rep.failing().join(", ")
        )))
    }
}

/// Section jets and their `∇ᴬ`, `l`, `𝓕` values.
struct ConnJet {
    j: Jet,
    nab: Vec<SectionExpr>,
    l: Vec<SectionExpr>,
    f: Vec<SectionExpr>,
    d: Vec<SectionExpr>,
}

fn conn_jets(c: &IMConnComponents, degree: u32) -> Vec<ConnJet> {
    let alg = &c.algebroid;
    let n = alg.dim();
    jet_family(alg.base(), alg.rank(), degree)
        .into_par_iter()
        .map(|s| {
            let f = c.comps.calf(&s);
            let d = antisymmetrize(&f, n);
            ConnJet {
                nab: c.comps.nabla_a(&s),
                l: c.comps.l_of(&s),
                f,
                d,
                j: Jet::new(alg, s),
            }
        })
        .collect()
}

fn antisymmetrize(f: &[SectionExpr], n: usize) -> Vec<SectionExpr> {
    (0..n * n)
        .map(|ix| f[ix].sub(&f[(ix % n) * n + ix / n]))
        .collect()
}

fn ordered_pairs(len: usize) -> Vec<(usize, usize)> {
    (0..len)
        .flat_map(|p| (0..len).map(move |q| (p, q)))
        .collect()
}

fn unordered_pairs(len: usize) -> Vec<(usize, usize)> {
    (0..len)
        .flat_map(|p| (p + 1..len).map(move |q| (p, q)))
        .collect()
}

type Failures = Vec<(String, Vec<ScalarFn>)>;

fn gather<I, F>(items: I, eval: F) -> (usize, Failures)
where
    I: IndexedParallelIterator,
    F: Fn(I::Item) -> Vec<(String, Vec<ScalarFn>)> + Sync + Send,
    I::Item: Send,
{
    let per: Vec<(usize, Failures)> = items
        .map(|it| {
            let rows = eval(it);
            let n = rows.len();
            (
                n,
                rows.into_iter()
                    .filter(|(_, v)| v.iter().any(|x| !x.is_zero()))
                    .collect(),
            )
        })
        .collect();
    let checked = per.iter().map(|p| p.0).sum();
    (checked, per.into_iter().flat_map(|p| p.1).collect())
}

/// IM-connection equations on the default jet family.
pub fn check_im_connection(c: &IMConnComponents) -> Result<DefectReport, ImError> {
    check_im_connection_at(c, DEFAULT_JET_DEGREE)
}

/// The four defining equations of an IM connection, each evaluated on the
/// jet family in every section slot and on coordinate fields in every
/// vector slot:
///
/// * `bracket_formula`: `[a,b] − ∇ᴬ_{ρa}b + ∇ᴬ_{ρb}a + ι_{ρb}l(a)`
/// * `lie_nablaA`: `(L_a∇ᴬ)(X,b) − 𝓕(a)(X,ρb)`
/// * `F_bracket`: `𝓕[a,b] − L_a𝓕(b) + L_b𝓕(a)`
/// * `l_bracket`: `l[a,b] − L_a l(b) + ι_{ρb}𝓓(a)`
pub fn check_im_connection_at(c: &IMConnComponents, degree: u32) -> Result<DefectReport, ImError> {
    require_algebroid(&c.algebroid)?;
    let alg = &c.algebroid;
    let base = alg.base();
    let (n, r) = (alg.dim(), alg.rank());
    let jets = conn_jets(c, degree);
    let ord = ordered_pairs(jets.len());

    let (checked, fails) = gather(ord.par_iter(), |&(p, q)| {
        let (a, b) = (&jets[p], &jets[q]);
        let lhs = alg.bracket(&a.j.s, &b.j.s);
        let rhs = contract(&a.j.rho, &b.nab, base, r)
            .sub(&contract(&b.j.rho, &a.nab, base, r))
            .sub(&contract(&b.j.rho, &a.l, base, r));
        vec![(
            format!("a={}, b={}", a.j.label, b.j.label),
            lhs.sub(&rhs).into_coeffs(),
        )]
    });
    let mut rep = DefectReport::new();
    rep.push(EquationDefect::from_failures(
        "bracket_formula",
        checked,
        fails,
    ));

    let (checked, fails) = gather(ord.par_iter(), |&(p, q)| {
        let (a, b) = (&jets[p], &jets[q]);
        let ab = alg.bracket(&a.j.s, &b.j.s);
        let nab_ab = c.comps.nabla_a(&ab);
        let lie_nab_b = a.j.lie(alg, &b.nab, 1);
        (0..n)
            .map(|mu| {
                let lhs = lie_nab_b[mu].sub(&nab_ab[mu]);
                let fa_mu: Vec<SectionExpr> = (0..n).map(|nu| a.f[mu * n + nu].clone()).collect();
                let rhs = contract(&b.j.rho, &fa_mu, base, r);
                (
                    format!(
                        "a={}, X={}, b={}",
                        a.j.label,
                        vec_label(base, mu),
                        b.j.label
                    ),
                    lhs.sub(&rhs).into_coeffs(),
                )
            })
            .collect()
    });
    rep.push(EquationDefect::from_failures("lie_nablaA", checked, fails));

    let un = unordered_pairs(jets.len());
    let (checked, fails) = gather(un.par_iter(), |&(p, q)| {
        let (a, b) = (&jets[p], &jets[q]);
        let f_ab = c.comps.calf(&alg.bracket(&a.j.s, &b.j.s));
        let la = a.j.lie(alg, &b.f, 2);
        let lb = b.j.lie(alg, &a.f, 2);
        (0..n * n)
            .map(|ix| {
                let d = f_ab[ix].sub(&la[ix]).add(&lb[ix]);
                let slots = format!(
                    "a={}, b={}, X={}, Y={}",
                    a.j.label,
                    b.j.label,
                    vec_label(base, ix / n),
                    vec_label(base, ix % n)
                );
                (slots, d.into_coeffs())
            })
            .collect()
    });
    rep.push(EquationDefect::from_failures("F_bracket", checked, fails));

    let (checked, fails) = gather(ord.par_iter(), |&(p, q)| {
        let (a, b) = (&jets[p], &jets[q]);
        let l_ab = c.comps.l_of(&alg.bracket(&a.j.s, &b.j.s));
        let la = a.j.lie(alg, &b.l, 1);
        (0..n)
            .map(|mu| {
                let da_mu: Vec<SectionExpr> = (0..n).map(|lam| a.d[lam * n + mu].clone()).collect();
                let iota = contract(&b.j.rho, &da_mu, base, r);
                let d = l_ab[mu].sub(&la[mu]).add(&iota);
                (
                    format!(
                        "a={}, b={}, X={}",
                        a.j.label,
                        b.j.label,
                        vec_label(base, mu)
                    ),
                    d.into_coeffs(),
                )
            })
            .collect()
    });
    rep.push(EquationDefect::from_failures("l_bracket", checked, fails));
    Ok(rep)
}

/// Identities implied by the IM-connection equations:
///
/// * `l_skew`: `ι_{ρa}l(b) + ι_{ρb}l(a)`
/// * `anchor_parallel`: `ρ(∇ᴬ_X a) − ∇ᴹ_X ρ(a)`
/// * `lie_nablaM`: `L_{ρa}∇ᴹ − ρ∘𝓕(a)`
pub fn derived_identities_check(c: &IMConnComponents) -> Result<DefectReport, ImError> {
    derived_identities_check_at(c, DEFAULT_JET_DEGREE)
}

pub fn derived_identities_check_at(
    c: &IMConnComponents,
    degree: u32,
) -> Result<DefectReport, ImError> {
    let pre = check_im_connection_at(c, degree)?;
    if !pre.passed() {
        return Err(ImError::Precondition(format!(
            "not an IM connection: {}",
            pre.failing().join(", ")
        )));
    }
    Ok(derived_identities_unchecked(c, degree))
}

/// Derived identities without the precondition, for diagnostics.
pub fn derived_identities_unchecked(c: &IMConnComponents, degree: u32) -> DefectReport {
    let alg = &c.algebroid;
    let base = alg.base();
    let (n, r) = (alg.dim(), alg.rank());
    let jets = conn_jets(c, degree);
    let mut rep = DefectReport::new();

    let (checked, fails) = gather(unordered_pairs(jets.len()).into_par_iter(), |(p, q)| {
        let (a, b) = (&jets[p], &jets[q]);
        let d = contract(&a.j.rho, &b.l, base, r).add(&contract(&b.j.rho, &a.l, base, r));
        vec![(format!("a={}, b={}", a.j.label, b.j.label), d.into_coeffs())]
    });
    rep.push(EquationDefect::from_failures("l_skew", checked, fails));

    let (checked, fails) = gather(jets.par_iter(), |a| {
        (0..n)
            .map(|mu| {
                let lhs = alg.anchor_of(&a.nab[mu]);
                let rhs = c.comps.gamma_m.derivative_coord(mu, a.j.rho.comps());
                let d: Vec<ScalarFn> = lhs.comps().iter().zip(&rhs).map(|(x, y)| x - y).collect();
                (format!("a={}, X={}", a.j.label, vec_label(base, mu)), d)
            })
            .collect()
    });
    rep.push(EquationDefect::from_failures(
        "anchor_parallel",
        checked,
        fails,
    ));

    let (checked, fails) = gather(jets.par_iter(), |a| {
        let lie =
            lie_derivative_connection(&a.j.rho, &c.comps.gamma_m).expect("tangent connection");
        (0..n * n)
            .map(|ix| {
                let rho_f = alg.anchor_of(&a.f[ix]);
                let d: Vec<ScalarFn> = (0..n)
                    .map(|lam| lie.get(&[ix / n, ix % n, lam]) - rho_f.comp(lam))
                    .collect();
                (
                    format!(
                        "a={}, X={}, Y={}",
                        a.j.label,
                        vec_label(base, ix / n),
                        vec_label(base, ix % n)
                    ),
                    d,
                )
            })
            .collect()
    });
    rep.push(EquationDefect::from_failures("lie_nablaM", checked, fails));
    rep
}

/// `(𝓓, l, Tᴹ)` with `𝓓` the antisymmetrization of `𝓕` in its two slots.
pub fn im_torsion(c: &IMConnComponents) -> Result<IMFormComponents, ImError> {
    let comps = FormComponents::new(
        c.comps.torsion_frame_values(),
        c.comps.l.clone(),
        torsion_of(&c.comps.gamma_m)?,
    )?;
    Ok(IMFormComponents {
        algebroid: c.algebroid.clone(),
        comps,
    })
}

pub fn check_im_form(f: &IMFormComponents) -> Result<DefectReport, ImError> {
    check_im_form_at(f, DEFAULT_JET_DEGREE)
}

/// IM equations of a vector valued 2-form:
///
/// * `D_bracket`: `𝓓[a,b] − L_a𝓓(b) + L_b𝓓(a)`
/// * `l_bracket`: `l[a,b] − L_a l(b) + ι_{ρb}𝓓(a)`
/// * `lie_torsion`: `L_{ρa}𝒯ᴹ − ρ∘𝓓(a)`
/// * `l_skew`: `ι_{ρa}l(b) + ι_{ρb}l(a)`
/// * `torsion_contraction`: `ι_{ρa}𝒯ᴹ − ρ∘l(a)`
///
/// plus `implication`, which fails if the first two vanish while
/// `lie_torsion` or `torsion_contraction` does not.
pub fn check_im_form_at(f: &IMFormComponents, degree: u32) -> Result<DefectReport, ImError> {
    require_algebroid(&f.algebroid)?;
    let alg = &f.algebroid;
    let fc = &f.comps;
    if !Chart::same(alg.base(), fc.base()) || alg.rank() != fc.rank() {
        return Err(ImError::Shape(
            "form components do not match the algebroid".into(),
        ));
    }
    let base = alg.base();
    let (n, r) = (alg.dim(), alg.rank());
    struct FormJet {
        j: Jet,
        l: Vec<SectionExpr>,
        d: Vec<SectionExpr>,
    }
    let jets: Vec<FormJet> = jet_family(base, r, degree)
        .into_par_iter()
        .map(|s| FormJet {
            l: fc.l_of(&s),
            d: fc.cald(&s),
            j: Jet::new(alg, s),
        })
        .collect();
    let mut rep = DefectReport::new();

    let (checked, fails) = gather(unordered_pairs(jets.len()).into_par_iter(), |(p, q)| {
        let (a, b) = (&jets[p], &jets[q]);
        let d_ab = fc.cald(&alg.bracket(&a.j.s, &b.j.s));
        let la = a.j.lie(alg, &b.d, 2);
        let lb = b.j.lie(alg, &a.d, 2);
        let mut out = Vec::new();
        for mu in 0..n {
            for nu in mu + 1..n {
                let ix = mu * n + nu;
                let d = d_ab[ix].sub(&la[ix]).add(&lb[ix]);
                out.push((
                    format!(
                        "a={}, b={}, X={}, Y={}",
                        a.j.label,
                        b.j.label,
                        vec_label(base, mu),
                        vec_label(base, nu)
                    ),
                    d.into_coeffs(),
                ));
            }
        }
        out
    });
    rep.push(EquationDefect::from_failures("D_bracket", checked, fails));

    let (checked, fails) = gather(ordered_pairs(jets.len()).into_par_iter(), |(p, q)| {
        let (a, b) = (&jets[p], &jets[q]);
        let l_ab = fc.l_of(&alg.bracket(&a.j.s, &b.j.s));
        let la = a.j.lie(alg, &b.l, 1);
        (0..n)
            .map(|mu| {
                let da_mu: Vec<SectionExpr> = (0..n).map(|lam| a.d[lam * n + mu].clone()).collect();
                let d = l_ab[mu]
                    .sub(&la[mu])
                    .add(&contract(&b.j.rho, &da_mu, base, r));
                (
                    format!(
                        "a={}, b={}, X={}",
                        a.j.label,
                        b.j.label,
                        vec_label(base, mu)
                    ),
                    d.into_coeffs(),
                )
            })
            .collect()
    });
    rep.push(EquationDefect::from_failures("l_bracket", checked, fails));

    let (checked, fails) = gather(jets.par_iter(), |a| {
        let lie = lie_tensor21(&a.j.rho, &fc.tm);
        (0..n * n)
            .filter(|ix| ix / n < ix % n)
            .map(|ix| {
                let rho_d = alg.anchor_of(&a.d[ix]);
                let d: Vec<ScalarFn> = (0..n)
                    .map(|lam| lie.get(&[ix / n, ix % n, lam]) - rho_d.comp(lam))
                    .collect();
                (
                    format!(
                        "a={}, X={}, Y={}",
                        a.j.label,
                        vec_label(base, ix / n),
                        vec_label(base, ix % n)
                    ),
                    d,
                )
            })
            .collect()
    });
    rep.push(EquationDefect::from_failures("lie_torsion", checked, fails));

    let (checked, fails) = gather(unordered_pairs(jets.len()).into_par_iter(), |(p, q)| {
        let (a, b) = (&jets[p], &jets[q]);
        let d = contract(&a.j.rho, &b.l, base, r).add(&contract(&b.j.rho, &a.l, base, r));
        vec![(format!("a={}, b={}", a.j.label, b.j.label), d.into_coeffs())]
    });
    rep.push(EquationDefect::from_failures("l_skew", checked, fails));

    let (checked, fails) = gather(jets.par_iter(), |a| {
        (0..n)
            .map(|mu| {
                let rho_l = alg.anchor_of(&a.l[mu]);
                let d: Vec<ScalarFn> = (0..n)
                    .map(|lam| {
                        let mut acc = -rho_l.comp(lam);
                        for (nu, x) in a.j.rho.comps().iter().enumerate() {
                            let t = fc.tm.get(&[nu, mu, lam]);
                            if !x.is_zero() && !t.is_zero() {
                                acc += &(x * t);
                            }
                        }
                        acc
                    })
                    .collect();
                (format!("a={}, X={}", a.j.label, vec_label(base, mu)), d)
            })
            .collect()
    });
    rep.push(EquationDefect::from_failures(
        "torsion_contraction",
        checked,
        fails,
    ));

    let premises = rep.passes("D_bracket") && rep.passes("l_bracket");
    let conclusions = rep.passes("lie_torsion") && rep.passes("torsion_contraction");
    let mut imp = EquationDefect::new("implication");
    let flag = if premises && !conclusions {
        ScalarFn::one(base)
    } else {
        ScalarFn::zero(base)
    };
    imp.record(|| "premises hold, conclusions fail".into(), vec![flag]);
    rep.push(imp);
    Ok(rep)
}

/// `(L_X T)(∂_μ, ∂_ν)` of a `(2,1)` tensor, stored `[μ][ν][λ]`.
pub fn lie_tensor21(x: &VectorField, t: &TensorField) -> CompArray {
    let chart = t.chart().clone();
    let n = chart.dim();
    CompArray::from_fn(&[n, n, n], |ix| {
        let (mu, nu, lam) = (ix[0], ix[1], ix[2]);
        let tv = VectorField::new(
            &chart,
            (0..n).map(|k| t.get(&[mu, nu, k]).clone()).collect(),
        );
        let mut acc = x.bracket(&tv).comp(lam).clone();
        for s in 0..n {
            let dmu = x.comp(s).diff(mu);
            if !dmu.is_zero() {
                acc += &(&dmu * t.get(&[s, nu, lam]));
            }
            let dnu = x.comp(s).diff(nu);
            if !dnu.is_zero() {
                acc += &(&dnu * t.get(&[mu, s, lam]));
            }
        }
        acc
    })
}

/// Connection on the total space `(x, w)` of `A` with components `c`:
/// `∇_{∂μ}∂ν = Γᴹ^λ_{μν}∂_λ + w^i F^j_{iμν}∂_j`, `∇_{∂μ}∂_i = Γᴬ^j_{μi}∂_j`,
/// `∇_{∂_i}∂_μ = (Γᴬ^j_{μi} + l^j_{iμ})∂_j`, `∇_{∂_i}∂_j = 0`.
pub fn fiberwise_linear_from_components(c: &ConnComponents) -> ConnectionData {
    let (n, r) = (c.dim(), c.rank());
    let chart = fiber_chart(c.base(), r);
    let emb: Vec<usize> = (0..n).collect();
    let up = |f: &ScalarFn| f.embed(&chart, &emb);
    ConnectionData::from_fn(&chart, n + r, |a, b, k| match (a < n, b < n, k < n) {
        (true, true, true) => up(c.gamma_m.g(a, b, k)),
        (true, true, false) => {
            let mut acc = ScalarFn::zero(&chart);
            for i in 0..r {
                let f = c.f.get(&[i, a, b, k - n]);
                if !f.is_zero() {
                    acc += &(&up(f) * &ScalarFn::var(&chart, n + i));
                }
            }
            acc
        }
        (true, false, false) => up(c.gamma_a.g(a, b - n, k - n)),
        (false, true, false) => up(&(c.gamma_a.g(b, a - n, k - n) + c.l.get(&[a - n, b, k - n]))),
        _ => ScalarFn::zero(&chart),
    })
}

/// Expected `w`-degree of a Christoffel entry `(a, b, k)` of a fiber-wise
/// linear connection: `Some(d)` for a homogeneous degree, `None` for zero.
fn linear_ansatz_degree(n: usize, a: usize, b: usize, k: usize) -> Option<u32> {
    match (a < n, b < n, k < n) {
        (true, true, true) => Some(0),
        (true, true, false) => Some(1),
        (true, false, false) | (false, true, false) => Some(0),
        _ => None,
    }
}

fn check_homogeneous(g: &ScalarFn, fiber: &[usize], deg: Option<u32>) -> bool {
    match deg {
        None => g.is_zero(),
        Some(d) => g
            .split_by(fiber)
            .iter()
            .all(|(e, _)| e.iter().map(|&x| x as u32).sum::<u32>() == d),
    }
}

/// Recovers `(𝓕, ∇ᴬ, ∇ᴹ, l)` from a fiber-wise linear connection on the chart
/// `(x, w)` by `𝓕(a) = P(L_{a↑}∇)`, `∇ᴬa = P(∇a↑)`, `l(a) = P(ι_{a↑}T)` and
/// restriction of `∇` to the zero section.
pub fn components_from_fiberwise_linear(
    nabla: &ConnectionData,
    base: &ChartRef,
    rank: usize,
) -> Result<ConnComponents, ImError> {
    let n = base.dim();
    let total = nabla.base().clone();
    if total.dim() != n + rank || !nabla.is_tangent() {
        return Err(ImError::Shape(format!(
            "expected a tangent connection on a chart of dimension {}",
            n + rank
        )));
    }
    let fiber: Vec<usize> = (n..n + rank).collect();
    for a in 0..n + rank {
        for b in 0..n + rank {
            for k in 0..n + rank {
                if !check_homogeneous(nabla.g(a, b, k), &fiber, linear_ansatz_degree(n, a, b, k)) {
                    return Err(ImError::NotFiberwiseLinear(format!(
                        "Christoffel symbol ∇_{{d{}}} d{} along d{} = {}",
                        total.vars()[a],
                        total.vars()[b],
                        total.vars()[k],
                        nabla.g(a, b, k)
                    )));
                }
            }
        }
    }
    let base_vars: Vec<usize> = (0..n).collect();
    let at_zero = |f: &ScalarFn| {
        f.set_zero(&fiber)
            .restrict(base, &base_vars)
            .expect("fiber variables removed")
    };
    let coords: Vec<VectorField> = (0..n + rank)
        .map(|i| VectorField::coordinate(&total, i))
        .collect();

    let gamma_m = ConnectionData::from_fn(base, n, |mu, nu, lam| at_zero(nabla.g(mu, nu, lam)));
    let gamma_a = ConnectionData::from_fn(base, rank, |mu, i, j| {
        at_zero(
            &nabla
                .covariant(&coords[mu], &coords[n + i])
                .comp(n + j)
                .clone(),
        )
    });
    let tors = torsion_of(nabla)?;
    let l = CompArray::from_fn(&[rank, n, rank], |ix| {
        at_zero(tors.get(&[n + ix[0], ix[1], n + ix[2]]))
    });
    let lie: Vec<Vec<VectorField>> = (0..rank)
        .map(|i| {
            (0..n * n)
                .map(|mn| {
                    lie_derivative_connection_on(
                        &coords[n + i],
                        nabla,
                        &coords[mn / n],
                        &coords[mn % n],
                        None,
                    )
                })
                .collect()
        })
        .collect();
    let f = CompArray::from_fn(&[rank, n, n, rank], |ix| {
        at_zero(lie[ix[0]][ix[1] * n + ix[2]].comp(n + ix[3]))
    });
    ConnComponents::new(f, gamma_a, gamma_m, l)
}

/// Components `(𝓓, l, 𝒯ᴹ)` of a linear `(2,1)` tensor on the chart `(x, w)`:
/// `𝓓(a) = P(L_{a↑}T)`, `l(a) = P(ι_{a↑}T)`, `𝒯ᴹ = T` on the zero section.
pub fn form_components_from_linear(
    t: &TensorField,
    base: &ChartRef,
    rank: usize,
) -> Result<FormComponents, ImError> {
    let n = base.dim();
    let total = t.chart().clone();
    if total.dim() != n + rank || t.valence() != (2, 1) {
        return Err(ImError::Shape(
            "expected a (2,1) tensor on the total space".into(),
        ));
    }
    let fiber: Vec<usize> = (n..n + rank).collect();
    let base_vars: Vec<usize> = (0..n).collect();
    for ix in 0..t.comps().data().len() {
        let i = t.comps().unravel(ix);
        let (a, b, k) = (i[0], i[1], i[2]);
        let deg = match (a < n, b < n, k < n) {
            (true, true, true) => Some(0),
            (true, true, false) => Some(1),
            (true, false, false) | (false, true, false) => Some(0),
            _ => None,
        };
        if !check_homogeneous(t.get(&i), &fiber, deg) {
            return Err(ImError::NotFiberwiseLinear(format!(
                "tensor component {i:?}"
            )));
        }
    }
    let at_zero = |f: &ScalarFn| {
        f.set_zero(&fiber)
            .restrict(base, &base_vars)
            .expect("fiber variables removed")
    };
    let tm = TensorField::new(
        base,
        2,
        1,
        CompArray::from_fn(&[n, n, n], |ix| at_zero(t.get(ix))),
    )?
    .with_skew()?;
    let l = CompArray::from_fn(&[rank, n, rank], |ix| {
        at_zero(t.get(&[n + ix[0], ix[1], n + ix[2]]))
    });
    let d = CompArray::from_fn(&[rank, n, n, rank], |ix| {
        at_zero(&t.get(&[ix[1], ix[2], n + ix[3]]).diff(n + ix[0]))
    });
    FormComponents::new(d, l, tm)
}

/// Geodesic spray of the fiber-wise linear connection, moved to the chart
/// `(x, ẋ, w, ẇ)` of the total space of `TA ⇒ TM`.
pub fn prolongation_spray(c: &IMConnComponents) -> Result<(AlgebroidData, VectorField), ImError> {
    let alg = &c.algebroid;
    let (n, r) = (alg.dim(), alg.rank());
    let nabla = fiberwise_linear_from_components(&c.comps);
    let z = geodesic_spray(&nabla)?;
    let ta = tangent_prolongation(alg);
    let target = total_space_chart(&ta);
    let map: Vec<usize> = (0..2 * (n + r))
        .map(|v| {
            if v < n {
                v
            } else if v < n + r {
                2 * n + (v - n)
            } else if v < 2 * n + r {
                n + (v - n - r)
            } else {
                2 * n + r + (v - 2 * n - r)
            }
        })
        .collect();
    let mut comps = vec![ScalarFn::zero(&target); 2 * (n + r)];
    for (v, comp) in z.comps().iter().enumerate() {
        comps[map[v]] = comp.embed(&target, &map);
    }
    Ok((ta, VectorField::new(&target, comps)))
}

#[derive(Clone, Debug)]
pub struct SprayCrosscheck {
    pub bool_equations: bool,
    pub bool_spray_route: bool,
    pub agree: bool,
    pub equations: DefectReport,
    pub torsion_form: DefectReport,
    pub spray: ImVectorFieldReport,
}

pub fn spray_crosscheck(c: &IMConnComponents) -> Result<SprayCrosscheck, ImError> {
    spray_crosscheck_at(c, DEFAULT_JET_DEGREE)
}

/// Decides the IM property twice: by the defining equations, and by the
/// torsion being an IM 2-form together with the spray being IM on `TA ⇒ TM`.
pub fn spray_crosscheck_at(c: &IMConnComponents, degree: u32) -> Result<SprayCrosscheck, ImError> {
    let equations = check_im_connection_at(c, degree)?;
    let torsion_form = check_im_form_at(&im_torsion(c)?, degree)?;
    let (ta, z) = prolongation_spray(c)?;
    let spray = check_im_vector_field_at(&ta, &z, degree)?;
    let bool_equations = equations.passed();
    let bool_spray_route = torsion_form.passed() && spray.is_im;
    Ok(SprayCrosscheck {
        bool_equations,
        bool_spray_route,
        agree: bool_equations == bool_spray_route,
        equations,
        torsion_form,
        spray,
    })
}

#[cfg(test)]
mod tests;

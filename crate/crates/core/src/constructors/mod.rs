//! Constructions of IM connections: vertical bundles of submersions,
//! transitive algebroids with abelian isotropy, secondary components,
//! the flat-`∇ᴬ` criterion and the Heisenberg family.

use thiserror::Error;

use crate::algebroid::{check_algebroid, jet_family, section_label, AlgebroidData, AlgebroidError};
use crate::geometry::{
    check_related_connections, curvature_of, lie_derivative_connection, project_connection,
    torsion_of, CompArray, ConnectionData, GeomError, VectorField,
};
use crate::imconn::{
    check_im_connection_at, ConnComponents, IMConnComponents, ImError, DEFAULT_JET_DEGREE,
};
use crate::report::{DefectReport, EquationDefect};
use crate::symkernel::{Chart, ChartRef, PolyMap, Rat, ScalarFn};

mod heisenberg;

pub use heisenberg::{
    heisenberg_group, heisenberg_structure, heisenberg_toy, parse_r_matrix, right_invariant_frame,
    HeisenbergGroup, HeisenbergToy,
};

#[derive(Debug, Error)]
pub enum ConstructError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("post-check failed: {0}")]
    PostCheck(String),
    #[error("condition {condition} violated at {at}")]
    Condition { condition: String, at: String },
    #[error(transparent)]
    Im(#[from] ImError),
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Algebroid(#[from] AlgebroidError),
}

fn zero_arr(a: &CompArray) -> Option<String> {
    a.nonzero().first().map(|(ix, v)| format!("{ix:?}: {v}"))
}

/// Coordinate projection `ℝ^{b+f} → ℝ^b` onto the first `b` coordinates.
#[derive(Clone, Debug)]
pub struct CoordSubmersion {
    pub total: ChartRef,
    pub base: ChartRef,
}

impl CoordSubmersion {
    pub fn new(total: &ChartRef, base_dim: usize) -> Result<CoordSubmersion, ConstructError> {
        if base_dim > total.dim() {
            return Err(ConstructError::Precondition(
                "base dimension exceeds total dimension".into(),
            ));
        }
        let names: Vec<String> = total.vars()[..base_dim].to_vec();
        let base = Chart::new(format!("{}_base", total.name()), names).expect("valid names");
        Ok(CoordSubmersion {
            total: total.clone(),
            base,
        })
    }

    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }

    pub fn fiber_dim(&self) -> usize {
        self.total.dim() - self.base.dim()
    }

    pub fn pi(&self) -> PolyMap {
        let idx: Vec<usize> = (0..self.base_dim()).collect();
        PolyMap::select(&self.total, &self.base, &idx)
    }

    /// Zero section `y ↦ (y, 0)`.
    pub fn section(&self) -> PolyMap {
        let b = self.base_dim();
        let comps = (0..self.total.dim())
            .map(|i| {
                if i < b {
                    ScalarFn::var(&self.base, i)
                } else {
                    ScalarFn::zero(&self.base)
                }
            })
            .collect();
        PolyMap::new(&self.base, &self.total, comps).expect("section")
    }

    /// Vertical bundle with its coordinate frame `∂_{b+i}`; all brackets vanish.
    pub fn vertical_algebroid(&self) -> AlgebroidData {
        let (b, f) = (self.base_dim(), self.fiber_dim());
        let m = &self.total;
        let anchor = (0..f)
            .map(|i| {
                (0..m.dim())
                    .map(|mu| {
                        if mu == b + i {
                            ScalarFn::one(m)
                        } else {
                            ScalarFn::zero(m)
                        }
                    })
                    .collect()
            })
            .collect();
        AlgebroidData::new(m, f, anchor, vec![ScalarFn::zero(m); f * f * f])
            .expect("vertical algebroid")
    }

    /// The candidate base connection, if `∇ᴹ` is projectable.
    pub fn projection(
        &self,
        nabla_m: &ConnectionData,
    ) -> Result<Option<ConnectionData>, ConstructError> {
        let nb = project_connection(nabla_m, &self.pi(), &self.section());
        let rel = check_related_connections(nabla_m, &nb, &self.pi())?;
        Ok(rel.related.then_some(nb))
    }
}

/// IM connection on the vertical bundle determined by a projectable `∇ᴹ`:
/// `∇ᴬ` is the restriction of `∇ᴹ`, `ρ∘𝓕(a) = L_{ρa}∇ᴹ` and `ρ∘l(a) = ι_{ρa}Tᴹ`.
pub fn vertical_bundle_im(
    sub: &CoordSubmersion,
    nabla_m: &ConnectionData,
) -> Result<IMConnComponents, ConstructError> {
    if !nabla_m.is_tangent() || !Chart::same(nabla_m.base(), &sub.total) {
        return Err(ConstructError::Precondition(
            "∇ᴹ must be a tangent connection on the total chart".into(),
        ));
    }
    if sub.projection(nabla_m)?.is_none() {
        return Err(ConstructError::Precondition(
            "∇ᴹ is not projectable along the submersion".into(),
        ));
    }
    let (b, f) = (sub.base_dim(), sub.fiber_dim());
    let n = b + f;
    let m = &sub.total;
    fn horizontal_free(
        what: &str,
        mut vals: impl Iterator<Item = ScalarFn>,
    ) -> Result<(), ConstructError> {
        match vals.find(|v| !v.is_zero()) {
            Some(v) => Err(ConstructError::PostCheck(format!(
                "{what} has a horizontal component {v}"
            ))),
            None => Ok(()),
        }
    }
    horizontal_free(
        "∇ᴹ of a vertical field",
        (0..n).flat_map(|mu| {
            (0..f).flat_map(move |i| (0..b).map(move |lam| nabla_m.g(mu, b + i, lam).clone()))
        }),
    )?;
    let gamma_a = ConnectionData::from_fn(m, f, |mu, i, j| nabla_m.g(mu, b + i, b + j).clone());
    horizontal_free(
        "L_{∂ᵢ}∇ᴹ",
        (0..f).flat_map(|i| {
            (0..n * n * b).map(move |ix| nabla_m.g(ix / (n * b), (ix / b) % n, ix % b).diff(b + i))
        }),
    )?;
    let fa = CompArray::from_fn(&[f, n, n, f], |ix| {
        nabla_m.g(ix[1], ix[2], b + ix[3]).diff(b + ix[0])
    });
    let t = torsion_of(nabla_m)?;
    let tr = &t;
    horizontal_free(
        "ι_{∂ᵢ}Tᴹ",
        (0..f).flat_map(|i| (0..n * b).map(move |ix| tr.get(&[b + i, ix / b, ix % b]).clone())),
    )?;
    let l = CompArray::from_fn(&[f, n, f], |ix| {
        t.get(&[b + ix[0], ix[1], b + ix[2]]).clone()
    });
    let comps = ConnComponents::new(fa, gamma_a, nabla_m.clone(), l)?;
    Ok(IMConnComponents::new(sub.vertical_algebroid(), comps)?)
}

/// Data of a transitive algebroid `TM ⊕ K` with abelian isotropy together
/// with the free parameters `(∇ᴹ, θ)` of its IM connections.
#[derive(Clone, Debug)]
pub struct TransitiveAbelianData {
    pub nabla_k: ConnectionData,
    /// `C^k_{μν}` at `[μ][ν][k]`, skew in `μν`.
    pub c: CompArray,
    pub nabla_m: ConnectionData,
    /// `θ^k_{μν}` at `[μ][ν][k]`.
    pub theta: CompArray,
}

/// `(d^{∇ᴷ}C)_{μνλ} = ∇_μ C_{νλ} + ∇_ν C_{λμ} + ∇_λ C_{μν}` at `[μ][ν][λ][k]`.
pub fn covariant_exterior_derivative(nabla_k: &ConnectionData, c: &CompArray) -> CompArray {
    let n = nabla_k.dim();
    let p = nabla_k.rank();
    let nab = |mu: usize, nu: usize, la: usize| -> Vec<ScalarFn> {
        let s: Vec<ScalarFn> = (0..p).map(|k| c.get(&[nu, la, k]).clone()).collect();
        nabla_k.derivative_coord(mu, &s)
    };
    let mut out = CompArray::zeros(nabla_k.base(), &[n, n, n, p]);
    for mu in 0..n {
        for nu in 0..n {
            for la in 0..n {
                let (a, b, d) = (nab(mu, nu, la), nab(nu, la, mu), nab(la, mu, nu));
                for k in 0..p {
                    out.set(&[mu, nu, la, k], &(&a[k] + &b[k]) + &d[k]);
                }
            }
        }
    }
    out
}

impl TransitiveAbelianData {
    /// Validates shapes, skewness of `C`, flatness of `∇ᴷ` and `d^{∇ᴷ}C = 0`.
    pub fn new(
        nabla_k: ConnectionData,
        c: CompArray,
        nabla_m: ConnectionData,
        theta: CompArray,
    ) -> Result<TransitiveAbelianData, ConstructError> {
        let d = TransitiveAbelianData::unchecked(nabla_k, c, nabla_m, theta)?;
        if let Some(w) = zero_arr(&curvature_of(&d.nabla_k)) {
            return Err(ConstructError::Condition {
                condition: "flatness of ∇ᴷ".into(),
                at: w,
            });
        }
        if let Some(w) = zero_arr(&covariant_exterior_derivative(&d.nabla_k, &d.c)) {
            return Err(ConstructError::Condition {
                condition: "d^{∇ᴷ}C = 0".into(),
                at: w,
            });
        }
        Ok(d)
    }

    /// Shape and skewness checks only, for negative controls.
    pub fn unchecked(
        nabla_k: ConnectionData,
        c: CompArray,
        nabla_m: ConnectionData,
        theta: CompArray,
    ) -> Result<TransitiveAbelianData, ConstructError> {
        let n = nabla_m.dim();
        let p = nabla_k.rank();
        if !nabla_m.is_tangent()
            || !Chart::same(nabla_k.base(), nabla_m.base())
            || c.shape() != [n, n, p]
            || theta.shape() != [n, n, p]
        {
            return Err(ConstructError::Precondition(
                "inconsistent shapes for transitive data".into(),
            ));
        }
        for mu in 0..n {
            for nu in 0..n {
                for k in 0..p {
                    if c.get(&[mu, nu, k]) != &-c.get(&[nu, mu, k]) {
                        return Err(ConstructError::Precondition(format!(
                            "C is not skew at ({mu},{nu})"
                        )));
                    }
                }
            }
        }
        Ok(TransitiveAbelianData {
            nabla_k,
            c,
            nabla_m,
            theta,
        })
    }

    pub fn base(&self) -> &ChartRef {
        self.nabla_m.base()
    }

    pub fn dim(&self) -> usize {
        self.nabla_m.dim()
    }

    pub fn iso_rank(&self) -> usize {
        self.nabla_k.rank()
    }

    /// `TM ⊕ K` with frame `(∂_μ, 0), (0, e_k)` and bracket
    /// `[(X,h),(Y,k)] = ([X,Y], ∇ᴷ_X k − ∇ᴷ_Y h − C(X,Y))`. No Jacobi check.
    pub fn algebroid(&self) -> AlgebroidData {
        let (n, p) = (self.dim(), self.iso_rank());
        let m = self.base();
        let r = n + p;
        let anchor = (0..r)
            .map(|i| {
                (0..n)
                    .map(|mu| {
                        if i == mu {
                            ScalarFn::one(m)
                        } else {
                            ScalarFn::zero(m)
                        }
                    })
                    .collect()
            })
            .collect();
        AlgebroidData::from_brackets(m, r, anchor, |i, j| {
            let mut v = vec![ScalarFn::zero(m); r];
            match (i < n, j < n) {
                (true, true) => {
                    for k in 0..p {
                        v[n + k] = -self.c.get(&[i, j, k]);
                    }
                }
                (true, false) => {
                    for k in 0..p {
                        v[n + k] = self.nabla_k.g(i, j - n, k).clone();
                    }
                }
                _ => {}
            }
            v
        })
        .expect("brackets built on i < j")
    }
}

/// IM connection on `TM ⊕ K` determined by `(∇ᴹ, θ)`.
pub fn transitive_abelian_im(
    d: &TransitiveAbelianData,
) -> Result<(AlgebroidData, IMConnComponents), ConstructError> {
    let alg = d.algebroid();
    let rep = check_algebroid(&alg);
    if !rep.passed() {
        return Err(ConstructError::Precondition(format!(
            "TM ⊕ K is not an algebroid: {}",
            rep.failing().join(", ")
        )));
    }
    let comps = transitive_abelian_components(d)?;
    Ok((alg.clone(), IMConnComponents::new(alg, comps)?))
}

/// Components `(𝓕, ∇^⊕, ∇ᴹ, l)` without checking the algebroid.
pub fn transitive_abelian_components(
    d: &TransitiveAbelianData,
) -> Result<ConnComponents, ConstructError> {
    let (n, p) = (d.dim(), d.iso_rank());
    let r = n + p;
    let m = d.base();
    let gm = &d.nabla_m;
    let gk = &d.nabla_k;
    let gamma_a = ConnectionData::from_fn(m, r, |mu, i, j| match (i < n, j < n) {
        (true, true) => gm.g(mu, i, j).clone(),
        (true, false) => d.theta.get(&[mu, i, j - n]).clone(),
        (false, false) => gk.g(mu, i - n, j - n).clone(),
        (false, true) => ScalarFn::zero(m),
    });
    let tm = torsion_of(gm)?;
    let l = CompArray::from_fn(&[r, n, r], |ix| {
        let (i, mu, j) = (ix[0], ix[1], ix[2]);
        match (i < n, j < n) {
            (true, true) => tm.get(&[i, mu, j]).clone(),
            (true, false) => {
                let k = j - n;
                &(d.theta.get(&[i, mu, k]) - d.theta.get(&[mu, i, k])) + d.c.get(&[i, mu, k])
            }
            _ => ScalarFn::zero(m),
        }
    });
    // K-part of a section valued 2-tensor S^k_{μν} differentiated by ∇ᴷ_ξ.
    let nab_k = |xi: usize, s: &dyn Fn(usize) -> ScalarFn| -> Vec<ScalarFn> {
        let v: Vec<ScalarFn> = (0..p).map(s).collect();
        gk.derivative_coord(xi, &v)
    };
    let lie_m = |xi: usize| lie_derivative_connection(&VectorField::coordinate(m, xi), gm);
    let mut f = CompArray::zeros(m, &[r, n, n, r]);
    for xi in 0..n {
        let lm = lie_m(xi)?;
        for mu in 0..n {
            for nu in 0..n {
                for lam in 0..n {
                    f.set(&[xi, mu, nu, lam], lm.get(&[mu, nu, lam]).clone());
                }
                let a = nab_k(xi, &|k| d.theta.get(&[mu, nu, k]).clone());
                let b = nab_k(mu, &|k| d.c.get(&[xi, nu, k]).clone());
                for k in 0..p {
                    let mut v = &a[k] + &b[k];
                    for lam in 0..n {
                        let g = gm.g(mu, nu, lam);
                        let cc = d.c.get(&[xi, lam, k]);
                        if !g.is_zero() && !cc.is_zero() {
                            v -= &(cc * g);
                        }
                    }
                    f.set(&[xi, mu, nu, n + k], v);
                }
            }
        }
    }
    for k0 in 0..p {
        for mu in 0..n {
            for nu in 0..n {
                let inner = nab_k(nu, &|k| {
                    if k == k0 {
                        ScalarFn::one(m)
                    } else {
                        ScalarFn::zero(m)
                    }
                });
                let outer = gk.derivative_coord(mu, &inner);
                for k in 0..p {
                    let mut v = outer[k].clone();
                    for lam in 0..n {
                        let g = gm.g(mu, nu, lam);
                        let kk = gk.g(lam, k0, k);
                        if !g.is_zero() && !kk.is_zero() {
                            v -= &(g * kk);
                        }
                    }
                    f.set(&[n + k0, mu, nu, n + k], v);
                }
            }
        }
    }
    Ok(ConnComponents::new(f, gamma_a, gm.clone(), l)?)
}

/// Reads `(∇ᴹ, θ)` back from components on `TM ⊕ K`.
pub fn transitive_abelian_parameters(
    c: &ConnComponents,
    iso_rank: usize,
) -> (ConnectionData, CompArray) {
    let n = c.dim();
    let theta = CompArray::from_fn(&[n, n, iso_rank], |ix| {
        c.gamma_a.g(ix[0], ix[1], n + ix[2]).clone()
    });
    (c.gamma_m.clone(), theta)
}

/// Secondary components `(∇ᴬ, ∇ᴹ, F)` of a symmetric fiber-wise linear connection.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondaryComponents {
    pub nabla_a: ConnectionData,
    pub nabla_m: ConnectionData,
    /// `F^k_{iμν}` at `[i][μ][ν][k]`, symmetric in `μν`.
    pub fmap: CompArray,
}

fn symmetric_in_middle(a: &CompArray) -> Result<(), ConstructError> {
    let s = a.shape().to_vec();
    for i in 0..s[0] {
        for mu in 0..s[1] {
            for nu in mu + 1..s[2] {
                for k in 0..s[3] {
                    if a.get(&[i, mu, nu, k]) != a.get(&[i, nu, mu, k]) {
                        return Err(ConstructError::Precondition(format!(
                            "not symmetric in the form slots at e{} (d{mu}, d{nu})",
                            i + 1
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

impl SecondaryComponents {
    pub fn new(
        nabla_a: ConnectionData,
        nabla_m: ConnectionData,
        fmap: CompArray,
    ) -> Result<SecondaryComponents, ConstructError> {
        let (n, r) = (nabla_m.dim(), nabla_a.rank());
        if !nabla_m.is_tangent()
            || !Chart::same(nabla_a.base(), nabla_m.base())
            || fmap.shape() != [r, n, n, r]
        {
            return Err(ConstructError::Precondition(
                "inconsistent shapes for secondary components".into(),
            ));
        }
        if !torsion_of(&nabla_m)?.is_zero() {
            return Err(ConstructError::Precondition("∇ᴹ has torsion".into()));
        }
        symmetric_in_middle(&fmap)?;
        Ok(SecondaryComponents {
            nabla_a,
            nabla_m,
            fmap,
        })
    }

    pub fn rank(&self) -> usize {
        self.nabla_a.rank()
    }

    pub fn dim(&self) -> usize {
        self.nabla_m.dim()
    }
}

/// Frame values of `𝓕₀(a)(X,Y) = ½(∇_X∇_Y − ∇_{∇_X Y} + ∇_Y∇_X − ∇_{∇_Y X})a`.
pub fn calf0_frame_values(nabla_a: &ConnectionData, nabla_m: &ConnectionData) -> CompArray {
    let (n, r) = (nabla_m.dim(), nabla_a.rank());
    let base = nabla_m.base();
    let half = Rat::new(1, 2);
    let mut h = CompArray::zeros(base, &[r, n, n, r]);
    for i in 0..r {
        let e: Vec<ScalarFn> = (0..r)
            .map(|k| {
                if k == i {
                    ScalarFn::one(base)
                } else {
                    ScalarFn::zero(base)
                }
            })
            .collect();
        let first: Vec<Vec<ScalarFn>> = (0..n).map(|nu| nabla_a.derivative_coord(nu, &e)).collect();
        for mu in 0..n {
            for nu in 0..n {
                let mut v = nabla_a.derivative_coord(mu, &first[nu]);
                for lam in 0..n {
                    let g = nabla_m.g(mu, nu, lam);
                    if g.is_zero() {
                        continue;
                    }
                    for (vk, fk) in v.iter_mut().zip(&first[lam]) {
                        if !fk.is_zero() {
                            *vk -= &(g * fk);
                        }
                    }
                }
                for (k, vk) in v.into_iter().enumerate() {
                    h.set(&[i, mu, nu, k], vk);
                }
            }
        }
    }
    CompArray::from_fn(&[r, n, n, r], |ix| {
        (h.get(ix) + h.get(&[ix[0], ix[2], ix[1], ix[3]])).scale(&half)
    })
}

/// Plain components of a symmetric fiber-wise linear connection: `l = 0`,
/// `𝓓 = 0` and torsion-free `∇ᴹ` are required.
pub fn plain_to_secondary(c: &ConnComponents) -> Result<SecondaryComponents, ConstructError> {
    if !c.l.is_zero() {
        return Err(ConstructError::Precondition("l does not vanish".into()));
    }
    if let Some(w) = zero_arr(&c.torsion_frame_values()) {
        return Err(ConstructError::Precondition(format!(
            "𝓓 does not vanish: {w}"
        )));
    }
    let f0 = calf0_frame_values(&c.gamma_a, &c.gamma_m);
    SecondaryComponents::new(c.gamma_a.clone(), c.gamma_m.clone(), c.f.sub(&f0))
}

pub fn secondary_to_plain(s: &SecondaryComponents) -> ConnComponents {
    let f0 = calf0_frame_values(&s.nabla_a, &s.nabla_m);
    let (n, r) = (s.dim(), s.rank());
    ConnComponents::new(
        s.fmap.add(&f0),
        s.nabla_a.clone(),
        s.nabla_m.clone(),
        CompArray::zeros(s.nabla_m.base(), &[r, n, r]),
    )
    .expect("shapes validated on construction")
}

/// Outcome of the flat-`∇ᴬ` criterion, decided by its five conditions and
/// independently by the IM-connection equations.
#[derive(Clone, Debug)]
pub struct FlatAReport {
    pub conditions: DefectReport,
    pub route_conditions: bool,
    pub route_im: bool,
    pub agree: bool,
    pub im_report: DefectReport,
}

fn coord_anchor(a: &AlgebroidData) -> Vec<Vec<ScalarFn>> {
    a.anchor_rows().to_vec()
}

/// `(∇̄_μ ρ)(e_i)^λ = ∇ᴹ_μ(ρe_i)^λ − ρ(∇ᴬ_μ e_i)^λ` at `[μ][i][λ]`.
pub fn anchor_covariant_derivative(
    a: &AlgebroidData,
    nabla_a: &ConnectionData,
    nabla_m: &ConnectionData,
) -> CompArray {
    let (n, r) = (a.dim(), a.rank());
    let rho = coord_anchor(a);
    let mut out = CompArray::zeros(a.base(), &[n, r, n]);
    for mu in 0..n {
        for i in 0..r {
            let lhs = nabla_m.derivative_coord(mu, &rho[i]);
            for (lam, l) in lhs.into_iter().enumerate() {
                let mut v = l;
                for j in 0..r {
                    let g = nabla_a.g(mu, i, j);
                    if !g.is_zero() && !rho[j][lam].is_zero() {
                        v -= &(g * &rho[j][lam]);
                    }
                }
                out.set(&[mu, i, lam], v);
            }
        }
    }
    out
}

fn defect_from_array(
    name: &str,
    arr: &CompArray,
    label: impl Fn(&[usize]) -> String,
    group: usize,
) -> EquationDefect {
    let data = arr.data();
    let mut results = Vec::new();
    for (g, chunk) in data.chunks(group).enumerate() {
        let ix = arr.unravel(g * group);
        results.push((label(&ix), chunk.to_vec()));
    }
    EquationDefect::from_results(name, results)
}

/// Checks the five conditions of the flat-`∇ᴬ` criterion and compares with
/// `check_im_connection` on the assembled plain components.
pub fn check_flat_a_im(
    sec: &SecondaryComponents,
    a: &AlgebroidData,
) -> Result<FlatAReport, ConstructError> {
    check_flat_a_im_at(sec, a, DEFAULT_JET_DEGREE)
}

pub fn check_flat_a_im_at(
    sec: &SecondaryComponents,
    a: &AlgebroidData,
    degree: u32,
) -> Result<FlatAReport, ConstructError> {
    if let Some(w) = zero_arr(&curvature_of(&sec.nabla_a)) {
        return Err(ConstructError::Precondition(format!("∇ᴬ is not flat: {w}")));
    }
    if !Chart::same(a.base(), sec.nabla_m.base()) || a.rank() != sec.rank() {
        return Err(ConstructError::Precondition(
            "secondary components do not match the algebroid".into(),
        ));
    }
    let (n, r) = (a.dim(), a.rank());
    let base = a.base();
    let rho = coord_anchor(a);
    let f = &sec.fmap;
    let mut conditions = DefectReport::new();

    let fam = jet_family(base, r, degree);
    let mut bf = EquationDefect::new("bracket_formula");
    for s in &fam {
        let rs = a.anchor_of(s);
        for t in &fam {
            let rt = a.anchor_of(t);
            let lhs = a.bracket(s, t);
            let dt = sec.nabla_a.derivative(&rs, t.coeffs());
            let ds = sec.nabla_a.derivative(&rt, s.coeffs());
            let vals = lhs
                .coeffs()
                .iter()
                .zip(dt.iter().zip(&ds))
                .map(|(x, (y, z))| &(x - y) + z)
                .collect();
            bf.record(
                || format!("a={}, b={}", section_label(s), section_label(t)),
                vals,
            );
        }
    }
    conditions.push(bf);

    let drho = anchor_covariant_derivative(a, &sec.nabla_a, &sec.nabla_m);
    conditions.push(defect_from_array(
        "anchor_parallel",
        &drho,
        |ix| format!("X=d{}, a=e{}", base.vars()[ix[0]], ix[1] + 1),
        n,
    ));

    let rm = curvature_of(&sec.nabla_m);
    let curv = CompArray::from_fn(&[r, n, n, n], |ix| {
        let (i, mu, nu, lam) = (ix[0], ix[1], ix[2], ix[3]);
        let mut v = ScalarFn::zero(base);
        for k in 0..r {
            let fv = f.get(&[i, mu, nu, k]);
            if !fv.is_zero() && !rho[k][lam].is_zero() {
                v += &(fv * &rho[k][lam]);
            }
        }
        for (s, rs) in rho[i].iter().enumerate() {
            let rr = rm.get(&[s, mu, nu, lam]);
            if !rs.is_zero() && !rr.is_zero() {
                v -= &(rs * rr);
            }
        }
        v
    });
    conditions.push(defect_from_array(
        "anchor_curvature",
        &curv,
        |ix| {
            format!(
                "a=e{}, X=d{}, Y=d{}",
                ix[0] + 1,
                base.vars()[ix[1]],
                base.vars()[ix[2]]
            )
        },
        n,
    ));

    let orth = CompArray::from_fn(&[r, r, n, r], |ix| {
        let (i, j, nu, k) = (ix[0], ix[1], ix[2], ix[3]);
        let mut v = ScalarFn::zero(base);
        for (mu, rm) in rho[j].iter().enumerate() {
            let fv = f.get(&[i, mu, nu, k]);
            if !rm.is_zero() && !fv.is_zero() {
                v += &(rm * fv);
            }
        }
        v
    });
    conditions.push(defect_from_array(
        "anchor_orthogonal",
        &orth,
        |ix| {
            format!(
                "a=e{}, b=e{}, Y=d{}",
                ix[0] + 1,
                ix[1] + 1,
                base.vars()[ix[2]]
            )
        },
        r,
    ));

    // (∇̄_σ F)(e_j)(∂μ,∂ν)^k at [σ][j][μ][ν][k].
    let nf = CompArray::from_fn(&[n, r, n, n, r], |ix| {
        let (s, j, mu, nu, k) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
        let mut v = f.get(&[j, mu, nu, k]).diff(s);
        for m in 0..r {
            v += &(f.get(&[j, mu, nu, m]) * sec.nabla_a.g(s, m, k));
            v -= &(sec.nabla_a.g(s, j, m) * f.get(&[m, mu, nu, k]));
        }
        for lam in 0..n {
            v -= &(sec.nabla_m.g(s, mu, lam) * f.get(&[j, lam, nu, k]));
            v -= &(sec.nabla_m.g(s, nu, lam) * f.get(&[j, mu, lam, k]));
        }
        v
    });
    let sym = CompArray::from_fn(&[r, r, n, n, r], |ix| {
        let (i, j, mu, nu, k) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
        let mut v = ScalarFn::zero(base);
        for s in 0..n {
            v += &(&rho[i][s] * nf.get(&[s, j, mu, nu, k]));
            v -= &(&rho[j][s] * nf.get(&[s, i, mu, nu, k]));
        }
        v
    });
    conditions.push(defect_from_array(
        "derivative_symmetry",
        &sym,
        |ix| {
            format!(
                "a=e{}, b=e{}, X=d{}, Y=d{}",
                ix[0] + 1,
                ix[1] + 1,
                base.vars()[ix[2]],
                base.vars()[ix[3]]
            )
        },
        r,
    ));

    let plain = IMConnComponents::new(a.clone(), secondary_to_plain(sec))?;
    let im_report = check_im_connection_at(&plain, degree)?;
    let route_conditions = conditions.passed();
    let route_im = im_report.passed();
    Ok(FlatAReport {
        conditions,
        route_conditions,
        route_im,
        agree: route_conditions == route_im,
        im_report,
    })
}

/// Algebroid with bracket `∇ᴬ_{ρa}b − ∇ᴬ_{ρb}a` and the secondary components
/// `(∇ᴬ, ∇ᴹ, 0)`, after checking flatness of `∇ᴬ`, symmetry of `∇ᴹ`,
/// `∇̄ρ = 0` and `ι_{ρa}Rᴹ = 0`.
pub fn flat_anchor_construct(
    nabla_a: &ConnectionData,
    nabla_m: &ConnectionData,
    anchor: Vec<Vec<ScalarFn>>,
) -> Result<(AlgebroidData, SecondaryComponents), ConstructError> {
    let (n, r) = (nabla_m.dim(), nabla_a.rank());
    let base = nabla_m.base();
    if let Some(w) = zero_arr(&curvature_of(nabla_a)) {
        return Err(ConstructError::Condition {
            condition: "flatness of ∇ᴬ".into(),
            at: w,
        });
    }
    let sec = SecondaryComponents::new(
        nabla_a.clone(),
        nabla_m.clone(),
        CompArray::zeros(base, &[r, n, n, r]),
    )?;
    let a = bracket_from_connection(nabla_a, anchor)?;
    if let Some(w) = zero_arr(&anchor_covariant_derivative(&a, nabla_a, nabla_m)) {
        return Err(ConstructError::Condition {
            condition: "∇̄ρ = 0".into(),
            at: w,
        });
    }
    let rm = curvature_of(nabla_m);
    for i in 0..r {
        for mu in 0..n {
            for nu in 0..n {
                for lam in 0..n {
                    let mut v = ScalarFn::zero(base);
                    for s in 0..n {
                        v += &(a.anchor(i, s) * rm.get(&[s, mu, nu, lam]));
                    }
                    if !v.is_zero() {
                        return Err(ConstructError::Condition {
                            condition: "ι_{ρa}Rᴹ = 0".into(),
                            at: format!("e{} d{mu} d{nu}", i + 1),
                        });
                    }
                }
            }
        }
    }
    Ok((a, sec))
}

/// `[e_i, e_j] = ∇_{ρe_i}e_j − ∇_{ρe_j}e_i` with the given anchor.
pub fn bracket_from_connection(
    nabla_a: &ConnectionData,
    anchor: Vec<Vec<ScalarFn>>,
) -> Result<AlgebroidData, ConstructError> {
    let base = nabla_a.base().clone();
    let (n, r) = (base.dim(), nabla_a.rank());
    if anchor.len() != r || anchor.iter().any(|row| row.len() != n) {
        return Err(ConstructError::Precondition(
            "anchor has the wrong shape".into(),
        ));
    }
    let rows = anchor.clone();
    Ok(AlgebroidData::from_brackets(&base, r, anchor, |i, j| {
        (0..r)
            .map(|k| {
                let mut v = ScalarFn::zero(&base);
                for mu in 0..n {
                    v += &(&rows[i][mu] * nabla_a.g(mu, j, k));
                    v -= &(&rows[j][mu] * nabla_a.g(mu, i, k));
                }
                v
            })
            .collect()
    })?)
}

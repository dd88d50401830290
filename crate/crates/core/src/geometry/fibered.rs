use super::{
    pull_covariant, related_connections_defect, CompArray, ConnectionData, GeomError, TensorField,
    VectorField,
};
use crate::symkernel::{Chart, ChartRef, PolyMap, ScalarFn};

/// Fiber product `P = M ×_B N` given by a parametrizing chart, an embedding
/// into `M × N` and a retraction back.
#[derive(Clone, Debug)]
pub struct FiberedChart {
    pub chart: ChartRef,
    pub left: ChartRef,
    pub right: ChartRef,
    pub product: ChartRef,
    pub base: ChartRef,
    pub embed: PolyMap,
    pub retract: PolyMap,
    pub sigma: PolyMap,
    pub tau: PolyMap,
    pub sigma_section: PolyMap,
    pub tau_section: PolyMap,
}

impl FiberedChart {
    /// Validates `ret ∘ j = id`, `σ ∘ pr₁ ∘ j = τ ∘ pr₂ ∘ j` and that the
    /// sections are sections.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        chart: &ChartRef,
        left: &ChartRef,
        right: &ChartRef,
        base: &ChartRef,
        embed: PolyMap,
        retract: PolyMap,
        sigma: PolyMap,
        tau: PolyMap,
        sigma_section: PolyMap,
        tau_section: PolyMap,
    ) -> Result<FiberedChart, GeomError> {
        let product = Chart::product(left, right);
        let bad = |m: &str| Err(GeomError::Shape(format!("malformed fiber product: {m}")));
        if !Chart::same(embed.target(), &product) || !Chart::same(retract.source(), &product) {
            return bad("embedding/retraction charts");
        }
        if !retract.compose(&embed).same_as(&PolyMap::identity(chart)) {
            return bad("retraction is not a left inverse of the embedding");
        }
        let fib = FiberedChart {
            chart: chart.clone(),
            left: left.clone(),
            right: right.clone(),
            product,
            base: base.clone(),
            embed,
            retract,
            sigma,
            tau,
            sigma_section,
            tau_section,
        };
        if fib.sigma.compose(&fib.pr1()).comps() != fib.tau.compose(&fib.pr2()).comps() {
            return bad("embedding does not land in the fiber product");
        }
        if !fib
            .sigma
            .compose(&fib.sigma_section)
            .same_as(&PolyMap::identity(base))
            || !fib
                .tau
                .compose(&fib.tau_section)
                .same_as(&PolyMap::identity(base))
        {
            return bad("supplied sections are not sections");
        }
        Ok(fib)
    }

    pub fn pr1(&self) -> PolyMap {
        let k = self.left.dim();
        PolyMap::new(&self.chart, &self.left, self.embed.comps()[..k].to_vec()).unwrap()
    }

    pub fn pr2(&self) -> PolyMap {
        let k = self.left.dim();
        PolyMap::new(&self.chart, &self.right, self.embed.comps()[k..].to_vec()).unwrap()
    }

    /// `d ret` evaluated along `j`, as a `dim P × dim(M×N)` matrix.
    fn dret_along_j(&self) -> Vec<Vec<ScalarFn>> {
        self.retract
            .jacobian()
            .iter()
            .map(|row| row.iter().map(|d| self.embed.pull(d)).collect())
            .collect()
    }
}

/// `∇ᴹ × ∇ᴺ` on `M × N` with block Christoffels.
pub fn product_connection(
    nm: &ConnectionData,
    nn: &ConnectionData,
) -> Result<ConnectionData, GeomError> {
    if !nm.is_tangent() || !nn.is_tangent() {
        return Err(GeomError::NotTangent {
            rank: nm.rank(),
            dim: nm.dim(),
        });
    }
    let prod = Chart::product(nm.base(), nn.base());
    let m = nm.dim();
    let n = nn.dim();
    let e1: Vec<usize> = (0..m).collect();
    let e2: Vec<usize> = (m..m + n).collect();
    Ok(ConnectionData::from_fn(&prod, m + n, |mu, b, c| {
        if mu < m && b < m && c < m {
            nm.g(mu, b, c).embed(&prod, &e1)
        } else if mu >= m && b >= m && c >= m {
            nn.g(mu - m, b - m, c - m).embed(&prod, &e2)
        } else {
            ScalarFn::zero(&prod)
        }
    }))
}

/// `𝒯ᴹ × 𝒯ᴺ` for `(p,1)` tensors.
pub fn product_tensor(tm: &TensorField, tn: &TensorField) -> TensorField {
    let (p, q) = tm.valence();
    assert_eq!((p, q), tn.valence());
    assert_eq!(q, 1);
    let prod = Chart::product(tm.chart(), tn.chart());
    let m = tm.chart().dim();
    let n = tn.chart().dim();
    let e1: Vec<usize> = (0..m).collect();
    let e2: Vec<usize> = (m..m + n).collect();
    let comps = CompArray::from_fn(&vec![m + n; p + 1], |ix| {
        if ix.iter().all(|&i| i < m) {
            tm.get(ix).embed(&prod, &e1)
        } else if ix.iter().all(|&i| i >= m) {
            let jx: Vec<usize> = ix.iter().map(|i| i - m).collect();
            tn.get(&jx).embed(&prod, &e2)
        } else {
            ScalarFn::zero(&prod)
        }
    });
    TensorField::new(&prod, p, 1, comps).unwrap()
}

/// Connection on `P` induced from `∇` on `N` through `j: P → N` and a
/// retraction `ret: N → P`: `Γ^γ_{αβ} = ∂_A ret^γ(j) [∂_α∂_β j^A + Γ^A_{BC}(j) ∂_α j^B ∂_β j^C]`.
pub fn induced_connection(nabla: &ConnectionData, j: &PolyMap, ret: &PolyMap) -> ConnectionData {
    let p = j.source().dim();
    let n = j.target().dim();
    let gn = CompArray::from_fn(&[n, n, n], |ix| nabla.g(ix[0], ix[1], ix[2]).clone());
    let pulled = pull_covariant(&gn, 2, j);
    let jj = j.jacobian();
    let dret: Vec<Vec<ScalarFn>> = ret
        .jacobian()
        .iter()
        .map(|row| row.iter().map(|d| j.pull(d)).collect())
        .collect();
    let src = j.source().clone();
    ConnectionData::from_fn(&src, p, |al, be, ga| {
        let mut acc = ScalarFn::zero(&src);
        for a in 0..n {
            if dret[ga][a].is_zero() {
                continue;
            }
            let inner = &jj[a][be].diff(al) + pulled.get(&[al, be, a]);
            if !inner.is_zero() {
                acc += &(&dret[ga][a] * &inner);
            }
        }
        acc
    })
}

/// Candidate projection of `∇` along a submersion `σ: M → B` with section `ς`:
/// `Γᴮ^a_{bc} = [Γ^λ_{μν} ∂_λσ^a − ∂_μ∂_νσ^a](ς) ∂_bς^μ ∂_cς^ν`.
pub fn project_connection(
    nabla: &ConnectionData,
    sigma: &PolyMap,
    section: &PolyMap,
) -> ConnectionData {
    let m = sigma.source().dim();
    let b = sigma.target().dim();
    let js = sigma.jacobian();
    let arr = CompArray::from_fn(&[m, m, b], |ix| {
        let (mu, nu, a) = (ix[0], ix[1], ix[2]);
        let mut acc = -js[a][nu].diff(mu);
        for lam in 0..m {
            let g = nabla.g(mu, nu, lam);
            if !g.is_zero() && !js[a][lam].is_zero() {
                acc += &(g * &js[a][lam]);
            }
        }
        acc
    });
    let pulled = pull_covariant(&arr, 2, section);
    let base = sigma.target().clone();
    ConnectionData::from_fn(&base, b, |bb, cc, a| pulled.get(&[bb, cc, a]).clone())
}

/// Restriction of `∇ᴹ × ∇ᴺ` to the fiber product.
pub fn restrict_to_fibered(
    nm: &ConnectionData,
    nn: &ConnectionData,
    fib: &FiberedChart,
) -> Result<ConnectionData, GeomError> {
    let nb = project_connection(nm, &fib.sigma, &fib.sigma_section);
    if !related_connections_defect(nm, &nb, &fib.sigma).is_zero() {
        return Err(GeomError::Hypothesis(
            "left connection is not related to a connection on the base".into(),
        ));
    }
    if !related_connections_defect(nn, &nb, &fib.tau).is_zero() {
        return Err(GeomError::Hypothesis(
            "right connection is not related to the same base connection".into(),
        ));
    }
    let prod = product_connection(nm, nn)?;
    let prod = ConnectionData::new(
        &fib.product,
        prod.rank(),
        prod.gamma()
            .iter()
            .map(|g| g.rechart(&fib.product))
            .collect(),
    )?;
    let fibc = induced_connection(&prod, &fib.embed, &fib.retract);
    if !related_connections_defect(&fibc, &prod, &fib.embed).is_zero() {
        return Err(GeomError::PostCheck(
            "restricted connection is not related to the product along the embedding".into(),
        ));
    }
    Ok(fibc)
}

/// Restriction of `𝒯ᴹ × 𝒯ᴺ` to the fiber product through the retraction.
pub fn restrict_tensor(tm: &TensorField, tn: &TensorField, fib: &FiberedChart) -> TensorField {
    let prod = product_tensor(tm, tn);
    let (p, _) = prod.valence();
    let pc = CompArray::from_vec(
        prod.comps().shape(),
        prod.comps()
            .data()
            .iter()
            .map(|c| c.rechart(&fib.product))
            .collect(),
    );
    let pulled = pull_covariant(&pc, p, &fib.embed);
    let dret = fib.dret_along_j();
    let d = fib.chart.dim();
    let n = fib.product.dim();
    let comps = CompArray::from_fn(&vec![d; p + 1], |ix| {
        let ga = ix[p];
        let mut jx = ix.to_vec();
        let mut acc = ScalarFn::zero(&fib.chart);
        for a in 0..n {
            if dret[ga][a].is_zero() {
                continue;
            }
            jx[p] = a;
            let v = pulled.get(&jx);
            if !v.is_zero() {
                acc += &(&dret[ga][a] * v);
            }
        }
        acc
    });
    TensorField::new(&fib.chart, p, 1, comps).unwrap()
}

/// Restriction of `X × Y` to the fiber product.
pub fn restrict_vector_field(x: &VectorField, y: &VectorField, fib: &FiberedChart) -> VectorField {
    let m = x.chart().dim();
    let n = y.chart().dim();
    let e1: Vec<usize> = (0..m).collect();
    let e2: Vec<usize> = (m..m + n).collect();
    let xy: Vec<ScalarFn> = x
        .comps()
        .iter()
        .map(|c| fib.embed.pull(&c.embed(&fib.product, &e1)))
        .chain(
            y.comps()
                .iter()
                .map(|c| fib.embed.pull(&c.embed(&fib.product, &e2))),
        )
        .collect();
    let dret = fib.dret_along_j();
    let comps = (0..fib.chart.dim())
        .map(|ga| {
            let mut acc = ScalarFn::zero(&fib.chart);
            for (a, v) in xy.iter().enumerate() {
                if !dret[ga][a].is_zero() && !v.is_zero() {
                    acc += &(&dret[ga][a] * v);
                }
            }
            acc
        })
        .collect();
    VectorField::new(&fib.chart, comps)
}

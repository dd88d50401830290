//! Connections and tensors on charts: torsion, curvature, symmetric part,
//! geodesic spray, relatedness along polynomial maps, product connections and
//! restriction to fiber products.

mod array;
mod fibered;
mod related;

pub use array::CompArray;
pub use fibered::{
    induced_connection, product_connection, product_tensor, project_connection, restrict_tensor,
    restrict_to_fibered, restrict_vector_field, FiberedChart,
};
pub use related::{
    check_related_connections, check_related_tensors, pull_covariant, related_connections_defect,
    tangent_map, vector_fields_defect, ConnectionRelatedness, TensorRelatedness,
};

use crate::symkernel::{Chart, ChartRef, Rat, ScalarFn};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeomError {
    #[error("connection is not on the tangent bundle (rank {rank}, dimension {dim})")]
    NotTangent { rank: usize, dim: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("fiber product hypotheses fail: {0}")]
    Hypothesis(String),
    #[error("restricted connection fails the post-check: {0}")]
    PostCheck(String),
}

/// Vector field `X = X^i ∂_i` on a chart.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    chart: ChartRef,
    comps: Vec<ScalarFn>,
}

/// Vector field on a tangent chart `(x, x_dot)`.
pub type VectorFieldOnTangent = VectorField;

impl VectorField {
    pub fn new(chart: &ChartRef, comps: Vec<ScalarFn>) -> VectorField {
        assert_eq!(comps.len(), chart.dim(), "vector field component count");
        for c in &comps {
            assert!(
                Chart::same(c.chart(), chart),
                "vector field component on wrong chart"
            );
        }
        VectorField {
            chart: chart.clone(),
            comps,
        }
    }

    pub fn zero(chart: &ChartRef) -> VectorField {
        VectorField {
            chart: chart.clone(),
            comps: vec![ScalarFn::zero(chart); chart.dim()],
        }
    }

    /// Coordinate field `∂_i`.
    pub fn coordinate(chart: &ChartRef, i: usize) -> VectorField {
        let mut x = VectorField::zero(chart);
        x.comps[i] = ScalarFn::one(chart);
        x
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn comps(&self) -> &[ScalarFn] {
        &self.comps
    }

    pub fn comp(&self, i: usize) -> &ScalarFn {
        &self.comps[i]
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.is_zero())
    }

    /// `X(f) = X^i ∂_i f`.
    pub fn apply(&self, f: &ScalarFn) -> ScalarFn {
        let mut acc = ScalarFn::zero(&self.chart);
        for (i, xi) in self.comps.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            let d = f.diff(i);
            if !d.is_zero() {
                acc += &(xi * &d);
            }
        }
        acc
    }

    /// Lie bracket `[X, Y]^i = X(Y^i) − Y(X^i)`.
    pub fn bracket(&self, o: &VectorField) -> VectorField {
        let comps = (0..self.comps.len())
            .map(|i| &self.apply(&o.comps[i]) - &o.apply(&self.comps[i]))
            .collect();
        VectorField {
            chart: self.chart.clone(),
            comps,
        }
    }

    pub fn add(&self, o: &VectorField) -> VectorField {
        let comps = self
            .comps
            .iter()
            .zip(&o.comps)
            .map(|(a, b)| a + b)
            .collect();
        VectorField {
            chart: self.chart.clone(),
            comps,
        }
    }

    pub fn sub(&self, o: &VectorField) -> VectorField {
        let comps = self
            .comps
            .iter()
            .zip(&o.comps)
            .map(|(a, b)| a - b)
            .collect();
        VectorField {
            chart: self.chart.clone(),
            comps,
        }
    }

    pub fn mul_fn(&self, f: &ScalarFn) -> VectorField {
        let comps = self.comps.iter().map(|a| a * f).collect();
        VectorField {
            chart: self.chart.clone(),
            comps,
        }
    }

    pub fn scale(&self, c: &Rat) -> VectorField {
        let comps = self.comps.iter().map(|a| a.scale(c)).collect();
        VectorField {
            chart: self.chart.clone(),
            comps,
        }
    }

    pub fn into_comps(self) -> Vec<ScalarFn> {
        self.comps
    }
}

/// A `(p, q)` tensor field: `p` covariant slots then `q` contravariant slots.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    chart: ChartRef,
    p: usize,
    q: usize,
    skew: bool,
    comps: CompArray,
}

impl TensorField {
    pub fn new(
        chart: &ChartRef,
        p: usize,
        q: usize,
        comps: CompArray,
    ) -> Result<TensorField, GeomError> {
        let want = vec![chart.dim(); p + q];
        if comps.shape() != want.as_slice() {
            return Err(GeomError::Shape(format!(
                "({p},{q}) tensor on dimension {} needs shape {want:?}, got {:?}",
                chart.dim(),
                comps.shape()
            )));
        }
        Ok(TensorField {
            chart: chart.clone(),
            p,
            q,
            skew: false,
            comps,
        })
    }

    pub fn zero(chart: &ChartRef, p: usize, q: usize) -> TensorField {
        let shape = vec![chart.dim(); p + q];
        TensorField {
            chart: chart.clone(),
            p,
            q,
            skew: false,
            comps: CompArray::zeros(chart, &shape),
        }
    }

    /// Identity `(1,1)` tensor.
    pub fn identity(chart: &ChartRef) -> TensorField {
        let n = chart.dim();
        let comps = CompArray::from_fn(&[n, n], |ix| {
            if ix[0] == ix[1] {
                ScalarFn::one(chart)
            } else {
                ScalarFn::zero(chart)
            }
        });
        TensorField {
            chart: chart.clone(),
            p: 1,
            q: 1,
            skew: false,
            comps,
        }
    }

    /// Marks a `(2,1)` tensor as skew after verifying antisymmetry.
    pub fn with_skew(mut self) -> Result<TensorField, GeomError> {
        if self.p != 2 || self.q != 1 {
            return Err(GeomError::Shape("skew flag needs a (2,1) tensor".into()));
        }
        let n = self.chart.dim();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let s = self.comps.get(&[i, j, k]) + self.comps.get(&[j, i, k]);
                    if !s.is_zero() {
                        return Err(GeomError::Shape("tensor is not skew".into()));
                    }
                }
            }
        }
        self.skew = true;
        Ok(self)
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn valence(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn is_skew(&self) -> bool {
        self.skew
    }

    pub fn comps(&self) -> &CompArray {
        &self.comps
    }

    pub fn get(&self, idx: &[usize]) -> &ScalarFn {
        self.comps.get(idx)
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_zero()
    }

    /// Evaluates a `(2,1)` tensor on two vector fields.
    pub fn apply2(&self, x: &VectorField, y: &VectorField) -> VectorField {
        assert_eq!((self.p, self.q), (2, 1));
        let n = self.chart.dim();
        let mut out = vec![ScalarFn::zero(&self.chart); n];
        for i in 0..n {
            if x.comps[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if y.comps[j].is_zero() {
                    continue;
                }
                let xy = &x.comps[i] * &y.comps[j];
                for (k, o) in out.iter_mut().enumerate() {
                    let t = self.comps.get(&[i, j, k]);
                    if !t.is_zero() {
                        *o += &(&xy * t);
                    }
                }
            }
        }
        VectorField::new(&self.chart, out)
    }
}

/// Christoffel symbols `Γ^c_{μb}` of a connection in a trivialized bundle:
/// `∇_{∂_μ} e_b = Γ^c_{μb} e_c`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionData {
    base: ChartRef,
    rank: usize,
    gamma: Vec<ScalarFn>,
}

impl ConnectionData {
    pub fn new(
        base: &ChartRef,
        rank: usize,
        gamma: Vec<ScalarFn>,
    ) -> Result<ConnectionData, GeomError> {
        if gamma.len() != base.dim() * rank * rank {
            return Err(GeomError::Shape(format!(
                "Christoffel array needs {} entries, got {}",
                base.dim() * rank * rank,
                gamma.len()
            )));
        }
        if gamma.iter().any(|g| !Chart::same(g.chart(), base)) {
            return Err(GeomError::Shape(
                "Christoffel symbol on the wrong chart".into(),
            ));
        }
        Ok(ConnectionData {
            base: base.clone(),
            rank,
            gamma,
        })
    }

    pub fn zero(base: &ChartRef, rank: usize) -> ConnectionData {
        ConnectionData {
            base: base.clone(),
            rank,
            gamma: vec![ScalarFn::zero(base); base.dim() * rank * rank],
        }
    }

    pub fn flat_tangent(base: &ChartRef) -> ConnectionData {
        ConnectionData::zero(base, base.dim())
    }

    /// Builds from a closure `(μ, b, c) ↦ Γ^c_{μb}`.
    pub fn from_fn<F: FnMut(usize, usize, usize) -> ScalarFn>(
        base: &ChartRef,
        rank: usize,
        mut f: F,
    ) -> ConnectionData {
        let mut gamma = Vec::with_capacity(base.dim() * rank * rank);
        for mu in 0..base.dim() {
            for b in 0..rank {
                for c in 0..rank {
                    gamma.push(f(mu, b, c));
                }
            }
        }
        ConnectionData {
            base: base.clone(),
            rank,
            gamma,
        }
    }

    pub fn base(&self) -> &ChartRef {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_tangent(&self) -> bool {
        self.rank == self.base.dim()
    }

    fn require_tangent(&self) -> Result<(), GeomError> {
        if self.is_tangent() {
            Ok(())
        } else {
            Err(GeomError::NotTangent {
                rank: self.rank,
                dim: self.base.dim(),
            })
        }
    }

    /// `Γ^c_{μb}`.
    pub fn g(&self, mu: usize, b: usize, c: usize) -> &ScalarFn {
        &self.gamma[(mu * self.rank + b) * self.rank + c]
    }

    pub fn gamma(&self) -> &[ScalarFn] {
        &self.gamma
    }

    pub fn is_flat_coefficients(&self) -> bool {
        self.gamma.iter().all(|g| g.is_zero())
    }

    pub fn add_tensor(&self, t: &CompArray) -> ConnectionData {
        assert_eq!(t.shape(), &[self.dim(), self.rank, self.rank]);
        let gamma = self
            .gamma
            .iter()
            .zip(t.data())
            .map(|(a, b)| a + b)
            .collect();
        ConnectionData {
            base: self.base.clone(),
            rank: self.rank,
            gamma,
        }
    }

    /// Difference `self − o` as a `[μ][b][c]` array.
    pub fn difference(&self, o: &ConnectionData) -> CompArray {
        assert_eq!((self.dim(), self.rank), (o.dim(), o.rank));
        let data = self
            .gamma
            .iter()
            .zip(&o.gamma)
            .map(|(a, b)| a - b)
            .collect();
        CompArray::from_vec(&[self.dim(), self.rank, self.rank], data)
    }

    /// `∇_{∂_μ} s` for a section with frame coefficients `s`.
    pub fn derivative_coord(&self, mu: usize, s: &[ScalarFn]) -> Vec<ScalarFn> {
        (0..self.rank)
            .map(|c| {
                let mut acc = s[c].diff(mu);
                for (b, sb) in s.iter().enumerate() {
                    let g = self.g(mu, b, c);
                    if !g.is_zero() && !sb.is_zero() {
                        acc += &(g * sb);
                    }
                }
                acc
            })
            .collect()
    }

    /// `∇_X s` for a vector field `X` on the base.
    pub fn derivative(&self, x: &VectorField, s: &[ScalarFn]) -> Vec<ScalarFn> {
        let mut out = vec![ScalarFn::zero(&self.base); self.rank];
        for (mu, xm) in x.comps().iter().enumerate() {
            if xm.is_zero() {
                continue;
            }
            for (o, d) in out.iter_mut().zip(self.derivative_coord(mu, s)) {
                if !d.is_zero() {
                    *o += &(xm * &d);
                }
            }
        }
        out
    }

    /// `∇_X Y` for a tangent connection.
    pub fn covariant(&self, x: &VectorField, y: &VectorField) -> VectorField {
        VectorField::new(&self.base, self.derivative(x, y.comps()))
    }
}

/// `T^λ_{μν} = Γ^λ_{μν} − Γ^λ_{νμ}`, flagged skew.
pub fn torsion_of(nabla: &ConnectionData) -> Result<TensorField, GeomError> {
    nabla.require_tangent()?;
    let n = nabla.dim();
    let comps = CompArray::from_fn(&[n, n, n], |ix| {
        nabla.g(ix[0], ix[1], ix[2]) - nabla.g(ix[1], ix[0], ix[2])
    });
    Ok(TensorField {
        chart: nabla.base.clone(),
        p: 2,
        q: 1,
        skew: true,
        comps,
    })
}

/// Curvature `R^c_{μνb}` stored at index `[μ][ν][b][c]`.
pub fn curvature_of(nabla: &ConnectionData) -> CompArray {
    let n = nabla.dim();
    let r = nabla.rank;
    CompArray::from_fn(&[n, n, r, r], |ix| {
        let (mu, nu, b, c) = (ix[0], ix[1], ix[2], ix[3]);
        let mut acc = &nabla.g(nu, b, c).diff(mu) - &nabla.g(mu, b, c).diff(nu);
        for a in 0..r {
            let p1 = nabla.g(mu, a, c) * nabla.g(nu, b, a);
            let p2 = nabla.g(nu, a, c) * nabla.g(mu, b, a);
            acc += &(&p1 - &p2);
        }
        acc
    })
}

/// `∇ − ½ T^∇`.
pub fn symmetric_part(nabla: &ConnectionData) -> Result<ConnectionData, GeomError> {
    nabla.require_tangent()?;
    let half = Rat::new(1, 2);
    Ok(ConnectionData::from_fn(
        &nabla.base,
        nabla.rank,
        |mu, b, c| (nabla.g(mu, b, c) + nabla.g(b, mu, c)).scale(&half),
    ))
}

/// Embeds a function on `M` into the tangent chart `TM`.
pub fn lift_to_tangent(f: &ScalarFn, tm: &ChartRef) -> ScalarFn {
    let n = f.chart().dim();
    let map: Vec<usize> = (0..n).collect();
    f.embed(tm, &map)
}

/// Geodesic spray `ẋ^μ ∂_{x^μ} − Γ^λ_{(μν)} ẋ^μ ẋ^ν ∂_{ẋ^λ}` on `TM`.
pub fn geodesic_spray(nabla: &ConnectionData) -> Result<VectorFieldOnTangent, GeomError> {
    nabla.require_tangent()?;
    let n = nabla.dim();
    let tm = Chart::tangent(&nabla.base);
    let xdot: Vec<ScalarFn> = (0..n).map(|i| ScalarFn::var(&tm, n + i)).collect();
    let mut comps: Vec<ScalarFn> = xdot.clone();
    for lam in 0..n {
        let mut acc = ScalarFn::zero(&tm);
        for mu in 0..n {
            for nu in 0..n {
                let g = nabla.g(mu, nu, lam);
                if g.is_zero() {
                    continue;
                }
                acc -= &(&lift_to_tangent(g, &tm) * &(&xdot[mu] * &xdot[nu]));
            }
        }
        comps.push(acc);
    }
    Ok(VectorField::new(&tm, comps))
}

/// Vertical lift `X^μ(x) ∂_{ẋ^μ}` of a vector field to `TM`.
pub fn vertical_lift(x: &VectorField, tm: &ChartRef) -> VectorField {
    let n = x.chart().dim();
    let mut comps = vec![ScalarFn::zero(tm); n];
    comps.extend(x.comps().iter().map(|c| lift_to_tangent(c, tm)));
    VectorField::new(tm, comps)
}

/// `(L_X ∇)(∂_μ, ∂_ν) = [X, ∇_μ ∂_ν] − ∇_{[X,∂_μ]} ∂_ν − ∇_μ [X, ∂_ν]`, stored `[μ][ν][λ]`.
pub fn lie_derivative_connection(
    x: &VectorField,
    nabla: &ConnectionData,
) -> Result<TensorField, GeomError> {
    nabla.require_tangent()?;
    let chart = nabla.base.clone();
    let n = chart.dim();
    let coords: Vec<VectorField> = (0..n).map(|i| VectorField::coordinate(&chart, i)).collect();
    let mut data = Vec::with_capacity(n * n * n);
    for mu in 0..n {
        let x_mu = x.bracket(&coords[mu]);
        for nu in 0..n {
            let v = lie_derivative_connection_on(x, nabla, &coords[mu], &coords[nu], Some(&x_mu));
            data.extend(v.into_comps());
        }
    }
    TensorField::new(&chart, 2, 1, CompArray::from_vec(&[n, n, n], data))
}

/// `(L_X ∇)(Y, Z)` for arbitrary vector fields.
pub fn lie_derivative_connection_on(
    x: &VectorField,
    nabla: &ConnectionData,
    y: &VectorField,
    z: &VectorField,
    xy: Option<&VectorField>,
) -> VectorField {
    let xy_owned;
    let xy = match xy {
        Some(v) => v,
        None => {
            xy_owned = x.bracket(y);
            &xy_owned
        }
    };
    let t1 = x.bracket(&nabla.covariant(y, z));
    let t2 = nabla.covariant(xy, z);
    let t3 = nabla.covariant(y, &x.bracket(z));
    t1.sub(&t2).sub(&t3)
}

#[cfg(test)]
mod tests;

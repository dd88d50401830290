//! The Lie functor: the algebroid of `G` and the IM connection components
//! induced by a multiplicative connection.

use super::complex::right_translation;
use super::{
    check_multiplicative, jac_along, push_last, s_projection, CoordGroupoid, GroupoidError,
};
use crate::algebroid::AlgebroidData;
use crate::geometry::{
    lie_derivative_connection, pull_covariant, torsion_of, CompArray, ConnectionData, VectorField,
};
use crate::imconn::{ConnComponents, IMConnComponents};
use crate::symkernel::{Chart, ScalarFn};

impl CoordGroupoid {
    /// `e⃗_i(g) = dR_g(∂_{a_i})` for the isotropy coordinates `a_i`.
    pub fn right_invariant_frame(&self) -> Result<Vec<VectorField>, GroupoidError> {
        let dr = right_translation(self)?;
        Ok(self
            .isotropy_coords()
            .iter()
            .map(|&a| VectorField::new(&self.arrows, dr.iter().map(|row| row[a].clone()).collect()))
            .collect())
    }

    /// Rows `a_i` of `I − du ∘ ds` at the units: reads `A`-components of vectors in `T_{u(x)}G`.
    pub fn algebroid_projector(&self) -> Vec<Vec<ScalarFn>> {
        let n = self.arrows.dim();
        let ju = self.u.jacobian();
        let js = jac_along(&self.s, &self.u);
        let entry = |a: usize, c: usize| {
            let mut acc = if a == c {
                ScalarFn::one(&self.objects)
            } else {
                ScalarFn::zero(&self.objects)
            };
            for (x, row) in ju[a].iter().zip(&js) {
                if !x.is_zero() && !row[c].is_zero() {
                    acc -= &(x * &row[c]);
                }
            }
            acc
        };
        self.isotropy_coords()
            .iter()
            .map(|&a| (0..n).map(|c| entry(a, c)).collect())
            .collect()
    }

    /// `A = ker ds|_M` with `ρ = dt` and the bracket of right-invariant fields.
    pub fn lie_algebroid(&self) -> Result<AlgebroidData, GroupoidError> {
        let frame = self.right_invariant_frame()?;
        let r = frame.len();
        let m = self.objects.dim();
        let jt = self.t.jacobian();
        let anchor = frame
            .iter()
            .map(|e| {
                (0..m)
                    .map(|mu| {
                        let mut acc = ScalarFn::zero(&self.arrows);
                        for (j, x) in jt[mu].iter().zip(e.comps()) {
                            if !j.is_zero() && !x.is_zero() {
                                acc += &(j * x);
                            }
                        }
                        self.u.pull(&acc)
                    })
                    .collect()
            })
            .collect();
        let proj = self.algebroid_projector();
        let mut structure = vec![ScalarFn::zero(&self.objects); r * r * r];
        for i in 0..r {
            for j in 0..r {
                let br = frame[i].bracket(&frame[j]);
                let at_units: Vec<ScalarFn> = br.comps().iter().map(|c| self.u.pull(c)).collect();
                let mut rhs = VectorField::zero(&self.arrows);
                for k in 0..r {
                    let mut c = ScalarFn::zero(&self.objects);
                    for (p, v) in proj[k].iter().zip(&at_units) {
                        if !p.is_zero() && !v.is_zero() {
                            c += &(p * v);
                        }
                    }
                    rhs = rhs.add(&frame[k].mul_fn(&self.t.pull(&c)));
                    structure[(i * r + j) * r + k] = c;
                }
                if rhs != br {
                    return Err(GroupoidError::PostCheck(format!(
                        "[e{}, e{}] is not right-invariant in the frame",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(AlgebroidData::new(&self.objects, r, anchor, structure)?)
    }
}

/// IM connection components `(𝓕, ∇ᴬ, ∇ᴹ, l)` of a multiplicative connection:
/// `𝓕(a) = pr_A(L_{a⃗}∇)|_M`, `∇ᴬ_X a = pr_A(∇_{du X} a⃗)`,
/// `l(a) = pr_A(T(a⃗, ·))|_M` and `∇ᴹ` the `s`-projection.
pub fn lie_functor(
    g: &CoordGroupoid,
    nabla: &ConnectionData,
) -> Result<IMConnComponents, GroupoidError> {
    if !check_multiplicative(g, nabla)?.route_m {
        return Err(GroupoidError::Precondition(
            "connection is not multiplicative".into(),
        ));
    }
    let alg = g.lie_algebroid()?;
    let frame = g.right_invariant_frame()?;
    let proj = g.algebroid_projector();
    let (m, n, r) = (g.objects.dim(), g.arrows.dim(), frame.len());
    let base = &g.objects;
    let torsion = torsion_of(nabla)?;

    let mut f = CompArray::zeros(base, &[r, m, m, r]);
    let mut gamma_a = vec![ScalarFn::zero(base); m * r * r];
    let mut l = CompArray::zeros(base, &[r, m, r]);
    for (i, e) in frame.iter().enumerate() {
        let lie = lie_derivative_connection(e, nabla)?;
        let fi = push_last(&proj, &pull_covariant(lie.comps(), 2, &g.u), base);
        let rows: Vec<Vec<ScalarFn>> = (0..n)
            .map(|nu| nabla.derivative_coord(nu, e.comps()))
            .collect();
        let cov = CompArray::from_fn(&[n, n], |ix| rows[ix[0]][ix[1]].clone());
        let gi = push_last(&proj, &pull_covariant(&cov, 1, &g.u), base);
        let ti = CompArray::from_fn(&[n, n], |ix| {
            let mut acc = ScalarFn::zero(&g.arrows);
            for (a, ea) in e.comps().iter().enumerate() {
                let t = torsion.get(&[a, ix[0], ix[1]]);
                if !ea.is_zero() && !t.is_zero() {
                    acc += &(ea * t);
                }
            }
            acc
        });
        let li = push_last(&proj, &pull_covariant(&ti, 1, &g.u), base);
        for mu in 0..m {
            for k in 0..r {
                gamma_a[(mu * r + i) * r + k] = gi.get(&[mu, k]).clone();
                l.set(&[i, mu, k], li.get(&[mu, k]).clone());
                for nu in 0..m {
                    f.set(&[i, mu, nu, k], fi.get(&[mu, nu, k]).clone());
                }
            }
        }
    }
    let nm = s_projection(g, nabla)?.expect("multiplicative connections are s-projectable");
    debug_assert!(Chart::same(nm.base(), base));
    let gamma_a = ConnectionData::new(base, r, gamma_a)?;
    Ok(IMConnComponents::new(
        alg,
        ConnComponents::new(f, gamma_a, nm, l)?,
    )?)
}

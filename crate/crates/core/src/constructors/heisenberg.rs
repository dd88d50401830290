use super::{bracket_from_connection, secondary_to_plain, ConstructError, SecondaryComponents};
use crate::algebroid::AlgebroidData;
use crate::geometry::{CompArray, ConnectionData, TensorField, VectorField};
use crate::imconn::IMConnComponents;
use crate::symkernel::{Chart, ChartRef, PolyMap, Rat, ScalarFn};

/// Structure constants `c^k_{ij}` at `(i*3+j)*3+k` of `[e2, e3] = e1`.
pub fn heisenberg_structure() -> Vec<Rat> {
    let mut c = vec![Rat::zero(); 27];
    c[(3 + 2) * 3] = Rat::one();
    c[(2 * 3 + 1) * 3] = -Rat::one();
    c
}

/// Right-invariant fields `dR_g(v)` for tangent vectors `v` at the unit `0`,
/// read off the jacobian of `m(h, g)` in `h` at `h = 0`.
pub fn right_invariant_frame(
    mult: &PolyMap,
    group: &ChartRef,
    at_unit: &[Vec<Rat>],
) -> Vec<VectorField> {
    let n = group.dim();
    let jac = mult.jacobian();
    let h: Vec<usize> = (0..n).collect();
    let g_vars: Vec<usize> = (n..2 * n).collect();
    at_unit
        .iter()
        .map(|v| {
            let comps = (0..n)
                .map(|lam| {
                    let mut acc = ScalarFn::zero(mult.source());
                    for (a, va) in v.iter().enumerate() {
                        acc += &jac[lam][a].scale(va);
                    }
                    acc.set_zero(&h)
                        .restrict(group, &g_vars)
                        .expect("only g remains")
                })
                .collect();
            VectorField::new(group, comps)
        })
        .collect()
}

fn det(m: &[Vec<ScalarFn>], chart: &ChartRef) -> ScalarFn {
    let n = m.len();
    if n == 0 {
        return ScalarFn::one(chart);
    }
    let mut acc = ScalarFn::zero(chart);
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<ScalarFn>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != j)
                    .map(|(_, x)| x.clone())
                    .collect()
            })
            .collect();
        let t = &m[0][j] * &det(&minor, chart);
        if j % 2 == 0 {
            acc += &t;
        } else {
            acc -= &t;
        }
    }
    acc
}

/// Inverse of a polynomial matrix with constant nonzero determinant.
fn unimodular_inverse(m: &[Vec<ScalarFn>], chart: &ChartRef) -> Option<Vec<Vec<ScalarFn>>> {
    let n = m.len();
    let d = det(m, chart).as_constant().filter(|d| !d.is_zero())?;
    let dinv = Rat::one() / d;
    Some(
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        // adj[i][j] = (−1)^{i+j} det(minor without row j, column i)
                        let minor: Vec<Vec<ScalarFn>> = m
                            .iter()
                            .enumerate()
                            .filter(|(r, _)| *r != j)
                            .map(|(_, row)| {
                                row.iter()
                                    .enumerate()
                                    .filter(|(c, _)| *c != i)
                                    .map(|(_, x)| x.clone())
                                    .collect()
                            })
                            .collect();
                        let c = det(&minor, chart).scale(&dinv);
                        if (i + j) % 2 == 0 {
                            c
                        } else {
                            -c
                        }
                    })
                    .collect()
            })
            .collect(),
    )
}

/// The Heisenberg group on `ℝ³ = (a, b, c)` with
/// `(a,b,c)(a′,b′,c′) = (a+a′, b+b′, c+c′+ab′)` and `e1, e2, e3` at the unit
/// pointing along `c, b, a`.
#[derive(Clone, Debug)]
pub struct HeisenbergGroup {
    pub chart: ChartRef,
    pub mult: PolyMap,
    pub inverse: PolyMap,
    /// Right-invariant frame `e⃗_i`.
    pub frame: Vec<VectorField>,
    /// Dual coframe `θ^i_μ` at `[i][μ]`.
    pub coframe: Vec<Vec<ScalarFn>>,
    pub structure: Vec<Rat>,
}

pub fn heisenberg_group() -> HeisenbergGroup {
    let chart = Chart::from_names("H", &["a", "b", "c"]);
    let pair = Chart::from_names("HxH", &["a", "b", "c", "a2", "b2", "c2"]);
    let p = |s: &str, ch: &ChartRef| ScalarFn::parse(ch, s).expect("literal");
    let mult = PolyMap::new(
        &pair,
        &chart,
        vec![
            p("a + a2", &pair),
            p("b + b2", &pair),
            p("c + c2 + a*b2", &pair),
        ],
    )
    .expect("mult");
    let inverse = PolyMap::new(
        &chart,
        &chart,
        vec![p("-a", &chart), p("-b", &chart), p("-c + a*b", &chart)],
    )
    .expect("inverse");
    let basis = |k: usize| {
        (0..3)
            .map(|a| if a == k { Rat::one() } else { Rat::zero() })
            .collect::<Vec<_>>()
    };
    let frame = right_invariant_frame(&mult, &chart, &[basis(2), basis(1), basis(0)]);
    let rows: Vec<Vec<ScalarFn>> = frame.iter().map(|v| v.comps().to_vec()).collect();
    // rows[i][λ] = e⃗_i^λ; the coframe is the transpose of its inverse.
    let inv = unimodular_inverse(&rows, &chart).expect("right translations are unimodular");
    let coframe = (0..3)
        .map(|i| (0..3).map(|mu| inv[mu][i].clone()).collect())
        .collect();
    HeisenbergGroup {
        chart,
        mult,
        inverse,
        frame,
        coframe,
        structure: heisenberg_structure(),
    }
}

impl HeisenbergGroup {
    pub fn c(&self, i: usize, j: usize, k: usize) -> &Rat {
        &self.structure[(i * 3 + j) * 3 + k]
    }

    fn e(&self, i: usize, lam: usize) -> &ScalarFn {
        self.frame[i].comp(lam)
    }

    /// The flat connection `D⃗` making the right-invariant frame parallel:
    /// `Γ^λ_{μν} = ∂_μθ^i_ν e⃗_i^λ`.
    pub fn d_vec(&self) -> ConnectionData {
        ConnectionData::from_fn(&self.chart, 3, |mu, nu, lam| {
            let mut acc = ScalarFn::zero(&self.chart);
            for i in 0..3 {
                acc += &(&self.coframe[i][nu].diff(mu) * self.e(i, lam));
            }
            acc
        })
    }

    /// Right-invariant extension `B⃗` of the bracket.
    pub fn b_vec(&self) -> TensorField {
        let ch = &self.chart;
        let arr = CompArray::from_fn(&[3, 3, 3], |ix| {
            let (mu, nu, lam) = (ix[0], ix[1], ix[2]);
            let mut acc = ScalarFn::zero(ch);
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        let c = self.c(i, j, k);
                        if !c.is_zero() {
                            acc += &(&(&self.coframe[i][mu] * &self.coframe[j][nu])
                                * self.e(k, lam))
                            .scale(c);
                        }
                    }
                }
            }
            acc
        });
        TensorField::new(ch, 2, 1, arr).expect("shape")
    }

    /// `D⃗ + t B⃗`.
    pub fn d_plus_b(&self, t: &Rat) -> ConnectionData {
        let b = self.b_vec();
        let d = self.d_vec();
        ConnectionData::from_fn(&self.chart, 3, |mu, nu, lam| {
            d.g(mu, nu, lam) + &b.get(&[mu, nu, lam]).scale(t)
        })
    }

    /// Frame components `R(e⃗_i, e⃗_j)e⃗_k = Σ_m R^m_{ijk} e⃗_m` at `[i][j][k][m]`.
    pub fn curvature_in_frame(&self, nabla: &ConnectionData) -> CompArray {
        let r = crate::geometry::curvature_of(nabla);
        let ch = &self.chart;
        CompArray::from_fn(&[3, 3, 3, 3], |ix| {
            let (i, j, k, m) = (ix[0], ix[1], ix[2], ix[3]);
            let mut acc = ScalarFn::zero(ch);
            for mu in 0..3 {
                for nu in 0..3 {
                    for b in 0..3 {
                        let w = &(self.e(i, mu) * self.e(j, nu)) * self.e(k, b);
                        if w.is_zero() {
                            continue;
                        }
                        for c in 0..3 {
                            let rr = r.get(&[mu, nu, b, c]);
                            if !rr.is_zero() && !self.coframe[m][c].is_zero() {
                                acc += &(&(&w * rr) * &self.coframe[m][c]);
                            }
                        }
                    }
                }
            }
            acc
        })
    }

    /// `[[e_i, e_j], e_k]` in the basis, at `[i][j][k][m]`.
    pub fn double_bracket(&self) -> Vec<Rat> {
        let mut out = vec![Rat::zero(); 81];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for p in 0..3 {
                        for m in 0..3 {
                            let v = self.c(i, j, p).clone() * self.c(p, k, m).clone();
                            out[((i * 3 + j) * 3 + k) * 3 + m] += v;
                        }
                    }
                }
            }
        }
        out
    }
}

/// Parses endomorphisms written as sums of `q*ei*ej^*` terms (`ei ⊗ ej*`),
/// or `id` / `0`. Returns `r[j][i]`, the `e_j` component of `r(e_i)`.
pub fn parse_r_matrix(s: &str) -> Result<[[Rat; 3]; 3], ConstructError> {
    let mut r: [[Rat; 3]; 3] = Default::default();
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = |m: &str| ConstructError::Precondition(format!("cannot parse r = {s:?}: {m}"));
    if t == "id" || t == "identity" {
        for (i, row) in r.iter_mut().enumerate() {
            row[i] = Rat::one();
        }
        return Ok(r);
    }
    if t == "0" || t.is_empty() {
        return Ok(r);
    }
    let mut terms = Vec::new();
    let mut cur = String::new();
    for ch in t.chars() {
        if (ch == '+' || ch == '-') && !cur.is_empty() {
            terms.push(std::mem::take(&mut cur));
        }
        cur.push(ch);
    }
    terms.push(cur);
    for term in terms {
        let (sign, body) = match term.strip_prefix('-') {
            Some(b) => (-Rat::one(), b),
            None => (Rat::one(), term.strip_prefix('+').unwrap_or(&term)),
        };
        let body = body
            .strip_suffix("^*")
            .ok_or_else(|| bad("each term must end in ej^*"))?;
        let parts: Vec<&str> = body.split('*').collect();
        let (coef, e_out, e_in) = match parts.as_slice() {
            [o, i] => (Rat::one(), *o, *i),
            [c, o, i] => (
                c.parse::<Rat>().map_err(|_| bad("bad coefficient"))?,
                *o,
                *i,
            ),
            _ => return Err(bad("expected [q*]ei*ej^*")),
        };
        let idx = |e: &str| -> Result<usize, ConstructError> {
            match e.strip_prefix('e').and_then(|d| d.parse::<usize>().ok()) {
                Some(k) if (1..=3).contains(&k) => Ok(k - 1),
                _ => Err(bad("basis vectors are e1, e2, e3")),
            }
        };
        let (o, i) = (idx(e_out)?, idx(e_in)?);
        r[o][i] += sign.clone() * coef;
    }
    Ok(r)
}

/// The Heisenberg member of the flat-`∇ᴬ` family: `(TM)_r` with the right-invariant
/// frame, anchor `r⃗` and secondary components `(D⃗, D⃗^sym, 0)`.
#[derive(Clone, Debug)]
pub struct HeisenbergToy {
    pub group: HeisenbergGroup,
    /// `r[j][i]`: `e_j` component of `r(e_i)`.
    pub r: [[Rat; 3]; 3],
    pub algebroid: AlgebroidData,
    /// Secondary components in the right-invariant frame of `A`.
    pub secondary: SecondaryComponents,
    pub im: IMConnComponents,
    /// Pairs `(e_j, r(e_i))` with nonzero bracket: these obstruct `∇̄ρ = 0`.
    pub anchor_parallel_violations: Vec<String>,
}

fn r_of(r: &[[Rat; 3]; 3], v: &[Rat]) -> Vec<Rat> {
    (0..3)
        .map(|j| (0..3).fold(Rat::zero(), |acc, i| acc + r[j][i].clone() * v[i].clone()))
        .collect()
}

fn bracket_vec(c: &[Rat], v: &[Rat], w: &[Rat]) -> Vec<Rat> {
    let mut out = vec![Rat::zero(); 3];
    for i in 0..3 {
        for j in 0..3 {
            for (k, o) in out.iter_mut().enumerate() {
                *o += v[i].clone() * w[j].clone() * c[(i * 3 + j) * 3 + k].clone();
            }
        }
    }
    out
}

fn unit(i: usize) -> Vec<Rat> {
    (0..3)
        .map(|k| if k == i { Rat::one() } else { Rat::zero() })
        .collect()
}

/// Checks `[𝔥, 𝔥] ⊆ ker r` and `[[r(v), w], z] = 0` on basis vectors, then
/// assembles the algebroid `(TM)_r` and its components.
pub fn heisenberg_toy(r: [[Rat; 3]; 3]) -> Result<HeisenbergToy, ConstructError> {
    let group = heisenberg_group();
    let c = group.structure.clone();
    for i in 0..3 {
        for j in i + 1..3 {
            if r_of(&r, &bracket_vec(&c, &unit(i), &unit(j)))
                .iter()
                .any(|x| !x.is_zero())
            {
                return Err(ConstructError::Condition {
                    condition: "[g,g] ⊆ ker r".into(),
                    at: format!("(e{}, e{})", i + 1, j + 1),
                });
            }
        }
    }
    for v in 0..3 {
        for w in 0..3 {
            for z in 0..3 {
                let inner = bracket_vec(&c, &r_of(&r, &unit(v)), &unit(w));
                if bracket_vec(&c, &inner, &unit(z))
                    .iter()
                    .any(|x| !x.is_zero())
                {
                    return Err(ConstructError::Condition {
                        condition: "[[r(v),w],z] = 0".into(),
                        at: format!("(e{}, e{}, e{})", v + 1, w + 1, z + 1),
                    });
                }
            }
        }
    }
    let mut anchor_parallel_violations = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            if bracket_vec(&c, &unit(j), &r_of(&r, &unit(i)))
                .iter()
                .any(|x| !x.is_zero())
            {
                anchor_parallel_violations.push(format!("[e{}, r(e{})] ≠ 0", j + 1, i + 1));
            }
        }
    }
    let ch = group.chart.clone();
    let anchor: Vec<Vec<ScalarFn>> = (0..3)
        .map(|i| {
            (0..3)
                .map(|lam| {
                    let mut acc = ScalarFn::zero(&ch);
                    for j in 0..3 {
                        if !r[j][i].is_zero() {
                            acc += &group.frame[j].comp(lam).scale(&r[j][i]);
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    // In the right-invariant frame of A, D⃗ has vanishing connection coefficients.
    let nabla_a = ConnectionData::zero(&ch, 3);
    let nabla_m = group.d_plus_b(&Rat::new(1, 2));
    let algebroid = bracket_from_connection(&nabla_a, anchor)?;
    let secondary =
        SecondaryComponents::new(nabla_a, nabla_m, CompArray::zeros(&ch, &[3, 3, 3, 3]))?;
    let im = IMConnComponents::new(algebroid.clone(), secondary_to_plain(&secondary))?;
    Ok(HeisenbergToy {
        group,
        r,
        algebroid,
        secondary,
        im,
        anchor_parallel_violations,
    })
}

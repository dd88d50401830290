use super::{Chart, ChartRef, Exps, Rat, ScalarFn, SymError};

/// Polynomial map between charts, one component per target variable.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMap {
    source: ChartRef,
    target: ChartRef,
    comps: Vec<ScalarFn>,
}

impl PolyMap {
    pub fn new(
        source: &ChartRef,
        target: &ChartRef,
        comps: Vec<ScalarFn>,
    ) -> Result<PolyMap, SymError> {
        if comps.len() != target.dim() {
            return Err(SymError::Shape(format!(
                "map into `{}` needs {} components, got {}",
                target.name(),
                target.dim(),
                comps.len()
            )));
        }
        for c in &comps {
            if !Chart::same(c.chart(), source) {
                return Err(SymError::ChartMismatch {
                    expected: source.name().to_string(),
                    found: c.chart().name().to_string(),
                });
            }
        }
        Ok(PolyMap {
            source: source.clone(),
            target: target.clone(),
            comps,
        })
    }

    pub fn identity(chart: &ChartRef) -> PolyMap {
        let comps = (0..chart.dim()).map(|i| ScalarFn::var(chart, i)).collect();
        PolyMap {
            source: chart.clone(),
            target: chart.clone(),
            comps,
        }
    }

    /// Coordinate selection `x ↦ (x_{idx[0]}, x_{idx[1]}, ...)`.
    pub fn select(source: &ChartRef, target: &ChartRef, idx: &[usize]) -> PolyMap {
        assert_eq!(idx.len(), target.dim());
        let comps = idx.iter().map(|&i| ScalarFn::var(source, i)).collect();
        PolyMap {
            source: source.clone(),
            target: target.clone(),
            comps,
        }
    }

    pub fn source(&self) -> &ChartRef {
        &self.source
    }

    pub fn target(&self) -> &ChartRef {
        &self.target
    }

    pub fn comps(&self) -> &[ScalarFn] {
        &self.comps
    }

    pub fn comp(&self, i: usize) -> &ScalarFn {
        &self.comps[i]
    }

    /// `f ∘ self` for `f` on the target chart.
    pub fn pull(&self, f: &ScalarFn) -> ScalarFn {
        assert!(
            Chart::same(f.chart(), &self.target),
            "pullback chart mismatch: `{}` vs `{}`",
            f.chart().name(),
            self.target.name()
        );
        let mut powers: Vec<Vec<ScalarFn>> = vec![Vec::new(); self.target.dim()];
        let mut acc: Vec<ScalarFn> = Vec::with_capacity(f.num_terms());
        for (e, c) in f.terms() {
            let mut t = ScalarFn::constant(&self.source, c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let pw = &mut powers[i];
                if pw.is_empty() {
                    pw.push(ScalarFn::one(&self.source));
                }
                while pw.len() <= k as usize {
                    let next = pw.last().unwrap() * &self.comps[i];
                    pw.push(next);
                }
                t = &t * &pw[k as usize];
            }
            acc.push(t);
        }
        super::poly::sum(&self.source, acc.iter())
    }

    pub fn pullback(&self, f: &ScalarFn) -> Result<ScalarFn, SymError> {
        if !Chart::same(f.chart(), &self.target) {
            return Err(SymError::ChartMismatch {
                expected: self.target.name().to_string(),
                found: f.chart().name().to_string(),
            });
        }
        Ok(self.pull(f))
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &PolyMap) -> PolyMap {
        assert!(
            Chart::same(inner.target(), &self.source),
            "composition chart mismatch"
        );
        let comps = self.comps.iter().map(|c| inner.pull(c)).collect();
        PolyMap {
            source: inner.source.clone(),
            target: self.target.clone(),
            comps,
        }
    }

    /// `J[a][i] = ∂ φ^a / ∂ x^i`, target.dim × source.dim.
    pub fn jacobian(&self) -> Vec<Vec<ScalarFn>> {
        self.comps
            .iter()
            .map(|c| (0..self.source.dim()).map(|i| c.diff(i)).collect())
            .collect()
    }

    pub fn eval(&self, point: &[Rat]) -> Vec<Rat> {
        self.comps.iter().map(|c| c.eval(point)).collect()
    }

    /// Same map with the source re-labelled by an equal-dimensional chart.
    pub fn with_charts(&self, source: &ChartRef, target: &ChartRef) -> PolyMap {
        assert_eq!(source.dim(), self.source.dim());
        assert_eq!(target.dim(), self.target.dim());
        PolyMap {
            source: source.clone(),
            target: target.clone(),
            comps: self.comps.iter().map(|c| c.rechart(source)).collect(),
        }
    }

    /// Exact equality of components.
    pub fn same_as(&self, o: &PolyMap) -> bool {
        Chart::same(&self.source, &o.source)
            && Chart::same(&self.target, &o.target)
            && self.comps == o.comps
    }

    /// `(f, g): P → M × N` for maps with a common source.
    pub fn pair(f: &PolyMap, g: &PolyMap, target: &ChartRef) -> PolyMap {
        assert!(Chart::same(&f.source, &g.source));
        assert_eq!(target.dim(), f.target.dim() + g.target.dim());
        let comps = f.comps.iter().chain(g.comps.iter()).cloned().collect();
        PolyMap {
            source: f.source.clone(),
            target: target.clone(),
            comps,
        }
    }

    /// `f × g: M1 × M2 → N1 × N2` on the given product charts.
    pub fn product(f: &PolyMap, g: &PolyMap, source: &ChartRef, target: &ChartRef) -> PolyMap {
        let n1 = f.source.dim();
        let n2 = g.source.dim();
        assert_eq!(source.dim(), n1 + n2);
        let m1: Vec<usize> = (0..n1).collect();
        let m2: Vec<usize> = (n1..n1 + n2).collect();
        let comps = f
            .comps
            .iter()
            .map(|c| c.embed(source, &m1))
            .chain(g.comps.iter().map(|c| c.embed(source, &m2)))
            .collect();
        PolyMap::new(source, target, comps).unwrap()
    }
}

/// All exponent vectors of total degree ≤ `d` in `n` variables, graded order.
pub fn monomials_up_to(n: usize, d: u32) -> Vec<Exps> {
    let mut out = Vec::new();
    for deg in 0..=d {
        let mut cur: Exps = smallvec::SmallVec::from_elem(0, n);
        fill(&mut out, &mut cur, 0, deg);
    }
    out
}

fn fill(out: &mut Vec<Exps>, cur: &mut Exps, i: usize, left: u32) {
    let n = cur.len();
    if n == 0 {
        if left == 0 {
            out.push(cur.clone());
        }
        return;
    }
    if i == n - 1 {
        cur[i] = left as u8;
        out.push(cur.clone());
        cur[i] = 0;
        return;
    }
    for k in (0..=left).rev() {
        cur[i] = k as u8;
        fill(out, cur, i + 1, left - k);
    }
    cur[i] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials_up_to(3, 2).len(), 10);
        assert_eq!(monomials_up_to(2, 3).len(), 10);
        assert_eq!(monomials_up_to(0, 2).len(), 1);
    }

    #[test]
    fn pair_division_pullback() {
        let g2 = Chart::from_names("G2", &["x", "xp", "y"]);
        let g = Chart::from_names("G", &["a", "b"]);
        let mbar = PolyMap::select(&g2, &g, &[0, 1]);
        let f = ScalarFn::parse(&g, "a + b").unwrap();
        assert_eq!(mbar.pull(&f).to_string(), "x + xp");
        let id = PolyMap::identity(&g);
        assert_eq!(id.pull(&f), f);
        let j = mbar.jacobian();
        assert_eq!(j[0][0].to_string(), "1");
        assert!(j[0][2].is_zero());
    }
}

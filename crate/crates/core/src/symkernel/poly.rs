use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use smallvec::SmallVec;

use super::{Rat, SymError};

/// Exponent vector of a monomial, one entry per chart variable.
pub type Exps = SmallVec<[u8; 16]>;

pub type ChartRef = Arc<Chart>;

/// A named coordinate domain with ordered variable names.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chart {
    name: String,
    vars: Vec<String>,
}

impl Chart {
    pub fn new<S: Into<String>>(name: S, vars: Vec<String>) -> Result<ChartRef, SymError> {
        for (i, v) in vars.iter().enumerate() {
            if !is_identifier(v) {
                return Err(SymError::BadVariable(v.clone()));
            }
            if vars[..i].contains(v) {
                return Err(SymError::DuplicateVariable(v.clone()));
            }
        }
        Ok(Arc::new(Chart {
            name: name.into(),
            vars,
        }))
    }

    /// Chart with variables `prefix1 .. prefixN`.
    pub fn numbered(name: &str, prefix: &str, n: usize) -> ChartRef {
        Chart::new(name, (1..=n).map(|i| format!("{prefix}{i}")).collect()).unwrap()
    }

    pub fn from_names(name: &str, vars: &[&str]) -> ChartRef {
        Chart::new(name, vars.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn var_index(&self, v: &str) -> Option<usize> {
        self.vars.iter().position(|w| w == v)
    }

    /// Product chart; variable names get `_1`/`_2` suffixes only when the factors clash.
    pub fn product(a: &Chart, b: &Chart) -> ChartRef {
        let clash = a.vars.iter().any(|v| b.vars.contains(v));
        let vars = if clash {
            a.vars
                .iter()
                .map(|v| format!("{v}_1"))
                .chain(b.vars.iter().map(|v| format!("{v}_2")))
                .collect()
        } else {
            a.vars.iter().chain(b.vars.iter()).cloned().collect()
        };
        Chart::new(format!("{}x{}", a.name, b.name), vars).unwrap()
    }

    /// Tangent chart `(x, x_dot)`.
    pub fn tangent(a: &Chart) -> ChartRef {
        let vars = a
            .vars
            .iter()
            .cloned()
            .chain(a.vars.iter().map(|v| format!("{v}_dot")))
            .collect();
        Chart::new(format!("T{}", a.name), vars).unwrap()
    }

    pub fn same(a: &ChartRef, b: &ChartRef) -> bool {
        Arc::ptr_eq(a, b) || **a == **b
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut cs = s.chars();
    match cs.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Exact polynomial with rational coefficients on a chart.
///
/// Terms are kept sorted by exponent vector with no zero coefficients, so the
/// representation is canonical and `==` decides mathematical equality.
#[derive(Clone)]
pub struct ScalarFn {
    chart: ChartRef,
    terms: Vec<(Exps, Rat)>,
}

impl PartialEq for ScalarFn {
    fn eq(&self, o: &ScalarFn) -> bool {
        Chart::same(&self.chart, &o.chart) && self.terms == o.terms
    }
}

impl Eq for ScalarFn {}

fn zero_exps(n: usize) -> Exps {
    SmallVec::from_elem(0, n)
}

fn add_exps(a: &Exps, b: &Exps) -> Exps {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.checked_add(*y).expect("exponent overflow"))
        .collect()
}

impl ScalarFn {
    pub fn zero(chart: &ChartRef) -> ScalarFn {
        ScalarFn {
            chart: chart.clone(),
            terms: Vec::new(),
        }
    }

    pub fn constant(chart: &ChartRef, c: Rat) -> ScalarFn {
        let mut f = ScalarFn::zero(chart);
        if !c.is_zero() {
            f.terms.push((zero_exps(chart.dim()), c));
        }
        f
    }

    pub fn int(chart: &ChartRef, n: i64) -> ScalarFn {
        ScalarFn::constant(chart, Rat::int(n))
    }

    pub fn one(chart: &ChartRef) -> ScalarFn {
        ScalarFn::int(chart, 1)
    }

    /// The coordinate function `x_i`.
    pub fn var(chart: &ChartRef, i: usize) -> ScalarFn {
        assert!(i < chart.dim(), "variable index {i} out of range");
        let mut e = zero_exps(chart.dim());
        e[i] = 1;
        ScalarFn {
            chart: chart.clone(),
            terms: vec![(e, Rat::one())],
        }
    }

    pub fn monomial(chart: &ChartRef, exps: &[u8], c: Rat) -> ScalarFn {
        assert_eq!(exps.len(), chart.dim());
        let mut f = ScalarFn::zero(chart);
        if !c.is_zero() {
            f.terms.push((SmallVec::from_slice(exps), c));
        }
        f
    }

    /// Builds from arbitrary (possibly repeated, unsorted) terms.
    pub fn from_terms(chart: &ChartRef, terms: Vec<(Exps, Rat)>) -> ScalarFn {
        for (e, _) in &terms {
            assert_eq!(e.len(), chart.dim(), "exponent length mismatch");
        }
        ScalarFn {
            chart: chart.clone(),
            terms: normalize(terms),
        }
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn terms(&self) -> &[(Exps, Rat)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Constant value if the polynomial is constant.
    pub fn as_constant(&self) -> Option<Rat> {
        match self.terms.as_slice() {
            [] => Some(Rat::zero()),
            [(e, c)] if e.iter().all(|x| *x == 0) => Some(c.clone()),
            _ => None,
        }
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms
            .iter()
            .map(|(e, _)| e.iter().map(|x| *x as u32).sum())
            .max()
    }

    /// Highest total degree in the given subset of variables.
    pub fn degree_in(&self, vars: &[usize]) -> Option<u32> {
        self.terms
            .iter()
            .map(|(e, _)| vars.iter().map(|&v| e[v] as u32).sum())
            .max()
    }

    pub fn depends_on(&self, var: usize) -> bool {
        self.terms.iter().any(|(e, _)| e[var] > 0)
    }

    fn check_chart(&self, o: &ScalarFn) {
        assert!(
            Chart::same(&self.chart, &o.chart),
            "chart mismatch: `{}` vs `{}`",
            self.chart.name,
            o.chart.name
        );
    }

    pub fn scale(&self, c: &Rat) -> ScalarFn {
        if c.is_zero() {
            return ScalarFn::zero(&self.chart);
        }
        ScalarFn {
            chart: self.chart.clone(),
            terms: self.terms.iter().map(|(e, a)| (e.clone(), a * c)).collect(),
        }
    }

    fn merge(&self, o: &ScalarFn, negate: bool) -> ScalarFn {
        self.check_chart(o);
        let mut out = Vec::with_capacity(self.terms.len() + o.terms.len());
        let (mut i, mut j) = (0, 0);
        let a = &self.terms;
        let b = &o.terms;
        let sgn = |c: &Rat| if negate { -c } else { c.clone() };
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push((b[j].0.clone(), sgn(&b[j].1)));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = if negate {
                        &a[i].1 - &b[j].1
                    } else {
                        &a[i].1 + &b[j].1
                    };
                    if !c.is_zero() {
                        out.push((a[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        out.extend(b[j..].iter().map(|(e, c)| (e.clone(), sgn(c))));
        ScalarFn {
            chart: self.chart.clone(),
            terms: out,
        }
    }

    fn times(&self, o: &ScalarFn) -> ScalarFn {
        self.check_chart(o);
        if self.terms.is_empty() || o.terms.is_empty() {
            return ScalarFn::zero(&self.chart);
        }
        let (short, long) = if self.terms.len() <= o.terms.len() {
            (self, o)
        } else {
            (o, self)
        };
        if short.terms.len() == 1 {
            // Shifting every exponent by the same vector preserves order.
            let (e0, c0) = &short.terms[0];
            let terms = long
                .terms
                .iter()
                .map(|(e, c)| (add_exps(e, e0), c * c0))
                .collect();
            return ScalarFn {
                chart: self.chart.clone(),
                terms,
            };
        }
        let mut prod = Vec::with_capacity(self.terms.len() * o.terms.len());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                prod.push((add_exps(ea, eb), ca * cb));
            }
        }
        ScalarFn {
            chart: self.chart.clone(),
            terms: normalize(prod),
        }
    }

    pub fn pow(&self, k: u32) -> ScalarFn {
        let mut acc = ScalarFn::one(&self.chart);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Formal partial derivative; panics on an out-of-range index.
    pub fn diff(&self, i: usize) -> ScalarFn {
        assert!(i < self.chart.dim(), "variable index {i} out of range");
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[i] > 0)
            .map(|(e, c)| {
                let k = e[i];
                let mut e2 = e.clone();
                e2[i] -= 1;
                (e2, c * &Rat::int(k as i64))
            })
            .collect();
        ScalarFn {
            chart: self.chart.clone(),
            terms,
        }
    }

    pub fn partial_derivative(&self, i: usize) -> Result<ScalarFn, SymError> {
        if i >= self.chart.dim() {
            return Err(SymError::IndexOutOfRange {
                index: i,
                dim: self.chart.dim(),
            });
        }
        Ok(self.diff(i))
    }

    pub fn eval(&self, point: &[Rat]) -> Rat {
        assert_eq!(point.len(), self.chart.dim());
        let mut acc = Rat::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (x, k) in point.iter().zip(e.iter()) {
                if *k > 0 {
                    t = &t * &x.pow(*k as u32);
                }
            }
            acc = &acc + &t;
        }
        acc
    }

    /// Re-expresses on `target`, sending variable `i` to variable `map[i]`.
    pub fn embed(&self, target: &ChartRef, map: &[usize]) -> ScalarFn {
        assert_eq!(map.len(), self.chart.dim());
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut e2 = zero_exps(target.dim());
                for (i, k) in e.iter().enumerate() {
                    e2[map[i]] += *k;
                }
                (e2, c.clone())
            })
            .collect();
        ScalarFn {
            chart: target.clone(),
            terms: normalize(terms),
        }
    }

    /// Same polynomial viewed on an equal-dimensional chart.
    pub fn rechart(&self, target: &ChartRef) -> ScalarFn {
        assert_eq!(target.dim(), self.chart.dim());
        ScalarFn {
            chart: target.clone(),
            terms: self.terms.clone(),
        }
    }

    /// Splits by the exponents of `vars`: returns pairs (exponents on `vars`,
    /// coefficient polynomial free of `vars`).
    pub fn split_by(&self, vars: &[usize]) -> Vec<(Vec<u8>, ScalarFn)> {
        let mut groups: std::collections::BTreeMap<Vec<u8>, Vec<(Exps, Rat)>> = Default::default();
        for (e, c) in &self.terms {
            let key: Vec<u8> = vars.iter().map(|&v| e[v]).collect();
            let mut rest = e.clone();
            for &v in vars {
                rest[v] = 0;
            }
            groups.entry(key).or_default().push((rest, c.clone()));
        }
        groups
            .into_iter()
            .map(|(k, ts)| {
                (
                    k,
                    ScalarFn {
                        chart: self.chart.clone(),
                        terms: normalize(ts),
                    },
                )
            })
            .collect()
    }

    /// Restricts to a chart whose variable `k` is our variable `vars[k]`;
    /// `None` if the polynomial depends on any other variable.
    pub fn restrict(&self, target: &ChartRef, vars: &[usize]) -> Option<ScalarFn> {
        assert_eq!(target.dim(), vars.len());
        let mut terms = Vec::with_capacity(self.terms.len());
        for (e, c) in &self.terms {
            let mut e2 = zero_exps(target.dim());
            let mut used = 0u32;
            for (k, &v) in vars.iter().enumerate() {
                e2[k] = e[v];
                used += e[v] as u32;
            }
            if used != e.iter().map(|&k| k as u32).sum::<u32>() {
                return None;
            }
            terms.push((e2, c.clone()));
        }
        Some(ScalarFn {
            chart: target.clone(),
            terms: normalize(terms),
        })
    }

    /// Substitutes `vars[k] := 0` for all k.
    pub fn set_zero(&self, vars: &[usize]) -> ScalarFn {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| vars.iter().all(|&v| e[v] == 0))
            .cloned()
            .collect();
        ScalarFn {
            chart: self.chart.clone(),
            terms,
        }
    }

    /// Replaces `x_i` by `t * x_i` for the listed variables (t a rational).
    pub fn scale_vars(&self, vars: &[usize], t: &Rat) -> ScalarFn {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let k: u32 = vars.iter().map(|&v| e[v] as u32).sum();
                (e.clone(), c * &t.pow(k))
            })
            .filter(|(_, c)| !c.is_zero())
            .collect();
        ScalarFn {
            chart: self.chart.clone(),
            terms,
        }
    }

    /// Leading term in the canonical print order, for defect summaries.
    pub fn leading_term(&self) -> String {
        match display_order(&self.terms).first() {
            None => "0".to_string(),
            Some(t) => {
                let single = ScalarFn {
                    chart: self.chart.clone(),
                    terms: vec![(*t).clone()],
                };
                single.to_string()
            }
        }
    }
}

fn normalize(mut terms: Vec<(Exps, Rat)>) -> Vec<(Exps, Rat)> {
    terms.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<(Exps, Rat)> = Vec::with_capacity(terms.len());
    for (e, c) in terms {
        match out.last_mut() {
            Some((le, lc)) if *le == e => *lc = &*lc + &c,
            _ => out.push((e, c)),
        }
    }
    out.retain(|(_, c)| !c.is_zero());
    out
}

fn display_order(terms: &[(Exps, Rat)]) -> Vec<&(Exps, Rat)> {
    let mut v: Vec<&(Exps, Rat)> = terms.iter().collect();
    v.sort_by(|a, b| {
        let da: u32 = a.0.iter().map(|x| *x as u32).sum();
        let db: u32 = b.0.iter().map(|x| *x as u32).sum();
        db.cmp(&da).then_with(|| b.0.cmp(&a.0))
    });
    v
}

impl fmt::Display for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in display_order(&self.terms).into_iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let mut factors: Vec<String> = Vec::new();
            let is_const = e.iter().all(|x| *x == 0);
            if !mag.is_one() || is_const {
                factors.push(mag.to_string());
            }
            for (i, p) in e.iter().enumerate() {
                match p {
                    0 => {}
                    1 => factors.push(self.chart.vars[i].clone()),
                    _ => factors.push(format!("{}^{}", self.chart.vars[i], p)),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.chart.name, self)
    }
}

impl Add<&ScalarFn> for &ScalarFn {
    type Output = ScalarFn;
    fn add(self, o: &ScalarFn) -> ScalarFn {
        self.merge(o, false)
    }
}

impl Sub<&ScalarFn> for &ScalarFn {
    type Output = ScalarFn;
    fn sub(self, o: &ScalarFn) -> ScalarFn {
        self.merge(o, true)
    }
}

impl Mul<&ScalarFn> for &ScalarFn {
    type Output = ScalarFn;
    fn mul(self, o: &ScalarFn) -> ScalarFn {
        self.times(o)
    }
}

impl Add for ScalarFn {
    type Output = ScalarFn;
    fn add(self, o: ScalarFn) -> ScalarFn {
        self.merge(&o, false)
    }
}

impl Sub for ScalarFn {
    type Output = ScalarFn;
    fn sub(self, o: ScalarFn) -> ScalarFn {
        self.merge(&o, true)
    }
}

impl Mul for ScalarFn {
    type Output = ScalarFn;
    fn mul(self, o: ScalarFn) -> ScalarFn {
        self.times(&o)
    }
}

impl Neg for &ScalarFn {
    type Output = ScalarFn;
    fn neg(self) -> ScalarFn {
        ScalarFn {
            chart: self.chart.clone(),
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }
}

impl Neg for ScalarFn {
    type Output = ScalarFn;
    fn neg(self) -> ScalarFn {
        -&self
    }
}

impl AddAssign<&ScalarFn> for ScalarFn {
    fn add_assign(&mut self, o: &ScalarFn) {
        if o.is_zero() {
            return;
        }
        *self = self.merge(o, false);
    }
}

impl SubAssign<&ScalarFn> for ScalarFn {
    fn sub_assign(&mut self, o: &ScalarFn) {
        if o.is_zero() {
            return;
        }
        *self = self.merge(o, true);
    }
}

impl AddAssign for ScalarFn {
    fn add_assign(&mut self, o: ScalarFn) {
        *self += &o;
    }
}

impl SubAssign for ScalarFn {
    fn sub_assign(&mut self, o: ScalarFn) {
        *self -= &o;
    }
}

/// Sum of a list of polynomials on `chart`.
pub fn sum<'a, I: IntoIterator<Item = &'a ScalarFn>>(chart: &ChartRef, it: I) -> ScalarFn {
    let mut terms = Vec::new();
    for f in it {
        assert!(Chart::same(chart, &f.chart), "chart mismatch in sum");
        terms.extend(f.terms.iter().cloned());
    }
    ScalarFn {
        chart: chart.clone(),
        terms: normalize(terms),
    }
}

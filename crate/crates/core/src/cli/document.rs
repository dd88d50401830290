//! Semantic documents: loading raw declarations into validated objects and
//! the canonical formatter.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use super::syntax::{format_document, parse_document, RawDecl};
use super::InputError;
use crate::algebroid::AlgebroidData;
use crate::constructors::{parse_r_matrix, TransitiveAbelianData};
use crate::geometry::{CompArray, ConnectionData};
use crate::groupoid::{Builtin, CoordGroupoid};
use crate::imconn::{ConnComponents, IMConnComponents};
use crate::symkernel::{is_identifier, Chart, ChartRef, PolyMap, Rat, ScalarFn};

#[derive(Clone, Debug)]
pub enum Recipe {
    /// `r[j][i]`: `e_j` component of `r(e_i)`.
    Heisenberg { r: [[Rat; 3]; 3] },
    VerticalBundle {
        total: String,
        base_dim: usize,
        nabla: String,
    },
    /// `c` and `theta` at `[μ][ν][k]` on the base of `nabla_m`.
    TransitiveAbelian {
        nabla_k: String,
        nabla_m: String,
        c: CompArray,
        theta: CompArray,
    },
}

impl Recipe {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Recipe::Heisenberg { .. } => "heisenberg",
            Recipe::VerticalBundle { .. } => "vertical_bundle",
            Recipe::TransitiveAbelian { .. } => "transitive_abelian",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CheckKind {
    Algebroid,
    Im,
    ImForm,
    Derived,
    Spray,
    FlatA,
    Axioms,
    Multiplicative,
    SimplConn,
    Obstruction,
    LieFunctor,
    Coboundary,
}

impl CheckKind {
    pub const ALL: [CheckKind; 12] = [
        CheckKind::Algebroid,
        CheckKind::Im,
        CheckKind::ImForm,
        CheckKind::Derived,
        CheckKind::Spray,
        CheckKind::FlatA,
        CheckKind::Axioms,
        CheckKind::Multiplicative,
        CheckKind::SimplConn,
        CheckKind::Obstruction,
        CheckKind::LieFunctor,
        CheckKind::Coboundary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Algebroid => "algebroid",
            CheckKind::Im => "im",
            CheckKind::ImForm => "im_form",
            CheckKind::Derived => "derived",
            CheckKind::Spray => "spray",
            CheckKind::FlatA => "flat_a",
            CheckKind::Axioms => "axioms",
            CheckKind::Multiplicative => "multiplicative",
            CheckKind::SimplConn => "simpl_conn",
            CheckKind::Obstruction => "obstruction",
            CheckKind::LieFunctor => "lie_functor",
            CheckKind::Coboundary => "coboundary",
        }
    }

    pub fn parse(s: &str) -> Option<CheckKind> {
        CheckKind::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Attributes besides `kind`; all are required except `degree`.
    fn attrs(self) -> &'static [&'static str] {
        use CheckKind::*;
        match self {
            Algebroid | Im | ImForm | Derived | Spray | FlatA => &["target"],
            Axioms => &["groupoid"],
            Multiplicative | SimplConn | LieFunctor => &["groupoid", "connection"],
            Obstruction => &["groupoid", "connection", "other"],
            Coboundary => &["groupoid", "connection", "degree"],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckRequest {
    pub kind: CheckKind,
    pub target: Option<String>,
    pub groupoid: Option<String>,
    pub connection: Option<String>,
    pub other: Option<String>,
    pub degree: Option<u32>,
}

impl CheckRequest {
    pub fn on_target(kind: CheckKind, target: &str) -> CheckRequest {
        CheckRequest {
            kind,
            target: Some(target.into()),
            groupoid: None,
            connection: None,
            other: None,
            degree: None,
        }
    }

    pub fn on_groupoid(kind: CheckKind, groupoid: &str, connection: Option<&str>) -> CheckRequest {
        CheckRequest {
            kind,
            target: None,
            groupoid: Some(groupoid.into()),
            connection: connection.map(Into::into),
            other: None,
            degree: None,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Object {
    Chart(ChartRef),
    Map {
        source: String,
        target: String,
        map: PolyMap,
    },
    Algebroid {
        base: String,
        data: AlgebroidData,
    },
    Connection {
        base: String,
        data: ConnectionData,
    },
    Im {
        algebroid: String,
        data: IMConnComponents,
    },
    Groupoid {
        builtin: Builtin,
        groupoid: Arc<CoordGroupoid>,
    },
    Recipe(Recipe),
    Check(CheckRequest),
}

impl Object {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Object::Chart(_) => "chart",
            Object::Map { .. } => "map",
            Object::Algebroid { .. } => "algebroid",
            Object::Connection { .. } => "connection",
            Object::Im { .. } => "im",
            Object::Groupoid { .. } => "groupoid",
            Object::Recipe(_) => "recipe",
            Object::Check(_) => "check",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Decl {
    pub name: String,
    pub object: Object,
    pub line: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Document {
    decls: Vec<Decl>,
    index: HashMap<String, usize>,
    charts: HashMap<String, ChartRef>,
}

fn parse_fn(chart: &ChartRef, s: &str, line: usize) -> Result<ScalarFn, InputError> {
    ScalarFn::parse(chart, s).map_err(|e| InputError::at(line, format!("`{s}`: {e}")))
}

fn parse_usize(d: &RawDecl, key: &str) -> Result<usize, InputError> {
    let v = d.require(key)?;
    v.parse().map_err(|_| {
        InputError::at(
            d.line,
            format!("`{key}` must be a non-negative integer, got `{v}`"),
        )
    })
}

fn check_attrs(d: &RawDecl, allowed: &[&str]) -> Result<(), InputError> {
    match d.attrs.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        Some((k, _)) => Err(InputError::at(
            d.line,
            format!("{} `{}`: unknown attribute `{k}`", d.kind, d.name),
        )),
        None => Ok(()),
    }
}

fn check_entry_keys(d: &RawDecl, allowed: &[&str]) -> Result<(), InputError> {
    match d
        .entries
        .iter()
        .find(|e| !allowed.contains(&e.key.as_str()))
    {
        Some(e) => Err(InputError::at(
            e.line,
            format!("{} `{}`: unknown entry `{}`", d.kind, d.name, e.key),
        )),
        None => Ok(()),
    }
}

/// Collects the entries `key[...]` of `d` into an array of `shape`.
fn fill(
    d: &RawDecl,
    key: &str,
    shape: &[usize],
    chart: &ChartRef,
) -> Result<CompArray, InputError> {
    let mut arr = CompArray::zeros(chart, shape);
    let mut seen = HashSet::new();
    for e in d.entries.iter().filter(|e| e.key == key) {
        if e.index.len() != shape.len() {
            return Err(InputError::at(
                e.line,
                format!("`{key}` takes {} indices", shape.len()),
            ));
        }
        if let Some((i, b)) = e.index.iter().zip(shape).find(|(i, b)| i >= b) {
            return Err(InputError::at(
                e.line,
                format!("index {i} out of range 0..{b} in `{key}`"),
            ));
        }
        if !seen.insert(e.index.clone()) {
            return Err(InputError::at(
                e.line,
                format!("duplicate entry `{key}{:?}`", e.index),
            ));
        }
        arr.set(&e.index, parse_fn(chart, &e.value, e.line)?);
    }
    Ok(arr)
}

fn emit(d: &mut RawDecl, key: &str, arr: &CompArray) {
    for (ix, v) in arr.nonzero() {
        d.entry(key, ix, v.to_string());
    }
}

fn emit_connection(d: &mut RawDecl, key: &str, c: &ConnectionData) {
    let (m, r) = (c.dim(), c.rank());
    emit(d, key, &CompArray::from_vec(&[m, r, r], c.gamma().to_vec()));
}

pub fn format_r(r: &[[Rat; 3]; 3]) -> String {
    let mut s = String::new();
    for (j, row) in r.iter().enumerate() {
        for (i, q) in row.iter().enumerate() {
            if q.is_zero() {
                continue;
            }
            let neg = q.is_negative();
            if !s.is_empty() || neg {
                s.push(if neg { '-' } else { '+' });
            }
            let mag = q.abs();
            if !mag.is_one() {
                s.push_str(&format!("{mag}*"));
            }
            s.push_str(&format!("e{}*e{}^*", j + 1, i + 1));
        }
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}

impl Document {
    pub fn new() -> Document {
        Document::default()
    }

    pub fn load(text: &str) -> Result<Document, InputError> {
        let mut doc = Document::new();
        for d in parse_document(text)? {
            let object = doc.build(&d)?;
            doc.insert(&d.name, object, d.line)?;
        }
        Ok(doc)
    }

    pub fn decls(&self) -> &[Decl] {
        &self.decls
    }

    pub fn get(&self, name: &str) -> Option<&Object> {
        self.index.get(name).map(|&i| &self.decls[i].object)
    }

    /// Appends a declaration; the name must be a fresh identifier.
    pub fn insert(&mut self, name: &str, object: Object, line: usize) -> Result<(), InputError> {
        if !is_identifier(name) {
            return Err(InputError::at(
                line,
                format!("`{name}` is not a valid name"),
            ));
        }
        if self.index.contains_key(name) {
            return Err(InputError::at(
                line,
                format!("`{name}` is already declared"),
            ));
        }
        match &object {
            Object::Chart(c) => {
                self.charts.insert(name.into(), c.clone());
            }
            Object::Groupoid { groupoid, .. } => {
                self.charts
                    .insert(format!("{name}.arrows"), groupoid.arrows.clone());
                self.charts
                    .insert(format!("{name}.objects"), groupoid.objects.clone());
            }
            _ => {}
        }
        self.index.insert(name.into(), self.decls.len());
        self.decls.push(Decl {
            name: name.into(),
            object,
            line,
        });
        Ok(())
    }

    fn missing(&self, name: &str, line: usize) -> InputError {
        InputError::at(line, format!("unresolved reference `{name}`"))
    }

    fn wrong_kind(&self, name: &str, want: &str, line: usize) -> InputError {
        let got = self.get(name).map(Object::kind_name).unwrap_or("chart");
        InputError::at(line, format!("`{name}` is a {got}, expected a {want}"))
    }

    pub fn chart(&self, name: &str, line: usize) -> Result<&ChartRef, InputError> {
        match self.charts.get(name) {
            Some(c) => Ok(c),
            None if self.get(name).is_some() => Err(self.wrong_kind(name, "chart", line)),
            None => Err(self.missing(name, line)),
        }
    }

    fn object(&self, name: &str, line: usize) -> Result<&Object, InputError> {
        self.get(name).ok_or_else(|| self.missing(name, line))
    }

    pub fn algebroid(&self, name: &str, line: usize) -> Result<&AlgebroidData, InputError> {
        match self.object(name, line)? {
            Object::Algebroid { data, .. } => Ok(data),
            _ => Err(self.wrong_kind(name, "algebroid", line)),
        }
    }

    pub fn connection(&self, name: &str, line: usize) -> Result<&ConnectionData, InputError> {
        match self.object(name, line)? {
            Object::Connection { data, .. } => Ok(data),
            _ => Err(self.wrong_kind(name, "connection", line)),
        }
    }

    pub fn im(&self, name: &str, line: usize) -> Result<&IMConnComponents, InputError> {
        match self.object(name, line)? {
            Object::Im { data, .. } => Ok(data),
            _ => Err(self.wrong_kind(name, "im", line)),
        }
    }

    pub fn groupoid(&self, name: &str, line: usize) -> Result<&Arc<CoordGroupoid>, InputError> {
        match self.object(name, line)? {
            Object::Groupoid { groupoid, .. } => Ok(groupoid),
            _ => Err(self.wrong_kind(name, "groupoid", line)),
        }
    }

    /// A connection on `TG` for the groupoid `g`.
    fn arrow_connection(
        &self,
        name: &str,
        g: &CoordGroupoid,
        line: usize,
    ) -> Result<(), InputError> {
        let c = self.connection(name, line)?;
        if !Chart::same(c.base(), &g.arrows) || !c.is_tangent() {
            return Err(InputError::at(
                line,
                format!(
                    "`{name}` is not a connection on the tangent bundle of the arrows of `{}`",
                    g.name
                ),
            ));
        }
        Ok(())
    }

    fn build(&self, d: &RawDecl) -> Result<Object, InputError> {
        let err = |m: String| InputError::at(d.line, format!("{} `{}`: {m}", d.kind, d.name));
        let no_entries = |d: &RawDecl| check_entry_keys(d, &[]);
        match d.kind.as_str() {
            "chart" => {
                check_attrs(d, &["vars"])?;
                no_entries(d)?;
                let vars = d
                    .require("vars")?
                    .split(',')
                    .map(|v| v.trim().to_string())
                    .collect();
                Ok(Object::Chart(
                    Chart::new(d.name.clone(), vars).map_err(|e| err(e.to_string()))?,
                ))
            }
            "map" => {
                check_attrs(d, &["source", "target"])?;
                check_entry_keys(d, &["comp"])?;
                let (sn, tn) = (d.require("source")?, d.require("target")?);
                let (src, tgt) = (self.chart(sn, d.line)?, self.chart(tn, d.line)?);
                let comps = fill(d, "comp", &[tgt.dim()], src)?;
                let map = PolyMap::new(src, tgt, comps.data().to_vec())
                    .map_err(|e| err(e.to_string()))?;
                Ok(Object::Map {
                    source: sn.into(),
                    target: tn.into(),
                    map,
                })
            }
            "algebroid" => {
                check_attrs(d, &["base", "rank"])?;
                check_entry_keys(d, &["anchor", "bracket"])?;
                let bn = d.require("base")?;
                let base = self.chart(bn, d.line)?;
                let (m, r) = (base.dim(), parse_usize(d, "rank")?);
                let anchor = fill(d, "anchor", &[r, m], base)?;
                let given = fill(d, "bracket", &[r, r, r], base)?;
                let mut structure = CompArray::zeros(base, &[r, r, r]);
                for i in 0..r {
                    for k in 0..r {
                        if !given.get(&[i, i, k]).is_zero() {
                            return Err(err(format!("bracket[{i},{i},{k}] must vanish")));
                        }
                    }
                    for j in i + 1..r {
                        for k in 0..r {
                            let (a, b) = (given.get(&[i, j, k]), given.get(&[j, i, k]));
                            let v = match (a.is_zero(), b.is_zero()) {
                                (_, true) => a.clone(),
                                (true, false) => -b,
                                (false, false) if *a == -b => a.clone(),
                                _ => {
                                    return Err(err(format!(
                                    "bracket[{i},{j},{k}] and bracket[{j},{i},{k}] are not skew"
                                )))
                                }
                            };
                            structure.set(&[j, i, k], -&v);
                            structure.set(&[i, j, k], v);
                        }
                    }
                }
                let rows = (0..r)
                    .map(|i| (0..m).map(|mu| anchor.get(&[i, mu]).clone()).collect())
                    .collect();
                let data = AlgebroidData::new(base, r, rows, structure.data().to_vec())
                    .map_err(|e| err(e.to_string()))?;
                Ok(Object::Algebroid {
                    base: bn.into(),
                    data,
                })
            }
            "connection" => {
                check_attrs(d, &["base", "rank"])?;
                check_entry_keys(d, &["gamma"])?;
                let bn = d.require("base")?;
                let base = self.chart(bn, d.line)?;
                let r = if d.get("rank").is_some() {
                    parse_usize(d, "rank")?
                } else {
                    base.dim()
                };
                let gamma = fill(d, "gamma", &[base.dim(), r, r], base)?;
                let data = ConnectionData::new(base, r, gamma.data().to_vec())
                    .map_err(|e| err(e.to_string()))?;
                Ok(Object::Connection {
                    base: bn.into(),
                    data,
                })
            }
            "im" => {
                check_attrs(d, &["algebroid"])?;
                check_entry_keys(d, &["F", "gammaA", "gammaM", "l"])?;
                let an = d.require("algebroid")?;
                let alg = self.algebroid(an, d.line)?;
                let (base, m, r) = (alg.base(), alg.dim(), alg.rank());
                let f = fill(d, "F", &[r, m, m, r], base)?;
                let ga = fill(d, "gammaA", &[m, r, r], base)?;
                let gm = fill(d, "gammaM", &[m, m, m], base)?;
                let l = fill(d, "l", &[r, m, r], base)?;
                let ga = ConnectionData::new(base, r, ga.data().to_vec())
                    .map_err(|e| err(e.to_string()))?;
                let gm = ConnectionData::new(base, m, gm.data().to_vec())
                    .map_err(|e| err(e.to_string()))?;
                let comps = ConnComponents::new(f, ga, gm, l).map_err(|e| err(e.to_string()))?;
                let data =
                    IMConnComponents::new(alg.clone(), comps).map_err(|e| err(e.to_string()))?;
                Ok(Object::Im {
                    algebroid: an.into(),
                    data,
                })
            }
            "groupoid" => {
                check_attrs(d, &["builtin"])?;
                no_entries(d)?;
                let builtin =
                    Builtin::parse(d.require("builtin")?).map_err(|e| err(e.to_string()))?;
                let groupoid = builtin.build().map_err(|e| err(e.to_string()))?;
                Ok(Object::Groupoid {
                    builtin,
                    groupoid: Arc::new(groupoid),
                })
            }
            "recipe" => self.build_recipe(d).map(Object::Recipe),
            "check" => self.build_check(d).map(Object::Check),
            other => Err(InputError::at(
                d.line,
                format!("unknown declaration kind `{other}`"),
            )),
        }
    }

    fn build_recipe(&self, d: &RawDecl) -> Result<Recipe, InputError> {
        let err = |m: String| InputError::at(d.line, format!("recipe `{}`: {m}", d.name));
        match d.require("kind")? {
            "heisenberg" => {
                check_attrs(d, &["kind", "r"])?;
                check_entry_keys(d, &[])?;
                let r = parse_r_matrix(d.require("r")?).map_err(|e| err(e.to_string()))?;
                Ok(Recipe::Heisenberg { r })
            }
            "vertical_bundle" => {
                check_attrs(d, &["kind", "total", "base_dim", "nabla"])?;
                check_entry_keys(d, &[])?;
                let (total, nabla) = (d.require("total")?, d.require("nabla")?);
                let chart = self.chart(total, d.line)?;
                let base_dim = parse_usize(d, "base_dim")?;
                if base_dim > chart.dim() {
                    return Err(err(
                        "base_dim exceeds the dimension of the total space".into()
                    ));
                }
                let c = self.connection(nabla, d.line)?;
                if !Chart::same(c.base(), chart) || !c.is_tangent() {
                    return Err(err(format!(
                        "`{nabla}` must be a connection on the tangent bundle of `{total}`"
                    )));
                }
                Ok(Recipe::VerticalBundle {
                    total: total.into(),
                    base_dim,
                    nabla: nabla.into(),
                })
            }
            "transitive_abelian" => {
                check_attrs(d, &["kind", "nabla_k", "nabla_m"])?;
                check_entry_keys(d, &["c", "theta"])?;
                let (kn, mn) = (d.require("nabla_k")?, d.require("nabla_m")?);
                let (nk, nm) = (self.connection(kn, d.line)?, self.connection(mn, d.line)?);
                let base = nm.base();
                let shape = [base.dim(), base.dim(), nk.rank()];
                let c = fill(d, "c", &shape, base)?;
                let theta = fill(d, "theta", &shape, base)?;
                TransitiveAbelianData::unchecked(nk.clone(), c.clone(), nm.clone(), theta.clone())
                    .map_err(|e| err(e.to_string()))?;
                Ok(Recipe::TransitiveAbelian {
                    nabla_k: kn.into(),
                    nabla_m: mn.into(),
                    c,
                    theta,
                })
            }
            other => Err(err(format!("unknown recipe kind `{other}`"))),
        }
    }

    fn build_check(&self, d: &RawDecl) -> Result<CheckRequest, InputError> {
        check_entry_keys(d, &[])?;
        let kn = d.require("kind")?;
        let kind = CheckKind::parse(kn).ok_or_else(|| {
            let names: Vec<&str> = CheckKind::ALL.iter().map(|k| k.name()).collect();
            InputError::at(
                d.line,
                format!(
                    "unknown check kind `{kn}` (expected one of {})",
                    names.join(", ")
                ),
            )
        })?;
        let mut allowed = vec!["kind"];
        allowed.extend(kind.attrs());
        check_attrs(d, &allowed)?;
        for a in kind.attrs().iter().filter(|a| **a != "degree") {
            d.require(a)?;
        }
        let s = |k: &str| d.get(k).map(str::to_string);
        let req = CheckRequest {
            kind,
            target: s("target"),
            groupoid: s("groupoid"),
            connection: s("connection"),
            other: s("other"),
            degree: match d.get("degree") {
                Some(_) => Some(parse_usize(d, "degree")? as u32),
                None if kind == CheckKind::Coboundary => Some(1),
                None => None,
            },
        };
        self.validate_check(&req, d.line)?;
        Ok(req)
    }

    /// Resolves every reference of `req` to an object of the right kind.
    pub fn validate_check(&self, req: &CheckRequest, line: usize) -> Result<(), InputError> {
        use CheckKind::*;
        match req.kind {
            Algebroid => {
                self.algebroid(req.target.as_deref().unwrap_or_default(), line)?;
            }
            Im | ImForm | Derived | Spray | FlatA => {
                self.im(req.target.as_deref().unwrap_or_default(), line)?;
            }
            _ => {
                let g = self.groupoid(req.groupoid.as_deref().unwrap_or_default(), line)?;
                for c in [&req.connection, &req.other].into_iter().flatten() {
                    self.arrow_connection(c, g, line)?;
                }
            }
        }
        Ok(())
    }

    pub fn to_raw(&self) -> Vec<RawDecl> {
        self.decls
            .iter()
            .map(|d| raw_decl(&d.name, &d.object))
            .collect()
    }

    /// Canonical text; only nonzero entries are written.
    pub fn format(&self) -> String {
        format_document(&self.to_raw())
    }
}

fn raw_decl(name: &str, object: &Object) -> RawDecl {
    match object {
        Object::Chart(c) => RawDecl::new("chart", name).attr("vars", c.vars().join(",")),
        Object::Map {
            source,
            target,
            map,
        } => {
            let mut d = RawDecl::new("map", name)
                .attr("source", source)
                .attr("target", target);
            for (a, f) in map.comps().iter().enumerate() {
                if !f.is_zero() {
                    d.entry("comp", vec![a], f.to_string());
                }
            }
            d
        }
        Object::Algebroid { base, data } => {
            let (m, r) = (data.dim(), data.rank());
            let mut d = RawDecl::new("algebroid", name)
                .attr("base", base)
                .attr("rank", r.to_string());
            for (i, row) in data.anchor_rows().iter().enumerate() {
                for (mu, f) in row.iter().enumerate().take(m) {
                    if !f.is_zero() {
                        d.entry("anchor", vec![i, mu], f.to_string());
                    }
                }
            }
            for i in 0..r {
                for j in i + 1..r {
                    for k in 0..r {
                        let f = data.c(i, j, k);
                        if !f.is_zero() {
                            d.entry("bracket", vec![i, j, k], f.to_string());
                        }
                    }
                }
            }
            d
        }
        Object::Connection { base, data } => {
            let mut d = RawDecl::new("connection", name)
                .attr("base", base)
                .attr("rank", data.rank().to_string());
            emit_connection(&mut d, "gamma", data);
            d
        }
        Object::Im { algebroid, data } => {
            let mut d = RawDecl::new("im", name).attr("algebroid", algebroid);
            emit(&mut d, "F", &data.comps.f);
            emit_connection(&mut d, "gammaA", &data.comps.gamma_a);
            emit_connection(&mut d, "gammaM", &data.comps.gamma_m);
            emit(&mut d, "l", &data.comps.l);
            d
        }
        Object::Groupoid { builtin, .. } => {
            RawDecl::new("groupoid", name).attr("builtin", builtin.to_string())
        }
        Object::Recipe(r) => {
            let d = RawDecl::new("recipe", name).attr("kind", r.kind_name());
            match r {
                Recipe::Heisenberg { r } => d.attr("r", format_r(r)),
                Recipe::VerticalBundle {
                    total,
                    base_dim,
                    nabla,
                } => d
                    .attr("total", total)
                    .attr("base_dim", base_dim.to_string())
                    .attr("nabla", nabla),
                Recipe::TransitiveAbelian {
                    nabla_k,
                    nabla_m,
                    c,
                    theta,
                } => {
                    let mut d = d.attr("nabla_k", nabla_k).attr("nabla_m", nabla_m);
                    emit(&mut d, "c", c);
                    emit(&mut d, "theta", theta);
                    d
                }
            }
        }
        Object::Check(req) => {
            let mut d = RawDecl::new("check", name).attr("kind", req.kind.name());
            let fields: BTreeMap<&str, Option<String>> = [
                ("target", req.target.clone()),
                ("groupoid", req.groupoid.clone()),
                ("connection", req.connection.clone()),
                ("other", req.other.clone()),
                ("degree", req.degree.map(|x| x.to_string())),
            ]
            .into_iter()
            .collect();
            for key in req.kind.attrs() {
                if let Some(Some(v)) = fields.get(key) {
                    d = d.attr(key, v.clone());
                }
            }
            d
        }
    }
}

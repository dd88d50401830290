//! Running check requests, rendering reports and building recipes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::document::{CheckKind, CheckRequest, Document, Object, Recipe};
use super::{InputError, EXIT_FAIL, EXIT_PASS};
use crate::algebroid::check_algebroid;
use crate::constructors::{
    check_flat_a_im_at, heisenberg_toy, plain_to_secondary, transitive_abelian_im,
    vertical_bundle_im, CoordSubmersion, TransitiveAbelianData,
};
use crate::groupoid::{
    check_multiplicative, check_simpl_conn, lie_functor, obstruction_tests,
    solve_atiyah_coboundary, CoboundarySolution,
};
use crate::imconn::{
    check_im_connection_at, check_im_form_at, derived_identities_check_at, im_torsion,
    spray_crosscheck_at,
};
use crate::report::{DefectReport, EquationSummary};
use crate::symkernel::Chart;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub kind: String,
    pub status: Status,
    pub equations: Vec<EquationSummary>,
    /// Named booleans such as the verdicts of independent routes.
    pub facts: BTreeMap<String, bool>,
    pub notes: Vec<String>,
    pub error: Option<String>,
    pub millis: u128,
}

impl CheckOutcome {
    fn new(name: &str, kind: &str) -> CheckOutcome {
        CheckOutcome {
            name: name.into(),
            kind: kind.into(),
            status: Status::Pass,
            equations: Vec::new(),
            facts: BTreeMap::new(),
            notes: Vec::new(),
            error: None,
            millis: 0,
        }
    }

    fn equations(&mut self, rep: &DefectReport) -> bool {
        self.equations.extend(rep.summaries());
        rep.passed()
    }

    /// As `equations`, naming each equation `prefix/name`.
    fn equations_under(&mut self, prefix: &str, rep: &DefectReport) -> bool {
        self.equations
            .extend(rep.summaries().into_iter().map(|mut e| {
                e.equation = format!("{prefix}/{}", e.equation);
                e
            }));
        rep.passed()
    }

    fn fact(&mut self, key: &str, v: bool) -> bool {
        self.facts.insert(key.into(), v);
        v
    }

    pub fn failing_equations(&self) -> Vec<&str> {
        self.equations
            .iter()
            .filter(|e| e.failed > 0)
            .map(|e| e.equation.as_str())
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub file: Option<String>,
    pub jet_degree: u32,
    pub checks: Vec<CheckOutcome>,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
    pub warnings: Vec<String>,
}

impl RunReport {
    fn new(checks: Vec<CheckOutcome>, jet_degree: u32) -> RunReport {
        let count = |s| checks.iter().filter(|c| c.status == s).count();
        let (passed, failed, inconclusive) = (
            count(Status::Pass),
            count(Status::Fail),
            count(Status::Inconclusive),
        );
        let mut warnings = Vec::new();
        if checks.is_empty() {
            warnings.push("document contains zero checks".into());
        }
        RunReport {
            file: None,
            jet_degree,
            checks,
            passed,
            failed,
            inconclusive,
            warnings,
        }
    }

    pub fn with_file(mut self, path: &Path) -> RunReport {
        self.file = Some(path.display().to_string());
        self
    }

    pub fn exit_code(&self) -> i32 {
        if self.failed > 0 {
            EXIT_FAIL
        } else {
            EXIT_PASS
        }
    }

    pub fn outcome(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Human-readable report; `detailed` lists every equation and fact.
    pub fn render(&self, detailed: bool) -> String {
        let mut s = String::new();
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{:<12} {} [{}] {} ms",
                c.status.label(),
                c.name,
                c.kind,
                c.millis
            );
            if let Some(e) = &c.error {
                let _ = writeln!(s, "    error: {e}");
            }
            for e in &c.equations {
                if e.failed == 0 && !detailed {
                    continue;
                }
                let _ = write!(
                    s,
                    "    {} {}: {}/{} slot assignments fail",
                    e.status, e.equation, e.failed, e.checked
                );
                match e.first_failures.first() {
                    Some(f) => {
                        let _ = writeln!(s, "; first {} -> {}", f.slots, f.leading);
                    }
                    None => {
                        let _ = writeln!(s);
                    }
                }
            }
            if detailed || c.status != Status::Pass {
                for (k, v) in &c.facts {
                    let _ = writeln!(s, "    {k} = {v}");
                }
            }
            for n in &c.notes {
                let _ = writeln!(s, "    {n}");
            }
        }
        let _ = writeln!(
            s,
            "{} checks: {} pass, {} fail, {} inconclusive (jet degree {})",
            self.checks.len(),
            self.passed,
            self.failed,
            self.inconclusive,
            self.jet_degree
        );
        s
    }
}

fn run_request(doc: &Document, name: &str, req: &CheckRequest, degree: u32) -> CheckOutcome {
    let mut out = CheckOutcome::new(name, req.kind.name());
    let start = Instant::now();
    match evaluate(doc, req, degree, &mut out) {
        Ok(status) => out.status = status,
        Err(e) => {
            out.status = Status::Fail;
            out.error = Some(e);
        }
    }
    out.millis = start.elapsed().as_millis();
    out
}

fn verdict(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn evaluate(
    doc: &Document,
    req: &CheckRequest,
    degree: u32,
    out: &mut CheckOutcome,
) -> Result<Status, String> {
    let e = |x: &dyn std::fmt::Display| x.to_string();
    let target = req.target.as_deref().unwrap_or_default();
    let im = || doc.im(target, 0).map_err(|x| e(&x));
    let groupoid = || {
        doc.groupoid(req.groupoid.as_deref().unwrap_or_default(), 0)
            .map_err(|x| e(&x))
    };
    let conn = |n: &Option<String>| {
        doc.connection(n.as_deref().unwrap_or_default(), 0)
            .map_err(|x| e(&x))
    };
    let ok = match req.kind {
        CheckKind::Algebroid => out.equations(&check_algebroid(
            doc.algebroid(target, 0).map_err(|x| e(&x))?,
        )),
        CheckKind::Im => out.equations(&check_im_connection_at(im()?, degree).map_err(|x| e(&x))?),
        CheckKind::ImForm => {
            let form = im_torsion(im()?).map_err(|x| e(&x))?;
            out.equations(&check_im_form_at(&form, degree).map_err(|x| e(&x))?)
        }
        CheckKind::Derived => {
            out.equations(&derived_identities_check_at(im()?, degree).map_err(|x| e(&x))?)
        }
        CheckKind::Spray => {
            let x = spray_crosscheck_at(im()?, degree).map_err(|x| e(&x))?;
            out.equations(&x.equations);
            out.equations_under("torsion", &x.torsion_form);
            out.equations_under("spray", &x.spray.report);
            out.fact("agree", x.agree);
            out.fact("bool_equations", x.bool_equations)
                & out.fact("bool_spray_route", x.bool_spray_route)
        }
        CheckKind::FlatA => {
            let c = im()?;
            let sec = plain_to_secondary(&c.comps).map_err(|x| e(&x))?;
            let x = check_flat_a_im_at(&sec, &c.algebroid, degree).map_err(|x| e(&x))?;
            out.equations_under("conditions", &x.conditions);
            out.equations_under("im", &x.im_report);
            out.fact("agree", x.agree);
            out.fact("route_conditions", x.route_conditions) & out.fact("route_im", x.route_im)
        }
        CheckKind::Axioms => out.equations(&groupoid()?.check_axioms()),
        CheckKind::Multiplicative => {
            let x = check_multiplicative(groupoid()?, conn(&req.connection)?).map_err(|x| e(&x))?;
            out.fact("agree", x.agree);
            out.fact("route_m", x.route_m)
                & out.fact("route_div", x.route_div)
                & out.fact("route_spray", x.route_spray)
        }
        CheckKind::SimplConn => out
            .equations(&check_simpl_conn(groupoid()?, conn(&req.connection)?).map_err(|x| e(&x))?),
        CheckKind::Obstruction => {
            let rep = obstruction_tests(groupoid()?, conn(&req.connection)?, conn(&req.other)?)
                .map_err(|x| e(&x))?;
            out.equations(&rep)
        }
        CheckKind::LieFunctor => {
            let c = lie_functor(groupoid()?, conn(&req.connection)?).map_err(|x| e(&x))?;
            out.equations(&check_im_connection_at(&c, degree).map_err(|x| e(&x))?)
        }
        CheckKind::Coboundary => {
            let d = req.degree.unwrap_or(1);
            match solve_atiyah_coboundary(groupoid()?, conn(&req.connection)?, d)
                .map_err(|x| e(&x))?
            {
                CoboundarySolution::Solved {
                    corrected, check, ..
                } => {
                    out.fact("corrected_multiplicative", check.route_m && check.agree);
                    for (ix, v) in corrected.difference(conn(&req.connection)?).nonzero() {
                        out.notes.push(format!("correction gamma{ix:?} = {}", -v));
                    }
                    if !(check.route_m && check.agree) {
                        return Ok(Status::Fail);
                    }
                    return Ok(Status::Pass);
                }
                CoboundarySolution::Inconclusive { degree } => {
                    out.notes.push(format!(
                        "no s-projectable correction of polynomial degree <= {degree}"
                    ));
                    return Ok(Status::Inconclusive);
                }
            }
        }
    };
    Ok(verdict(ok))
}

/// Runs every check request concurrently; results keep declaration order.
pub fn run_checks(doc: &Document, jet_degree: u32) -> RunReport {
    let requests: Vec<(&str, &CheckRequest)> = doc
        .decls()
        .iter()
        .filter_map(|d| match &d.object {
            Object::Check(r) => Some((d.name.as_str(), r)),
            _ => None,
        })
        .collect();
    let outcomes = requests
        .par_iter()
        .map(|(n, r)| run_request(doc, n, r, jet_degree))
        .collect();
    RunReport::new(outcomes, jet_degree)
}

/// Runs a single named target: a check request, or an object checked by its kind.
pub fn run_target(doc: &Document, name: &str, jet_degree: u32) -> Result<RunReport, InputError> {
    let object = doc
        .get(name)
        .ok_or_else(|| InputError::new(format!("no declaration named `{name}`")))?;
    let outcome = match object {
        Object::Check(r) => run_request(doc, name, r, jet_degree),
        Object::Algebroid { .. } => run_request(doc, name, &CheckRequest::on_target(CheckKind::Algebroid, name), jet_degree),
        Object::Im { .. } => run_request(doc, name, &CheckRequest::on_target(CheckKind::Im, name), jet_degree),
        Object::Groupoid { .. } => run_request(doc, name, &CheckRequest::on_groupoid(CheckKind::Axioms, name, None), jet_degree),
        Object::Recipe(_) => {
            return Ok(run_checks(&construct(doc, name)?, jet_degree));
        }
        other => {
            return Err(InputError::new(format!(
                "`{name}` is a {}; targets are check requests, algebroids, im components, groupoids or recipes",
                other.kind_name()
            )))
        }
    };
    Ok(RunReport::new(vec![outcome], jet_degree))
}

fn constructor_error(recipe: &str, e: impl std::fmt::Display) -> InputError {
    InputError::new(format!("recipe `{recipe}`: {e}"))
}

/// Builds recipe `name` into a standalone document holding its chart,
/// algebroid, IM components and the check requests that verify them.
pub fn construct(doc: &Document, name: &str) -> Result<Document, InputError> {
    let recipe = match doc.get(name) {
        Some(Object::Recipe(r)) => r,
        Some(o) => {
            return Err(InputError::new(format!(
                "`{name}` is a {}, not a recipe",
                o.kind_name()
            )))
        }
        None => return Err(InputError::new(format!("no recipe named `{name}`"))),
    };
    let (im, mut kinds) = match recipe {
        Recipe::Heisenberg { r } => {
            let toy = heisenberg_toy(r.clone()).map_err(|e| constructor_error(name, e))?;
            (toy.im, vec![CheckKind::FlatA])
        }
        Recipe::VerticalBundle {
            total,
            base_dim,
            nabla,
        } => {
            let sub = CoordSubmersion::new(doc.chart(total, 0)?, *base_dim)
                .map_err(|e| constructor_error(name, e))?;
            let im = vertical_bundle_im(&sub, doc.connection(nabla, 0)?)
                .map_err(|e| constructor_error(name, e))?;
            (im, Vec::new())
        }
        Recipe::TransitiveAbelian {
            nabla_k,
            nabla_m,
            c,
            theta,
        } => {
            let data = TransitiveAbelianData::new(
                doc.connection(nabla_k, 0)?.clone(),
                c.clone(),
                doc.connection(nabla_m, 0)?.clone(),
                theta.clone(),
            )
            .map_err(|e| constructor_error(name, e))?;
            let (_, im) = transitive_abelian_im(&data).map_err(|e| constructor_error(name, e))?;
            (im, Vec::new())
        }
    };
    let mut all = vec![
        CheckKind::Im,
        CheckKind::Derived,
        CheckKind::ImForm,
        CheckKind::Spray,
    ];
    all.append(&mut kinds);

    let mut out = Document::new();
    let chart_name = format!("{name}_M");
    let base = im.algebroid.base();
    let chart = Chart::new(chart_name.clone(), base.vars().to_vec())
        .map_err(|e| constructor_error(name, e))?;
    out.insert(&chart_name, Object::Chart(chart), 0)?;
    let (alg, imn) = (format!("{name}_A"), format!("{name}_im"));
    out.insert(
        &alg,
        Object::Algebroid {
            base: chart_name.clone(),
            data: im.algebroid.clone(),
        },
        0,
    )?;
    out.insert(
        &imn,
        Object::Im {
            algebroid: alg.clone(),
            data: im,
        },
        0,
    )?;
    out.insert(
        &format!("{name}_check_A"),
        Object::Check(CheckRequest::on_target(CheckKind::Algebroid, &alg)),
        0,
    )?;
    for k in all {
        out.insert(
            &format!("{name}_check_{}", k.name()),
            Object::Check(CheckRequest::on_target(k, &imn)),
            0,
        )?;
    }
    Ok(out)
}

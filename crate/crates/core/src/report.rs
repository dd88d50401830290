//! Per-equation defect bookkeeping shared by all checkers.

use serde::Serialize;

use crate::symkernel::ScalarFn;

/// Number of failing slot assignments kept verbatim per equation.
const SAMPLE_CAP: usize = 8;

/// One failing slot assignment: the slots it was evaluated on and the
/// defect components there.
#[derive(Clone, Debug)]
pub struct Failure {
    pub slots: String,
    pub values: Vec<ScalarFn>,
}

impl Failure {
    /// First nonzero component and its leading term, e.g. `"[2] 3*x^2"`.
    pub fn leading(&self) -> String {
        self.values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_zero())
            .map(|(k, v)| format!("[{k}] {}", v.leading_term()))
            .unwrap_or_else(|| "0".into())
    }
}

#[derive(Clone, Debug)]
pub struct EquationDefect {
    pub name: String,
    pub checked: usize,
    pub failed: usize,
    pub samples: Vec<Failure>,
}

impl EquationDefect {
    pub fn new(name: impl Into<String>) -> EquationDefect {
        EquationDefect {
            name: name.into(),
            checked: 0,
            failed: 0,
            samples: Vec::new(),
        }
    }

    /// Records one evaluated slot assignment; `slots` is only rendered on failure.
    pub fn record(&mut self, slots: impl FnOnce() -> String, values: Vec<ScalarFn>) {
        self.checked += 1;
        if values.iter().any(|v| !v.is_zero()) {
            self.failed += 1;
            if self.samples.len() < SAMPLE_CAP {
                self.samples.push(Failure {
                    slots: slots(),
                    values,
                });
            }
        }
    }

    /// Builds from precomputed `(slots, values)` results.
    pub fn from_results(
        name: impl Into<String>,
        results: Vec<(String, Vec<ScalarFn>)>,
    ) -> EquationDefect {
        let mut e = EquationDefect::new(name);
        for (s, v) in results {
            e.record(|| s, v);
        }
        e
    }

    /// Builds from a check count and the failing assignments only.
    pub fn from_failures(
        name: impl Into<String>,
        checked: usize,
        failures: Vec<(String, Vec<ScalarFn>)>,
    ) -> EquationDefect {
        let failed = failures.len();
        let samples = failures
            .into_iter()
            .take(SAMPLE_CAP)
            .map(|(slots, values)| Failure { slots, values })
            .collect();
        EquationDefect {
            name: name.into(),
            checked,
            failed,
            samples,
        }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0
    }

    pub fn summary(&self) -> EquationSummary {
        EquationSummary {
            equation: self.name.clone(),
            status: if self.passed() { "pass" } else { "fail" }.into(),
            checked: self.checked,
            failed: self.failed,
            first_failures: self
                .samples
                .iter()
                .map(|f| FailureSummary {
                    slots: f.slots.clone(),
                    leading: f.leading(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct DefectReport {
    pub equations: Vec<EquationDefect>,
}

impl DefectReport {
    pub fn new() -> DefectReport {
        DefectReport::default()
    }

    pub fn push(&mut self, e: EquationDefect) {
        self.equations.push(e);
    }

    pub fn extend(&mut self, other: DefectReport) {
        self.equations.extend(other.equations);
    }

    pub fn passed(&self) -> bool {
        self.equations.iter().all(|e| e.passed())
    }

    pub fn equation(&self, name: &str) -> Option<&EquationDefect> {
        self.equations.iter().find(|e| e.name == name)
    }

    /// Whether the named equation was checked and passed.
    pub fn passes(&self, name: &str) -> bool {
        self.equation(name).map(|e| e.passed()).unwrap_or(false)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.equations
            .iter()
            .filter(|e| !e.passed())
            .map(|e| e.name.as_str())
            .collect()
    }

    pub fn summaries(&self) -> Vec<EquationSummary> {
        self.equations.iter().map(|e| e.summary()).collect()
    }
}

impl std::fmt::Display for DefectReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for e in &self.equations {
            let s = e.summary();
            write!(
                f,
                "  {:<28} {} ({} checked",
                s.equation, s.status, s.checked
            )?;
            if s.failed > 0 {
                write!(f, ", {} failed", s.failed)?;
            }
            writeln!(f, ")")?;
            for x in &s.first_failures {
                writeln!(f, "      at {}: {}", x.slots, x.leading)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FailureSummary {
    pub slots: String,
    pub leading: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquationSummary {
    pub equation: String,
    pub status: String,
    pub checked: usize,
    pub failed: usize,
    pub first_failures: Vec<FailureSummary>,
}

use std::collections::BTreeMap;

use serde::Serialize;

use crate::quadrature::Estimate;
use crate::Norm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    ViolatedWithinError,
    Violated,
}

/// What is being checked: `lhs ≤ rhs` or `lhs = rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    AtMost,
    Equal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    /// Name of the identity or inequality.
    pub equation: String,
    pub surface: String,
    pub norm: Option<String>,
    /// Every constant entering the right-hand side.
    pub constants: BTreeMap<String, f64>,
}

/// Both sides of a check with error bars and the resulting verdict.
///
/// For `AtMost`, `slack = rhs − lhs`; the check holds when `slack ≥ −tolerance`
/// and is only `Violated` when `slack < −(tolerance + lhs.error + rhs.error)`.
/// For `Equal`, the same bands apply to `|slack|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub relation: Relation,
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub slack: f64,
    /// Discretisation allowance beyond the quadrature error bars.
    pub tolerance: f64,
    pub verdict: Verdict,
    pub provenance: Provenance,
    /// Named constituents of the two sides.
    pub terms: BTreeMap<String, Estimate>,
    pub warnings: Vec<String>,
}

impl InequalityReport {
    pub fn new(relation: Relation, equation: &str, surface: &str, lhs: Estimate, rhs: Estimate, tolerance: f64) -> Self {
        let mut r = Self {
            relation,
            lhs,
            rhs,
            slack: 0.0,
            tolerance,
            verdict: Verdict::Holds,
            provenance: Provenance {
                equation: equation.to_string(),
                surface: surface.to_string(),
                norm: None,
                constants: BTreeMap::new(),
            },
            terms: BTreeMap::new(),
            warnings: Vec::new(),
        };
        r.judge();
        if !lhs.converged || !rhs.converged {
            r.warn("quadrature did not reach the requested tolerance");
        }
        r
    }

    /// `lhs ≤ rhs`.
    pub fn at_most(equation: &str, surface: &str, lhs: Estimate, rhs: Estimate, tolerance: f64) -> Self {
        Self::new(Relation::AtMost, equation, surface, lhs, rhs, tolerance)
    }

    /// `lhs = rhs`.
    pub fn equal(equation: &str, surface: &str, lhs: Estimate, rhs: Estimate, tolerance: f64) -> Self {
        Self::new(Relation::Equal, equation, surface, lhs, rhs, tolerance)
    }

    pub fn error_bar(&self) -> f64 {
        self.lhs.error + self.rhs.error
    }

    /// `rhs / lhs` (infinite when the left side vanishes).
    pub fn slack_ratio(&self) -> f64 {
        if self.lhs.value == 0.0 {
            f64::INFINITY
        } else {
            self.rhs.value / self.lhs.value
        }
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    fn judge(&mut self) {
        self.slack = self.rhs.value - self.lhs.value;
        let err = self.error_bar();
        let excess = match self.relation {
            Relation::AtMost => -self.slack,
            Relation::Equal => self.slack.abs(),
        };
        // Infinite right-hand sides make the slack infinite or NaN.
        let excess = if self.rhs.value == f64::INFINITY && self.relation == Relation::AtMost { f64::NEG_INFINITY } else { excess };
        self.verdict = if excess.is_nan() {
            Verdict::Violated
        } else if excess <= self.tolerance {
            Verdict::Holds
        } else if excess <= self.tolerance + err {
            Verdict::ViolatedWithinError
        } else {
            Verdict::Violated
        };
    }

    pub fn with_norm(mut self, rho: &Norm) -> Self {
        self.provenance.norm = Some(norm_label(rho));
        self
    }

    pub fn constant(mut self, name: &str, value: f64) -> Self {
        self.provenance.constants.insert(name.to_string(), value);
        self
    }

    pub fn term(mut self, name: &str, value: Estimate) -> Self {
        self.terms.insert(name.to_string(), value);
        self
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        let m = message.into();
        if !self.warnings.contains(&m) {
            self.warnings.push(m);
        }
    }

    pub fn with_warnings(mut self, warnings: impl IntoIterator<Item = String>) -> Self {
        for w in warnings {
            self.warn(w);
        }
        self
    }
}

pub fn norm_label(rho: &Norm) -> String {
    match rho.kind() {
        crate::NormKind::Korany => "korany".to_string(),
        crate::NormKind::PowerLambda(l) => format!("power-{l}"),
    }
}

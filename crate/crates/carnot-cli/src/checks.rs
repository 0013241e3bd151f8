//! Running configured checks against the library.

use std::sync::Arc;

use carnot::blowup::{blowup_density, blowup_scan};
use carnot::hypersurface::{h_perimeter, mean_curvature, Region};
use carnot::inequality_lab::{
    asymptotic_check, coarea_check, divergence_check, divergence_refinement, first_variation_check,
    isoperimetric_report, linear_isoperimetric_check, minkowski_check, monotonicity_scan, norm_label, poincare_check,
    radial_bump, rayleigh_isop_estimate, sobolev_check, Anchor, HorizontalField, InequalityReport, ScalarField, Split,
    TestFunction, Verdict,
};
use carnot::{metric_factor_bounds, Norm};
use serde_json::{json, Value};

use crate::config::{polynomial, At, Check, Resolved, TestSpec};
use crate::CliError;

/// A plot-ready table.
pub struct Table {
    pub suffix: &'static str,
    /// Column names with their meaning.
    pub columns: &'static [(&'static str, &'static str)],
    pub rows: Vec<Vec<Value>>,
}

pub struct CheckOutput {
    pub name: &'static str,
    pub equation: String,
    pub constants: Value,
    pub result: Value,
    pub tables: Vec<Table>,
    pub violated: bool,
}

const MONOTONICITY_COLUMNS: &[(&str, &str)] = &[
    ("t", "radius of the ball B(x, t)"),
    ("m", "sigma_H(S ∩ B(x, t)) / t^(Q-1)"),
    ("minus_dm", "-m'(t), central difference on the radius grid"),
    ("rhs", "right-hand side bounding -m'(t)"),
    ("verdict", "holds, violated-within-error or violated"),
];
const BLOWUP_COLUMNS: &[(&str, &str)] =
    &[("R", "radius of the ball B(x, R)"), ("ratio", "sigma_H(S ∩ B(x, R)) / R^(Q-1)")];
const CUTOFF_COLUMNS: &[(&str, &str)] =
    &[("eps", "width of the cutoff near the interface"), ("quotient", "Rayleigh quotient of the cutoff function")];

fn poly_scalar(terms: &[crate::config::Term], n: usize) -> ScalarField {
    let p = polynomial(terms, n).expect("validated");
    Arc::new(move |y: &[f64]| p.eval(y))
}

fn test_function(t: &TestSpec, rho: &Norm, n: usize) -> TestFunction {
    match t {
        TestSpec::Bump { center, radius } => {
            TestFunction::supported_in(radial_bump(rho.clone(), center.clone(), *radius), center, *radius)
        }
        TestSpec::Polynomial { terms } => TestFunction::new(poly_scalar(terms, n)),
    }
}

fn anchor(a: &At) -> Anchor {
    Anchor::new(a.patch, &a.u)
}

fn to_value<T: serde::Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("serialisable")
}

fn violated<'a>(reports: impl IntoIterator<Item = &'a InequalityReport>) -> bool {
    reports.into_iter().any(|r| r.verdict == Verdict::Violated)
}

fn from_report(name: &'static str, r: &InequalityReport) -> CheckOutput {
    CheckOutput {
        name,
        equation: r.provenance.equation.clone(),
        constants: to_value(&r.provenance.constants),
        result: to_value(r),
        tables: Vec::new(),
        violated: r.verdict == Verdict::Violated,
    }
}

fn lab(e: impl std::fmt::Display) -> CliError {
    CliError::Capability(e.to_string())
}

pub fn run(check: &Check, ctx: &Resolved) -> Result<CheckOutput, CliError> {
    let s = &ctx.surface;
    let rho = &ctx.norm;
    let q = &ctx.config.quadrature;
    let n = ctx.algebra.n();
    let name = check.name();
    Ok(match check {
        Check::Perimeter { ball } => {
            let est = match ball {
                Some(b) => h_perimeter(s, &Region::ball(rho, &b.center, b.radius), q),
                None => h_perimeter(s, &Region::Whole, q),
            };
            CheckOutput {
                name,
                equation: "h-perimeter".into(),
                constants: json!({}),
                result: json!({ "sigma": est, "ball": ball.as_ref().map(|b| json!({"center": b.center, "radius": b.radius})) }),
                tables: Vec::new(),
                violated: false,
            }
        }
        Check::Curvature { at } => {
            let h = mean_curvature(s.patches[at.patch].as_ref(), &at.u).map_err(lab)?;
            CheckOutput {
                name,
                equation: "horizontal-mean-curvature".into(),
                constants: json!({}),
                result: json!({ "point": s.patches[at.patch].point(&at.u), "H": h }),
                tables: Vec::new(),
                violated: false,
            }
        }
        Check::Blowup { at, radii } => {
            let g = s.patches[at.patch].as_graph().expect("validated");
            let b = blowup_density(g, &at.u, rho, q).map_err(lab)?;
            let x = s.patches[at.patch].point(&at.u);
            let scan = if radii.is_empty() { Vec::new() } else { blowup_scan(s, &x, rho, radii, q).map_err(lab)? };
            let bounds = metric_factor_bounds(rho);
            let mut tables = Vec::new();
            if !scan.is_empty() {
                tables.push(Table {
                    suffix: "scan",
                    columns: BLOWUP_COLUMNS,
                    rows: scan.iter().map(|p| vec![json!(p.radius), json!(p.ratio)]).collect(),
                });
            }
            CheckOutput {
                name,
                equation: "blowup-density".into(),
                constants: json!({ "Q": ctx.algebra.q(), "k1": bounds.k1, "k2": bounds.k2 }),
                result: json!({
                    "kind": b.kind,
                    "kappa": b.kappa,
                    "kappa_limit": b.kappa_limit(),
                    "point": b.point,
                    "taylor": b.taylor,
                    "scan": scan,
                }),
                tables,
                violated: false,
            }
        }
        Check::Coarea { phi } => from_report(name, &coarea_check(s, &*poly_scalar(phi, n), q).map_err(lab)?),
        Check::Divergence { field, refine } => {
            let comps: Vec<_> = field.iter().map(|f| polynomial(f, n).expect("validated")).collect();
            let x: HorizontalField = Arc::new(move |y: &[f64]| comps.iter().map(|p| p.eval(y)).collect());
            if *refine {
                let study = divergence_refinement(s, &x, q).map_err(lab)?;
                let mut out = from_report(name, &study.fine);
                out.result = to_value(&study);
                out.violated = violated([&study.coarse, &study.fine]);
                out
            } else {
                from_report(name, &divergence_check(s, &x, q).map_err(lab)?)
            }
        }
        Check::Minkowski {} => from_report(name, &minkowski_check(s, q).map_err(lab)?),
        Check::FirstVariation { w } => from_report(name, &first_variation_check(s, w, q).map_err(lab)?),
        Check::Monotonicity { at, t } => {
            let scan = monotonicity_scan(s, &anchor(at), rho, t, q).map_err(lab)?;
            let first = scan.strong.first().or(scan.weak.first());
            let rows = scan
                .rows
                .iter()
                .map(|r| vec![json!(r.t), json!(r.m), json!(r.minus_dm), json!(r.rhs), to_value(&r.verdict)])
                .collect();
            CheckOutput {
                name,
                equation: first.map_or("monotonicity".into(), |r| r.provenance.equation.clone()),
                constants: first.map_or(json!({}), |r| to_value(&r.provenance.constants)),
                result: to_value(&scan),
                tables: vec![Table { suffix: "scan", columns: MONOTONICITY_COLUMNS, rows }],
                violated: violated(scan.strong.iter().chain(&scan.weak))
                    || scan.rows.iter().any(|r| r.verdict == Verdict::Violated),
            }
        }
        Check::Asymptotic { at, t } => {
            let reports = asymptotic_check(s, &anchor(at), rho, t, q).map_err(lab)?;
            let first = reports.first();
            CheckOutput {
                name,
                equation: first.map_or("asymptotic".into(), |r| r.provenance.equation.clone()),
                constants: first.map_or(json!({}), |r| to_value(&r.provenance.constants)),
                result: to_value(&reports),
                tables: Vec::new(),
                violated: violated(&reports),
            }
        }
        Check::Isoperimetric {} => from_report(name, &isoperimetric_report(s, rho, q).map_err(lab)?),
        Check::LinearIsoperimetric { center } => {
            from_report(name, &linear_isoperimetric_check(s, rho, center.as_deref(), q).map_err(lab)?)
        }
        Check::Poincare { at, radius, p, test } => {
            let psi = test_function(test, rho, n).f;
            from_report(name, &poincare_check(s, &anchor(at), rho, *radius, *p, &psi, q).map_err(lab)?)
        }
        Check::Rayleigh { splits, eps, tests, mode } => {
            let splits: Vec<Split> =
                splits.iter().map(|sp| Split { coordinate: sp.coordinate - 1, value: sp.value }).collect();
            let tests: Vec<ScalarField> = tests.iter().map(|t| test_function(t, rho, n).f).collect();
            let est = rayleigh_isop_estimate(s, rho, &splits, eps, &tests, (*mode).into(), q).map_err(lab)?;
            let rows: Vec<Vec<Value>> = est.cutoffs.iter().map(|c| vec![json!(c.eps), json!(c.quotient)]).collect();
            CheckOutput {
                name,
                equation: "rayleigh-quotient".into(),
                constants: json!({ "norm": norm_label(rho) }),
                result: to_value(&est),
                tables: if rows.is_empty() {
                    Vec::new()
                } else {
                    vec![Table { suffix: "cutoff", columns: CUTOFF_COLUMNS, rows }]
                },
                violated: false,
            }
        }
        Check::Sobolev { test, form, scale } => {
            let psi = test_function(test, rho, n).scaled(*scale);
            from_report(name, &sobolev_check(s, &psi, rho, (*form).into(), q).map_err(lab)?)
        }
    })
}

//! Run configuration: a TOML file naming a group, a norm, a surface, the
//! quadrature settings and the list of checks to run.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use carnot::hypersurface::presets::{self, PRESET_NAMES};
use carnot::hypersurface::{Domain, GraphSurface, Height, Patch, Polynomial, Surface};
use carnot::inequality_lab::{RayleighMode, SobolevForm};
use carnot::{Algebra, Norm, NormKind, QuadratureSpec, StratifiedAlgebra};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// A group preset (`h1`, `h2`, `h3`, `engel`) or a path to an algebra file.
    pub group: String,
    pub norm: NormSpec,
    pub surface: SurfaceSpec,
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSpec {
    /// `korany` or `power`.
    pub kind: String,
    pub lambda: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub preset: Option<String>,
    pub graph: Option<GraphSpec>,
    pub name: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    /// One-based graph direction.
    pub alpha: usize,
    pub domain: OneOrMany<Domain>,
    /// Height terms over the `n − 1` graph variables.
    #[serde(default)]
    pub height: Vec<Term>,
    #[serde(default = "one")]
    pub orientation: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

/// `coef · Π z_j^{exp_j}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub exp: Vec<u32>,
    pub coef: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: None, formats: all_formats() }
    }
}

fn all_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// A surface point given by patch index and parameters.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct At {
    #[serde(default)]
    pub patch: usize,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TestSpec {
    /// `(1 − (ρ(center, ·)/radius)⁴)²` inside the ball.
    Bump { center: Vec<f64>, radius: f64 },
    /// A polynomial in the group coordinates.
    Polynomial { terms: Vec<Term> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    /// One-based coordinate.
    pub coordinate: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Check {
    Perimeter {
        ball: Option<Ball>,
    },
    Curvature {
        at: At,
    },
    Blowup {
        at: At,
        #[serde(default)]
        radii: Vec<f64>,
    },
    Coarea {
        phi: Vec<Term>,
    },
    Divergence {
        field: Vec<Vec<Term>>,
        #[serde(default)]
        refine: bool,
    },
    Minkowski {},
    FirstVariation {
        w: Vec<f64>,
    },
    Monotonicity {
        at: At,
        t: Vec<f64>,
    },
    Asymptotic {
        at: At,
        t: Vec<f64>,
    },
    Isoperimetric {},
    LinearIsoperimetric {
        center: Option<Vec<f64>>,
    },
    Poincare {
        at: At,
        radius: f64,
        p: f64,
        test: TestSpec,
    },
    Rayleigh {
        #[serde(default)]
        splits: Vec<SplitSpec>,
        #[serde(default)]
        eps: Vec<f64>,
        #[serde(default)]
        tests: Vec<TestSpec>,
        #[serde(default = "neumann")]
        mode: Mode,
    },
    Sobolev {
        test: TestSpec,
        #[serde(default)]
        form: Form,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn neumann() -> Mode {
    Mode::Neumann
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Neumann,
    Dirichlet,
}

impl From<Mode> for RayleighMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Neumann => RayleighMode::Neumann,
            Mode::Dirichlet => RayleighMode::Dirichlet,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Form {
    #[default]
    Full,
    Horizontal,
}

impl From<Form> for SobolevForm {
    fn from(f: Form) -> Self {
        match f {
            Form::Full => SobolevForm::Full,
            Form::Horizontal => SobolevForm::Horizontal,
        }
    }
}

impl Check {
    pub fn name(&self) -> &'static str {
        match self {
            Check::Perimeter { .. } => "perimeter",
            Check::Curvature { .. } => "curvature",
            Check::Blowup { .. } => "blowup",
            Check::Coarea { .. } => "coarea",
            Check::Divergence { .. } => "divergence",
            Check::Minkowski {} => "minkowski",
            Check::FirstVariation { .. } => "first-variation",
            Check::Monotonicity { .. } => "monotonicity",
            Check::Asymptotic { .. } => "asymptotic",
            Check::Isoperimetric {} => "isoperimetric",
            Check::LinearIsoperimetric { .. } => "linear-isoperimetric",
            Check::Poincare { .. } => "poincare",
            Check::Rayleigh { .. } => "rayleigh",
            Check::Sobolev { .. } => "sobolev",
        }
    }
}

/// Everything a run needs, resolved and validated.
pub struct Resolved {
    pub config: RunConfig,
    pub group: String,
    pub algebra: Arc<Algebra>,
    pub norm: Norm,
    pub surface: Surface,
}

pub fn load(path: &Path) -> Result<Resolved, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let config: RunConfig = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    resolve(config, base)
}

pub fn resolve(config: RunConfig, base: &Path) -> Result<Resolved, CliError> {
    let q = &config.quadrature;
    if !(q.rel_tol > 0.0 && q.rel_tol <= 0.1) {
        return Err(CliError::Config(format!("quadrature.rel_tol = {} must lie in (0, 0.1]", q.rel_tol)));
    }
    if q.base_order < 2 || !(q.abs_tol >= 0.0) {
        return Err(CliError::Config("quadrature: base_order must be ≥ 2 and abs_tol ≥ 0".into()));
    }
    let algebra = Arc::new(match StratifiedAlgebra::preset(&config.group) {
        Some(a) => a,
        None => {
            let file = base.join(&config.group);
            if !file.is_file() {
                return Err(CliError::Config(format!(
                    "group: '{}' is neither a preset (h1, h2, h3, engel) nor a readable algebra file",
                    config.group
                )));
            }
            StratifiedAlgebra::from_toml_file(&file).map_err(|e| CliError::Config(format!("group: {e}")))?
        }
    });
    let kind = match (config.norm.kind.as_str(), config.norm.lambda) {
        ("korany", None) => NormKind::Korany,
        ("power", Some(l)) => NormKind::PowerLambda(l),
        ("power", None) => return Err(CliError::Config("norm.lambda is required for kind = \"power\"".into())),
        ("korany", Some(_)) => return Err(CliError::Config("norm.lambda is not used by kind = \"korany\"".into())),
        (other, _) => return Err(CliError::Config(format!("norm.kind: unknown norm '{other}' (korany, power)"))),
    };
    let norm = Norm::new(kind, algebra.clone()).map_err(|e| CliError::Config(format!("norm: {e}")))?;
    let surface = build_surface(&config.surface, &algebra)?;
    for (i, c) in config.checks.iter().enumerate() {
        validate(c, &algebra, &surface).map_err(|m| CliError::Config(format!("checks[{i}] ({}): {m}", c.name())))?;
    }
    let group = config.group.clone();
    Ok(Resolved { config, group, algebra, norm, surface })
}

fn build_surface(spec: &SurfaceSpec, alg: &Arc<Algebra>) -> Result<Surface, CliError> {
    match (&spec.preset, &spec.graph) {
        (Some(name), None) => {
            let s = presets::preset(name).ok_or_else(|| {
                CliError::Config(format!("surface.preset: unknown surface '{name}' (known: {})", PRESET_NAMES.join(", ")))
            })?;
            if s.patches.iter().any(|p| p.algebra().table() != alg.table()) {
                return Err(CliError::Config(format!("surface.preset: '{name}' does not live in the group of this run")));
            }
            Ok(match &spec.name {
                Some(n) => Surface::new(n.clone(), s.patches),
                None => s,
            })
        }
        (None, Some(g)) => {
            let n = alg.n();
            if g.alpha == 0 || g.alpha > n {
                return Err(CliError::Config(format!("surface.graph.alpha must lie in 1..={n}")));
            }
            let height = polynomial(&g.height, n - 1).map_err(|m| CliError::Config(format!("surface.graph.height: {m}")))?;
            let mut patches: Vec<Arc<dyn Patch>> = Vec::new();
            for d in g.domain.clone_vec() {
                if d.dim() != n - 1 {
                    return Err(CliError::Config(format!("surface.graph.domain: expected {} parameters", n - 1)));
                }
                if let Domain::Box { lo, hi } = &d {
                    if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                        return Err(CliError::Config("surface.graph.domain: empty box".into()));
                    }
                }
                let p = GraphSurface::new(alg.clone(), g.alpha - 1, d, Height::Poly(height.clone()))
                    .with_orientation(g.orientation);
                patches.push(Arc::new(p));
            }
            Ok(Surface::new(spec.name.clone().unwrap_or_else(|| "graph".into()), patches))
        }
        _ => Err(CliError::Config("surface: give exactly one of 'preset' or 'graph'".into())),
    }
}

impl OneOrMany<Domain> {
    fn clone_vec(&self) -> Vec<Domain> {
        match self {
            OneOrMany::One(t) => vec![t.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

pub fn polynomial(terms: &[Term], vars: usize) -> Result<Polynomial, String> {
    for t in terms {
        if t.exp.len() != vars {
            return Err(format!("exponent {:?} must have {vars} entries", t.exp));
        }
        if !t.coef.is_finite() {
            return Err("coefficients must be finite".into());
        }
    }
    Ok(Polynomial::new(terms.iter().map(|t| (t.exp.clone(), t.coef)).collect()))
}

fn validate(c: &Check, alg: &Algebra, s: &Surface) -> Result<(), String> {
    let n = alg.n();
    let at = |a: &At| -> Result<(), String> {
        let p = s.patches.get(a.patch).ok_or_else(|| format!("at.patch {} out of range", a.patch))?;
        if a.u.len() != p.domain().dim() {
            return Err(format!("at.u needs {} parameters", p.domain().dim()));
        }
        Ok(())
    };
    let point = |x: &[f64], key: &str| if x.len() == n { Ok(()) } else { Err(format!("{key} needs {n} coordinates")) };
    let positive = |v: &[f64], key: &str| {
        if v.iter().all(|x| *x > 0.0 && x.is_finite()) {
            Ok(())
        } else {
            Err(format!("{key} must be positive"))
        }
    };
    let test = |t: &TestSpec| match t {
        TestSpec::Bump { center, radius } => point(center, "test.center").and(positive(&[*radius], "test.radius")),
        TestSpec::Polynomial { terms } => polynomial(terms, n).map(|_| ()),
    };
    match c {
        Check::Perimeter { ball } => {
            if let Some(b) = ball {
                point(&b.center, "ball.center")?;
                positive(&[b.radius], "ball.radius")?;
            }
            Ok(())
        }
        Check::Curvature { at: a } => at(a),
        Check::Blowup { at: a, radii } => {
            at(a)?;
            if s.patches[a.patch].as_graph().is_none() {
                return Err("blow-up needs a graph patch".into());
            }
            positive(radii, "radii")
        }
        Check::Coarea { phi } => polynomial(phi, n).map(|_| ()),
        Check::Divergence { field, .. } => {
            if field.len() != alg.h() {
                return Err(format!("field needs {} horizontal components", alg.h()));
            }
            field.iter().try_for_each(|f| polynomial(f, n).map(|_| ()))
        }
        Check::Minkowski {} | Check::Isoperimetric {} => Ok(()),
        Check::FirstVariation { w } => point(w, "w"),
        Check::Monotonicity { at: a, t } | Check::Asymptotic { at: a, t } => {
            at(a)?;
            positive(t, "t")?;
            if t.len() < 3 || t.windows(2).any(|w| w[0] >= w[1]) {
                return Err("t must list at least 3 increasing radii".into());
            }
            Ok(())
        }
        Check::LinearIsoperimetric { center } => center.as_ref().map_or(Ok(()), |c| point(c, "center")),
        Check::Poincare { at: a, radius, p, test: t } => {
            at(a)?;
            positive(&[*radius, *p], "radius and p")?;
            test(t)
        }
        Check::Rayleigh { splits, eps, tests, .. } => {
            positive(eps, "eps")?;
            for sp in splits {
                if sp.coordinate == 0 || sp.coordinate > n {
                    return Err(format!("split coordinate must lie in 1..={n}"));
                }
            }
            tests.iter().try_for_each(test)
        }
        Check::Sobolev { test: t, scale, .. } => {
            if !scale.is_finite() {
                return Err("scale must be finite".into());
            }
            test(t)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Resolved, CliError> {
        resolve(toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?, Path::new("."))
    }

    const BASE: &str = "group = \"h1\"\nnorm = { kind = \"korany\" }\nsurface = { preset = \"h1-t0-plane\" }\n";

    #[test]
    fn minimal_config_resolves() {
        let r = parse(BASE).unwrap();
        assert!(r.config.checks.is_empty());
        assert_eq!(r.config.output.formats, vec![Format::Json, Format::Csv]);
    }

    #[test]
    fn bad_names_are_config_errors() {
        let bad = BASE.replace("h1-t0-plane", "h1-t0-plain");
        assert!(matches!(parse(&bad), Err(CliError::Config(m)) if m.contains("h1-t0-plain")));
        let bad = format!("{BASE}[[checks]]\nname = \"blowupp\"\n");
        assert!(parse(&bad).is_err());
        let bad = format!("{BASE}[quadrature]\nrel_tol = 0.5\n");
        assert!(matches!(parse(&bad), Err(CliError::Config(m)) if m.contains("rel_tol")));
        let bad = BASE.replace("\"h1\"", "\"engel\"");
        assert!(parse(&bad).is_err());
    }

    #[test]
    fn graph_surfaces_are_checked() {
        let text = "group = \"h1\"\nnorm = { kind = \"power\", lambda = 4 }\n[surface]\nname = \"bowl\"\n\
                    graph = { alpha = 3, domain = { box = { lo = [-1, -1], hi = [1, 1] } }, height = [{ exp = [2, 0], coef = 1.0 }] }\n";
        let r = parse(text).unwrap();
        assert_eq!(r.surface.name, "bowl");
        let bad = text.replace("exp = [2, 0]", "exp = [2, 0, 1]");
        assert!(parse(&bad).is_err());
    }

    #[test]
    fn check_parameters_are_validated() {
        let bad = format!("{BASE}[[checks]]\nname = \"monotonicity\"\nat = {{ u = [0, 0] }}\nt = [0.2, 0.1, 0.3]\n");
        assert!(matches!(parse(&bad), Err(CliError::Config(m)) if m.contains("checks[0]")));
        let ok = format!("{BASE}[[checks]]\nname = \"monotonicity\"\nat = {{ u = [0, 0] }}\nt = [0.1, 0.2, 0.3]\n");
        assert!(parse(&ok).is_ok());
    }
}

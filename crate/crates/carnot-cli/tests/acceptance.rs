//! End-to-end acceptance checks: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use carnot::blowup::{blowup_density, blowup_scan, BlowupKind};
use carnot::hypersurface::presets::{
    capped_cylinder, cubic_paraboloid, cylinder, cylinder_patches, paraboloid, t0_disk, t0_plane, vertical_plane,
};
use carnot::hypersurface::{
    h_perimeter, horizontal_mean_curvature, mean_curvature, Domain, GraphSurface, Height, Polynomial, Region, Surface,
    Transform,
};
use carnot::inequality_lab::*;
use carnot::{metric_factor_bounds, verify_structure, Algebra, Norm, NormKind, QuadratureSpec, StratifiedAlgebra};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `∫₀¹ √(1−u⁴) du` to 16 digits, from an arbitrary-precision evaluation.
const UNIT_BALL_PLANE_SECTION: f64 = 0.874_019_184_764_039_9;
/// Wall-clock budget of the whole test suite.
const SUITE_BUDGET: Duration = Duration::from_secs(300);

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn h1() -> Arc<Algebra> {
    Arc::new(StratifiedAlgebra::heisenberg(1))
}

fn korany() -> Norm {
    Norm::new(NormKind::Korany, h1()).unwrap()
}

fn q(tol: f64) -> QuadratureSpec {
    QuadratureSpec::with_tol(tol)
}

fn plane() -> Surface {
    Surface::single("vertical-plane", vertical_plane(h1(), 1.0))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Composite Simpson rule, an oracle independent of the library quadrature.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn group_core() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for name in ["h1", "h2", "engel"] {
        let alg: Algebra = StratifiedAlgebra::preset(name).unwrap();
        let n = alg.n();
        for _ in 0..1000 {
            let mut pt = || (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
            let (x, y, z) = (pt(), pt(), pt());
            let t = rng.gen_range(0.1..3.0);
            let assoc = max_diff(&alg.mul(&alg.mul(&x, &y), &z), &alg.mul(&x, &alg.mul(&y, &z)));
            let xinv: Vec<f64> = x.iter().map(|v| -v).collect();
            let inverse = max_diff(&alg.mul(&x, &xinv), &vec![0.0; n]);
            let dil = max_diff(
                &alg.dilate_coords(t, &alg.mul(&x, &y)),
                &alg.mul(&alg.dilate_coords(t, &x), &alg.dilate_coords(t, &y)),
            );
            worst = worst.max(assoc).max(inverse).max(dil);
        }
    }
    ensure!(worst < 1e-10, "group identities off by {worst:e}");
    let q_h1 = verify_structure(StratifiedAlgebra::<f64>::heisenberg(1).table());
    let q_engel = verify_structure(StratifiedAlgebra::<f64>::engel().table());
    ensure!(q_h1.passed() && q_h1.homogeneous_dimension == 4, "H1 structure: {q_h1:?}");
    ensure!(q_engel.passed() && q_engel.homogeneous_dimension == 7, "Engel structure: {q_engel:?}");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:.2?}");
    Ok(format!("max identity error {worst:.1e}, Q = 4 and 7, {elapsed:.2?}"))
}

fn perimeter_oracles() -> Outcome {
    let rho = korany();
    let polar = simpson(|r| 2.0 * PI * (r / 2.0) * r, 0.0, 1.0, 2000);
    // u = 1 − v² removes the square-root endpoint behaviour.
    let section = simpson(|v: f64| (1.0 - (1.0 - v * v).powi(4)).max(0.0).sqrt() * 2.0 * v, 0.0, 1.0, 20000);
    ensure!((polar - PI / 3.0).abs() < 1e-10 && (section - UNIT_BALL_PLANE_SECTION).abs() < 1e-9, "oracles disagree");
    let ball = Region::ball(&rho, &[0.0; 3], 1.0);
    let t = Instant::now();
    let a = h_perimeter(&Surface::single("t0", t0_plane(1.5)), &ball, &QuadratureSpec::default());
    let ta = t.elapsed();
    let t = Instant::now();
    let b = h_perimeter(&Surface::single("v", vertical_plane(h1(), 1.5)), &ball, &QuadratureSpec::default());
    let tb = t.elapsed();
    let (ea, eb) = ((a.value - PI / 3.0).abs(), (b.value - section).abs());
    ensure!(ea < 1e-6, "t=0 disk: {} (error {ea:e})", a.value);
    ensure!(eb < 1e-5, "vertical section: {} (error {eb:e})", b.value);
    ensure!(ta.max(tb) < Duration::from_secs(10), "took {ta:.2?} / {tb:.2?}");
    Ok(format!("errors {ea:.1e} and {eb:.1e}, {ta:.2?} / {tb:.2?}"))
}

fn blowup() -> Outcome {
    let rho = korany();
    let qd = QuadratureSpec::default();
    let a = blowup_density(&vertical_plane(h1(), 1.0), &[0.0, 0.0], &rho, &qd).map_err(|e| e.to_string())?;
    let ka = a.kappa.map_or(f64::NAN, |k| k.value);
    let bounds = metric_factor_bounds(&rho);
    ensure!(a.kind == BlowupKind::CaseA, "vertical plane: {:?}", a.kind);
    ensure!((ka - UNIT_BALL_PLANE_SECTION).abs() < 1e-5, "case a: {ka}");
    ensure!(bounds.k1 <= ka && ka <= bounds.k2, "{ka} outside [{}, {}]", bounds.k1, bounds.k2);
    let b = blowup_density(&t0_plane(1.5), &[0.0, 0.0], &rho, &qd).map_err(|e| e.to_string())?;
    let kb = b.kappa.map_or(f64::NAN, |k| k.value);
    ensure!(b.kind == BlowupKind::CaseB && (kb - PI / 3.0).abs() < 1e-5, "case b: {:?} {kb}", b.kind);
    let mut spread = 0.0f64;
    for s in [plane(), Surface::single("t0", t0_plane(1.5))] {
        let scan = blowup_scan(&s, &[0.0; 3], &rho, &[0.8, 0.4, 0.2, 0.1], &qd).map_err(|e| e.to_string())?;
        let r: Vec<f64> = scan.iter().map(|p| p.ratio).collect();
        spread = spread.max(r.iter().cloned().fold(f64::MIN, f64::max) - r.iter().cloned().fold(f64::MAX, f64::min));
    }
    ensure!(spread < 1e-6, "scan ratios vary by {spread:e}");
    Ok(format!("κ_a = {ka:.8}, κ_b = {kb:.8}, scan spread {spread:.1e}"))
}

fn coarea() -> Outcome {
    let s = plane();
    let r = coarea_check(&s, &|y: &[f64]| y[1], &q(1e-8)).map_err(|e| e.to_string())?;
    ensure!((r.lhs.value - 4.0).abs() < 1e-4 && (r.rhs.value - 4.0).abs() < 1e-4, "φ = x2: {} vs {}", r.lhs.value, r.rhs.value);
    let t = coarea_check(&s, &|y: &[f64]| y[2], &q(1e-8)).map_err(|e| e.to_string())?;
    ensure!(t.lhs.value.abs() < 1e-6 && t.rhs.value.abs() < 1e-6, "φ = t: {} vs {}", t.lhs.value, t.rhs.value);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let terms: Vec<(Vec<u32>, f64)> = [[1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
            .iter()
            .map(|e| (vec![0, e[0], e[1]], rng.gen_range(-1.0..1.0)))
            .collect();
        let p = Polynomial::new(terms);
        let r = coarea_check(&s, &|y: &[f64]| p.eval(y), &q(1e-5)).map_err(|e| e.to_string())?;
        worst = worst.max((r.lhs.value - r.rhs.value).abs() / r.lhs.value.abs().max(1e-12));
    }
    ensure!(worst < 1e-3, "random polynomials: relative error {worst:e}");
    Ok(format!("φ = x2: {:.6}, φ = t: {:.1e}, random max rel {worst:.1e}", r.lhs.value, t.lhs.value))
}

fn divergence_and_variation() -> Outcome {
    let bump: HorizontalField = Arc::new(|y: &[f64]| {
        let r2 = y[1] * y[1] + y[2] * y[2];
        vec![0.0, if r2 < 1.0 { (1.0 - r2).powi(3) } else { 0.0 }]
    });
    let field: HorizontalField = Arc::new(|y: &[f64]| vec![y[0] + y[1] * y[1], y[1] + 0.5 * y[2]]);
    let disk = Surface::single("disk", t0_disk(1.0));
    let piece = Surface::single(
        "paraboloid-piece",
        GraphSurface::new(
            h1(),
            2,
            Domain::Box { lo: vec![0.3, 0.2], hi: vec![0.8, 0.6] },
            Height::Poly(Polynomial::new(vec![(vec![2, 0], 1.0), (vec![0, 2], 1.0)])),
        ),
    );
    let cyl = cylinder(1.0, 0.5);
    let studies: Vec<(&str, Result<RefinementStudy, LabError>)> = vec![
        ("divergence/plane", refinement_study(&q(1e-4), |q| divergence_check(&plane(), &bump, q))),
        ("divergence/cylinder", refinement_study(&q(1e-4), |q| divergence_check(&cylinder(1.0, 1.0), &field, q))),
        ("minkowski/disk", refinement_study(&q(1e-6), |q| minkowski_check(&disk, q))),
        ("variation/paraboloid", refinement_study(&q(1e-6), |q| first_variation_check(&piece, &[1.0, 0.5, 0.0], q))),
        ("variation/cylinder", refinement_study(&q(1e-6), |q| first_variation_check(&cyl, &[0.3, 0.0, 1.0], q))),
    ];
    let mut parts = Vec::new();
    for (name, s) in studies {
        let s = s.map_err(|e| format!("{name}: {e}"))?;
        let (c, f) = (s.coarse.slack.abs(), s.fine.slack.abs());
        ensure!(c < 1e-3 && f < 1e-3, "{name}: residuals {c:e} → {f:e}");
        ensure!(s.halves, "{name}: residual {c:e} → {f:e} does not halve");
        parts.push(format!("{name} {c:.0e}→{f:.0e}"));
    }
    Ok(parts.join(", "))
}

fn curvature() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (vp, t0) = (vertical_plane(h1(), 1.0), t0_plane(1.0));
    let mut plane_worst = 0.0f64;
    for _ in 0..200 {
        let u = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        plane_worst = plane_worst.max(horizontal_mean_curvature(&vp, &u).map_err(|e| e.to_string())?.abs());
        if u[0].hypot(u[1]) > 0.2 {
            plane_worst = plane_worst.max(mean_curvature(&t0, &u).map_err(|e| e.to_string())?.abs());
        }
    }
    ensure!(plane_worst < 1e-6, "planes: |H| up to {plane_worst:e}");
    let mut cyl_worst = 0.0f64;
    for radius in [0.5, 1.0, 2.0] {
        let w = radius * std::f64::consts::FRAC_1_SQRT_2;
        for patch in cylinder_patches(radius, 1.0) {
            for _ in 0..25 {
                let u = [rng.gen_range(-w..w), rng.gen_range(-1.0..1.0)];
                let h = mean_curvature(&patch, &u).map_err(|e| e.to_string())?;
                cyl_worst = cyl_worst.max((h - 1.0 / radius).abs());
            }
        }
    }
    ensure!(cyl_worst < 1e-5, "cylinders: |H − 1/R| up to {cyl_worst:e}");
    Ok(format!("planes max |H| {plane_worst:.1e}, cylinders max |H − 1/R| {cyl_worst:.1e}"))
}

fn monotonicity() -> Outcome {
    let rho = korany();
    let grid = vec![0.1, 0.2, 0.3, 0.5, 0.7];
    let cases = [
        (plane(), Anchor::new(0, &[0.0, 0.0]), grid.clone(), true),
        (Surface::single("t0-origin", t0_plane(1.5)), Anchor::new(0, &[0.0, 0.0]), grid, true),
        (cylinder(1.0, 1.0), Anchor::new(0, &[0.0, 0.0]), vec![0.05, 0.1, 0.2, 0.3, 0.4], false),
        (Surface::single("paraboloid", paraboloid(1.0)), Anchor::new(0, &[0.4, 0.3]), vec![0.05, 0.1, 0.15, 0.2, 0.25], false),
    ];
    let mut dm = 0.0f64;
    let mut rows = 0;
    for (s, a, grid, flat) in cases {
        let scan = monotonicity_scan(&s, &a, &rho, &grid, &q(1e-7)).map_err(|e| format!("{}: {e}", s.name))?;
        ensure!(!scan.rows.is_empty(), "{}: empty scan", s.name);
        let bad = scan.strong.iter().chain(&scan.weak).any(|r| r.verdict == Verdict::Violated)
            || scan.rows.iter().any(|r| r.verdict == Verdict::Violated);
        ensure!(!bad, "{}: violated verdict", s.name);
        rows += scan.rows.len();
        if flat {
            dm = scan.rows.iter().map(|r| r.minus_dm.abs()).fold(dm, f64::max);
        }
    }
    ensure!(dm < 1e-6, "planes: |m'| up to {dm:e}");
    Ok(format!("{rows} rows without violation, planes max |m'| {dm:.1e}"))
}

fn isoperimetric() -> Outcome {
    let rho = korany();
    let presets = [
        Surface::single("t0-disk", t0_disk(1.0)),
        plane(),
        cylinder(1.0, 1.0),
        Surface::single("paraboloid", paraboloid(1.0)),
        Surface::single("cubic", cubic_paraboloid(0.5)),
        capped_cylinder(1.0, 0.5),
    ];
    let mut min_ratio = f64::INFINITY;
    for s in &presets {
        let r = isoperimetric_report(s, &rho, &q(1e-5)).map_err(|e| format!("{}: {e}", s.name))?;
        ensure!(r.verdict == Verdict::Holds, "{}: {:?}", s.name, r.verdict);
        let qd = rho.algebra().q();
        let ci = 2f64.powf((qd * (qd - 1)) as f64 / (qd as f64 - 2.0)) * metric_factor_bounds(&rho).k1.powf(1.0 / (2.0 - qd as f64));
        ensure!((r.provenance.constants["C_I"] - ci).abs() < 1e-9 * ci, "C_I = {}", r.provenance.constants["C_I"]);
        min_ratio = min_ratio.min(r.slack_ratio());
        for t in [0.5, 2.0] {
            let d = isoperimetric_report(&s.transformed(Transform::Dilate(t)), &rho, &q(1e-5))
                .map_err(|e| format!("{} × {t}: {e}", s.name))?;
            ensure!(d.verdict == r.verdict, "{} dilated by {t}: {:?}", s.name, d.verdict);
        }
    }
    let disk = Surface::single("disk", t0_disk(1.0));
    let lin = linear_isoperimetric_check(&disk, &rho, None, &q(1e-7)).map_err(|e| e.to_string())?;
    let ch = lin.terms["ch-term"].value;
    ensure!(lin.verdict == Verdict::Holds, "linear: {:?}", lin.verdict);
    ensure!((ch - PI).abs() < 1e-3, "∫|C_Hν_H|σ = {ch}");
    Ok(format!("{} presets hold (min rhs/lhs {min_ratio:.2}), dilation-invariant; ∫|C_Hν_H|σ = {ch:.6}", presets.len()))
}

fn poincare_rayleigh_sobolev() -> Outcome {
    let rho = korany();
    for p in [1.0, 2.0] {
        for r in [0.3, 0.6] {
            let psi = radial_bump(rho.clone(), vec![0.0; 3], r);
            let rep = poincare_check(&plane(), &Anchor::new(0, &[0.0, 0.0]), &rho, r, p, &psi, &q(1e-6))
                .map_err(|e| e.to_string())?;
            ensure!(rep.verdict == Verdict::Holds, "Poincaré p = {p}, R = {r}: {:?}", rep.verdict);
        }
    }
    let split = Split { coordinate: 1, value: 0.0 };
    let est = rayleigh_isop_estimate(&plane(), &rho, &[split], &[0.2, 0.1, 0.05], &[], RayleighMode::Neumann, &q(1e-7))
        .map_err(|e| e.to_string())?;
    let geometric = est.geometric.ok_or("no split quotient")?;
    let quotients: Vec<f64> = est.cutoffs.iter().map(|c| c.quotient).collect();
    ensure!(quotients.len() == 3, "cutoffs: {quotients:?}");
    ensure!(quotients.windows(2).all(|w| w[1] < w[0]), "cutoff quotients not decreasing: {quotients:?}");
    ensure!(quotients.iter().all(|&v| v >= geometric - 1e-9), "cutoff below the split quotient {geometric}");
    let s = capped_cylinder(1.0, 0.5);
    let centre = [1.0, 0.0, 0.0];
    let psi = TestFunction::supported_in(radial_bump(rho.clone(), centre.to_vec(), 0.4), &centre, 0.4);
    let base = sobolev_check(&s, &psi, &rho, SobolevForm::Full, &q(1e-6)).map_err(|e| e.to_string())?;
    ensure!(base.verdict == Verdict::Holds, "Sobolev: {:?}", base.verdict);
    let mut drift = 0.0f64;
    for c in [0.25, 3.5, 40.0] {
        let r = sobolev_check(&s, &psi.scaled(c), &rho, SobolevForm::Full, &q(1e-6)).map_err(|e| e.to_string())?;
        ensure!(r.verdict == base.verdict, "Sobolev scaled by {c}: {:?}", r.verdict);
        drift = drift.max((r.slack_ratio() / base.slack_ratio() - 1.0).abs());
    }
    ensure!(drift < 1e-6, "Sobolev slack ratio drifts by {drift:e}");
    Ok(format!(
        "Poincaré holds at p = 1, 2; cutoffs {:.6} > {:.6} > {:.6} ≥ {geometric:.6}; Sobolev ratio {:.1} (drift {drift:.0e})",
        quotients[0],
        quotients[1],
        quotients[2],
        base.slack_ratio()
    ))
}

const BASE: &str = "group = \"h1\"\nnorm = { kind = \"korany\" }\n";

fn run_cli(config: &str, dir: &Path, out: &Path, workers: Option<&str>, env: Option<&str>) -> i32 {
    let path = dir.join(format!("config-{}.toml", out.file_name().unwrap().to_string_lossy()));
    std::fs::write(&path, config).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_carnot"));
    cmd.arg("--config").arg(&path).arg("--out").arg(out).env_remove("CARNOT_WORKERS");
    if let Some(w) = workers {
        cmd.arg("--workers").arg(w);
    }
    if let Some(w) = env {
        cmd.env("CARNOT_WORKERS", w);
    }
    cmd.output().expect("the binary runs").status.code().unwrap_or(-1)
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map(|it| {
            it.map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
}

fn cli_contract(suite_start: Instant) -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let good = format!(
        "{BASE}surface = {{ preset = \"h1-t0-plane\" }}\n[quadrature]\nrel_tol = 1e-8\n\
         [[checks]]\nname = \"blowup\"\nat = {{ u = [0.0, 0.0] }}\nradii = [0.1, 0.2, 0.4, 0.8]\n\
         [[checks]]\nname = \"monotonicity\"\nat = {{ u = [0.0, 0.0] }}\nt = [0.2, 0.3, 0.45, 0.6]\n\
         [[checks]]\nname = \"isoperimetric\"\n"
    );
    let runs = [
        ("w1", Some("1"), None),
        ("w4", Some("4"), None),
        ("w4-again", Some("4"), None),
        ("env3", None, Some("3")),
    ];
    let mut outputs = Vec::new();
    for (name, w, env) in runs {
        let out = dir.join(name);
        let code = run_cli(&good, dir, &out, w, env);
        ensure!(code == 0, "good config ({name}) exited {code}");
        outputs.push(read_dir(&out));
    }
    ensure!(outputs.windows(2).all(|w| w[0] == w[1]), "outputs differ across runs or worker counts");
    let files = &outputs[0];
    let text = |name: &str| {
        files.iter().find(|f| f.0 == name).map(|f| String::from_utf8_lossy(&f.1).into_owned()).unwrap_or_default()
    };
    let report: serde_json::Value = serde_json::from_str(&text("00-blowup.json")).map_err(|e| e.to_string())?;
    let kappa = report["result"]["kappa"]["value"].as_f64().unwrap_or(f64::NAN);
    ensure!(report["result"]["kind"] == "case-b" && (kappa - PI / 3.0).abs() < 1e-5, "blow-up report: {kappa}");
    ensure!(report["schema"] == "carnot.report/1" && report["equation"] == "blowup-density", "report header");
    ensure!(text("01-monotonicity-scan.csv").starts_with("t,m,minus_dm,rhs,verdict\n"), "monotonicity CSV header");
    ensure!(text("00-blowup-scan.csv").starts_with("R,ratio\n"), "blow-up CSV header");

    let mut matrix = Vec::new();
    let cases: Vec<(&str, String, i32)> = vec![
        ("misspelled-surface", format!("{BASE}surface = {{ preset = \"h1-t0-plnae\" }}\n[[checks]]\nname = \"minkowski\"\n"), 1),
        ("unknown-check", format!("{BASE}surface = {{ preset = \"h1-t0-plane\" }}\n[[checks]]\nname = \"minkowsky\"\n"), 1),
        ("bad-tolerance", format!("{BASE}surface = {{ preset = \"h1-t0-plane\" }}\n[quadrature]\nrel_tol = 0.5\n"), 1),
        ("wrong-group", format!("group = \"engel\"\nnorm = {{ kind = \"power\", lambda = 12 }}\nsurface = {{ preset = \"h1-t0-plane\" }}\n"), 1),
        (
            "capability",
            "group = \"engel\"\nnorm = { kind = \"power\", lambda = 12 }\nsurface = { preset = \"engel-vertical-plane\" }\n\
             [[checks]]\nname = \"perimeter\"\n[[checks]]\nname = \"coarea\"\nphi = [{ exp = [0, 1, 0, 0], coef = 1.0 }]\n"
                .to_string(),
            1,
        ),
        ("empty-checks", format!("{BASE}surface = {{ preset = \"h1-t0-plane\" }}\n"), 0),
        (
            "violated",
            format!(
                "{BASE}surface = {{ preset = \"h1-vertical-plane\" }}\n[quadrature]\nrel_tol = 1e-6\n\
                 [[checks]]\nname = \"poincare\"\nat = {{ u = [0.0, 0.0] }}\nradius = 0.5\np = 1.0\n\
                 test = {{ kind = \"polynomial\", terms = [{{ exp = [0, 0, 0], coef = 1.0 }}] }}\n"
            ),
            2,
        ),
    ];
    for (name, config, expect) in &cases {
        let out = dir.join(name);
        let code = run_cli(config, dir, &out, Some("2"), None);
        ensure!(code == *expect, "{name}: exit {code}, expected {expect}");
        let written = read_dir(&out);
        if *expect == 1 {
            ensure!(written.is_empty(), "{name}: partial outputs {:?}", written.iter().map(|f| &f.0).collect::<Vec<_>>());
        }
        if *name == "empty-checks" {
            let manifest: serde_json::Value =
                serde_json::from_slice(&written.iter().find(|f| f.0 == "manifest.json").ok_or("no manifest")?.1)
                    .map_err(|e| e.to_string())?;
            ensure!(written.len() == 1 && manifest["files"].as_array().is_some_and(|a| a.is_empty()), "empty manifest");
        }
        matrix.push(format!("{name}→{code}"));
    }
    let blocker = dir.join("not-a-dir");
    std::fs::write(&blocker, b"").map_err(|e| e.to_string())?;
    let code = run_cli(&good, dir, &blocker, Some("2"), None);
    ensure!(code == 1, "unwritable output: exit {code}");
    matrix.push(format!("unwritable→{code}"));

    let elapsed = suite_start.elapsed();
    ensure!(elapsed < SUITE_BUDGET, "acceptance run took {elapsed:.1?}");
    Ok(format!("identical bytes over 4 runs (1/3/4 workers); exits {}; acceptance time {elapsed:.1?}", matrix.join(" ")))
}

fn main() {
    let start = Instant::now();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("group core", Box::new(group_core)),
        ("perimeter oracles", Box::new(perimeter_oracles)),
        ("blow-up densities", Box::new(blowup)),
        ("coarea", Box::new(coarea)),
        ("divergence and first variation", Box::new(divergence_and_variation)),
        ("curvature", Box::new(curvature)),
        ("monotonicity", Box::new(monotonicity)),
        ("isoperimetric", Box::new(isoperimetric)),
        ("Poincaré, Rayleigh, Sobolev", Box::new(poincare_rayleigh_sobolev)),
        ("determinism and CLI contract", Box::new(move || cli_contract(start))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name}: {detail} [{:.1?}]", i + 1, t.elapsed());
    }
    println!("acceptance: {} of {} criteria pass in {:.1?}", criteria.len() - failed, criteria.len(), start.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::coarea::{LevelSets, Segment};
use super::fields::{diameter_where, layer_gradient_norms, layer_weight, tangential_gradient, ScalarField};
use super::isoperimetric::isoperimetric_constant;
use super::monotone::{ball_points, Anchor};
use super::report::InequalityReport;
use super::LabError;
use crate::blowup::boundary_distance;
use crate::hypersurface::{
    ch_constant, integrate_patch_h, mean_curvature, point_data, sum_patches, Patch, Region, Side, Surface,
    SurfacePointData,
};
use crate::metrics::{layer_constants, metric_factor_bounds};
use crate::quadrature::{brent_min, Estimate, Integrator, QuadratureSpec};
use crate::Norm;

/// `(1 − (ρ_x/r)⁴)²` inside `B_ρ(x, r)`, zero outside: a `C¹` bump.
pub fn radial_bump(rho: Norm, center: Vec<f64>, radius: f64) -> ScalarField {
    Arc::new(move |y: &[f64]| {
        let s = rho.dist(&center, y) / radius;
        if s >= 1.0 {
            0.0
        } else {
            (1.0 - s.powi(4)).powi(2)
        }
    })
}

/// A test function with an optional supporting ball `B_ρ(center, radius)`.
#[derive(Clone)]
pub struct TestFunction {
    pub f: ScalarField,
    pub support: Option<(Vec<f64>, f64)>,
}

impl TestFunction {
    pub fn new(f: ScalarField) -> Self {
        Self { f, support: None }
    }

    pub fn supported_in(f: ScalarField, center: &[f64], radius: f64) -> Self {
        Self { f, support: Some((center.to_vec(), radius)) }
    }

    /// `c ψ`, keeping the support.
    pub fn scaled(&self, c: f64) -> Self {
        let f = self.f.clone();
        Self { f: Arc::new(move |y: &[f64]| c * f(y)), support: self.support.clone() }
    }

    fn region<'a>(&self, rho: &'a Norm) -> Region<'a> {
        match &self.support {
            Some((c, r)) => Region::ball(rho, c, *r),
            None => Region::Whole,
        }
    }
}

fn integrate(
    surface: &Surface,
    region: &Region,
    q: &QuadratureSpec,
    g: &(dyn Fn(&dyn Patch, &SurfacePointData, &[f64]) -> f64 + Sync),
) -> Estimate {
    sum_patches(surface, |p| {
        let p = p.as_ref();
        integrate_patch_h(p, region, q, &|d, u| g(p, d, u))
    })
}

/// `|grad_HS f|` at a surface point.
fn grad_hs(p: &dyn Patch, d: &SurfacePointData, u: &[f64], f: &dyn Fn(&[f64]) -> f64) -> f64 {
    layer_gradient_norms(p.algebra(), d, &tangential_gradient(p, u, d, f))[0]
}

/// `I^{1/p}` with the propagated error.
fn root(i: Estimate, p: f64) -> Estimate {
    let v = i.value.max(0.0).powf(1.0 / p);
    let e = if i.value > 0.0 { v / (p * i.value) * i.error } else { i.error.powf(1.0 / p) };
    Estimate { value: v, error: e, ..i }
}

/// `(∫_{S_R}|ψ|^p σ)^{1/p} ≤ C_p R (∫_{S_R}|grad_HS ψ|^p σ)^{1/p}` with
/// `C_p = 2p/(2h − 3)`, for `R ≤ min{dist_ρ(x, ∂S), R_U}` and
/// `R_U = 1/(2(‖H‖_∞ + C‖ϖ‖_∞))` on the ball.
pub fn poincare_check(
    surface: &Surface,
    anchor: &Anchor,
    rho: &Norm,
    radius: f64,
    p: f64,
    psi: &ScalarField,
    q: &QuadratureSpec,
) -> Result<InequalityReport, LabError> {
    if p < 1.0 {
        return Err(LabError::Precondition(format!("p = {p} must be at least 1")));
    }
    let x = anchor.resolve(surface)?;
    let alg = rho.algebra();
    let h = alg.h() as f64;
    if 2.0 * h - 3.0 <= 0.0 {
        return Err(LabError::Capability("the Poincaré constant needs h ≥ 2".into()));
    }
    let c = ch_constant(alg);
    let (mut h_sup, mut varpi_sup) = (0.0f64, 0.0f64);
    for (pi, u) in ball_points(surface, anchor, &x, rho, radius) {
        let patch = surface.patches[pi].as_ref();
        let d = point_data(patch, &u);
        if d.characteristic {
            varpi_sup = f64::INFINITY;
            continue;
        }
        h_sup = h_sup.max(mean_curvature(patch, &u).unwrap_or(0.0).abs());
        varpi_sup = varpi_sup.max(d.varpi_norm());
    }
    let denom = h_sup + c * varpi_sup;
    let r_u = if denom == 0.0 { f64::INFINITY } else { 0.5 / denom };
    let reach = boundary_distance(surface, &x, rho);
    let admissible = reach.min(r_u);
    if radius > admissible {
        return Err(LabError::RadiusTooLarge { radius, admissible, r_u });
    }
    let cp = 2.0 * p / (2.0 * h - 3.0);
    let ball = Region::ball(rho, &x, radius);
    let f = |y: &[f64]| psi(y);
    let mass = integrate(surface, &ball, q, &|_, d, _| psi(&d.point).abs().powf(p));
    let grad = integrate(surface, &ball, q, &|pa, d, u| grad_hs(pa, d, u, &f).powf(p));
    let lhs = root(mass, p);
    let rhs = root(grad, p).scale(cp * radius);
    Ok(InequalityReport::at_most("poincare", &surface.name, lhs, rhs, 0.0)
        .with_norm(rho)
        .constant("C_p", cp)
        .constant("p", p)
        .constant("R", radius)
        .constant("R_U", r_u)
        .constant("C", c)
        .constant("H_sup", h_sup)
        .constant("varpi_sup", varpi_sup))
}

/// The part of `S` where a coordinate is below (or above) a value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Split {
    pub coordinate: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RayleighMode {
    /// Test functions are free on `∂S`; splits and cutoffs are used.
    Neumann,
    /// Test functions must vanish on `∂S`.
    Dirichlet,
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitQuotient {
    pub split: Split,
    /// `σ^{n−2}_H(N)` of the interface `N`.
    pub interface: Estimate,
    pub below: Estimate,
    pub above: Estimate,
    /// `σ^{n−2}_H(N) / min(σ(below), σ(above))`.
    pub quotient: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffQuotient {
    pub eps: f64,
    /// Weight of the larger side making the mean zero.
    pub alpha: f64,
    pub gradient: Estimate,
    pub mass: Estimate,
    pub quotient: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RayleighEstimate {
    pub mode: RayleighMode,
    pub splits: Vec<SplitQuotient>,
    /// Smallest split quotient.
    pub geometric: Option<f64>,
    pub cutoffs: Vec<CutoffQuotient>,
    /// Rayleigh quotients `∫|grad_HS ψ|σ / ∫|ψ|σ` of the supplied test functions.
    pub test_quotients: Vec<f64>,
    /// Smallest quotient over cutoffs and test functions.
    pub analytic: Option<f64>,
    /// `analytic − geometric`; both are upper estimates of the isoperimetric constant.
    pub gap: Option<f64>,
    /// `Isop²/4` evaluated at the smallest available estimate; a figure, not a certificate.
    pub lambda1_lower: Option<f64>,
    pub warnings: Vec<String>,
}

fn face_probe_max(surface: &Surface, f: &dyn Fn(&[f64]) -> f64) -> f64 {
    const N: usize = 65;
    let mut best = 0.0f64;
    for p in &surface.patches {
        let (lo, hi) = p.domain().param_box();
        let m = lo.len();
        for face in p.boundary_faces() {
            let free: Vec<usize> = (0..m).filter(|&d| d != face.axis).collect();
            for idx in 0..N.pow(free.len() as u32) {
                let mut u = vec![0.0; m];
                u[face.axis] = if face.side == Side::Lo { lo[face.axis] } else { hi[face.axis] };
                let mut rem = idx;
                for &d in &free {
                    let k = rem % N;
                    rem /= N;
                    u[d] = lo[d] + (hi[d] - lo[d]) * k as f64 / (N - 1) as f64;
                }
                best = best.max(f(&p.point(&u)).abs());
            }
        }
    }
    best
}

/// `∫ g σ` over the part of every patch where `side · (x_c − v) ≤ 0`, further
/// restricted to `{band ≤ 0}` when given.
fn side_integral(
    surface: &Surface,
    split: Split,
    below: bool,
    band: Option<&(dyn Fn(&[f64]) -> f64 + Sync)>,
    q: &QuadratureSpec,
    g: &(dyn Fn(&dyn Patch, &SurfacePointData, &[f64]) -> f64 + Sync),
) -> Estimate {
    let sign = if below { 1.0 } else { -1.0 };
    sum_patches(surface, |p| {
        let p = p.as_ref();
        let (lo, hi) = p.domain().param_box();
        let clip = |u: &[f64]| {
            let y = p.point(u);
            let side = sign * (y[split.coordinate] - split.value);
            match band {
                // Outside the side the sign is settled; skip the band.
                Some(b) if side <= 0.0 => side.max(b(&y)),
                _ => side,
            }
        };
        let f = |u: &[f64]| {
            let d = point_data(p, u);
            if d.characteristic {
                0.0
            } else {
                g(p, &d, u) * d.sigma_density
            }
        };
        Integrator::new(*q).integrate_box(&lo, &hi, &f, Some(&clip))
    })
}

/// Relative step for probing whether the distance decreases along a piece.
const PROBE_STEP: f64 = 1e-6;

/// `ρ(y, N)` for the interface of a split, from traced level segments.
struct Interface<'a> {
    rho: &'a Norm,
    pieces: Vec<(&'a LevelSets<'a>, Segment)>,
    value: f64,
    /// Segment end points: exact points of `N`.
    ends: Vec<[Vec<f64>; 2]>,
}

impl<'a> Interface<'a> {
    fn new(rho: &'a Norm, pieces: Vec<(&'a LevelSets<'a>, Segment)>, value: f64) -> Self {
        let ends = pieces.iter().map(|(ls, seg)| [ls.point(&seg.a), ls.point(&seg.b)]).collect();
        Self { rho, pieces, value, ends }
    }

    fn point(&self, k: usize, lam: f64) -> Option<Vec<f64>> {
        let (ls, seg) = &self.pieces[k];
        ls.project(seg, lam, self.value).map(|(u, _)| ls.point(&u))
    }

    /// Nearest point of `N` and its distance. Starting from the nearest
    /// segment end point `E`, each piece ending at `E` is probed just inside;
    /// Brent refines along a piece on which the distance decreases.
    fn nearest(&self, y: &[f64]) -> Option<(f64, Vec<f64>)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for (k, pair) in self.ends.iter().enumerate() {
            for (j, p) in pair.iter().enumerate() {
                let d = self.rho.dist(y, p);
                if best.is_none_or(|b| d < b.0) {
                    best = Some((d, k, j));
                }
            }
        }
        let (d0, k0, j0) = best?;
        let e = &self.ends[k0][j0];
        let mut out = (d0, e.clone());
        for (k, pair) in self.ends.iter().enumerate() {
            for (j, p) in pair.iter().enumerate() {
                if !(k == k0 && j == j0) && !p.iter().zip(e).all(|(a, b)| (a - b).abs() <= 1e-12) {
                    continue;
                }
                // `λ` runs away from `E` along the piece.
                let f = |t: f64| {
                    let lam = if j == 0 { t } else { 1.0 - t };
                    self.point(k, lam).map_or(f64::INFINITY, |n| self.rho.dist(y, &n))
                };
                if f(PROBE_STEP) >= d0 {
                    continue;
                }
                let (t, d) = brent_min(&f, 0.0, 1.0, 1e-9);
                if d < out.0 {
                    let lam = if j == 0 { t } else { 1.0 - t };
                    if let Some(n) = self.point(k, lam) {
                        out = (d, n);
                    }
                }
            }
        }
        Some(out)
    }

    fn distance(&self, y: &[f64]) -> f64 {
        self.nearest(y).map_or(f64::INFINITY, |(d, _)| d)
    }

    /// `|grad_HS ρ(·, N)|` at a surface point: by the envelope theorem the
    /// gradient of `ρ(n⁻¹ •)` at the nearest point `n`.
    fn gradient_hs(&self, data: &SurfacePointData) -> f64 {
        let Some((_, n)) = self.nearest(&data.point) else { return 0.0 };
        let alg = self.rho.algebra();
        let z = alg.left_quotient(&n, &data.point);
        let (Ok(g), Some(nh)) = (self.rho.grad_frame(&z), data.nu_h.as_ref()) else { return 0.0 };
        let h = alg.h();
        let normal: f64 = g[..h].iter().zip(nh).map(|(a, b)| a * b).sum();
        g[..h].iter().zip(nh).map(|(a, b)| (a - normal * b).powi(2)).sum::<f64>().sqrt()
    }
}

/// Estimates of the isoperimetric constant from coordinate splits and from
/// Rayleigh quotients: the split quotients, the two-sided cutoff family
/// `min(1, ρ(·, N)/ε)` (weighted by `−α` on the larger side so that the mean
/// vanishes) around the best split, and any supplied test functions.
pub fn rayleigh_isop_estimate(
    surface: &Surface,
    rho: &Norm,
    splits: &[Split],
    eps: &[f64],
    tests: &[ScalarField],
    mode: RayleighMode,
    q: &QuadratureSpec,
) -> Result<RayleighEstimate, LabError> {
    let mut warnings = Vec::new();
    let has_boundary = surface.patches.iter().any(|p| !p.boundary_faces().is_empty());
    if mode == RayleighMode::Dirichlet {
        if !has_boundary {
            return Err(LabError::Precondition("the Dirichlet constant needs a non-empty boundary".into()));
        }
        for (i, t) in tests.iter().enumerate() {
            let m = face_probe_max(surface, &|y| t(y));
            if m > 1e-12 {
                return Err(LabError::Admissibility(format!(
                    "test function {i} does not vanish on the boundary (|ψ| up to {m:.3e})"
                )));
            }
        }
        if !splits.is_empty() || !eps.is_empty() {
            warnings.push("splits and cutoffs do not vanish on the boundary; skipped in Dirichlet mode".into());
        }
    }
    let test_quotients: Vec<f64> = tests
        .iter()
        .map(|t| {
            let f = |y: &[f64]| t(y);
            let g = integrate(surface, &Region::Whole, q, &|p, d, u| grad_hs(p, d, u, &f));
            let m = integrate(surface, &Region::Whole, q, &|_, d, _| t(&d.point).abs());
            g.value / m.value
        })
        .collect();
    let mut split_results = Vec::new();
    let mut cutoffs = Vec::new();
    if mode == RayleighMode::Neumann {
        for &split in splits {
            let phi = move |y: &[f64]| y[split.coordinate];
            let mut interface = Estimate::ZERO;
            for p in &surface.patches {
                let levels = LevelSets::new(p.as_ref(), &phi)?;
                let len = levels
                    .length(split.value)
                    .ok_or_else(|| LabError::Capability("the split interface could not be traced".into()))?;
                interface = interface + Estimate::exact(len);
            }
            let below = side_integral(surface, split, true, None, q, &|_, _, _| 1.0);
            let above = side_integral(surface, split, false, None, q, &|_, _, _| 1.0);
            let quotient = interface.value / below.value.min(above.value);
            split_results.push(SplitQuotient { split, interface, below, above, quotient });
        }
        if let Some(best) = split_results.iter().min_by(|a, b| a.quotient.total_cmp(&b.quotient)) {
            let split = best.split;
            let small_below = best.below.value <= best.above.value;
            let phi = move |y: &[f64]| y[split.coordinate];
            let levels: Vec<LevelSets> =
                surface.patches.iter().map(|p| LevelSets::new(p.as_ref(), &phi)).collect::<Result<_, _>>()?;
            let pieces: Vec<(&LevelSets, Segment)> =
                levels.iter().flat_map(|ls| ls.segments(0, split.value).into_iter().map(move |s| (ls, s))).collect();
            let iface = Interface::new(rho, pieces, split.value);
            cutoffs = eps
                .par_iter()
                .map(|&e| {
                    // `ψ = min(1, ρ(·, N)/ε)` is integrated over the band `ρ < ε`,
                    // where it is smooth; outside it contributes the side area.
                    let band = |y: &[f64]| iface.distance(y) - e;
                    let side = |below: bool| {
                        let area = if below { best.below } else { best.above };
                        let deficit = side_integral(surface, split, below, Some(&band), q, &|_, d, _| {
                            iface.distance(&d.point) / e - 1.0
                        });
                        let g = side_integral(surface, split, below, Some(&band), q, &|_, d, _| iface.gradient_hs(d) / e);
                        (area + deficit, g)
                    };
                    let (m1, g1) = side(small_below);
                    let (m2, g2) = side(!small_below);
                    let alpha = m1.value / m2.value;
                    let gradient = g1 + g2.scale(alpha);
                    let mass = m1 + m2.scale(alpha);
                    CutoffQuotient { eps: e, alpha, gradient, mass, quotient: gradient.value / mass.value }
                })
                .collect();
        }
    }
    let geometric = split_results.iter().map(|s| s.quotient).min_by(f64::total_cmp);
    let analytic =
        cutoffs.iter().map(|c| c.quotient).chain(test_quotients.iter().cloned()).min_by(f64::total_cmp);
    let gap = geometric.zip(analytic).map(|(g, a)| a - g);
    let lambda1_lower = match (geometric, analytic) {
        (Some(g), Some(a)) => Some(g.min(a)),
        (g, a) => g.or(a),
    }
    .map(|i| 0.25 * i * i);
    Ok(RayleighEstimate {
        mode,
        splits: split_results,
        geometric,
        cutoffs,
        test_quotients,
        analytic,
        gap,
        lambda1_lower,
        warnings,
    })
}

/// Which right-hand side of the Sobolev inequality to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SobolevForm {
    /// `C_I{∫|ψ||H|(1 + Σ i c_i ρ^{i−1}|ϖ_{H_i}|) + ∫(|grad_HS ψ| + Σ i c_i ρ^{i−1}|grad_{H_iS} ψ|)}σ`.
    Full,
    /// `C′₁ ∫(|ψ| + |grad_HS ψ|)σ` with `C′₁ = C_I max(C₀, C′₀)`.
    Horizontal,
}

/// `(∫|ψ|^{(Q−1)/(Q−2)}σ)^{(Q−2)/(Q−1)} ≤ RHS` on a closed surface, where
/// `ρ = diam_ρ(supp ψ)/2`. For the horizontal form, `C₀ = sup_{supp ψ}
/// |H|(1 + Σ i c_i ρ^{i−1}|ϖ_{H_i}|)` and `C′₀ = ∫(|grad_HS ψ| + Σ i c_i
/// ρ^{i−1}|grad_{H_iS} ψ|)σ / ∫|grad_HS ψ|σ`, the smallest constant bounding
/// the level integral of the weighted boundary term for this `ψ`.
pub fn sobolev_check(
    surface: &Surface,
    psi: &TestFunction,
    rho: &Norm,
    form: SobolevForm,
    q: &QuadratureSpec,
) -> Result<InequalityReport, LabError> {
    if surface.patches.iter().any(|p| !p.boundary_faces().is_empty()) {
        return Err(LabError::Precondition("the Sobolev inequality is checked on closed surfaces".into()));
    }
    let alg = rho.algebra();
    let qd = alg.q();
    if qd <= 2 {
        return Err(LabError::Capability("homogeneous dimension must exceed 2".into()));
    }
    let e = (qd as f64 - 2.0) / (qd as f64 - 1.0);
    let k1 = metric_factor_bounds(rho).k1;
    let c = layer_constants(rho).c;
    let ci = isoperimetric_constant(qd, k1);
    let f = psi.f.clone();
    let fr = |y: &[f64]| f(y);
    let rho_s = 0.5 * diameter_where(surface, rho, &|y| f(y) != 0.0);
    let region = psi.region(rho);

    let power = integrate(surface, &region, q, &|_, d, _| f(&d.point).abs().powf(1.0 / e));
    let lhs = root(power, 1.0 / e);
    let mass = integrate(surface, &region, q, &|_, d, _| f(&d.point).abs());
    let curv = integrate(surface, &region, q, &|p, d, u| {
        let v = f(&d.point).abs();
        if v == 0.0 {
            return 0.0;
        }
        v * mean_curvature(p, u).unwrap_or(0.0).abs() * layer_weight(&c, rho_s, &d.varpi_layers)
    });
    let layer_grads = |p: &dyn Patch, d: &SurfacePointData, u: &[f64]| {
        layer_gradient_norms(p.algebra(), d, &tangential_gradient(p, u, d, &fr))
    };
    let grad = integrate(surface, &region, q, &|p, d, u| layer_grads(p, d, u)[0]);
    let upper = integrate(surface, &region, q, &|p, d, u| {
        let g = layer_grads(p, d, u);
        layer_weight(&c, rho_s, &g[1..]) - 1.0
    });

    let mut warnings = Vec::new();
    let mut c0 = 0.0f64;
    for s in super::fields::surface_samples(surface, 65) {
        if f(&s.point) == 0.0 {
            continue;
        }
        let p = surface.patches[s.patch].as_ref();
        let d = point_data(p, &s.u);
        if d.characteristic {
            warnings.push("the support of ψ meets the characteristic set".to_string());
            continue;
        }
        c0 = c0.max(mean_curvature(p, &s.u).unwrap_or(0.0).abs() * layer_weight(&c, rho_s, &d.varpi_layers));
    }
    let c0_prime = if grad.value > 0.0 { (grad.value + upper.value) / grad.value } else { 1.0 };

    let (rhs, tag) = match form {
        SobolevForm::Full => ((curv + grad + upper).scale(ci), "sobolev"),
        SobolevForm::Horizontal => ((mass + grad).scale(ci * c0.max(c0_prime)), "sobolev-horizontal"),
    };
    let mut r = InequalityReport::at_most(tag, &surface.name, lhs, rhs, 0.0)
        .with_norm(rho)
        .term("psi-mass", mass)
        .term("curvature", curv)
        .term("horizontal-gradient", grad)
        .term("upper-gradients", upper)
        .constant("C_I", ci)
        .constant("k1", k1)
        .constant("rho_S", rho_s)
        .constant("C0", c0)
        .constant("C0_prime", c0_prime)
        .constant("Q", qd as f64)
        .with_warnings(warnings);
    for (i, ci) in c.iter().enumerate() {
        r = r.constant(&format!("c{}", i + 2), *ci);
    }
    Ok(r)
}

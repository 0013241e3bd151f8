use serde::Serialize;

use super::coarea::{IDENTITY_ABS_TOL, IDENTITY_REL_TOL};
use super::fields::{Excision, HorizontalField};
use super::report::InequalityReport;
use super::LabError;
use crate::hypersurface::{
    ch_nu_from, h_perimeter, hs_divergence, integrate_boundary, integrate_boundary_h, integrate_patch, mean_curvature,
    point_data, sum_patches, Region, Surface, Transform,
};
use crate::linalg::dot;
use crate::quadrature::{Estimate, QuadratureSpec};

/// Flow time of the first-variation central difference.
pub const VARIATION_STEP: f64 = 1e-3;
/// Residuals below this level count as converged when testing refinement.
pub const RESIDUAL_FLOOR: f64 = 1e-7;

fn identity_tol(a: &Estimate, b: &Estimate) -> f64 {
    IDENTITY_REL_TOL * a.value.abs().max(b.value.abs()) + IDENTITY_ABS_TOL
}

fn hdot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `∫{div_HS X + ⟨C_Hν_H, X⟩}σ = ∫H⟨X, ν_H⟩σ + ∮⟨X, η_HS⟩σ^{n−2}` for a
/// horizontal field `X`; characteristic cells are excised.
pub fn divergence_check(
    surface: &Surface,
    field: &HorizontalField,
    q: &QuadratureSpec,
) -> Result<InequalityReport, LabError> {
    divergence_with_support(surface, field, q, "divergence-theorem")
}

fn divergence_with_support(
    surface: &Surface,
    field: &HorizontalField,
    q: &QuadratureSpec,
    tag: &str,
) -> Result<InequalityReport, LabError> {
    let ex = Excision::new(surface, q);
    let div = ex.integrate_h(surface, q, &|p, d, u| {
        hs_divergence(p, u, d, &|v| field(&p.point(v))).unwrap_or(0.0)
    });
    let ch = ex.integrate_h(surface, q, &|p, d, _| match ch_nu_from(p.algebra(), d) {
        Ok((c, _)) => hdot(&c, &field(&d.point)),
        Err(_) => 0.0,
    });
    let support = ex.integrate_h(surface, q, &|_, d, _| d.nu_h.as_ref().map_or(0.0, |n| hdot(&field(&d.point), n)));
    let curv = ex.integrate_h(surface, q, &|p, d, u| {
        let h = mean_curvature(p, u).unwrap_or(0.0);
        d.nu_h.as_ref().map_or(0.0, |n| h * hdot(&field(&d.point), n))
    });
    let boundary = integrate_boundary_h(surface, &Region::Whole, q, &|b| {
        b.eta_hs.as_ref().map_or(0.0, |e| hdot(&field(&b.surface.point), e))
    });
    let mut lhs = div + ch;
    let rhs = curv + boundary;
    lhs.error += ex.allowance();
    let tol = identity_tol(&lhs, &rhs);
    let mut r = InequalityReport::equal(tag, &surface.name, lhs, rhs, tol)
        .term("divergence", div)
        .term("ch-term", ch)
        .term("curvature", curv)
        .term("boundary", boundary)
        .term("support-function", support)
        .with_warnings(ex.warning());
    if r.lhs.value.abs() + r.rhs.value.abs() == 0.0 {
        r.warn("all terms vanish");
    }
    Ok(r)
}

/// The divergence identity for the position field `x_H`, whose divergence is
/// `h − 1`; `support-function` is `∫⟨x_H, ν_H⟩σ`.
pub fn minkowski_check(surface: &Surface, q: &QuadratureSpec) -> Result<InequalityReport, LabError> {
    let alg = surface
        .patches
        .first()
        .map(|p| p.algebra().clone())
        .ok_or_else(|| LabError::Precondition("empty surface".into()))?;
    let h = alg.h();
    let field: HorizontalField = std::sync::Arc::new(move |y: &[f64]| y[..h].to_vec());
    divergence_with_support(surface, &field, q, "minkowski").map(|r| r.constant("h", h as f64))
}
/// A residual at `q` and at `q.refined()`.
/// Divergence residual at `q` and at `q.refined()`.
#[derive(Debug, Clone, Serialize)]
pub struct RefinementStudy {
    pub coarse: InequalityReport,
    pub fine: InequalityReport,
    /// `|residual_fine| ≤ max(|residual_coarse|/2, RESIDUAL_FLOOR)`.
    pub halves: bool,
}

pub fn divergence_refinement(
    surface: &Surface,
    field: &HorizontalField,
    q: &QuadratureSpec,
) -> Result<RefinementStudy, LabError> {
    refinement_study(q, |q| divergence_check(surface, field, q))
}

/// Runs `check` at `q` and at `q.refined()`; the residual must halve or fall
/// below a floor set by rounding.
pub fn refinement_study(
    q: &QuadratureSpec,
    check: impl Fn(&QuadratureSpec) -> Result<InequalityReport, LabError>,
) -> Result<RefinementStudy, LabError> {
    let coarse = check(q)?;
    let fine = check(&q.refined())?;
    let halves = fine.slack.abs() <= (0.5 * coarse.slack.abs()).max(RESIDUAL_FLOOR);
    Ok(RefinementStudy { coarse, fine, halves })
}

/// Central difference of `σ^{n−1}_H` under `y ↦ y • exp(εW)` against
/// `∫H⟨W, ν⟩σ_R + ∮{⟨W, η⟩|P_Hν| − ⟨W, ν⟩⟨ν_H, η⟩}σ_R^{n−2}` (`W` left-invariant,
/// frame components). The second boundary piece vanishes when `W` is tangent
/// along `∂S`; without it the horizontal case would disagree with
/// `∮⟨W, η_HS⟩σ^{n−2}_H`.
pub fn first_variation_check(surface: &Surface, w: &[f64], q: &QuadratureSpec) -> Result<InequalityReport, LabError> {
    let moved = |eps: f64| {
        let g: Vec<f64> = w.iter().map(|c| eps * c).collect();
        h_perimeter(&surface.transformed(Transform::RightTranslate(g)), &Region::Whole, q)
    };
    let (plus, minus) = (moved(VARIATION_STEP), moved(-VARIATION_STEP));
    let lhs = Estimate {
        value: (plus.value - minus.value) / (2.0 * VARIATION_STEP),
        error: (plus.error + minus.error) / (2.0 * VARIATION_STEP),
        converged: plus.converged && minus.converged,
        evaluations: plus.evaluations + minus.evaluations,
    };
    let interior = sum_patches(surface, |p| {
        let p = p.as_ref();
        integrate_patch(p, &Region::Whole, q, &|u| {
            let d = point_data(p, u);
            if d.characteristic {
                return 0.0;
            }
            mean_curvature(p, u).unwrap_or(0.0) * dot(w, &d.nu) * d.riemann_density
        })
    });
    let boundary =
        integrate_boundary(surface, &Region::Whole, q, &|b| dot(w, &b.eta) * b.surface.p_h_nu * b.riemann_density);
    let normal_flux = integrate_boundary(surface, &Region::Whole, q, &|b| {
        b.surface.nu_h.as_ref().map_or(0.0, |nh| -dot(w, &b.surface.nu) * hdot(nh, &b.eta) * b.riemann_density)
    });
    let rhs = interior + boundary + normal_flux;
    let tol = identity_tol(&lhs, &rhs);
    Ok(InequalityReport::equal("first-variation", &surface.name, lhs, rhs, tol)
        .term("curvature", interior)
        .term("boundary", boundary)
        .term("boundary-normal", normal_flux)
        .constant("flow-step", VARIATION_STEP))
}

/// The divergence identity for `X` and the first variation along `W`.
pub fn variation_divergence_check(
    surface: &Surface,
    field: &HorizontalField,
    w: &[f64],
    q: &QuadratureSpec,
) -> Result<(InequalityReport, InequalityReport), LabError> {
    Ok((divergence_check(surface, field, q)?, first_variation_check(surface, w, q)?))
}

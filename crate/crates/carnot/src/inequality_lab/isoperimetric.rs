use super::fields::{circumradius, diameter, layer_weight, Excision};
use super::report::InequalityReport;
use super::LabError;
use crate::hypersurface::{
    boundary_frame, boundary_perimeter, ch_nu_from, h_perimeter, integrate_boundary_h,
    mean_curvature, Patch, Region, Side, Surface,
};
use crate::metrics::{layer_constants, metric_factor_bounds};
use crate::quadrature::{Estimate, QuadratureSpec};
use crate::Norm;

/// `C_I = 2^{Q(Q−1)/(Q−2)} k1^{1/(2−Q)}`.
pub fn isoperimetric_constant(q: usize, k1: f64) -> f64 {
    let q = q as f64;
    2f64.powf(q * (q - 1.0) / (q - 2.0)) * k1.powf(1.0 / (2.0 - q))
}

/// `A_∞ = ∫|H|(1 + Σ i c_i r^{i−1}|ϖ_{H_i}|)σ` over `S ∩ region`, with the
/// radius `r` given per point and `c` listing layers `2..k`.
pub fn a_infinity(
    surface: &Surface,
    region: &Region,
    c: &[f64],
    radius: &(dyn Fn(&[f64]) -> f64 + Sync),
    q: &QuadratureSpec,
) -> Estimate {
    crate::hypersurface::sum_patches(surface, |p| {
        let p = p.as_ref();
        crate::hypersurface::integrate_patch_h(p, region, q, &|d, u| {
            let h = mean_curvature(p, u).unwrap_or(0.0).abs();
            h * layer_weight(c, radius(&d.point), &d.varpi_layers)
        })
    })
}

/// `B_∞ = ∫(1 + Σ i c_i r^{i−1}|χ_{H_iS}|)σ^{n−2}` over `∂S ∩ region`.
pub fn b_infinity(
    surface: &Surface,
    region: &Region,
    c: &[f64],
    radius: &(dyn Fn(&[f64]) -> f64 + Sync),
    q: &QuadratureSpec,
) -> Estimate {
    integrate_boundary_h(surface, region, q, &|b| layer_weight(c, radius(&b.surface.point), &b.chi_layers))
}

/// Samples per boundary face used to detect an undefined boundary frame.
const FRAME_PROBES: usize = 65;

/// Fraction of sampled boundary points where `η_HS` is undefined.
fn undefined_frame_fraction(surface: &Surface) -> f64 {
    let (mut bad, mut total) = (0usize, 0usize);
    for p in &surface.patches {
        let (lo, hi) = p.domain().param_box();
        let m = lo.len();
        for f in p.boundary_faces() {
            let free: Vec<usize> = (0..m).filter(|&d| d != f.axis).collect();
            let dus: Vec<Vec<f64>> = free
                .iter()
                .map(|&d| {
                    let mut e = vec![0.0; m];
                    e[d] = 1.0;
                    e
                })
                .collect();
            let mut out = vec![0.0; m];
            out[f.axis] = f.outward();
            for idx in 0..FRAME_PROBES.pow(free.len() as u32) {
                let mut u = vec![0.0; m];
                u[f.axis] = if f.side == Side::Lo { lo[f.axis] } else { hi[f.axis] };
                let mut rem = idx;
                for &d in &free {
                    let k = rem % FRAME_PROBES;
                    rem /= FRAME_PROBES;
                    u[d] = lo[d] + (hi[d] - lo[d]) * (k as f64 + 0.5) / FRAME_PROBES as f64;
                }
                total += 1;
                if boundary_frame(p.as_ref() as &dyn Patch, &u, &dus, &out).eta_hs.is_none() {
                    bad += 1;
                }
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        bad as f64 / total as f64
    }
}

/// Which boundary term the isoperimetric inequality uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTerm {
    /// `B_∞(S)`, weighted by the `χ` layers.
    Weighted,
    /// `σ^{n−2}_H(∂S)`, for boundaries with a small characteristic set.
    Perimeter,
}

/// `σ(S)^{(Q−2)/(Q−1)} ≤ C_I^{(Q−2)/(Q−1)} (A_∞(S) + B_∞(S))` with `ρ_S = diam_ρ(S)/2`.
pub fn isoperimetric_report(surface: &Surface, rho: &Norm, q: &QuadratureSpec) -> Result<InequalityReport, LabError> {
    let fraction = undefined_frame_fraction(surface);
    let term = if fraction > 0.05 { BoundaryTerm::Perimeter } else { BoundaryTerm::Weighted };
    let mut r = isoperimetric_with(surface, rho, term, q)?;
    if term == BoundaryTerm::Perimeter {
        r.warn(format!(
            "boundary frame undefined on {:.1}% of the boundary samples; using the H-perimeter of the boundary",
            100.0 * fraction
        ));
    }
    Ok(r)
}

pub fn isoperimetric_with(
    surface: &Surface,
    rho: &Norm,
    term: BoundaryTerm,
    q: &QuadratureSpec,
) -> Result<InequalityReport, LabError> {
    let alg = rho.algebra();
    let qd = alg.q();
    if qd <= 2 {
        return Err(LabError::Capability("homogeneous dimension must exceed 2".into()));
    }
    let e = (qd as f64 - 2.0) / (qd as f64 - 1.0);
    let k1 = metric_factor_bounds(rho).k1;
    let c = layer_constants(rho).c;
    let ci = isoperimetric_constant(qd, k1);
    let rho_s = 0.5 * diameter(surface, rho);
    let sigma = h_perimeter(surface, &Region::Whole, q);
    let r_fixed = |_: &[f64]| rho_s;
    let a = a_infinity(surface, &Region::Whole, &c, &r_fixed, q);
    let b = match term {
        BoundaryTerm::Weighted => b_infinity(surface, &Region::Whole, &c, &r_fixed, q),
        BoundaryTerm::Perimeter => boundary_perimeter(surface, &Region::Whole, q),
    };
    let lhs = Estimate {
        value: sigma.value.powf(e),
        error: if sigma.value > 0.0 { e * sigma.value.powf(e - 1.0) * sigma.error } else { 0.0 },
        ..sigma
    };
    let rhs = (a + b).scale(ci.powf(e));
    let tag = match term {
        BoundaryTerm::Weighted => "isoperimetric",
        BoundaryTerm::Perimeter => "isoperimetric-perimeter",
    };
    let mut r = InequalityReport::at_most(tag, &surface.name, lhs, rhs, 0.0)
        .with_norm(rho)
        .term("sigma", sigma)
        .term("a-infinity", a)
        .term("b-infinity", b)
        .constant("C_I", ci)
        .constant("k1", k1)
        .constant("Q", qd as f64)
        .constant("rho_S", rho_s);
    for (i, ci) in c.iter().enumerate() {
        r = r.constant(&format!("c{}", i + 2), *ci);
    }
    Ok(r)
}

/// `(h−1)σ(S) ≤ R{∫(|H| + |C_Hν_H|)σ + σ^{n−2}(∂S)}`, `R` the circumradius
/// about `center` (the boundary term vanishes on closed surfaces).
pub fn linear_isoperimetric_check(
    surface: &Surface,
    rho: &Norm,
    center: Option<&[f64]>,
    q: &QuadratureSpec,
) -> Result<InequalityReport, LabError> {
    let alg = rho.algebra();
    let origin = vec![0.0; alg.n()];
    let x = center.unwrap_or(&origin);
    let radius = circumradius(surface, rho, x);
    let ex = Excision::new(surface, q);
    let sigma = h_perimeter(surface, &Region::Whole, q);
    let curv = ex.integrate_h(surface, q, &|p, _, u| mean_curvature(p, u).unwrap_or(0.0).abs());
    // `|C_Hν_H|σ_H = |ϖ|σ_H` is bounded up to the characteristic set, so this
    // term needs no excision.
    let ch = crate::hypersurface::sum_patches(surface, |p| {
        let p = p.as_ref();
        crate::hypersurface::integrate_patch_h(p, &Region::Whole, q, &|d, _| {
            ch_nu_from(p.algebra(), d).map_or(0.0, |(_, m)| m)
        })
    });
    let boundary = boundary_perimeter(surface, &Region::Whole, q);
    let lhs = sigma.scale(alg.h() as f64 - 1.0);
    let mut rhs = (curv + ch + boundary).scale(radius);
    rhs.error += radius * ex.allowance();
    let tag = if surface.is_closed() { "linear-isoperimetric-closed" } else { "linear-isoperimetric" };
    Ok(InequalityReport::at_most(tag, &surface.name, lhs, rhs, 0.0)
        .with_norm(rho)
        .term("sigma", sigma)
        .term("curvature", curv)
        .term("ch-term", ch)
        .term("boundary", boundary)
        .constant("R", radius)
        .with_warnings(ex.warning()))
}

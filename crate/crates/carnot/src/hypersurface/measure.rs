use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::domain::Face;
use super::geometry::{boundary_frame, point_data, BoundaryFrameData, SurfacePointData, EPS_CHAR};
use super::patch::{Patch, Surface};
use super::SurfaceError;
use crate::linalg;
use crate::quadrature::{Estimate, Integrator, QuadratureSpec};
use crate::Norm;

/// Part of a patch to integrate over.
#[derive(Debug, Clone)]
pub enum Region<'a> {
    Whole,
    /// Sub-box of the parameter box.
    SubBox { lo: Vec<f64>, hi: Vec<f64> },
    /// `{y : ρ(center^{-1} • y) ≤ radius}`.
    Ball { norm: &'a Norm, center: Vec<f64>, radius: f64 },
}

impl<'a> Region<'a> {
    pub fn ball(norm: &'a Norm, center: &[f64], radius: f64) -> Self {
        Region::Ball { norm, center: center.to_vec(), radius }
    }

    fn contains_point(&self, y: &[f64]) -> bool {
        match self {
            Region::Ball { norm, center, radius } => norm.dist(center, y) <= *radius,
            _ => true,
        }
    }
}

type ParamFn<'f> = dyn Fn(&[f64]) -> f64 + Sync + 'f;

/// `∫ f du` over the part of the parameter box selected by `region`.
pub fn integrate_patch(patch: &dyn Patch, region: &Region, q: &QuadratureSpec, f: &ParamFn) -> Estimate {
    let (mut lo, mut hi) = patch.domain().param_box();
    if let Region::SubBox { lo: a, hi: b } = region {
        for d in 0..lo.len() {
            lo[d] = lo[d].max(a[d]);
            hi[d] = hi[d].min(b[d]);
            if hi[d] <= lo[d] {
                return Estimate::ZERO;
            }
        }
    }
    let integ = Integrator::new(*q);
    match region {
        Region::Ball { norm, center, radius } => {
            let clip = |u: &[f64]| norm.dist(center, &patch.point(u)) - radius;
            integ.integrate_box(&lo, &hi, f, Some(&clip))
        }
        _ => integ.integrate_box(&lo, &hi, f, None),
    }
}

/// `∫ g σ^{n−1}_H` over a patch; characteristic points contribute nothing.
pub fn integrate_patch_h(
    patch: &dyn Patch,
    region: &Region,
    q: &QuadratureSpec,
    g: &(dyn Fn(&SurfacePointData, &[f64]) -> f64 + Sync),
) -> Estimate {
    integrate_patch(patch, region, q, &|u| {
        let d = point_data(patch, u);
        if d.characteristic {
            0.0
        } else {
            g(&d, u) * d.sigma_density
        }
    })
}

/// Sum of per-patch integrals, evaluated in parallel and added in patch order.
pub fn sum_patches(surface: &Surface, f: impl Fn(&Arc<dyn Patch>) -> Estimate + Sync + Send) -> Estimate {
    let parts: Vec<Estimate> = surface.patches.par_iter().map(&f).collect();
    parts.into_iter().sum()
}

pub fn integrate_surface_h(
    surface: &Surface,
    region: &Region,
    q: &QuadratureSpec,
    g: &(dyn Fn(&SurfacePointData, &[f64]) -> f64 + Sync),
) -> Estimate {
    sum_patches(surface, |p| integrate_patch_h(p.as_ref(), region, q, g))
}

/// `σ^{n−1}_H(S ∩ region)`.
pub fn h_perimeter(surface: &Surface, region: &Region, q: &QuadratureSpec) -> Estimate {
    integrate_surface_h(surface, region, q, &|_, _| 1.0)
}

pub fn h_perimeter_patch(patch: &dyn Patch, region: &Region, q: &QuadratureSpec) -> Estimate {
    integrate_patch_h(patch, region, q, &|_, _| 1.0)
}

/// `σ^{n−1}_R(S ∩ region)`.
pub fn riemann_area(surface: &Surface, region: &Region, q: &QuadratureSpec) -> Estimate {
    sum_patches(surface, |p| integrate_patch(p.as_ref(), region, q, &|u| point_data(p.as_ref(), u).riemann_density))
}

/// A curve `s ↦ u(s)` in a two-dimensional parameter domain; the region lies
/// to the left of the direction of travel when `left_inside` is set.
#[derive(Clone)]
pub struct ParamCurve {
    pub u: Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
    pub du: Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
    pub s: [f64; 2],
    pub left_inside: bool,
}

impl std::fmt::Debug for ParamCurve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ParamCurve {{ s: {:?}, left_inside: {} }}", self.s, self.left_inside)
    }
}

#[derive(Debug, Clone)]
pub enum BoundaryPiece {
    Face(Face),
    Curve(ParamCurve),
}

fn face_point(lo: &[f64], hi: &[f64], face: Face, v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    let fixed = match face.side {
        super::domain::Side::Lo => lo[face.axis],
        super::domain::Side::Hi => hi[face.axis],
    };
    u.insert(face.axis, fixed);
    u
}

/// `∫ g σ^{n−2}_H` over one boundary piece of a patch, restricted to `region`.
pub fn integrate_piece_h(
    patch: &dyn Patch,
    piece: &BoundaryPiece,
    region: &Region,
    q: &QuadratureSpec,
    g: &(dyn Fn(&BoundaryFrameData) -> f64 + Sync),
) -> Estimate {
    integrate_piece(patch, piece, region, q, &|b| if b.h_density > 0.0 { g(b) * b.h_density } else { 0.0 })
}

/// `∫ w` over a boundary piece against its parameter measure; `w` supplies
/// the density (e.g. `riemann_density` or `h_density`).
pub fn integrate_piece(
    patch: &dyn Patch,
    piece: &BoundaryPiece,
    region: &Region,
    q: &QuadratureSpec,
    weight: &(dyn Fn(&BoundaryFrameData) -> f64 + Sync),
) -> Estimate {
    let integ = Integrator::new(*q);
    let inside = |u: &[f64]| region.contains_point(&patch.point(u));
    match piece {
        BoundaryPiece::Face(face) => {
            let (lo, hi) = patch.domain().param_box();
            let m = lo.len();
            let flo: Vec<f64> = (0..m).filter(|&d| d != face.axis).map(|d| lo[d]).collect();
            let fhi: Vec<f64> = (0..m).filter(|&d| d != face.axis).map(|d| hi[d]).collect();
            let dus: Vec<Vec<f64>> = (0..m)
                .filter(|&d| d != face.axis)
                .map(|d| {
                    let mut e = vec![0.0; m];
                    e[d] = 1.0;
                    e
                })
                .collect();
            let mut out = vec![0.0; m];
            out[face.axis] = face.outward();
            let f = |v: &[f64]| {
                let u = face_point(&lo, &hi, *face, v);
                weight(&boundary_frame(patch, &u, &dus, &out))
            };
            match region {
                Region::Ball { norm, center, radius } => {
                    let clip = |v: &[f64]| norm.dist(center, &patch.point(&face_point(&lo, &hi, *face, v))) - radius;
                    integ.integrate_box(&flo, &fhi, &f, Some(&clip))
                }
                _ => integ.integrate_box(&flo, &fhi, &f, None),
            }
        }
        BoundaryPiece::Curve(c) => {
            let sign = if c.left_inside { 1.0 } else { -1.0 };
            let f = |s: f64| {
                let u = (c.u)(s);
                if !inside(&u) {
                    return 0.0;
                }
                let du = (c.du)(s);
                let out = vec![sign * du[1], -sign * du[0]];
                weight(&boundary_frame(patch, &u, &[du], &out))
            };
            let clip = |s: &[f64]| match region {
                Region::Ball { norm, center, radius } => norm.dist(center, &patch.point(&(c.u)(s[0]))) - radius,
                _ => -1.0,
            };
            let g1 = |s: &[f64]| f(s[0]);
            integ.integrate_box(&[c.s[0]], &[c.s[1]], &g1, Some(&clip))
        }
    }
}

/// `σ^{n−2}_H` of a boundary piece.
pub fn boundary_measure(patch: &dyn Patch, piece: &BoundaryPiece, q: &QuadratureSpec) -> Estimate {
    integrate_piece_h(patch, piece, &Region::Whole, q, &|_| 1.0)
}

/// `∫_{∂S ∩ region} g σ^{n−2}_H` over all boundary faces of all patches.
pub fn integrate_boundary_h(
    surface: &Surface,
    region: &Region,
    q: &QuadratureSpec,
    g: &(dyn Fn(&BoundaryFrameData) -> f64 + Sync),
) -> Estimate {
    integrate_boundary(surface, region, q, &|b| if b.h_density > 0.0 { g(b) * b.h_density } else { 0.0 })
}

/// Boundary faces of all patches, integrated against the parameter measure.
pub fn integrate_boundary(
    surface: &Surface,
    region: &Region,
    q: &QuadratureSpec,
    weight: &(dyn Fn(&BoundaryFrameData) -> f64 + Sync),
) -> Estimate {
    sum_patches(surface, |p| {
        p.boundary_faces()
            .into_iter()
            .map(|f| integrate_piece(p.as_ref(), &BoundaryPiece::Face(f), region, q, weight))
            .sum()
    })
}

/// `σ^{n−2}_H(∂S ∩ region)`.
pub fn boundary_perimeter(surface: &Surface, region: &Region, q: &QuadratureSpec) -> Estimate {
    integrate_boundary_h(surface, region, q, &|_| 1.0)
}

/// A parameter cell flagged by [`characteristic_locus`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocusCell {
    pub index: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

fn horizontal_ratio(patch: &dyn Patch, u: &[f64]) -> Vec<f64> {
    let d = point_data(patch, u);
    let h = patch.algebra().h();
    if d.riemann_density > 0.0 {
        linalg::scaled(&d.coeffs[..h], 1.0 / d.riemann_density)
    } else {
        vec![0.0; h]
    }
}

/// Cells of a `res^m` grid that may contain characteristic points: the
/// vector `q = P_H(M^T N)/|M^T N|` is tested at the center and the corners,
/// padded by a Lipschitz bound of `q` across the cell.
pub fn characteristic_locus(patch: &dyn Patch, res: usize) -> Vec<LocusCell> {
    let (lo, hi) = patch.domain().param_box();
    let m = lo.len();
    let size: Vec<f64> = (0..m).map(|d| (hi[d] - lo[d]) / res as f64).collect();
    let total = res.pow(m as u32);
    let cells: Vec<Option<LocusCell>> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut rem = idx;
            let index: Vec<usize> = (0..m)
                .map(|_| {
                    let k = rem % res;
                    rem /= res;
                    k
                })
                .collect();
            let clo: Vec<f64> = (0..m).map(|d| lo[d] + size[d] * index[d] as f64).collect();
            let chi: Vec<f64> = (0..m).map(|d| clo[d] + size[d]).collect();
            let center: Vec<f64> = (0..m).map(|d| 0.5 * (clo[d] + chi[d])).collect();
            let qc = horizontal_ratio(patch, &center);
            let mut min_q = linalg::norm(&qc);
            for mask in 0..(1usize << m) {
                let corner: Vec<f64> = (0..m).map(|d| if mask >> d & 1 == 1 { chi[d] } else { clo[d] }).collect();
                min_q = min_q.min(linalg::norm(&horizontal_ratio(patch, &corner)));
            }
            // First-order bound on the variation of q over the cell, doubled for safety.
            let mut spread = 0.0;
            for d in 0..m {
                let step = 0.25 * size[d];
                let mut a = center.clone();
                a[d] += step;
                let mut b = center.clone();
                b[d] -= step;
                let diff = linalg::sub(&horizontal_ratio(patch, &a), &horizontal_ratio(patch, &b));
                spread += linalg::norm(&diff) / (2.0 * step) * 0.5 * size[d];
            }
            let pad = 2.0 * spread;
            let flagged = min_q < EPS_CHAR || linalg::norm(&qc) <= EPS_CHAR + pad;
            flagged.then_some(LocusCell { index, lo: clo, hi: chi })
        })
        .collect();
    cells.into_iter().flatten().collect()
}

/// `σ^{n−1}_H` of the flagged cells: the mass removed by excision.
pub fn locus_mass(patch: &dyn Patch, cells: &[LocusCell], q: &QuadratureSpec) -> Estimate {
    cells
        .iter()
        .map(|c| h_perimeter_patch(patch, &Region::SubBox { lo: c.lo.clone(), hi: c.hi.clone() }, q))
        .sum()
}

/// Fails if `u` is outside the patch domain.
pub fn check_inside(patch: &dyn Patch, u: &[f64]) -> Result<(), SurfaceError> {
    if patch.domain().contains(u) {
        Ok(())
    } else {
        Err(SurfaceError::OutsideDomain(u.to_vec()))
    }
}

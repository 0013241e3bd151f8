use serde::Serialize;

use super::patch::{GraphSurface, Patch};
use super::SurfaceError;
use crate::linalg::{self, dot, norm, scaled};
use crate::Algebra;

/// Relative threshold on `|P_Hν|` below which a point is characteristic.
pub const EPS_CHAR: f64 = 1e-8;
/// Step (in arc length along `S`) for differentiating tangential fields.
pub const FD_STEP: f64 = 1e-4;

/// Per-point geometry of a patch; frame quantities refer to `X_1..X_n`.
#[derive(Debug, Clone, Serialize)]
pub struct SurfacePointData {
    pub point: Vec<f64>,
    /// `⟨X_I, N⟩` for the area-weighted Euclidean normal `N`.
    pub coeffs: Vec<f64>,
    /// Unit Riemannian normal.
    pub nu: Vec<f64>,
    /// Unit horizontal normal (length `h`), absent at characteristic points.
    pub nu_h: Option<Vec<f64>>,
    pub p_h_nu: f64,
    /// `ϖ_α = ν_α/|P_Hν|` for the non-horizontal indices (zero if characteristic).
    pub varpi: Vec<f64>,
    /// `|ϖ_{H_i}|` for layers `i = 2..k`.
    pub varpi_layers: Vec<f64>,
    /// `σ^{n−1}_H` per unit parameter measure.
    pub sigma_density: f64,
    /// `σ^{n−1}_R` per unit parameter measure.
    pub riemann_density: f64,
    pub characteristic: bool,
}

impl SurfacePointData {
    pub fn varpi_norm(&self) -> f64 {
        norm(&self.varpi)
    }

    pub fn require_nu_h(&self) -> Result<&[f64], SurfaceError> {
        self.nu_h.as_deref().ok_or(SurfaceError::Characteristic)
    }
}

/// Geometry from a point and its area-weighted normal.
pub fn point_data_from_normal(alg: &Algebra, point: Vec<f64>, normal: &[f64]) -> SurfacePointData {
    let h = alg.h();
    let m = alg.frame_matrix(&point);
    let coeffs = alg.pair_frame(&m, normal);
    let riemann = norm(&coeffs);
    let sigma = norm(&coeffs[..h]);
    let nu = if riemann > 0.0 { scaled(&coeffs, 1.0 / riemann) } else { coeffs.clone() };
    let p_h_nu = if riemann > 0.0 { sigma / riemann } else { 0.0 };
    let characteristic = p_h_nu < EPS_CHAR;
    let (nu_h, varpi) = if characteristic {
        (None, vec![0.0; coeffs.len() - h])
    } else {
        (Some(scaled(&coeffs[..h], 1.0 / sigma)), coeffs[h..].iter().map(|c| c / sigma).collect())
    };
    let varpi_layers = (2..=alg.step())
        .map(|i| {
            let r = alg.layer(i);
            norm(&varpi[r.start - h..r.end - h])
        })
        .collect();
    SurfacePointData {
        point,
        coeffs,
        nu,
        nu_h,
        p_h_nu,
        varpi,
        varpi_layers,
        sigma_density: sigma,
        riemann_density: riemann,
        characteristic,
    }
}

pub fn point_data(patch: &dyn Patch, u: &[f64]) -> SurfacePointData {
    point_data_from_normal(patch.algebra(), patch.point(u), &patch.normal(u))
}

/// Checked per-point geometry.
pub fn surface_frame(patch: &dyn Patch, u: &[f64]) -> Result<SurfacePointData, SurfaceError> {
    if !patch.domain().contains(u) {
        return Err(SurfaceError::OutsideDomain(u.to_vec()));
    }
    Ok(point_data(patch, u))
}

/// Tangent vectors `∂Y/∂u_j` in frame coordinates.
pub fn frame_tangents(patch: &dyn Patch, u: &[f64], point: &[f64]) -> Vec<Vec<f64>> {
    let alg = patch.algebra();
    let m = alg.frame_matrix(point);
    patch.tangents(u).iter().map(|t| alg.to_frame(&m, t)).collect()
}

/// Unit horizontal tangent vectors spanning `HS` (frame coordinates, length `n`).
pub fn hs_basis(alg: &Algebra, nu_h: &[f64]) -> Vec<Vec<f64>> {
    let n = alg.n();
    linalg::complement_basis(nu_h)
        .into_iter()
        .map(|b| {
            let mut v = b;
            v.resize(n, 0.0);
            v
        })
        .collect()
}

/// Parameter displacement `du` whose image is the tangent vector `tau`.
fn param_direction(frame_tangents: &[Vec<f64>], tau: &[f64]) -> Vec<f64> {
    linalg::least_squares(frame_tangents, tau).unwrap_or_else(|| vec![0.0; frame_tangents.len()])
}

/// `Σ_τ ⟨D_τ F, τ⟩` over an orthonormal basis of `HS`, where `F` is a field of
/// frame coordinates given as a function of the parameter.
pub fn hs_divergence(
    patch: &dyn Patch,
    u: &[f64],
    data: &SurfacePointData,
    field: &dyn Fn(&[f64]) -> Vec<f64>,
) -> Result<f64, SurfaceError> {
    let alg = patch.algebra();
    let nu_h = data.require_nu_h()?;
    let ft = frame_tangents(patch, u, &data.point);
    let mut total = 0.0;
    for tau in hs_basis(alg, nu_h) {
        let du = param_direction(&ft, &tau);
        let plus: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + FD_STEP * b).collect();
        let minus: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a - FD_STEP * b).collect();
        let fp = field(&plus);
        let fm = field(&minus);
        total += tau.iter().zip(fp.iter().zip(&fm)).map(|(t, (p, m))| t * (p - m)).sum::<f64>() / (2.0 * FD_STEP);
    }
    Ok(total)
}

fn nu_h_at(patch: &dyn Patch, u: &[f64]) -> Vec<f64> {
    let d = point_data(patch, u);
    d.nu_h.unwrap_or_else(|| vec![0.0; patch.algebra().h()])
}

/// Horizontal mean curvature as the tangential trace `div_HS ν_H`; works for
/// any patch. Positive on cylinders with outward normal.
pub fn mean_curvature(patch: &dyn Patch, u: &[f64]) -> Result<f64, SurfaceError> {
    let data = point_data(patch, u);
    hs_divergence(patch, u, &data, &|v| nu_h_at(patch, v))
}

/// `H = Σ_{i∈H} X_i(ν_H^i)` with `ν_H` extended constantly along `e_α`.
pub fn horizontal_mean_curvature(s: &GraphSurface, u: &[f64]) -> Result<f64, SurfaceError> {
    if !s.domain.contains(u) {
        return Err(SurfaceError::OutsideDomain(u.to_vec()));
    }
    let zeta = s.domain.map(u);
    let alg = &s.alg;
    let h = alg.h();
    let nu_h_zeta = |z: &[f64]| {
        let d = point_data_from_normal(alg, s.embed(z), &s.normal_zeta(z));
        d.nu_h.ok_or(SurfaceError::Characteristic)
    };
    nu_h_zeta(&zeta)?;
    let m = alg.frame_matrix(&s.embed(&zeta));
    let mut z = zeta.clone();
    let mut total = 0.0;
    for j in 0..zeta.len() {
        let step = FD_STEP * zeta[j].abs().max(1.0);
        z[j] = zeta[j] + step;
        let p = nu_h_zeta(&z)?;
        z[j] = zeta[j] - step;
        let q = nu_h_zeta(&z)?;
        z[j] = zeta[j];
        let row = s.slot(j);
        for i in 0..h {
            total += m[row][i] * (p[i] - q[i]) / (2.0 * step);
        }
    }
    Ok(total)
}

/// `C_H ν_H = Σ_α ϖ_α C^α_H ν_H` (horizontal frame coordinates) and its norm.
pub fn ch_nu_from(alg: &Algebra, data: &SurfacePointData) -> Result<(Vec<f64>, f64), SurfaceError> {
    let nu_h = data.require_nu_h()?;
    let h = alg.h();
    let mut out = vec![0.0; h];
    for a in alg.second_layer() {
        let w = data.varpi[a - h];
        for (i, o) in out.iter_mut().enumerate() {
            for (j, v) in nu_h.iter().enumerate() {
                *o += w * alg.constant(a, i, j) * v;
            }
        }
    }
    let mag = norm(&out);
    Ok((out, mag))
}

pub fn ch_nu(patch: &dyn Patch, u: &[f64]) -> Result<(Vec<f64>, f64), SurfaceError> {
    ch_nu_from(patch.algebra(), &surface_frame(patch, u)?)
}

/// `C = Σ_α ‖C^α_H‖`, so that `|C_H ν_H| ≤ C |ϖ|`.
pub fn ch_constant(alg: &Algebra) -> f64 {
    alg.second_layer().map(|a| linalg::operator_norm(&alg.horizontal_block(a))).sum()
}

/// Orthogonal projection onto `T^iS = TS ∩ (H_1 ⊕ … ⊕ H_i)`.
pub fn project_filtration(alg: &Algebra, nu: &[f64], v: &[f64], layer: usize) -> Vec<f64> {
    let n = alg.n();
    if layer == 0 {
        return vec![0.0; n];
    }
    let end = alg.layer(layer).end;
    let mut w = v.to_vec();
    for x in w.iter_mut().skip(end) {
        *x = 0.0;
    }
    let l = norm(&nu[..end]);
    if l > 0.0 {
        let c = dot(&w[..end], &nu[..end]) / (l * l);
        for i in 0..end {
            w[i] -= c * nu[i];
        }
    }
    w
}

/// `P_{H_iS} v = P_{T^iS} v − P_{T^{i−1}S} v`.
pub fn project_layer_s(alg: &Algebra, nu: &[f64], v: &[f64], layer: usize) -> Vec<f64> {
    linalg::sub(&project_filtration(alg, nu, v, layer), &project_filtration(alg, nu, v, layer - 1))
}

/// Frame data of `∂S` at a boundary point.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryFrameData {
    pub surface: SurfacePointData,
    /// Outward unit normal of `∂S` inside `TS`.
    pub eta: Vec<f64>,
    pub eta_hs: Option<Vec<f64>>,
    pub p_hs_eta: f64,
    /// `|χ_{H_iS}| = |P_{H_iS}η|/|P_{HS}η|` for `i = 2..k` (zero where undefined).
    pub chi_layers: Vec<f64>,
    /// `σ^{n−2}_R` per unit boundary parameter measure.
    pub riemann_density: f64,
    /// `σ^{n−2}_H = |P_Hν|·|P_{HS}η|·σ^{n−2}_R` per unit boundary parameter measure.
    pub h_density: f64,
}

/// Boundary frame at `u`, for boundary tangent directions `dus` and an
/// outward parameter direction `out` (both in parameter space).
pub fn boundary_frame(patch: &dyn Patch, u: &[f64], dus: &[Vec<f64>], out: &[f64]) -> BoundaryFrameData {
    let alg = patch.algebra();
    let surface = point_data(patch, u);
    let ft = frame_tangents(patch, u, &surface.point);
    let push = |du: &[f64]| {
        let mut v = vec![0.0; alg.n()];
        for (t, c) in ft.iter().zip(du) {
            linalg::axpy(&mut v, *c, t);
        }
        v
    };
    let tb: Vec<Vec<f64>> = dus.iter().map(|d| push(d)).collect();
    let w = push(out);
    let eta_raw = linalg::sub(&w, &linalg::project_onto_span(&tb, &w));
    let l = norm(&eta_raw);
    let eta = if l > 0.0 { scaled(&eta_raw, 1.0 / l) } else { eta_raw };
    let riemann_density = linalg::gram_volume(&tb);
    let p_hs = project_layer_s(alg, &surface.nu, &eta, 1);
    let p_hs_eta = norm(&p_hs);
    let defined = p_hs_eta > EPS_CHAR && !surface.characteristic;
    let eta_hs = defined.then(|| scaled(&p_hs, 1.0 / p_hs_eta));
    let chi_layers = (2..=alg.step())
        .map(|i| if defined { norm(&project_layer_s(alg, &surface.nu, &eta, i)) / p_hs_eta } else { 0.0 })
        .collect();
    let h_density = surface.p_h_nu * p_hs_eta * riemann_density;
    BoundaryFrameData { surface, eta, eta_hs, p_hs_eta, chi_layers, riemann_density, h_density }
}

use rayon::prelude::*;
use serde::Serialize;

use super::fields::{circumradius, surface_samples};
use super::isoperimetric::{a_infinity, b_infinity};
use super::report::{InequalityReport, Verdict};
use super::LabError;
use crate::blowup::{blowup_density, boundary_distance, BlowupKind};
use crate::hypersurface::{
    boundary_perimeter, ch_nu_from, h_perimeter, mean_curvature, point_data, Region, Surface,
};
use crate::metrics::layer_constants;
use crate::quadrature::{Estimate, QuadratureSpec};
use crate::{Norm, NormKind};

/// A point of a surface: patch index and parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Anchor {
    pub patch: usize,
    pub u: Vec<f64>,
}

impl Anchor {
    pub fn new(patch: usize, u: &[f64]) -> Self {
        Self { patch, u: u.to_vec() }
    }

    pub(crate) fn resolve(&self, surface: &Surface) -> Result<Vec<f64>, LabError> {
        let p = surface
            .patches
            .get(self.patch)
            .ok_or_else(|| LabError::Precondition(format!("surface has no patch {}", self.patch)))?;
        crate::hypersurface::check_inside(p.as_ref(), &self.u)?;
        Ok(p.point(&self.u))
    }

    fn characteristic(&self, surface: &Surface) -> bool {
        point_data(surface.patches[self.patch].as_ref(), &self.u).characteristic
    }
}

/// Characteristic centres are covered for Korány norms only (which exist on
/// H-type groups, the Heisenberg groups included).
fn check_characteristic_scope(rho: &Norm) -> Result<(), LabError> {
    if rho.kind() == NormKind::Korany {
        Ok(())
    } else {
        Err(LabError::Capability("characteristic centres need a Heisenberg-type group with the Korány norm".into()))
    }
}

/// One row of a monotonicity scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityRow {
    pub t: f64,
    pub m: f64,
    pub minus_dm: f64,
    pub rhs: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityScan {
    /// `−m′ ≤ (A_∞ + B_∞)/t^{Q−1}` with `m = σ(S_t)/t^{Q−1}`.
    pub strong: Vec<InequalityReport>,
    /// `−d/dt[σ(S_t)/t^{h−1}] ≤ t^{1−h}{∫_{S_t}(|H| + |C_Hν_H|)σ + σ^{n−2}(∂S ∩ B_t)}`.
    pub weak: Vec<InequalityReport>,
    pub rows: Vec<MonotonicityRow>,
    pub warnings: Vec<String>,
}

struct Level {
    sigma: Estimate,
    a: Estimate,
    b: Estimate,
    weak_curv: Estimate,
    weak_bdry: Estimate,
}

/// Three-point derivative weights on a non-uniform stencil `t−hm, t, t+hp`.
fn derivative_weights(hm: f64, hp: f64) -> [f64; 3] {
    [-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp))]
}

/// Central differences of `f(t)/t^p`: value, `−d/dt`, its error bar, and a
/// second-order allowance `|f″| (h₋ + h₊)/2` for the grid.
fn differentiate(t: [f64; 3], vals: [Estimate; 3], p: i32) -> (f64, f64, f64, f64) {
    let m: Vec<f64> = (0..3).map(|k| vals[k].value / t[k].powi(p)).collect();
    let e: Vec<f64> = (0..3).map(|k| vals[k].error / t[k].powi(p)).collect();
    let (hm, hp) = (t[1] - t[0], t[2] - t[1]);
    let w = derivative_weights(hm, hp);
    let d = w[0] * m[0] + w[1] * m[1] + w[2] * m[2];
    let err = w[0].abs() * e[0] + w[1].abs() * e[1] + w[2].abs() * e[2];
    let second = 2.0 * (m[0] / (hm * (hm + hp)) - m[1] / (hm * hp) + m[2] / (hp * (hm + hp)));
    (m[1], -d, err, second.abs() * 0.5 * (hm + hp))
}

pub fn monotonicity_scan(
    surface: &Surface,
    anchor: &Anchor,
    rho: &Norm,
    t_grid: &[f64],
    q: &QuadratureSpec,
) -> Result<MonotonicityScan, LabError> {
    let x = anchor.resolve(surface)?;
    if anchor.characteristic(surface) {
        check_characteristic_scope(rho)?;
    }
    let alg = rho.algebra();
    let qd = alg.q() as i32;
    let h = alg.h() as i32;
    let c = layer_constants(rho).c;
    let reach = circumradius(surface, rho, &x);
    let mut warnings = Vec::new();
    let grid: Vec<f64> = t_grid.iter().cloned().filter(|&t| t > 0.0 && t < reach).collect();
    if grid.len() < t_grid.len() {
        warnings.push(format!("{} radii beyond the surface's reach {reach:.6} trimmed", t_grid.len() - grid.len()));
    }
    if grid.len() < 3 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::Precondition("the scan needs at least three increasing radii inside the surface".into()));
    }
    let levels: Vec<Level> = grid
        .par_iter()
        .map(|&t| {
            let ball = Region::ball(rho, &x, t);
            let dist = |y: &[f64]| rho.dist(&x, y);
            Level {
                sigma: h_perimeter(surface, &ball, q),
                a: a_infinity(surface, &ball, &c, &dist, q),
                b: b_infinity(surface, &ball, &c, &dist, q),
                weak_curv: crate::hypersurface::sum_patches(surface, |p| {
                    let p = p.as_ref();
                    crate::hypersurface::integrate_patch_h(p, &ball, q, &|d, u| {
                        mean_curvature(p, u).unwrap_or(0.0).abs() + ch_nu_from(p.algebra(), d).map_or(0.0, |(_, m)| m)
                    })
                }),
                weak_bdry: boundary_perimeter(surface, &ball, q),
            }
        })
        .collect();
    let mut strong = Vec::new();
    let mut weak = Vec::new();
    let mut rows = Vec::new();
    for i in 1..grid.len() - 1 {
        let t3 = [grid[i - 1], grid[i], grid[i + 1]];
        let sig = [levels[i - 1].sigma, levels[i].sigma, levels[i + 1].sigma];
        let t = grid[i];
        let lv = &levels[i];

        let (m, minus_dm, err, allowance) = differentiate(t3, sig, qd - 1);
        let lhs = Estimate { value: minus_dm, error: err, ..sig[1] };
        let rhs = (lv.a + lv.b).scale(t.powi(1 - qd));
        let r = InequalityReport::at_most("monotonicity", &surface.name, lhs, rhs, allowance)
            .with_norm(rho)
            .term("m", Estimate { value: m, ..sig[1].scale(t.powi(1 - qd)) })
            .term("a-infinity", lv.a)
            .term("b-infinity", lv.b)
            .constant("t", t)
            .constant("Q", qd as f64);
        rows.push(MonotonicityRow { t, m, minus_dm, rhs: rhs.value, verdict: r.verdict });
        strong.push(r);

        let (_, minus_dw, werr, wallow) = differentiate(t3, sig, h - 1);
        let lhs = Estimate { value: minus_dw, error: werr, ..sig[1] };
        let rhs = (lv.weak_curv + lv.weak_bdry).scale(t.powi(1 - h));
        weak.push(
            InequalityReport::at_most("weak-monotonicity", &surface.name, lhs, rhs, wallow)
                .with_norm(rho)
                .term("curvature", lv.weak_curv)
                .term("boundary", lv.weak_bdry)
                .constant("t", t)
                .constant("h", h as f64),
        );
    }
    Ok(MonotonicityScan { strong, weak, rows, warnings })
}

/// Relative accuracy of `σ(S_t)` over a clipped ball; the quadrature error
/// estimate underrates the cells cut by the sphere `ρ = t`, where the
/// integrand has a square-root edge. Minimal planes attain equality.
pub const BALL_REL_TOL: f64 = 1e-6;

/// Sample points of `S ∩ B_ρ(x, r)`: the global grid plus a fine grid near the anchor.
pub(crate) fn ball_points(surface: &Surface, anchor: &Anchor, x: &[f64], rho: &Norm, r: f64) -> Vec<(usize, Vec<f64>)> {
    let mut pts: Vec<(usize, Vec<f64>)> =
        surface_samples(surface, 65).into_iter().filter(|s| rho.dist(x, &s.point) <= r).map(|s| (s.patch, s.u)).collect();
    let p = surface.patches[anchor.patch].as_ref();
    let (lo, hi) = p.domain().param_box();
    let m = lo.len();
    let res = 21usize;
    for idx in 0..res.pow(m as u32) {
        let mut rem = idx;
        let u: Vec<f64> = (0..m)
            .map(|d| {
                let k = rem % res;
                rem /= res;
                let span = 0.05 * (hi[d] - lo[d]);
                (anchor.u[d] + span * (2.0 * k as f64 / (res - 1) as f64 - 1.0)).clamp(lo[d], hi[d])
            })
            .collect();
        if rho.dist(x, &p.point(&u)) <= r {
            pts.push((anchor.patch, u));
        }
    }
    pts
}

/// `σ(S_t) ≥ κ t^{Q−1} exp(−H⁰(t + Σ_i c_i ε_i t^i))` on a radius grid, with
/// `H⁰ = sup|H|` and `ε_i = sup|ϖ_{H_i}|` sampled on the largest ball; at a
/// characteristic centre the exponent is `−t H⁰ (1 + Σ ε_i)`.
pub fn asymptotic_check(
    surface: &Surface,
    anchor: &Anchor,
    rho: &Norm,
    t_grid: &[f64],
    q: &QuadratureSpec,
) -> Result<Vec<InequalityReport>, LabError> {
    let x = anchor.resolve(surface)?;
    let graph = surface.patches[anchor.patch]
        .as_graph()
        .ok_or_else(|| LabError::Capability("the blow-up density needs a graph patch".into()))?;
    let characteristic = anchor.characteristic(surface);
    if characteristic {
        check_characteristic_scope(rho)?;
    }
    let blow = blowup_density(graph, &anchor.u, rho, q)?;
    let kappa = match (blow.kind, blow.kappa) {
        (BlowupKind::Degenerate, _) | (_, None) => {
            return Err(LabError::Inapplicable("the blow-up at the centre is degenerate".into()))
        }
        (_, Some(k)) => k,
    };
    let reach = boundary_distance(surface, &x, rho);
    let grid: Vec<f64> = t_grid.iter().cloned().filter(|&t| t > 0.0 && t < reach).collect();
    let trimmed = t_grid.len() - grid.len();
    let Some(&t_max) = grid.iter().max_by(|a, b| a.total_cmp(b)) else {
        return Err(LabError::Precondition("every radius reaches the boundary".into()));
    };
    let alg = rho.algebra();
    let qd = alg.q() as i32;
    let c = layer_constants(rho).c;
    let mut h0: f64 = 0.0;
    let mut eps = vec![0.0f64; c.len()];
    for (pi, u) in ball_points(surface, anchor, &x, rho, t_max) {
        let p = surface.patches[pi].as_ref();
        let d = point_data(p, &u);
        if d.characteristic {
            continue;
        }
        h0 = h0.max(mean_curvature(p, &u).unwrap_or(0.0).abs());
        for (e, v) in eps.iter_mut().zip(&d.varpi_layers) {
            *e = e.max(*v);
        }
    }
    let reports = grid
        .par_iter()
        .map(|&t| {
            let exponent = if h0 == 0.0 {
                0.0
            } else if characteristic {
                -t * h0 * (1.0 + eps.iter().sum::<f64>())
            } else {
                -h0 * (t + c.iter().zip(&eps).enumerate().map(|(j, (ci, e))| ci * e * t.powi(j as i32 + 2)).sum::<f64>())
            };
            let factor = t.powi(qd - 1) * exponent.exp();
            let lhs = kappa.scale(factor);
            let rhs = h_perimeter(surface, &Region::ball(rho, &x, t), q);
            let tag = if characteristic { "asymptotic-characteristic" } else { "asymptotic" };
            let tol = BALL_REL_TOL * rhs.value.abs();
            let mut r = InequalityReport::at_most(tag, &surface.name, lhs, rhs, tol)
                .with_norm(rho)
                .term("kappa", kappa)
                .constant("t", t)
                .constant("H0", h0)
                .constant("Q", qd as f64);
            for (j, e) in eps.iter().enumerate() {
                r = r.constant(&format!("eps{}", j + 2), *e);
            }
            if trimmed > 0 {
                r.warn(format!("{trimmed} radii reaching the boundary trimmed"));
            }
            r
        })
        .collect();
    Ok(reports)
}

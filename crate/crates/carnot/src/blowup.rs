//! Blow-up densities of the horizontal perimeter.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::hypersurface::{
    h_perimeter, h_perimeter_patch, surface_frame, Domain, GraphSurface, Height, Patch, Polynomial, Region, Surface,
    SurfaceError,
};
use crate::metrics::metric_factor_bounds;
use crate::quadrature::{Estimate, QuadratureSpec};
use crate::Norm;

/// Step of the finite-difference Taylor stencils.
pub const TAYLOR_STEP: f64 = 1e-3;
/// Vanishing threshold for exact Taylor coefficients.
pub const TAYLOR_TOL_EXACT: f64 = 1e-9;
/// Vanishing threshold for differenced Taylor coefficients (stencil roundoff is `~ε/h^i`).
pub const TAYLOR_TOL_FD: f64 = 1e-5;
/// Relative padding of the limit-surface domain around the unit ball's box.
const BOX_PAD: f64 = 1.02;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlowupError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("parameter {0:?} is on the patch boundary")]
    OnBoundary(Vec<f64>),
    #[error("the ball of radius {radius} around the point leaves the surface")]
    BallExits { radius: f64 },
    #[error("capability: {0}")]
    Capability(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlowupKind {
    CaseA,
    CaseB,
    Degenerate,
}

/// One mixed partial `∂^β ψ(0)` of the height after translating `x` to `0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorTerm {
    /// Multi-index over the graph variables.
    pub beta: Vec<u32>,
    /// `Σ β_j ord(j)`.
    pub weighted_order: usize,
    pub derivative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorData {
    /// Zero-based graph direction.
    pub alpha: usize,
    /// Layer of `α`.
    pub order: usize,
    /// Whether the coefficients are exact (polynomial heights) or differenced.
    pub exact: bool,
    pub threshold: f64,
    pub terms: Vec<TaylorTerm>,
    /// Terms of weighted order `< i` that do not vanish.
    pub obstructions: Vec<Vec<u32>>,
}

impl TaylorData {
    pub fn admissible(&self) -> bool {
        self.obstructions.is_empty()
    }

    /// `ψ̃ = Σ_{weighted order = i} ∂^βψ(0)/β! ζ^β`.
    pub fn limit_polynomial(&self) -> Polynomial {
        Polynomial::new(
            self.terms
                .iter()
                .filter(|t| t.weighted_order == self.order && t.derivative.abs() >= self.threshold)
                .map(|t| (t.beta.clone(), t.derivative / multi_factorial(&t.beta)))
                .collect(),
        )
    }
}

#[derive(Debug, Clone)]
pub struct BlowupResult {
    pub kind: BlowupKind,
    /// Density; absent when degenerate.
    pub kappa: Option<Estimate>,
    /// `I(ν_H(x))` or `Ψ_∞`, centred at the identity.
    pub limit_surface: Option<GraphSurface>,
    pub taylor: Option<TaylorData>,
    pub point: Vec<f64>,
}

impl BlowupResult {
    /// The limit of the density ratio: `κ`, or `0` when degenerate.
    pub fn kappa_limit(&self) -> f64 {
        self.kappa.map_or(0.0, |k| k.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub radius: f64,
    pub measure: Estimate,
    /// `σ(S ∩ B_ρ(x,R)) / R^{Q−1}`.
    pub ratio: f64,
}

fn multi_factorial(beta: &[u32]) -> f64 {
    beta.iter().map(|&b| (1..=b).product::<u32>() as f64).product()
}

/// Multi-indices with `1 ≤ |β| ≤ max_len` and weighted order `≤ max_weight`.
fn multi_indices(weights: &[usize], max_weight: usize) -> Vec<Vec<u32>> {
    fn rec(weights: &[usize], j: usize, left: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if j == weights.len() {
            if cur.iter().any(|&b| b > 0) {
                out.push(cur.clone());
            }
            return;
        }
        let mut b = 0;
        while b as usize * weights[j] <= left {
            cur.push(b);
            rec(weights, j + 1, left - b as usize * weights[j], cur, out);
            cur.pop();
            b += 1;
        }
    }
    let mut out = Vec::new();
    rec(weights, 0, max_weight, &mut Vec::new(), &mut out);
    out
}

/// One-dimensional central stencil `(offset, weight)` for `d^k/dz^k`, times `h^k`.
fn stencil(k: u32) -> &'static [(i32, f64)] {
    match k {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => unreachable!("derivative orders above the maximal step"),
    }
}

/// `∂^β f(0)` by a tensor product of central stencils.
fn fd_derivative(f: &dyn Fn(&[f64]) -> f64, beta: &[u32], h: f64) -> f64 {
    let m = beta.len();
    let stencils: Vec<&[(i32, f64)]> = beta.iter().map(|&b| stencil(b)).collect();
    let mut total = 0.0;
    let mut idx = vec![0usize; m];
    let mut z = vec![0.0; m];
    loop {
        let mut w = 1.0;
        for j in 0..m {
            let (o, c) = stencils[j][idx[j]];
            z[j] = o as f64 * h;
            w *= c;
        }
        total += w * f(&z);
        let mut j = 0;
        loop {
            if j == m {
                let order: u32 = beta.iter().sum();
                return total / h.powi(order as i32);
            }
            idx[j] += 1;
            if idx[j] < stencils[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

fn exact_derivative(p: &Polynomial, beta: &[u32]) -> f64 {
    p.terms.iter().filter(|(e, _)| e.as_slice() == beta).map(|(_, c)| c).sum::<f64>() * multi_factorial(beta)
}

fn is_central(s: &GraphSurface) -> bool {
    let n = s.alg.n();
    (0..n).all(|r| (0..n).all(|j| s.alg.constant(r, s.alpha, j) == 0.0))
}

/// Taylor data of the height of `x^{-1}•S` at `0`, where `x = S(u)`.
///
/// A translated presentation exists when `e_α` is central: the non-`α`
/// coordinates of `x•y` then do not involve `y_α`.
pub fn taylor_data(s: &GraphSurface, u: &[f64]) -> Result<TaylorData, BlowupError> {
    let alg = s.alg.clone();
    let order = alg.ord(s.alpha);
    if order < 2 {
        return Err(BlowupError::Capability("the graph direction is horizontal".into()));
    }
    let m = alg.n() - 1;
    let weights: Vec<usize> = (0..m).map(|j| alg.ord(s.slot(j))).collect();
    let zeta0 = s.domain.map(u);
    let x = s.embed(&zeta0);
    let at_origin = x.iter().all(|&c| c == 0.0);
    let betas = multi_indices(&weights, order);

    let (exact, derivs): (bool, Vec<f64>) = match (s.height.as_polynomial(), at_origin) {
        (Some(p), true) => (true, betas.iter().map(|b| exact_derivative(p, b)).collect()),
        _ => {
            if !at_origin && !is_central(s) {
                return Err(BlowupError::Capability(
                    "Taylor data away from the identity needs a central graph direction".into(),
                ));
            }
            let sc = s.clone();
            let xs = x.clone();
            let shifted = move |zp: &[f64]| {
                let mut yp = zp.to_vec();
                yp.insert(sc.alpha, 0.0);
                let base = sc.alg.mul(&xs, &yp);
                sc.height.value(&sc.drop_alpha(&base)) - base[sc.alpha]
            };
            (false, betas.iter().map(|b| fd_derivative(&shifted, b, TAYLOR_STEP)).collect())
        }
    };
    let threshold = if exact { TAYLOR_TOL_EXACT } else { TAYLOR_TOL_FD };
    let terms: Vec<TaylorTerm> = betas
        .into_iter()
        .zip(derivs)
        .map(|(beta, derivative)| {
            let weighted_order = beta.iter().zip(&weights).map(|(&b, &w)| b as usize * w).sum();
            TaylorTerm { beta, weighted_order, derivative }
        })
        .collect();
    let obstructions = terms
        .iter()
        .filter(|t| t.weighted_order < order && t.derivative.abs() >= threshold)
        .map(|t| t.beta.clone())
        .collect();
    Ok(TaylorData { alpha: s.alpha, order, exact, threshold, terms, obstructions })
}

/// Graph over the box `Box(0, 1.02·R2)` projected on `e_α^⊥`, which contains
/// the projection of `B_ρ(0,1)`.
fn limit_graph(rho: &Norm, alpha: usize, height: Polynomial) -> GraphSurface {
    let alg = rho.algebra().clone();
    let r2 = metric_factor_bounds(rho).r2 * BOX_PAD;
    let hi: Vec<f64> = (0..alg.n()).filter(|&i| i != alpha).map(|i| r2.powi(alg.ord(i) as i32)).collect();
    let lo = hi.iter().map(|v| -v).collect();
    GraphSurface::new(alg, alpha, Domain::Box { lo, hi }, Height::Poly(height))
}

fn check_interior(patch: &dyn Patch, u: &[f64]) -> Result<(), BlowupError> {
    if !patch.domain().contains(u) {
        return Err(SurfaceError::OutsideDomain(u.to_vec()).into());
    }
    let (lo, hi) = patch.domain().param_box();
    let on_face = patch.boundary_faces().iter().any(|f| {
        let edge = match f.side {
            crate::hypersurface::Side::Lo => lo[f.axis],
            crate::hypersurface::Side::Hi => hi[f.axis],
        };
        (u[f.axis] - edge).abs() <= 1e-12 * (1.0 + edge.abs())
    });
    if on_face {
        Err(BlowupError::OnBoundary(u.to_vec()))
    } else {
        Ok(())
    }
}

/// `κ_ρ` at `x = S(u)`: the vertical tangent hyperplane at non-characteristic
/// points, the polynomial limit graph at admissible characteristic points.
pub fn blowup_density(s: &GraphSurface, u: &[f64], rho: &Norm, q: &QuadratureSpec) -> Result<BlowupResult, BlowupError> {
    check_interior(s, u)?;
    let data = surface_frame(s, u)?;
    let origin = vec![0.0; s.alg.n()];
    let ball = Region::ball(rho, &origin, 1.0);
    if let Some(nu_h) = &data.nu_h {
        let a = (0..nu_h.len()).max_by(|&i, &j| nu_h[i].abs().total_cmp(&nu_h[j].abs())).unwrap_or(0);
        let coef: Vec<f64> = (0..s.alg.n() - 1)
            .map(|j| {
                let slot = if j < a { j } else { j + 1 };
                if slot < nu_h.len() {
                    -nu_h[slot] / nu_h[a]
                } else {
                    0.0
                }
            })
            .collect();
        let plane = limit_graph(rho, a, Polynomial::linear(&coef));
        let kappa = h_perimeter_patch(&plane, &ball, q);
        return Ok(BlowupResult {
            kind: BlowupKind::CaseA,
            kappa: Some(kappa),
            limit_surface: Some(plane),
            taylor: None,
            point: data.point,
        });
    }
    let taylor = taylor_data(s, u)?;
    if !taylor.admissible() {
        return Ok(BlowupResult {
            kind: BlowupKind::Degenerate,
            kappa: None,
            limit_surface: None,
            taylor: Some(taylor),
            point: data.point,
        });
    }
    let limit = limit_graph(rho, s.alpha, taylor.limit_polynomial());
    let kappa = h_perimeter_patch(&limit, &ball, q);
    Ok(BlowupResult {
        kind: BlowupKind::CaseB,
        kappa: Some(kappa),
        limit_surface: Some(limit),
        taylor: Some(taylor),
        point: data.point,
    })
}

/// Samples per face axis used to certify that a ball stays inside the surface.
const FACE_SAMPLES: usize = 129;

/// `ρ`-distance from `x` to the boundary faces of `S`, on a sample grid.
pub(crate) fn boundary_distance(surface: &Surface, x: &[f64], rho: &Norm) -> f64 {
    let mut best = f64::INFINITY;
    for p in &surface.patches {
        let (lo, hi) = p.domain().param_box();
        let m = lo.len();
        for f in p.boundary_faces() {
            let free: Vec<usize> = (0..m).filter(|&d| d != f.axis).collect();
            let total = FACE_SAMPLES.pow(free.len() as u32);
            for idx in 0..total {
                let mut u = vec![0.0; m];
                u[f.axis] = match f.side {
                    crate::hypersurface::Side::Lo => lo[f.axis],
                    crate::hypersurface::Side::Hi => hi[f.axis],
                };
                let mut rem = idx;
                for &d in &free {
                    let k = rem % FACE_SAMPLES;
                    rem /= FACE_SAMPLES;
                    u[d] = lo[d] + (hi[d] - lo[d]) * k as f64 / (FACE_SAMPLES - 1) as f64;
                }
                best = best.min(rho.dist(x, &p.point(&u)));
            }
        }
    }
    best
}

/// `σ^{n−1}_H(S ∩ B_ρ(x,R)) / R^{Q−1}` for each radius.
pub fn blowup_scan(
    surface: &Surface,
    x: &[f64],
    rho: &Norm,
    radii: &[f64],
    q: &QuadratureSpec,
) -> Result<Vec<ScanPoint>, BlowupError> {
    let reach = boundary_distance(surface, x, rho);
    if let Some(&r) = radii.iter().find(|&&r| r >= reach) {
        return Err(BlowupError::BallExits { radius: r });
    }
    let qm1 = (rho.algebra().q() - 1) as i32;
    Ok(radii
        .par_iter()
        .map(|&radius| {
            let measure = h_perimeter(surface, &Region::ball(rho, x, radius), q);
            ScanPoint { radius, measure, ratio: measure.value / radius.powi(qm1) }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_indices_respect_weights() {
        let b = multi_indices(&[1, 1], 2);
        assert_eq!(b.len(), 5);
        let e = multi_indices(&[1, 1, 2], 3);
        assert!(e.contains(&vec![1, 0, 1]) && e.contains(&vec![3, 0, 0]) && !e.contains(&vec![0, 0, 2]));
    }

    #[test]
    fn stencils_differentiate_monomials() {
        let f = |z: &[f64]| z[0].powi(3) * z[1] + 2.0 * z[1] * z[1];
        assert!((fd_derivative(&f, &[3, 1], 1e-2) - 6.0).abs() < 1e-8);
        assert!((fd_derivative(&f, &[0, 2], 1e-2) - 4.0).abs() < 1e-8);
        assert!(fd_derivative(&f, &[1, 0], 1e-2).abs() < 1e-12);
    }
}

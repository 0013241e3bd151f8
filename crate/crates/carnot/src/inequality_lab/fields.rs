use std::sync::Arc;

use rayon::prelude::*;

use crate::hypersurface::{
    characteristic_locus, frame_tangents, integrate_patch_h, locus_mass, project_layer_s, LocusCell, Patch, Region,
    Surface, SurfacePointData, FD_STEP,
};
use crate::linalg::{self, dot};
use crate::quadrature::{Estimate, QuadratureSpec};
use crate::{Algebra, MetricError, Norm, Point};

/// A scalar function on the group, evaluated at coordinates.
pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// A horizontal vector field: point ↦ components along `X_1..X_h`.
pub type HorizontalField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// The generator `Z_x` of the dilations centred at `x`:
/// `Z_x(y) = d/dt (x • δ_t(x⁻¹ • y))` at `t = 1`.
#[derive(Debug, Clone)]
pub struct DilationGenerator {
    alg: Arc<Algebra>,
    center: Point,
}

impl DilationGenerator {
    pub fn new(alg: Arc<Algebra>, center: &[f64]) -> Self {
        Self { alg, center: Point::new(center.to_vec()) }
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    /// Components along the left-invariant frame at `y`. Left translation
    /// preserves frame components, so these are those of `Z_0` at `x⁻¹ • y`.
    pub fn frame(&self, y: &[f64]) -> Vec<f64> {
        let z = self.alg.left_quotient(&self.center.coords, y);
        let z0: Vec<f64> = z.iter().enumerate().map(|(i, v)| self.alg.ord(i) as f64 * v).collect();
        self.alg.to_frame(&self.alg.frame_matrix(&z), &z0)
    }

    /// Coordinate components at `y`.
    pub fn coords(&self, y: &[f64]) -> Vec<f64> {
        self.alg.from_frame(&self.alg.frame_matrix(y), &self.frame(y))
    }

    /// `⟨Z_x(y), grad ρ_x(y)⟩`, which equals `ρ_x(y)` by homogeneity.
    pub fn radial_pairing(&self, rho: &Norm, y: &[f64]) -> Result<f64, MetricError> {
        let z = self.alg.left_quotient(&self.center.coords, y);
        Ok(dot(&self.frame(y), &rho.grad_frame(&z)?))
    }
}

/// `grad_{TS} f` at `u` in frame coordinates, from central differences of
/// `f ∘ Y` along the parameter axes.
pub fn tangential_gradient(
    patch: &dyn Patch,
    u: &[f64],
    data: &SurfacePointData,
    f: &dyn Fn(&[f64]) -> f64,
) -> Vec<f64> {
    let ft = frame_tangents(patch, u, &data.point);
    let m = u.len();
    let mut w = u.to_vec();
    let df: Vec<f64> = (0..m)
        .map(|k| {
            w[k] = u[k] + FD_STEP;
            let p = f(&patch.point(&w));
            w[k] = u[k] - FD_STEP;
            let q = f(&patch.point(&w));
            w[k] = u[k];
            (p - q) / (2.0 * FD_STEP)
        })
        .collect();
    let gram: Vec<Vec<f64>> = ft.iter().map(|a| ft.iter().map(|b| dot(a, b)).collect()).collect();
    let mut g = vec![0.0; patch.algebra().n()];
    if let Some(a) = linalg::solve(&gram, &df) {
        for (t, c) in ft.iter().zip(&a) {
            linalg::axpy(&mut g, *c, t);
        }
    }
    g
}

/// `|grad_{H_iS} f|` for `i = 1..k` from a tangential gradient.
pub fn layer_gradient_norms(alg: &Algebra, data: &SurfacePointData, grad_ts: &[f64]) -> Vec<f64> {
    (1..=alg.step()).map(|i| linalg::norm(&project_layer_s(alg, &data.nu, grad_ts, i))).collect()
}

/// `1 + Σ_{i≥2} i c_i r^{i−1} a_i`, the weight of the higher-layer terms;
/// `a` lists layers `2..k`.
pub fn layer_weight(c: &[f64], r: f64, a: &[f64]) -> f64 {
    1.0 + a.iter().enumerate().map(|(j, v)| (j + 2) as f64 * c[j] * r.powi(j as i32 + 1) * v).sum::<f64>()
}

/// A point of a surface on a sampling grid.
#[derive(Debug, Clone)]
pub(crate) struct Sample {
    pub patch: usize,
    pub u: Vec<f64>,
    pub point: Vec<f64>,
}

/// `res` points per parameter axis on every patch, boundaries included.
pub(crate) fn surface_samples(surface: &Surface, res: usize) -> Vec<Sample> {
    let mut out = Vec::new();
    for (pi, p) in surface.patches.iter().enumerate() {
        let (lo, hi) = p.domain().param_box();
        let m = lo.len();
        for idx in 0..res.pow(m as u32) {
            let mut rem = idx;
            let u: Vec<f64> = (0..m)
                .map(|d| {
                    let k = rem % res;
                    rem /= res;
                    lo[d] + (hi[d] - lo[d]) * k as f64 / (res - 1) as f64
                })
                .collect();
            let point = p.point(&u);
            out.push(Sample { patch: pi, u, point });
        }
    }
    out
}

/// Pattern search for a local maximum of `f ∘ Y` inside the parameter box.
fn climb(patch: &dyn Patch, u0: &[f64], step0: f64, f: &dyn Fn(&[f64]) -> f64) -> f64 {
    let (lo, hi) = patch.domain().param_box();
    let mut u = u0.to_vec();
    let mut best = f(&patch.point(&u));
    let mut step = step0;
    for _ in 0..60 {
        let mut moved = false;
        for d in 0..u.len() {
            for s in [1.0, -1.0] {
                let mut v = u.clone();
                v[d] = (u[d] + s * step * (hi[d] - lo[d])).clamp(lo[d], hi[d]);
                let val = f(&patch.point(&v));
                if val > best {
                    best = val;
                    u = v;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    best
}

const PROBE_RES: usize = 33;

/// `max_{y∈S} ρ(x⁻¹ • y)`: grid maximum refined by pattern search.
pub fn circumradius(surface: &Surface, rho: &Norm, x: &[f64]) -> f64 {
    let samples = surface_samples(surface, PROBE_RES);
    let f = |y: &[f64]| rho.dist(x, y);
    let Some(best) = samples.iter().max_by(|a, b| f(&a.point).total_cmp(&f(&b.point))) else {
        return 0.0;
    };
    climb(surface.patches[best.patch].as_ref(), &best.u, 1.0 / PROBE_RES as f64, &f)
}

/// `diam_ρ(S)` over the part of `S` where `keep` holds: sampled pairs, then the
/// best pair refined by alternating pattern searches.
pub fn diameter_where(surface: &Surface, rho: &Norm, keep: &dyn Fn(&[f64]) -> bool) -> f64 {
    let samples: Vec<Sample> = surface_samples(surface, 17).into_iter().filter(|s| keep(&s.point)).collect();
    if samples.len() < 2 {
        return 0.0;
    }
    let mut best = (0.0, 0, 0);
    for (i, a) in samples.iter().enumerate() {
        for (j, b) in samples.iter().enumerate().skip(i + 1) {
            let d = rho.dist(&a.point, &b.point);
            if d > best.0 {
                best = (d, i, j);
            }
        }
    }
    let (mut d, i, j) = best;
    let (mut a, mut b) = (samples[i].clone(), samples[j].clone());
    for _ in 0..3 {
        let pa = a.point.clone();
        let guarded = |y: &[f64]| if keep(y) { rho.dist(&pa, y) } else { f64::NEG_INFINITY };
        d = d.max(climb(surface.patches[b.patch].as_ref(), &b.u, 1.0 / 17.0, &guarded));
        let pb = b.point.clone();
        let guarded = |y: &[f64]| if keep(y) { rho.dist(&pb, y) } else { f64::NEG_INFINITY };
        d = d.max(climb(surface.patches[a.patch].as_ref(), &a.u, 1.0 / 17.0, &guarded));
        std::mem::swap(&mut a, &mut b);
    }
    d
}

pub fn diameter(surface: &Surface, rho: &Norm) -> f64 {
    diameter_where(surface, rho, &|_| true)
}

/// Cells per axis for the characteristic locus: halved in size with every
/// refinement step of the quadrature.
fn locus_resolution(patch: &dyn Patch, q: &QuadratureSpec) -> usize {
    let (base, cap) = if patch.domain().dim() <= 2 { (32, 512) } else { (12, 48) };
    let steps = q.base_order.saturating_sub(QuadratureSpec::default().base_order).min(8) as u32;
    (base << steps).min(cap)
}

/// Characteristic cells flagged on every patch; integrals through
/// [`Excision::integrate_h`] leave them out.
#[derive(Debug, Clone)]
pub(crate) struct Excision {
    cells: Vec<Vec<LocusCell>>,
    /// `σ^{n−1}_H` of the excised cells.
    pub mass: Estimate,
}

impl Excision {
    pub fn new(surface: &Surface, q: &QuadratureSpec) -> Self {
        let cells: Vec<Vec<LocusCell>> =
            surface.patches.iter().map(|p| characteristic_locus(p.as_ref(), locus_resolution(p.as_ref(), q))).collect();
        let mass = surface.patches.iter().zip(&cells).map(|(p, c)| locus_mass(p.as_ref(), c, q)).sum();
        Self { cells, mass }
    }

    pub fn count(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }

    /// Error-bar increment: the excised mass with its own error.
    pub fn allowance(&self) -> f64 {
        self.mass.value + self.mass.error
    }

    pub fn warning(&self) -> Option<String> {
        (self.count() > 0).then(|| {
            format!(
                "{} characteristic cells excised; their H-perimeter {:.3e} is added to the error bar",
                self.count(),
                self.mass.value
            )
        })
    }

    /// `∫ g σ^{n−1}_H` over `S` minus the flagged cells.
    pub fn integrate_h(
        &self,
        surface: &Surface,
        q: &QuadratureSpec,
        g: &(dyn Fn(&dyn Patch, &SurfacePointData, &[f64]) -> f64 + Sync),
    ) -> Estimate {
        let parts: Vec<Estimate> = surface
            .patches
            .par_iter()
            .zip(&self.cells)
            .map(|(p, cells)| {
                let p = p.as_ref();
                let f = |d: &SurfacePointData, u: &[f64]| g(p, d, u);
                let whole = integrate_patch_h(p, &Region::Whole, q, &f);
                let cut: Estimate = cells
                    .iter()
                    .map(|c| integrate_patch_h(p, &Region::SubBox { lo: c.lo.clone(), hi: c.hi.clone() }, q, &f))
                    .sum();
                Estimate { value: whole.value - cut.value, ..whole + cut }
            })
            .collect();
        parts.into_iter().sum()
    }
}

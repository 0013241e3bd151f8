use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use super::fields::{layer_gradient_norms, tangential_gradient};
use super::report::InequalityReport;
use super::LabError;
use crate::hypersurface::{boundary_frame, integrate_patch_h, BoundaryFrameData, Patch, Region, Surface, FD_STEP};
use crate::quadrature::{gauss_legendre, Estimate, Integrator, QuadratureSpec};

/// Relative tolerance for identities closing up to quadrature and differencing.
pub const IDENTITY_REL_TOL: f64 = 1e-3;
/// Absolute floor of identity tolerances.
pub const IDENTITY_ABS_TOL: f64 = 1e-9;

/// Grid resolutions tried in turn when a level set cannot be traced.
const LEVEL_GRIDS: [usize; 3] = [64, 128, 256];
/// Gauss points per contour segment.
const SEGMENT_ORDER: usize = 6;

/// Level sets `{φ ∘ Y = s}` of a function on a patch with a two-dimensional
/// parameter box, traced by marching squares.
pub struct LevelSets<'a> {
    patch: &'a dyn Patch,
    phi: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    lo: Vec<f64>,
    hi: Vec<f64>,
    grids: Vec<(usize, Vec<f64>)>,
    gauss: (Vec<f64>, Vec<f64>),
}

/// A segment of a traced level line, between two crossings of cell edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl<'a> LevelSets<'a> {
    pub fn new(patch: &'a dyn Patch, phi: &'a (dyn Fn(&[f64]) -> f64 + Sync)) -> Result<Self, LabError> {
        let (lo, hi) = patch.domain().param_box();
        if lo.len() != 2 {
            return Err(LabError::Capability(format!(
                "level sets are traced on two-dimensional parameter domains only (got {})",
                lo.len()
            )));
        }
        let mut ls = Self { patch, phi, lo, hi, grids: Vec::new(), gauss: gauss_legendre(SEGMENT_ORDER) };
        ls.grids = LEVEL_GRIDS
            .iter()
            .map(|&res| {
                let vals = (0..(res + 1) * (res + 1)).map(|k| ls.value(&ls.node(res, k % (res + 1), k / (res + 1)))).collect();
                (res, vals)
            })
            .collect();
        Ok(ls)
    }

    fn node(&self, res: usize, i: usize, j: usize) -> [f64; 2] {
        [
            self.lo[0] + (self.hi[0] - self.lo[0]) * i as f64 / res as f64,
            self.lo[1] + (self.hi[1] - self.lo[1]) * j as f64 / res as f64,
        ]
    }

    pub(crate) fn point(&self, u: &[f64]) -> Vec<f64> {
        self.patch.point(u)
    }

    pub(crate) fn value(&self, u: &[f64]) -> f64 {
        (self.phi)(&self.patch.point(u))
    }

    fn grad_u(&self, u: &[f64; 2]) -> [f64; 2] {
        let d = |k: usize| {
            let mut p = *u;
            let mut m = *u;
            p[k] += FD_STEP;
            m[k] -= FD_STEP;
            (self.value(&p) - self.value(&m)) / (2.0 * FD_STEP)
        };
        [d(0), d(1)]
    }

    /// Range of `φ` over the coarsest grid.
    pub fn range(&self) -> (f64, f64) {
        let v = &self.grids[0].1;
        (v.iter().cloned().fold(f64::INFINITY, f64::min), v.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Values where the level-set measure may fail to be smooth: corner values
    /// and grid extrema or saddles of `φ`, sorted.
    pub fn critical_values(&self) -> Vec<f64> {
        let (res, v) = &self.grids[0];
        let w = res + 1;
        let mut out = vec![v[0], v[*res], v[res * w], v[res * w + res]];
        for j in 0..w {
            for i in 0..w {
                let c = v[j * w + i];
                let ring: Vec<f64> = [(-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0)]
                    .iter()
                    .filter_map(|&(di, dj)| {
                        let (a, b) = (i as i64 + di, j as i64 + dj);
                        (a >= 0 && b >= 0 && a < w as i64 && b < w as i64).then(|| v[b as usize * w + a as usize])
                    })
                    .collect();
                let interior = ring.len() == 8;
                let all_above = ring.iter().all(|&r| r > c);
                let all_below = ring.iter().all(|&r| r < c);
                let changes = (0..ring.len()).filter(|&k| (ring[k] > c) != (ring[(k + 1) % ring.len()] > c)).count();
                if all_above || all_below || (interior && changes >= 4) {
                    out.push(c);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        out
    }

    /// Exact crossing of the level `s` on the edge from `p` (value `vp`) to `q`.
    fn crossing(&self, p: [f64; 2], vp: f64, q: [f64; 2], vq: f64, s: f64) -> [f64; 2] {
        let at = |t: f64| [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
        let (mut a, mut fa, mut b, mut fb) = (0.0, vp - s, 1.0, vq - s);
        let mut side = 0;
        for _ in 0..60 {
            let t = (a * fb - b * fa) / (fb - fa);
            let ft = self.value(&at(t)) - s;
            if ft == 0.0 || (b - a) < 1e-15 {
                return at(t);
            }
            if (ft > 0.0) == (fa > 0.0) {
                a = t;
                fa = ft;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            } else {
                b = t;
                fb = ft;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            }
            if fa.abs().min(fb.abs()) < 1e-15 * (1.0 + s.abs()) {
                break;
            }
        }
        at(if fa.abs() < fb.abs() { a } else { b })
    }

    /// Level segments of `{φ = s}` on the grid of the given index.
    pub fn segments(&self, grid: usize, s: f64) -> Vec<Segment> {
        let (res, v) = &self.grids[grid];
        let w = res + 1;
        let mut out = Vec::new();
        for j in 0..*res {
            for i in 0..*res {
                let idx = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
                let vals: Vec<f64> = idx.iter().map(|&(a, b)| v[b * w + a]).collect();
                let inside: Vec<bool> = vals.iter().map(|&x| x >= s).collect();
                if inside.iter().all(|&b| b) || inside.iter().all(|&b| !b) {
                    continue;
                }
                let mut cross: [Option<[f64; 2]>; 4] = [None; 4];
                for e in 0..4 {
                    let f = (e + 1) % 4;
                    if inside[e] != inside[f] {
                        let p = self.node(*res, idx[e].0, idx[e].1);
                        let q = self.node(*res, idx[f].0, idx[f].1);
                        // Orient every edge the same way so neighbours agree bit for bit.
                        cross[e] = Some(if (idx[e].0, idx[e].1) < (idx[f].0, idx[f].1) {
                            self.crossing(p, vals[e], q, vals[f], s)
                        } else {
                            self.crossing(q, vals[f], p, vals[e], s)
                        });
                    }
                }
                let edges: Vec<usize> = (0..4).filter(|&e| cross[e].is_some()).collect();
                let pairs: Vec<(usize, usize)> = if edges.len() == 2 {
                    vec![(edges[0], edges[1])]
                } else {
                    let center = self.value(&self.node(2 * res, 2 * i + 1, 2 * j + 1));
                    if (center >= s) == inside[0] {
                        vec![(0, 1), (2, 3)]
                    } else {
                        vec![(3, 0), (1, 2)]
                    }
                };
                for (e, f) in pairs {
                    let (a, b) = (cross[e].unwrap(), cross[f].unwrap());
                    if a != b {
                        out.push(Segment { a, b });
                    }
                }
            }
        }
        out
    }

    /// Point of `{φ = s}` over the chord parameter `lam`, with `du/dλ`.
    pub(crate) fn project(&self, seg: &Segment, lam: f64, s: f64) -> Option<([f64; 2], [f64; 2])> {
        let c1 = [seg.b[0] - seg.a[0], seg.b[1] - seg.a[1]];
        let len = (c1[0] * c1[0] + c1[1] * c1[1]).sqrt();
        let nh = [-c1[1] / len, c1[0] / len];
        let c = [seg.a[0] + lam * c1[0], seg.a[1] + lam * c1[1]];
        let at = |t: f64| [c[0] + t * nh[0], c[1] + t * nh[1]];
        let mut t = 0.0;
        let mut ok = false;
        for _ in 0..30 {
            let f = self.value(&at(t)) - s;
            if f.abs() <= 4.0 * f64::EPSILON * (1.0 + s.abs()) {
                ok = true;
                break;
            }
            let g = self.grad_u(&at(t));
            let dn = g[0] * nh[0] + g[1] * nh[1];
            if dn == 0.0 {
                return None;
            }
            let dt = f / dn;
            t -= dt;
            if t.abs() > len {
                return None;
            }
            if dt.abs() <= 1e-14 * len.max(1e-300) + 1e-15 {
                ok = true;
                break;
            }
        }
        if !ok {
            return None;
        }
        let u = at(t);
        let g = self.grad_u(&u);
        let dn = g[0] * nh[0] + g[1] * nh[1];
        let tp = -(g[0] * c1[0] + g[1] * c1[1]) / dn;
        Some((u, [c1[0] + tp * nh[0], c1[1] + tp * nh[1]]))
    }

    fn measure_on(&self, grid: usize, s: f64, g: &dyn Fn(&BoundaryFrameData) -> f64) -> Option<f64> {
        let (nodes, weights) = &self.gauss;
        let mut total = 0.0;
        for seg in self.segments(grid, s) {
            for (x, w) in nodes.iter().zip(weights) {
                let (u, du) = self.project(&seg, 0.5 * (x + 1.0), s)?;
                let out = self.grad_u(&u);
                let b = boundary_frame(self.patch, &u, &[du.to_vec()], &out);
                if b.h_density > 0.0 {
                    total += 0.5 * w * g(&b) * b.h_density;
                }
            }
        }
        Some(total)
    }

    /// `∫_{φ=s} g σ^{n−2}_H`, retracing on finer grids when projection fails.
    pub fn measure(&self, s: f64, g: &dyn Fn(&BoundaryFrameData) -> f64) -> Option<f64> {
        (0..self.grids.len()).find_map(|k| self.measure_on(k, s, g))
    }

    /// `σ^{n−2}_H(φ⁻¹(s))`.
    pub fn length(&self, s: f64) -> Option<f64> {
        self.measure(s, &|_| 1.0)
    }
}

/// Levels closer than this fraction of the range to a critical value may be
/// loops below the finest grid; they are bounded rather than traced.
pub const CRITICAL_WINDOW: f64 = 1e-3;

/// `∫ ds ∫_{φ=s} g σ^{n−2}_H` over all levels, split at the critical values.
///
/// A level that cannot be traced within [`CRITICAL_WINDOW`] of a critical value
/// counts as zero; the window `w` it spans adds `w·L` to the error, with `L`
/// the measure traced just outside the window (level measures grow away from
/// an extremum). Failures elsewhere are a capability error.
pub(crate) fn level_integral(
    levels: &LevelSets,
    q: &QuadratureSpec,
    g: &(dyn Fn(&BoundaryFrameData) -> f64 + Sync),
) -> Result<Estimate, LabError> {
    let breaks = levels.critical_values();
    let (lo, hi) = levels.range();
    let window = CRITICAL_WINDOW * (hi - lo);
    let failed = AtomicBool::new(false);
    let near = Mutex::new(BTreeMap::<usize, f64>::new());
    let f = |s: f64| {
        levels.measure(s, g).unwrap_or_else(|| {
            let nearest = (0..breaks.len()).min_by(|&a, &b| (breaks[a] - s).abs().total_cmp(&(breaks[b] - s).abs()));
            match nearest {
                Some(k) if (breaks[k] - s).abs() <= window => {
                    let mut near = near.lock().unwrap();
                    let w = near.entry(k).or_insert(0.0);
                    *w = w.max((breaks[k] - s).abs());
                }
                _ => failed.store(true, Ordering::Relaxed),
            }
            0.0
        })
    };
    let integ = Integrator::new(*q);
    // `s = c + (d − c)(3τ² − 2τ³)` flattens the square-root and logarithmic
    // behaviour of level measures at critical values.
    let mut total: Estimate = breaks
        .windows(2)
        .map(|w| {
            let (c, d) = (w[0], w[1]);
            let smooth = |tau: f64| {
                let ds = 6.0 * tau * (1.0 - tau) * (d - c);
                if ds == 0.0 {
                    0.0
                } else {
                    f(c + (d - c) * tau * tau * (3.0 - 2.0 * tau)) * ds
                }
            };
            integ.integrate_1d(&smooth, 0.0, 1.0)
        })
        .sum();
    if failed.load(Ordering::Relaxed) {
        return Err(LabError::Capability("a level set could not be traced on the finest grid".into()));
    }
    for (k, w) in near.into_inner().unwrap() {
        let edge = [breaks[k] - 2.0 * w, breaks[k] + 2.0 * w]
            .iter()
            .filter(|&&s| s > lo && s < hi)
            .filter_map(|&s| levels.measure(s, g))
            .map(f64::abs)
            .fold(0.0, f64::max);
        total.error += 2.0 * w * edge;
    }
    Ok(total)
}

/// `∫_S |grad_HS φ| σ^{n−1}_H = ∫ σ^{n−2}_H(φ⁻¹(s)) ds`, patch by patch.
pub fn coarea_check(
    surface: &Surface,
    phi: &(dyn Fn(&[f64]) -> f64 + Sync),
    q: &QuadratureSpec,
) -> Result<InequalityReport, LabError> {
    let mut lhs = Estimate::ZERO;
    let mut rhs = Estimate::ZERO;
    for p in &surface.patches {
        let p = p.as_ref();
        let levels = LevelSets::new(p, phi)?;
        lhs = lhs
            + integrate_patch_h(p, &Region::Whole, q, &|d, u| {
                let g = tangential_gradient(p, u, d, phi);
                layer_gradient_norms(p.algebra(), d, &g)[0]
            });
        rhs = rhs + level_integral(&levels, q, &|_| 1.0)?;
    }
    let tol = IDENTITY_REL_TOL * lhs.value.abs().max(rhs.value.abs()) + IDENTITY_ABS_TOL;
    Ok(InequalityReport::equal("coarea", &surface.name, lhs, rhs, tol))
}

//! Globally adaptive Gauss–Legendre quadrature, iterated over the axes of a
//! parameter box, with optional clipping to a sublevel set `{g ≤ 0}`.
//!
//! The error estimate of a panel is the difference between the rule on the
//! panel and the rule on its two halves. Clipping is resolved exactly along
//! the innermost axis by bracketing the roots of `g`, so curved boundaries
//! do not degrade the order of the outer rules beyond a square-root edge.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    /// Gauss points per panel and axis.
    pub base_order: usize,
    /// Maximal bisection depth of a panel.
    pub max_depth: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { base_order: 8, max_depth: 30, rel_tol: 1e-9, abs_tol: 1e-13 }
    }
}

impl QuadratureSpec {
    pub fn with_tol(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    /// The next refinement level: tolerance divided by 16, one more point.
    pub fn refined(&self) -> Self {
        Self {
            base_order: self.base_order + 1,
            max_depth: self.max_depth + 2,
            rel_tol: self.rel_tol / 16.0,
            abs_tol: self.abs_tol / 16.0,
        }
    }
}

/// An integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

impl Estimate {
    pub const ZERO: Estimate = Estimate { value: 0.0, error: 0.0, converged: true, evaluations: 0 };

    pub fn exact(value: f64) -> Self {
        Self { value, ..Self::ZERO }
    }

    pub fn scale(self, s: f64) -> Self {
        Self { value: self.value * s, error: self.error * s.abs(), ..self }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate {
            value: self.value + o.value,
            error: self.error + o.error,
            converged: self.converged && o.converged,
            evaluations: self.evaluations + o.evaluations,
        }
    }
}

impl std::iter::Sum for Estimate {
    fn sum<I: Iterator<Item = Estimate>>(iter: I) -> Estimate {
        iter.fold(Estimate::ZERO, |a, b| a + b)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Integrand of an iterated integral: the outer axes see inner estimates.
type Inner<'a> = dyn Fn(f64) -> Estimate + Sync + 'a;

#[derive(Debug, Clone)]
pub struct Integrator {
    pub spec: QuadratureSpec,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

struct Panel {
    a: f64,
    b: f64,
    depth: usize,
    /// Rule on the whole panel.
    whole: f64,
    /// Rule on the two halves.
    halves: [f64; 2],
    inner_err: f64,
    inner_ok: bool,
}

impl Panel {
    fn value(&self) -> f64 {
        self.halves[0] + self.halves[1]
    }
    /// Discretization error of this panel's own rule.
    fn err(&self) -> f64 {
        (self.value() - self.whole).abs()
    }
}

/// Budget of bisections per one-dimensional integral.
const MAX_SPLITS: usize = 400;
/// Samples per line used to bracket the clip boundary.
const CLIP_SAMPLES: usize = 48;

impl Integrator {
    pub fn new(spec: QuadratureSpec) -> Self {
        let (nodes, weights) = gauss_legendre(spec.base_order.max(1));
        Self { spec, nodes, weights }
    }

    fn rule(&self, f: &Inner, a: f64, b: f64, err: &mut f64, ok: &mut bool, evals: &mut usize) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let e = f(c + h * x);
            s += w * e.value;
            *err += w * h.abs() * e.error;
            *ok &= e.converged;
            *evals += e.evaluations.max(1);
        }
        s * h
    }

    fn panel(&self, f: &Inner, a: f64, b: f64, depth: usize, whole: Option<f64>, evals: &mut usize) -> Panel {
        let mut inner_err = 0.0;
        let mut inner_ok = true;
        let m = 0.5 * (a + b);
        let mut scratch = 0.0;
        let whole = match whole {
            Some(w) => w,
            None => self.rule(f, a, b, &mut scratch, &mut true, evals),
        };
        let left = self.rule(f, a, m, &mut inner_err, &mut inner_ok, evals);
        let right = self.rule(f, m, b, &mut inner_err, &mut inner_ok, evals);
        Panel { a, b, depth, whole, halves: [left, right], inner_err, inner_ok }
    }

    /// Adaptive integral of an estimate-valued integrand over `[a, b]`,
    /// starting from `initial` equal panels.
    pub fn integrate_nested(&self, f: &Inner, a: f64, b: f64, initial: usize) -> Estimate {
        if b <= a {
            return Estimate::ZERO;
        }
        let mut evals = 0;
        let k = initial.max(1);
        let mut panels: Vec<Panel> = (0..k)
            .map(|i| {
                let pa = a + (b - a) * i as f64 / k as f64;
                let pb = if i + 1 == k { b } else { a + (b - a) * (i + 1) as f64 / k as f64 };
                self.panel(f, pa, pb, 0, None, &mut evals)
            })
            .collect();
        let mut converged = false;
        for _ in 0..MAX_SPLITS {
            let total: f64 = panels.iter().map(Panel::value).sum();
            let err: f64 = panels.iter().map(Panel::err).sum();
            if err <= self.spec.abs_tol.max(self.spec.rel_tol * total.abs()) {
                converged = true;
                break;
            }
            let worst = panels
                .iter()
                .enumerate()
                .filter(|(_, p)| p.depth < self.spec.max_depth)
                .max_by(|x, y| x.1.err().total_cmp(&y.1.err()).then(y.0.cmp(&x.0)))
                .map(|(i, _)| i);
            let Some(i) = worst else { break };
            let p = panels.swap_remove(i);
            let m = 0.5 * (p.a + p.b);
            let l = self.panel(f, p.a, m, p.depth + 1, Some(p.halves[0]), &mut evals);
            let r = self.panel(f, m, p.b, p.depth + 1, Some(p.halves[1]), &mut evals);
            panels.push(l);
            panels.push(r);
        }
        panels.sort_by(|x, y| x.a.total_cmp(&y.a));
        let value: f64 = panels.iter().map(Panel::value).sum();
        let error: f64 = panels.iter().map(|p| p.err() + p.inner_err).sum();
        let converged = converged && panels.iter().all(|p| p.inner_ok);
        Estimate { value, error, converged, evaluations: evals }
    }

    /// Adaptive integral of a scalar function over `[a, b]`.
    pub fn integrate_1d(&self, f: &(dyn Fn(f64) -> f64 + Sync), a: f64, b: f64) -> Estimate {
        self.integrate_nested(&|x| Estimate { value: f(x), error: 0.0, converged: true, evaluations: 1 }, a, b, 1)
    }

    /// Iterated integral of `f` over the box `[lo, hi]`, restricted to
    /// `{clip ≤ 0}` when a clip function is given.
    pub fn integrate_box(
        &self,
        lo: &[f64],
        hi: &[f64],
        f: &(dyn Fn(&[f64]) -> f64 + Sync),
        clip: Option<&(dyn Fn(&[f64]) -> f64 + Sync)>,
    ) -> Estimate {
        assert_eq!(lo.len(), hi.len());
        let m = lo.len();
        if m == 0 {
            return match clip {
                Some(g) if g(&[]) > 0.0 => Estimate::ZERO,
                _ => Estimate { value: f(&[]), error: 0.0, converged: true, evaluations: 1 },
            };
        }
        let (lo, hi) = match clip {
            Some(g) => match clip_bounding_box(lo, hi, g) {
                Some(b) => b,
                None => return Estimate::ZERO,
            },
            None => (lo.to_vec(), hi.to_vec()),
        };
        let initial = if clip.is_some() { 4 } else { 1 };
        self.iterate(&lo, &hi, f, clip, &mut Vec::with_capacity(m), initial)
    }

    fn iterate(
        &self,
        lo: &[f64],
        hi: &[f64],
        f: &(dyn Fn(&[f64]) -> f64 + Sync),
        clip: Option<&(dyn Fn(&[f64]) -> f64 + Sync)>,
        prefix: &mut Vec<f64>,
        initial: usize,
    ) -> Estimate {
        let d = prefix.len();
        let m = lo.len();
        if d + 1 == m {
            let at = |x: f64| {
                let mut u = prefix.clone();
                u.push(x);
                u
            };
            let line = |x: f64| Estimate { value: f(&at(x)), error: 0.0, converged: true, evaluations: 1 };
            return match clip {
                None => self.integrate_nested(&line, lo[d], hi[d], initial),
                Some(g) => inside_intervals(&|x| g(&at(x)), lo[d], hi[d])
                    .into_iter()
                    .map(|(a, b)| self.integrate_nested(&line, a, b, 1))
                    .sum(),
            };
        }
        let base = prefix.clone();
        let outer = |x: f64| {
            let mut p = base.clone();
            p.push(x);
            self.iterate(lo, hi, f, clip, &mut p, 1)
        };
        match clip {
            // The inner integral jumps where the clipped region's shadow on
            // this axis starts or ends; integrate between those points.
            Some(g) if d + 2 == m => {
                let shadow = |x: f64| {
                    let at = |y: f64| {
                        let mut u = base.clone();
                        u.push(x);
                        u.push(y);
                        g(&u)
                    };
                    line_min(&at, lo[m - 1], hi[m - 1])
                };
                inside_intervals(&shadow, lo[d], hi[d])
                    .into_iter()
                    .map(|(a, b)| self.integrate_nested(&outer, a, b, initial))
                    .sum()
            }
            _ => self.integrate_nested(&outer, lo[d], hi[d], initial),
        }
    }
}

/// Root of `g` in `[l, r]` with `g(l)`, `g(r)` of opposite signs (Illinois
/// variant of regula falsi, falling back to bisection when it stalls).
fn bracketed_root(g: &dyn Fn(f64) -> f64, mut l: f64, mut r: f64, mut gl: f64, mut gr: f64) -> f64 {
    let tol = 4.0 * f64::EPSILON * (l.abs() + r.abs()).max(1e-300);
    let mut side = 0i8;
    for _ in 0..100 {
        if r - l <= tol {
            break;
        }
        let mut x = (l * gr - r * gl) / (gr - gl);
        if !(x > l && x < r) {
            x = 0.5 * (l + r);
        }
        let gx = g(x);
        if gx == 0.0 || (x - l).min(r - x) <= tol {
            return x;
        }
        if (gx <= 0.0) == (gl <= 0.0) {
            l = x;
            gl = gx;
            if side == -1 {
                gr *= 0.5;
            }
            side = -1;
        } else {
            r = x;
            gr = gx;
            if side == 1 {
                gl *= 0.5;
            }
            side = 1;
        }
    }
    if gl.abs() <= gr.abs() {
        l
    } else {
        r
    }
}

/// Subintervals of `[a, b]` on which `g ≤ 0`.
///
/// Sign changes between samples are located by root finding; near-touching
/// sampled minima are searched for thin inside pieces the samples missed.
pub fn inside_intervals(g: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Vec<(f64, f64)> {
    let n = CLIP_SAMPLES;
    let xs: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let vs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let root = |l: f64, r: f64, gl: f64, gr: f64| bracketed_root(g, l, r, gl, gr);
    let mut out = Vec::new();
    let mut start = if vs[0] <= 0.0 { Some(a) } else { None };
    for i in 0..n {
        let (ins_l, ins_r) = (vs[i] <= 0.0, vs[i + 1] <= 0.0);
        if ins_l != ins_r {
            let x = root(xs[i], xs[i + 1], vs[i], vs[i + 1]);
            if ins_l {
                out.push((start.take().unwrap_or(a), x));
            } else {
                start = Some(x);
            }
        }
    }
    if let Some(s) = start {
        out.push((s, b));
    }
    for i in 0..=n {
        let l = i.saturating_sub(1);
        let r = (i + 1).min(n);
        if vs[l] <= 0.0 || vs[i] <= 0.0 || vs[r] <= 0.0 || vs[i] > vs[l] || vs[i] > vs[r] {
            continue;
        }
        // A parabola through the samples cannot dip by more than this.
        let dip = 10.0 * (vs[l] - vs[i]).max(vs[r] - vs[i]);
        if vs[i] > dip {
            continue;
        }
        let (xm, gm) = golden_min(g, xs[l], xs[r]);
        if gm > 0.0 {
            continue;
        }
        let lo = root(xs[l], xm, vs[l], gm);
        let hi = root(xm, xs[r], gm, vs[r]);
        out.push((lo, hi));
    }
    out.retain(|(l, r)| r > l);
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

/// `min g` over `[a, b]`: the smallest of `CLIP_SAMPLES + 1` samples,
/// refined by a golden search between its neighbours.
fn line_min(g: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = CLIP_SAMPLES;
    let xs: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let (i, v) = xs.iter().map(|&x| g(x)).enumerate().fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    if v <= 0.0 {
        return v;
    }
    golden_min(g, xs[i.saturating_sub(1)], xs[(i + 1).min(n)]).1.min(v)
}

/// Golden-section minimization of `g` on `[l, r]`.
fn golden_min(g: &dyn Fn(f64) -> f64, mut l: f64, mut r: f64) -> (f64, f64) {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = r - phi * (r - l);
    let mut x2 = l + phi * (r - l);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..80 {
        if g1.min(g2) <= 0.0 || r - l <= 4.0 * f64::EPSILON * (l.abs() + r.abs()) {
            break;
        }
        if g1 <= g2 {
            r = x2;
            x2 = x1;
            g2 = g1;
            x1 = r - phi * (r - l);
            g1 = g(x1);
        } else {
            l = x1;
            x1 = x2;
            g1 = g2;
            x2 = l + phi * (r - l);
            g2 = g(x2);
        }
    }
    if g1 <= g2 {
        (x1, g1)
    } else {
        (x2, g2)
    }
}

/// Brent's minimisation of `g` on `[a, b]` (parabolic steps guarded by
/// golden sections) to an absolute abscissa tolerance `tol`.
pub fn brent_min(g: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const CGOLD: f64 = 0.381_966_011_250_105_1;
    let mut x = a + CGOLD * (b - a);
    let mut fx = g(x);
    let (mut w, mut v) = (x, x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        let tol1 = tol + 1e-12 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if m >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= m { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = g(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            (v, fv, w, fw, x, fx) = (w, fw, x, fx, u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv, w, fw) = (w, fw, u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    (x, fx)
}

/// Axis-aligned box around `{g ≤ 0} ∩ [lo, hi]`, found on sample grids and
/// padded by 1.5 grid cells; `None` when no sample lies inside.
///
/// Small or thin regions are resolved by zooming: around the best sample when
/// nothing is inside, and into the padded box while it spans too few cells.
pub fn clip_bounding_box(
    lo: &[f64],
    hi: &[f64],
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> Option<(Vec<f64>, Vec<f64>)> {
    let m = lo.len();
    let per_axis: usize = match m {
        1 => 401,
        2 => 121,
        _ => 31,
    };
    let (mut lo, mut hi) = (lo.to_vec(), hi.to_vec());
    let (lo0, hi0) = (lo.clone(), hi.clone());
    let mut found = false;
    for _ in 0..ZOOM_LIMIT {
        let cell: Vec<f64> = (0..m).map(|d| (hi[d] - lo[d]) / (per_axis - 1) as f64).collect();
        let mut bmin = vec![f64::INFINITY; m];
        let mut bmax = vec![f64::NEG_INFINITY; m];
        let mut best = (f64::INFINITY, vec![0.0; m]);
        let mut u = vec![0.0; m];
        let mut any = false;
        for idx in 0..per_axis.pow(m as u32) {
            let mut rem = idx;
            for d in 0..m {
                let k = rem % per_axis;
                rem /= per_axis;
                u[d] = lo[d] + cell[d] * k as f64;
            }
            let v = g(&u);
            if v <= 0.0 {
                any = true;
                for d in 0..m {
                    bmin[d] = bmin[d].min(u[d]);
                    bmax[d] = bmax[d].max(u[d]);
                }
            } else if v < best.0 {
                best = (v, u.clone());
            }
        }
        if !any {
            if found || !best.0.is_finite() || cell.iter().zip(&lo0).zip(&hi0).all(|((c, a), b)| *c <= 1e-12 * (b - a)) {
                return None;
            }
            for d in 0..m {
                lo[d] = (best.1[d] - 2.0 * cell[d]).max(lo0[d]);
                hi[d] = (best.1[d] + 2.0 * cell[d]).min(hi0[d]);
            }
            continue;
        }
        found = true;
        let plo: Vec<f64> = (0..m).map(|d| (bmin[d] - 1.5 * cell[d]).max(lo0[d])).collect();
        let phi: Vec<f64> = (0..m).map(|d| (bmax[d] + 1.5 * cell[d]).min(hi0[d])).collect();
        let coarse = (0..m).any(|d| (phi[d] - plo[d]) < MIN_SPAN_CELLS * cell[d] && phi[d] - plo[d] > 1e-12 * (hi0[d] - lo0[d]));
        if !coarse {
            return Some(grow_to_cover(&lo0, &hi0, plo, phi, g));
        }
        lo = plo;
        hi = phi;
    }
    found.then(|| grow_to_cover(&lo0, &hi0, lo, hi, g))
}

/// Moves box faces outward while `{g ≤ 0}` still crosses them: sampling
/// alone can cut off thin slanted pieces of the region.
fn grow_to_cover(
    lo0: &[f64],
    hi0: &[f64],
    mut lo: Vec<f64>,
    mut hi: Vec<f64>,
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> (Vec<f64>, Vec<f64>) {
    let m = lo.len();
    let crosses = |lo: &[f64], hi: &[f64], d: usize, at: f64| -> bool {
        if m == 1 {
            return g(&[at]) <= 0.0;
        }
        // Lines along the last free axis, on a grid over the remaining ones.
        let free: Vec<usize> = (0..m).filter(|&e| e != d).collect();
        let line_axis = *free.last().unwrap();
        let grid_axes = &free[..free.len() - 1];
        let per = FACE_LINES;
        let total = per.pow(grid_axes.len() as u32);
        (0..total).any(|idx| {
            let mut u = vec![0.0; m];
            u[d] = at;
            let mut rem = idx;
            for &e in grid_axes {
                let k = rem % per;
                rem /= per;
                u[e] = lo[e] + (hi[e] - lo[e]) * k as f64 / (per - 1) as f64;
            }
            let line = |x: f64| {
                let mut v = u.clone();
                v[line_axis] = x;
                g(&v)
            };
            !inside_intervals(&line, lo[line_axis], hi[line_axis]).is_empty()
        })
    };
    for _ in 0..GROW_LIMIT {
        let mut moved = false;
        for d in 0..m {
            let step = 0.5 * (hi[d] - lo[d]);
            if lo[d] > lo0[d] && crosses(&lo, &hi, d, lo[d]) {
                lo[d] = (lo[d] - step).max(lo0[d]);
                moved = true;
            }
            if hi[d] < hi0[d] && crosses(&lo, &hi, d, hi[d]) {
                hi[d] = (hi[d] + step).min(hi0[d]);
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    (lo, hi)
}

/// Lines per face axis when testing whether the region crosses a face.
const FACE_LINES: usize = 17;
/// Growth rounds of [`grow_to_cover`].
const GROW_LIMIT: usize = 30;
/// Zoom steps of [`clip_bounding_box`].
const ZOOM_LIMIT: usize = 40;
/// A bounding box narrower than this many cells is resampled.
const MIN_SPAN_CELLS: f64 = 8.0;

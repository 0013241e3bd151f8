//! Built-in surfaces.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use super::domain::{Domain, Face, Side};
use super::height::{Height, Polynomial};
use super::patch::{GraphSurface, Patch, Surface};
use crate::{Algebra, StratifiedAlgebra};

pub const PRESET_NAMES: [&str; 8] = [
    "h1-vertical-plane",
    "h1-t0-plane",
    "h1-t0-disk",
    "h1-cylinder",
    "h1-paraboloid",
    "h1-capped-cylinder",
    "engel-vertical-plane",
    "h1-paraboloid-cubic",
];

fn h1() -> Arc<Algebra> {
    Arc::new(StratifiedAlgebra::heisenberg(1))
}

/// `{x1 = 0}` over `(x2, t) ∈ [−half, half]²`, normal `+e_1`.
pub fn vertical_plane(alg: Arc<Algebra>, half: f64) -> GraphSurface {
    let m = alg.n() - 1;
    GraphSurface::new(alg, 0, Domain::square(half, m), Height::Poly(Polynomial::zero()))
}

/// `{t = 0}` over `(x1, x2) ∈ [−half, half]²`.
pub fn t0_plane(half: f64) -> GraphSurface {
    GraphSurface::new(h1(), 2, Domain::square(half, 2), Height::Poly(Polynomial::zero()))
}

/// `{t = 0, |x_H| ≤ radius}` in polar parameters.
pub fn t0_disk(radius: f64) -> GraphSurface {
    GraphSurface::new(h1(), 2, Domain::disk(radius), Height::Poly(Polynomial::zero()))
}

/// `t = x1² + x2²` over a square.
pub fn paraboloid(half: f64) -> GraphSurface {
    let p = Polynomial::new(vec![(vec![2, 0], 1.0), (vec![0, 2], 1.0)]);
    GraphSurface::new(h1(), 2, Domain::square(half, 2), Height::Poly(p))
}

/// `t = x1² + x2² + x1³`: same blow-up as the paraboloid, not dilation invariant.
pub fn cubic_paraboloid(half: f64) -> GraphSurface {
    let p = Polynomial::new(vec![(vec![2, 0], 1.0), (vec![0, 2], 1.0), (vec![3, 0], 1.0)]);
    GraphSurface::new(h1(), 2, Domain::square(half, 2), Height::Poly(p))
}

/// The four graph patches of `{|x_H| = radius, |t| ≤ half_height}` with
/// outward normals; the patches meet along `x1 = ±x2`.
pub fn cylinder_patches(radius: f64, half_height: f64) -> Vec<GraphSurface> {
    let alg = h1();
    let w = radius * FRAC_1_SQRT_2;
    let dom = Domain::Box { lo: vec![-w, -half_height], hi: vec![w, half_height] };
    let seams = vec![Face::new(0, Side::Lo), Face::new(0, Side::Hi)];
    [(0usize, 1.0), (0, -1.0), (1, 1.0), (1, -1.0)]
        .into_iter()
        .map(|(alpha, sign)| {
            GraphSurface::new(alg.clone(), alpha, dom.clone(), Height::CircleArc { radius, var: 0, sign })
                .with_orientation(sign)
                .with_seams(seams.clone())
        })
        .collect()
}

pub fn cylinder(radius: f64, half_height: f64) -> Surface {
    Surface::new(
        "h1-cylinder",
        cylinder_patches(radius, half_height).into_iter().map(|p| Arc::new(p) as Arc<dyn Patch>).collect(),
    )
}

/// Cylinder closed by two caps of the Korány sphere through its rims.
pub fn capped_cylinder(radius: f64, half_height: f64) -> Surface {
    let alg = h1();
    let c4 = radius.powi(4) + 16.0 * half_height * half_height;
    let mut patches: Vec<Arc<dyn Patch>> = cylinder_patches(radius, half_height)
        .into_iter()
        .map(|p| Arc::new(p.closed()) as Arc<dyn Patch>)
        .collect();
    for sign in [1.0, -1.0] {
        let cap = GraphSurface::new(alg.clone(), 2, Domain::disk(radius), Height::KoranyCap { c4, sign })
            .with_orientation(sign)
            .closed();
        patches.push(Arc::new(cap));
    }
    Surface::new("h1-capped-cylinder", patches)
}

/// Named preset with its default parameters.
pub fn preset(name: &str) -> Option<Surface> {
    let s = match name {
        "h1-vertical-plane" => Surface::single(name, vertical_plane(h1(), 1.0)),
        "h1-t0-plane" => Surface::single(name, t0_plane(1.5)),
        "h1-t0-disk" => Surface::single(name, t0_disk(1.0)),
        "h1-cylinder" => cylinder(1.0, 1.0),
        "h1-paraboloid" => Surface::single(name, paraboloid(1.0)),
        "h1-paraboloid-cubic" => Surface::single(name, cubic_paraboloid(0.5)),
        "h1-capped-cylinder" => capped_cylinder(1.0, 0.5),
        "engel-vertical-plane" => Surface::single(name, vertical_plane(Arc::new(StratifiedAlgebra::engel()), 1.0)),
        _ => return None,
    };
    Some(s)
}

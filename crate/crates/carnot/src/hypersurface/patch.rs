use std::fmt;
use std::sync::Arc;

use super::domain::{Domain, Face};
use super::height::Height;
use crate::linalg;
use crate::Algebra;

/// A parametrized piece of hypersurface `u ↦ Y(u) ∈ G`.
pub trait Patch: Send + Sync + fmt::Debug {
    fn algebra(&self) -> &Arc<Algebra>;
    fn domain(&self) -> &Domain;
    fn point(&self, u: &[f64]) -> Vec<f64>;
    /// Euclidean tangent vectors `∂Y/∂u_j`.
    fn tangents(&self, u: &[f64]) -> Vec<Vec<f64>>;
    /// Oriented Euclidean normal whose length is the area element of `du`.
    fn normal(&self, u: &[f64]) -> Vec<f64>;
    /// Faces of the parameter domain that belong to `∂S`.
    fn boundary_faces(&self) -> Vec<Face>;
    fn as_graph(&self) -> Option<&GraphSurface> {
        None
    }
}

/// `Y(ζ) = (ζ_1, …, ψ(ζ) at slot α, …, ζ_{n−1})`.
#[derive(Debug, Clone)]
pub struct GraphSurface {
    pub alg: Arc<Algebra>,
    /// Graph direction, zero-based.
    pub alpha: usize,
    pub domain: Domain,
    pub height: Height,
    /// `±1`: sign of the normal relative to `e_α − ∇ψ`.
    pub orientation: f64,
    /// Faces glued to other patches; they are not part of `∂S`.
    pub seams: Vec<Face>,
}

impl GraphSurface {
    pub fn new(alg: Arc<Algebra>, alpha: usize, domain: Domain, height: Height) -> Self {
        Self { alg, alpha, domain, height, orientation: 1.0, seams: Vec::new() }
    }

    pub fn with_orientation(mut self, orientation: f64) -> Self {
        self.orientation = orientation.signum();
        self
    }

    pub fn with_seams(mut self, seams: Vec<Face>) -> Self {
        self.seams = seams;
        self
    }

    /// Closed surface piece: every face is a seam.
    pub fn closed(mut self) -> Self {
        self.seams = self.domain.faces();
        self
    }

    /// Slot in `R^n` of graph variable `j`.
    pub fn slot(&self, j: usize) -> usize {
        if j < self.alpha {
            j
        } else {
            j + 1
        }
    }

    /// The point over graph coordinates `ζ`.
    pub fn embed(&self, zeta: &[f64]) -> Vec<f64> {
        let mut y = Vec::with_capacity(zeta.len() + 1);
        y.extend_from_slice(&zeta[..self.alpha]);
        y.push(self.height.value(zeta));
        y.extend_from_slice(&zeta[self.alpha..]);
        y
    }

    /// Graph coordinates of a point: drop slot `α`.
    pub fn drop_alpha(&self, y: &[f64]) -> Vec<f64> {
        y.iter().enumerate().filter(|(i, _)| *i != self.alpha).map(|(_, &v)| v).collect()
    }

    /// Normal `orientation·(e_α − Σ ∂_jψ e_slot(j))` over `ζ`.
    pub fn normal_zeta(&self, zeta: &[f64]) -> Vec<f64> {
        let g = self.height.gradient(zeta);
        let mut nrm = vec![0.0; zeta.len() + 1];
        nrm[self.alpha] = self.orientation;
        for (j, gj) in g.iter().enumerate() {
            nrm[self.slot(j)] = -self.orientation * gj;
        }
        nrm
    }
}

impl Patch for GraphSurface {
    fn algebra(&self) -> &Arc<Algebra> {
        &self.alg
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn point(&self, u: &[f64]) -> Vec<f64> {
        self.embed(&self.domain.map(u))
    }

    fn tangents(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let zeta = self.domain.map(u);
        let g = self.height.gradient(&zeta);
        let jac = self.domain.jacobian(u);
        let m = zeta.len();
        (0..m)
            .map(|k| {
                let mut t = vec![0.0; m + 1];
                for j in 0..m {
                    t[self.slot(j)] += jac[j][k];
                    t[self.alpha] += g[j] * jac[j][k];
                }
                t
            })
            .collect()
    }

    fn normal(&self, u: &[f64]) -> Vec<f64> {
        let zeta = self.domain.map(u);
        linalg::scaled(&self.normal_zeta(&zeta), self.domain.jacobian_det(u))
    }

    fn boundary_faces(&self) -> Vec<Face> {
        self.domain.faces().into_iter().filter(|f| !self.seams.contains(f)).collect()
    }

    fn as_graph(&self) -> Option<&GraphSurface> {
        Some(self)
    }
}

/// Group maps applied to a patch.
#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    /// `y ↦ g • y`.
    LeftTranslate(Vec<f64>),
    /// `y ↦ y • g`, the time-one flow of a left-invariant field.
    RightTranslate(Vec<f64>),
    /// `y ↦ δ_t y`.
    Dilate(f64),
}

#[derive(Debug, Clone)]
pub struct Transformed {
    pub base: Arc<dyn Patch>,
    pub transform: Transform,
}

impl Transformed {
    pub fn new(base: Arc<dyn Patch>, transform: Transform) -> Self {
        Self { base, transform }
    }

    fn apply(&self, y: &[f64]) -> Vec<f64> {
        let alg = self.base.algebra();
        match &self.transform {
            Transform::LeftTranslate(g) => alg.mul(g, y),
            Transform::RightTranslate(g) => alg.mul(y, g),
            Transform::Dilate(t) => alg.dilate_coords(*t, y),
        }
    }

    /// Differential of the map at `y` (rows: output components) and its determinant.
    fn differential(&self, y: &[f64]) -> (Vec<Vec<f64>>, f64) {
        let alg = self.base.algebra();
        let n = y.len();
        match &self.transform {
            Transform::LeftTranslate(g) => {
                // L_g carries X_I(y) to X_I(g•y): DL_g = M(g•y) M(y)^{-1}.
                let m_gy = alg.frame_matrix(&alg.mul(g, y));
                let m_y = alg.frame_matrix(y);
                let mut d = vec![vec![0.0; n]; n];
                for c in 0..n {
                    let mut e = vec![0.0; n];
                    e[c] = 1.0;
                    let col = alg.from_frame(&m_gy, &alg.to_frame(&m_y, &e));
                    for r in 0..n {
                        d[r][c] = col[r];
                    }
                }
                (d, 1.0)
            }
            Transform::Dilate(t) => {
                let mut d = vec![vec![0.0; n]; n];
                for (i, row) in d.iter_mut().enumerate() {
                    row[i] = t.powi(alg.ord(i) as i32);
                }
                (d, t.powi(alg.q() as i32))
            }
            Transform::RightTranslate(g) => {
                let mut d = vec![vec![0.0; n]; n];
                let mut w = y.to_vec();
                for c in 0..n {
                    let h = 1e-6 * y[c].abs().max(1.0);
                    w[c] = y[c] + h;
                    let p = alg.mul(&w, g);
                    w[c] = y[c] - h;
                    let m = alg.mul(&w, g);
                    w[c] = y[c];
                    for r in 0..n {
                        d[r][c] = (p[r] - m[r]) / (2.0 * h);
                    }
                }
                let det = linalg::det(&d);
                (d, det)
            }
        }
    }
}

impl Patch for Transformed {
    fn algebra(&self) -> &Arc<Algebra> {
        self.base.algebra()
    }

    fn domain(&self) -> &Domain {
        self.base.domain()
    }

    fn point(&self, u: &[f64]) -> Vec<f64> {
        self.apply(&self.base.point(u))
    }

    fn tangents(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let (d, _) = self.differential(&self.base.point(u));
        self.base.tangents(u).iter().map(|t| linalg::mat_vec(&d, t)).collect()
    }

    fn normal(&self, u: &[f64]) -> Vec<f64> {
        // Cofactor rule: N' = det(DF) · DF^{-T} N.
        let (d, det) = self.differential(&self.base.point(u));
        let nrm = self.base.normal(u);
        let z = linalg::solve(&linalg::transpose(&d), &nrm).expect("group maps are diffeomorphisms");
        linalg::scaled(&z, det)
    }

    fn boundary_faces(&self) -> Vec<Face> {
        self.base.boundary_faces()
    }
}

/// A hypersurface assembled from patches with disjoint interiors.
#[derive(Debug, Clone)]
pub struct Surface {
    pub name: String,
    pub patches: Vec<Arc<dyn Patch>>,
}

impl Surface {
    pub fn new(name: impl Into<String>, patches: Vec<Arc<dyn Patch>>) -> Self {
        Self { name: name.into(), patches }
    }

    pub fn single(name: impl Into<String>, patch: impl Patch + 'static) -> Self {
        Self::new(name, vec![Arc::new(patch)])
    }

    pub fn empty(name: impl Into<String>) -> Self {
        Self::new(name, Vec::new())
    }

    pub fn is_closed(&self) -> bool {
        self.patches.iter().all(|p| p.boundary_faces().is_empty())
    }

    pub fn transformed(&self, t: Transform) -> Surface {
        Surface {
            name: self.name.clone(),
            patches: self
                .patches
                .iter()
                .map(|p| Arc::new(Transformed::new(p.clone(), t.clone())) as Arc<dyn Patch>)
                .collect(),
        }
    }
}

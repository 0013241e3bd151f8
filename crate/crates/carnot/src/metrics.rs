//! Smooth homogeneous norms, their gradients, layer comparison constants and
//! ball–box metric-factor bounds.

use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{GroupPoint, StratifiedAlgebra, TangentVector};
use crate::sampling::halton;
use crate::scalar::Scalar;

/// Inflation applied to sampled layer maxima.
pub const LAYER_MARGIN: f64 = 1.05;
/// Default number of low-discrepancy sphere samples.
pub const DEFAULT_SPHERE_SAMPLES: usize = 20_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("norm config: {0}")]
    Config(String),
    #[error("the norm is not differentiable at the identity")]
    Singular,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// `(|x_H|⁴ + 16|x_{H_2}|²)^{1/4}` on 2-step groups of Heisenberg type.
    Korany,
    /// `(Σ_i |x_{H_i}|^{λ/i})^{1/λ}`.
    PowerLambda(u32),
}

#[derive(Debug, Clone)]
pub struct HomogeneousNorm<T> {
    kind: NormKind,
    alg: Arc<StratifiedAlgebra<T>>,
}

impl<T: Scalar> HomogeneousNorm<T> {
    pub fn new(kind: NormKind, alg: Arc<StratifiedAlgebra<T>>) -> Result<Self, MetricError> {
        match kind {
            NormKind::Korany => check_korany(&alg)?,
            NormKind::PowerLambda(l) => {
                if l == 0 || (1..=alg.step()).any(|i| l as usize % i != 0) {
                    return Err(MetricError::Config(format!(
                        "λ = {l} is not divisible by every layer index up to {}",
                        alg.step()
                    )));
                }
                // Smoothness away from 0 needs even powers of Euclidean layer norms.
                if (1..=alg.step()).any(|i| (l as usize / i) % 2 != 0) {
                    return Err(MetricError::Config(format!("λ/i must be even for every layer i (λ = {l})")));
                }
            }
        }
        Ok(Self { kind, alg })
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn algebra(&self) -> &Arc<StratifiedAlgebra<T>> {
        &self.alg
    }

    fn layer_sq(&self, x: &[T], i: usize) -> T {
        x[self.alg.layer(i)].iter().fold(T::zero(), |s, &c| s + c * c)
    }

    /// `ρ(x)` on a coordinate slice.
    pub fn eval(&self, x: &[T]) -> T {
        match self.kind {
            NormKind::Korany => {
                let r2 = self.layer_sq(x, 1);
                let t2 = self.layer_sq(x, 2);
                (r2 * r2 + T::lit(16.0) * t2).sqrt().sqrt()
            }
            NormKind::PowerLambda(l) => {
                let lam = T::lit(l as f64);
                let mut s = T::zero();
                for i in 1..=self.alg.step() {
                    let q = self.layer_sq(x, i);
                    s = s + q.powi((l as usize / (2 * i)) as i32);
                }
                s.powf(T::one() / lam)
            }
        }
    }

    pub fn norm_eval(&self, x: &GroupPoint<T>) -> Result<T, MetricError> {
        self.check(x.coords.len())?;
        Ok(self.eval(&x.coords))
    }

    /// `ρ(x^{-1} • y)`.
    pub fn dist(&self, x: &[T], y: &[T]) -> T {
        self.eval(&self.alg.left_quotient(x, y))
    }

    fn check(&self, len: usize) -> Result<(), MetricError> {
        if len == self.alg.n() {
            Ok(())
        } else {
            Err(MetricError::DimensionMismatch { expected: self.alg.n(), got: len })
        }
    }

    /// Riemannian gradient of `ρ` in frame coordinates at `x`: closed form for
    /// the Korány norm, central differences along `X_I` otherwise.
    pub fn grad_frame(&self, x: &[T]) -> Result<Vec<T>, MetricError> {
        let rho = self.eval(x);
        if rho == T::zero() {
            return Err(MetricError::Singular);
        }
        match self.kind {
            NormKind::Korany => {
                let r2 = self.layer_sq(x, 1);
                let rho3 = rho * rho * rho;
                let mut eucl = vec![T::zero(); x.len()];
                for i in self.alg.layer(1) {
                    eucl[i] = r2 * x[i] / rho3;
                }
                for a in self.alg.layer(2) {
                    eucl[a] = T::lit(8.0) * x[a] / rho3;
                }
                let m = self.alg.frame_matrix(x);
                Ok(self.alg.pair_frame(&m, &eucl))
            }
            NormKind::PowerLambda(_) => Ok(self.grad_frame_fd(x)),
        }
    }

    /// Central differences of `ε ↦ ρ(x • ε e_I)`, step `1e-6·max(1, ρ(x))`.
    pub fn grad_frame_fd(&self, x: &[T]) -> Vec<T> {
        let n = self.alg.n();
        let h = T::lit(1e-6) * self.eval(x).max(T::one());
        let mut out = vec![T::zero(); n];
        let mut e = vec![T::zero(); n];
        for i in 0..n {
            e[i] = h;
            let plus = self.eval(&self.alg.mul(x, &e));
            e[i] = -h;
            let minus = self.eval(&self.alg.mul(x, &e));
            e[i] = T::zero();
            out[i] = (plus - minus) / (h + h);
        }
        out
    }

    pub fn norm_gradient(&self, x: &GroupPoint<T>) -> Result<TangentVector<T>, MetricError> {
        self.check(x.coords.len())?;
        Ok(TangentVector { frame_coords: self.grad_frame(&x.coords)?, base: x.clone() })
    }

    /// Deterministic sample of the unit ρ-sphere: layer axes first, then
    /// Halton points pushed radially by the dilations.
    pub fn sphere_samples(&self, count: usize) -> Vec<Vec<T>> {
        let n = self.alg.n();
        let mut out = Vec::with_capacity(count + 2 * n);
        for i in 0..n {
            for s in [T::one(), -T::one()] {
                let mut x = vec![T::zero(); n];
                x[i] = s;
                out.push(self.normalize(&x));
            }
        }
        let mut idx = 1usize;
        while out.len() < count + 2 * n {
            let u = halton(idx, n);
            idx += 1;
            let x: Vec<T> = u.iter().map(|&v| T::lit(2.0 * v - 1.0)).collect();
            if self.eval(&x) > T::lit(1e-6) {
                out.push(self.normalize(&x));
            }
        }
        out
    }

    fn normalize(&self, x: &[T]) -> Vec<T> {
        let r = self.eval(x);
        self.alg.dilate_coords(T::one() / r, x)
    }
}

fn check_korany<T: Scalar>(alg: &StratifiedAlgebra<T>) -> Result<(), MetricError> {
    if alg.step() != 2 {
        return Err(MetricError::Config(format!("Korány norm needs a 2-step group, got step {}", alg.step())));
    }
    let h = alg.h();
    let blocks: Vec<Vec<Vec<T>>> = alg.second_layer().map(|a| alg.horizontal_block(a)).collect();
    let tol = T::lit(1e-9);
    for (ia, ca) in blocks.iter().enumerate() {
        for (ib, cb) in blocks.iter().enumerate() {
            for i in 0..h {
                for j in 0..h {
                    let mut ab = T::zero();
                    let mut ba = T::zero();
                    for s in 0..h {
                        ab = ab + ca[i][s] * cb[s][j];
                        ba = ba + cb[i][s] * ca[s][j];
                    }
                    let target = if ia == ib && i == j { -T::lit(2.0) } else { T::zero() };
                    if (ab + ba - target).abs() > tol {
                        return Err(MetricError::Config(
                            "Korány norm needs C^α_H C^β_H + C^β_H C^α_H = −2δ_αβ·1".into(),
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

/// `c_i` with `|x_{H_i}| ≤ c_i ρ(x)^i`; `c[0]` belongs to layer 2.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerConstants<T> {
    pub c: Vec<T>,
    pub samples: usize,
}

impl<T: Scalar> LayerConstants<T> {
    /// `c_i` for layer `i ≥ 2`.
    pub fn get(&self, layer: usize) -> T {
        self.c[layer - 2]
    }
}

pub fn layer_constants<T: Scalar>(rho: &HomogeneousNorm<T>) -> LayerConstants<T> {
    layer_constants_with(rho, DEFAULT_SPHERE_SAMPLES)
}

pub fn layer_constants_with<T: Scalar>(rho: &HomogeneousNorm<T>, samples: usize) -> LayerConstants<T> {
    let alg = rho.algebra();
    let pts = rho.sphere_samples(samples);
    let c = (2..=alg.step())
        .map(|i| {
            let max = pts
                .iter()
                .map(|x| x[alg.layer(i)].iter().fold(T::zero(), |s, &v| s + v * v).sqrt())
                .fold(T::zero(), T::max);
            max * T::lit(LAYER_MARGIN)
        })
        .collect();
    LayerConstants { c, samples }
}

/// Ball–box comparison: `Box(0,R1) ⊆ B_ρ(0,1) ⊆ Box(0,R2)` with
/// `Box(0,r) = {|x_I| ≤ r^{ord I}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricFactorBounds<T> {
    pub r1: T,
    pub r2: T,
    pub k1: T,
    pub k2: T,
}

pub fn metric_factor_bounds<T: Scalar>(rho: &HomogeneousNorm<T>) -> MetricFactorBounds<T> {
    metric_factor_bounds_with(rho, DEFAULT_SPHERE_SAMPLES)
}

pub fn metric_factor_bounds_with<T: Scalar>(rho: &HomogeneousNorm<T>, samples: usize) -> MetricFactorBounds<T> {
    let alg = rho.algebra();
    let n = alg.n();
    let box_gauge = |x: &[T]| {
        x.iter()
            .enumerate()
            .map(|(i, &v)| v.abs().powf(T::one() / T::lit(alg.ord(i) as f64)))
            .fold(T::zero(), T::max)
    };
    // Largest ρ on the unit box surface: corners, then Halton points pushed
    // onto the surface by the dilations.
    let mut rho_on_box = T::zero();
    for mask in 0..(1usize << n) {
        let x: Vec<T> = (0..n).map(|i| if mask >> i & 1 == 1 { T::one() } else { -T::one() }).collect();
        rho_on_box = rho_on_box.max(rho.eval(&x));
    }
    for idx in 1..=samples {
        let x: Vec<T> = halton(idx, n).iter().map(|&v| T::lit(2.0 * v - 1.0)).collect();
        let b = box_gauge(&x);
        if b > T::lit(1e-6) {
            rho_on_box = rho_on_box.max(rho.eval(&alg.dilate_coords(T::one() / b, &x)));
        }
    }
    let r1 = T::one() / rho_on_box;
    let r2 = rho.sphere_samples(samples).iter().map(|x| box_gauge(x)).fold(T::zero(), T::max);
    let qm1 = (alg.q() - 1) as i32;
    let two = T::lit(2.0);
    MetricFactorBounds {
        r1,
        r2,
        k1: (two * r1).powi(qm1),
        k2: T::lit(((n - 1) as f64).sqrt()) * (two * r2).powi(qm1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h1_korany() -> HomogeneousNorm<f64> {
        HomogeneousNorm::new(NormKind::Korany, Arc::new(StratifiedAlgebra::heisenberg(1))).unwrap()
    }

    #[test]
    fn korany_values() {
        let r = h1_korany();
        assert_eq!(r.eval(&[1.0, 0.0, 0.0]), 1.0);
        assert!((r.eval(&[0.0, 0.0, 1.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn korany_gradient_at_horizontal_unit() {
        let r = h1_korany();
        let g = r.grad_frame(&[1.0, 0.0, 0.0]).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-15 && g[1].abs() < 1e-15 && g[2].abs() < 1e-15);
    }

    #[test]
    fn korany_refused_on_engel() {
        let e = Arc::new(StratifiedAlgebra::<f64>::engel());
        assert!(HomogeneousNorm::new(NormKind::Korany, e.clone()).is_err());
        assert!(HomogeneousNorm::new(NormKind::PowerLambda(8), e.clone()).is_err());
        assert!(HomogeneousNorm::new(NormKind::PowerLambda(12), e).is_ok());
    }

    #[test]
    fn layer_constants_h1() {
        let c = layer_constants(&h1_korany());
        assert!((c.get(2) - 0.25 * LAYER_MARGIN).abs() < 1e-12);
        let l4: HomogeneousNorm<f64> = HomogeneousNorm::new(NormKind::PowerLambda(4), Arc::new(StratifiedAlgebra::heisenberg(1))).unwrap();
        assert!((layer_constants(&l4).get(2) - LAYER_MARGIN).abs() < 1e-12);
        let abelian = StratifiedAlgebra::<f64>::new(crate::algebra::StructureTable::zeros(vec![3])).unwrap();
        let e = HomogeneousNorm::new(NormKind::PowerLambda(2), Arc::new(abelian)).unwrap();
        assert!(layer_constants(&e).c.is_empty());
    }

    #[test]
    fn korany_box_radii() {
        let b = metric_factor_bounds(&h1_korany());
        assert!((b.r1 - 20f64.powf(-0.25)).abs() < 1e-12);
        assert!((b.r2 - 1.0).abs() < 1e-12);
    }
}

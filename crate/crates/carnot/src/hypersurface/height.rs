use std::fmt;
use std::sync::Arc;

/// Sparse polynomial: `Σ coef · Π z_j^{e_j}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    pub terms: Vec<(Vec<u32>, f64)>,
}

impl Polynomial {
    pub fn new(terms: Vec<(Vec<u32>, f64)>) -> Self {
        Self { terms }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Linear form `Σ a_j z_j`.
    pub fn linear(a: &[f64]) -> Self {
        let m = a.len();
        Self::new(
            a.iter()
                .enumerate()
                .filter(|(_, &c)| c != 0.0)
                .map(|(j, &c)| {
                    let mut e = vec![0; m];
                    e[j] = 1;
                    (e, c)
                })
                .collect(),
        )
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(z).map(|(&p, &x)| x.powi(p as i32)).product::<f64>())
            .sum()
    }

    /// Partial derivative of the given multi-order, as a polynomial.
    pub fn derivative(&self, order: &[u32]) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter_map(|(e, c)| {
                let mut coef = *c;
                let mut out = e.clone();
                for (j, &k) in order.iter().enumerate() {
                    if e[j] < k {
                        return None;
                    }
                    for s in 0..k {
                        coef *= (e[j] - s) as f64;
                    }
                    out[j] = e[j] - k;
                }
                Some((out, coef))
            })
            .collect();
        Polynomial { terms }
    }

    pub fn gradient(&self, z: &[f64]) -> Vec<f64> {
        (0..z.len())
            .map(|j| {
                let mut o = vec![0; z.len()];
                o[j] = 1;
                self.derivative(&o).eval(z)
            })
            .collect()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e.iter().sum()).max().unwrap_or(0)
    }
}

pub type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Height function `ψ` of a graph.
#[derive(Clone)]
pub enum Height {
    Poly(Polynomial),
    /// `sign·sqrt(R² − z_var²)`.
    CircleArc { radius: f64, var: usize, sign: f64 },
    /// `sign·sqrt(c⁴ − |z|⁴)/4`: a cap of the Korány sphere of radius `c`.
    KoranyCap { c4: f64, sign: f64 },
    /// Any smooth evaluator; derivatives by central differences.
    Custom(Evaluator),
}

impl fmt::Debug for Height {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Height::Poly(p) => f.debug_tuple("Poly").field(p).finish(),
            Height::CircleArc { radius, var, sign } => {
                write!(f, "CircleArc {{ radius: {radius}, var: {var}, sign: {sign} }}")
            }
            Height::KoranyCap { c4, sign } => write!(f, "KoranyCap {{ c4: {c4}, sign: {sign} }}"),
            Height::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// Step for differentiating custom evaluators.
const FD_STEP: f64 = 1e-6;

impl Height {
    pub fn value(&self, z: &[f64]) -> f64 {
        match self {
            Height::Poly(p) => p.eval(z),
            Height::CircleArc { radius, var, sign } => sign * (radius * radius - z[*var] * z[*var]).max(0.0).sqrt(),
            Height::KoranyCap { c4, sign } => {
                let r2 = z[0] * z[0] + z[1] * z[1];
                sign * (c4 - r2 * r2).max(0.0).sqrt() / 4.0
            }
            Height::Custom(f) => f(z),
        }
    }

    pub fn gradient(&self, z: &[f64]) -> Vec<f64> {
        match self {
            Height::Poly(p) => p.gradient(z),
            Height::CircleArc { radius, var, sign } => {
                let root = (radius * radius - z[*var] * z[*var]).sqrt();
                let mut g = vec![0.0; z.len()];
                g[*var] = -sign * z[*var] / root;
                g
            }
            Height::KoranyCap { c4, sign } => {
                let r2 = z[0] * z[0] + z[1] * z[1];
                let root = (c4 - r2 * r2).sqrt();
                z.iter().map(|&zi| -sign * r2 * zi / (2.0 * root)).collect()
            }
            Height::Custom(f) => {
                let mut w = z.to_vec();
                (0..z.len())
                    .map(|j| {
                        let h = FD_STEP * z[j].abs().max(1.0);
                        w[j] = z[j] + h;
                        let p = f(&w);
                        w[j] = z[j] - h;
                        let m = f(&w);
                        w[j] = z[j];
                        (p - m) / (2.0 * h)
                    })
                    .collect()
            }
        }
    }

    pub fn as_polynomial(&self) -> Option<&Polynomial> {
        match self {
            Height::Poly(p) => Some(p),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives() {
        let p = Polynomial::new(vec![(vec![2, 1], 3.0), (vec![0, 1], -1.0)]);
        assert_eq!(p.eval(&[2.0, 5.0]), 55.0);
        assert_eq!(p.gradient(&[2.0, 5.0]), vec![60.0, 11.0]);
        assert_eq!(p.derivative(&[2, 1]).eval(&[0.0, 0.0]), 6.0);
    }

    #[test]
    fn analytic_gradients_match_differences() {
        for h in [Height::CircleArc { radius: 1.3, var: 0, sign: -1.0 }, Height::KoranyCap { c4: 2.0, sign: 1.0 }] {
            let z = [0.31, -0.42];
            let f = h.clone();
            let num = Height::Custom(Arc::new(move |z: &[f64]| f.value(z))).gradient(&z);
            for (a, b) in h.gradient(&z).iter().zip(&num) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }
}

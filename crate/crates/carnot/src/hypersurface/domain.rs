use serde::{Deserialize, Serialize};

/// Parameter domain of a patch. `Polar` maps `(r, θ)` to `center + r(cos θ, sin θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Polar { center: [f64; 2], r: [f64; 2], theta: [f64; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Lo,
    Hi,
}

/// A face `{u_axis = lo or hi}` of the parameter box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Face {
    pub axis: usize,
    pub side: Side,
}

impl Face {
    pub fn new(axis: usize, side: Side) -> Self {
        Self { axis, side }
    }

    /// Sign of the outward parameter direction.
    pub fn outward(&self) -> f64 {
        match self.side {
            Side::Lo => -1.0,
            Side::Hi => 1.0,
        }
    }
}

impl Domain {
    pub fn square(half: f64, dim: usize) -> Self {
        Domain::Box { lo: vec![-half; dim], hi: vec![half; dim] }
    }

    pub fn disk(radius: f64) -> Self {
        Domain::Polar { center: [0.0, 0.0], r: [0.0, radius], theta: [0.0, 2.0 * std::f64::consts::PI] }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lo, .. } => lo.len(),
            Domain::Polar { .. } => 2,
        }
    }

    /// The box of parameters `u`.
    pub fn param_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Box { lo, hi } => (lo.clone(), hi.clone()),
            Domain::Polar { r, theta, .. } => (vec![r[0], theta[0]], vec![r[1], theta[1]]),
        }
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        let (lo, hi) = self.param_box();
        u.len() == lo.len() && u.iter().zip(lo.iter().zip(&hi)).all(|(x, (a, b))| *x >= *a && *x <= *b)
    }

    /// Graph coordinates `ζ` of parameter `u`.
    pub fn map(&self, u: &[f64]) -> Vec<f64> {
        match self {
            Domain::Box { .. } => u.to_vec(),
            Domain::Polar { center, .. } => {
                let (s, c) = u[1].sin_cos();
                vec![center[0] + u[0] * c, center[1] + u[0] * s]
            }
        }
    }

    /// `∂ζ/∂u` as rows `[i][j] = ∂ζ_i/∂u_j`.
    pub fn jacobian(&self, u: &[f64]) -> Vec<Vec<f64>> {
        match self {
            Domain::Box { lo, .. } => {
                let m = lo.len();
                (0..m).map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
            }
            Domain::Polar { .. } => {
                let (s, c) = u[1].sin_cos();
                vec![vec![c, -u[0] * s], vec![s, u[0] * c]]
            }
        }
    }

    /// `det ∂ζ/∂u` (nonnegative).
    pub fn jacobian_det(&self, u: &[f64]) -> f64 {
        match self {
            Domain::Box { .. } => 1.0,
            Domain::Polar { .. } => u[0].abs(),
        }
    }

    /// Faces that carry positive measure: degenerate `r = 0` faces and the
    /// seam of a full turn are dropped.
    pub fn faces(&self) -> Vec<Face> {
        let all = (0..self.dim()).flat_map(|a| [Face::new(a, Side::Lo), Face::new(a, Side::Hi)]);
        match self {
            Domain::Box { .. } => all.collect(),
            Domain::Polar { r, theta, .. } => {
                let full = (theta[1] - theta[0] - 2.0 * std::f64::consts::PI).abs() < 1e-12;
                all.filter(|f| match (f.axis, f.side) {
                    (0, Side::Lo) => r[0] > 0.0,
                    (1, _) => !full,
                    _ => true,
                })
                .collect()
            }
        }
    }
}

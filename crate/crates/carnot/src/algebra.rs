//! Stratified nilpotent Lie algebras and their Carnot groups in exponential
//! coordinates of the first kind.
//!
//! Indices follow the graded ordering: the first `h_1` coordinates are the
//! horizontal layer, the next `h_2` the second layer and so on, so every
//! layer projection is a contiguous slice.

use std::ops::Range;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::scalar::Scalar;

/// Largest step for which the truncated BCH product below is exact.
pub const MAX_STEP: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("algebra refused: {0}")]
    Refused(String),
    #[error("algebra config: {0}")]
    Config(String),
    #[error("tangent vectors live at different base points")]
    BaseMismatch,
}

/// Raw structure data before validation: growth vector and `C[R][I][J]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTable<T> {
    pub growth: Vec<usize>,
    /// Flattened `C[R][I][J] = <[X_I, X_J], X_R>`, index `(R * n + I) * n + J`.
    pub constants: Vec<T>,
}

impl<T: Scalar> StructureTable<T> {
    pub fn zeros(growth: Vec<usize>) -> Self {
        let n: usize = growth.iter().sum();
        Self { growth, constants: vec![T::zero(); n * n * n] }
    }

    pub fn n(&self) -> usize {
        self.growth.iter().sum()
    }

    #[inline]
    pub fn get(&self, r: usize, i: usize, j: usize) -> T {
        let n = self.n();
        self.constants[(r * n + i) * n + j]
    }

    /// Sets `C[r][i][j] = v` and `C[r][j][i] = -v` (zero-based indices).
    pub fn set_skew(&mut self, r: usize, i: usize, j: usize, v: T) {
        let n = self.n();
        self.constants[(r * n + i) * n + j] = v;
        self.constants[(r * n + j) * n + i] = -v;
    }

    fn ord(&self) -> Vec<usize> {
        self.growth
            .iter()
            .enumerate()
            .flat_map(|(layer, &h)| std::iter::repeat(layer + 1).take(h))
            .collect()
    }
}

/// Outcome of [`verify_structure`].
#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub skew_symmetry: bool,
    pub jacobi: bool,
    pub grading: bool,
    pub layer_generation: bool,
    pub homogeneous_dimension: usize,
    pub failures: Vec<String>,
}

impl StructureReport {
    pub fn passed(&self) -> bool {
        self.skew_symmetry && self.jacobi && self.grading && self.layer_generation
    }
}

/// Checks skew-symmetry, Jacobi, grading and generation of each layer by
/// brackets with the first one.
pub fn verify_structure<T: Scalar>(table: &StructureTable<T>) -> StructureReport {
    let n = table.n();
    let tol = T::epsilon().sqrt() * T::lit(10.0);
    let ord = table.ord();
    let k = table.growth.len();
    let mut failures = Vec::new();

    let dims_ok = table.constants.len() == n * n * n && table.growth.iter().all(|&h| h > 0);
    if !dims_ok {
        failures.push(format!(
            "constant table has {} entries, expected {} (growth {:?})",
            table.constants.len(),
            n * n * n,
            table.growth
        ));
        return StructureReport {
            skew_symmetry: false,
            jacobi: false,
            grading: false,
            layer_generation: false,
            homogeneous_dimension: 0,
            failures,
        };
    }
    let c = |r: usize, i: usize, j: usize| table.get(r, i, j);

    let mut skew = true;
    for r in 0..n {
        for i in 0..n {
            for j in 0..n {
                if (c(r, i, j) + c(r, j, i)).abs() > tol {
                    if skew {
                        failures.push(format!("C[{r}][{i}][{j}] is not skew"));
                    }
                    skew = false;
                }
            }
        }
    }

    // [[X_L, X_M], X_R] + [[X_M, X_R], X_L] + [[X_R, X_L], X_M] = 0, component I.
    let mut jacobi = true;
    'outer: for i in 0..n {
        for l in 0..n {
            for m in 0..n {
                for r in 0..n {
                    let mut s = T::zero();
                    for j in 0..n {
                        s = s + c(j, l, m) * c(i, j, r) + c(j, m, r) * c(i, j, l) + c(j, r, l) * c(i, j, m);
                    }
                    if s.abs() > tol {
                        failures.push(format!("Jacobi identity fails at I={i}, L={l}, M={m}, R={r}"));
                        jacobi = false;
                        break 'outer;
                    }
                }
            }
        }
    }

    let mut grading = true;
    for r in 0..n {
        for i in 0..n {
            for j in 0..n {
                if c(r, i, j).abs() > tol && ord[r] != ord[i] + ord[j] {
                    if grading {
                        failures.push(format!(
                            "[X_{i}, X_{j}] has a component along X_{r} outside layer {}",
                            ord[i] + ord[j]
                        ));
                    }
                    grading = false;
                }
            }
        }
    }

    let mut generation = true;
    let offsets = layer_offsets(&table.growth);
    for layer in 2..=k {
        let target = offsets[layer - 1]..offsets[layer];
        let mut rows: Vec<Vec<T>> = Vec::new();
        for a in offsets[0]..offsets[1] {
            for b in offsets[layer - 2]..offsets[layer - 1] {
                rows.push(target.clone().map(|r| c(r, a, b)).collect());
            }
        }
        let rank = matrix_rank(&mut rows, tol);
        if rank != table.growth[layer - 1] {
            failures.push(format!(
                "[H_1, H_{}] spans a {rank}-dimensional subspace of H_{layer} (dimension {})",
                layer - 1,
                table.growth[layer - 1]
            ));
            generation = false;
        }
    }

    StructureReport {
        skew_symmetry: skew,
        jacobi,
        grading,
        layer_generation: generation,
        homogeneous_dimension: ord.iter().sum(),
        failures,
    }
}

fn layer_offsets(growth: &[usize]) -> Vec<usize> {
    let mut off = vec![0];
    for h in growth {
        off.push(off.last().unwrap() + h);
    }
    off
}

fn matrix_rank<T: Scalar>(rows: &mut [Vec<T>], tol: T) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let pivot = (rank..rows.len()).max_by(|&a, &b| {
            rows[a][col].abs().partial_cmp(&rows[b][col].abs()).unwrap_or(std::cmp::Ordering::Equal)
        });
        let Some(p) = pivot else { break };
        if rows[p][col].abs() <= tol {
            continue;
        }
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank {
                let f = rows[r][col] / rows[rank][col];
                for c in col..cols {
                    let v = rows[rank][c];
                    rows[r][c] = rows[r][c] - f * v;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// A point of the group in exponential coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPoint<T> {
    pub coords: Vec<T>,
}

impl<T: Scalar> GroupPoint<T> {
    pub fn new(coords: Vec<T>) -> Self {
        Self { coords }
    }

    pub fn identity(n: usize) -> Self {
        Self { coords: vec![T::zero(); n] }
    }

    pub fn inverse(&self) -> Self {
        Self { coords: self.coords.iter().map(|&c| -c).collect() }
    }
}

/// Tangent data in the left-invariant frame `X_1..X_n` at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector<T> {
    pub frame_coords: Vec<T>,
    pub base: GroupPoint<T>,
}

impl<T: Scalar> TangentVector<T> {
    pub fn norm(&self) -> T {
        self.frame_coords.iter().fold(T::zero(), |s, &c| s + c * c).sqrt()
    }
}

/// A validated stratified algebra. Construction runs [`verify_structure`]
/// and refuses any failing table.
#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedAlgebra<T> {
    table: StructureTable<T>,
    ord: Vec<usize>,
    offsets: Vec<usize>,
    /// Nonzero constants as `(R, I, J, C[R][I][J])`.
    sparse: Vec<(usize, usize, usize, T)>,
}

impl<T: Scalar> StratifiedAlgebra<T> {
    pub fn new(table: StructureTable<T>) -> Result<Self, AlgebraError> {
        let report = verify_structure(&table);
        if !report.passed() {
            return Err(AlgebraError::Refused(report.failures.join("; ")));
        }
        if table.growth.len() > MAX_STEP {
            return Err(AlgebraError::Refused(format!(
                "step {} exceeds the supported maximum {MAX_STEP}",
                table.growth.len()
            )));
        }
        let n = table.n();
        let mut sparse = Vec::new();
        for r in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let v = table.get(r, i, j);
                    if v != T::zero() {
                        sparse.push((r, i, j, v));
                    }
                }
            }
        }
        Ok(Self { ord: table.ord(), offsets: layer_offsets(&table.growth), table, sparse })
    }

    /// Heisenberg group `H^m`: `[X_{2j-1}, X_{2j}] = X_{2m+1}`.
    pub fn heisenberg(m: usize) -> Self {
        assert!(m >= 1, "Heisenberg rank must be positive");
        let mut t = StructureTable::zeros(vec![2 * m, 1]);
        for j in 0..m {
            t.set_skew(2 * m, 2 * j, 2 * j + 1, T::one());
        }
        Self::new(t).expect("Heisenberg table is valid")
    }

    /// Engel group, growth `(2,1,1)`: `[X1,X2]=X3`, `[X1,X3]=X4`, `[X2,X3]=X4`.
    pub fn engel() -> Self {
        let mut t = StructureTable::zeros(vec![2, 1, 1]);
        t.set_skew(2, 0, 1, T::one());
        t.set_skew(3, 0, 2, T::one());
        t.set_skew(3, 1, 2, T::one());
        Self::new(t).expect("Engel table is valid")
    }

    /// Built-in presets: `h1`, `h2`, `h3`, `engel`.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "h1" | "H1" | "heisenberg" => Some(Self::heisenberg(1)),
            "h2" | "H2" => Some(Self::heisenberg(2)),
            "h3" | "H3" => Some(Self::heisenberg(3)),
            "engel" => Some(Self::engel()),
            _ => None,
        }
    }

    /// Loads a TOML file with `growth = [..]` and `constants = [[R, I, J, value], ..]`
    /// (one-based indices). Missing skew partners are filled in.
    pub fn from_toml_file(path: &Path) -> Result<Self, AlgebraError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AlgebraError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, AlgebraError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct File {
            n: Option<usize>,
            growth: Vec<usize>,
            #[serde(default)]
            constants: Vec<(usize, usize, usize, f64)>,
        }
        let file: File = toml::from_str(text).map_err(|e| AlgebraError::Config(e.to_string()))?;
        let mut table = StructureTable::<T>::zeros(file.growth);
        let n = table.n();
        if let Some(declared) = file.n {
            if declared != n {
                return Err(AlgebraError::Config(format!("n = {declared} but growth sums to {n}")));
            }
        }
        let mut given = vec![false; n * n * n];
        for &(r, i, j, v) in &file.constants {
            if r == 0 || i == 0 || j == 0 || r > n || i > n || j > n {
                return Err(AlgebraError::Config(format!("constant index ({r},{i},{j}) outside 1..={n}")));
            }
            let (r, i, j) = (r - 1, i - 1, j - 1);
            let idx = (r * n + i) * n + j;
            table.constants[idx] = T::lit(v);
            given[idx] = true;
            let mirror = (r * n + j) * n + i;
            if !given[mirror] {
                table.constants[mirror] = T::lit(-v);
            }
        }
        Self::new(table)
    }

    pub fn table(&self) -> &StructureTable<T> {
        &self.table
    }

    pub fn n(&self) -> usize {
        self.ord.len()
    }

    pub fn step(&self) -> usize {
        self.table.growth.len()
    }

    pub fn growth(&self) -> &[usize] {
        &self.table.growth
    }

    /// Layer (1-based) of coordinate `idx` (0-based).
    pub fn ord(&self, idx: usize) -> usize {
        self.ord[idx]
    }

    pub fn ords(&self) -> &[usize] {
        &self.ord
    }

    /// Dimension of the horizontal layer.
    pub fn h(&self) -> usize {
        self.table.growth[0]
    }

    /// Homogeneous dimension `Q = Σ i·h_i`.
    pub fn q(&self) -> usize {
        self.ord.iter().sum()
    }

    /// Index range of layer `i` (1-based).
    pub fn layer(&self, i: usize) -> Range<usize> {
        self.offsets[i - 1]..self.offsets[i]
    }

    /// Indices of the second layer `H_2` (empty for abelian groups).
    pub fn second_layer(&self) -> Range<usize> {
        if self.step() >= 2 {
            self.layer(2)
        } else {
            0..0
        }
    }

    #[inline]
    pub fn constant(&self, r: usize, i: usize, j: usize) -> T {
        self.table.get(r, i, j)
    }

    /// Lie bracket of two algebra elements given in coordinates.
    pub fn bracket_coords(&self, u: &[T], v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n()];
        for &(r, i, j, c) in &self.sparse {
            out[r] = out[r] + c * u[i] * v[j];
        }
        out
    }

    fn check_len(&self, len: usize) -> Result<(), AlgebraError> {
        if len == self.n() {
            Ok(())
        } else {
            Err(AlgebraError::DimensionMismatch { expected: self.n(), got: len })
        }
    }

    /// BCH product on coordinate slices; lengths must equal `n`.
    pub fn mul(&self, x: &[T], y: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.n());
        debug_assert_eq!(y.len(), self.n());
        let mut out: Vec<T> = x.iter().zip(y).map(|(&a, &b)| a + b).collect();
        let k = self.step();
        if k < 2 {
            return out;
        }
        let xy = self.bracket_coords(x, y);
        let half = T::lit(0.5);
        for (o, b) in out.iter_mut().zip(&xy) {
            *o = *o + half * *b;
        }
        if k < 3 {
            return out;
        }
        let x_xy = self.bracket_coords(x, &xy);
        let y_xy = self.bracket_coords(y, &xy);
        let twelfth = T::lit(1.0 / 12.0);
        for idx in 0..out.len() {
            out[idx] = out[idx] + twelfth * (x_xy[idx] - y_xy[idx]);
        }
        if k < 4 {
            return out;
        }
        let y_x_xy = self.bracket_coords(y, &x_xy);
        let c4 = T::lit(1.0 / 24.0);
        for idx in 0..out.len() {
            out[idx] = out[idx] - c4 * y_x_xy[idx];
        }
        out
    }

    pub fn group_mul(&self, a: &GroupPoint<T>, b: &GroupPoint<T>) -> Result<GroupPoint<T>, AlgebraError> {
        self.check_len(a.coords.len())?;
        self.check_len(b.coords.len())?;
        Ok(GroupPoint::new(self.mul(&a.coords, &b.coords)))
    }

    /// `x^{-1} • y` on slices.
    pub fn left_quotient(&self, x: &[T], y: &[T]) -> Vec<T> {
        let inv: Vec<T> = x.iter().map(|&c| -c).collect();
        self.mul(&inv, y)
    }

    /// Anisotropic dilation on slices (no check on `t`).
    pub fn dilate_coords(&self, t: T, x: &[T]) -> Vec<T> {
        x.iter().zip(&self.ord).map(|(&c, &o)| c * t.powi(o as i32)).collect()
    }

    pub fn dilate(&self, t: T, x: &GroupPoint<T>) -> Result<GroupPoint<T>, AlgebraError> {
        if !(t > T::zero()) {
            return Err(AlgebraError::Domain(format!("dilation factor must be positive, got {t}")));
        }
        self.check_len(x.coords.len())?;
        Ok(GroupPoint::new(self.dilate_coords(t, &x.coords)))
    }

    /// Columns `X_I(x) = e_I + ½[x, e_I] + (1/12)[x, [x, e_I]]`, returned
    /// row-major: `m[row][col]` is the Euclidean `row` component of `X_col`.
    pub fn frame_matrix(&self, x: &[T]) -> Vec<Vec<T>> {
        let n = self.n();
        let mut m = vec![vec![T::zero(); n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = T::one();
        }
        if self.step() < 2 {
            return m;
        }
        // ad_x as a matrix: (ad_x)[r][i] = Σ_j C[r][j][i] x_j.
        let mut ad = vec![vec![T::zero(); n]; n];
        for &(r, j, i, c) in &self.sparse {
            ad[r][i] = ad[r][i] + c * x[j];
        }
        let half = T::lit(0.5);
        let twelfth = T::lit(1.0 / 12.0);
        for r in 0..n {
            for i in 0..n {
                let mut ad2 = T::zero();
                for s in 0..n {
                    ad2 = ad2 + ad[r][s] * ad[s][i];
                }
                m[r][i] = m[r][i] + half * ad[r][i] + twelfth * ad2;
            }
        }
        m
    }

    pub fn left_invariant_frame(&self, x: &GroupPoint<T>) -> Result<Vec<Vec<T>>, AlgebraError> {
        self.check_len(x.coords.len())?;
        Ok(self.frame_matrix(&x.coords))
    }

    /// Frame coordinates of a Euclidean vector `v` at `x`: solves `M(x) a = v`.
    /// `M` is unipotent and lower block-triangular in the graded ordering.
    pub fn to_frame(&self, m: &[Vec<T>], v: &[T]) -> Vec<T> {
        let n = self.n();
        let mut a = vec![T::zero(); n];
        for r in 0..n {
            let mut s = v[r];
            for c in 0..r {
                s = s - m[r][c] * a[c];
            }
            a[r] = s;
        }
        a
    }

    /// Euclidean components of the frame vector `Σ a_I X_I(x)`.
    pub fn from_frame(&self, m: &[Vec<T>], a: &[T]) -> Vec<T> {
        m.iter().map(|row| row.iter().zip(a).fold(T::zero(), |s, (&mi, &ai)| s + mi * ai)).collect()
    }

    /// Pairings `<X_I(x), w>` against a Euclidean covector `w`, i.e. `M^T w`.
    pub fn pair_frame(&self, m: &[Vec<T>], w: &[T]) -> Vec<T> {
        let n = self.n();
        (0..n).map(|i| (0..n).fold(T::zero(), |s, r| s + m[r][i] * w[r])).collect()
    }

    /// Bracket of tangent vectors in frame coordinates.
    pub fn bracket(&self, v: &TangentVector<T>, w: &TangentVector<T>) -> Result<TangentVector<T>, AlgebraError> {
        if v.base != w.base {
            return Err(AlgebraError::BaseMismatch);
        }
        self.check_len(v.frame_coords.len())?;
        self.check_len(w.frame_coords.len())?;
        Ok(TangentVector {
            frame_coords: self.bracket_coords(&v.frame_coords, &w.frame_coords),
            base: v.base.clone(),
        })
    }

    /// `C^α_H`: the `h×h` block `(C[α][i][j])_{i,j∈H}`.
    pub fn horizontal_block(&self, alpha: usize) -> Vec<Vec<T>> {
        let h = self.h();
        (0..h).map(|i| (0..h).map(|j| self.constant(alpha, i, j)).collect()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heisenberg_group_law() {
        let g = StratifiedAlgebra::<f64>::heisenberg(1);
        assert_eq!(g.mul(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]), vec![1.0, 1.0, 0.5]);
        assert_eq!(g.q(), 4);
    }

    #[test]
    fn engel_cubic_terms_cancel() {
        let g = StratifiedAlgebra::<f64>::engel();
        let p = g.mul(&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(p, vec![1.0, 1.0, 0.5, 0.0]);
        assert_eq!(g.q(), 7);
    }

    #[test]
    fn frame_columns_h1() {
        let g = StratifiedAlgebra::<f64>::heisenberg(1);
        let m = g.frame_matrix(&[0.3, -0.7, 2.0]);
        assert_eq!([m[0][0], m[1][0], m[2][0]], [1.0, 0.0, 0.35]);
        assert_eq!([m[0][1], m[1][1], m[2][1]], [0.0, 1.0, 0.15]);
        assert_eq!([m[0][2], m[1][2], m[2][2]], [0.0, 0.0, 1.0]);
    }

    #[test]
    fn injected_grading_violation_is_flagged() {
        let mut t = StructureTable::<f64>::zeros(vec![2, 1]);
        t.set_skew(2, 0, 1, 1.0);
        t.set_skew(0, 0, 1, 1.0);
        let rep = verify_structure(&t);
        assert!(!rep.grading);
        assert!(StratifiedAlgebra::new(t).is_err());
    }

    #[test]
    fn toml_loader_fills_skew_partner() {
        let g = StratifiedAlgebra::<f64>::from_toml_str("growth = [2, 1]\nconstants = [[3, 1, 2, 1.0]]\n").unwrap();
        assert_eq!(g, StratifiedAlgebra::heisenberg(1));
        assert!(StratifiedAlgebra::<f64>::from_toml_str("growth = [2, 1]\nconstants = []\n").is_err());
    }

    #[test]
    fn to_frame_inverts_frame_matrix() {
        let g = StratifiedAlgebra::<f64>::engel();
        let x = [0.4, -1.1, 0.3, 2.0];
        let m = g.frame_matrix(&x);
        let a = [0.2, 0.5, -0.3, 1.7];
        let v = g.from_frame(&m, &a);
        let back = g.to_frame(&m, &v);
        for (p, q) in a.iter().zip(&back) {
            assert!((p - q).abs() < 1e-14);
        }
    }
}

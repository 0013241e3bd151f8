//! Small dense helpers for `n ≤ 8` matrices stored as rows.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

/// LU with partial pivoting; returns `(lu, perm, sign)` or `None` if singular.
fn lu(mut a: Vec<Vec<f64>>) -> Option<(Vec<Vec<f64>>, Vec<usize>, f64)> {
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c] == 0.0 {
            return None;
        }
        if p != c {
            a.swap(p, c);
            perm.swap(p, c);
            sign = -sign;
        }
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            a[r][c] = f;
            for k in c + 1..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    Some((a, perm, sign))
}

pub fn det(a: &[Vec<f64>]) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    match lu(a.to_vec()) {
        Some((lu, _, sign)) => (0..lu.len()).fold(sign, |d, i| d * lu[i][i]),
        None => 0.0,
    }
}

/// Solves `a x = b`; `None` for singular `a`.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let (lu, perm, _) = lu(a.to_vec())?;
    let mut x: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
    for r in 0..n {
        for c in 0..r {
            x[r] -= lu[r][c] * x[c];
        }
    }
    for r in (0..n).rev() {
        for c in r + 1..n {
            x[r] -= lu[r][c] * x[c];
        }
        x[r] /= lu[r][r];
    }
    Some(x)
}

pub fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

/// Coefficients `c` minimizing `|Σ c_j v_j − w|` for column vectors `v_j`.
pub fn least_squares(vs: &[Vec<f64>], w: &[f64]) -> Option<Vec<f64>> {
    let gram: Vec<Vec<f64>> = vs.iter().map(|a| vs.iter().map(|b| dot(a, b)).collect()).collect();
    let rhs: Vec<f64> = vs.iter().map(|a| dot(a, w)).collect();
    solve(&gram, &rhs)
}

/// `sqrt(det(V^T V))`: the volume spanned by the vectors.
pub fn gram_volume(vs: &[Vec<f64>]) -> f64 {
    let gram: Vec<Vec<f64>> = vs.iter().map(|a| vs.iter().map(|b| dot(a, b)).collect()).collect();
    det(&gram).max(0.0).sqrt()
}

/// Orthogonal projection of `w` onto the span of `vs`.
pub fn project_onto_span(vs: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; w.len()];
    if vs.is_empty() {
        return out;
    }
    if let Some(c) = least_squares(vs, w) {
        for (cj, v) in c.iter().zip(vs) {
            axpy(&mut out, *cj, v);
        }
    }
    out
}

/// Generalized cross product of `n−1` vectors in `R^n`: `⟨N, w⟩ = det[v_1 … v_{n−1} w]`.
pub fn cross(vs: &[Vec<f64>]) -> Vec<f64> {
    let n = vs.len() + 1;
    (0..n)
        .map(|k| {
            let minor: Vec<Vec<f64>> = (0..n)
                .filter(|&r| r != k)
                .map(|r| vs.iter().map(|v| v[r]).collect())
                .collect();
            let s = if (n - 1 + k) % 2 == 0 { 1.0 } else { -1.0 };
            s * det(&minor)
        })
        .collect()
}

/// Orthonormal basis of the orthogonal complement of unit `v` in `R^h`.
pub fn complement_basis(v: &[f64]) -> Vec<Vec<f64>> {
    let h = v.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(h - 1);
    let mut cands: Vec<usize> = (0..h).collect();
    // Start from the axes least aligned with v for stability.
    cands.sort_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()));
    for &i in &cands {
        if basis.len() + 1 == h {
            break;
        }
        let mut e = vec![0.0; h];
        e[i] = 1.0;
        axpy(&mut e, -v[i], v);
        for b in &basis {
            let c = dot(&e, b);
            axpy(&mut e, -c, b);
        }
        let l = norm(&e);
        if l > 1e-8 {
            basis.push(scaled(&e, 1.0 / l));
        }
    }
    basis
}

/// Spectral norm by power iteration on `AᵀA`.
pub fn operator_norm(a: &[Vec<f64>]) -> f64 {
    let n = a.first().map_or(0, Vec::len);
    if n == 0 {
        return 0.0;
    }
    let at = transpose(a);
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut lambda = 0.0;
    for _ in 0..500 {
        let y = mat_vec(&at, &mat_vec(a, &x));
        let l = norm(&y);
        if l == 0.0 {
            return 0.0;
        }
        x = scaled(&y, 1.0 / l);
        if (l - lambda).abs() <= 1e-15 * l {
            lambda = l;
            break;
        }
        lambda = l;
    }
    lambda.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_is_orthogonal_and_oriented() {
        let v = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        assert_eq!(cross(&v), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn solve_and_det() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        assert!((det(&a) - 5.0).abs() < 1e-14);
        let x = solve(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn rotation_norm_is_one() {
        assert!((operator_norm(&[vec![0.0, 1.0], vec![-1.0, 0.0]]) - 1.0).abs() < 1e-12);
    }
}

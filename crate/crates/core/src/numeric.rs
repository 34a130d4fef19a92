//! Floating-point linear algebra helpers on top of nalgebra.

use nalgebra::DMatrix;

fn to_dmatrix(rows: &[Vec<f64>], ncols: usize) -> DMatrix<f64> {
    let nrows = rows.len().max(ncols);
    DMatrix::from_fn(nrows, ncols, |i, j| if i < rows.len() { rows[i][j] } else { 0.0 })
}

/// Singular values (descending) of the matrix with the given rows.
pub fn singular_values(rows: &[Vec<f64>], ncols: usize) -> Vec<f64> {
    if rows.is_empty() || ncols == 0 {
        return Vec::new();
    }
    let m = to_dmatrix(rows, ncols);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Numerical rank with a singular-value cutoff relative to `max(σ_max, 1)`.
pub fn rank(rows: &[Vec<f64>], ncols: usize, rel_cutoff: f64) -> usize {
    let s = singular_values(rows, ncols);
    let scale = s.first().copied().unwrap_or(0.0).max(1.0);
    s.iter().filter(|&&x| x > rel_cutoff * scale).count()
}

/// Orthonormal basis of the null space `{x : rows·x = 0}` in `R^ncols`.
pub fn null_space(rows: &[Vec<f64>], ncols: usize, rel_cutoff: f64) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        return (0..ncols).map(|i| (0..ncols).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    }
    let m = to_dmatrix(rows, ncols);
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let scale = svd.singular_values.iter().copied().fold(0.0, f64::max).max(1.0);
    let mut out = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= rel_cutoff * scale {
            out.push((0..ncols).map(|j| vt[(k, j)]).collect());
        }
    }
    out
}

/// Orthonormal basis of the row space.
pub fn row_space(rows: &[Vec<f64>], ncols: usize, rel_cutoff: f64) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        return Vec::new();
    }
    let m = to_dmatrix(rows, ncols);
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let scale = svd.singular_values.iter().copied().fold(0.0, f64::max).max(1.0);
    let mut out = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > rel_cutoff * scale {
            out.push((0..ncols).map(|j| vt[(k, j)]).collect());
        }
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Component of `v` orthogonal to the span of the orthonormal `basis`.
pub fn reject(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut out = v.to_vec();
    for b in basis {
        let c = dot(&out, b);
        for (o, x) in out.iter_mut().zip(b) {
            *o -= c * x;
        }
    }
    out
}

/// Projection of `v` onto the span of the orthonormal `basis`.
pub fn project(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for b in basis {
        let c = dot(v, b);
        for (o, x) in out.iter_mut().zip(b) {
            *o += c * x;
        }
    }
    out
}

/// Inverse of a square matrix given by rows.
pub fn inverse(rows: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = rows.len();
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let inv = m.try_inverse()?;
    Some((0..n).map(|i| (0..n).map(|j| inv[(i, j)]).collect()).collect())
}

pub fn mat_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|r| dot(r, v)).collect()
}

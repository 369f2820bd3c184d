//! Fixed-size 3×3 helpers. Cofactor expansion throughout.

use crate::model::Matrix3;

pub fn det3(m: &Matrix3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn transpose(m: &Matrix3) -> Matrix3 {
    let mut t = [[0.0; 3]; 3];
    for (r, row) in m.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            t[c][r] = *v;
        }
    }
    t
}

pub fn matmul(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    let mut out = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            out[r][c] = (0..3).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

pub fn matvec(a: &Matrix3, v: &[f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|r| a[r][0] * v[0] + a[r][1] * v[1] + a[r][2] * v[2])
}

pub fn diag(d: [f64; 3]) -> Matrix3 {
    [[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]]
}

pub fn scale(m: &Matrix3, s: f64) -> Matrix3 {
    m.map(|row| row.map(|v| v * s))
}

/// Inverse through the adjugate; `None` when the determinant is zero or non-finite.
pub fn inverse3(m: &Matrix3) -> Option<Matrix3> {
    let det = det3(m);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let adj = [
        [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
        [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
        [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
    ];
    Some(scale(&adj, 1.0 / det))
}

fn norm1(m: &Matrix3) -> f64 {
    (0..3)
        .map(|c| (0..3).map(|r| m[r][c].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// 1-norm condition number `‖A‖₁ ‖A⁻¹‖₁`; infinite for singular matrices.
pub fn condition1(m: &Matrix3) -> f64 {
    match inverse3(m) {
        Some(inv) => norm1(m) * norm1(&inv),
        None => f64::INFINITY,
    }
}

pub fn outer(a: &[f64; 3], b: &[f64; 3]) -> Matrix3 {
    a.map(|x| b.map(|y| x * y))
}

pub fn add_assign(acc: &mut Matrix3, m: &Matrix3, w: f64) {
    for r in 0..3 {
        for c in 0..3 {
            acc[r][c] += w * m[r][c];
        }
    }
}

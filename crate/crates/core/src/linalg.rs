//! Small dense linear algebra over [`Scalar`] entries.

use crate::error::{Error, Result};
use crate::jet::Scalar;

pub type Matrix<S> = Vec<Vec<S>>;

/// Gauss–Jordan inverse with partial pivoting on the value parts.
pub fn inverse<S: Scalar>(m: &[Vec<S>]) -> Result<Matrix<S>> {
    let n = m.len();
    let mut a: Matrix<S> = m.to_vec();
    let mut inv: Matrix<S> = (0..n)
        .map(|i| (0..n).map(|j| m[0][0].constant_like(if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    let scale = m
        .iter()
        .flat_map(|r| r.iter().map(|v| v.value().abs()))
        .fold(0.0, f64::max)
        .max(1e-300);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].value().abs().total_cmp(&a[j][col].value().abs()))
            .expect("non-empty range");
        if a[pivot][col].value().abs() <= 1e-14 * scale || !a[pivot][col].value().is_finite() {
            return Err(Error::Singular(format!("matrix singular at column {col}")));
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let r = a[col][col].recip();
        for k in 0..n {
            a[col][k] = a[col][k].clone() * r.clone();
            inv[col][k] = inv[col][k].clone() * r.clone();
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[i][col].clone();
            for k in 0..n {
                a[i][k] = a[i][k].clone() - f.clone() * a[col][k].clone();
                inv[i][k] = inv[i][k].clone() - f.clone() * inv[col][k].clone();
            }
        }
    }
    Ok(inv)
}

/// Matrix product.
pub fn matmul<S: Scalar>(a: &[Vec<S>], b: &[Vec<S>]) -> Matrix<S> {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut acc = a[i][0].clone() * b[0][j].clone();
                    for l in 1..k {
                        acc = acc + a[i][l].clone() * b[l][j].clone();
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub fn transpose<S: Clone>(a: &[Vec<S>]) -> Matrix<S> {
    let n = a.len();
    let m = a[0].len();
    (0..m).map(|j| (0..n).map(|i| a[i][j].clone()).collect()).collect()
}

/// Value parts of a matrix.
pub fn values<S: Scalar>(a: &[Vec<S>]) -> Matrix<f64> {
    a.iter().map(|r| r.iter().map(Scalar::value).collect()).collect()
}

/// Leading principal minors all positive.
pub fn is_positive_definite(a: &[Vec<f64>]) -> bool {
    let n = a.len();
    (1..=n).all(|k| {
        let sub: Matrix<f64> = a[..k].iter().map(|r| r[..k].to_vec()).collect();
        determinant(&sub) > 0.0
    })
}

pub fn determinant(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("non-empty range");
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(col, pivot);
            det = -det;
        }
        det *= m[col][col];
        for i in col + 1..n {
            let f = m[i][col] / m[col][col];
            for k in col..n {
                m[i][k] -= f * m[col][k];
            }
        }
    }
    det
}

pub fn mat_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Bilinear form `a^T m b`.
pub fn bilinear(m: &[Vec<f64>], a: &[f64], b: &[f64]) -> f64 {
    dot(a, &mat_vec(m, b))
}

pub fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs(a: impl IntoIterator<Item = f64>) -> f64 {
    a.into_iter().fold(0.0, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;

    #[test]
    fn inverse_f64() {
        let a = vec![vec![4.0, 1.0, 0.5], vec![1.0, 3.0, 0.2], vec![0.5, 0.2, 2.0]];
        let inv = inverse(&a).unwrap();
        let id = matmul(&a, &inv);
        for i in 0..3 {
            for j in 0..3 {
                assert!((id[i][j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn inverse_jet_matches_derivative_identity() {
        // d(A^-1) = -A^-1 dA A^-1 for A(x) = [[1+x, x^2], [x^2, 2]]
        let x = Jet::seed(&[0.3], 0, 2).unwrap();
        let a = vec![
            vec![x.clone() + 1.0, &x * &x],
            vec![&x * &x, x.constant_like(2.0)],
        ];
        let inv = inverse(&a).unwrap();
        let av = values(&a);
        let iv = inverse(&av).unwrap();
        let da = vec![vec![1.0, 0.6], vec![0.6, 0.0]];
        let expected = matmul(&matmul(&iv, &da), &iv);
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv[i][j].d(0) + expected[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_rejected() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(inverse(&a).is_err());
    }

    #[test]
    fn positive_definiteness() {
        assert!(is_positive_definite(&[vec![2.0, 0.5], vec![0.5, 1.0]]));
        assert!(!is_positive_definite(&[vec![1.0, 2.0], vec![2.0, 1.0]]));
    }
}

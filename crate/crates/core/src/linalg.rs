//! Fixed-size symmetric matrix helpers for the 2x2 and 4x4 covariances.

use crate::scalar::Scalar;

pub(crate) fn is_symmetric<T: Scalar, const N: usize>(m: &[[T; N]; N]) -> bool {
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |acc, v| acc.max(v.abs()))
        .max(T::min_positive_value());
    for i in 0..N {
        for j in (i + 1)..N {
            if (m[i][j] - m[j][i]).abs() > T::tolerance() * scale {
                return false;
            }
        }
    }
    true
}

/// Cholesky factor (lower triangular), `None` when the matrix is not positive definite.
pub(crate) fn cholesky<T: Scalar, const N: usize>(m: &[[T; N]; N]) -> Option<[[T; N]; N]> {
    let mut l = [[T::zero(); N]; N];
    for i in 0..N {
        for j in 0..=i {
            let mut sum = m[i][j];
            for k in 0..j {
                sum = sum - l[i][k] * l[j][k];
            }
            if i == j {
                if !(sum > T::zero()) || !sum.is_finite() {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

/// Determinant via Gaussian elimination with partial pivoting.
pub(crate) fn determinant<T: Scalar, const N: usize>(m: &[[T; N]; N]) -> T {
    let mut a = *m;
    let mut det = T::one();
    for col in 0..N {
        let pivot = (col..N)
            .max_by(|&x, &y| {
                a[x][col]
                    .abs()
                    .partial_cmp(&a[y][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(col);
        if a[pivot][col] == T::zero() {
            return T::zero();
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det = det * a[col][col];
        for row in (col + 1)..N {
            let f = a[row][col] / a[col][col];
            for k in col..N {
                a[row][k] = a[row][k] - f * a[col][k];
            }
        }
    }
    det
}

/// `s * m * s^T`.
pub(crate) fn congruence<T: Scalar, const N: usize>(s: &[[T; N]; N], m: &[[T; N]; N]) -> [[T; N]; N] {
    let mut sm = [[T::zero(); N]; N];
    for i in 0..N {
        for j in 0..N {
            let mut acc = T::zero();
            for k in 0..N {
                acc = acc + s[i][k] * m[k][j];
            }
            sm[i][j] = acc;
        }
    }
    let mut out = [[T::zero(); N]; N];
    for i in 0..N {
        for j in 0..N {
            let mut acc = T::zero();
            for k in 0..N {
                acc = acc + sm[i][k] * s[j][k];
            }
            out[i][j] = acc;
        }
    }
    out
}

pub(crate) fn mat_vec<T: Scalar, const N: usize>(s: &[[T; N]; N], v: &[T; N]) -> [T; N] {
    let mut out = [T::zero(); N];
    for i in 0..N {
        for k in 0..N {
            out[i] = out[i] + s[i][k] * v[k];
        }
    }
    out
}

//! Small dense solvers used by the Newton iterations. Matrices are row-major.

use crate::scalar::Scalar;

/// Solves `a x = b` for square `a` by LU with partial pivoting.
///
/// Returns the solution and the ratio of the smallest to the largest pivot
/// magnitude, or `None` when a pivot is exactly zero.
pub(crate) fn lu_solve<T: Scalar>(n: usize, a: &[T], b: &[T]) -> Option<(Vec<T>, T)> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let mut min_piv = T::infinity();
    let mut max_piv = T::zero();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| {
                m[i * n + k]
                    .abs()
                    .partial_cmp(&m[j * n + k].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(k);
        let piv = m[p * n + k];
        if piv == T::zero() || !piv.is_finite() {
            return None;
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        min_piv = min_piv.min(piv.abs());
        max_piv = max_piv.max(piv.abs());
        for i in (k + 1)..n {
            let f = m[i * n + k] / piv;
            if f == T::zero() {
                continue;
            }
            for j in k..n {
                m[i * n + j] = m[i * n + j] - f * m[k * n + j];
            }
            x[i] = x[i] - f * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in (k + 1)..n {
            s = s - m[k * n + j] * x[j];
        }
        x[k] = s / m[k * n + k];
    }
    Some((x, min_piv / max_piv))
}

/// Least squares `min ||a x - b||` for `rows >= cols` by Householder QR.
/// Returns `None` when `a` is numerically rank deficient.
pub(crate) fn least_squares<T: Scalar>(
    rows: usize,
    cols: usize,
    a: &[T],
    b: &[T],
) -> Option<Vec<T>> {
    debug_assert!(rows >= cols);
    let mut r = a.to_vec();
    let mut y = b.to_vec();
    let scale = r.iter().fold(T::zero(), |s, v| s.max(v.abs()));
    if scale == T::zero() {
        return None;
    }
    let thresh = scale * T::epsilon() * T::lit(rows.max(cols) as f64 * 10.0);
    for k in 0..cols {
        let norm = (k..rows).map(|i| r[i * cols + k].powi(2)).sum::<T>().sqrt();
        if norm <= thresh {
            return None;
        }
        let alpha = if r[k * cols + k] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (k..rows).map(|i| r[i * cols + k]).collect();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().map(|&t| t * t).sum::<T>();
        if vnorm2 == T::zero() {
            continue;
        }
        for j in k..cols {
            let s = (k..rows).map(|i| v[i - k] * r[i * cols + j]).sum::<T>();
            let f = (s + s) / vnorm2;
            for i in k..rows {
                r[i * cols + j] = r[i * cols + j] - f * v[i - k];
            }
        }
        let s = (k..rows).map(|i| v[i - k] * y[i]).sum::<T>();
        let f = (s + s) / vnorm2;
        for i in k..rows {
            y[i] = y[i] - f * v[i - k];
        }
    }
    let mut x = vec![T::zero(); cols];
    for k in (0..cols).rev() {
        let mut s = y[k];
        for j in (k + 1)..cols {
            s = s - r[k * cols + j] * x[j];
        }
        x[k] = s / r[k * cols + k];
    }
    Some(x)
}

/// `a^T a` (`cols x cols`) and `a^T b`.
pub(crate) fn normal_equations<T: Scalar>(
    rows: usize,
    cols: usize,
    a: &[T],
    b: &[T],
) -> (Vec<T>, Vec<T>) {
    let mut ata = vec![T::zero(); cols * cols];
    let mut atb = vec![T::zero(); cols];
    for i in 0..rows {
        let row = &a[i * cols..(i + 1) * cols];
        for p in 0..cols {
            if row[p] == T::zero() {
                continue;
            }
            atb[p] = atb[p] + row[p] * b[i];
            for q in 0..cols {
                ata[p * cols + q] = ata[p * cols + q] + row[p] * row[q];
            }
        }
    }
    (ata, atb)
}

/// Levenberg-Marquardt step: `(a^T a + mu I) x = a^T b`.
pub(crate) fn damped_least_squares<T: Scalar>(
    rows: usize,
    cols: usize,
    a: &[T],
    b: &[T],
    mu: T,
) -> Option<Vec<T>> {
    let (mut ata, atb) = normal_equations(rows, cols, a, b);
    for p in 0..cols {
        ata[p * cols + p] = ata[p * cols + p] + mu;
    }
    lu_solve(cols, &ata, &atb).map(|(x, _)| x)
}

/// Approximate unit null vector of `a` (`rows x cols`) by inverse iteration on
/// `a^T a + delta I`, starting from `start`.
pub(crate) fn null_vector<T: Scalar>(rows: usize, cols: usize, a: &[T], start: &[T]) -> Vec<T> {
    let zero_rhs = vec![T::zero(); rows];
    let (mut m, _) = normal_equations(rows, cols, a, &zero_rhs);
    let fro2 = a.iter().map(|&v| v * v).sum::<T>();
    let delta = (fro2 * T::epsilon()).max(T::min_positive_value().sqrt());
    for p in 0..cols {
        m[p * cols + p] = m[p * cols + p] + delta;
    }
    let mut v = normalized(start);
    for _ in 0..4 {
        match lu_solve(cols, &m, &v) {
            Some((w, _)) => {
                let w = normalized(&w);
                if w.iter().any(|t| !t.is_finite()) {
                    break;
                }
                v = w;
            }
            None => break,
        }
    }
    v
}

pub(crate) fn normalized<T: Scalar>(v: &[T]) -> Vec<T> {
    let n = v.iter().map(|&t| t * t).sum::<T>().sqrt();
    if n == T::zero() || !n.is_finite() {
        let c = T::one() / T::lit(v.len() as f64).sqrt();
        return vec![c; v.len()];
    }
    v.iter().map(|&t| t / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_and_detects_singular() {
        let a = [0.0f64, 2.0, 1.0, 1.0];
        let (x, ratio) = lu_solve(2, &a, &[4.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        assert!(ratio > 0.0);
        assert!(lu_solve(2, &[1.0, 2.0, 2.0, 4.0], &[1.0, 1.0]).is_none());
    }

    #[test]
    fn qr_least_squares() {
        // fit y = c0 + c1 t through (0,1), (1,3), (2,5)
        let a = [1.0f64, 0.0, 1.0, 1.0, 1.0, 2.0];
        let x = least_squares(3, 2, &a, &[1.0, 3.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
        assert!(least_squares(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0], &[1.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn null_vector_of_rank_one() {
        let v = null_vector(2, 2, &[1.0f64, 1.0, 2.0, 2.0], &[1.0, 0.0]);
        let s = 1.0 / 2f64.sqrt();
        assert!((v[0].abs() - s).abs() < 1e-8 && (v[0] + v[1]).abs() < 1e-8);
    }
}

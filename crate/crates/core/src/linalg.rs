//! Dense square-matrix helpers for the small systems the tests and
//! regressors need.

/// Row-major square matrix inverse by Gauss-Jordan elimination with partial
/// pivoting. Returns `None` when a pivot falls below `tol` in absolute value.
pub(crate) fn invert(a: &[f64], n: usize, tol: f64) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| m[r * n + col].abs().total_cmp(&m[s * n + col].abs()))?;
        if !(m[pivot * n + col].abs() >= tol) {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
                inv.swap(pivot * n + k, col * n + k);
            }
        }
        let d = m[col * n + col];
        for k in 0..n {
            m[col * n + k] /= d;
            inv[col * n + k] /= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r * n + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..n {
                m[r * n + k] -= f * m[col * n + k];
                inv[r * n + k] -= f * inv[col * n + k];
            }
        }
    }
    Some(inv)
}

/// Solves `a x = b` for square `a`; `None` if singular at tolerance `tol`.
pub(crate) fn solve(a: &[f64], b: &[f64], n: usize, tol: f64) -> Option<Vec<f64>> {
    let inv = invert(a, n, tol)?;
    Some((0..n).map(|i| (0..n).map(|j| inv[i * n + j] * b[j]).sum()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_and_detects_singularity() {
        let a = [4.0, 7.0, 2.0, 6.0];
        let inv = invert(&a, 2, 1e-12).unwrap();
        let expect = [0.6, -0.7, -0.2, 0.4];
        for (x, y) in inv.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(invert(&[1.0, 2.0, 2.0, 4.0], 2, 1e-12).is_none());
        assert_eq!(invert(&[], 0, 1e-12), Some(vec![]));
    }

    #[test]
    fn solves_linear_system() {
        let x = solve(&[2.0, 1.0, 1.0, 3.0], &[3.0, 5.0], 2, 1e-12).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
    }
}

//! Minimal dense symmetric solver and Cholesky factorization: big enough
//! for the quantile-regression normal equations and the simulation's
//! covariance factor, nothing more.

use crate::error::{Error, Result};

/// In-place lower Cholesky factorization of a symmetric positive definite
/// matrix stored row-major. Fails on a non-positive pivot.
pub(crate) fn cholesky(a: &mut [f64], dim: usize) -> Result<()> {
    debug_assert_eq!(a.len(), dim * dim);
    for j in 0..dim {
        let mut d = a[j * dim + j];
        for k in 0..j {
            d -= a[j * dim + k] * a[j * dim + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::SingularDesign(format!(
                "non-positive pivot {d:.3e} at column {j}"
            )));
        }
        let d = d.sqrt();
        a[j * dim + j] = d;
        for i in (j + 1)..dim {
            let mut s = a[i * dim + j];
            for k in 0..j {
                s -= a[i * dim + k] * a[j * dim + k];
            }
            a[i * dim + j] = s / d;
        }
        for i in 0..j {
            a[i * dim + j] = 0.0;
        }
    }
    Ok(())
}

/// Solve L L^T x = b given the lower factor from [`cholesky`]; returns x.
pub(crate) fn cholesky_solve(l: &[f64], dim: usize, b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    for i in 0..dim {
        let mut s = x[i];
        for k in 0..i {
            s -= l[i * dim + k] * x[k];
        }
        x[i] = s / l[i * dim + i];
    }
    for i in (0..dim).rev() {
        let mut s = x[i];
        for k in (i + 1)..dim {
            s -= l[k * dim + i] * x[k];
        }
        x[i] = s / l[i * dim + i];
    }
    x
}

/// General square solve with partial pivoting; None when near singular.
pub(crate) fn solve_dense(mut a: Vec<f64>, dim: usize, mut b: Vec<f64>) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), dim * dim);
    for c in 0..dim {
        let mut piv = c;
        for r in (c + 1)..dim {
            if a[r * dim + c].abs() > a[piv * dim + c].abs() {
                piv = r;
            }
        }
        if a[piv * dim + c].abs() < 1e-12 {
            return None;
        }
        if piv != c {
            for k in 0..dim {
                a.swap(c * dim + k, piv * dim + k);
            }
            b.swap(c, piv);
        }
        for r in (c + 1)..dim {
            let f = a[r * dim + c] / a[c * dim + c];
            for k in c..dim {
                a[r * dim + k] -= f * a[c * dim + k];
            }
            b[r] -= f * b[c];
        }
    }
    for r in (0..dim).rev() {
        let mut v = b[r];
        for k in (r + 1)..dim {
            v -= a[r * dim + k] * b[k];
        }
        b[r] = v / a[r * dim + r];
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd_system() {
        // A = [[4,1],[1,3]], b = [1,2] -> x = [1/11, 7/11]
        let mut a = vec![4.0, 1.0, 1.0, 3.0];
        cholesky(&mut a, 2).unwrap();
        let x = cholesky_solve(&a, 2, &[1.0, 2.0]);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-12);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_indefinite() {
        let mut a = vec![1.0, 2.0, 2.0, 1.0];
        assert!(cholesky(&mut a, 2).is_err());
    }

    #[test]
    fn dense_solve_handles_permuted_systems() {
        // requires pivoting: leading zero
        let a = vec![0.0, 2.0, 3.0, 1.0];
        let x = solve_dense(a, 2, vec![4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 2.0).abs() < 1e-12);
        // singular matrix
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert!(solve_dense(a, 2, vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = vec![4.0, 2.0, 0.6, 2.0, 5.0, 1.2, 0.6, 1.2, 9.0];
        let mut l = a.clone();
        cholesky(&mut l, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += l[i * 3 + k] * l[j * 3 + k];
                }
                assert!((s - a[i * 3 + j]).abs() < 1e-12);
            }
        }
    }
}

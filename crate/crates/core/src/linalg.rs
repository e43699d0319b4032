//! Dense symmetric positive-definite helpers for the ≤4-parameter fits.

use crate::scalar::Scalar;

pub(crate) type Mat<T> = Vec<Vec<T>>;

pub(crate) fn zeros<T: Scalar>(n: usize) -> Mat<T> {
    vec![vec![T::zero(); n]; n]
}

/// Lower Cholesky factor, or `None` when `a` is not numerically SPD.
pub(crate) fn cholesky<T: Scalar>(a: &Mat<T>) -> Option<Mat<T>> {
    let n = a.len();
    let mut l = zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s = s - l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > T::zero()) || !s.is_finite() {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

pub(crate) fn cholesky_solve<T: Scalar>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    let n = l.len();
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s = s - l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

pub(crate) fn invert_spd<T: Scalar>(a: &Mat<T>) -> Option<Mat<T>> {
    let n = a.len();
    let l = cholesky(a)?;
    let mut inv = zeros(n);
    for j in 0..n {
        let mut e = vec![T::zero(); n];
        e[j] = T::one();
        let col = cholesky_solve(&l, &e);
        for i in 0..n {
            inv[i][j] = col[i];
        }
    }
    symmetrize(&mut inv);
    Some(inv)
}

pub(crate) fn symmetrize<T: Scalar>(a: &mut Mat<T>) {
    let n = a.len();
    for i in 0..n {
        for j in i + 1..n {
            let m = (a[i][j] + a[j][i]) * T::half();
            a[i][j] = m;
            a[j][i] = m;
        }
    }
}

/// Unit-diagonal rescaling `D^{-1/2} A D^{-1/2}`; `None` if a diagonal
/// entry is not positive.
pub(crate) fn correlation_form<T: Scalar>(a: &Mat<T>) -> Option<Mat<T>> {
    let n = a.len();
    let d: Vec<T> = (0..n).map(|i| a[i][i]).collect();
    if d.iter().any(|&x| !(x > T::zero())) {
        return None;
    }
    let mut out = zeros(n);
    for i in 0..n {
        for j in 0..n {
            out[i][j] = a[i][j] / (d[i] * d[j]).sqrt();
        }
    }
    Some(out)
}

//! Dense symmetric eigensolver: Householder tridiagonalization followed by the
//! implicit QL iteration, and the top eigenpair of a symmetric tridiagonal
//! matrix by QL plus shifted inverse iteration.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Reduces the symmetric row-major matrix `v` (overwritten with the orthogonal
/// transformation when `vectors` is set) to tridiagonal form. Returns the
/// diagonal and the off-diagonal, `off[i]` coupling `i` and `i + 1`.
fn tridiagonalize<T: Real>(v: &mut [T], n: usize, vectors: bool) -> (Vec<T>, Vec<T>) {
    let mut d: Vec<T> = (0..n).map(|j| v[(n - 1) * n + j]).collect();
    let mut e = vec![T::zero(); n];
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for x in &d[..i] {
            scale += x.abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = T::zero();
                v[j * n + i] = T::zero();
            }
        } else {
            for x in d[..i].iter_mut() {
                *x /= scale;
                h += *x * *x;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[j * n + i] = f;
                g = e[j] + v[j * n + j] * f;
                for k in j + 1..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = T::zero();
            }
        }
        d[i] = h;
    }
    if !vectors {
        let diag: Vec<T> = (0..n).map(|i| v[i * n + i]).collect();
        let mut off: Vec<T> = e[1..].to_vec();
        off.push(T::zero());
        return (diag, off);
    }
    for i in 0..n.saturating_sub(1) {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = T::zero();
    }
    v[n * n - 1] = T::one();
    let mut off: Vec<T> = e[1..].to_vec();
    off.push(T::zero());
    (d, off)
}

/// Implicit QL on a symmetric tridiagonal matrix. `off` has length `n` with
/// `off[n-1] = 0`. When `z` is given (row-major `n × n`, initially the
/// accumulated transformation), its columns become eigenvectors.
fn tql<T: Real>(d: &mut [T], off: &mut [T], mut z: Option<&mut [T]>) -> Result<()> {
    let n = d.len();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    let two = T::lit(2.0);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + off[l].abs());
        let mut m = l;
        while m < n - 1 && off[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::EigenNonConvergence { rayleigh: f64::NAN, residual: off[l].abs().as_f64(), iterations: iter });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * off[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = off[l] / (p + r);
                d[l + 1] = off[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = off[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * off[i];
                    h = c * p;
                    r = p.hypot(off[i]);
                    off[i + 1] = s * r;
                    s = off[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        for k in 0..n {
                            let zk1 = z[k * n + i + 1];
                            z[k * n + i + 1] = s * z[k * n + i] + c * zk1;
                            z[k * n + i] = c * z[k * n + i] - s * zk1;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * off[l] / dl1;
                off[l] = s * p;
                d[l] = c * p;
                if off[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        off[l] = T::zero();
    }
    Ok(())
}

/// Eigen-decomposition of a symmetric row-major `n × n` matrix.
///
/// Eigenvalues are ascending; column `j` of the returned row-major matrix is
/// the eigenvector of eigenvalue `j`.
pub fn symmetric_eigen<T: Real>(mut a: Vec<T>, n: usize) -> Result<(Vec<T>, Vec<T>)> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let (mut d, mut off) = tridiagonalize(&mut a, n, true);
    tql(&mut d, &mut off, Some(&mut a))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = vec![T::zero(); n * n];
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[k * n + new] = a[k * n + old];
        }
    }
    Ok((values, vectors))
}

/// Ascending eigenvalues of a symmetric row-major matrix.
pub fn symmetric_eigenvalues<T: Real>(mut a: Vec<T>, n: usize) -> Result<Vec<T>> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok(Vec::new());
    }
    let (mut d, mut off) = tridiagonalize(&mut a, n, false);
    tql(&mut d, &mut off, None)?;
    d.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    Ok(d)
}

/// Ascending eigenvalues of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off` (`off.len() == diag.len() - 1`).
pub fn tridiagonal_eigenvalues<T: Real>(diag: &[T], off: &[T]) -> Result<Vec<T>> {
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.resize(d.len(), T::zero());
    tql(&mut d, &mut e, None)?;
    d.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    Ok(d)
}

/// Largest eigenvalue and its unit eigenvector of a symmetric tridiagonal matrix.
///
/// The eigenvalue comes from QL; the vector from inverse iteration with a shift
/// just above it, where `A - σI` is negative definite so the LDLᵀ sweep needs
/// no pivoting.
pub fn tridiagonal_top_pair<T: Real>(diag: &[T], off: &[T]) -> Result<(T, Vec<T>)> {
    let n = diag.len();
    let values = tridiagonal_eigenvalues(diag, off)?;
    let top = values[n - 1];
    if n == 1 {
        return Ok((top, vec![T::one()]));
    }
    let scale = diag.iter().chain(off).fold(T::zero(), |m, x| m.max(x.abs())) + T::one();
    let sigma = top + scale * T::epsilon().powf(T::lit(0.625));
    let mut x = vec![T::one(); n];
    let mut piv = vec![T::zero(); n];
    for _ in 0..6 {
        // Solve (A - σI) y = x by forward elimination and back substitution.
        piv[0] = diag[0] - sigma;
        let mut rhs = x.clone();
        for i in 1..n {
            let m = off[i - 1] / piv[i - 1];
            piv[i] = diag[i] - sigma - m * off[i - 1];
            rhs[i] = rhs[i] - m * rhs[i - 1];
        }
        x[n - 1] = rhs[n - 1] / piv[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (rhs[i] - off[i] * x[i + 1]) / piv[i];
        }
        let nrm = super::operator::norm(&x);
        for xi in x.iter_mut() {
            *xi /= nrm;
        }
    }
    Ok((top, x))
}

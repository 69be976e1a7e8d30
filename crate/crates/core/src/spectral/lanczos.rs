use super::dense::tridiagonal_top_pair;
use super::operator::{dot, norm, LatticeOperator};
use super::EigenResult;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Lanczos with full reorthogonalization and explicit restarts from the
/// current Ritz vector. The first cycle starts from the all-ones vector.
pub fn lanczos_principal<T: Real>(
    op: &LatticeOperator<T>,
    tol: T,
    max_basis: usize,
    max_restarts: usize,
) -> Result<EigenResult<T>> {
    let n = op.dim();
    let m = max_basis.min(n).max(1);
    let mut start = vec![T::one() / T::from_count(n).sqrt(); n];
    let mut iterations = 0;
    let mut best = (T::nan(), T::infinity());
    let mut w = vec![T::zero(); n];
    for _ in 0..max_restarts.max(1) {
        let mut basis: Vec<Vec<T>> = vec![start.clone()];
        let mut alphas: Vec<T> = Vec::with_capacity(m);
        let mut betas: Vec<T> = Vec::with_capacity(m);
        let mut ritz: Option<Vec<T>> = None;
        for j in 0..m {
            op.apply(&basis[j], &mut w);
            iterations += 1;
            let a = dot(&w, &basis[j]);
            for (wi, qi) in w.iter_mut().zip(&basis[j]) {
                *wi -= a * *qi;
            }
            if j > 0 {
                let b = betas[j - 1];
                for (wi, qi) in w.iter_mut().zip(&basis[j - 1]) {
                    *wi -= b * *qi;
                }
            }
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(&w, q);
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= c * *qi;
                    }
                }
            }
            alphas.push(a);
            let b = norm(&w);
            let scale = alphas.iter().fold(T::zero(), |s, x| s.max(x.abs())) + T::one();
            let exhausted = b <= T::epsilon() * scale * T::lit(16.0) || j + 1 == m;
            if j % 4 == 3 || exhausted {
                let (_, s) = tridiagonal_top_pair(&alphas, &betas)?;
                let estimate = b * s[j].abs();
                if estimate <= tol || exhausted {
                    let mut y = vec![T::zero(); n];
                    for (q, &sk) in basis.iter().zip(&s) {
                        for (yi, qi) in y.iter_mut().zip(q) {
                            *yi += sk * *qi;
                        }
                    }
                    let ny = norm(&y);
                    for yi in y.iter_mut() {
                        *yi /= ny;
                    }
                    let result = EigenResult::from_vector(op, y, iterations);
                    if result.residual <= tol {
                        return Ok(result);
                    }
                    if result.residual < best.1 {
                        best = (result.value, result.residual);
                    }
                    ritz = Some(result.vector);
                    break;
                }
            }
            let next: Vec<T> = w.iter().map(|x| *x / b).collect();
            betas.push(b);
            basis.push(next);
        }
        if let Some(r) = ritz {
            start = r;
        }
    }
    Err(Error::EigenNonConvergence { rayleigh: best.0.as_f64(), residual: best.1.as_f64(), iterations })
}

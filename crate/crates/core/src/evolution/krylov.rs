use crate::error::{Error, Result};
use crate::spectral::{symmetric_eigen, LatticeOperator};

/// Krylov subspace dimension per step.
const KRYLOV_DIM: usize = 30;

/// `e^{tA} v` by Lanczos–Krylov steps with step-size control.
///
/// Each step builds an orthonormal basis `V_m` (full reorthogonalization) and
/// tridiagonal `T_m`, then takes `v ← β V_m e^{τT_m} e₁`. The local error is
/// estimated by `β τ h_{m+1,m} |(e^{τT_m} e₁)_m|`; a step is accepted when this
/// is at most `tol · ‖v_new‖`, otherwise `τ` is halved on the same basis.
pub fn expmv(op: &LatticeOperator<f64>, v0: &[f64], t: f64, tol: f64) -> Result<Vec<f64>> {
    let n = op.dim();
    let m = KRYLOV_DIM.min(n);
    let mut v = v0.to_vec();
    let mut time = 0.0;
    let mut tau = t;
    let mut w = vec![0.0; n];
    while time < t {
        let beta = norm(&v);
        if beta == 0.0 {
            break;
        }
        let mut basis: Vec<Vec<f64>> = vec![v.iter().map(|x| x / beta).collect()];
        let mut alphas = Vec::with_capacity(m);
        let mut betas = Vec::with_capacity(m);
        let mut h_next = 0.0;
        for j in 0..m {
            op.apply(&basis[j], &mut w);
            let a = dot(&w, &basis[j]);
            alphas.push(a);
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(&w, q);
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= c * qi;
                    }
                }
            }
            let b = norm(&w);
            h_next = b;
            if j + 1 == m || b <= 1e-14 * (a.abs() + 1.0) {
                break;
            }
            betas.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
        let k = alphas.len();
        let mut tmat = vec![0.0; k * k];
        for i in 0..k {
            tmat[i * k + i] = alphas[i];
            if i + 1 < k {
                tmat[i * k + i + 1] = betas[i];
                tmat[(i + 1) * k + i] = betas[i];
            }
        }
        let (theta, s) = symmetric_eigen(tmat, k)?;
        let invariant = k < m || h_next <= 1e-14;
        tau = tau.min(t - time);
        loop {
            let top = theta[k - 1];
            // e^{τT} e₁ = S diag(e^{τθ}) Sᵀ e₁, scaled by e^{-τ·θ_max} for range.
            let c: Vec<f64> = (0..k).map(|j| (tau * (theta[j] - top)).exp() * s[j]).collect();
            let y: Vec<f64> = (0..k).map(|i| (0..k).map(|j| s[i * k + j] * c[j]).sum::<f64>()).collect();
            let growth = (tau * top).exp();
            let mut next = vec![0.0; n];
            for (q, yi) in basis.iter().zip(&y) {
                for (ni, qi) in next.iter_mut().zip(q) {
                    *ni += yi * qi;
                }
            }
            let scale = beta * growth;
            for x in next.iter_mut() {
                *x *= scale;
            }
            let err = if invariant { 0.0 } else { beta * growth * tau * h_next * y[k - 1].abs() };
            if err <= tol * norm(&next) {
                v = next;
                time += tau;
                tau = (2.0 * tau).min(t - time);
                break;
            }
            tau *= 0.5;
            if tau < 1e-13 * t {
                let spread = theta[k - 1] - theta[0];
                return Err(Error::StepUnderflow { time, stiffness_ratio: spread * t });
            }
        }
    }
    Ok(v)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

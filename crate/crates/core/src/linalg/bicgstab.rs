//! Jacobi-preconditioned BiCGStab.

use super::sparse::{dot, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOutcome {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Solves `A x = b` starting from the contents of `x`. Stops when
/// `‖b - A x‖₂ ≤ tol · ‖b‖₂`.
pub fn bicgstab(a: &CsrMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> KrylovOutcome {
    let n = a.n();
    let inv_diag: Vec<f64> = a.diagonal().into_iter().map(|d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let precond = |v: &[f64], out: &mut [f64]| {
        for i in 0..n {
            out[i] = inv_diag[i] * v[i];
        }
    };

    let b_norm = dot(b, b).sqrt();
    let target = if b_norm > 0.0 { tol * b_norm } else { tol };
    let mut r = a.matvec(x);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut res = dot(&r, &r).sqrt();
    if res <= target {
        return KrylovOutcome { iterations: 0, residual: res / b_norm.max(f64::MIN_POSITIVE), converged: true };
    }
    let r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];

    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond(&p, &mut p_hat);
        a.matvec_into(&p_hat, &mut v);
        alpha = rho / dot(&r_hat, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        let s_norm = dot(&s, &s).sqrt();
        if s_norm <= target {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            return KrylovOutcome { iterations: it, residual: s_norm / b_norm.max(f64::MIN_POSITIVE), converged: true };
        }
        precond(&s, &mut s_hat);
        a.matvec_into(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        res = dot(&r, &r).sqrt();
        if res <= target {
            return KrylovOutcome { iterations: it, residual: res / b_norm.max(f64::MIN_POSITIVE), converged: true };
        }
        if omega == 0.0 {
            break;
        }
    }
    KrylovOutcome { iterations: max_iter, residual: res / b_norm.max(f64::MIN_POSITIVE), converged: false }
}

//! Matrix-free conjugate gradients.

use crate::parallel::{axpy, dot, norm, xpby};

/// A symmetric positive-definite operator applied without storing a matrix.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    /// `y = A x`
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// True relative residual `‖b − Ax‖ / ‖b‖` of the returned iterate.
    pub residual: f64,
    pub converged: bool,
}

/// Solves `A x = b` from a zero initial guess.
///
/// `inv_diag`, when given, is the inverse diagonal used as a Jacobi
/// preconditioner. Convergence is declared on the recursively updated
/// residual and then confirmed against the true residual; on a mismatch the
/// recursion restarts from the current iterate.
pub fn conjugate_gradient<A: LinearOperator + ?Sized>(
    op: &A,
    b: &[f64],
    tol: f64,
    maxit: usize,
    inv_diag: Option<&[f64]>,
) -> CgOutcome {
    let n = op.dim();
    assert_eq!(b.len(), n, "right-hand side length");
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return CgOutcome { x, iterations: 0, residual: 0.0, converged: true };
    }
    let target = tol * bnorm;

    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut iterations = 0;

    let precondition = |r: &[f64], z: &mut [f64]| match inv_diag {
        Some(m) => {
            for ((zi, ri), mi) in z.iter_mut().zip(r).zip(m) {
                *zi = ri * mi;
            }
        }
        None => z.copy_from_slice(r),
    };

    loop {
        precondition(&r, &mut z);
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        let mut rnorm = norm(&r);
        while rnorm > target && iterations < maxit {
            op.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            iterations += 1;
            rnorm = norm(&r);
            if rnorm <= target {
                break;
            }
            precondition(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            xpby(&z, beta, &mut p);
        }

        // true residual
        op.apply(&x, &mut ap);
        for ((ri, bi), ai) in r.iter_mut().zip(b).zip(&ap) {
            *ri = bi - ai;
        }
        let true_norm = norm(&r);
        if true_norm <= target || iterations >= maxit {
            return CgOutcome {
                x,
                iterations,
                residual: true_norm / bnorm,
                converged: true_norm <= target,
            };
        }
        if rnorm > target {
            // breakdown without convergence
            return CgOutcome { x, iterations, residual: true_norm / bnorm, converged: false };
        }
    }
}

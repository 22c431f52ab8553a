use nalgebra::DVector;

use crate::error::{Error, Result};

/// Solves `apply(x) = b` for a symmetric positive-definite map by conjugate
/// gradients, stopping at `‖apply(x) − b‖ <= tol·‖b‖`.
///
/// Nonpositive curvature `pᵀ apply(p) <= 0` aborts with
/// [`Error::IndefiniteOperator`]. When the recursive residual meets the
/// tolerance the true residual is recomputed and the iteration restarts from
/// the current iterate if it has drifted.
pub fn cg_solve<F>(apply: F, b: &DVector<f64>, tol: f64, max_iters: usize) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let b_norm = b.norm();
    let mut x = DVector::zeros(b.len());
    if b_norm == 0.0 {
        return Ok(x);
    }
    let target = tol * b_norm;
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rs = r.norm_squared();
    let mut trace = Vec::new();

    for _ in 0..max_iters {
        let ap = apply(&p);
        let curvature = p.dot(&ap);
        if curvature <= 0.0 || !curvature.is_finite() {
            return Err(Error::IndefiniteOperator {
                curvature,
                direction_norm: p.norm(),
            });
        }
        let alpha = rs / curvature;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rs_new = r.norm_squared();
        trace.push(rs_new.sqrt() / b_norm);

        if rs_new.sqrt() <= target {
            let true_r = b - apply(&x);
            if true_r.norm() <= target {
                return Ok(x);
            }
            r = true_r;
            rs = r.norm_squared();
            p = r.clone();
            continue;
        }
        let beta = rs_new / rs;
        p = &r + beta * p;
        rs = rs_new;
    }
    let relative_residual = (b - apply(&x)).norm() / b_norm;
    Err(Error::CgNoConvergence {
        iterations: max_iters,
        relative_residual,
        trace,
    })
}

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{rhs_flat, DynamicState, ModelParams};

/// Central-difference Jacobian of `rhs` at `x0`:
/// column `j` is `(f(x0 + h e_j) - f(x0 - h e_j)) / 2h`.
pub fn fd_jacobian<F>(mut rhs: F, x0: &[f64], h: f64) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if !(h > 0.0) {
        return Err(Error::InvalidParameter {
            name: "h",
            reason: format!("step must be > 0, got {h}"),
        });
    }
    let n = x0.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut x = x0.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        x[j] = x0[j] + h;
        rhs(&x, &mut fp);
        x[j] = x0[j] - h;
        rhs(&x, &mut fm);
        x[j] = x0[j];
        for i in 0..n {
            let d = (fp[i] - fm[i]) / (2.0 * h);
            if !d.is_finite() {
                return Err(Error::NonFinite("finite-difference rhs"));
            }
            jac[(i, j)] = d;
        }
    }
    Ok(jac)
}

/// Finite-difference Jacobian of a model's full vector field at `state`.
pub fn model_fd_jacobian(params: &ModelParams, state: &DynamicState, h: f64) -> Result<DMatrix<f64>> {
    state.check_shape(params)?;
    let n = state.n();
    fd_jacobian(|x, dx| rhs_flat(params, n, x, dx), &state.to_vector(), h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_map_is_recovered() {
        let a = DMatrix::from_row_slice(3, 3, &[0.3, -0.2, 0.1, 0.5, 0.9, -0.4, 0.0, 0.2, -0.7]);
        let jac = fd_jacobian(
            |x, dx| {
                for i in 0..3 {
                    dx[i] = (0..3).map(|j| a[(i, j)] * x[j]).sum();
                }
            },
            &[0.4, -1.0, 2.0],
            1e-3,
        )
        .unwrap();
        assert!((jac - a).norm() < 1e-10);
    }

    #[test]
    fn bad_step_and_nan() {
        assert!(fd_jacobian(|_, _| {}, &[0.0], 0.0).is_err());
        let r = fd_jacobian(|_, dx| dx[0] = f64::NAN, &[0.0], 1e-6);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }
}

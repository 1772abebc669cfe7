//! Exact zero-order-hold discretization via the matrix exponential of the
//! augmented block matrix [[A, B], [0, 0]] * dt.

use crate::{LqrError, Result};
use nalgebra::{DMatrix, DVector};

/// Matrix exponential by scaling-and-squaring with a diagonal Pade(6)
/// approximant. Accurate to machine precision once the scaled norm is <= 0.5.
pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let norm = a.amax() * n as f64; // cheap upper bound on the 1-norm
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil().max(0.0) as u32 } else { 0 };
    let scaled = a / 2f64.powi(s as i32);

    // Pade(6,6): c_{k+1} = c_k (p-k) / ((2p-k)(k+1))
    let p = 6usize;
    let mut c = vec![1.0f64; p + 1];
    for k in 0..p {
        c[k + 1] = c[k] * (p - k) as f64 / (((2 * p - k) * (k + 1)) as f64);
    }
    let mut term = DMatrix::identity(n, n);
    let mut num = DMatrix::identity(n, n) * c[0];
    let mut den = DMatrix::identity(n, n) * c[0];
    for (k, &ck) in c.iter().enumerate().skip(1) {
        term = &term * &scaled;
        num += &term * ck;
        if k % 2 == 0 {
            den += &term * ck;
        } else {
            den -= &term * ck;
        }
    }
    let mut e = den
        .lu()
        .solve(&num)
        .ok_or_else(|| LqrError::Numerical("singular Pade denominator".into()))?;
    for _ in 0..s {
        e = &e * &e;
    }
    Ok(e)
}

/// Zero-order-hold discretization of `dx = A x + B u` with step `dt`.
pub fn discretize(a: &DMatrix<f64>, b: &DVector<f64>, dt: f64) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if dt <= 0.0 {
        return Err(LqrError::Config("dt must be positive".into()));
    }
    let n = a.nrows();
    let mut aug = DMatrix::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * dt));
    aug.view_mut((0, n), (n, 1)).copy_from(&(b * dt));
    let e = expm(&aug)?;
    let ad = e.view((0, 0), (n, n)).into_owned();
    let bd = DVector::from_iterator(n, (0..n).map(|i| e[(i, n)]));
    Ok((ad, bd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartpole::{system_matrices, CartPoleParams, FrictionSchedule};
    use approx::assert_relative_eq;

    #[test]
    fn zero_dynamics_and_scalar_closed_form() {
        let a = DMatrix::zeros(2, 2);
        let b = DVector::from_vec(vec![1.5, -0.5]);
        let (ad, bd) = discretize(&a, &b, 0.1).unwrap();
        assert_relative_eq!(ad, DMatrix::identity(2, 2), epsilon = 1e-14);
        assert_relative_eq!(bd[0], 0.15, epsilon = 1e-14);
        assert_relative_eq!(bd[1], -0.05, epsilon = 1e-14);

        let a = DMatrix::from_element(1, 1, -2.0);
        let b = DVector::from_vec(vec![0.0]);
        let (ad, _) = discretize(&a, &b, 0.3).unwrap();
        assert_relative_eq!(ad[(0, 0)], (-0.6f64).exp(), epsilon = 1e-13);
    }

    #[test]
    fn cartpole_matches_taylor_series_oracle() {
        let p = CartPoleParams::default();
        let s = FrictionSchedule::default();
        let (a, b) = system_matrices(0, &p, &s);
        let dt = 0.02;
        let (ad, bd) = discretize(&a, &b, dt).unwrap();

        // independent high-order Taylor series of exp(A dt) and its integral
        let n = 4;
        let mut series_ad = DMatrix::identity(n, n);
        let mut series_int = DMatrix::identity(n, n) * dt; // integral of exp(A s) ds
        let mut term = DMatrix::identity(n, n);
        let mut fact = 1.0;
        for k in 1..=20 {
            term = &term * &a * dt;
            fact *= k as f64;
            series_ad += &term / fact;
            series_int += &term * (dt / (fact * (k + 1) as f64));
        }
        let series_bd = &series_int * &b;
        assert_relative_eq!(ad, series_ad, epsilon = 1e-9);
        assert_relative_eq!(bd, series_bd, epsilon = 1e-9);
    }

    #[test]
    fn expm_handles_large_norm_via_squaring() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 20.0, -20.0, 0.0]);
        let e = expm(&a).unwrap();
        // rotation matrix: exp of a skew-symmetric matrix
        assert_relative_eq!(e[(0, 0)], 20.0f64.cos(), epsilon = 1e-10);
        assert_relative_eq!(e[(0, 1)], 20.0f64.sin(), epsilon = 1e-10);
        assert_relative_eq!(e.determinant(), 1.0, epsilon = 1e-10);
    }
}

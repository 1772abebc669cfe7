//! Discrete algebraic Riccati equation solved by fixed-point iteration.

use crate::{LqrError, Result};
use nalgebra::{DMatrix, DVector};

const MAX_ITERS: usize = 200_000;
const RESIDUAL_TOL: f64 = 1e-12;

/// Solve `P = Q + A'PA - A'PB (R + B'PB)^{-1} B'PA` by iterating from
/// `P = Q`, and return `(P, K)` with the optimal state-feedback gain
/// `K = (R + B'PB)^{-1} B'PA` (control law `u = -K x`). The closed loop
/// `A - B K` is verified Schur stable.
pub fn solve_dare(
    ad: &DMatrix<f64>,
    bd: &DVector<f64>,
    q: &DMatrix<f64>,
    r: f64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if r <= 0.0 {
        return Err(LqrError::Config("R must be positive".into()));
    }
    let n = ad.nrows();
    let mut p = q.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITERS {
        let pb = &p * bd; // n-vector
        let denom = r + bd.dot(&pb);
        let apb = ad.transpose() * &pb; // A'PB
        let next =
            q + ad.transpose() * &p * ad - (&apb * apb.transpose()) / denom;
        // symmetrize: asymmetry otherwise accumulates and destabilizes the
        // iteration near the fixed point
        let next = (&next + next.transpose()) * 0.5;
        residual = (&next - &p).amax();
        p = next;
        if residual < RESIDUAL_TOL {
            break;
        }
    }
    if !(residual < RESIDUAL_TOL) {
        return Err(LqrError::Numerical(format!(
            "Riccati iteration stalled at residual {residual:.3e}"
        )));
    }
    let pb = &p * bd;
    let denom = r + bd.dot(&pb);
    let k = (ad.transpose() * &pb) / denom; // K' as a column vector
    let acl = ad - bd * k.transpose();
    if spectral_radius(&acl) >= 1.0 {
        return Err(LqrError::Numerical("closed loop not Schur stable".into()));
    }
    let _ = n;
    Ok((p, k))
}

/// Largest eigenvalue magnitude.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartpole::{system_matrices, CartPoleParams, FrictionSchedule};
    use crate::discretize::discretize;
    use approx::assert_relative_eq;

    #[test]
    fn scalar_golden_ratio() {
        // A=1, B=1, Q=1, R=1 -> P = (1+sqrt 5)/2
        let ad = DMatrix::from_element(1, 1, 1.0);
        let bd = DVector::from_vec(vec![1.0]);
        let q = DMatrix::identity(1, 1);
        let (p, k) = solve_dare(&ad, &bd, &q, 1.0).unwrap();
        let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
        assert_relative_eq!(p[(0, 0)], golden, epsilon = 1e-10);
        assert_relative_eq!(k[0], golden / (1.0 + golden), epsilon = 1e-10);
    }

    #[test]
    fn cartpole_residual_and_stability() {
        let pms = CartPoleParams::default();
        let s = FrictionSchedule::default();
        let q = DMatrix::identity(4, 4) * 10.0;
        for t in [0u32, 60, 150, 300] {
            let (a, b) = system_matrices(t, &pms, &s);
            let (ad, bd) = discretize(&a, &b, 0.02).unwrap();
            let (p, k) = solve_dare(&ad, &bd, &q, 1.0).unwrap();
            // residual of the fixed point
            let pb = &p * &bd;
            let denom = 1.0 + bd.dot(&pb);
            let apb = ad.transpose() * &pb;
            let rhs = &q + ad.transpose() * &p * &ad - (&apb * apb.transpose()) / denom;
            assert!((&rhs - &p).amax() < 1e-10, "residual too large at t={t}");
            let acl = &ad - &bd * k.transpose();
            assert!(spectral_radius(&acl) < 1.0);
        }
    }

    #[test]
    fn open_loop_cartpole_is_unstable() {
        let pms = CartPoleParams::default();
        let s = FrictionSchedule::default();
        let (a, b) = system_matrices(0, &pms, &s);
        let (ad, _) = discretize(&a, &b, 0.02).unwrap();
        assert!(spectral_radius(&ad) > 1.0, "upper equilibrium must be unstable");
    }
}

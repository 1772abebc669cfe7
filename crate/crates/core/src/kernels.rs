//! Spatial, temporal, and product kernels.

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::types::{ParamPoint, SpatialKernelParams, TemporalKernelParams};
use nalgebra::{DMatrix, DVector};

/// Squared-exponential kernel `sigma_k^2 exp(-1/2 sum_i (a_i-b_i)^2 / sigma_{l,i}^2)`.
pub fn se_kernel<T: Scalar>(
    a: &DVector<T>,
    b: &DVector<T>,
    p: &SpatialKernelParams<T>,
) -> Result<T> {
    if a.len() != b.len() || a.len() != p.dim() {
        return Err(CoreError::DimensionMismatch(format!(
            "se_kernel: |a|={}, |b|={}, params dim={}",
            a.len(),
            b.len(),
            p.dim()
        )));
    }
    let mut q = T::zero();
    for i in 0..a.len() {
        let r = a[i] - b[i];
        let l = p.lengthscales[i];
        q += r * r / (l * l);
    }
    Ok(p.output_variance * (-T::of(0.5) * q).exp())
}

/// Wiener-process temporal kernel `sigma_w^2 (min(t,t') - c0)`.
pub fn wiener_kernel<T: Scalar>(t: u32, t2: u32, sigma_w_sq: T, c0: T) -> T {
    sigma_w_sq * (T::of(t.min(t2) as f64) - c0)
}

/// Back-to-prior temporal kernel `(1-eps)^{|t-t'|/2}`.
pub fn b2p_kernel<T: Scalar>(t: u32, t2: u32, epsilon: T) -> T {
    let lag = T::of(t.abs_diff(t2) as f64);
    (T::one() - epsilon).powf(lag * T::of(0.5))
}

pub fn temporal_kernel<T: Scalar>(t: u32, t2: u32, tp: &TemporalKernelParams<T>) -> T {
    match *tp {
        TemporalKernelParams::Ui { sigma_w_sq, c0 } => wiener_kernel(t, t2, sigma_w_sq, c0),
        TemporalKernelParams::B2p { epsilon } => b2p_kernel(t, t2, epsilon),
        TemporalKernelParams::TimeInvariant => T::one(),
    }
}

/// Separable product kernel `k_S(theta, theta') k_T(t, t')`.
pub fn spatio_temporal_kernel<T: Scalar>(
    a: &ParamPoint<T>,
    b: &ParamPoint<T>,
    sp: &SpatialKernelParams<T>,
    tp: &TemporalKernelParams<T>,
) -> Result<T> {
    Ok(se_kernel(&a.theta, &b.theta, sp)? * temporal_kernel(a.t, b.t, tp))
}

/// Symmetric Gram matrix over `points`.
pub fn gram_matrix<T: Scalar>(
    points: &[ParamPoint<T>],
    sp: &SpatialKernelParams<T>,
    tp: &TemporalKernelParams<T>,
) -> Result<DMatrix<T>> {
    let n = points.len();
    if n == 0 {
        return Err(CoreError::InvalidArgument("gram_matrix: empty point list".into()));
    }
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = spatio_temporal_kernel(&points[i], &points[j], sp, tp)?;
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Cross Gram matrix, rows over `a`, columns over `b`.
pub fn cross_gram<T: Scalar>(
    a: &[ParamPoint<T>],
    b: &[ParamPoint<T>],
    sp: &SpatialKernelParams<T>,
    tp: &TemporalKernelParams<T>,
) -> Result<DMatrix<T>> {
    let mut k = DMatrix::zeros(a.len(), b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            k[(i, j)] = spatio_temporal_kernel(&a[i], &b[j], sp, tp)?;
        }
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sp1(l: f64, var: f64) -> SpatialKernelParams<f64> {
        SpatialKernelParams::isotropic(1, l, var).unwrap()
    }

    #[test]
    fn se_kernel_reference_values() {
        // a = b returns the output variance
        let p = sp1(0.7, 1.5);
        let a = DVector::from_vec(vec![0.3]);
        assert_relative_eq!(se_kernel(&a, &a, &p).unwrap(), 1.5, epsilon = 1e-15);

        // unit lengthscale, unit variance, |a-b| = 1
        let p = sp1(1.0, 1.0);
        let b = DVector::from_vec(vec![1.0]);
        let a = DVector::from_vec(vec![0.0]);
        assert_relative_eq!(se_kernel(&a, &b, &p).unwrap(), (-0.5f64).exp(), epsilon = 1e-12);

        // identity in 2D
        let p = SpatialKernelParams::isotropic(2, 1.0, 1.0).unwrap();
        let a = DVector::from_vec(vec![1.0, 2.0]);
        assert_relative_eq!(se_kernel(&a, &a, &p).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn se_kernel_dimension_mismatch() {
        let p = sp1(1.0, 1.0);
        let a = DVector::from_vec(vec![0.0, 1.0]);
        let b = DVector::from_vec(vec![0.0, 1.0]);
        assert!(se_kernel(&a, &b, &p).is_err());
    }

    #[test]
    fn wiener_kernel_values() {
        // anchoring: min(0,t') - c0 scaled by sigma_w^2 is exactly 1
        for &s in &[1e-4, 0.03, 1.0] {
            let tp = TemporalKernelParams::ui(s).unwrap();
            if let TemporalKernelParams::Ui { sigma_w_sq, c0 } = tp {
                assert_eq!(wiener_kernel(0u32, 7, sigma_w_sq, c0), 1.0);
            }
        }
        let tp = TemporalKernelParams::ui(0.03f64).unwrap();
        if let TemporalKernelParams::Ui { sigma_w_sq, c0 } = tp {
            assert_relative_eq!(wiener_kernel(2, 3, sigma_w_sq, c0), 1.06, epsilon = 1e-12);
            assert_relative_eq!(wiener_kernel(5, 5, sigma_w_sq, c0), 1.15, epsilon = 1e-12);
        }
    }

    #[test]
    fn b2p_kernel_values() {
        assert_eq!(b2p_kernel(4u32, 4, 0.03f64), 1.0);
        assert_relative_eq!(b2p_kernel(0, 2, 0.03f64), 0.97, epsilon = 1e-12);
        assert_relative_eq!(b2p_kernel(0, 4, 0.03f64), 0.9409, epsilon = 1e-12);
    }

    #[test]
    fn product_kernel_and_time_invariant_limit() {
        let sp = sp1(1.0, 1.0);
        let a = ParamPoint::new(DVector::from_vec(vec![0.2]), 0);
        let tp = TemporalKernelParams::ui(0.03f64).unwrap();
        assert_relative_eq!(
            spatio_temporal_kernel(&a, &a, &sp, &tp).unwrap(),
            1.0,
            epsilon = 1e-12
        );

        // sigma_w^2 -> 0 limit: temporal factor tends to 1
        let b = ParamPoint::new(DVector::from_vec(vec![0.9]), 13);
        let tiny = TemporalKernelParams::ui(1e-12f64).unwrap();
        let spatial = se_kernel(&a.theta, &b.theta, &sp).unwrap();
        assert_relative_eq!(
            spatio_temporal_kernel(&a, &b, &sp, &tiny).unwrap(),
            spatial,
            max_relative = 1e-9
        );
    }

    #[test]
    fn gram_matrix_matches_entrywise_recomputation() {
        let sp = SpatialKernelParams::isotropic(2, 0.8, 1.3).unwrap();
        let tp = TemporalKernelParams::ui(0.03f64).unwrap();
        let pts = vec![
            ParamPoint::new(DVector::from_vec(vec![0.1, 0.9]), 0),
            ParamPoint::new(DVector::from_vec(vec![0.4, 0.2]), 1),
            ParamPoint::new(DVector::from_vec(vec![0.8, 0.5]), 3),
        ];
        let k = gram_matrix(&pts, &sp, &tp).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v = spatio_temporal_kernel(&pts[i], &pts[j], &sp, &tp).unwrap();
                assert_relative_eq!(k[(i, j)], v, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn gram_matrix_degenerate_duplicates() {
        let sp = sp1(1.0, 1.0);
        let tp = TemporalKernelParams::TimeInvariant;
        let p = ParamPoint::new(DVector::from_vec(vec![0.5]), 0);
        let k = gram_matrix(&[p.clone(), p], &sp, &tp).unwrap();
        assert_eq!(k[(0, 0)], k[(0, 1)]);
        assert_eq!(k[(1, 0)], k[(1, 1)]);

        let single = gram_matrix(
            &[ParamPoint::new(DVector::from_vec(vec![0.0]), 0)],
            &sp,
            &TemporalKernelParams::ui(0.03).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(single[(0, 0)], 1.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn kernels_are_symmetric(
            av in proptest::collection::vec(-5.0f64..5.0, 3),
            bv in proptest::collection::vec(-5.0f64..5.0, 3),
            ta in 0u32..200, tb in 0u32..200,
        ) {
            let sp = SpatialKernelParams::isotropic(3, 0.9, 1.7).unwrap();
            for tp in [
                TemporalKernelParams::ui(0.03f64).unwrap(),
                TemporalKernelParams::b2p(0.03f64).unwrap(),
                TemporalKernelParams::TimeInvariant,
            ] {
                let a = ParamPoint::new(DVector::from_vec(av.clone()), ta);
                let b = ParamPoint::new(DVector::from_vec(bv.clone()), tb);
                let kab = spatio_temporal_kernel(&a, &b, &sp, &tp).unwrap();
                let kba = spatio_temporal_kernel(&b, &a, &sp, &tp).unwrap();
                prop_assert_eq!(kab, kba);
            }
        }

        #[test]
        fn gram_is_psd_up_to_jitter(
            coords in proptest::collection::vec(-2.0f64..2.0, 12),
            times in proptest::collection::vec(0u32..50, 6),
        ) {
            let sp = SpatialKernelParams::isotropic(2, 0.7, 1.0).unwrap();
            let tp = TemporalKernelParams::ui(0.03f64).unwrap();
            let pts: Vec<_> = (0..6)
                .map(|i| ParamPoint::new(
                    DVector::from_vec(vec![coords[2 * i], coords[2 * i + 1]]), times[i]))
                .collect();
            let mut sorted = pts;
            sorted.sort_by_key(|p| p.t);
            let k = gram_matrix(&sorted, &sp, &tp).unwrap();
            let eig = k.symmetric_eigenvalues();
            let max = eig.iter().cloned().fold(f64::MIN, f64::max);
            let min = eig.iter().cloned().fold(f64::MAX, f64::min);
            prop_assert!(min > -1e-8 * max.abs().max(1.0));
        }
    }
}

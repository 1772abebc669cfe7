//! Kernel derivatives for second-derivative (convexity) constraints.
//!
//! The temporal kernel does not depend on the parameters, so every derivative
//! Gram entry factors as (spatial derivative) x (temporal kernel value).
//! Closed forms exist for the squared-exponential spatial kernel.

use crate::error::{CoreError, Result};
use crate::kernels::{se_kernel, temporal_kernel};
use crate::scalar::Scalar;
use crate::types::{ParamPoint, SpatialKernelParams, TemporalKernelParams};
use nalgebra::{DMatrix, DVector};

/// Second spatial derivative of the SE kernel in dimension `i` of either
/// argument (the SE kernel is even in `r`, so both sides coincide):
/// `(r_i^2/lam_i^2 - 1/lam_i) k_S` with `lam_i = sigma_{l,i}^2`.
fn se_d2<T: Scalar>(a: &DVector<T>, b: &DVector<T>, i: usize, sp: &SpatialKernelParams<T>) -> Result<T> {
    let k = se_kernel(a, b, sp)?;
    let l = sp.lengthscales[i];
    let lam = l * l;
    let r = a[i] - b[i];
    Ok((r * r / (lam * lam) - T::one() / lam) * k)
}

/// Mixed fourth derivative `d^4 k_S / d a_i^2 d b_j^2`.
fn se_d2d2<T: Scalar>(
    a: &DVector<T>,
    b: &DVector<T>,
    i: usize,
    j: usize,
    sp: &SpatialKernelParams<T>,
) -> Result<T> {
    let k = se_kernel(a, b, sp)?;
    if i != j {
        let fi = {
            let lam = sp.lengthscales[i] * sp.lengthscales[i];
            let r = a[i] - b[i];
            r * r / (lam * lam) - T::one() / lam
        };
        let fj = {
            let lam = sp.lengthscales[j] * sp.lengthscales[j];
            let r = a[j] - b[j];
            r * r / (lam * lam) - T::one() / lam
        };
        Ok(fi * fj * k)
    } else {
        let lam = sp.lengthscales[i] * sp.lengthscales[i];
        let r = a[i] - b[i];
        let r2 = r * r;
        Ok((r2 * r2 / (lam * lam * lam * lam)
            - T::of(6.0) * r2 / (lam * lam * lam)
            + T::of(3.0) / (lam * lam))
            * k)
    }
}

/// Derivative entries of the product kernel.
///
/// With `j = None` this is `d^2 k / d a_i^2`; with `j = Some(j)` it is
/// `d^4 k / d a_i^2 d b_j^2`. Both are the spatial derivative times the
/// temporal kernel value.
pub fn kernel_second_derivatives<T: Scalar>(
    a: &ParamPoint<T>,
    b: &ParamPoint<T>,
    i: usize,
    j: Option<usize>,
    sp: &SpatialKernelParams<T>,
    tp: &TemporalKernelParams<T>,
) -> Result<T> {
    if i >= sp.dim() || j.is_some_and(|j| j >= sp.dim()) {
        return Err(CoreError::InvalidArgument(format!(
            "derivative dimension out of range for D={}",
            sp.dim()
        )));
    }
    let kt = temporal_kernel(a.t, b.t, tp);
    let spatial = match j {
        None => se_d2(&a.theta, &b.theta, i, sp)?,
        Some(j) => se_d2d2(&a.theta, &b.theta, i, j, sp)?,
    };
    Ok(spatial * kt)
}

/// One convexity constraint: non-negative second derivative in dimension
/// `dim` at `location`, applied at time step `t`.
#[derive(Debug, Clone)]
pub struct ConstraintSite<T: Scalar> {
    pub location: DVector<T>,
    pub dim: usize,
    pub t: u32,
}

/// Cross Gram between function-value points (rows) and constraint sites
/// (columns): entries `d^2 k / d v_i^2` with the derivative on the
/// constraint side.
pub fn data_constraint_gram<T: Scalar>(
    points: &[ParamPoint<T>],
    sites: &[ConstraintSite<T>],
    sp: &SpatialKernelParams<T>,
    tp: &TemporalKernelParams<T>,
) -> Result<DMatrix<T>> {
    let mut k = DMatrix::zeros(points.len(), sites.len());
    for (r, p) in points.iter().enumerate() {
        for (c, s) in sites.iter().enumerate() {
            let site_pt = ParamPoint::new(s.location.clone(), s.t);
            k[(r, c)] = kernel_second_derivatives(&site_pt, p, s.dim, None, sp, tp)?;
        }
    }
    Ok(k)
}

/// Constraint-constraint Gram: mixed fourth derivatives.
pub fn constraint_gram<T: Scalar>(
    sites: &[ConstraintSite<T>],
    sp: &SpatialKernelParams<T>,
    tp: &TemporalKernelParams<T>,
) -> Result<DMatrix<T>> {
    let m = sites.len();
    let mut k = DMatrix::zeros(m, m);
    for p in 0..m {
        for q in p..m {
            let a = ParamPoint::new(sites[p].location.clone(), sites[p].t);
            let b = ParamPoint::new(sites[q].location.clone(), sites[q].t);
            let v = kernel_second_derivatives(&a, &b, sites[p].dim, Some(sites[q].dim), sp, tp)?;
            k[(p, q)] = v;
            k[(q, p)] = v;
        }
    }
    Ok(k)
}
